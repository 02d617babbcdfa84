from app.lib.artifacts.repository import RunDirectory, profile_file_name

__all__ = ["RunDirectory", "profile_file_name"]
