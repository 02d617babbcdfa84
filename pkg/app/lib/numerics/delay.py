"""History of the firing rate for delayed lookups."""

from __future__ import annotations

import bisect
from typing import Protocol


class RateHistory(Protocol):
    def lookup(self, t: float) -> float: ...

    def append(self, t: float, rate: float) -> None: ...


class DelayBuffer:
    """Samples (t, N) covering [t_now - delay, t_now] read with linear interpolation.

    Before t = 0 the history is the constant `initial_rate`. Samples older
    than the delay window are dropped, keeping one sample left of the window.
    """

    def __init__(self, *, delay: float, initial_rate: float) -> None:
        if delay < 0:
            raise ValueError("delay must be non-negative")
        self.delay = delay
        self.initial_rate = initial_rate
        self._times: list[float] = []
        self._rates: list[float] = []
        self._start = 0

    def __len__(self) -> int:
        return len(self._times) - self._start

    def append(self, t: float, rate: float) -> None:
        if len(self) and t <= self._times[-1]:
            raise ValueError(f"sample time {t} is not after {self._times[-1]}")
        self._times.append(t)
        self._rates.append(rate)
        horizon = t - self.delay
        while len(self) > 2 and self._times[self._start + 1] <= horizon:
            self._start += 1
        if self._start > 4096 and self._start * 2 > len(self._times):
            del self._times[: self._start]
            del self._rates[: self._start]
            self._start = 0

    def lookup(self, t: float) -> float:
        if t <= 0.0 or not len(self):
            return self.initial_rate
        if t >= self._times[-1]:
            return self._rates[-1]
        if t < self._times[self._start]:
            raise ValueError(f"time {t} already left the delay window")
        right = bisect.bisect_right(self._times, t, lo=self._start)
        t0, t1 = self._times[right - 1], self._times[right]
        n0, n1 = self._rates[right - 1], self._rates[right]
        return n0 + (t - t0) / (t1 - t0) * (n1 - n0)


class FrozenRate:
    """Constant history used by the linear problem."""

    def __init__(self, rate: float) -> None:
        self.rate = rate

    def lookup(self, t: float) -> float:
        return self.rate

    def append(self, t: float, rate: float) -> None:
        return None
