"""Integral I(N), its derivatives, stationary rates and pseudo-equilibria.

All formulas use the scaled variable x = (v - bN) / sqrt(a). For a = 1 they
reduce to the usual Laplace form

    I(N) = int_0^inf exp(-s^2/2 - s b N) (exp(s V_F) - exp(s V_R)) / s ds.

The Laplace integrand is evaluated with its peak factored out, so the
returned logarithm stays finite for strongly inhibitory b.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Callable

import numpy as np
from scipy import integrate, optimize, special

from app.domain.errors import (
    BracketNotFoundError,
    DomainValidationError,
    ProfileTruncationError,
    QuadratureError,
    ScanExhaustedError,
)
from app.domain.models import DensityProfile, FloatArray, Grid, ModelParams, StationaryRoot, StationarySet

logger = logging.getLogger("runtime")

QUAD_REL_TOL = 1e-10
QUAD_SUBDIVISIONS = 200
# Accepted when QUADPACK flags roundoff but the error bound is still this small.
QUAD_ACCEPT_REL_ERR = 1e-8
ROOT_XTOL = 1e-12
N_SCAN_MAX = 50.0
SCAN_POINTS = 240
B_STAR_TOL = 1e-8
B_STAR_FLOOR = -200.0
PROFILE_TRUNCATION_TOL = 1e-6

_SERIES_CUTOFF = 1e-6
# Integrand is cut where it fell by exp(-_TAIL_LOG) below its peak.
_TAIL_LOG = 40.0
_LOG_OVERFLOW = 709.0


def _scaled_bounds(params: ModelParams, rate: float) -> tuple[float, float, float]:
    c = 1.0 / math.sqrt(params.a)
    alpha = c * (params.v_fire - params.b * rate)
    gap = c * (params.v_fire - params.v_reset)
    return c, alpha, gap


def _laplace_integrand(s: float, alpha: float, gap: float, shift: float, power: int) -> float:
    gauss = math.exp(-0.5 * s * s + s * alpha - shift)
    if power == 0:
        if s < _SERIES_CUTOFF:
            window = gap - 0.5 * s * gap * gap
        else:
            window = -math.expm1(-s * gap) / s
    else:
        window = -math.expm1(-s * gap) * s ** (power - 1)
    return gauss * window


def _laplace_moment(alpha: float, gap: float, power: int) -> tuple[float, float]:
    """Return (shift, J) with int_0^inf ... = exp(shift) * J."""
    peak = max(alpha, 0.0)
    shift = 0.5 * peak * peak
    if alpha > 0:
        upper = alpha + math.sqrt(2.0 * _TAIL_LOG) + power
    else:
        upper = alpha + math.sqrt(alpha * alpha + 2.0 * _TAIL_LOG) + power
    points = [peak] if 0.0 < peak < upper else None
    result = integrate.quad(
        _laplace_integrand,
        0.0,
        upper,
        args=(alpha, gap, shift, power),
        epsabs=0.0,
        epsrel=QUAD_REL_TOL,
        limit=QUAD_SUBDIVISIONS,
        points=points,
        full_output=1,
    )
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3 and abserr > QUAD_ACCEPT_REL_ERR * abs(value):
        raise QuadratureError(
            f"quadrature did not converge: {result[3]}",
            partial=value,
            abserr=abserr,
        )
    return shift, value


def log_I(params: ModelParams, rate: float) -> float:
    if rate < 0:
        raise DomainValidationError("firing rate must be non-negative")
    _, alpha, gap = _scaled_bounds(params, rate)
    shift, value = _laplace_moment(alpha, gap, 0)
    return shift + math.log(value)


def eval_I(params: ModelParams, rate: float) -> float:
    log_value = log_I(params, rate)
    if log_value > _LOG_OVERFLOW:
        return math.inf
    return math.exp(log_value)


def eval_I_deriv(params: ModelParams, rate: float, k: int) -> float:
    if k < 1:
        raise DomainValidationError("derivative order must be at least 1")
    if rate < 0:
        raise DomainValidationError("firing rate must be non-negative")
    if params.b == 0:
        return 0.0
    c, alpha, gap = _scaled_bounds(params, rate)
    shift, value = _laplace_moment(alpha, gap, k)
    factor = -params.b * c
    sign = 1.0 if factor > 0 or k % 2 == 0 else -1.0
    return sign * math.exp(k * math.log(abs(factor)) + shift + math.log(value))


def eval_dI_db(params: ModelParams, rate: float) -> float:
    """Partial derivative of I with respect to b at fixed N; never positive."""
    if rate == 0:
        return 0.0
    c, alpha, gap = _scaled_bounds(params, rate)
    shift, value = _laplace_moment(alpha, gap, 1)
    return -rate * c * math.exp(shift + math.log(value))


def eval_f(params: ModelParams, rate: float) -> float:
    return math.exp(-log_I(params, rate))


def eval_F(params: ModelParams, rate: float) -> float:
    return eval_f(params, eval_f(params, rate))


def eval_f_slope(params: ModelParams, rate: float) -> float:
    """f'(N) = -I'(N) / I(N)^2."""
    if params.b == 0:
        return 0.0
    c, alpha, gap = _scaled_bounds(params, rate)
    shift, base = _laplace_moment(alpha, gap, 0)
    _, first = _laplace_moment(alpha, gap, 1)
    magnitude = math.exp(math.log(abs(params.b) * c) + math.log(first) - shift - 2.0 * math.log(base))
    return math.copysign(magnitude, params.b)


def eval_I_double(params: ModelParams, rate: float) -> float:
    """I(N) through the double-integral form, for cross-checks.

    The region left of the reset potential integrates in closed form; the
    remaining outer integral over (x_R, x_F) is adaptive.
    """
    c, x_fire, _ = _scaled_bounds(params, rate)
    x_reset = c * (params.v_reset - params.b * rate)
    log_inner_reset = float(_log_gauss_window(np.array([x_reset]), x_fire)[0])
    left = math.exp(0.5 * math.log(2.0 * math.pi) + float(special.log_ndtr(x_reset)) + log_inner_reset)

    def outer(x: float) -> float:
        log_inner = float(_log_gauss_window(np.array([x]), x_fire)[0])
        return math.exp(-0.5 * x * x + log_inner)

    result = integrate.quad(
        outer,
        x_reset,
        x_fire,
        epsabs=0.0,
        epsrel=QUAD_REL_TOL,
        limit=QUAD_SUBDIVISIONS,
        full_output=1,
    )
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3 and abserr > QUAD_ACCEPT_REL_ERR * abs(value):
        raise QuadratureError(f"quadrature did not converge: {result[3]}", partial=value, abserr=abserr)
    return left + value


def _bisect(func: Callable[[float], float], lo: float, hi: float) -> float:
    return float(optimize.bisect(func, lo, hi, xtol=ROOT_XTOL, maxiter=400))


def solve_stationary(params: ModelParams, *, scan_max: float = N_SCAN_MAX) -> StationarySet:
    def residual(rate: float) -> float:
        return rate - eval_f(params, rate)

    rates: list[float] = []
    if params.b == 0:
        rates.append(eval_f(params, 0.0))
    elif params.b < 0:
        # f decreases from f(0), so the unique root lies in [0, f(0)].
        upper = eval_f(params, 0.0)
        rates.append(_bisect(residual, 0.0, upper))
    else:
        scan = np.concatenate(([0.0], np.geomspace(1e-4, scan_max, SCAN_POINTS)))
        values = [residual(float(rate)) for rate in scan]
        for lo, hi, h_lo, h_hi in zip(scan, scan[1:], values, values[1:]):
            if h_lo == 0.0:
                rates.append(float(lo))
            elif h_lo * h_hi < 0:
                rates.append(_bisect(residual, float(lo), float(hi)))
        if not rates:
            # f increasing and f(cap) > cap: no root beyond the cap only if f keeps outgrowing N.
            if eval_f_slope(params, scan_max) < 1.0:
                raise ScanExhaustedError(
                    f"no stationary rate below {scan_max} and f grows slower than N at the cap"
                )

    roots = tuple(StationaryRoot(rate=rate, slope=eval_f_slope(params, rate)) for rate in rates)
    logger.debug(
        "stationary rates located",
        extra={"b": params.b, "rates": [root.rate for root in roots]},
    )
    return StationarySet(params=params, roots=roots)


def dNstar_db(params: ModelParams) -> float:
    """Derivative of the inhibitory stationary rate in b."""
    if params.b > 0:
        raise DomainValidationError("dNstar_db is defined for b <= 0")
    rate = solve_stationary(params).roots[0].rate
    return -rate * eval_dI_db(params, rate) / (eval_I(params, rate) + rate * eval_I_deriv(params, rate, 1))


def eval_g(params: ModelParams, b: float) -> float:
    """Slope of f at the unique stationary rate for inhibitory b."""
    if b > 0:
        raise DomainValidationError("g is defined for b <= 0")
    if b == 0:
        return 0.0
    stationary = solve_stationary(params.with_b(b))
    return stationary.roots[0].slope


def find_b_star(params: ModelParams) -> float:
    """Connectivity where the inhibitory stationary slope crosses -1."""

    def shifted(b: float) -> float:
        return eval_g(params, b) + 1.0

    hi, lo = 0.0, -1.0
    while shifted(lo) > 0:
        hi, lo = lo, 2.0 * lo
        if lo < B_STAR_FLOOR:
            raise BracketNotFoundError(f"g(b) stays above -1 on [{B_STAR_FLOOR}, 0]")
    b_star = float(optimize.bisect(shifted, lo, hi, xtol=1e-11, maxiter=400))
    residual = abs(shifted(b_star))
    if residual > B_STAR_TOL:
        logger.warning("bifurcation residual above tolerance", extra={"b": b_star, "residual": residual})
    logger.info("bifurcation located", extra={"b": b_star})
    return b_star


def _log_dawson_primitive(x: FloatArray) -> FloatArray:
    """log |int_0^x exp(y^2/2) dy| via the Dawson function."""
    with np.errstate(divide="ignore"):
        return 0.5 * math.log(2.0) + 0.5 * x * x + np.log(np.abs(special.dawsn(x / math.sqrt(2.0))))


def _log_gauss_window(lower: FloatArray, upper: float) -> FloatArray:
    """log int_lower^upper exp(y^2/2) dy for lower <= upper; -inf where they meet."""
    lower = np.asarray(lower, dtype=np.float64)
    log_hi = float(_log_dawson_primitive(np.array([upper]))[0])
    log_lo = _log_dawson_primitive(lower)
    out = np.empty_like(lower)
    with np.errstate(divide="ignore", invalid="ignore"):
        straddle = (lower <= 0.0) & (upper >= 0.0)
        out[straddle] = np.logaddexp(log_hi, log_lo[straddle])
        right = lower > 0.0
        out[right] = log_hi + np.log1p(-np.exp(log_lo[right] - log_hi))
        left = upper < 0.0
        out[left] = log_lo[left] + np.log1p(-np.exp(log_hi - log_lo[left]))
    out[lower >= upper] = -np.inf
    return out


def tail_mass_left(params: ModelParams, rate: float, v_min: float) -> float:
    """Pseudo-equilibrium mass below v_min (v_min <= v_reset)."""
    if v_min > params.v_reset:
        raise DomainValidationError("v_min must not exceed v_reset")
    c, x_fire, _ = _scaled_bounds(params, rate)
    x_reset = c * (params.v_reset - params.b * rate)
    x_min = c * (v_min - params.b * rate)
    log_window = float(_log_gauss_window(np.array([x_reset]), x_fire)[0])
    log_mass = -log_I(params, rate) + log_window + 0.5 * math.log(2.0 * math.pi) + float(special.log_ndtr(x_min))
    return math.exp(log_mass)


def default_v_min(params: ModelParams, rate: float, *, tol: float = 1e-12) -> float:
    """Mesh start with less than `tol` pseudo-equilibrium mass to its left."""
    v_min = -6.0 if params.b >= -5 else -10.0
    while tail_mass_left(params, rate, v_min) >= tol:
        v_min -= 2.0
    return v_min


def pseudo_equilibrium_log_values(params: ModelParams, rate: float, nodes: FloatArray) -> FloatArray:
    c, x_fire, _ = _scaled_bounds(params, rate)
    x_reset = c * (params.v_reset - params.b * rate)
    x = c * (nodes - params.b * rate)
    log_window = _log_gauss_window(np.maximum(x, x_reset), x_fire)
    return -log_I(params, rate) - 0.5 * math.log(params.a) - 0.5 * x * x + log_window


def pseudo_equilibrium_profile(params: ModelParams, rate: float, grid: Grid) -> DensityProfile:
    if rate < 0:
        raise DomainValidationError("firing rate must be non-negative")
    deficit = tail_mass_left(params, rate, grid.v_min)
    if deficit > PROFILE_TRUNCATION_TOL:
        raise ProfileTruncationError(
            f"pseudo-equilibrium for N={rate} leaves {deficit:.3e} of its mass below v_min={grid.v_min}",
            deficit=deficit,
        )
    values = np.exp(pseudo_equilibrium_log_values(params, rate, grid.nodes))
    values[0] = 0.0
    values[-1] = 0.0
    values /= grid.trapezoid(values)
    return DensityProfile(grid=grid, values=values)
