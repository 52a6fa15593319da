"""One-dimensional Itô diffusions: coefficients, scale function, exit primitives.

A diffusion dX = mu(X) dt + sigma(X) dW on an interval is described by a
:class:`DiffusionSpec`.  The scale function turns exit probabilities of an
interval (a, b) into ratios of scale increments; expected exit times come from
the same finite-difference kernel as the boundary-value solver.

Coefficients are caller-supplied callables over the declared interior; the
usual Lipschitz/regularity assumptions are a caller contract and are not
verified (they are not checkable for black-box functions).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .errors import (
    CoefficientDomainError,
    DegenerateIntervalError,
    DomainError,
    ToleranceError,
)

__all__ = [
    "DiffusionSpec",
    "Interval",
    "scale_function",
    "hit_probability",
    "expected_exit_time",
    "make_bm",
    "make_drifted_bm",
    "make_gbm",
    "make_ou",
    "PRESET_DIFFUSIONS",
]

_VALIDATION_GRID_SIZE = 257


@dataclass(frozen=True)
class Interval:
    """Open interval (a, b) used as an exit set."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise DomainError("interval endpoints must be finite")
        if not self.a < self.b:
            raise DomainError(f"need a < b, got ({self.a}, {self.b})")

    @property
    def width(self) -> float:
        return self.b - self.a

    def contains(self, x: float, closed: bool = True) -> bool:
        return (self.a <= x <= self.b) if closed else (self.a < x < self.b)


@dataclass(frozen=True)
class DiffusionSpec:
    """Coefficients and state interval of a one-dimensional diffusion.

    Parameters
    ----------
    mu, sigma
        Drift and volatility as vectorized callables of the state.  sigma
        must be strictly positive on the interior of the state interval.
    lo, hi
        State interval endpoints (may be +-inf).
    lo_open, hi_open
        Openness flags of the state interval at each endpoint.
    mu_poly, sigma_poly
        Optional ascending polynomial coefficients that reproduce mu/sigma
        exactly; their presence makes the compiled simulation kernel
        eligible.
    """

    mu: Callable
    sigma: Callable
    lo: float = -math.inf
    hi: float = math.inf
    lo_open: bool = True
    hi_open: bool = True
    mu_poly: Optional[tuple] = None
    sigma_poly: Optional[tuple] = None
    name: str = "custom"

    def __post_init__(self):
        if not self.lo < self.hi:
            raise DomainError("state interval is empty")
        if self.mu_poly is not None:
            object.__setattr__(self, "mu_poly", tuple(float(c) for c in self.mu_poly))
        if self.sigma_poly is not None:
            object.__setattr__(
                self, "sigma_poly", tuple(float(c) for c in self.sigma_poly)
            )
        if np.isfinite(self.lo) and np.isfinite(self.hi):
            self.validate_on(self.lo, self.hi)

    @property
    def is_poly(self) -> bool:
        return self.mu_poly is not None and self.sigma_poly is not None

    def validate_on(self, a: float, b: float) -> None:
        """Check sigma > 0 and finite coefficients on a dense grid of (a, b)."""
        if not (self.lo <= a < b <= self.hi):
            raise DomainError(
                f"[{a}, {b}] not inside state interval [{self.lo}, {self.hi}]"
            )
        if (a == self.lo and self.lo_open) or (b == self.hi and self.hi_open):
            raise DomainError(
                "interval endpoint coincides with an open state boundary"
            )
        grid = np.linspace(a, b, _VALIDATION_GRID_SIZE)
        if a == self.lo and self.lo_open:
            grid = grid[1:]
        if b == self.hi and self.hi_open:
            grid = grid[:-1]
        mu_v = np.asarray(self.mu(grid), dtype=np.float64)
        sig_v = np.asarray(self.sigma(grid), dtype=np.float64)
        if not np.all(np.isfinite(mu_v)):
            raise CoefficientDomainError("drift is non-finite on the interval")
        if not np.all(np.isfinite(sig_v)):
            raise CoefficientDomainError("volatility is non-finite on the interval")
        if not np.all(sig_v > 0):
            raise CoefficientDomainError("volatility must be strictly positive")


def _check_interior(spec: DiffusionSpec, x: float, what: str) -> None:
    lo_ok = x > spec.lo or (x == spec.lo and not spec.lo_open)
    hi_ok = x < spec.hi or (x == spec.hi and not spec.hi_open)
    if not (lo_ok and hi_ok):
        raise DomainError(f"{what}={x} outside the diffusion state interval")


def _log_scale_density(spec: DiffusionSpec, x0: float, u: float, rel_tol: float) -> float:
    """-integral of 2 mu / sigma^2 from x0 to u."""

    def integrand(v):
        m = float(spec.mu(v))
        s = float(spec.sigma(v))
        if not (np.isfinite(m) and np.isfinite(s)) or s <= 0.0:
            raise CoefficientDomainError(f"bad coefficients at x={v}")
        return 2.0 * m / (s * s)

    if u == x0:
        return 0.0
    val, err = integrate.quad(integrand, x0, u, epsrel=rel_tol, epsabs=0.0, limit=200)
    if not np.isfinite(val):
        raise ToleranceError("inner scale integral did not converge")
    return -val


def scale_function(
    spec: DiffusionSpec,
    x0: float,
    x: float,
    rel_tol: float = 1e-10,
    abs_tol: float = 1e-14,
) -> float:
    """Scale function s(x) normalized to s(x0) = 0.

    s(x) = int_{x0}^{x} exp(-int_{x0}^{u} 2 mu(v)/sigma(v)^2 dv) du, computed
    by adaptive Gauss-Kronrod quadrature at relative tolerance ``rel_tol``.
    Strictly increasing in x.
    """
    _check_interior(spec, x0, "x0")
    _check_interior(spec, x, "x")
    if x == x0:
        return 0.0

    def integrand(u):
        return math.exp(_log_scale_density(spec, x0, u, rel_tol * 0.1))

    with np.errstate(all="ignore"):
        val, err = integrate.quad(
            integrand, x0, x, epsrel=rel_tol, epsabs=abs_tol, limit=200
        )
    if not np.isfinite(val):
        raise ToleranceError("scale quadrature returned a non-finite value")
    if abs(err) > max(abs_tol, 10 * rel_tol * abs(val)) and abs(err) > 1e-8:
        raise ToleranceError(
            f"scale quadrature stalled: estimate {val}, error bound {err}"
        )
    return val


def hit_probability(spec: DiffusionSpec, iv: Interval, x: float) -> float:
    """Probability that the diffusion started at x exits (a, b) through b.

    Equals (s(x) - s(a)) / (s(b) - s(a)); monotone nondecreasing in x with
    exact values 0 at a and 1 at b.
    """
    a, b = iv.a, iv.b
    if b - a <= 64.0 * np.finfo(float).eps * max(abs(a), abs(b), 1.0):
        raise DegenerateIntervalError(f"interval ({a}, {b}) below resolution")
    if not a <= x <= b:
        raise DomainError(f"x={x} outside [{a}, {b}]")
    if x == a:
        return 0.0
    if x == b:
        return 1.0
    s_x = scale_function(spec, a, x)
    s_b = scale_function(spec, a, b)
    return float(min(1.0, max(0.0, s_x / s_b)))


def expected_exit_time(
    spec: DiffusionSpec,
    iv: Interval,
    x: float,
    mesh_width: Optional[float] = None,
) -> float:
    """Expected time to leave (a, b) from x.

    Solves (sigma^2/2) u'' + mu u' = -1 with u(a) = u(b) = 0 on the same
    finite-difference kernel as the boundary-value solver.
    """
    from .fdcore import solve_linear_ode_fd

    a, b = iv.a, iv.b
    if not a <= x <= b:
        raise DomainError(f"x={x} outside [{a}, {b}]")
    if x == a or x == b:
        return 0.0
    spec.validate_on(a, b)
    if mesh_width is None:
        mesh_width = 1e-3 * iv.width
    grid, values = solve_linear_ode_fd(
        mu=spec.mu,
        sigma=spec.sigma,
        rate=lambda y: np.zeros_like(np.asarray(y, dtype=float)),
        source=lambda y: np.ones_like(np.asarray(y, dtype=float)),
        a=a,
        b=b,
        bc_a=0.0,
        bc_b=0.0,
        interface_points=(),
        mesh_width=mesh_width,
    )
    return float(np.interp(x, grid, values))


# -- preset diffusions ----------------------------------------------------


def make_bm(sigma: float = 1.0) -> DiffusionSpec:
    """Brownian motion with constant volatility on the whole line."""
    s = float(sigma)
    return DiffusionSpec(
        mu=lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        sigma=lambda x, _s=s: np.full_like(np.asarray(x, dtype=float), _s),
        mu_poly=(0.0,),
        sigma_poly=(s,),
        name="bm",
    )


def make_drifted_bm(mu: float = 1.0, sigma: float = 1.0) -> DiffusionSpec:
    m, s = float(mu), float(sigma)
    return DiffusionSpec(
        mu=lambda x, _m=m: np.full_like(np.asarray(x, dtype=float), _m),
        sigma=lambda x, _s=s: np.full_like(np.asarray(x, dtype=float), _s),
        mu_poly=(m,),
        sigma_poly=(s,),
        name="drifted-bm",
    )


def make_gbm(mu: float = 0.1, sigma: float = 0.4) -> DiffusionSpec:
    """Geometric Brownian motion on (0, inf)."""
    m, s = float(mu), float(sigma)
    return DiffusionSpec(
        mu=lambda x, _m=m: _m * np.asarray(x, dtype=float),
        sigma=lambda x, _s=s: _s * np.asarray(x, dtype=float),
        lo=0.0,
        hi=math.inf,
        mu_poly=(0.0, m),
        sigma_poly=(0.0, s),
        name="gbm",
    )


def make_ou(kappa: float = 1.0, theta: float = 0.0, sigma: float = 1.0) -> DiffusionSpec:
    """Ornstein-Uhlenbeck: mean reversion at rate kappa toward theta."""
    k, t, s = float(kappa), float(theta), float(sigma)
    return DiffusionSpec(
        mu=lambda x, _k=k, _t=t: _k * (_t - np.asarray(x, dtype=float)),
        sigma=lambda x, _s=s: np.full_like(np.asarray(x, dtype=float), _s),
        mu_poly=(k * t, -k),
        sigma_poly=(s,),
        name="ou",
    )


PRESET_DIFFUSIONS = {
    "bm": make_bm,
    "drifted-bm": make_drifted_bm,
    "gbm": make_gbm,
    "ou": make_ou,
}
