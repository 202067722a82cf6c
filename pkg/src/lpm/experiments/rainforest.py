"""Non-local stability of a bistable forest cover model.

``dx/dt = F(x) - M x`` with ``F(x) = R x (1 - x)`` above the critical cover
``x_crit`` and 0 at or below it. The forest equilibrium is ``x_F = 1 - M/R``
and the savanna equilibrium is ``x_S = 0``. A perturbation ``z`` starts the
system at ``x_F - |z|``; it is safe when the trajectory returns to the
forest.

Trajectories are integrated with the Dormand-Prince 5(4) pair until they
enter an attractor neighbourhood. Each neighbourhood is the ``epsilon``
interval around its equilibrium restricted to that equilibrium's side of
``x_crit``, so a start in ``(x_crit, epsilon)`` is not called savanna
while it is still growing.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass

import numba as nb
import numpy as np
from scipy import special

from ..continuous import Normal, discretize
from ._sampling import first_column, lpm_methods, thin
from .harness import (
    ExperimentConfig,
    ExperimentReport,
    ReplicateSummary,
    replicate_rng,
)

__all__ = [
    "RainforestParams",
    "StabilityReport",
    "rainforest_rhs",
    "integrate_to_attractor",
    "stability",
    "closed_form_p",
    "run_rainforest_experiment",
    "DEFAULT_GRID",
]

SAVANNA, FOREST, TIMEOUT = 0, 1, -1
OUTCOMES = {SAVANNA: "savanna", FOREST: "forest", TIMEOUT: "timeout"}
DEFAULT_GRID = (0.0, 0.1, 0.2, 0.3, 0.4)
RTOL, ATOL = 1e-3, 1e-6


@dataclass(frozen=True)
class RainforestParams:
    """Growth rate ``R``, death rate ``M``, threshold ``x_crit``, neighbourhood
    radius ``epsilon`` and time cap ``t_max``."""

    R: float = 1.0
    M: float = 0.5
    x_crit: float = 0.1
    epsilon: float = 1e-2
    t_max: float = 1e3

    def __post_init__(self):
        if not 0 < self.M < self.R:
            raise ValueError(f"need 0 < M < R, got M={self.M}, R={self.R}")
        if not 0 <= self.x_crit < 1:
            raise ValueError(f"x_crit must lie in [0, 1), got {self.x_crit}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if not self.t_max > 0:
            raise ValueError("t_max must be positive")

    @property
    def x_F(self):
        return 1.0 - self.M / self.R

    def with_x_crit(self, x_crit):
        return RainforestParams(self.R, self.M, float(x_crit), self.epsilon, self.t_max)


@dataclass
class StabilityReport:
    """Fraction ``P = n_safe / n_tot`` of perturbations that return to the forest.

    Timeouts count as unsafe and are also reported on their own.
    """

    P: float
    n_safe: int
    n_tot: int
    n_timeout: int = 0

    def to_dict(self):
        return asdict(self)


@nb.njit(cache=True)
def _rhs(x, R, M, xc):
    if x > xc:
        return R * x * (1.0 - x) - M * x
    return -M * x


def rainforest_rhs(x, p):
    """``dx/dt`` at cover ``x``."""
    return float(_rhs(float(x), p.R, p.M, p.x_crit))


@nb.njit(cache=True)
def _where(x, xF, xc, eps):
    if x > xc and abs(x - xF) < eps:
        return FOREST
    if x <= xc and abs(x) < eps:
        return SAVANNA
    return 2


# Dormand-Prince 5(4) tableau
_A21 = 1.0 / 5
_A31, _A32 = 3.0 / 40, 9.0 / 40
_A41, _A42, _A43 = 44.0 / 45, -56.0 / 15, 32.0 / 9
_A51, _A52, _A53, _A54 = 19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729
_A61, _A62, _A63, _A64, _A65 = 9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84
# fifth-order minus embedded fourth-order weights
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600, -71.0 / 16695, 71.0 / 1920, -17253.0 / 339200, 22.0 / 525, -1.0 / 40,
)


@nb.njit(cache=True)
def _integrate(x0, R, M, xc, eps, t_max, rtol, atol):
    xF = 1.0 - M / R
    x = x0
    where = _where(x, xF, xc, eps)
    if where != 2:
        return where, 0.0
    t = 0.0
    f = _rhs(x, R, M, xc)
    # initial step from the scale of x and its derivative
    scale = atol + rtol * abs(x)
    d0 = abs(x) / scale
    d1 = abs(f) / scale
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, t_max)
    while t < t_max:
        h = min(h, t_max - t)
        k1 = f
        k2 = _rhs(x + h * _A21 * k1, R, M, xc)
        k3 = _rhs(x + h * (_A31 * k1 + _A32 * k2), R, M, xc)
        k4 = _rhs(x + h * (_A41 * k1 + _A42 * k2 + _A43 * k3), R, M, xc)
        k5 = _rhs(x + h * (_A51 * k1 + _A52 * k2 + _A53 * k3 + _A54 * k4), R, M, xc)
        k6 = _rhs(x + h * (_A61 * k1 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5), R, M, xc)
        x_new = x + h * (_B1 * k1 + _B3 * k3 + _B4 * k4 + _B5 * k5 + _B6 * k6)
        k7 = _rhs(x_new, R, M, xc)
        err = h * (_E1 * k1 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
        sc = atol + rtol * max(abs(x), abs(x_new))
        ratio = abs(err) / sc
        if ratio <= 1.0:
            t += h
            x = x_new
            f = k7
            where = _where(x, xF, xc, eps)
            if where != 2:
                return where, t
            factor = 10.0 if ratio == 0.0 else min(10.0, 0.9 * ratio ** -0.2)
        else:
            factor = max(0.2, 0.9 * ratio ** -0.2)
        h *= factor
        if h < 1e-14:
            break
    return TIMEOUT, t


@nb.njit(cache=True)
def _classify_many(x0, R, M, xc, eps, t_max, rtol, atol, out):
    for i in range(x0.shape[0]):
        out[i] = _integrate(x0[i], R, M, xc, eps, t_max, rtol, atol)[0]


def integrate_to_attractor(x0, p, return_time=False):
    """Integrate from ``x0`` until an attractor neighbourhood is reached.

    Uses an adaptive Dormand-Prince 5(4) step with relative tolerance 1e-3
    and absolute tolerance 1e-6.

    Returns
    -------
    str
        ``"forest"``, ``"savanna"`` or ``"timeout"`` (``t_max`` reached).
        With ``return_time`` a pair ``(outcome, t)``.
    """
    if not math.isfinite(x0):
        raise ValueError("x0 must be finite")
    code, t = _integrate(float(x0), p.R, p.M, p.x_crit, p.epsilon, p.t_max, RTOL, ATOL)
    return (OUTCOMES[code], t) if return_time else OUTCOMES[code]


def classify(x0, p):
    """Outcome codes (1 forest, 0 savanna, -1 timeout) for an array of starts."""
    x0 = np.ascontiguousarray(x0, dtype=float)
    out = np.empty(x0.shape[0], np.int64)
    _classify_many(x0, p.R, p.M, p.x_crit, p.epsilon, p.t_max, RTOL, ATOL, out)
    return out


def stability(z, p):
    """Stability measure for perturbations ``z`` (starts ``x_F - |z|``)."""
    codes = classify(p.x_F - np.abs(np.asarray(z, dtype=float).ravel()), p)
    n_safe = int(np.count_nonzero(codes == FOREST))
    n = codes.shape[0]
    return StabilityReport(n_safe / n, n_safe, n, int(np.count_nonzero(codes == TIMEOUT)))


def closed_form_p(p):
    """Expected ``P`` for standard normal perturbations: ``2 Phi(x_F - x_crit) - 1``."""
    gap = p.x_F - p.x_crit
    return float(2.0 * special.ndtr(gap) - 1.0) if gap > 0 else 0.0


def run_rainforest_experiment(cfg, p=None, grid=DEFAULT_GRID):
    """Replicated stability measure at each threshold in ``grid``.

    Every replicate draws one set of ``n`` perturbations (iid, or an LPM
    thinning of an ``N``-point normal cloud) and evaluates it at all grid
    points.

    Returns
    -------
    ExperimentReport
        One row per grid point with extra fields ``x_crit``,
        ``closed_form`` and ``timeouts`` (mean per replicate).
    """
    p = RainforestParams() if p is None else p
    methods = ("iid",) + lpm_methods()
    if cfg.method not in methods:
        raise ValueError(f"rainforest experiment supports {methods}, got {cfg.method!r}")
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("x_crit grid is empty")
    params = [p.with_x_crit(g) for g in grid]  # validates every grid point
    n, N, m = int(cfg.n), int(cfg.N), int(cfg.m)
    normal = Normal.standard()
    started = time.perf_counter()
    P = np.empty((len(grid), m))
    timeouts = np.zeros((len(grid), m))
    for k in range(m):
        rng = replicate_rng(cfg.seed, k)
        if cfg.method == "iid":
            z = first_column(normal.sample(n, rng))
        else:
            cloud = discretize(normal, N, rng).coords
            idx, _ = thin(cloud, n, cfg.method, rng)
            z = cloud[idx, 0]
        for g, pg in enumerate(params):
            rep = stability(z, pg)
            P[g, k] = rep.P
            timeouts[g, k] = rep.n_timeout
    rows = []
    for g, pg in enumerate(params):
        rows.append(ReplicateSummary(
            method=cfg.method, n=n, N=N, m=m,
            mean=float(P[g].mean()),
            sd=float(P[g].std(ddof=1)) if m > 1 else None,
            sd_defined=m > 1,
            extra={"x_crit": pg.x_crit, "closed_form": closed_form_p(pg),
                   "timeouts": float(timeouts[g].mean())},
        ))
    model = {k: v for k, v in asdict(p).items() if k != "x_crit"}
    echo = cfg.replace(params={**cfg.params, "rainforest": model, "grid": grid})
    return ExperimentReport(echo.to_dict(), rows, time.perf_counter() - started, None)


def default_config(**overrides):
    return ExperimentConfig(**{"experiment": "rainforest", "n": 50, "N": 10_000, "m": 200, **overrides})
