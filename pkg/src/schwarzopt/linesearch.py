"""Backtracking Armijo line search shared by all inner and outer solvers."""

from dataclasses import dataclass

import numpy as np


@dataclass
class LineSearchConfig:
    c1: float = 1e-4
    rho: float = 0.5
    alpha0: float = 1.0
    max_backtracks: int = 40

    def __post_init__(self):
        if not 0.0 < self.c1 < 1.0:
            raise ValueError("c1 must be in (0, 1)")
        if not 0.0 < self.rho < 1.0:
            raise ValueError("rho must be in (0, 1)")
        if not 0.0 < self.alpha0 <= 1.0:
            raise ValueError("alpha0 must be in (0, 1]")


@dataclass
class LineSearchResult:
    alpha: float
    stalled: bool
    f_value: float
    evaluations: int


DEFAULT = LineSearchConfig()


def armijo(f, v, d, slope, cfg=DEFAULT, f0=None):
    """Backtrack alpha = alpha0 * rho^m until the Armijo condition holds.

    slope is the directional derivative grad f(v) . d.  For non-descent
    directions (slope >= 0) a simple-decrease condition f(v + alpha d) < f(v)
    is used instead; if no decrease is found the search reports alpha = 0 and
    the caller is expected to skip the update.

    Near a minimizer the predicted decrease can drop below the rounding error
    of f itself; the acceptance test therefore allows a relative slack of a
    few ulps so that such steps are not rejected on noise alone.
    """
    d = np.asarray(d, dtype=float)
    if f0 is None:
        f0 = f(v)
    evals = 0
    if not np.any(d):
        return LineSearchResult(cfg.alpha0, False, f0, evals)
    ftol = 10.0 * np.finfo(float).eps * (1.0 + abs(f0))
    alpha = cfg.alpha0
    for _ in range(cfg.max_backtracks + 1):
        fa = f(v + alpha * d)
        evals += 1
        if slope < 0.0:
            accepted = fa <= f0 + cfg.c1 * alpha * slope + ftol
        else:
            accepted = fa < f0
        if accepted and np.isfinite(fa):
            return LineSearchResult(alpha, False, fa, evals)
        alpha *= cfg.rho
    return LineSearchResult(0.0, True, f0, evals)
