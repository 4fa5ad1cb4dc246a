"""Best-case demon-like algorithmic cooling, used as a comparison curve.

Every demon measurement is assumed to succeed, so each step attenuates the
amplitude of level k by exp(-pi tau lambda_k / 4) and the state is renormalized.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateState, ShapeError
from .spectral import RunConfig, RunResult, Trace
from .spectrum import Spectrum, _frozen

UNDERFLOW = 1e-300


@dataclass(frozen=True, eq=False)
class DlacState:
    iter: int
    fractions: np.ndarray

    def __post_init__(self):
        f = _frozen(self.fractions, float)
        object.__setattr__(self, "fractions", f)
        if np.any(f < 0.0) or abs(f.sum() - 1.0) > 1e-12:
            raise ValueError("DLAC fractions must be nonnegative and sum to 1")


def cooling_factors(spectrum: Spectrum, tau: float) -> np.ndarray:
    """Squared per-step attenuation exp(-pi tau lambda_k / 2) of each fraction."""
    return np.exp(-np.pi * tau * spectrum.eigenvalues / 2.0)


def _step(f: np.ndarray, weights: np.ndarray) -> np.ndarray:
    g = f * weights
    g[g < UNDERFLOW] = 0.0
    total = g.sum()
    if total <= 0.0:
        raise DegenerateState("all fractions underflowed to zero")
    return g / total


def dlac_step(state: DlacState, spectrum: Spectrum, tau: float = 1.0) -> DlacState:
    if state.fractions.size != spectrum.n:
        raise ShapeError(f"state is {state.fractions.size}-dimensional, spectrum {spectrum.n}")
    return DlacState(state.iter + 1, _step(state.fractions.copy(), cooling_factors(spectrum, tau)))


def dlac_run(spectrum: Spectrum, fractions, config: RunConfig = RunConfig()) -> RunResult:
    """Cool until f(lambda_0) >= 1 - epsilon; ``gsq_*`` columns hold the squared cooling factors.

    ``w_mag`` and ``xi`` have no meaning here and are recorded as NaN.
    """
    f = np.array(fractions, dtype=float)
    if f.size != spectrum.n or spectrum.n < 2:
        raise ShapeError(f"fractions are {f.size}-dimensional, spectrum {spectrum.n}")
    f = f / f.sum()
    weights = cooling_factors(spectrum, config.tau)
    target = 1.0 - config.epsilon
    rows = []
    i = 0
    while True:
        rows.append((f[0], f[1], weights[0], weights[1], np.nan, np.nan, abs(f.sum() - 1.0)))
        if f[0] >= target or i == config.max_iter:
            break
        f = _step(f, weights)
        i += 1
    trace = Trace(*np.array(rows, dtype=float).T)
    return RunResult(n_c=i, converged=bool(f[0] >= target), trace=trace, final=DlacState(i, f))
