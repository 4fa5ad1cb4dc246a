"""Numerical checks of the amplifier's analytic claims.

``check_run_invariants`` audits a recorded trace against every inequality the
recursion is supposed to satisfy; violations are returned as data. The other
helpers probe the fixed-point structure of the limit, the spectrum of the
ancilla-extended generator, and the iteration-count bound.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, FixedPointFound, InternalError, InvariantError
from .spectral import DRIFT_LIMIT, RunResult, cosine_profile, gamma_sq_from_delta
from .spectrum import Seed, Spectrum, _frozen

TOL_W = 1e-12
TOL_XI = 1e-9
TOL_MODULUS = 1e-12


@dataclass(frozen=True)
class Violation:
    invariant: str
    iter: int
    magnitude: float

    def to_dict(self) -> dict:
        return {"invariant": self.invariant, "iter": self.iter, "magnitude": self.magnitude}


def violations_to_json(violations) -> str:
    return json.dumps([v.to_dict() for v in violations])


def _flag(out, name, idx, excess):
    for i in np.flatnonzero(excess > 0):
        out.append(Violation(name, int(idx[i]), float(excess[i])))


def check_run_invariants(result: RunResult, spectrum: Spectrum, tau: float = 1.0) -> list[Violation]:
    """Audit an amplifier trace; an empty list means every inequality held.

    Checked: ground fraction nondecreasing; |gamma_{i,0}|^2 >= 1; |W| inside its
    cosine bounds, |W|^2 >= 1/2 and |W| nonincreasing; xi nonincreasing and inside
    [lambda_0, lambda_max]; growth of levels 0 and 1 agreeing with their side of
    the previous boundary factor; the recorded |gamma|^2 matching the Delta form
    of the modulus; and the total-weight drift.
    """
    tr = result.trace
    if tr is None:
        raise ValueError("run carries no trace")
    lam = spectrum.eigenvalues
    c = cosine_profile(lam, tau)
    c_lo, c_hi = c[0], c[-1]
    out: list[Violation] = []
    idx = tr.iters
    step = idx[1:]

    _flag(out, "ground_fraction_monotone", step, tr.f_lambda0[:-1] - tr.f_lambda0[1:] - 1e-12)
    _flag(out, "ground_amplification", step, (1.0 - tr.gsq_0[1:]) - 1e-12)
    _flag(out, "w_lower_bound", idx, (c_lo - tr.w_mag) - TOL_W)
    _flag(out, "w_upper_bound", idx, (tr.w_mag - c_hi) - TOL_W)
    _flag(out, "w_squared_half", idx, (0.5 - tr.w_mag ** 2) - TOL_W)
    _flag(out, "w_monotone", step, tr.w_mag[1:] - tr.w_mag[:-1] - TOL_W)
    _flag(out, "xi_monotone", step, tr.xi[1:] - tr.xi[:-1] - TOL_XI)
    _flag(out, "xi_lower_bound", idx, (lam[0] - tr.xi) - TOL_XI)
    _flag(out, "xi_upper_bound", idx, (tr.xi - lam[-1]) - TOL_XI)
    _flag(out, "norm_drift", idx, tr.norm_drift - DRIFT_LIMIT)

    w_prev = tr.w_mag[:-1]
    xi_prev = tr.xi[:-1]
    for k, gsq in ((0, tr.gsq_0[1:]), (1, tr.gsq_1[1:])):
        expect = gamma_sq_from_delta(w_prev, lam[k], tau)
        _flag(out, "modulus_consistency", step, np.abs(gsq - expect) - TOL_MODULUS * np.maximum(1.0, expect))
        # away from the boundary, growth must match the side of xi the level sits on
        decided = (np.abs(lam[k] - xi_prev) > TOL_XI) & (np.abs(gsq - 1.0) > 1e-12)
        wrong = decided & ((gsq >= 1.0) != (lam[k] <= xi_prev))
        _flag(out, "group_classification", step, np.where(wrong, np.abs(gsq - 1.0), 0.0))
    return out


def first_boundary_crossing(result: RunResult, level: float) -> int | None:
    """Smallest i >= 1 with xi_{i-1} < level, or None."""
    hits = np.flatnonzero(result.trace.xi[:-1] < level)
    return int(hits[0]) + 1 if hits.size else None


@dataclass(frozen=True, eq=False)
class FixedPointCandidate:
    """Hypothetical limit where levels 0..k' keep weights u_k and the rest vanish."""

    lambdas: np.ndarray
    weights: np.ndarray
    tau: float = 1.0

    def __post_init__(self):
        lam = _frozen(self.lambdas, float)
        u = _frozen(self.weights, float)
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "weights", u)
        if lam.shape != u.shape or lam.ndim != 1 or lam.size < 1:
            raise InvariantError("lambdas and weights must be equal-length 1-d sequences")
        if np.any(u < 0.0) or abs(u.sum() - 1.0) > 1e-12:
            raise InvariantError("weights must be nonnegative and sum to 1")

    @property
    def k_prime(self) -> int:
        return self.lambdas.size - 1


def fixed_point_residual(candidate: FixedPointCandidate) -> float:
    """max_k |mean(c) - c_k| over the surviving levels; zero iff all cosines coincide.

    The weights do not enter: a nontrivial limit needs every surviving level to
    have zero Delta for every weighting, which forces equal cosines.
    """
    c = cosine_profile(candidate.lambdas, candidate.tau)
    return float(np.max(np.abs(c.mean() - c)))


def residual_floor(min_gap: float, tau: float = 1.0) -> float:
    """Lower bound on the residual for levels in (0, 1] separated by at least ``min_gap``.

    The residual is at least half the cosine spread, and the cosine is increasing
    and concave in lambda on [0, 1/tau], so the smallest spread for a given gap
    sits at the top of the range.
    """
    top = 1.0 / tau if tau > 0 else 1.0
    top = min(top, 1.0)
    return 0.5 * float(cosine_profile(top, tau) - cosine_profile(top - min_gap, tau))


def _sample_gapped_levels(rng: np.random.Generator, count: int, m: int, min_gap: float) -> np.ndarray:
    span = 1.0 - (m - 1) * min_gap
    u = np.sort(span * (1.0 - rng.random((count, m))), axis=1)
    return u + min_gap * np.arange(m)


def falsify_nontrivial_fixed_points(
    n_samples: int = 100_000,
    seed: Seed = 0,
    tau: float = 1.0,
    min_gap: float = 1e-3,
    max_levels: int = 8,
) -> float:
    """Smallest residual over random candidates with k' >= 1 and distinct levels.

    Raises ``FixedPointFound`` if any sample falls below ``residual_floor``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    sizes = rng.integers(2, max_levels + 1, n_samples)
    best = math.inf
    for m in np.unique(sizes):
        count = int(np.sum(sizes == m))
        lam = _sample_gapped_levels(rng, count, int(m), min_gap)
        c = cosine_profile(lam, tau)
        resid = np.max(np.abs(c.mean(axis=1, keepdims=True) - c), axis=1)
        best = min(best, float(resid.min()))
    floor = residual_floor(min_gap, tau)
    if best <= floor:
        raise FixedPointFound(f"residual {best:.3e} at or below floor {floor:.3e}")
    return best


@dataclass(frozen=True, eq=False)
class CompositeSpectrum:
    """Energies E_0..E_{2N-1} of the ancilla-extended generator, ascending.

    ``labels[j]`` is the (ancilla bit, system level) of ``energies[j]``.
    """

    energies: np.ndarray
    labels: tuple

    def phases(self) -> np.ndarray:
        """exp(i E_j) per ancilla-major composite index (bit * N + k)."""
        n = len(self.labels) // 2
        out = np.empty(2 * n, dtype=complex)
        for e, (bit, k) in zip(self.energies, self.labels):
            out[bit * n + k] = np.exp(1j * e)
        return out


def composite_spectrum(spectrum: Spectrum, tau: float = 1.0) -> CompositeSpectrum:
    n = spectrum.n
    lam = spectrum.eigenvalues
    e = np.empty(2 * n)
    e[:n] = np.pi * tau * lam / 4.0
    e[n:] = (np.pi / 2.0 - np.pi * tau * lam / 4.0)[::-1]
    labels = tuple([(0, k) for k in range(n)] + [(1, n - 1 - j) for j in range(n)])
    d = np.diff(e)
    if np.any(d < 0.0) or (n > 1 and not (d[0] > 0.0 and d[-1] > 0.0)) or (n == 1 and not d[0] > 0.0):
        raise InternalError("composite energies out of order; the input spectrum is invalid")
    return CompositeSpectrum(_frozen(e, float), labels)


def nc_upper_bound(tau: float, gap: float, epsilon: float) -> float:
    """(2/pi) / (tau D epsilon), valid when the two lowest levels are small."""
    if tau <= 0.0 or gap <= 0.0 or epsilon <= 0.0:
        raise DomainError(f"arguments must be positive, got tau={tau}, gap={gap}, epsilon={epsilon}")
    return (2.0 / math.pi) / (tau * gap * epsilon)
