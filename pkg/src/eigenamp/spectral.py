"""Eigenbasis evolution of the amplifier by the closed-form coefficient recursion.

The composite state after ``i`` steps is fully described by the cumulative
complex products ``Gamma_{i,k}``: the ancilla-0 block carries
``gamma_{0,k} Gamma_{i,k}`` and the ancilla-1 block its conjugate partner. One
step multiplies every ``Gamma`` by

    gamma_{i+1,k} = (4|W_i|^2 - 1) - 2|W_i| exp(-i pi (1 - tau lambda_k) / 4)

where ``|W_i|`` is the fraction-weighted mean of ``cos(pi (1 - tau lambda_k)/4)``.

``|W|`` is evaluated as an expectation, i.e. divided by the current total weight
``sum_k f_i(lambda_k)``. Analytically the total is 1 and the two forms agree; the
normalized form keeps the total weight neutrally stable under the recursion,
whereas the bare sum amplifies any rounding in the total by a factor of at least
three per step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NumericalDegradation, ShapeError
from .spectrum import InitialOverlaps, Spectrum, _frozen

DRIFT_LIMIT = 1e-6
# |Gamma|^2 below this is flushed to exact zero (avoids denormal arithmetic)
UNDERFLOW = 1e-250

# Relative perturbation applied by gamma_step; nonzero only in fault-injection tests.
GAMMA_FAULT = 0.0

TRACE_COLUMNS = ("iter", "f_lambda0", "f_lambda1", "gsq_0", "gsq_1", "w_mag", "xi", "norm_drift")


def cosine_profile(eigenvalues, tau: float) -> np.ndarray:
    """c_k = cos(pi (1 - tau lambda_k) / 4)."""
    return np.cos(np.pi * (1.0 - tau * np.asarray(eigenvalues, dtype=float)) / 4.0)


def w_from_fractions(fractions, cosines) -> float:
    fractions = np.asarray(fractions, dtype=float)
    return float(fractions @ np.asarray(cosines, dtype=float) / fractions.sum())


def compute_w(state: "AmplifierState", spectrum: Spectrum, overlaps: InitialOverlaps, tau: float) -> float:
    """|W_i|: expectation of the cosine profile under the current fractions."""
    if not (state.gamma_big.size == spectrum.n == overlaps.n):
        raise ShapeError(
            f"dimension mismatch: state {state.gamma_big.size}, spectrum {spectrum.n}, overlaps {overlaps.n}"
        )
    fractions = overlaps.weights * np.abs(state.gamma_big) ** 2
    return w_from_fractions(fractions, cosine_profile(spectrum.eigenvalues, tau))


def delta(w_mag: float, lambda_k, tau: float):
    """Signed distance of |W| from the cosine of level ``lambda_k``; positive means growth."""
    return w_mag - cosine_profile(lambda_k, tau)


def gamma_step(w_prev: float, lambda_k, tau: float):
    """Per-step multiplier gamma_{i,k} given |W_{i-1}|; vectorized over ``lambda_k``."""
    phase = np.exp(-1j * np.pi * (1.0 - tau * np.asarray(lambda_k, dtype=float)) / 4.0)
    g = (4.0 * w_prev * w_prev - 1.0) - 2.0 * w_prev * phase
    if GAMMA_FAULT:
        g = g * (1.0 + GAMMA_FAULT)
    return g if np.ndim(g) else complex(g)


def gamma_sq_from_delta(w_prev: float, lambda_k, tau: float):
    """|gamma_{i,k}|^2 written through Delta: 1 + 4|W|(4|W|^2 - 1) Delta."""
    return 1.0 + 4.0 * w_prev * (4.0 * w_prev * w_prev - 1.0) * delta(w_prev, lambda_k, tau)


def xi(w_mag: float, tau: float = 1.0) -> float:
    """Boundary factor: levels below it grow at the next step, levels above it shrink."""
    if not 0.0 < tau <= 1.0:
        raise DomainError(f"tau must lie in (0, 1], got {tau}")
    if not 0.0 < w_mag <= 1.0 + 1e-15:
        raise DomainError(f"|W| must lie in (0, 1], got {w_mag}")
    return (1.0 - (4.0 / math.pi) * math.acos(min(w_mag, 1.0))) / tau


@dataclass(frozen=True, eq=False)
class AmplifierState:
    """Snapshot after ``iter`` steps.

    ``gamma_sq`` holds the moduli |gamma_{iter,k}|^2 of the multipliers applied at
    the last step (all ones at ``iter == 0``, where no step has been taken).
    """

    iter: int
    gamma_big: np.ndarray
    fractions: np.ndarray
    w_mag: float
    xi: float
    norm_drift: float
    gamma_sq: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gamma_big", _frozen(self.gamma_big, complex))
        object.__setattr__(self, "fractions", _frozen(self.fractions, float))
        object.__setattr__(self, "gamma_sq", _frozen(self.gamma_sq, float))


@dataclass(frozen=True)
class RunConfig:
    tau: float = 1.0
    epsilon: float = 0.01
    max_iter: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise DomainError(f"tau must lie in (0, 1], got {self.tau}")
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.max_iter < 1:
            raise DomainError(f"max_iter must be positive, got {self.max_iter}")


@dataclass(frozen=True, eq=False)
class Trace:
    """Per-iteration records, one array per CSV column (row ``i`` is iteration ``i``)."""

    f_lambda0: np.ndarray
    f_lambda1: np.ndarray
    gsq_0: np.ndarray
    gsq_1: np.ndarray
    w_mag: np.ndarray
    xi: np.ndarray
    norm_drift: np.ndarray

    def __post_init__(self):
        for name in TRACE_COLUMNS[1:]:
            object.__setattr__(self, name, _frozen(getattr(self, name), float))

    def __len__(self) -> int:
        return int(self.f_lambda0.size)

    @property
    def iters(self) -> np.ndarray:
        return np.arange(len(self))

    def columns(self) -> dict[str, np.ndarray]:
        out = {"iter": self.iters}
        out.update({name: getattr(self, name) for name in TRACE_COLUMNS[1:]})
        return out


@dataclass(frozen=True, eq=False)
class RunResult:
    """Outcome of a run. ``n_c`` equals ``max_iter`` when the run did not converge."""

    n_c: int
    converged: bool
    trace: Trace | None
    final: object = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {"n_c": self.n_c, "converged": self.converged}
        if self.trace is not None:
            out["trace"] = {k: v.tolist() for k, v in self.trace.columns().items()}
        return out


class _Kernel:
    """Precomputed per-level data shared by ``iterate`` and ``run_until``."""

    def __init__(self, spectrum: Spectrum, overlaps: InitialOverlaps, tau: float):
        if spectrum.n != overlaps.n:
            raise ShapeError(f"spectrum is {spectrum.n}-dimensional, overlaps are {overlaps.n}")
        self.lam = spectrum.eigenvalues
        self.tau = tau
        self.cos = cosine_profile(self.lam, tau)
        self.p0 = overlaps.weights

    def measure(self, gamma_big: np.ndarray):
        mag2 = gamma_big.real ** 2 + gamma_big.imag ** 2
        f = self.p0 * mag2
        total = f.sum()
        return f, float(f @ self.cos / total), abs(float(total) - 1.0)

    def advance(self, gamma_big: np.ndarray, w_prev: float):
        g = gamma_step(w_prev, self.lam, self.tau)
        big = gamma_big * g
        mag2 = big.real ** 2 + big.imag ** 2
        tiny = mag2 < UNDERFLOW
        if tiny.any():
            big[tiny] = 0.0
        return big, g


def initial_state(spectrum: Spectrum, overlaps: InitialOverlaps, tau: float = 1.0) -> AmplifierState:
    kern = _Kernel(spectrum, overlaps, tau)
    big = np.ones(spectrum.n, dtype=complex)
    f, w, drift = kern.measure(big)
    return AmplifierState(0, big, f, w, xi(w, tau), drift, np.ones(spectrum.n))


def iterate(state: AmplifierState, spectrum: Spectrum, overlaps: InitialOverlaps, tau: float = 1.0) -> AmplifierState:
    kern = _Kernel(spectrum, overlaps, tau)
    if state.gamma_big.size != spectrum.n:
        raise ShapeError(f"state is {state.gamma_big.size}-dimensional, spectrum {spectrum.n}")
    big, g = kern.advance(state.gamma_big.copy(), state.w_mag)
    f, w, drift = kern.measure(big)
    if drift > DRIFT_LIMIT:
        raise NumericalDegradation(f"total weight drifted by {drift:.3e} at iteration {state.iter + 1}")
    return AmplifierState(state.iter + 1, big, f, w, xi(w, tau), drift, np.abs(g) ** 2)


def run_until(
    spectrum: Spectrum,
    overlaps: InitialOverlaps,
    config: RunConfig = RunConfig(),
    record_trace: bool = True,
) -> RunResult:
    """Iterate until f(lambda_0) >= 1 - epsilon or ``config.max_iter`` steps.

    The returned ``final`` attribute is the last ``AmplifierState``.
    """
    if spectrum.n < 2:
        raise ShapeError("a run needs at least two levels")
    tau, target = config.tau, 1.0 - config.epsilon
    kern = _Kernel(spectrum, overlaps, tau)
    big = np.ones(spectrum.n, dtype=complex)
    f, w, drift = kern.measure(big)
    g = np.ones(spectrum.n, dtype=complex)
    rows: list[tuple] = []
    i = 0
    while True:
        if record_trace:
            rows.append((f[0], f[1], abs(g[0]) ** 2, abs(g[1]) ** 2, w, xi(w, tau), drift))
        if f[0] >= target or i == config.max_iter:
            break
        big, g = kern.advance(big, w)
        f, w, drift = kern.measure(big)
        i += 1
        if drift > DRIFT_LIMIT:
            raise NumericalDegradation(f"total weight drifted by {drift:.3e} at iteration {i}")
    trace = Trace(*np.array(rows, dtype=float).T) if record_trace else None
    final = AmplifierState(i, big, f, w, xi(w, tau), drift, np.abs(g) ** 2)
    return RunResult(n_c=i, converged=bool(f[0] >= target), trace=trace, final=final)


def final_state(state: AmplifierState, overlaps: InitialOverlaps, branch: int) -> np.ndarray:
    """System amplitudes in the eigenbasis after measuring the ancilla in ``branch``."""
    if branch not in (0, 1):
        raise ValueError(f"branch must be 0 or 1, got {branch}")
    big = state.gamma_big if branch == 0 else state.gamma_big.conj()
    amp = overlaps.gamma0 * big
    return amp / np.linalg.norm(amp)
