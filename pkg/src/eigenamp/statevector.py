"""Full ancilla x system state-vector evolution, used as ground truth for the recursion.

Composite amplitudes are stored ancilla-major: ``[ |0> (x) system | |1> (x) system ]``
with the system part in the computational basis. The Hamiltonian eigenbasis is
given by the columns of a ``RotationMatrix`` (identity when working directly in
the eigenbasis).
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DegenerateMeasurement, InvariantError, NumericalDegradation, RefuseDense, ShapeError
from .spectrum import ComputationalState, InitialOverlaps, RotationMatrix, Spectrum, _frozen

DENSE_DIM_LIMIT = 64


@dataclass(frozen=True, eq=False)
class CompositeState:
    amplitudes: np.ndarray

    def __post_init__(self):
        a = _frozen(self.amplitudes, complex)
        object.__setattr__(self, "amplitudes", a)
        if a.ndim != 1 or a.size < 2 or a.size % 2:
            raise ShapeError(f"composite state needs an even, positive length, got {a.shape}")
        norm = float(np.vdot(a, a).real)
        if abs(norm - 1.0) > 1e-10:
            raise InvariantError(f"composite state must have unit norm, got {norm!r}")

    @property
    def n(self) -> int:
        """System dimension N (half the composite length)."""
        return self.amplitudes.size // 2

    def block(self, bit: int) -> np.ndarray:
        return self.amplitudes[bit * self.n:(bit + 1) * self.n]


class EvolutionOperator:
    """U = |0><0| (x) A + i |1><1| (x) A^dagger with A = exp(i pi tau H / 4).

    ``apply`` works through the eigenbasis (diagonal phases sandwiched by the
    rotation). ``dense`` exponentiates the Hamiltonian matrix directly with
    ``scipy.linalg.expm`` and never touches the phase vectors, so the two give
    independent routes to the same operator.
    """

    def __init__(self, spectrum: Spectrum, tau: float = 1.0, rotation: RotationMatrix | None = None):
        if rotation is None:
            rotation = RotationMatrix.identity(spectrum.n)
        if rotation.n != spectrum.n:
            raise ShapeError(f"rotation is {rotation.n}-dimensional, spectrum {spectrum.n}")
        self.spectrum = spectrum
        self.tau = float(tau)
        self.rotation = rotation
        theta = np.pi * self.tau * spectrum.eigenvalues / 4.0
        self.phases0 = np.exp(1j * theta)
        self.phases1 = 1j * np.exp(-1j * theta)
        self._identity = rotation.is_identity
        self._dense = None

    @property
    def n(self) -> int:
        return self.spectrum.n

    def to_eigenbasis(self, system: np.ndarray) -> np.ndarray:
        return system if self._identity else self.rotation.matrix.conj().T @ system

    def from_eigenbasis(self, coeffs: np.ndarray) -> np.ndarray:
        return coeffs if self._identity else self.rotation.matrix @ coeffs

    def hamiltonian(self) -> np.ndarray:
        v = self.rotation.matrix
        h = (v * self.spectrum.eigenvalues) @ v.conj().T
        return (h + h.conj().T) / 2.0

    def dense(self, dense_dim_limit: int = DENSE_DIM_LIMIT) -> np.ndarray:
        n = self.n
        if 2 * n > dense_dim_limit:
            raise RefuseDense(f"dense U would be {2 * n}x{2 * n}, limit is {dense_dim_limit}")
        if self._dense is None:
            a = scipy.linalg.expm(1j * np.pi * self.tau / 4.0 * self.hamiltonian())
            u = np.zeros((2 * n, 2 * n), dtype=complex)
            u[:n, :n] = a
            u[n:, n:] = 1j * a.conj().T
            self._dense = u
        return self._dense

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        n = self.n
        b0 = self.to_eigenbasis(amplitudes[:n]) * self.phases0
        b1 = self.to_eigenbasis(amplitudes[n:]) * self.phases1
        return np.concatenate((self.from_eigenbasis(b0), self.from_eigenbasis(b1)))


def build_initial_composite(
    system: InitialOverlaps | ComputationalState, rotation: RotationMatrix | None = None
) -> CompositeState:
    """(|0> + |1>)/sqrt(2) tensored with the system state.

    ``system`` is either the computational amplitudes or eigenbasis overlaps; in
    the latter case the rotation maps them into the computational basis.
    """
    if isinstance(system, InitialOverlaps):
        vec = system.gamma0
        if rotation is not None:
            if rotation.n != system.n:
                raise ShapeError(f"rotation is {rotation.n}-dimensional, overlaps are {system.n}")
            vec = rotation.matrix @ vec
    elif isinstance(system, ComputationalState):
        vec = system.amplitudes
    else:
        raise TypeError(f"unsupported system state {type(system).__name__}")
    vec = vec / np.linalg.norm(vec)
    return CompositeState(np.concatenate((vec, vec)) / np.sqrt(2.0))


def _check_dims(op: EvolutionOperator, psi: CompositeState):
    if psi.n != op.n:
        raise ShapeError(f"state has system dimension {psi.n}, operator {op.n}")


def apply_u(op: EvolutionOperator, psi: CompositeState) -> CompositeState:
    _check_dims(op, psi)
    return CompositeState(op.apply(psi.amplitudes))


def expectation_u(psi: CompositeState, op: EvolutionOperator) -> complex:
    """W = <psi|U|psi> / <psi|psi>."""
    _check_dims(op, psi)
    a = psi.amplitudes
    return complex(np.vdot(a, op.apply(a)) / np.vdot(a, a).real)


def step_closed_form(psi: CompositeState, op: EvolutionOperator) -> CompositeState:
    """One step as the rank-one update (4|W|^2 - 1) psi - 2 W* U psi."""
    _check_dims(op, psi)
    a = psi.amplitudes
    ua = op.apply(a)
    w = np.vdot(a, ua) / np.vdot(a, a).real
    out = (4.0 * abs(w) ** 2 - 1.0) * a - 2.0 * np.conj(w) * ua
    dev = abs(float(np.vdot(out, out).real) - 1.0)
    if dev > 1e-8:
        raise NumericalDegradation(f"norm deviates by {dev:.3e} after closed-form step")
    return CompositeState(out)


def reflection(psi: CompositeState) -> np.ndarray:
    """Dense Householder reflection 1 - 2|psi><psi|."""
    a = psi.amplitudes
    return np.eye(a.size, dtype=complex) - 2.0 * np.outer(a, a.conj()) / np.vdot(a, a).real


def transformation_matrix(
    history: Sequence[CompositeState], op: EvolutionOperator, dense_dim_limit: int = DENSE_DIM_LIMIT
) -> np.ndarray:
    """Dense T_i for i = len(history), built by the operator recursion alone.

    Starting from R_0 = 1 - 2|psi_0><psi_0|, the recursion
    T_j = R_{j-1} U R_{j-1} U^dagger, R_j = T_j R_{j-1} T_j^dagger
    is unrolled to j = i; only ``history[0]`` enters the construction. Each R_j
    is replaced by the unitary factor of its polar decomposition, which removes
    the rounding drift the products would otherwise amplify step after step.
    """
    if not history:
        raise ValueError("history must contain at least psi_0")
    _check_dims(op, history[0])
    u = op.dense(dense_dim_limit)
    ud = u.conj().T
    r = reflection(history[0])
    for _ in range(len(history) - 1):
        t = r @ u @ r @ ud
        r = t @ r @ t.conj().T
        r = scipy.linalg.polar(0.5 * (r + r.conj().T))[0]
    return r @ u @ r @ ud


def step_explicit(
    history: Sequence[CompositeState], op: EvolutionOperator, dense_dim_limit: int = DENSE_DIM_LIMIT
) -> CompositeState:
    """psi_i = T_i psi_{i-1} with T_i materialized as a dense matrix product."""
    if 2 * history[-1].n > dense_dim_limit:
        raise RefuseDense(f"composite dimension {2 * history[-1].n} exceeds limit {dense_dim_limit}")
    t = transformation_matrix(history, op, dense_dim_limit)
    out = t @ history[-1].amplitudes
    norm = float(np.linalg.norm(out))
    if abs(norm - 1.0) > 1e-8:
        raise NumericalDegradation(f"norm deviates by {abs(norm - 1.0):.3e} after explicit step")
    return CompositeState(out / norm)


def measure_ancilla(psi: CompositeState, branch: int) -> tuple[float, np.ndarray]:
    """Probability of ancilla outcome ``branch`` and the post-measurement system state."""
    if branch not in (0, 1):
        raise ValueError(f"branch must be 0 or 1, got {branch}")
    block = psi.block(branch)
    prob = float(np.vdot(block, block).real)
    if prob <= 1e-15:
        raise DegenerateMeasurement(f"ancilla outcome {branch} has probability {prob:.3e}")
    return prob, block / np.sqrt(prob)


def eigen_blocks(psi: CompositeState, rotation: RotationMatrix | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigenbasis coefficients of the two ancilla blocks."""
    if rotation is None:
        return psi.block(0).copy(), psi.block(1).copy()
    if rotation.n != psi.n:
        raise ShapeError(f"rotation is {rotation.n}-dimensional, state {psi.n}")
    vd = rotation.matrix.conj().T
    return vd @ psi.block(0), vd @ psi.block(1)


def fractions_of(state, rotation: RotationMatrix | None = None) -> np.ndarray:
    """|<lambda_k|state>|^2, summed over ancilla blocks for composite input."""
    if isinstance(state, CompositeState):
        b0, b1 = eigen_blocks(state, rotation)
        return np.abs(b0) ** 2 + np.abs(b1) ** 2
    vec = state.amplitudes if isinstance(state, ComputationalState) else np.asarray(state, dtype=complex)
    if rotation is None:
        return np.abs(vec) ** 2
    if rotation.n != vec.size:
        raise ShapeError(f"rotation is {rotation.n}-dimensional, state {vec.size}")
    return np.abs(rotation.matrix.conj().T @ vec) ** 2


def evolve(psi0: CompositeState, op: EvolutionOperator, steps: int, method: str = "closed") -> list[CompositeState]:
    """Return [psi_0, ..., psi_steps] using ``"closed"`` or ``"explicit"`` steps."""
    history = [psi0]
    for _ in range(steps):
        if method == "closed":
            history.append(step_closed_form(history[-1], op))
        elif method == "explicit":
            history.append(step_explicit(history, op))
        else:
            raise ValueError(f"unknown method {method!r}")
    return history


def run_statevector(
    psi0: CompositeState, op: EvolutionOperator, epsilon: float, max_iter: int
) -> tuple[int, bool, CompositeState]:
    """Closed-form steps until the ground fraction reaches 1 - epsilon."""
    psi = psi0
    target = 1.0 - epsilon
    for i in range(max_iter + 1):
        if fractions_of(psi, op.rotation)[0] >= target:
            return i, True, psi
        if i < max_iter:
            psi = step_closed_form(psi, op)
    return max_iter, False, psi


_HEADER = struct.Struct("<QQ")


def dump_composite(path, psi: CompositeState, iteration: int) -> None:
    """Write header (dim, iter) as little-endian uint64, then interleaved (re, im) float64."""
    data = np.empty(2 * psi.amplitudes.size, dtype="<f8")
    data[0::2] = psi.amplitudes.real
    data[1::2] = psi.amplitudes.imag
    with open(Path(path), "wb") as fh:
        fh.write(_HEADER.pack(psi.amplitudes.size, iteration))
        fh.write(data.tobytes())


def load_composite(path) -> tuple[CompositeState, int]:
    raw = Path(path).read_bytes()
    dim, iteration = _HEADER.unpack_from(raw)
    data = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if data.size != 2 * dim:
        raise ShapeError(f"expected {2 * dim} floats, found {data.size}")
    return CompositeState(data[0::2] + 1j * data[1::2]), int(iteration)
