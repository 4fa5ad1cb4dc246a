"""Spectra, random rotations and initial-state overlaps.

Everything here is a pure function of its inputs and seed. Arrays held by the
value objects are copied and frozen on construction, so instances can be
shared freely between threads and processes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    InfeasibleGap,
    InvalidDimension,
    InvalidGroundEnergy,
    InvariantError,
    ShapeError,
)

Seed = Union[int, Sequence[int], np.random.SeedSequence]


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def _rng(seed: Seed) -> np.random.Generator:
    return np.random.default_rng(seed)


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ordered eigenvalues scaled into (0, 1] with a strict gap at the bottom."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        lam = _frozen(self.eigenvalues, float)
        object.__setattr__(self, "eigenvalues", lam)
        if lam.ndim != 1 or lam.size < 1:
            raise InvalidDimension("eigenvalues must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(lam)):
            raise InvariantError("eigenvalues must be finite")
        if not (lam[0] > 0.0 and lam[-1] <= 1.0):
            raise InvariantError(f"eigenvalues must lie in (0, 1], got [{lam[0]}, {lam[-1]}]")
        if np.any(np.diff(lam) < 0.0):
            raise InvariantError("eigenvalues must be nondecreasing")
        if lam.size > 1 and not lam[0] < lam[1]:
            raise InvariantError("lowest eigenvalue must be nondegenerate")

    @property
    def n(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[1] - self.eigenvalues[0])

    def to_dict(self) -> dict:
        return {"n": self.n, "eigenvalues": self.eigenvalues.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Spectrum":
        spec = cls(np.asarray(data["eigenvalues"], dtype=float))
        if "n" in data and int(data["n"]) != spec.n:
            raise ShapeError(f"declared n={data['n']} but {spec.n} eigenvalues given")
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Spectrum":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class InitialOverlaps:
    """Eigenbasis coefficients of the initial system state."""

    gamma0: np.ndarray

    def __post_init__(self):
        g = _frozen(self.gamma0, complex)
        object.__setattr__(self, "gamma0", g)
        if g.ndim != 1 or g.size < 1:
            raise ShapeError("gamma0 must be a non-empty 1-d sequence")
        norm = float(np.sum(np.abs(g) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise InvariantError(f"overlaps must have unit norm, got {norm!r}")
        if not abs(g[0]) ** 2 > 0.0:
            raise InvariantError("initial ground-state fraction must be nonzero")

    @property
    def n(self) -> int:
        return int(self.gamma0.size)

    @property
    def weights(self) -> np.ndarray:
        """Initial fractions |gamma_{0,k}|^2."""
        return np.abs(self.gamma0) ** 2

    def to_dict(self) -> dict:
        return {"gamma0_re": self.gamma0.real.tolist(), "gamma0_im": self.gamma0.imag.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "InitialOverlaps":
        re = np.asarray(data["gamma0_re"], dtype=float)
        im = np.asarray(data["gamma0_im"], dtype=float)
        if re.shape != im.shape:
            raise ShapeError("gamma0_re and gamma0_im differ in length")
        return cls(re + 1j * im)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "InitialOverlaps":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class RotationMatrix:
    """Unitary whose columns are the Hamiltonian eigenvectors in the computational basis."""

    matrix: np.ndarray
    params: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix, complex)
        object.__setattr__(self, "matrix", m)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ShapeError(f"rotation must be square, got shape {m.shape}")
        dev = np.max(np.abs(m @ m.conj().T - np.eye(m.shape[0])))
        if dev > 1e-10:
            raise InvariantError(f"rotation is not unitary (max deviation {dev:.3e})")
        if self.params is not None:
            object.__setattr__(self, "params", _frozen(self.params, float))

    @property
    def n(self) -> int:
        return int(self.matrix.shape[0])

    @classmethod
    def identity(cls, n: int) -> "RotationMatrix":
        return cls(np.eye(n, dtype=complex))

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(self.n)))


@dataclass(frozen=True, eq=False)
class ComputationalState:
    """Known amplitudes a_j of the initial system state in the computational basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = _frozen(self.amplitudes, complex)
        object.__setattr__(self, "amplitudes", a)
        if a.ndim != 1 or a.size < 1:
            raise ShapeError("amplitudes must be a non-empty 1-d sequence")
        norm = float(np.sum(np.abs(a) ** 2))
        if abs(norm - 1.0) > 1e-12:
            raise InvariantError(f"state must have unit norm, got {norm!r}")

    @property
    def n(self) -> int:
        return int(self.amplitudes.size)


def make_ladder_spectrum(n: int, e0: float) -> Spectrum:
    """Equally spaced levels ``e0 + k/n``."""
    if n < 2:
        raise InvalidDimension(f"dimension must be >= 2, got {n}")
    if not 0.0 < e0 <= 1.0 / n:
        raise InvalidGroundEnergy(f"ground energy must lie in (0, 1/n], got {e0}")
    lam = e0 + np.arange(n) / n
    # e0 == 1/n puts the top level at 1 up to rounding
    lam[-1] = min(lam[-1], 1.0)
    return Spectrum(lam)


def make_random_spectrum(n: int, gap: float, seed: Seed, ground: str = "min") -> Spectrum:
    """Random spectrum in (0, 1] whose two lowest levels are exactly ``gap`` apart.

    ``ground`` selects how the lowest level is drawn:

    * ``"min"`` (default): lowest of ``n`` uniform draws on (0, 1 - gap], i.e. the
      bottom of a spectrum of ``n`` uniformly scattered levels.
    * ``"uniform"``: uniform on (m, 1 - gap - m] with margin m = 1/(10 n).

    The remaining ``n - 2`` levels are uniform on [lambda_1, 1].
    """
    if n < 2:
        raise InvalidDimension(f"dimension must be >= 2, got {n}")
    margin = 1.0 / (10.0 * n)
    if not 0.0 < gap < 1.0 - 2.0 * margin:
        raise InfeasibleGap(f"gap {gap} leaves no headroom in (0, 1] for n={n}")
    rng = _rng(seed)
    if ground == "min":
        # 1 - random() lies in (0, 1], keeping lambda_0 strictly positive
        lam0 = (1.0 - gap) * float(np.min(1.0 - rng.random(n)))
    elif ground == "uniform":
        lam0 = margin + (1.0 - gap - 2.0 * margin) * (1.0 - rng.random())
    else:
        raise ValueError(f"unknown ground sampling {ground!r}")
    lam1 = lam0 + gap
    if lam1 > 1.0:
        lam0, lam1 = 1.0 - gap, 1.0
    rest = lam1 + (1.0 - lam1) * rng.random(n - 2)
    return Spectrum(np.concatenate(([lam0, lam1], np.sort(rest))))


def _gellmann_index(n: int):
    rows, cols = np.triu_indices(n, 1)
    return rows, cols


def su_generators(n: int) -> list[np.ndarray]:
    """Generalized Gell-Mann matrices, normalized to Tr(G_a G_b) = 2 delta_ab.

    Order: the n(n-1)/2 symmetric matrices, then the antisymmetric ones (both by
    upper-triangle position, row-major), then the n-1 diagonal ones. For n=2 this
    is (sigma_x, sigma_y, sigma_z).
    """
    if n < 2:
        raise InvalidDimension(f"dimension must be >= 2, got {n}")
    rows, cols = _gellmann_index(n)
    out = []
    for j, k in zip(rows, cols):
        g = np.zeros((n, n), dtype=complex)
        g[j, k] = g[k, j] = 1.0
        out.append(g)
    for j, k in zip(rows, cols):
        g = np.zeros((n, n), dtype=complex)
        g[j, k] = -1j
        g[k, j] = 1j
        out.append(g)
    for l in range(1, n):
        out.append(np.diag(_diagonal_generator(n, l)).astype(complex))
    return out


def _diagonal_generator(n: int, l: int) -> np.ndarray:
    d = np.zeros(n)
    d[:l] = 1.0
    d[l] = -float(l)
    return d * np.sqrt(2.0 / (l * (l + 1)))


def generator_combination(params: np.ndarray, n: int) -> np.ndarray:
    """Return sum_m params[m] * G_m without materializing the n^2 - 1 generators."""
    params = np.asarray(params, dtype=float)
    if params.shape != (n * n - 1,):
        raise ShapeError(f"expected {n * n - 1} parameters, got {params.shape}")
    rows, cols = _gellmann_index(n)
    m = rows.size
    h = np.zeros((n, n), dtype=complex)
    h[rows, cols] = params[:m] - 1j * params[m:2 * m]
    h = h + h.conj().T
    # diagonal generators: entry j collects sqrt(2/(l(l+1))) from every l > j
    # and -l*sqrt(2/(l(l+1))) from l == j
    p_diag = params[2 * m:]
    ls = np.arange(1, n)
    scale = p_diag * np.sqrt(2.0 / (ls * (ls + 1)))
    tail = np.concatenate((np.cumsum(scale[::-1])[::-1], [0.0]))
    diag = tail.copy()
    diag[1:] -= ls * scale
    h[np.diag_indices(n)] += diag
    return h


def rotation_from_params(params: np.ndarray, n: int) -> RotationMatrix:
    """V = exp(-i sum_m p_m G_m), via eigendecomposition of the Hermitian exponent."""
    h = generator_combination(params, n)
    w, q = np.linalg.eigh(h)
    v = (q * np.exp(-1j * w)) @ q.conj().T
    return RotationMatrix(v, params=params)


def make_random_rotation(n: int, seed: Seed) -> RotationMatrix:
    """Random rotation with generator weights p_m drawn uniformly from [-pi, pi]."""
    if n < 2:
        raise InvalidDimension(f"dimension must be >= 2, got {n}")
    params = _rng(seed).uniform(-np.pi, np.pi, n * n - 1)
    return rotation_from_params(params, n)


def overlaps_from_state(rotation: RotationMatrix, state: ComputationalState) -> InitialOverlaps:
    """gamma_{0,k} = <lambda_k|phi_0>, with |lambda_k> the k-th column of the rotation."""
    if rotation.n != state.n:
        raise ShapeError(f"rotation is {rotation.n}-dimensional, state is {state.n}")
    gamma = rotation.matrix.conj().T @ state.amplitudes
    # absorb O(1e-16) rounding so the unit-norm invariant is checked on the exact map
    gamma = gamma / np.sqrt(np.sum(np.abs(gamma) ** 2))
    return InitialOverlaps(gamma)


def state_from_overlaps(rotation: RotationMatrix, overlaps: InitialOverlaps) -> ComputationalState:
    if rotation.n != overlaps.n:
        raise ShapeError(f"rotation is {rotation.n}-dimensional, overlaps are {overlaps.n}")
    a = rotation.matrix @ overlaps.gamma0
    return ComputationalState(a / np.sqrt(np.sum(np.abs(a) ** 2)))


def uniform_state(n: int) -> ComputationalState:
    return ComputationalState(np.full(n, 1.0 / np.sqrt(n), dtype=complex))


def uniform_overlaps(n: int) -> InitialOverlaps:
    return InitialOverlaps(np.full(n, 1.0 / np.sqrt(n), dtype=complex))


def random_overlaps(n: int, seed: Seed) -> InitialOverlaps:
    """Direct shortcut: a uniformly random unit vector (normalized complex Gaussian)."""
    rng = _rng(seed)
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return InitialOverlaps(z / np.linalg.norm(z))


def ground_overlaps(n: int) -> InitialOverlaps:
    """Initial state equal to the lowest eigenstate."""
    g = np.zeros(n, dtype=complex)
    g[0] = 1.0
    return InitialOverlaps(g)
