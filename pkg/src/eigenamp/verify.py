"""The ``verify`` suite: every invariant check, cross-engine oracle and falsifier in one pass."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import FixedPointFound, InternalError, NumericalDegradation
from .proofcheck import Violation, check_run_invariants, composite_spectrum, falsify_nontrivial_fixed_points
from .spectral import RunConfig, initial_state, iterate, run_until
from .spectrum import (
    InitialOverlaps,
    RotationMatrix,
    Spectrum,
    make_random_rotation,
    make_random_spectrum,
    random_overlaps,
)
from .statevector import (
    CompositeState,
    EvolutionOperator,
    build_initial_composite,
    eigen_blocks,
    expectation_u,
    fractions_of,
    measure_ancilla,
    step_closed_form,
    step_explicit,
)


@dataclass
class VerifyReport:
    violations: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations], "summary": self.summary}


def random_case(rng: np.random.Generator, n_max: int = 32):
    """Random (spectrum, overlaps, rotation, tau, epsilon) for invariant sweeps."""
    n = int(rng.integers(2, n_max + 1))
    gap = float(rng.uniform(0.01, 0.3))
    ground = "min" if rng.random() < 0.5 else "uniform"
    seed = [int(s) for s in rng.integers(0, 2**63, 2)]
    spectrum = make_random_spectrum(n, gap, seed=seed[0], ground=ground)
    overlaps = random_overlaps(n, seed=seed[1])
    rotation = make_random_rotation(n, seed=seed[1] ^ 0x5A5A) if n <= 16 else None
    tau = float(rng.uniform(0.2, 1.0))
    eps = float(rng.uniform(0.005, 0.2))
    return spectrum, overlaps, rotation, tau, eps


def u_diagonal(op: EvolutionOperator) -> np.ndarray:
    """Diagonal of U in the composite eigenbasis, read off by applying U to basis vectors."""
    basis = np.eye(2 * op.n, dtype=complex)
    return np.array([op.apply(e)[j] for j, e in enumerate(basis)])


def composite_structure_violations(
    psi: CompositeState, op: EvolutionOperator, overlaps: InitialOverlaps, step: int
) -> list[Violation]:
    """Ancilla branch probabilities, phase of W and the conjugate-partner block structure."""
    out = []
    for branch in (0, 1):
        p, _ = measure_ancilla(psi, branch)
        if abs(p - 0.5) > 1e-10:
            out.append(Violation("ancilla_probability", step, abs(p - 0.5)))
    w = expectation_u(psi, op)
    dphi = abs(math.atan2(w.imag, w.real) - math.pi / 4)
    if dphi > 1e-9:
        out.append(Violation("w_phase", step, dphi))
    b0, b1 = eigen_blocks(psi, op.rotation)
    g0c = overlaps.gamma0.conj()
    dev = float(np.max(np.abs(b1 * g0c - np.conj(b0 * g0c))))
    if dev > 1e-9:
        out.append(Violation("conjugate_blocks", step, dev))
    norm_dev = abs(float(np.vdot(psi.amplitudes, psi.amplitudes).real) - 1.0)
    if norm_dev > 1e-10:
        out.append(Violation("composite_norm", step, norm_dev))
    return out


def cross_engine_deviation(
    spectrum: Spectrum, overlaps: InitialOverlaps, tau: float, steps: int, rotation: RotationMatrix | None = None
) -> float:
    """Max over iterations of the fraction mismatch between dense, closed-form and recursive steps."""
    op = EvolutionOperator(spectrum, tau, rotation)
    psi0 = build_initial_composite(overlaps, rotation)
    dense = [psi0]
    closed = psi0
    amp = initial_state(spectrum, overlaps, tau)
    worst = 0.0
    for _ in range(steps):
        dense.append(step_explicit(dense, op))
        closed = step_closed_form(closed, op)
        amp = iterate(amp, spectrum, overlaps, tau)
        fd = fractions_of(dense[-1], op.rotation)
        fc = fractions_of(closed, op.rotation)
        worst = max(worst, float(np.max(np.abs(fd - fc))), float(np.max(np.abs(fc - amp.fractions))),
                    float(np.max(np.abs(fd - amp.fractions))))
    return worst


def run_verification(
    runs: int = 100,
    seed: int = 0,
    samples: int = 100_000,
    cross_instances: int = 20,
    cross_n: int = 16,
    cross_steps: int = 50,
    statevector_steps: int = 40,
    max_iter: int = 50_000,
) -> VerifyReport:
    rng = np.random.default_rng(seed)
    report = VerifyReport()
    v = report.violations

    converged = 0
    for _ in range(runs):
        spectrum, overlaps, rotation, tau, eps = random_case(rng)
        try:
            res = run_until(spectrum, overlaps, RunConfig(tau=tau, epsilon=eps, max_iter=max_iter))
        except NumericalDegradation as exc:
            v.append(Violation("norm_drift", -1, float("nan")))
            report.summary.setdefault("degradation", []).append(str(exc))
            continue
        converged += res.converged
        v.extend(check_run_invariants(res, spectrum, tau))
        try:
            cs = composite_spectrum(spectrum, tau)
        except InternalError:
            v.append(Violation("composite_ordering", -1, 1.0))
        else:
            op = EvolutionOperator(spectrum, tau)
            dev = float(np.max(np.abs(cs.phases() - u_diagonal(op))))
            if dev > 1e-12:
                v.append(Violation("composite_phases", -1, dev))
        if spectrum.n <= 16:
            op = EvolutionOperator(spectrum, tau, rotation)
            psi = build_initial_composite(overlaps, rotation)
            for i in range(min(res.n_c, statevector_steps) + 1):
                v.extend(composite_structure_violations(psi, op, overlaps, i))
                psi = step_closed_form(psi, op)
    report.summary["spectral_runs"] = runs
    report.summary["spectral_converged"] = converged

    worst = 0.0
    for _ in range(cross_instances):
        seed_pair = [int(s) for s in rng.integers(0, 2**63, 2)]
        spectrum = make_random_spectrum(cross_n, float(rng.uniform(0.02, 0.3)), seed=seed_pair[0])
        overlaps = random_overlaps(cross_n, seed=seed_pair[1])
        rotation = make_random_rotation(cross_n, seed=seed_pair[1] ^ 0x5A5A)
        worst = max(worst, cross_engine_deviation(spectrum, overlaps, float(rng.uniform(0.2, 1.0)),
                                                  cross_steps, rotation))
    report.summary["cross_engine_max_deviation"] = worst
    if worst > 1e-9:
        v.append(Violation("cross_engine_equivalence", cross_steps, worst))

    try:
        report.summary["fixed_point_min_residual"] = falsify_nontrivial_fixed_points(samples, seed)
    except FixedPointFound as exc:
        v.append(Violation("fixed_point_uniqueness", -1, 0.0))
        report.summary["fixed_point_error"] = str(exc)
    report.summary["violation_count"] = len(v)
    return report
