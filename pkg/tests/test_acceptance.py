"""End-to-end acceptance criteria, each at its stated tolerance.

Every test carries a ``criterion`` marker; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the session. The optional x = 3
scaling sweep runs only when ``EIGENAMP_FULL=1``.
"""
import os
import time

import numpy as np
import pytest

from eigenamp.dlac import dlac_run
from eigenamp.harness import SweepSpec, sweep_eps, sweep_n
from eigenamp.proofcheck import (
    FixedPointCandidate,
    check_run_invariants,
    composite_spectrum,
    falsify_nontrivial_fixed_points,
    first_boundary_crossing,
    fixed_point_residual,
    nc_upper_bound,
)
from eigenamp.spectral import RunConfig, run_until
from eigenamp.spectrum import Spectrum, make_ladder_spectrum, make_random_spectrum, random_overlaps, uniform_overlaps
from eigenamp.statevector import EvolutionOperator
from eigenamp.verify import cross_engine_deviation, run_verification, u_diagonal

N_LADDER = 10_000
EPS = 0.01


@pytest.fixture(scope="module")
def ladder():
    spectrum = make_ladder_spectrum(N_LADDER, 0.5 / N_LADDER)
    overlaps = uniform_overlaps(N_LADDER)
    t0 = time.perf_counter()
    result = run_until(spectrum, overlaps, RunConfig(tau=1.0, epsilon=EPS, max_iter=10_000_000))
    return spectrum, overlaps, result, time.perf_counter() - t0


@pytest.mark.criterion("1", "ladder N=1e4: f(l0) from 1e-4, monotone, >= 0.99; f(l1) < 1e-4; < 60 s")
def test_criterion_1_ladder_reproduction(ladder):
    _, _, res, elapsed = ladder
    f0, f1 = res.trace.f_lambda0, res.trace.f_lambda1
    print(f"n_c={res.n_c} elapsed={elapsed:.1f}s f0_final={f0[-1]:.6f} f1_final={f1[-1]:.3e}")
    assert res.converged
    assert f0[0] == pytest.approx(1e-4, rel=1e-12)
    assert np.all(np.diff(f0) >= 0.0)
    assert f0[-1] >= 0.99
    assert elapsed < 60.0
    assert f1[-1] < 1e-4, f"f(lambda_1) at termination is {f1[-1]:.3e}"


@pytest.mark.criterion("2", "ladder run: |g0|^2 >= 1 always, |g1|^2 < 1 past the xi crossing, zero violations")
def test_criterion_2_gamma_moduli(ladder):
    spectrum, _, res, _ = ladder
    tr = res.trace
    assert np.all(tr.gsq_0 >= 1.0)
    start = first_boundary_crossing(res, spectrum.eigenvalues[1])
    assert start is not None
    assert np.all(tr.gsq_1[start:] < 1.0)
    assert check_run_invariants(res, spectrum, 1.0) == []


@pytest.mark.criterion("3", "DLAC from the same initial state also reaches f(l0) >= 0.99; both traces monotone")
def test_criterion_3_dlac(ladder):
    spectrum, overlaps, res, _ = ladder
    cool = dlac_run(spectrum, overlaps.weights, RunConfig(tau=1.0, epsilon=EPS, max_iter=10_000_000))
    print(f"amplifier n_c={res.n_c} dlac n_c={cool.n_c}")
    assert cool.converged and res.converged
    assert cool.trace.f_lambda0[0] == pytest.approx(res.trace.f_lambda0[0], rel=1e-12)
    assert cool.trace.f_lambda0[-1] >= 0.99
    assert np.all(np.diff(cool.trace.f_lambda0) >= 0.0)
    assert np.all(np.diff(res.trace.f_lambda0) >= 0.0)


def _scaling(x: float, n_values=(10, 16, 25, 40, 63, 100)):
    spec = SweepSpec(mode="sweep-n", gap_exponent=x, n_values=n_values, epsilon=EPS, trials=100, master_seed=2024)
    table = sweep_n(spec)
    print(f"x={x}: A={table.fit.slope:.4f} B={table.fit.intercept:.4f} r2={table.fit.r_squared:.4f}")
    for p in table.points:
        assert p.trials_converged == p.trials_total
    return table.fit


@pytest.mark.criterion("4", "n_c vs N slope within x +/- 0.2 for x = 1, 2; < 30 min")
def test_criterion_4_n_scaling():
    t0 = time.perf_counter()
    slopes = {x: _scaling(x).slope for x in (1.0, 2.0)}
    elapsed = time.perf_counter() - t0
    print(f"slopes={slopes} elapsed={elapsed:.0f}s")
    assert elapsed < 1800
    for x, a in slopes.items():
        assert x - 0.2 <= a <= x + 0.2, f"x={x}: slope {a:.4f}"


@pytest.mark.criterion("4 x3", "optional x = 3 sweep, slope within 3 +/- 0.2 (EIGENAMP_FULL=1)")
@pytest.mark.skipif(os.environ.get("EIGENAMP_FULL") != "1", reason="set EIGENAMP_FULL=1 for the x = 3 sweep")
def test_criterion_4_x3():
    a = _scaling(3.0, n_values=(10, 16, 25, 40)).slope
    assert 2.8 <= a <= 3.2


@pytest.mark.criterion("5", "n_c vs epsilon slope in [-0.24, -0.14] for N = 10, 50; < 15 min")
def test_criterion_5_eps_scaling():
    t0 = time.perf_counter()
    slopes = {}
    for n in (10, 50):
        spec = SweepSpec(mode="sweep-eps", n=n, gap=1.0 / n, trials=100, master_seed=2025)
        table = sweep_eps(spec)
        assert all(p.trials_converged == p.trials_total for p in table.points)
        slopes[n] = table.fit.slope
        print(f"N={n}: A={table.fit.slope:.4f} B={table.fit.intercept:.4f}")
    elapsed = time.perf_counter() - t0
    assert elapsed < 900
    for n, a in slopes.items():
        assert -0.24 <= a <= -0.14, f"N={n}: slope {a:.4f}"


def _small_level_spectrum(rng: np.random.Generator) -> Spectrum:
    n = int(rng.integers(2, 65))
    lam0 = rng.uniform(0.001, 0.02)
    lam1 = lam0 + rng.uniform(0.005, 0.03)
    rest = np.sort(lam1 + (1.0 - lam1) * (1.0 - rng.random(n - 2)))
    return Spectrum(np.concatenate(([lam0, lam1], rest)))


@pytest.mark.criterion("6", "n_c <= (2/pi)/(tau D eps) over >= 100 runs with lambda_1 <= 0.05")
def test_criterion_6_upper_bound():
    rng = np.random.default_rng(6)
    worst = 0.0
    for trial in range(120):
        spectrum = _small_level_spectrum(rng)
        assert spectrum.eigenvalues[1] <= 0.05
        tau = float(rng.uniform(0.5, 1.0))
        eps = float(rng.choice([0.003, 0.01, 0.03, 0.1]))
        overlaps = random_overlaps(spectrum.n, seed=(6, trial))
        res = run_until(spectrum, overlaps, RunConfig(tau=tau, epsilon=eps), record_trace=False)
        bound = nc_upper_bound(tau, spectrum.gap, eps)
        assert res.converged and res.n_c <= bound, f"trial {trial}: n_c={res.n_c} bound={bound:.1f}"
        worst = max(worst, res.n_c / bound)
    print(f"max n_c / bound = {worst:.4f}")


@pytest.mark.criterion("7", "dense, closed-form and recursive fractions agree within 1e-9 (20 x 50 steps); < 2 min")
def test_criterion_7_cross_engine():
    from eigenamp.spectrum import make_random_rotation

    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = 0.0
    for inst in range(20):
        n = 16 if inst % 2 == 0 else int(rng.integers(2, 32))
        spectrum = make_random_spectrum(n, float(rng.uniform(0.02, 0.3)), seed=(7, inst))
        overlaps = random_overlaps(n, seed=(7, inst, 1))
        rotation = make_random_rotation(n, seed=(7, inst, 2))
        worst = max(worst, cross_engine_deviation(spectrum, overlaps, float(rng.uniform(0.2, 1.0)), 50, rotation))
    elapsed = time.perf_counter() - t0
    print(f"max fraction deviation {worst:.3e} elapsed={elapsed:.1f}s")
    assert worst < 1e-9
    assert elapsed < 120


@pytest.mark.criterion("8", "verify suite: zero violations over >= 100 randomized runs")
def test_criterion_8_verify_suite():
    report = run_verification(runs=100, seed=8, samples=20_000)
    print(report.summary)
    assert report.summary["spectral_runs"] >= 100
    assert report.violations == []


@pytest.mark.criterion("9", "1e5 nontrivial fixed-point candidates: min residual > 1e-7; trivial residual 0")
def test_criterion_9_fixed_points():
    best = falsify_nontrivial_fixed_points(100_000, seed=9, min_gap=1e-3)
    print(f"min residual {best:.3e}")
    assert best > 1e-7
    assert fixed_point_residual(FixedPointCandidate([0.37], [1.0])) == 0.0


@pytest.mark.criterion("10", "composite energies ordered for every generated spectrum; phases match U within 1e-12")
def test_criterion_10_composite_spectrum():
    rng = np.random.default_rng(10)
    worst = 0.0
    for trial in range(200):
        n = int(rng.integers(2, 40))
        tau = float(rng.uniform(0.1, 1.0))
        if trial % 4 == 0:
            spectrum = make_ladder_spectrum(n, float(rng.uniform(1e-4, 1.0 / n)))
        else:
            gap = float(rng.uniform(1e-3, 0.5))
            spectrum = make_random_spectrum(n, gap, seed=(10, trial), ground="min" if trial % 2 else "uniform")
        cs = composite_spectrum(spectrum, tau)
        e = cs.energies
        assert e[0] < e[1] and e[-2] < e[-1] and np.all(np.diff(e) >= 0.0)
        worst = max(worst, float(np.max(np.abs(cs.phases() - u_diagonal(EvolutionOperator(spectrum, tau))))))
    print(f"max phase mismatch {worst:.3e}")
    assert worst <= 1e-12


@pytest.mark.criterion("11", "same master seed gives bit-identical sweep CSV at any worker count")
def test_criterion_11_determinism():
    spec_n = SweepSpec(mode="sweep-n", n_values=(10, 16, 25, 40), trials=20, master_seed=11)
    spec_e = SweepSpec(mode="sweep-eps", n=12, trials=20, master_seed=11)
    for spec, run in ((spec_n, sweep_n), (spec_e, sweep_eps)):
        tables = [run(spec, workers=w).to_csv() for w in (1, 2, 4, 1)]
        assert len(set(tables)) == 1
