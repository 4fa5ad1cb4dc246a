import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st

from eigenamp.proofcheck import FixedPointCandidate, check_run_invariants, composite_spectrum, fixed_point_residual
from eigenamp.spectral import RunConfig, gamma_sq_from_delta, gamma_step, run_until
from eigenamp.spectrum import (
    make_random_rotation,
    make_random_spectrum,
    overlaps_from_state,
    random_overlaps,
    state_from_overlaps,
    su_generators,
)
from eigenamp.statevector import EvolutionOperator, build_initial_composite, fractions_of, step_closed_form

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(2, 24)
taus = st.floats(0.1, 1.0)


@given(n=dims, gap=st.floats(0.001, 0.5), seed=seeds, ground=st.sampled_from(["min", "uniform"]))
def test_random_spectrum_shape(n, gap, seed, ground):
    assume(gap < 1 - 2 / (10 * n))
    lam = make_random_spectrum(n, gap, seed=seed, ground=ground).eigenvalues
    assert lam.size == n
    assert 0 < lam[0] and lam[-1] <= 1
    assert np.all(np.diff(lam) >= 0)
    assert abs(lam[1] - lam[0] - gap) < 1e-12


@given(n=st.integers(2, 6))
def test_generators_trace_orthogonal(n):
    gens = su_generators(n)
    gram = np.array([[np.trace(a @ b).real for b in gens] for a in gens])
    np.testing.assert_allclose(gram, 2 * np.eye(n * n - 1), atol=1e-12)


@given(n=st.integers(2, 10), seed=seeds)
def test_overlap_round_trip(n, seed):
    rot = make_random_rotation(n, seed=seed)
    g = random_overlaps(n, seed=seed + 1)
    back = overlaps_from_state(rot, state_from_overlaps(rot, g))
    np.testing.assert_allclose(back.gamma0, g.gamma0, atol=1e-10)


@given(w=st.floats(2**-0.5, 1.0), lam=st.floats(0.0, 1.0), tau=taus)
def test_modulus_identity(w, lam, tau):
    assert abs(abs(gamma_step(w, lam, tau)) ** 2 - gamma_sq_from_delta(w, lam, tau)) < 1e-12


@given(n=dims, seed=seeds, tau=taus, eps=st.floats(0.005, 0.3))
def test_recursion_invariants(n, seed, tau, eps):
    lam = make_random_spectrum(n, 0.1, seed=seed)
    res = run_until(lam, random_overlaps(n, seed=seed), RunConfig(tau=tau, epsilon=eps, max_iter=200_000))
    assert res.converged
    assert check_run_invariants(res, lam, tau) == []


@given(n=st.integers(2, 8), seed=seeds, tau=taus)
def test_closed_form_step_preserves_norm(n, seed, tau):
    lam = make_random_spectrum(n, 0.1, seed=seed)
    rot = make_random_rotation(n, seed=seed)
    psi = build_initial_composite(random_overlaps(n, seed=seed), rot)
    out = step_closed_form(psi, EvolutionOperator(lam, tau, rot))
    assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-10
    assert fractions_of(out, rot)[0] >= fractions_of(psi, rot)[0] - 1e-12


@given(m=st.integers(1, 6), seed=seeds, tau=taus)
def test_residual_permutation_and_weight_invariant(m, seed, tau):
    rng = np.random.default_rng(seed)
    lam = rng.uniform(0.01, 1.0, m)
    u = rng.dirichlet(np.ones(m))
    v = rng.dirichlet(np.ones(m))
    perm = rng.permutation(m)
    a = fixed_point_residual(FixedPointCandidate(lam, u, tau))
    b = fixed_point_residual(FixedPointCandidate(lam[perm], v[perm] / v[perm].sum(), tau))
    assert abs(a - b) < 1e-14


@given(n=dims, gap=st.floats(0.001, 0.5), seed=seeds, tau=taus)
def test_composite_ordering(n, gap, seed, tau):
    assume(gap < 1 - 2 / (10 * n))
    cs = composite_spectrum(make_random_spectrum(n, gap, seed=seed), tau)
    e = cs.energies
    assert e[0] < e[1] and e[-2] < e[-1] and np.all(np.diff(e) >= 0)
