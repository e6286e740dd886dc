import numpy as np
import pytest

from mabaxxx import BetheSystem
from mabaxxx.bethe import FORMS, diagonal_bethe_residual, set_distance, solve_diagonal
from mabaxxx.errors import NoConvergence, PoleAtCoincidence

from conftest import cplx, make_params, solved


def test_single_site_newton_is_fast():
    _, bs, sols, coverage = solved(1)
    assert coverage == 1.0
    again = bs.solve(sols[0].roots + 1e-6)
    assert again.iterations <= 3
    assert bs.solve(sols[0].roots).iterations == 0


def test_two_sites_complete():
    _, _, sols, coverage = solved(2)
    assert coverage == 1.0 and len(sols) == 4
    assert all(s.certified for s in sols)


def test_three_sites_certified():
    _, bs, sols, _ = solved(3)
    assert sols
    for s in sols:
        assert s.certified and s.eigen_residual <= 1e-8
        assert bs.onshell_residual(s.roots) <= 1e-10


def test_eigenvalues_match_dense_spectrum(rng):
    _, bs, sols, _ = solved(2)
    z = cplx(rng)
    spec, _ = bs.oracle.spectrum(z)
    lams = sorted((bs.eigenvalue(z, s.roots) for s in sols), key=lambda x: (x.real, x.imag))
    assert np.allclose(lams, spec, atol=1e-8)


def test_solutions_distinct_up_to_permutation():
    _, _, sols, _ = solved(3)
    for i, a in enumerate(sols):
        for b in sols[i + 1:]:
            assert set_distance(a.roots, b.roots) > 1e-6
    a = sols[0].roots
    assert set_distance(a, a[::-1]) == 0


def test_analytic_jacobian_matches_finite_differences(rng):
    bs = BetheSystem(make_params(3, seed=2))
    u = cplx(rng, 3)
    J = bs.jacobian(u)
    eps = 1e-6
    for k in range(3):
        du = np.zeros(3, dtype=complex)
        du[k] = eps
        fd = (bs.system(u + du) - bs.system(u - du)) / (2 * eps)
        assert np.allclose(J[:, k], fd, rtol=1e-6, atol=1e-6)


def test_all_forms_hold_on_certified_roots():
    for n in (1, 2, 3):
        _, bs, sols, _ = solved(n)
        for s in sols:
            for form in FORMS[:3]:
                assert np.max(np.abs(bs.residual(form, s.roots, normalized=True))) <= 1e-8
            for fam in (bs.theta_h_polynomials(), bs.theta_g_polynomials()):
                assert np.max(np.abs(bs.residual("BE5", s.roots, fam, normalized=True))) <= 1e-8


def test_forms_fail_off_shell(rng):
    bs = BetheSystem(make_params(2))
    u = cplx(rng, 2)
    for form in FORMS[:3]:
        assert np.max(np.abs(bs.residual(form, u, normalized=True))) > 1e-4


def test_interpolating_family_on_shell():
    _, bs, sols, _ = solved(3)
    for s in sols:
        for a_idx in ([], [0], [1, 2]):
            assert np.max(np.abs(bs.interpolating_form_residual(s.roots, a_idx))) <= 1e-8
            fam = bs.interpolating_polynomials(a_idx)
            assert np.max(np.abs(bs.residual("BE5", s.roots, fam, normalized=True))) <= 1e-8


def test_bad_inputs():
    bs = BetheSystem(make_params(2))
    with pytest.raises(ValueError):
        bs.residual("BE99", [0.1, 0.2])
    with pytest.raises(ValueError):
        bs.residual("BE5", [0.1, 0.2])
    with pytest.raises(ValueError):
        bs.solve([0.1])
    with pytest.raises(PoleAtCoincidence):
        bs.residual("BE00", [0.3, 0.3])


def test_no_convergence_keeps_best_iterate():
    bs = BetheSystem(make_params(2))
    with pytest.raises(NoConvergence) as info:
        bs.solve([0.1 + 2j, 3 - 1j], max_iter=1)
    assert info.value.best is not None


def test_find_all_independent_of_threads():
    bs = BetheSystem(make_params(2))
    a, _ = bs.find_all_solutions(seed=3, starts=40)
    b, _ = bs.find_all_solutions(seed=3, starts=40, threads=4)
    assert [s.to_dict() for s in a] == [s.to_dict() for s in b]


def test_diagonal_solver():
    theta = np.array([0.2 + 0.1j, -0.7 + 0.4j])
    roots = solve_diagonal(1, theta, 1.3, 0.6 - 0.2j)
    assert 1 <= len(roots) <= 2
    for r in roots:
        assert np.max(np.abs(diagonal_bethe_residual(r, theta, 1.3, 0.6 - 0.2j))) < 1e-9
