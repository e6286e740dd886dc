import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mabaxxx.errors import CapExceeded, PoleAtCoincidence
from mabaxxx.rational import (delta, delta_prime, enumerate_partitions, f, g, h, lambda1,
                              lambda2, omega_inverse, omega_inverse_check, omega_matrix,
                              prod_kernel, verify_sum_identities)

from conftest import cplx

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
points = st.builds(complex, finite, finite)


def test_kernel_values_at_integers():
    assert g(2, 1) == 1
    assert f(2, 1) == 2
    assert h(2, 1) == 2


def test_pole_guard():
    with pytest.raises(PoleAtCoincidence):
        g(1.0, 1.0)
    with pytest.raises(PoleAtCoincidence):
        f(0.3, 0.3 + 1e-15)
    assert h(0.3, 0.3) == 1


@settings(max_examples=50, deadline=None)
@given(points, points)
def test_kernel_shift_identities(u, v):
    if abs(u - v) < 1e-3 or abs(u - v - 1) < 1e-3:
        return
    assert abs(h(u, v + 1) * g(u, v) - 1) < 1e-10
    assert abs(f(u, v + 1) * f(v, u) - 1) < 1e-10 * max(1, abs(f(u, v + 1)))


@settings(max_examples=50, deadline=None)
@given(points, points, st.sampled_from([g, f, h]))
def test_kernel_reflection(u, v, kern):
    if abs(u - v) < 1e-3:
        return
    a, b = kern(-u, -v), kern(v, u)
    assert abs(a - b) <= 1e-12 * max(1, abs(a))
    a, b = kern(u - 1, v), kern(u, v + 1)
    assert abs(a - b) <= 1e-12 * max(1, abs(a))


def test_prod_kernel_conventions(rng):
    assert prod_kernel("f", 0.3, []) == 1
    assert prod_kernel("f", [0.1], [0.7]) == f(0.1, 0.7)
    u, v = cplx(rng, 2), cplx(rng, 2)
    direct = f(u[0], v[0]) * f(u[0], v[1]) * f(u[1], v[0]) * f(u[1], v[1])
    assert abs(prod_kernel("f", u, v) - direct) < 1e-12 * abs(direct)
    perm = prod_kernel("g", u[::-1], v[::-1])
    assert abs(prod_kernel("g", u, v) - perm) < 1e-12 * abs(perm)


def test_vacuum_eigenvalues(rng):
    th = cplx(rng, 4)
    for t in th:
        assert lambda2(t, th) == 0
        assert lambda1(t - 1, th) == 0
    for z in cplx(rng, 10):
        assert abs(lambda1(z, th) / lambda2(z, th) - prod_kernel("f", z, th)) < 1e-10


def test_delta_products(rng):
    assert delta([0.4]) == 1 and delta_prime([0.4]) == 1
    v = cplx(rng, 2)
    assert delta(v) == g(v[1], v[0])
    assert delta_prime(v) == g(v[0], v[1])
    w = cplx(rng, 4)
    expect = np.prod([g(w[k], w[j]) * g(w[j], w[k]) for j, k in itertools.combinations(range(4), 2)])
    assert abs(delta(w) * delta_prime(w) - expect) < 1e-10 * abs(expect)


def test_partition_counts():
    assert len(list(enumerate_partitions([1, 2], 2))) == 4
    assert len(list(enumerate_partitions([1, 2, 3, 4, 5], 2, sizes=[1, None]))) == 5
    parts = list(enumerate_partitions([1, 2, 3], 4))
    assert len(parts) == 64
    assert len({p.code for p in parts}) == 64
    codes = [p.code for p in parts]
    assert codes == sorted(codes)
    for p in parts:
        idx = sorted(i for part in p.parts for i in part)
        assert idx == [0, 1, 2]


def test_partition_cap():
    with pytest.raises(CapExceeded):
        list(enumerate_partitions(range(15), 2))


def test_sum_identities(rng):
    u, v, th = cplx(rng, 3), cplx(rng, 3), cplx(rng, 3)
    for k in range(3):
        rep = verify_sum_identities(u, v, k, theta=th)
        assert rep.passed, list(rep.summary_lines())
    rep = verify_sum_identities(u, u + 0.37 - 0.2j, 1)
    assert rep.passed


def test_sum_identity_single_element():
    u, v = np.array([0.3 + 0.1j]), np.array([-0.2 + 0.5j])
    # gamma = 1/g(u, v), so g(v, u) * gamma = -1
    rep = verify_sum_identities(u, v, 0)
    assert rep["sum-g"].max_rel_err < 1e-14


def test_omega(rng):
    assert omega_matrix([0.5]).tolist() == [[1]]
    x = cplx(rng, 4)
    err = np.max(np.abs(omega_matrix(x) @ omega_inverse(x) - np.eye(4)))
    assert err <= 1e-10
    assert np.allclose(omega_matrix(cplx(rng, 5)).sum(axis=1), 1, atol=1e-10)
    assert omega_inverse_check(x).passed
