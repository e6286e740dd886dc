import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mabaxxx.errors import FormUndefined
from mabaxxx.izergin import (conjugate_izergin, izergin_convolution, izergin_sum_over_u,
                             izergin_sum_over_v, modified_izergin, ordinary_izergin,
                             verify_izergin_properties)
from mabaxxx.rational import f, g, prod_kernel
from mabaxxx.report import rel_err

from conftest import cplx


def spread(rng, n):
    """Well separated random points."""
    while True:
        x = 1.5 * cplx(rng, n)
        d = np.abs(x[:, None] - x[None, :]) + np.eye(n) * 9
        if n < 2 or (d.min() > 0.3 and np.abs(d - 1).min() > 0.3):
            return x


def test_initial_conditions(rng):
    z = 0.4 - 0.3j
    assert modified_izergin(cplx(rng, 3), [], z) == 1
    assert abs(modified_izergin([], cplx(rng, 3), z) - (1 - z) ** 3) < 1e-14


def test_one_by_one(rng):
    u, v, z = complex(*rng.normal(size=2)), complex(*rng.normal(size=2)), 0.3 + 0.2j
    for form in ("v", "u"):
        assert abs(modified_izergin([u], [v], z, form=form) - (f(u, v) - z)) < 1e-13
    assert abs(conjugate_izergin([u], [v], z) - (f(v, u) - z)) < 1e-13


def test_forms_agree_3x3(rng):
    x = spread(rng, 6)
    u, v = x[:3], x[3:]
    z = 0.7 + 0.4j
    assert rel_err(modified_izergin(u, v, z), modified_izergin(u, v, z, form="u")) < 1e-10


def test_u_form_undefined_at_z1(rng):
    with pytest.raises(FormUndefined):
        modified_izergin(cplx(rng, 2), cplx(rng, 3), 1.0, form="u")
    # the v-form is fine there
    modified_izergin(cplx(rng, 2), cplx(rng, 3), 1.0)


def test_conjugate_relations(rng):
    x = spread(rng, 5)
    u, v, z = x[:2], x[2:], -0.4 + 0.9j
    kb = conjugate_izergin(u, v, z)
    assert rel_err(kb, (1 - z) * modified_izergin(v, u, z)) < 1e-10
    assert rel_err(kb, modified_izergin(-u, -v, z)) < 1e-10
    sq = spread(rng, 6)
    assert rel_err(conjugate_izergin(sq[:3], sq[3:], z), modified_izergin(sq[3:], sq[:3], z)) < 1e-10


def test_ordinary_form(rng):
    u, v = cplx(rng), cplx(rng)
    assert rel_err(ordinary_izergin([u], [v]), g(u, v)) < 1e-13
    for n in (2, 3):
        x = spread(rng, 2 * n)
        assert rel_err(ordinary_izergin(x[:n], x[n:]), modified_izergin(x[:n], x[n:], 1.0)) < 1e-10


def test_kz_reduction_example(rng):
    u, v, w, z = cplx(rng), cplx(rng), cplx(rng), complex(0.6, -0.2)
    lhs = modified_izergin([u, w - 1], [v, w], z)
    assert rel_err(lhs, -z * modified_izergin([u], [v], z)) < 1e-10


def test_convolution_equal_parameters_gives_f(rng):
    x = spread(rng, 5)
    u, v, z = x[:2], x[2:], 0.8 + 0.1j
    assert rel_err(izergin_convolution(u, v, z, z), prod_kernel("f", u, v)) < 1e-10


def test_residue_example(rng):
    x = spread(rng, 5)
    u, v, z = x[:2], x[2:], 0.5 + 0.5j

    def r(e):
        return e * modified_izergin(np.append(u[:-1], v[-1] + e), v, z)
    lim = (1e-4 * r(1e-5) - 1e-5 * r(1e-4)) / (1e-4 - 1e-5)
    expect = (prod_kernel("f", u[:-1], v[-1]) * prod_kernel("f", v[-1], v[:-1])
              * modified_izergin(u[:-1], v[:-1], z))
    assert rel_err(lim, expect) < 1e-4


def test_partition_sums_match(rng):
    for n, m in [(0, 3), (3, 0), (2, 4), (4, 2), (3, 3)]:
        x = spread(rng, n + m)
        u, v, z = x[:n], x[n:], 0.3 - 0.8j
        k = modified_izergin(u, v, z)
        assert rel_err(k, izergin_sum_over_v(u, v, z)) < 1e-10
        assert rel_err(k, izergin_sum_over_u(u, v, z)) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(0, 4), st.integers(0, 2 ** 32 - 1))
def test_symmetric_in_each_set(n, m, seed):
    rng = np.random.default_rng(seed)
    x = spread(rng, n + m) if n + m else np.zeros(0)
    u, v, z = x[:n], x[n:], complex(rng.normal(), rng.normal())
    k = modified_izergin(u, v, z)
    k2 = modified_izergin(rng.permutation(u), rng.permutation(v), z)
    assert abs(k - k2) <= 1e-12 * max(1, abs(k))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 4), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_polynomial_in_z(n, m, seed):
    rng = np.random.default_rng(seed)
    x = spread(rng, n + m)
    u, v = x[:n], x[n:]
    # degree-m polynomial interpolated exactly on m + 2 roots of unity
    k = m + 2
    nodes = np.exp(2j * np.pi * np.arange(k) / k)
    coef = np.fft.fft([modified_izergin(u, v, z) for z in nodes]) / k
    assert abs(coef[-1]) <= 1e-10 * np.abs(coef).max()
    z = complex(rng.uniform(-1, 1), rng.uniform(-1, 1))
    assert rel_err(np.polyval(coef[::-1], z), modified_izergin(u, v, z)) < 1e-8


def test_property_suite_small():
    rep = verify_izergin_properties(seed=3, max_n=3, draws=5)
    assert rep.passed, list(rep.summary_lines())
    assert len(rep.records) >= 10


def test_property_suite_thread_independent():
    a = verify_izergin_properties(seed=5, max_n=2, draws=3)
    b = verify_izergin_properties(seed=5, max_n=2, draws=3, threads=3)
    assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]


def test_property_suite_rejects_large_sizes():
    with pytest.raises(ValueError):
        verify_izergin_properties(max_n=9)
