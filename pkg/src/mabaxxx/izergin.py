"""Modified Izergin determinants.

``modified_izergin(u, v, z)`` is ``K^{(z)}_{n,m}(u|v)`` with ``n = len(u)``,
``m = len(v)``.  Two determinant forms are provided (an ``m x m`` one built on
``v`` and an ``n x n`` one built on ``u``); they are equal whenever both are
defined, which the property suite checks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import FormUndefined
from .rational import as_set, delta, delta_prime, f, g, h, prod_excluding, prod_kernel
from .report import Report, Tally

__all__ = [
    "modified_izergin",
    "conjugate_izergin",
    "ordinary_izergin",
    "izergin_v_matrix",
    "izergin_sum_over_v",
    "izergin_sum_over_u",
    "izergin_convolution",
    "verify_izergin_properties",
]


def _det(mat) -> complex:
    if mat.shape[0] == 0:
        return 1.0 + 0j
    return complex(np.linalg.det(mat))


def izergin_v_matrix(u, v, c=1.0) -> np.ndarray:
    """The ``z``-independent part of the v-form matrix,
    ``f(ubar, v_j) f(v_j, vbar_j) / h(v_j, v_k)``."""
    u = as_set(u)
    v = as_set(v)
    m = v.size
    if m == 0:
        return np.zeros((0, 0), dtype=complex)
    if u.size:
        fu = np.prod(f(u[:, None], v[None, :], c), axis=0)
    else:
        fu = np.ones(m, dtype=complex)
    fv = prod_excluding("f", v, c)
    return (fu * fv)[:, None] / h(v[:, None], v[None, :], c)


def _v_form(u, v, z, c):
    mat = izergin_v_matrix(u, v, c)
    return _det(mat - z * np.eye(mat.shape[0]))


def _u_form(u, v, z, c):
    u = as_set(u)
    v = as_set(v)
    n, m = u.size, v.size
    if n == 0:
        return (1 - z) ** m
    if v.size:
        fv = np.prod(f(u[:, None], v[None, :], c), axis=1)
    else:
        fv = np.ones(n, dtype=complex)
    fu = prod_excluding("f", u, c)
    mat = np.diag(fv) - z * fu[:, None] / h(u[:, None], u[None, :], c)
    return (1 - z) ** (m - n) * _det(mat)


def modified_izergin(u, v, z, c=1.0, form="v") -> complex:
    """``K^{(z)}_{n,m}(u|v)``.

    Parameters
    ----------
    u, v : sequences of complex
        Argument sets of sizes ``n`` and ``m``.
    z : complex
        Deformation parameter; ``z = 1`` with ``n = m`` is the ordinary
        Izergin determinant.
    form : {"v", "u"}
        Which determinant to evaluate.  The u-form carries ``(1 - z)^(m - n)``
        and is refused at ``z = 1`` when ``m != n``.
    """
    z = complex(z)
    if form == "v":
        return _v_form(u, v, z, c)
    if form == "u":
        if z == 1 and as_set(u).size != as_set(v).size:
            raise FormUndefined("u-form is undefined at z = 1 for n != m")
        return _u_form(u, v, z, c)
    raise ValueError(f"unknown form {form!r}")


def conjugate_izergin(u, v, z, c=1.0, form="v") -> complex:
    """``Kbar^{(z)}_{n,m}(u|v)``, the modified determinant with ``c -> -c``."""
    return modified_izergin(u, v, z, -c, form)


def ordinary_izergin(u, v, c=1.0) -> complex:
    """Izergin determinant through the Cauchy-like ``g/h`` matrix,
    ``h(u, v) Delta'(u) Delta(v) det[g(u_j, v_k) / h(u_j, v_k)]``."""
    u = as_set(u)
    v = as_set(v)
    if u.size != v.size:
        raise ValueError("ordinary Izergin determinant needs #u = #v")
    mat = g(u[:, None], v[None, :], c) / h(u[:, None], v[None, :], c)
    return (prod_kernel("h", u, v, c) * delta_prime(u, c) * delta(v, c) * _det(mat))


# Brute-force partition expansions, vectorised over membership masks.  They
# serve as independent oracles for the determinant forms.


def _masks(n):
    """Boolean membership table of shape ``(2^n, n)``; row ``r`` is the binary
    code of ``r`` (element ``j`` in the first part iff bit ``j`` is clear)."""
    codes = np.arange(2 ** n)[:, None]
    return ((codes >> np.arange(n)[None, :]) & 1).astype(bool)


def _f_table(x, y, c):
    d = np.subtract.outer(x, y)
    safe = np.where(d == 0, 1.0, d)
    return (safe + c) / safe


def _pair_products(masks, table):
    """``prod_{i in I, k in II} table[i, k]`` for every mask (``I`` = clear bits)."""
    first = ~masks
    sel = first[:, :, None] & masks[:, None, :]
    return np.prod(np.where(sel, table[None], 1.0), axis=(1, 2))


def izergin_sum_over_v(u, v, z, c=1.0) -> complex:
    """``sum (-z)^#v_II f(u, v_I) f(v_I, v_II)`` over bipartitions of ``v``."""
    u, v = as_set(u), as_set(v)
    m = v.size
    if m == 0:
        return 1.0 + 0j
    masks = _masks(m)
    fu = np.prod(_f_table(u, v, c), axis=0) if u.size else np.ones(m, dtype=complex)
    t1 = np.prod(np.where(~masks, fu[None, :], 1.0), axis=1)
    t2 = _pair_products(masks, _f_table(v, v, c))
    w = (-complex(z)) ** masks.sum(axis=1)
    return complex(np.sum(w * t1 * t2))


def izergin_sum_over_u(u, v, z, c=1.0) -> complex:
    """``(1-z)^(m-n) sum (-z)^#u_I f(u_II, v) f(u_I, u_II)`` over bipartitions of ``u``."""
    u, v = as_set(u), as_set(v)
    n, m = u.size, v.size
    z = complex(z)
    if n == 0:
        return (1 - z) ** m
    masks = _masks(n)
    fv = np.prod(_f_table(u, v, c), axis=1) if m else np.ones(n, dtype=complex)
    t1 = np.prod(np.where(masks, fv[None, :], 1.0), axis=1)
    t2 = _pair_products(masks, _f_table(u, u, c))
    w = (-z) ** (~masks).sum(axis=1)
    return complex((1 - z) ** (m - n) * np.sum(w * t1 * t2))


def izergin_convolution(u, v, z1, z2, c=1.0) -> complex:
    """``sum z1^#v_II K^{(z2)}(u|v_I) f(v_I, v_II)`` over bipartitions of ``v``;
    every subset determinant is evaluated in one batched call."""
    u, v = as_set(u), as_set(v)
    m = v.size
    if m == 0:
        return 1.0 + 0j
    masks = _masks(m)
    first = ~masks
    fu = np.prod(_f_table(u, v, c), axis=0) if u.size else np.ones(m, dtype=complex)
    fvv = _f_table(v, v, c)
    np.fill_diagonal(fvv, 1.0)
    # f(v_j, v_I \ v_j) for every mask and j
    fin = np.prod(np.where(first[:, None, :], fvv[None], 1.0), axis=2)
    hinv = 1.0 / h(v[:, None], v[None, :], c)
    mats = (fu[None, :, None] * fin[:, :, None]) * hinv[None]
    mats = mats - complex(z2) * np.eye(m)[None]
    keep = first[:, :, None] & first[:, None, :]
    eye = np.broadcast_to(np.eye(m, dtype=complex), mats.shape)
    mats = np.where(keep, mats, eye)
    dets = np.linalg.det(mats)
    weights = complex(z1) ** masks.sum(axis=1) * _pair_products(masks, _f_table(v, v, c))
    return complex(np.sum(weights * dets))


# --------------------------------------------------------------------------
# property suite

EXACT_TOL = 1e-9
LIMIT_TOL = 1e-4
_SEP = 0.25
_SPREAD = 1.5

PROPERTIES = [
    ("form-agreement", "izergin-determinant-forms", EXACT_TOL),
    ("conjugate-relation", "izergin-conjugate", EXACT_TOL),
    ("sign-reversal", "izergin-conjugate", EXACT_TOL),
    ("shift", "izergin-shift", EXACT_TOL),
    ("initial-conditions", "izergin-initial-conditions", EXACT_TOL),
    ("limit-u-infinity", "izergin-limits", LIMIT_TOL),
    ("limit-v-infinity", "izergin-limits", LIMIT_TOL),
    ("reduction-Kz", "izergin-reduction", EXACT_TOL),
    ("sum-over-v", "izergin-partition-sums", EXACT_TOL),
    ("sum-over-u", "izergin-partition-sums", EXACT_TOL),
    ("set-exchange", "izergin-set-exchange", EXACT_TOL),
    ("residue", "izergin-residue", LIMIT_TOL),
    ("paired-limit", "izergin-paired-limit", LIMIT_TOL),
    ("convolution", "izergin-convolution", EXACT_TOL),
    ("permutation-symmetry", "izergin-symmetry", 1e-12),
    ("polynomial-in-z", "izergin-polynomiality", 1e-8),
    ("ordinary-at-z1", "ordinary-izergin", EXACT_TOL),
]


def _separated(values, c):
    d = np.subtract.outer(values, values)
    d = d[~np.eye(values.size, dtype=bool)]
    return d.size == 0 or min(np.abs(d).min(), np.abs(d + c).min(), np.abs(d - c).min()) > _SEP


def _draw(rng, n, m, c, extra=0):
    while True:
        k = n + m + extra
        pts = _SPREAD * (rng.normal(size=k) + 1j * rng.normal(size=k))
        u, v = pts[:n], pts[n:n + m]
        shifted = np.abs(np.subtract.outer(u, v + c))
        if _separated(pts, c) and (shifted.size == 0 or shifted.min() > _SEP):
            return pts[:n], pts[n:n + m], pts[n + m:]


def _draw_z(rng):
    while True:
        z = complex(rng.normal(), rng.normal())
        if 0.3 < abs(z) < 3.0 and abs(1 - z) > 0.5:
            return z


def _z_polynomial(u, v, c, degree, radius):
    """Degree-``degree`` interpolant of ``K^{(z)}(u|v)`` through samples on a
    circle of the given radius (coefficients by discrete Fourier transform)."""
    nodes = radius * np.exp(2j * np.pi * np.arange(degree + 1) / (degree + 1))
    vals = np.array([modified_izergin(u, v, zz, c) for zz in nodes])
    coef = np.fft.fft(vals) / (degree + 1) / radius ** np.arange(degree + 1)
    return lambda z: complex(np.polyval(coef[::-1], z))


def _richardson(fun, e1, e2):
    a, b = fun(e1), fun(e2)
    return (e1 * b - e2 * a) / (e1 - e2)


def _check_pair(n, m, seed, draws, c):
    """Return ``{property: [(lhs, rhs), ...]}`` for one ``(n, m)`` block."""
    rng = np.random.default_rng([seed, n, m])
    out = {name: [] for name, _, _ in PROPERTIES}
    K = modified_izergin
    for _ in range(draws):
        u, v, extra = _draw(rng, n, m, c, extra=2)
        z = _draw_z(rng)
        kv = K(u, v, z, c)
        if not (z == 1 and n != m):
            out["form-agreement"].append((kv, K(u, v, z, c, form="u")))
        kb = conjugate_izergin(u, v, z, c)
        out["conjugate-relation"].append((kb, (1 - z) ** (m - n) * K(v, u, z, c)))
        out["sign-reversal"].append((K(-u, -v, z, c), kb))
        w = complex(rng.normal(), rng.normal())
        out["shift"].append((K(u - w, v, z, c), K(u, v + w, z, c)))
        out["initial-conditions"].append((K(u, [], z, c), 1.0))
        out["initial-conditions"].append((K([], v, z, c), (1 - z) ** m))
        if n:
            R = 1e6
            big = lambda r: K(np.append(u[:-1], r), v, z, c)
            out["limit-u-infinity"].append((2 * big(2 * R) - big(R), K(u[:-1], v, z, c)))
        if m:
            R = 1e6
            big = lambda r: K(u, np.append(v[:-1], r), z, c)
            out["limit-v-infinity"].append((2 * big(2 * R) - big(R), (1 - z) * K(u, v[:-1], z, c)))
        wz = extra[0]
        out["reduction-Kz"].append((K(np.append(u, wz - c), np.append(v, wz), z, c), -z * kv))
        out["sum-over-v"].append((kv, izergin_sum_over_v(u, v, z, c)))
        out["sum-over-u"].append((kv, izergin_sum_over_u(u, v, z, c)))
        out["set-exchange"].append((
            K(u, v + c, z, c),
            (-z) ** n * (1 - z) ** (m - n) / prod_kernel("f", v, u, c) * K(v, u, 1 / z, c)))
        if n and m:
            un, vm = u[:-1], v[:-1]
            pole = (prod_kernel("f", un, v[-1], c) * prod_kernel("f", v[-1], vm, c)
                    * K(un, vm, z, c))
            resid = _richardson(lambda e: e / c * K(np.append(un, v[-1] + e), v, z, c),
                                1e-4, 1e-5)
            out["residue"].append((resid, pole))
        for ell in (1, 2):
            if n + ell > 6 or m + ell > 6:
                continue
            ws = extra[:ell]
            d = rng.normal(size=ell) + 1j * rng.normal(size=ell)

            def ratio(e, ws=ws, d=d):
                wp = ws + e * d
                return (K(np.append(u, wp), np.append(v, ws), z, c)
                        / prod_kernel("f", wp, ws, c))
            out["paired-limit"].append((
                _richardson(ratio, 1e-5, 5e-6),
                prod_kernel("f", u, ws, c) * prod_kernel("f", ws, v, c) * kv))
        z1 = _draw_z(rng)
        out["convolution"].append((izergin_convolution(u, v, z1, z, c), K(u, v, z - z1, c)))
        pu, pv = rng.permutation(n), rng.permutation(m)
        out["permutation-symmetry"].append((K(u[pu], v[pv], z, c), kv))
        out["polynomial-in-z"].append((_z_polynomial(u, v, c, m, max(1.5, abs(z)))(z), kv))
        if n == m:
            out["ordinary-at-z1"].append((K(u, v, 1.0, c), ordinary_izergin(u, v, c)))
    return out


def verify_izergin_properties(seed=0, max_n=6, draws=50, c=1.0, threads=1) -> Report:
    """Check every listed property of the modified Izergin determinant at
    seeded random arguments for all ``0 <= n, m <= max_n``.

    Exact identities are compared at ``1e-9`` relative error; limits (large
    arguments, residues, paired limits) are extrapolated from two evaluation
    points and compared at ``1e-4``.  Draws are seeded per ``(n, m)`` block, so
    the result does not depend on ``threads``.
    """
    if max_n > 8:
        raise ValueError("max_n must be at most 8")
    blocks = [(n, m) for n in range(max_n + 1) for m in range(max_n + 1)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(lambda b: _check_pair(*b, seed, draws, c), blocks))
    else:
        results = [_check_pair(*b, seed, draws, c) for b in blocks]
    tallies = {name: Tally(name, anchor, tol) for name, anchor, tol in PROPERTIES}
    for res in results:
        for name, pairs in res.items():
            for lhs, rhs in pairs:
                tallies[name].add(lhs, rhs)
    rep = Report("verify-izergin", [t.record() for t in tallies.values()])
    rep.data.update(seed=seed, max_n=max_n, draws=draws)
    return rep
