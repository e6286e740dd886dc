"""Dense 2^N construction of the monodromy matrix and everything built on it.

This is the ground truth every closed formula is compared against.  Site 1 is
the leftmost tensor factor and the basis vector ``e_0`` (all spins up) is the
vacuum.  Operators are plain ``numpy`` arrays.
"""
from __future__ import annotations

import itertools
import threading

import numpy as np

from .errors import CapExceeded
from .params import ModelParams, TwistDecomposition, decompose_twist
from .rational import as_set, lambda1, lambda2
from .report import Report, Tally, scale_of

ORACLE_CAP = 10
EIG_CAP = 8

PERM = np.array([[1, 0, 0, 0],
                 [0, 0, 1, 0],
                 [0, 1, 0, 0],
                 [0, 0, 0, 1]], dtype=complex)


def r_matrix(u, v, c=1.0) -> np.ndarray:
    """``R(u, v) = (u - v)/c * I + P`` on ``C^2 (x) C^2``."""
    return (u - v) / c * np.eye(4, dtype=complex) + PERM


def _apply_unit(mat, site, a, b, nsites):
    """Left-multiply ``mat`` by the matrix unit ``E_ab`` acting on ``site``."""
    dim = mat.shape[0]
    left = 2 ** site
    right = 2 ** (nsites - site - 1)
    src = mat.reshape(left, 2, right, dim)
    out = np.zeros_like(src)
    out[:, a] = src[:, b]
    return out.reshape(dim, dim)


def monodromy(u, theta, c=1.0) -> np.ndarray:
    """Return ``T(u)`` as an array of shape ``(2, 2, 2^N, 2^N)``.

    ``T(u) = R_{0N}(u, theta_N) ... R_{01}(u, theta_1)``; the auxiliary entries of
    ``R_{0k}`` are ``(u - theta_k)/c delta_ab + E_ba`` acting on site ``k``.
    """
    theta = as_set(theta)
    n = theta.size
    if n > ORACLE_CAP:
        raise CapExceeded(f"N = {n} exceeds the oracle cap {ORACLE_CAP}")
    dim = 2 ** n
    eye = np.eye(dim, dtype=complex)
    T = np.zeros((2, 2, dim, dim), dtype=complex)
    T[0, 0] = eye
    T[1, 1] = eye
    for k in range(n):
        w = (u - theta[k]) / c
        new = np.empty_like(T)
        for i in range(2):
            for j in range(2):
                acc = w * T[i, j]
                for a in range(2):
                    # [R_0k]_{ia} = w delta_ia + E_ai on site k
                    acc = acc + _apply_unit(T[a, j], k, a, i, n)
                new[i, j] = acc
        T = new
    return T


def vacuum(n) -> np.ndarray:
    e = np.zeros(2 ** n, dtype=complex)
    e[0] = 1.0
    return e


class ChainOracle:
    """Brute-force operators of one model instance.

    Monodromy evaluations are memoised per exact spectral parameter; the memo
    is guarded by a lock so one oracle may be shared between threads.
    """

    def __init__(self, params: ModelParams, twist: TwistDecomposition | None = None):
        if params.N > ORACLE_CAP:
            raise CapExceeded(f"N = {params.N} exceeds the oracle cap {ORACLE_CAP}")
        self.params = params
        self.twist = twist if twist is not None else decompose_twist(params)
        self.N = params.N
        self.dim = 2 ** params.N
        self._A, self._B, self._D = self.twist.matrices()
        self._cache: dict = {}
        self._lock = threading.Lock()

    # -- raw operators ---------------------------------------------------
    def _mono(self, u) -> np.ndarray:
        key = complex(u)
        with self._lock:
            hit = self._cache.get(key)
        if hit is None:
            hit = monodromy(key, self.params.theta, self.params.c)
            with self._lock:
                self._cache[key] = hit
        return hit

    def monodromy_entry(self, i, j, u) -> np.ndarray:
        """``t_ij(u)`` with 1-based ``i, j``."""
        return self._mono(u)[i - 1, j - 1]

    def modified_monodromy(self, u) -> np.ndarray:
        """``A T(u) B`` in the auxiliary space, shape ``(2, 2, dim, dim)``."""
        T = self._mono(u)
        return np.einsum("ik,klab,lj->ijab", self._A, T, self._B)

    def nu_entry(self, i, j, u) -> np.ndarray:
        T = self._mono(u)
        return np.einsum("k,klab,l->ab", self._A[i - 1], T, self._B[:, j - 1])

    def transfer_matrix(self, u) -> np.ndarray:
        """``(kappa_tilde - rho1) nu11 + (kappa - rho2) nu22``."""
        tw = self.twist
        return tw.a_coef * self.nu_entry(1, 1, u) + tw.d_coef * self.nu_entry(2, 2, u)

    def twisted_trace(self, u) -> np.ndarray:
        """``tr(K T(u))`` from the bare monodromy entries."""
        K = self.params.twist_matrix
        T = self._mono(u)
        return np.einsum("ij,jiab->ab", K, T)

    # -- states ----------------------------------------------------------
    def vacuum(self) -> np.ndarray:
        return vacuum(self.N)

    def bethe_vector(self, v, side="ket") -> np.ndarray:
        """``prod nu12(v_i)|0>`` (ket) or ``<0| prod nu21(v_i)`` (bra)."""
        vec = self.vacuum()
        for vi in as_set(v):
            if side == "ket":
                vec = self.nu_entry(1, 2, vi) @ vec
            elif side == "bra":
                vec = vec @ self.nu_entry(2, 1, vi)
            else:
                raise ValueError("side must be 'ket' or 'bra'")
        return vec

    def scalar_product(self, v, u) -> complex:
        """``<0| nu21(v) nu12(u) |0>``."""
        return complex(self.bethe_vector(v, "bra") @ self.bethe_vector(u, "ket"))

    # -- spectra ---------------------------------------------------------
    def spectrum(self, u):
        """Eigenvalues (sorted by real, then imaginary part) and right
        eigenvectors of the transfer matrix at ``u``."""
        if self.N > EIG_CAP:
            raise CapExceeded(f"N = {self.N} exceeds the eigensolver cap {EIG_CAP}")
        w, vecs = np.linalg.eig(self.transfer_matrix(u))
        order = np.lexsort((w.imag, w.real))
        return w[order], vecs[:, order]

    def eigen_residual(self, vec, eigenvalue, z) -> float:
        """``|T(z) vec - eigenvalue vec| / (|vec| max(1, |eigenvalue|))``."""
        r = self.transfer_matrix(z) @ vec - eigenvalue * vec
        nv = np.linalg.norm(vec)
        if nv == 0:
            return np.inf
        return float(np.linalg.norm(r) / (nv * max(1.0, abs(eigenvalue))))


def oracle_scalar_product(params: ModelParams, v, u, twist=None) -> complex:
    return ChainOracle(params, twist).scalar_product(v, u)


def _matrix_error(tally, lhs, rhs):
    lhs, rhs = np.asarray(lhs), np.asarray(rhs)
    err = float(np.max(np.abs(lhs - rhs))) if lhs.size else 0.0
    sc = scale_of(float(np.max(np.abs(lhs))) if lhs.size else 0.0,
                  float(np.max(np.abs(rhs))) if rhs.size else 0.0)
    tally.add_error(err, err / sc)


def _degree_error(fun, degree, radius, probe):
    """Interpolate ``fun`` (matrix valued) with a degree-``degree`` polynomial
    on a circle and compare with a direct evaluation at ``probe``."""
    nodes = radius * np.exp(2j * np.pi * np.arange(degree + 1) / (degree + 1))
    vals = np.array([fun(z) for z in nodes])
    coef = np.fft.fft(vals, axis=0) / (degree + 1)
    coef /= (radius ** np.arange(degree + 1))[:, None, None]
    pred = sum(coef[k] * probe ** k for k in range(degree + 1))
    return pred, fun(probe)


def verify_oracle(params: ModelParams, seed=0, draws=10, tolerance=1e-10,
                  twist=None) -> Report:
    """Self-consistency of the dense construction: RTT relations, vacuum
    actions in both the bare and gauge-transformed forms, polynomial degrees,
    the two transfer-matrix constructions, commutativity, and gauge
    independence of the transfer matrix."""
    from .params import random_rho1

    rng = np.random.default_rng(seed)
    orc = ChainOracle(params, twist)
    tw, th, c, N = orc.twist, params.theta_array, params.c, orc.N
    names = [
        ("r-matrix-invariance", "r-matrix-gl2-invariance"),
        ("rtt", "rtt-relation"),
        ("vacuum-t", "vacuum-actions"),
        ("dual-vacuum-t", "vacuum-actions"),
        ("vacuum-nu", "gauged-vacuum-actions"),
        ("degree-t", "monodromy-polynomial-degree"),
        ("degree-nu", "monodromy-polynomial-degree"),
        ("nu12-commute", "gauged-commutation"),
        ("transfer-two-forms", "transfer-matrix-trace"),
        ("transfer-commute", "transfer-matrix-commuting-family"),
        ("transfer-gauge-independent", "transfer-matrix-gauge"),
    ]
    t = {n: Tally(n, a, tolerance) for n, a in names}
    vac = orc.vacuum()
    span = 1.0 + float(np.max(np.abs(th)))
    alt = ChainOracle(params.with_rho1(random_rho1(params, rng)))
    for _ in range(draws):
        u = complex(rng.normal(), rng.normal()) * span
        v = complex(rng.normal(), rng.normal()) * span
        K = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        R = r_matrix(u, v, c)
        KK = np.kron(K, K)
        _matrix_error(t["r-matrix-invariance"], R @ KK, KK @ R)
        Tu, Tv = orc._mono(u), orc._mono(v)
        guv = c / (u - v)
        for i, j, k, l in itertools.product(range(2), repeat=4):
            lhs = Tu[i, j] @ Tv[k, l] - Tv[k, l] @ Tu[i, j]
            rhs = guv * (Tv[k, j] @ Tu[i, l] - Tu[k, j] @ Tv[i, l])
            _matrix_error(t["rtt"], lhs, rhs)
        l1, l2 = lambda1(u, th, c), lambda2(u, th, c)
        _matrix_error(t["vacuum-t"], Tu[0, 0] @ vac, l1 * vac)
        _matrix_error(t["vacuum-t"], Tu[1, 1] @ vac, l2 * vac)
        _matrix_error(t["vacuum-t"], Tu[1, 0] @ vac, 0 * vac)
        _matrix_error(t["dual-vacuum-t"], vac @ Tu[0, 0], l1 * vac)
        _matrix_error(t["dual-vacuum-t"], vac @ Tu[1, 1], l2 * vac)
        _matrix_error(t["dual-vacuum-t"], vac @ Tu[0, 1], 0 * vac)
        b12 = orc.nu_entry(1, 2, u) @ vac
        _matrix_error(t["vacuum-nu"], orc.nu_entry(1, 1, u) @ vac, l1 * vac + tw.beta2 * b12)
        _matrix_error(t["vacuum-nu"], orc.nu_entry(2, 2, u) @ vac, l2 * vac + tw.beta1 * b12)
        _matrix_error(t["vacuum-nu"], orc.nu_entry(2, 1, u) @ vac,
                      (tw.beta1 * l1 + tw.beta2 * l2) * vac + tw.beta1 * tw.beta2 * b12)
        _matrix_error(t["nu12-commute"],
                      orc.nu_entry(1, 2, u) @ orc.nu_entry(1, 2, v),
                      orc.nu_entry(1, 2, v) @ orc.nu_entry(1, 2, u))
        _matrix_error(t["transfer-two-forms"], orc.transfer_matrix(u), orc.twisted_trace(u))
        _matrix_error(t["transfer-commute"],
                      orc.transfer_matrix(u) @ orc.transfer_matrix(v),
                      orc.transfer_matrix(v) @ orc.transfer_matrix(u))
        _matrix_error(t["transfer-gauge-independent"], orc.transfer_matrix(u),
                      alt.transfer_matrix(u))
    probe = complex(rng.normal(), rng.normal()) * span
    for (i, j), deg in {(1, 1): N, (2, 2): N, (1, 2): N - 1, (2, 1): N - 1}.items():
        pred, direct = _degree_error(lambda z: orc.monodromy_entry(i, j, z), deg, span, probe)
        _matrix_error(t["degree-t"], pred, direct)
    for i, j in itertools.product((1, 2), repeat=2):
        pred, direct = _degree_error(lambda z: orc.nu_entry(i, j, z), N, span, probe)
        _matrix_error(t["degree-nu"], pred, direct)
    return Report("verify-oracle", [x.record() for x in t.values()])
