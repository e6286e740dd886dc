"""Inhomogeneous modified Bethe equations: evaluation, solving, certification.

The solver runs Newton's method on ``Y(u_k | u) = 0`` with the closed-form
Jacobian.  Solutions are certified by checking that the dense Bethe vector is
an eigenvector of the transfer matrix with the predicted eigenvalue.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .chain_oracle import ORACLE_CAP, ChainOracle
from .errors import NoConvergence, PoleAtCoincidence, SingularJacobian
from .params import ModelParams, TwistDecomposition, decompose_twist
from .rational import (POLE_GUARD, as_set, enumerate_partitions, f, g, h,
                       lambda1, lambda2, omega_matrix, prod_excluding, prod_kernel)

ONSHELL_TOL = 1e-10
CERT_TOL = 1e-8
FORMS = ("BE00", "BE7", "BEj", "BE5")


def _prod_and_derivative(factors, dfactors):
    """Product of ``factors`` and its derivative given each factor's derivative.

    Uses prefix/suffix products so a single vanishing factor is harmless.
    """
    n = len(factors)
    if n == 0:
        return 1.0 + 0j, 0j
    pre = np.ones(n + 1, dtype=complex)
    suf = np.ones(n + 1, dtype=complex)
    for i in range(n):
        pre[i + 1] = pre[i] * factors[i]
        suf[n - 1 - i] = suf[n - i] * factors[n - 1 - i]
    deriv = np.sum(dfactors * pre[:-1] * suf[1:])
    return pre[-1], complex(deriv)


@dataclass
class BetheSolution:
    roots: np.ndarray
    residual: float
    iterations: int
    eigenvalue_samples: list = field(default_factory=list)
    certified: bool = False
    eigen_residual: float = math.inf

    def sorted_roots(self):
        return np.array(sorted(self.roots, key=lambda x: (round(x.real, 9), round(x.imag, 9))))

    def to_dict(self):
        return {
            "roots": [[float(r.real), float(r.imag)] for r in self.sorted_roots()],
            "residual": float(self.residual),
            "iterations": int(self.iterations),
            "certified": bool(self.certified),
            "eigen_residual": float(self.eigen_residual),
            "eigenvalue_samples": [
                {"z": [float(z.real), float(z.imag)], "Lambda": [float(L.real), float(L.imag)]}
                for z, L in self.eigenvalue_samples
            ],
        }


class BetheSystem:
    """Bethe-equation machinery bound to one model and gauge."""

    def __init__(self, params: ModelParams, twist: TwistDecomposition | None = None):
        self.params = params
        self.twist = twist if twist is not None else decompose_twist(params)
        self.theta = params.theta_array
        self.c = params.c
        self.N = params.N
        self._oracle = None

    @property
    def oracle(self) -> ChainOracle:
        if self._oracle is None:
            self._oracle = ChainOracle(self.params, self.twist)
        return self._oracle

    # -- eigenvalue and Y -------------------------------------------------
    def _y_terms(self, z, u):
        tw, th, c = self.twist, self.theta, self.c
        u = as_set(u)
        t1 = (-1) ** self.N * tw.a_coef * prod_kernel("f", z, th, c) * prod_kernel("h", u, z, c)
        t2 = tw.d_coef * prod_kernel("h", z, u, c)
        t3 = (tw.rho1 + tw.rho2) * lambda1(z, th, c)
        return t1, t2, t3

    def Y(self, z, u) -> complex:
        """``Lambda(z|u) / (lambda2(z) g(z, u))`` in its explicit polynomial-ratio form."""
        return complex(sum(self._y_terms(z, u)))

    def y_scale(self, z, u) -> float:
        return max(1.0, *(abs(t) for t in self._y_terms(z, u)))

    def eigenvalue(self, z, u) -> complex:
        """Transfer-matrix eigenvalue ``Lambda(z|u)``.

        At ``z`` equal to one of the roots the pole of ``g(z, u)`` cancels
        against the zero of ``Y``; that point is evaluated through the limit
        ``lambda2 g(u_j, ubar_j) c dY/dz``.
        """
        tw, th, c = self.twist, self.theta, self.c
        u = as_set(u)
        z = complex(z)
        close = np.abs(u - z) < POLE_GUARD * max(1.0, abs(z)) * 1e3
        if np.any(close):
            j = int(np.argmax(close))
            rest = np.delete(u, j)
            return complex(lambda2(z, th, c) * prod_kernel("g", z, rest, c) * c * self.dY_dz(z, u))
        return complex(tw.a_coef * lambda1(z, th, c) * prod_kernel("f", u, z, c)
                       + tw.d_coef * lambda2(z, th, c) * prod_kernel("f", z, u, c)
                       + (tw.rho1 + tw.rho2) * lambda1(z, th, c) * lambda2(z, th, c)
                       * prod_kernel("g", z, u, c))

    def dY_dz(self, z, u) -> complex:
        """Derivative of ``Y(z|u)`` in ``z`` at fixed ``u``."""
        tw, th, c = self.twist, self.theta, self.c
        u = as_set(u)
        z = complex(z)
        # term 1: f(z, theta) h(u, z)
        ft = (z - th + c) / (z - th)
        dft = -c / (z - th) ** 2
        hu = (u - z + c) / c
        dhu = -np.ones_like(u) / c
        p1, d1 = _prod_and_derivative(np.concatenate([ft, hu]), np.concatenate([dft, dhu]))
        hz = (z - u + c) / c
        p2, d2 = _prod_and_derivative(hz, np.ones_like(u) / c)
        lt = (z - th + c) / c
        p3, d3 = _prod_and_derivative(lt, np.ones_like(th) / c)
        return complex((-1) ** self.N * tw.a_coef * d1 + tw.d_coef * d2
                       + (tw.rho1 + tw.rho2) * d3)

    def dY_du(self, z, u) -> np.ndarray:
        """Partial derivatives ``dY(z|u)/du_j`` at fixed ``z``."""
        tw, th, c = self.twist, self.theta, self.c
        u = as_set(u)
        z = complex(z)
        n = u.size
        fz = prod_kernel("f", z, th, c)
        out = np.empty(n, dtype=complex)
        hu = (u - z + c) / c
        hz = (z - u + c) / c
        for j in range(n):
            rest_u = np.prod(np.delete(hu, j))
            rest_z = np.prod(np.delete(hz, j))
            out[j] = ((-1) ** self.N * tw.a_coef * fz * rest_u / c
                      - tw.d_coef * rest_z / c)
        return out

    def system(self, u) -> np.ndarray:
        u = as_set(u)
        return np.array([self.Y(uk, u) for uk in u])

    def jacobian(self, u) -> np.ndarray:
        """``J[k, j] = d Y(u_k | u) / d u_j`` (total derivative in ``u_j``)."""
        u = as_set(u)
        n = u.size
        J = np.empty((n, n), dtype=complex)
        for k in range(n):
            J[k] = self.dY_du(u[k], u)
            J[k, k] += self.dY_dz(u[k], u)
        return J

    def onshell_residual(self, u) -> float:
        u = as_set(u)
        return max(abs(self.Y(uk, u)) / self.y_scale(uk, u) for uk in u)

    # -- alternative forms -------------------------------------------------
    def residual(self, form, u, extra=None, normalized=False) -> np.ndarray:
        """Residual vector of one form of the Bethe equations.

        ``form`` is ``"BE00"``, ``"BE7"``, ``"BEj"`` or ``"BE5"``.  ``BE5``
        needs ``extra``: a sequence of ``(P, degree)`` pairs with ``P`` a monic
        polynomial evaluator of degree below ``N``; one residual per pair.
        With ``normalized`` each entry is divided by the magnitude of its
        largest term (floored at 1).
        """
        u = as_set(u)
        tw, th, c, N = self.twist, self.theta, self.c, self.N
        a, d = tw.a_coef, tw.d_coef
        kk = self.params.kappa + self.params.kappa_tilde
        vals, scales = [], []
        if form == "BE00":
            for j in range(u.size):
                uj, rest = u[j], np.delete(u, j)
                l1, l2 = lambda1(uj, th, c), lambda2(uj, th, c)
                terms = [d * l2 * prod_kernel("f", uj, rest, c),
                         -a * l1 * prod_kernel("f", rest, uj, c),
                         (tw.rho1 + tw.rho2) * prod_kernel("g", uj, rest, c) * l1 * l2]
                vals.append(sum(terms))
                scales.append(max(abs(t) for t in terms))
        elif form == "BE7":
            fu = np.array([prod_kernel("f", u, t, c) for t in th])
            om = omega_matrix(th, -c)  # f(theta_k, thetabar_k) / h(theta_k, theta_j)
            for j in range(N):
                terms = [d / fu[j], a * np.sum(om[j] * fu), -kk]
                vals.append(sum(terms))
                scales.append(max(abs(d / fu[j]), abs(kk), *np.abs(a * om[j] * fu)))
        elif form == "BEj":
            fu = np.array([prod_kernel("f", u, t, c) for t in th])
            om = omega_matrix(th, c)  # f(thetabar_k, theta_k) / h(theta_j, theta_k)
            for j in range(N):
                terms = [a * fu[j], d * np.sum(om[j] / fu), -kk]
                vals.append(sum(terms))
                scales.append(max(abs(a * fu[j]), abs(kk), *np.abs(d * om[j] / fu)))
        elif form == "BE5":
            if not extra:
                raise ValueError("BE5 needs a sequence of (polynomial, degree) pairs")
            fu = np.array([prod_kernel("f", u, t, c) for t in th])
            gk = prod_excluding("g", th, c)
            for P, deg in extra:
                if deg >= N:
                    raise ValueError("polynomial degree must be below N")
                parts = (d * np.array([P(t - c) for t in th]) / fu
                         + a * fu * np.array([P(t) for t in th])) * gk
                rhs = c ** (N - 1) * kk if deg == N - 1 else 0.0
                vals.append(np.sum(parts) - rhs)
                scales.append(max(abs(rhs), *np.abs(parts)))
        else:
            raise ValueError(f"unknown form {form!r}")
        vals = np.array(vals, dtype=complex)
        if normalized:
            return vals / np.maximum(1.0, np.array(scales))
        return vals

    def theta_h_polynomials(self):
        """Monic ``prod_{k != j}(z - theta_k + c)`` for each ``j``."""
        th, c = self.theta, self.c
        return [(lambda z, rest=np.delete(th, j): complex(np.prod(z - rest + c)), self.N - 1)
                for j in range(self.N)]

    def theta_g_polynomials(self):
        """Monic ``prod_{k != j}(z - theta_k)`` for each ``j``."""
        th = self.theta
        return [(lambda z, rest=np.delete(th, j): complex(np.prod(z - rest)), self.N - 1)
                for j in range(self.N)]

    def interpolating_polynomials(self, subset_a):
        """Family mixing the two previous ones: ``prod_{A}(z - theta + c)
        prod_{B minus j}(z - theta)`` for every ``theta_j`` in the complement
        ``B`` of the index set ``subset_a``."""
        th, c = self.theta, self.c
        a_idx = sorted(set(subset_a))
        b_idx = [i for i in range(self.N) if i not in a_idx]
        if not b_idx:
            raise ValueError("the complement of subset_a must be nonempty")
        out = []
        for j in b_idx:
            ta = th[a_idx]
            tb = th[[i for i in b_idx if i != j]]
            out.append((lambda z, ta=ta, tb=tb: complex(np.prod(z - ta + c) * np.prod(z - tb)),
                        self.N - 1))
        return out

    def interpolating_form_residual(self, u, subset_a) -> np.ndarray:
        """The interpolating family written out as single-element sums over the
        two inhomogeneity subsets; returns the normalized residual for each
        ``theta_j`` outside ``subset_a``."""
        u = as_set(u)
        th, c, tw = self.theta, self.c, self.twist
        a, d = tw.a_coef, tw.d_coef
        kk = self.params.kappa + self.params.kappa_tilde
        a_idx = sorted(set(subset_a))
        b_idx = [i for i in range(self.N) if i not in a_idx]
        out = []
        for j in b_idx:
            tj = th[j]
            lhs = 0j
            for b in b_idx:
                rest = th[[i for i in b_idx if i != b]]
                lhs += (prod_kernel("f", rest, th[b], c) / h(tj, th[b], c)
                        / prod_kernel("f", u, th[b], c))
            lhs *= d
            rhs = kk - a * prod_kernel("f", u, tj, c) * prod_kernel("f", tj, th[a_idx], c)
            for al in a_idx:
                rest = th[[i for i in a_idx if i != al]]
                rhs += (a * g(tj, th[al], c) * prod_kernel("f", u, th[al], c)
                        * prod_kernel("f", th[al], rest, c))
            out.append((lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
        return np.array(out)

    # -- solving ------------------------------------------------------------
    def _admissible(self, u) -> bool:
        th, c = self.theta, self.c
        u = as_set(u)
        if not np.all(np.isfinite(u)):
            return False
        sep = POLE_GUARD * 1e4
        for x in u:
            if np.min(np.abs(x - th)) < sep or np.min(np.abs(x - th + c)) < sep:
                return False
        if u.size > 1:
            dd = np.abs(u[:, None] - u[None, :])
            dd[np.diag_indices_from(dd)] = np.inf
            if dd.min() < 1e-7:
                return False
        return True

    def solve(self, initial, tol=1e-12, max_iter=200, certify=True, rng=None) -> BetheSolution:
        """Damped Newton iteration from ``initial``.

        Raises ``NoConvergence`` (carrying the best iterate) when the residual
        does not reach ``tol`` relative to the size of the terms of ``Y``, and
        ``SingularJacobian`` when a Newton step cannot be taken.
        """
        u = as_set(initial).copy()
        if u.size != self.N:
            raise ValueError(f"need {self.N} initial roots, got {u.size}")

        def merit(x):
            try:
                return max(abs(self.Y(xk, x)) / self.y_scale(xk, x) for xk in x)
            except (PoleAtCoincidence, ZeroDivisionError, FloatingPointError):
                return math.inf

        res = merit(u)
        it = 0
        while res > tol and it < max_iter:
            it += 1
            try:
                F = self.system(u)
                J = self.jacobian(u)
                step = np.linalg.solve(J, -F)
            except (np.linalg.LinAlgError, PoleAtCoincidence) as exc:
                raise SingularJacobian(f"Newton step failed at iteration {it}: {exc}") from exc
            if not np.all(np.isfinite(step)):
                raise SingularJacobian(f"non-finite Newton step at iteration {it}")
            lam = 1.0
            while lam > 1e-6:
                trial = u + lam * step
                r = merit(trial)
                if r < res or (lam == 1.0 and r < 10 * res and res > 1e-3):
                    break
                lam *= 0.5
            else:
                break
            u, res = trial, r
        sol = BetheSolution(u, res, it)
        if res > tol or not self._admissible(u):
            raise NoConvergence(f"residual {res:.3e} after {it} iterations", best=sol)
        if certify and self.N <= ORACLE_CAP:
            self.certify(sol, rng=rng)
        return sol

    def sample_points(self, rng, count=3):
        th = self.theta
        span = max(1.0, float(np.max(np.abs(th))))
        pts = []
        while len(pts) < count:
            z = complex(rng.uniform(-span, span), rng.uniform(-span, span)) + 0.37 + 0.21j
            if np.min(np.abs(z - th)) > 0.05:
                pts.append(z)
        return pts

    def certify(self, sol: BetheSolution, zs=None, rng=None, tol=CERT_TOL) -> BetheSolution:
        """Oracle eigenvector test of ``B(u)`` at three sample points."""
        if zs is None:
            rng = rng if rng is not None else np.random.default_rng(12345)
            zs = self.sample_points(rng)
        vec = self.oracle.bethe_vector(sol.roots, "ket")
        worst = 0.0
        samples = []
        for z in zs:
            L = self.eigenvalue(z, sol.roots)
            samples.append((complex(z), L))
            worst = max(worst, self.oracle.eigen_residual(vec, L, z))
        sol.eigenvalue_samples = samples
        sol.eigen_residual = worst
        sol.certified = bool(np.linalg.norm(vec) > 0 and worst <= tol and sol.residual <= ONSHELL_TOL)
        return sol

    def initial_guesses(self, rng, count):
        th = self.theta
        N = self.N
        if N > 1:
            dd = np.abs(th[:, None] - th[None, :])
            dd[np.diag_indices_from(dd)] = np.inf
            sep = float(dd.min())
        else:
            sep = 1.0
        span = max(1.0, float(np.max(np.abs(th))) + abs(self.c))
        starts = []
        for i in range(count):
            if i % 2 == 0:
                # near inhomogeneities (shifted by 0 or -c) with seeded noise
                base = th - self.c * rng.integers(0, 2, size=N)
                noise = 0.5 * sep * (rng.uniform(-1, 1, N) + 1j * rng.uniform(-1, 1, N))
                starts.append(rng.permutation(base) + noise)
            else:
                starts.append(rng.uniform(-span, span, N) + 1j * rng.uniform(-span, span, N))
        return starts

    def find_all_solutions(self, seed=0, starts=None, tol=1e-12, max_iter=200,
                           threads=1, dedup_tol=1e-6):
        """Seeded multi-start search for distinct certified solutions.

        Returns ``(solutions, coverage)`` with ``coverage = found / 2^N``.
        Runs are reduced in start order so the result does not depend on
        ``threads``.
        """
        rng = np.random.default_rng(seed)
        count = starts if starts is not None else 64 * 2 ** self.N
        guesses = self.initial_guesses(rng, count)

        def run(x0):
            try:
                return self.solve(x0, tol=tol, max_iter=max_iter, certify=False)
            except (NoConvergence, SingularJacobian, PoleAtCoincidence):
                return None

        if threads > 1:
            with ThreadPoolExecutor(threads) as pool:
                results = list(pool.map(run, guesses))
        else:
            results = [run(x0) for x0 in guesses]
        found: list[BetheSolution] = []
        cert_rng = np.random.default_rng(seed + 1)
        zs = self.sample_points(cert_rng)
        for sol in results:
            if sol is None:
                continue
            if any(set_distance(sol.roots, s.roots) < dedup_tol for s in found):
                continue
            if self.N <= ORACLE_CAP:
                self.certify(sol, zs=zs)
                if not sol.certified:
                    continue
            found.append(sol)
        found.sort(key=lambda s: tuple((round(r.real, 8), round(r.imag, 8)) for r in s.sorted_roots()))
        return found, len(found) / 2 ** self.N


def set_distance(a, b) -> float:
    """Minimum over pairings of the maximal elementwise distance."""
    a, b = as_set(a), as_set(b)
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    if a.size <= 7:
        return min(float(np.max(np.abs(a - b[list(p)])))
                   for p in itertools.permutations(range(b.size)))
    from scipy.optimize import linear_sum_assignment

    cost = np.abs(a[:, None] - b[None, :])
    r, cidx = linear_sum_assignment(cost)
    return float(cost[r, cidx].max())


# --------------------------------------------------------------------------
# diagonal twist


def diagonal_bethe_residual(u, theta, kappa_tilde, kappa, c=1.0) -> np.ndarray:
    """``kappa f(u_j, ubar_j)/lambda1(u_j) - kappa_tilde f(ubar_j, u_j)/lambda2(u_j)``
    multiplied through by ``lambda1 lambda2`` (polynomial form)."""
    u = as_set(u)
    out = []
    for j in range(u.size):
        uj, rest = u[j], np.delete(u, j)
        out.append(kappa * lambda2(uj, theta, c) * prod_kernel("f", uj, rest, c)
                   - kappa_tilde * lambda1(uj, theta, c) * prod_kernel("f", rest, uj, c))
    return np.array(out, dtype=complex)


def solve_diagonal(M, theta, kappa_tilde, kappa, c=1.0, seed=0, starts=200, tol=1e-13):
    """Distinct root sets of the diagonal-twist Bethe equations with ``M`` roots,
    by multi-start Newton with a finite-difference Jacobian."""
    theta = as_set(theta)
    rng = np.random.default_rng(seed)
    span = max(1.0, float(np.max(np.abs(theta))) + abs(c))
    found = []

    def scale(x):
        return max(1.0, float(np.max(np.abs(kappa * lambda2(x, theta, c)))),
                   float(np.max(np.abs(kappa_tilde * lambda1(x, theta, c)))))

    for _ in range(starts):
        u = rng.uniform(-span, span, M) + 1j * rng.uniform(-span, span, M)
        ok = False
        for _it in range(100):
            try:
                F = diagonal_bethe_residual(u, theta, kappa_tilde, kappa, c)
            except PoleAtCoincidence:
                break
            if np.max(np.abs(F)) <= tol * scale(u):
                ok = True
                break
            J = np.empty((M, M), dtype=complex)
            eps = 1e-7
            try:
                for j in range(M):
                    du = np.zeros(M, dtype=complex)
                    du[j] = eps
                    J[:, j] = (diagonal_bethe_residual(u + du, theta, kappa_tilde, kappa, c)
                               - diagonal_bethe_residual(u - du, theta, kappa_tilde, kappa, c)) / (2 * eps)
                u = u - np.linalg.solve(J, F)
            except (np.linalg.LinAlgError, PoleAtCoincidence):
                break
            if not np.all(np.isfinite(u)):
                break
        if not ok:
            continue
        if M > 1:
            dd = np.abs(u[:, None] - u[None, :])
            dd[np.diag_indices_from(dd)] = np.inf
            if dd.min() < 1e-6:
                continue
        if np.min(np.abs(u[:, None] - theta[None, :])) < 1e-8:
            continue
        if any(set_distance(u, s) < 1e-6 for s in found):
            continue
        found.append(u)
    return found
