"""Scalar products of modified Bethe vectors.

Four independent evaluation routes are available for ``S(v, u) = <0|nu21(v)
nu12(u)|0>``:

* the dense oracle (``ChainOracle.scalar_product``),
* the double partition sum over both parameter sets (valid off shell),
* the Jacobian determinant of the transfer-matrix eigenvalue (``u`` on shell),
* the product of two modified Izergin determinants (``u`` on shell).

The module also evaluates the norm formula and the on-shell identities for
Izergin determinants built on the inhomogeneities.
"""
from __future__ import annotations

import itertools

import numpy as np

from .bethe import ONSHELL_TOL, BetheSolution, BetheSystem
from .errors import CapExceeded, NotOnShell
from .izergin import conjugate_izergin, modified_izergin
from .params import ModelParams, TwistDecomposition, decompose_twist
from .rational import (as_set, delta, delta_prime, enumerate_partitions, g, h,
                       gamma_weights, lambda1, lambda2, omega_matrix, prod_kernel)
from .report import Report, Tally, scale_of

PARTITION_SUM_CAP = 6


class ScalarProducts:
    """All scalar-product formulas for one model and gauge."""

    def __init__(self, params: ModelParams, twist: TwistDecomposition | None = None,
                 onshell_tol: float = ONSHELL_TOL):
        self.params = params
        self.twist = twist if twist is not None else decompose_twist(params)
        self.bethe = BetheSystem(params, self.twist)
        self.theta = params.theta_array
        self.c = params.c
        self.N = params.N
        self.onshell_tol = onshell_tol

    @property
    def oracle(self):
        return self.bethe.oracle

    def _roots(self, u):
        return u.roots if isinstance(u, BetheSolution) else as_set(u)

    def require_onshell(self, u):
        u = self._roots(u)
        if u.size != self.N:
            raise NotOnShell(f"need {self.N} Bethe roots, got {u.size}")
        res = self.bethe.onshell_residual(u)
        if res > self.onshell_tol:
            raise NotOnShell(f"Bethe residual {res:.3e} exceeds {self.onshell_tol:.1e}")
        return u

    # -- off-shell partition sum -------------------------------------------
    def partition_sum(self, v, u) -> complex:
        """Double sum over bipartitions of ``v`` and ``u``; valid for any
        cardinalities and any (off-shell) parameters."""
        v, u = as_set(v), as_set(u)
        m, n = v.size, u.size
        if m > PARTITION_SUM_CAP or n > PARTITION_SUM_CAP:
            raise CapExceeded(f"partition sum limited to {PARTITION_SUM_CAP} parameters per set")
        tw, th, c = self.twist, self.theta, self.c
        z = 1 / tw.mu
        l1v, l2v = lambda1(v, th, c), lambda2(v, th, c)
        l1u, l2u = lambda1(u, th, c), lambda2(u, th, c)
        u_parts = [(np.array(s.parts[0], dtype=int), np.array(s.parts[1], dtype=int))
                   for s in enumerate_partitions(u, 2)]
        total = 0j
        for vs in enumerate_partitions(v, 2):
            iv1, iv2 = (np.array(p, dtype=int) for p in vs.parts)
            v1, v2 = v[iv1], v[iv2]
            wv = np.prod(l2v[iv1]) * np.prod(l1v[iv2]) * prod_kernel("f", v1, v2, c)
            for iu1, iu2 in u_parts:
                u1, u2 = u[iu1], u[iu2]
                p1, p2, q1, q2 = v1.size, v2.size, u1.size, u2.size
                term = (tw.beta1 ** (p2 - q2) * tw.beta2 ** (p1 - q1)
                        * np.prod(l2u[iu2]) * np.prod(l1u[iu1])
                        * prod_kernel("f", u2, u1, c)
                        * modified_izergin(u2, v2, z, c)
                        * conjugate_izergin(u1, v1, z, c))
                total += wv * term
        return complex(tw.mu ** (2 * m) * (tw.mu - 1) ** (n - m) * total)

    # -- Jacobian representation -----------------------------------------
    def jacobian_entry(self, uj, vk, u) -> complex:
        tw, th, c, N = self.twist, self.theta, self.c, self.N
        u = as_set(u)
        return complex((-1) ** (N - 1) * tw.a_coef * prod_kernel("f", vk, th, c)
                       * prod_kernel("h", u, vk, c) * g(uj, vk, c) / h(uj, vk, c)
                       + tw.d_coef * prod_kernel("h", vk, u, c) * g(vk, uj, c) / h(vk, uj, c)
                       + (tw.rho1 + tw.rho2) * prod_kernel("h", vk, th, c) * g(vk, uj, c))

    def jacobian_matrix(self, u, v, check=True) -> np.ndarray:
        """``M[j, k] = M(u_j, v_k)``, the rescaled derivative of the eigenvalue
        ``c / (g(v_k, u) lambda2(v_k)) dLambda(v_k|u)/du_j``."""
        u = self.require_onshell(u) if check else self._roots(u)
        v = as_set(v)
        return np.array([[self.jacobian_entry(uj, vk, u) for vk in v] for uj in u])

    def jacobian_entry_from_derivative(self, uj_index, vk, u) -> complex:
        """Same entry assembled from ``dY/du_j`` and ``Y``:
        ``c dY(v|u)/du_j + Y(v|u) g(v, u_j)``."""
        u = as_set(u)
        dy = self.bethe.dY_du(vk, u)[uj_index]
        return complex(self.c * dy + self.bethe.Y(vk, u) * g(vk, u[uj_index], self.c))

    def eigenvalue_derivative(self, z, u) -> np.ndarray:
        """Analytic ``dLambda(z|u)/du_j`` for all ``j``."""
        tw, th, c = self.twist, self.theta, self.c
        u = as_set(u)
        z = complex(z)
        l1, l2 = lambda1(z, th, c), lambda2(z, th, c)
        f1 = prod_kernel("f", u, z, c)
        f2 = prod_kernel("f", z, u, c)
        g3 = prod_kernel("g", z, u, c)
        dlog1 = 1 / (u - z + c) - 1 / (u - z)
        dlog2 = 1 / (z - u) - 1 / (z - u + c)
        dlog3 = 1 / (z - u)
        return (tw.a_coef * l1 * f1 * dlog1 + tw.d_coef * l2 * f2 * dlog2
                + (tw.rho1 + tw.rho2) * l1 * l2 * g3 * dlog3)

    def jacobian_entry_from_eigenvalue(self, j, vk, u) -> complex:
        """``c / (g(v_k, u) lambda2(v_k)) dLambda(v_k|u)/du_j``."""
        u = as_set(u)
        pref = self.c / (prod_kernel("g", vk, u, self.c) * lambda2(vk, self.theta, self.c))
        return complex(pref * self.eigenvalue_derivative(vk, u)[j])

    def row_combination(self, u, v):
        """``sum_j gamma_j M(u_j, v_k)`` and its closed form ``-Y(v_k|v)``.

        The closed form vanishes when ``v`` is itself on shell, which makes
        ``det M`` vanish for two different solutions.
        """
        u = self.require_onshell(u)
        v = as_set(v)
        gam = gamma_weights(u, v, self.c)
        lhs = gam @ self.jacobian_matrix(u, v, check=False)
        rhs = -np.array([self.bethe.Y(vk, v) for vk in v])
        return lhs, rhs

    def symmetry_pair(self, v, u) -> tuple[complex, complex]:
        """``S(v, u)`` and ``(kappa_minus/kappa_plus)^(m-n) S(u, v)``
        from the partition sum."""
        v, u = as_set(v), as_set(u)
        ratio = (self.params.kappa_minus / self.params.kappa_plus) ** (v.size - u.size)
        return self.partition_sum(v, u), complex(ratio * self.partition_sum(u, v))

    def _prefactor(self):
        tw = self.twist
        return (tw.mu * tw.beta) ** self.N / (tw.beta * self.params.kappa + self.params.kappa_tilde
                                              - 2 * tw.rho1) ** self.N

    def det_jacobian(self, v, u) -> complex:
        """Scalar product through the Jacobian determinant (``u`` on shell)."""
        u = self.require_onshell(u)
        v = as_set(v)
        if v.size != self.N:
            raise ValueError("v must have N elements")
        th, c, tw = self.theta, self.c, self.twist
        M = self.jacobian_matrix(u, v, check=False)
        return complex(self._prefactor() * delta(v, c) * delta_prime(u, c)
                       * np.prod(lambda2(u, th, c)) * np.prod(lambda2(v, th, c))
                       * modified_izergin(u, th, -1 / tw.beta, c) * np.linalg.det(M))

    def det_izergin(self, v, u) -> complex:
        """Scalar product as a product of two modified Izergin determinants
        (``u`` on shell)."""
        u = self.require_onshell(u)
        v = as_set(v)
        if v.size != self.N:
            raise ValueError("v must have N elements")
        th, c, tw = self.theta, self.c, self.twist
        return complex(np.prod(lambda2(u, th, c)) * np.prod(lambda2(v, th, c))
                       * (tw.mu / tw.alpha) ** self.N
                       * modified_izergin(u, th, tw.zeta, c)
                       * modified_izergin(np.concatenate([u, v]), th, tw.alpha, c))

    def norm_matrix(self, u) -> np.ndarray:
        """``c dY(u_k|u)/du_j`` (rows ``k``)."""
        return self.c * self.bethe.jacobian(u)

    def norm_squared(self, u) -> complex:
        """``<0|nu21(u) nu12(u)|0>`` for on-shell ``u`` via the derivative of ``Y``."""
        u = self.require_onshell(u)
        th, c, tw = self.theta, self.c, self.twist
        return complex(self._prefactor() * delta(u, c) * delta_prime(u, c)
                       * np.prod(lambda2(u, th, c)) ** 2
                       * modified_izergin(u, th, -1 / tw.beta, c)
                       * np.linalg.det(self.norm_matrix(u)))

    def det_m_closed_form(self, u, v) -> complex:
        """Closed form of ``det M`` as a product of two Izergin determinants."""
        u = self.require_onshell(u)
        v = as_set(v)
        th, c, tw = self.theta, self.c, self.twist
        return complex(tw.a_coef ** self.N
                       / (prod_kernel("f", u, th, c) * delta_prime(u, c) * delta(v, c))
                       * modified_izergin(u, th, 1.0, c)
                       * modified_izergin(np.concatenate([u, v]), th, tw.alpha, c))

    # -- frozen points -----------------------------------------------------
    def frozen_point(self, u, subset_a):
        """``v = {theta_A, theta_B - c}`` for the index set ``subset_a``."""
        th, c = self.theta, self.c
        a_idx = sorted(set(subset_a))
        b_idx = [i for i in range(self.N) if i not in a_idx]
        return np.concatenate([th[a_idx], th[b_idx] - c]), a_idx, b_idx

    def frozen_closed_form(self, u, subset_a) -> complex:
        u = self.require_onshell(u)
        th, c, tw = self.theta, self.c, self.twist
        _, a_idx, b_idx = self.frozen_point(u, subset_a)
        ta, tb = th[a_idx], th[b_idx]
        gab = (np.prod(lambda2(tb - c, th, c)) * np.prod(lambda1(ta, th, c))
               / prod_kernel("f", ta, tb, c))
        nA, nB = len(a_idx), len(b_idx)
        return complex((-1) ** nB * tw.mu ** self.N * tw.alpha ** (-nA)
                       * np.prod(lambda2(u, th, c)) * gab * prod_kernel("f", u, ta, c)
                       * modified_izergin(u, th, tw.zeta, c))

    def frozen_limit(self, u, subset_a, eps=(1e-4, 1e-5)) -> complex:
        """Izergin-product formula at ``v = {theta_A + eps, theta_B - c}``,
        extrapolated linearly to ``eps = 0`` from two step sizes."""
        u = self.require_onshell(u)
        v0, a_idx, _ = self.frozen_point(u, subset_a)
        shift = np.zeros(self.N, dtype=complex)
        shift[:len(a_idx)] = 1.0
        e1, e2 = eps
        s1 = self.det_izergin(v0 + e1 * shift, u)
        s2 = self.det_izergin(v0 + e2 * shift, u)
        return complex((e1 * s2 - e2 * s1) / (e1 - e2))

    def norm_limit(self, u, rng=None, eps=1e-5) -> complex:
        """Izergin-product formula at ``v = u + eps d`` (random direction ``d``),
        Richardson-extrapolated from ``eps`` and ``eps/2``."""
        u = self.require_onshell(u)
        rng = rng if rng is not None else np.random.default_rng(7)
        d = rng.normal(size=self.N) + 1j * rng.normal(size=self.N)
        s1 = self.det_izergin(u + eps * d, u)
        s2 = self.det_izergin(u + 0.5 * eps * d, u)
        return complex(2 * s2 - s1)

    # -- reports -------------------------------------------------------------
    def z_matrix(self, u) -> np.ndarray:
        """``Z_jk = f(theta_k, thetabar_k) f(u, theta_k) / h(theta_k, theta_j)``;
        ``det(Z - z) = K^{(z)}_{N,N}(u|theta)``."""
        u = self._roots(u)
        th, c = self.theta, self.c
        fu = np.array([prod_kernel("f", u, t, c) for t in th])
        return omega_matrix(th, -c) * fu[None, :]

    def classify_d(self, u):
        """Eigenvalues of ``Z`` assigned to the nearest of ``d+`` / ``d-``.

        Returns ``(eigenvalues, labels, worst_distance, ties)``.  ``Z`` is
        typically defective when a root value repeats, so individual computed
        eigenvalues scatter like ``eps**(1/k)``; the distance is measured on the
        mean of each class, which is the well-conditioned quantity.  ``ties``
        counts eigenvalues equidistant from both roots (reported, not resolved).
        """
        tw = self.twist
        w = np.linalg.eigvals(self.z_matrix(u))
        w = w[np.lexsort((w.imag, w.real))]
        labels, ties = [], 0
        for x in w:
            dp, dm = abs(x - tw.d_plus), abs(x - tw.d_minus)
            if abs(dp - dm) <= 1e-12 * max(1.0, abs(x)):
                ties += 1
            labels.append("+" if dp <= dm else "-")
        worst = 0.0
        for lab, d in (("+", tw.d_plus), ("-", tw.d_minus)):
            cls = w[[s == lab for s in labels]]
            if cls.size:
                worst = max(worst, abs(cls.mean() - d) / max(1.0, abs(d)))
        return w, labels, worst, ties

    def onshell_izergin_report(self, u, z_samples, tolerance=1e-8, eig_tolerance=1e-7) -> Report:
        u = self.require_onshell(u)
        tw, th, c, N = self.twist, self.theta, self.c, self.N
        w, labels, worst, ties = self.classify_d(u)
        t_eig = Tally("z-eigenvalues-in-d-pm", "onshell-izergin-eigenvalues", eig_tolerance)
        t_eig.add_error(worst, worst)
        if ties:
            t_eig.detail = f"{ties} ties"
        d = np.array([tw.d_plus if s == "+" else tw.d_minus for s in labels])
        t_prod = Tally("izergin-product-of-d", "onshell-izergin-factorisation", tolerance)
        for z in z_samples:
            t_prod.add(modified_izergin(u, th, z, c), np.prod(d - z))
        t_f = Tally("prod-f", "onshell-izergin-at-zero", tolerance)
        t_f.add(prod_kernel("f", u, th, c), np.prod(d))
        t_fin = Tally("fin-identity", "onshell-izergin-three-point", tolerance)
        lhs = ((tw.beta * tw.d_coef / (tw.beta * self.params.kappa + self.params.kappa_tilde
                                        - 2 * tw.rho1)) ** N
               * modified_izergin(u, th, 1.0, c) * modified_izergin(u, th, -1 / tw.beta, c))
        rhs = prod_kernel("f", u, th, c) * modified_izergin(u, th, tw.zeta, c)
        t_fin.add(lhs, rhs)
        rep = Report("onshell-izergin", [t_eig.record(), t_prod.record(), t_f.record(), t_fin.record()])
        rep.data["multiplicity_plus"] = labels.count("+")
        rep.data["multiplicity_minus"] = labels.count("-")
        rep.data["ties"] = ties
        return rep

    # -- on-shell Izergin relations on subsets of theta ---------------------
    def subset_relation(self, u, a_idx) -> tuple[complex, complex]:
        tw, th, c = self.twist, self.theta, self.c
        a_idx = sorted(a_idx)
        b_idx = [i for i in range(self.N) if i not in a_idx]
        nA = len(a_idx)
        lhs = prod_kernel("f", u, th[a_idx], c) * modified_izergin(u, th[b_idx], tw.zeta, c)
        rhs = ((tw.eta / tw.xi) ** nA * modified_izergin(u, th, tw.zeta, c)
               * modified_izergin(u, th[a_idx], 1 / tw.eta, c))
        return complex(lhs), complex(rhs)

    def single_sum_generic(self, u, b_idx, j, gamma) -> tuple[complex, complex]:
        """Single-element sum over ``theta_B`` of Izergin determinants; holds for
        any ``u``.  ``j`` must belong to ``b_idx``."""
        th, c = self.theta, self.c
        tb = th[list(b_idx)]
        tj = th[j]
        lhs = 0j
        for k in range(tb.size):
            rest = np.delete(tb, k)
            lhs += (prod_kernel("f", rest, tb[k], c) / h(tj, tb[k], c)
                    * modified_izergin(u, rest, gamma, c))
        without_j = th[[i for i in b_idx if i != j]]
        rhs = (prod_kernel("f", u, tj, c) * modified_izergin(u, without_j, gamma, c)
               - modified_izergin(u, tb, gamma, c)) / gamma
        return complex(lhs), complex(rhs)

    def single_sum_onshell(self, u, a_idx, s) -> tuple[complex, complex]:
        """On-shell single-element sum; ``s`` is an index outside ``a_idx``."""
        tw, th, c = self.twist, self.theta, self.c
        a_idx = sorted(a_idx)
        b_idx = [i for i in range(self.N) if i not in a_idx]
        ta, tb, ts = th[a_idx], th[b_idx], th[s]
        ze = 1 / tw.eta
        lhs = 0j
        for k in range(tb.size):
            rest = np.delete(tb, k)
            lhs += (prod_kernel("f", rest, tb[k], c) / h(ts, tb[k], c)
                    * modified_izergin(u, np.append(ta, tb[k]), ze, c)
                    / prod_kernel("f", u, tb[k], c))
        lhs *= tw.eta
        rhs = (tw.beta / (tw.mu * tw.beta + tw.mu - 1)
               * (tw.eta * modified_izergin(u, np.append(ta, ts), ze, c)
                  - tw.xi * modified_izergin(u, ta, ze, c)))
        return complex(lhs), complex(rhs)

    def appendix_checks(self, u, v=None, rng=None, tolerance=1e-7) -> Report:
        """Relations between on-shell Izergin determinants over every subset
        of the inhomogeneities, the generic-u single-element sum, and the closed
        form of ``det M``."""
        u = self.require_onshell(u)
        rng = rng if rng is not None else np.random.default_rng(11)
        N = self.N
        idx = range(N)
        t1 = Tally("subset-izergin-relation", "onshell-izergin-subset-relation", tolerance)
        t2 = Tally("single-sum-generic", "izergin-single-element-sum", tolerance)
        t3 = Tally("single-sum-onshell", "onshell-izergin-single-element-sum", tolerance)
        tm = Tally("det-jacobian-closed-form", "jacobian-to-izergin", tolerance)
        generic = u + 0.3 * (rng.normal(size=N) + 1j * rng.normal(size=N))
        for r in range(N + 1):
            for a_idx in itertools.combinations(idx, r):
                t1.add(*self.subset_relation(u, a_idx))
                b_idx = [i for i in idx if i not in a_idx]
                if b_idx:
                    gam = complex(rng.normal(), rng.normal())
                    for j in b_idx:
                        t2.add(*self.single_sum_generic(generic, b_idx, j, gam))
                        t3.add(*self.single_sum_onshell(u, a_idx, j))
        if v is None:
            v = u + rng.normal(size=N) + 1j * rng.normal(size=N)
        M = self.jacobian_matrix(u, v, check=False)
        tm.add(np.linalg.det(M), self.det_m_closed_form(u, v))
        return Report("appendix-relations", [t1.record(), t2.record(), t3.record(), tm.record()])

    # -- orthogonality -------------------------------------------------------
    def gram_matrix(self, solutions) -> np.ndarray:
        bras = [self.oracle.bethe_vector(self._roots(s), "bra") for s in solutions]
        kets = [self.oracle.bethe_vector(self._roots(s), "ket") for s in solutions]
        return np.array([[complex(b @ k) for k in kets] for b in bras])

    def orthogonality_check(self, solutions, tolerance=1e-7) -> Report:
        """Gram matrix of dual/ordinary on-shell vectors over distinct solutions;
        off-diagonal entries relative to the diagonal geometric mean and the
        diagonal against the norm formula."""
        G = self.gram_matrix(solutions)
        n = len(G)
        t_off = Tally("gram-off-diagonal", "on-shell-orthogonality", tolerance)
        t_diag = Tally("gram-diagonal-vs-norm", "on-shell-norm", tolerance)
        for i in range(n):
            t_diag.add(G[i, i], self.norm_squared(solutions[i]))
            for j in range(n):
                if i != j:
                    ref = max(1.0, np.sqrt(abs(G[i, i]) * abs(G[j, j])))
                    t_off.add_error(abs(G[i, j]), abs(G[i, j]) / ref)
        if n < 2:
            t_off.add_error(0.0, 0.0)
        rep = Report("orthogonality", [t_off.record(), t_diag.record()])
        rep.data["gram_abs"] = np.abs(G).tolist()
        return rep

    # -- composite reports ---------------------------------------------------
    def triangle_check(self, solutions, rng, draws=10, tolerance=1e-7,
                       partition_sum=True) -> Report:
        """Oracle, partition sum and both determinant formulas pairwise on
        every given solution and ``draws`` random ``v``."""
        names = ["oracle", "partition-sum", "det-jacobian", "det-izergin"]
        anchors = {"partition-sum": "partition-sum-scalar-product",
                   "det-jacobian": "jacobian-determinant-scalar-product",
                   "det-izergin": "double-izergin-scalar-product"}
        pairs = [(a, b) for a, b in itertools.combinations(names, 2)
                 if partition_sum or "partition-sum" not in (a, b)]
        tallies = {pr: Tally(f"{pr[0]}~{pr[1]}", anchors.get(pr[1], "scalar-product"), tolerance)
                   for pr in pairs}
        for sol in solutions:
            u = self.require_onshell(sol)
            for _ in range(draws):
                v = u + rng.normal(size=self.N) + 1j * rng.normal(size=self.N)
                vals = {"oracle": self.oracle.scalar_product(v, u),
                        "det-jacobian": self.det_jacobian(v, u),
                        "det-izergin": self.det_izergin(v, u)}
                if partition_sum:
                    vals["partition-sum"] = self.partition_sum(v, u)
                for (a, b), t in tallies.items():
                    t.add(vals[a], vals[b])
        return Report("scalar-product-triangle", [t.record() for t in tallies.values()])

    def frozen_check(self, solutions, tolerance=1e-4) -> Report:
        """Closed form at ``v = {theta_A, theta_B - c}`` against the oracle
        (exactly) and against the limit of the double-Izergin formula."""
        t_or = Tally("frozen-point-vs-oracle", "frozen-point-closed-form", 1e-7)
        t_lim = Tally("frozen-point-limit", "frozen-point-closed-form", tolerance)
        for sol in solutions:
            u = self.require_onshell(sol)
            for r in range(self.N + 1):
                for a_idx in itertools.combinations(range(self.N), r):
                    closed = self.frozen_closed_form(u, a_idx)
                    v0, _, _ = self.frozen_point(u, a_idx)
                    t_or.add(self.oracle.scalar_product(v0, u), closed)
                    t_lim.add(self.frozen_limit(u, a_idx), closed)
        return Report("frozen-point", [t_or.record(), t_lim.record()])

    def jacobian_checks(self, solutions, rng, tolerance=1e-7) -> Report:
        """Entry-wise agreement of ``M`` with the derivative of the eigenvalue,
        the row combination, its vanishing for pairs of solutions, and
        boundedness of ``M`` at ``v_k -> u_j``."""
        t_entry = Tally("jacobian-vs-eigenvalue-derivative", "jacobian-matrix", tolerance)
        t_row = Tally("row-combination", "orthogonality-row-combination", tolerance)
        t_dep = Tally("row-dependence-onshell", "orthogonality-row-combination", tolerance)
        t_pole = Tally("no-pole-at-roots", "jacobian-no-pole", 1.0)
        for sol in solutions:
            u = self.require_onshell(sol)
            v = u + rng.normal(size=self.N) + 1j * rng.normal(size=self.N)
            M = self.jacobian_matrix(u, v, check=False)
            for j in range(self.N):
                for k in range(self.N):
                    t_entry.add(M[j, k], self.jacobian_entry_from_eigenvalue(j, v[k], u))
            lhs, rhs = self.row_combination(u, v)
            for a, b in zip(lhs, rhs):
                t_row.add(a, b)
            eps = 1e-5
            near = self.jacobian_matrix(u, u + eps, check=False)
            sc = scale_of(*M.ravel())
            bound = float(np.abs(near).max()) / (1e3 * sc)
            t_pole.add_error(float(np.abs(near).max()), bound)
            for other in solutions:
                w = self._roots(other)
                if other is sol:
                    continue
                lhs, _ = self.row_combination(u, w)
                sc = scale_of(*self.jacobian_matrix(u, w, check=False).ravel())
                for a in lhs:
                    t_dep.add_error(abs(a), abs(a) / sc)
        return Report("jacobian", [t_entry.record(), t_row.record(), t_dep.record(),
                                   t_pole.record()])

    def negative_control(self, rng, draws=10, threshold=1e-3, required=9) -> Report:
        """Off-shell ``u`` must break the determinant formulas."""
        t = Tally("off-shell-disagreement", "determinant-formulas-need-on-shell", 0.0)
        hits = 0
        worst = np.inf
        saved = self.onshell_tol
        self.onshell_tol = np.inf
        try:
            for _ in range(draws):
                u = self.theta + rng.normal(size=self.N) + 1j * rng.normal(size=self.N)
                v = self.theta + rng.normal(size=self.N) + 1j * rng.normal(size=self.N)
                o = self.oracle.scalar_product(v, u)
                d = self.det_izergin(v, u)
                gap = abs(o - d) / scale_of(o, d)
                worst = min(worst, gap)
                hits += gap > threshold
        finally:
            self.onshell_tol = saved
        t.add_error(0.0, 0.0)
        if hits < required:
            t.fail(f"only {hits}/{draws} off-shell draws disagree")
        t.detail = f"{hits}/{draws} draws disagree by more than {threshold:g}*scale"
        rep = Report("negative-control", [t.record()])
        rep.data["hits"] = hits
        rep.data["draws"] = draws
        return rep


def diagonal_onshell_check(theta, kappa_tilde, kappa, M, z_samples, c=1.0, seed=0,
                           tolerance=1e-8) -> Report:
    """Diagonal twist: for every solution with ``M`` roots,
    ``K^{(z)}_{M,N}(u|theta) = prod(d_i - z)`` with ``d_i`` in ``{1, kappa/kappa_tilde}``."""
    from .bethe import solve_diagonal

    theta = as_set(theta)
    targets = np.array([1.0, kappa / kappa_tilde], dtype=complex)
    t_eig = Tally("diagonal-z-eigenvalues", "diagonal-twist-izergin", 1e-7)
    t_prod = Tally("diagonal-izergin-product", "diagonal-twist-izergin", tolerance)
    sols = solve_diagonal(M, theta, kappa_tilde, kappa, c, seed=seed)
    if not sols:
        t_prod.fail("no diagonal-twist solution found")
    mults = []
    for u in sols:
        u = as_set(getattr(u, "roots", u))
        fu = np.array([prod_kernel("f", u, t, c) for t in theta])
        w = np.linalg.eigvals(omega_matrix(theta, -c) * fu[None, :])
        lab = np.argmin(np.abs(w[:, None] - targets[None, :]), axis=1)
        for i in range(2):
            cls = w[lab == i]
            if cls.size:
                err = abs(cls.mean() - targets[i])
                t_eig.add_error(err, err / max(1.0, abs(targets[i])))
        d = targets[lab]
        mults.append(int(np.sum(lab == 0)))
        for z in z_samples:
            t_prod.add(modified_izergin(u, theta, z, c), np.prod(d - z))
    rep = Report("diagonal-twist", [t_eig.record(), t_prod.record()])
    rep.data["solutions"] = len(sols)
    rep.data["multiplicity_of_one"] = mults
    return rep


__all__ = ["ScalarProducts", "diagonal_onshell_check", "PARTITION_SUM_CAP"]
