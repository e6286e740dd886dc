"""Problem instance and the gauge decomposition of the twist matrix."""
from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTwist

DEFAULT_GAP_FACTOR = 1e-3


@dataclass(frozen=True)
class ModelParams:
    """Twisted inhomogeneous XXX chain.

    ``rho1`` is the free gauge parameter of the ``K = B D A`` factorisation; any
    admissible value must give the same transfer matrix.
    """

    c: complex
    theta: tuple
    kappa_tilde: complex
    kappa: complex
    kappa_plus: complex
    kappa_minus: complex
    rho1: complex
    min_gap: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(complex(t) for t in self.theta))
        for name in ("c", "kappa_tilde", "kappa", "kappa_plus", "kappa_minus", "rho1"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        if not self.theta:
            raise ValueError("at least one site is required")
        if self.c == 0:
            raise ValueError("crossing parameter c must be nonzero")
        if self.gamma == 0:
            raise DegenerateTwist("twist matrix is singular: kappa_tilde*kappa - kappa_plus*kappa_minus = 0")
        if self.kappa_plus == 0 or self.kappa_minus == 0:
            raise DegenerateTwist("kappa_plus and kappa_minus must be nonzero")
        th = np.array(self.theta)
        gap = self.gap
        if th.size > 1:
            d = np.abs(th[:, None] - th[None, :])
            d[np.diag_indices_from(d)] = np.inf
            if d.min() < gap:
                raise ValueError(f"inhomogeneities closer than the minimum gap {gap:.3g}")

    @property
    def N(self) -> int:
        return len(self.theta)

    @property
    def gamma(self) -> complex:
        return self.kappa_tilde * self.kappa - self.kappa_plus * self.kappa_minus

    @property
    def gap(self) -> float:
        if self.min_gap is not None:
            return float(self.min_gap)
        return DEFAULT_GAP_FACTOR * max(np.abs(self.theta).max(), 1e-300)

    @property
    def theta_array(self) -> np.ndarray:
        return np.array(self.theta, dtype=complex)

    @property
    def twist_matrix(self) -> np.ndarray:
        return np.array([[self.kappa_tilde, self.kappa_plus],
                         [self.kappa_minus, self.kappa]], dtype=complex)

    def with_rho1(self, rho1) -> "ModelParams":
        return ModelParams(self.c, self.theta, self.kappa_tilde, self.kappa,
                           self.kappa_plus, self.kappa_minus, rho1, self.min_gap)


@dataclass(frozen=True)
class TwistDecomposition:
    rho1: complex
    rho2: complex
    mu: complex
    beta1: complex
    beta2: complex
    beta: complex
    alpha: complex
    eta: complex
    xi: complex
    d_plus: complex
    d_minus: complex
    kappa_tilde: complex = field(repr=False)
    kappa: complex = field(repr=False)
    kappa_plus: complex = field(repr=False)
    kappa_minus: complex = field(repr=False)

    @property
    def a_coef(self) -> complex:
        """Weight of nu11 in the transfer matrix, ``kappa_tilde - rho1``."""
        return self.kappa_tilde - self.rho1

    @property
    def d_coef(self) -> complex:
        """Weight of nu22 in the transfer matrix, ``kappa - rho2``."""
        return self.kappa - self.rho2

    @property
    def zeta(self) -> complex:
        """The recurring Izergin parameter ``mu + (mu - 1)/beta``."""
        return self.mu + (self.mu - 1) / self.beta

    def matrices(self):
        """``(A, B, D)`` with the ``sqrt(mu)`` prefactors included."""
        s = cmath.sqrt(self.mu)
        A = s * np.array([[1, self.rho2 / self.kappa_minus],
                          [self.rho1 / self.kappa_plus, 1]], dtype=complex)
        B = s * np.array([[1, self.rho1 / self.kappa_minus],
                          [self.rho2 / self.kappa_plus, 1]], dtype=complex)
        D = np.diag([self.a_coef, self.d_coef]).astype(complex)
        return A, B, D

    def quadratic(self, d) -> complex:
        """``(kappa_tilde - rho1) d^2 - (kappa + kappa_tilde) d + (kappa - rho2)``."""
        return self.a_coef * d * d - (self.kappa + self.kappa_tilde) * d + self.d_coef


def decompose_twist(params: ModelParams) -> TwistDecomposition:
    """Solve the gauge constraint for ``rho2`` and derive every constant that
    enters the Bethe equations and the scalar-product formulas."""
    kt, k = params.kappa_tilde, params.kappa
    kp, km = params.kappa_plus, params.kappa_minus
    r1 = params.rho1
    if params.gamma == 0:
        raise DegenerateTwist("gamma = 0")
    if kp == 0 or km == 0:
        raise DegenerateTwist("kappa_plus * kappa_minus = 0")
    if r1 == kt:
        raise DegenerateTwist("rho1 = kappa_tilde: rho2 undefined and alpha undefined")
    r2 = (r1 * k - kp * km) / (r1 - kt)
    denom = 1 - r1 * r2 / (kp * km)
    if abs(denom) < 1e-14:
        raise DegenerateTwist("rho1*rho2 = kappa_plus*kappa_minus: mu is infinite")
    mu = 1 / denom
    if r2 == 0:
        raise DegenerateTwist("rho2 = 0: beta = rho1/rho2 undefined")
    if k - r2 == 0:
        raise DegenerateTwist("kappa = rho2: eta undefined")
    beta1, beta2 = r1 / kp, r2 / kp
    beta = r1 / r2
    alpha = (k - r2) / (kt - r1)
    eta = ((mu - 1) / beta + mu) * (kt - r1) / (k - r2)
    xi = (mu / beta) * (beta + 1) ** 2 * (mu - 1)
    disc = cmath.sqrt((k + kt) ** 2 - 4 * (k - r2) * (kt - r1))
    d_plus = (k + kt + disc) / (2 * (kt - r1))
    d_minus = (k + kt - disc) / (2 * (kt - r1))
    return TwistDecomposition(r1, r2, mu, beta1, beta2, beta, alpha, eta, xi,
                              d_plus, d_minus, kt, k, kp, km)


def random_rho1(params_or_kappas, rng, lo=0.5, hi=2.0):
    """Seeded random gauge of modulus in ``[lo, hi]`` avoiding the excluded
    points.  Accepts a ``ModelParams`` or a ``(kt, k, kp, km)`` tuple."""
    if isinstance(params_or_kappas, ModelParams):
        p = params_or_kappas
        kt, k, kp, km = p.kappa_tilde, p.kappa, p.kappa_plus, p.kappa_minus
    else:
        kt, k, kp, km = params_or_kappas
    for _ in range(1000):
        r1 = rng.uniform(lo, hi) * cmath.exp(1j * rng.uniform(0, 2 * np.pi))
        if abs(r1 - kt) < 0.1:
            continue
        r2 = (r1 * k - kp * km) / (r1 - kt)
        if abs(1 - r1 * r2 / (kp * km)) < 0.1 or abs(r2) < 0.1 or abs(k - r2) < 0.1:
            continue
        if abs(r1 + r2) < 0.05:
            continue
        return complex(r1)
    raise DegenerateTwist("could not draw an admissible rho1")


def twist_residuals(params: ModelParams, tw: TwistDecomposition) -> dict:
    """Relative residuals of the defining constraints of the decomposition."""
    kt, k, kp, km = params.kappa_tilde, params.kappa, params.kappa_plus, params.kappa_minus
    r1, r2, mu = tw.rho1, tw.rho2, tw.mu
    scale = max(1.0, abs(r1 * r2), abs(r2 * kt), abs(r1 * k), abs(kp * km))
    A, B, D = tw.matrices()
    K = params.twist_matrix
    out = {
        "constraint": abs(r1 * r2 - r2 * kt - r1 * k + kp * km) / scale,
        "mu": abs(mu * (1 - r1 * r2 / (kp * km)) - 1),
        "bda": float(np.max(np.abs(B @ D @ A - K))) / max(1.0, float(np.max(np.abs(K)))),
        "d_plus": abs(tw.quadratic(tw.d_plus)) / max(1.0, abs(tw.a_coef * tw.d_plus ** 2)),
        "d_minus": abs(tw.quadratic(tw.d_minus)) / max(1.0, abs(tw.a_coef * tw.d_minus ** 2)),
    }
    return out
