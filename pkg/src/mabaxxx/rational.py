"""Rational kernels g, f, h, their set products, vacuum eigenvalues and
partition enumeration.

Every function takes the crossing constant ``c`` explicitly so that the
``c -> -c`` conjugation used by the Izergin determinants is just a call with
``-c``.  Sets of parameters are plain sequences / 1-d arrays; all consumers
are symmetric in their elements.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import CapExceeded, PoleAtCoincidence
from .report import Report, Tally

POLE_GUARD = 1e-12

# Maximal set size per number of parts for enumerate_partitions.
PARTITION_CAPS = {1: 30, 2: 14, 3: 12}
DEFAULT_PARTITION_CAP = 10


def as_set(values) -> np.ndarray:
    """Coerce a scalar, sequence or array into a 1-d complex array."""
    return np.atleast_1d(np.asarray(values, dtype=complex)).ravel()


def _check_poles(diff, left, right, guard=POLE_GUARD):
    bound = guard * np.maximum(1.0, np.maximum(np.abs(left), np.abs(right)))
    if np.any(np.abs(diff) < bound):
        raise PoleAtCoincidence("coincident arguments in a g/f kernel")


def g(u, v, c=1.0):
    """``c / (u - v)``; accepts broadcastable arrays."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    d = u - v
    _check_poles(d, u, v)
    out = c / d
    return out if out.ndim else complex(out)


def f(u, v, c=1.0):
    """``(u - v + c) / (u - v)``."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    d = u - v
    _check_poles(d, u, v)
    out = (d + c) / d
    return out if out.ndim else complex(out)


def h(u, v, c=1.0):
    """``(u - v + c) / c``; a polynomial, never guarded."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    out = (u - v + c) / c
    return out if out.ndim else complex(out)


KERNELS = {"g": g, "f": f, "h": h}


def prod_kernel(kernel, left, right, c=1.0) -> complex:
    """Double product ``prod_{x in left, y in right} kernel(x, y)``.

    ``kernel`` is one of ``"g"``, ``"f"``, ``"h"`` or the function itself.
    Either argument may be a scalar.  A product over an empty set is 1.
    """
    fn = KERNELS[kernel] if isinstance(kernel, str) else kernel
    x = as_set(left)
    y = as_set(right)
    if x.size == 0 or y.size == 0:
        return 1.0 + 0j
    return complex(np.prod(fn(x[:, None], y[None, :], c)))


def prod_excluding(kernel, values, c=1.0, first=True) -> np.ndarray:
    """For each element ``x_j`` of ``values`` return the product over the
    complement, ``kernel(x_j, xbar_j)`` if ``first`` else ``kernel(xbar_j, x_j)``.
    """
    fn = KERNELS[kernel] if isinstance(kernel, str) else kernel
    x = as_set(values)
    n = x.size
    if n <= 1:
        return np.ones(n, dtype=complex)
    a, b = (x[:, None], x[None, :]) if first else (x[None, :], x[:, None])
    off = ~np.eye(n, dtype=bool)
    mat = np.ones((n, n), dtype=complex)
    aa = np.broadcast_to(a, (n, n))[off]
    bb = np.broadcast_to(b, (n, n))[off]
    mat[off] = fn(aa, bb, c)
    return np.prod(mat, axis=1)


def lambda1(u, theta, c=1.0):
    """Vacuum eigenvalue of t11: ``c^-N prod_k (u - theta_k + c)``."""
    u = np.asarray(u, dtype=complex)
    th = as_set(theta)
    out = np.prod((u[..., None] - th + c) / c, axis=-1)
    return out if out.ndim else complex(out)


def lambda2(u, theta, c=1.0):
    """Vacuum eigenvalue of t22: ``c^-N prod_k (u - theta_k)``; exactly zero at
    every inhomogeneity."""
    u = np.asarray(u, dtype=complex)
    th = as_set(theta)
    out = np.prod((u[..., None] - th) / c, axis=-1)
    return out if out.ndim else complex(out)


def delta(values, c=1.0) -> complex:
    """``prod_{j<k} g(v_k, v_j)``."""
    x = as_set(values)
    n = x.size
    if n < 2:
        return 1.0 + 0j
    j, k = np.triu_indices(n, 1)
    return complex(np.prod(g(x[k], x[j], c)))


def delta_prime(values, c=1.0) -> complex:
    """``prod_{j<k} g(u_j, u_k)``."""
    x = as_set(values)
    n = x.size
    if n < 2:
        return 1.0 + 0j
    j, k = np.triu_indices(n, 1)
    return complex(np.prod(g(x[j], x[k], c)))


# --------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class PartitionSpec:
    source: np.ndarray
    parts: tuple[tuple[int, ...], ...]
    code: tuple[int, ...]

    def subsets(self) -> list[np.ndarray]:
        return [self.source[list(p)] for p in self.parts]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.parts)


def partition_cap(num_parts: int) -> int:
    return PARTITION_CAPS.get(num_parts, DEFAULT_PARTITION_CAP)


def enumerate_partitions(values, num_parts: int = 2,
                         sizes: Sequence[int | None] | None = None,
                         cap: int | None = None) -> Iterator[PartitionSpec]:
    """Yield every ordered partition of ``values`` into ``num_parts`` (possibly
    empty) subsets.

    Partitions are indexed by membership codes: ``code[i]`` is the part that
    element ``i`` belongs to.  Codes are visited in lexicographic order, so the
    summation order of any partition sum is reproducible.  ``sizes`` optionally
    pins the cardinality of individual parts (``None`` leaves a part free).
    """
    if num_parts < 1:
        raise ValueError("num_parts must be >= 1")
    src = as_set(values)
    n = src.size
    limit = partition_cap(num_parts) if cap is None else cap
    if n > limit:
        raise CapExceeded(f"{n} elements exceed the partition cap {limit} for {num_parts} parts")
    if sizes is not None and len(sizes) != num_parts:
        raise ValueError("sizes must have one entry per part")
    for code in itertools.product(range(num_parts), repeat=n):
        parts = [[] for _ in range(num_parts)]
        for i, p in enumerate(code):
            parts[p].append(i)
        if sizes is not None and any(s is not None and len(parts[i]) != s
                                     for i, s in enumerate(sizes)):
            continue
        yield PartitionSpec(src, tuple(tuple(p) for p in parts), code)


def bipartitions(values):
    """Shorthand yielding ``(part_I, part_II)`` value arrays for 2-part splits."""
    for spec in enumerate_partitions(values, 2):
        yield spec.subsets()


# --------------------------------------------------------------------------
# summation identities and the Omega matrix


def omega_matrix(x, c=1.0) -> np.ndarray:
    """``Omega_jk = f(xbar_k, x_k) / h(x_j, x_k)``."""
    x = as_set(x)
    col = prod_excluding("f", x, c, first=False)
    return col[None, :] / h(x[:, None], x[None, :], c)


def omega_inverse(x, c=1.0) -> np.ndarray:
    """Closed-form inverse ``f(x_k, xbar_k) / h(x_k, x_j)``, i.e. ``Omega`` at
    ``c -> -c``."""
    return omega_matrix(x, -c)


def omega_inverse_check(x, c=1.0, tolerance=1e-10) -> Report:
    om = omega_matrix(x, c)
    prod = om @ omega_inverse(x, c)
    err = float(np.max(np.abs(prod - np.eye(len(prod))))) if prod.size else 0.0
    t = Tally("omega-inverse", "omega-matrix-inverse", tolerance)
    t.add_error(err, err)
    rows = Tally("omega-row-sums", "omega-row-sum-unity", tolerance)
    for s in om.sum(axis=1):
        rows.add(s, 1.0)
    return Report("omega-inverse-check", [t.record(), rows.record()])


def gamma_weights(u, v, c=1.0) -> np.ndarray:
    """``gamma_j = g(u_j, ubar_j) / g(u_j, vbar)``."""
    u = as_set(u)
    v = as_set(v)
    num = prod_excluding("g", u, c)
    den = np.array([prod_kernel("g", uj, v, c) for uj in u])
    return num / den


def verify_sum_identities(u, v, k: int, c=1.0, theta=None, tolerance=1e-10) -> Report:
    """Check the three gamma-weighted summation formulas at index ``k`` and,
    if ``theta`` is given, the unit row sums of ``Omega(theta)``."""
    u = as_set(u)
    v = as_set(v)
    if u.size != v.size:
        raise ValueError("u and v must have equal cardinality")
    vk = v[k]
    gam = gamma_weights(u, v, c)
    t1 = Tally("sum-gh-left", "sum-formula-1", tolerance)
    t2 = Tally("sum-gh-right", "sum-formula-2", tolerance)
    t3 = Tally("sum-g", "sum-formula-3", tolerance)
    lhs1 = np.sum(g(u, vk, c) / h(u, vk, c) * gam)
    t1.add(lhs1, prod_kernel("h", v, vk, c) / prod_kernel("h", u, vk, c))
    lhs2 = np.sum(g(vk, u, c) / h(vk, u, c) * gam)
    t2.add(lhs2, -prod_kernel("h", vk, v, c) / prod_kernel("h", vk, u, c))
    t3.add(np.sum(g(vk, u, c) * gam), -1.0)
    records = [t1.record(), t2.record(), t3.record()]
    if theta is not None:
        rows = Tally("omega-row-sums", "omega-row-sum-unity", tolerance)
        for s in omega_matrix(theta, c).sum(axis=1):
            rows.add(s, 1.0)
        records.append(rows.record())
    return Report("sum-identities", records)
