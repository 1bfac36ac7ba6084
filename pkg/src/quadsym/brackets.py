"""Iterated Hamilton-field applications of Re q, in exact coefficient form.

Applying the Hamilton field of Im q to the bilinear block
Re q((ImF)^{l1} X; (ImF)^{l2} X) produces twice the block with l1 bumped plus
twice the block with l2 bumped.  Iterating from Re q itself therefore keeps
every power H^k Re q inside the finite family of such blocks, with exact
integer coefficients that this module tracks on unordered index pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from types import MappingProxyType

import numpy as np

from .errors import InputError
from .symbols import QuadraticSymbol, hamilton_map

__all__ = [
    "BracketExpansion",
    "initial_expansion",
    "apply_H",
    "h_power",
    "evaluate_expansion",
    "finite_type_order",
    "k0_dynamic",
    "vanishing_tolerance",
]


@dataclass(frozen=True)
class BracketExpansion:
    """Integer combination of blocks Re q((ImF)^{l1} X; (ImF)^{l2} X).

    coeffs maps the unordered pair (l1 <= l2) to the total integer weight of
    both orderings; order is the number of H applications performed.
    """

    order: int
    coeffs: MappingProxyType

    def ordered_coefficient(self, j: int) -> int:
        """Coefficient of the ordered block (j, order - j); 2^k C(k, j) by induction."""
        l1, l2 = min(j, self.order - j), max(j, self.order - j)
        c = self.coeffs.get((l1, l2), 0)
        return c if l1 == l2 else c // 2

    def total_mass(self) -> int:
        return sum(self.coeffs.values())


def initial_expansion() -> BracketExpansion:
    """The order-0 expansion, Re q itself."""
    return BracketExpansion(order=0, coeffs=MappingProxyType({(0, 0): 1}))


def apply_H(e: BracketExpansion) -> BracketExpansion:
    """One application of the Hamilton field of Im q."""
    out: dict[tuple[int, int], int] = {}
    for (l1, l2), c in e.coeffs.items():
        weight = c if l1 == l2 else c // 2  # per ordered occurrence
        orderings = [(l1, l2)] if l1 == l2 else [(l1, l2), (l2, l1)]
        for a, b in orderings:
            for na, nb in ((a + 1, b), (a, b + 1)):
                key = (min(na, nb), max(na, nb))
                out[key] = out.get(key, 0) + 2 * weight
    return BracketExpansion(order=e.order + 1, coeffs=MappingProxyType(out))


def h_power(k: int) -> BracketExpansion:
    """Expansion of H^k Re q."""
    e = initial_expansion()
    for _ in range(k):
        e = apply_H(e)
    return e


def closed_form_coefficient(k: int, j: int) -> int:
    """Expected ordered coefficient 2^k C(k, j)."""
    return 2**k * comb(k, j)


def _imf_orbit(q: QuadraticSymbol, X: np.ndarray, kmax: int) -> np.ndarray:
    ImF = hamilton_map(q).ImF
    orbit = np.empty((kmax + 1, 2 * q.n))
    orbit[0] = X
    for k in range(kmax):
        orbit[k + 1] = ImF @ orbit[k]
    return orbit


def evaluate_expansion(e: BracketExpansion, q: QuadraticSymbol, X) -> float:
    """Value of the expansion at X, via the polarized real form of q."""
    X = np.asarray(X, dtype=float)
    if X.shape != (2 * q.n,):
        raise InputError(f"expected vector of length {2 * q.n}")
    if not e.coeffs:
        return 0.0
    kmax = max(l2 for _, l2 in e.coeffs)
    orbit = _imf_orbit(q, X, kmax)
    ReQ = q.Q.real
    return float(sum(c * (orbit[l1] @ ReQ @ orbit[l2]) for (l1, l2), c in e.coeffs.items()))


def vanishing_tolerance(q: QuadraticSymbol, X: np.ndarray, k: int) -> float:
    """Threshold below which H^k Re q(X) counts as zero.

    Scales with the coefficient mass 4^k because each H application doubles
    the weights twice.
    """
    scale = float(np.linalg.norm(q.Q, 2))
    r2 = float(np.dot(X, X))
    growth = max(1.0, float(np.linalg.norm(hamilton_map(q).ImF, 2))) ** (2 * k)
    return 1e-9 * scale * r2 * 4**k * growth


def finite_type_order(q: QuadraticSymbol, X, kmax: int | None = None) -> int | None:
    """Smallest k with H^j Re q(X) = 0 for j < 2k and H^{2k} Re q(X) > 0.

    Values are compared against :func:`vanishing_tolerance`.  Returns None
    when no such k <= kmax exists.
    """
    X = np.asarray(X, dtype=float)
    if not X.any():
        raise InputError("finite-type order is undefined at the origin")
    if kmax is None:
        kmax = 2 * (2 * q.n - 1)
    values = []
    e = initial_expansion()
    for j in range(2 * kmax + 1):
        if j > 0:
            e = apply_H(e)
        values.append(evaluate_expansion(e, q, X))
    for k in range(kmax + 1):
        tol = vanishing_tolerance(q, X, 2 * k)
        if values[2 * k] > tol:
            lower_ok = all(
                abs(values[j]) <= vanishing_tolerance(q, X, j) for j in range(2 * k)
            )
            if lower_ok:
                return k
            return None
    return None


def _probe_points(q: QuadraticSymbol, sample_count: int, seed: int) -> np.ndarray:
    """Deterministic probe set: coordinate axes, minimizers of the cumulative
    averaged forms, and seeded unit-sphere samples.

    Random directions almost surely miss the degenerate cones where higher
    orders live, so the minimizing eigenvectors of the partial averages of
    Re q along the ImF orbit are added as structured probes.
    """
    from .singular import averaged_form_matrix  # local import to avoid a cycle

    dim = 2 * q.n
    pts = [np.eye(dim)[i] for i in range(dim)]
    for k in range(2 * q.n):
        R = averaged_form_matrix(q, k)
        w, V = np.linalg.eigh(R)
        pts.append(V[:, 0])
        if len(w) > 1 and w[1] < 1e-8 * max(1.0, w[-1]):
            pts.append(V[:, 1])
    rng = np.random.default_rng(seed)
    rand = rng.standard_normal((sample_count, dim))
    rand /= np.linalg.norm(rand, axis=1, keepdims=True)
    return np.vstack([pts, rand])


def k0_dynamic(q: QuadraticSymbol, sample_count: int = 200, seed: int = 0) -> int | None:
    """Largest finite-type order over the deterministic probe set.

    Returns None as soon as one probe has no finite order, signalling a
    non-trivial singular space along that direction.
    """
    if sample_count < 1:
        raise InputError("sample_count must be >= 1")
    kmax = 2 * q.n - 1
    best = 0
    for X in _probe_points(q, sample_count, seed):
        order = finite_type_order(q, X, kmax=kmax)
        if order is None:
            return None
        best = max(best, order)
    return best
