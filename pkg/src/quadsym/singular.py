"""Singular space, index k0, averaged positive form and symplectic splitting.

The singular space of a symbol q is the intersection over j = 0..2n-1 of the
kernels of ReF (ImF)^j, where F is the Hamilton map.  The first index k0 at
which the partial intersection already equals the full one controls the
predicted subelliptic exponent 2/(2 k0 + 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError, NumericError, PreconditionError
from .symbols import QuadraticSymbol, hamilton_map, quadratic_symbol, sigma, symplectic_form

__all__ = [
    "SingularSpaceReport",
    "SymplecticSplit",
    "kernel",
    "singular_space",
    "averaged_form_matrix",
    "check_partial_ellipticity",
    "symplectic_split",
    "predicted_exponent",
    "block_symbol",
]

#: condition-number cutoff beyond which the symplectic flag is "indeterminate"
GRAM_CONDITION_CUTOFF = 1e8


def kernel(M: np.ndarray, tol_rel: float = 1e-10) -> np.ndarray:
    """Orthonormal kernel basis of M (columns), by SVD.

    Right singular vectors whose singular value is at most
    ``tol_rel * sigma_max`` span the numerical kernel; for M == 0 the whole
    space is returned.
    """
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if not np.all(np.isfinite(M)):
        raise InputError("matrix has non-finite entries")
    if not 0.0 < tol_rel <= 1e-2:
        raise InputError("tol_rel must lie in (0, 1e-2]")
    cols = M.shape[1]
    if not M.any():
        return np.eye(cols)
    try:
        _, s, vh = np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK breakdown
        raise NumericError("SVD failed on kernel computation") from exc
    rank = int((s > tol_rel * s[0]).sum())
    return vh[rank:].T.copy()


@dataclass(frozen=True)
class SingularSpaceReport:
    """Singular space data of one symbol.

    kernel_dims[k] is the dimension of the intersection of the kernels of
    ReF (ImF)^j over j <= k; it is non-increasing and reaches dim_S at
    k = 2n-1.  S_symplectic is True/False or "indeterminate" near degeneracy.
    """

    n: int
    basis_S: np.ndarray          # (2n, dim_S), orthonormal columns
    dim_S: int
    kernel_dims: tuple
    k0: int | None
    S_symplectic: object
    exponent: Fraction | None

    @property
    def singular_space_trivial(self) -> bool:
        return self.dim_S == 0


def _kernel_blocks(q: QuadraticSymbol) -> list[np.ndarray]:
    F = hamilton_map(q)
    blocks = []
    P = np.eye(2 * q.n)
    for _ in range(2 * q.n):
        blocks.append(F.ReF @ P)
        P = F.ImF @ P
    return blocks


def singular_space(q: QuadraticSymbol, tol_rel: float = 1e-10) -> SingularSpaceReport:
    """Compute the singular space report of q.

    The j-th partial intersection is obtained by stacking the matrices
    ReF (ImF)^0 .. ReF (ImF)^j and taking a single SVD kernel, which keeps
    one tolerance for the whole chain.
    """
    blocks = _kernel_blocks(q)
    dims = []
    basis = None
    for k in range(2 * q.n):
        stacked = np.vstack(blocks[: k + 1])
        ker = kernel(stacked, tol_rel)
        dims.append(ker.shape[1])
        basis = ker
    dim_S = dims[-1]
    k0 = None
    for k, d in enumerate(dims):
        if d == dim_S:
            k0 = k
            break
    flag = _symplectic_flag(basis, q.n)
    exponent = Fraction(2, 2 * k0 + 1) if k0 is not None else None
    return SingularSpaceReport(
        n=q.n,
        basis_S=basis,
        dim_S=dim_S,
        kernel_dims=tuple(dims),
        k0=k0,
        S_symplectic=flag,
        exponent=exponent,
    )


def _symplectic_flag(basis: np.ndarray, n: int):
    """Tri-state test of whether sigma restricted to span(basis) is non-degenerate."""
    dim = basis.shape[1]
    if dim == 0:
        return True
    if dim % 2:
        return False
    S = symplectic_form(n)
    G = basis.T @ S @ basis
    s = np.linalg.svd(G, compute_uv=False)
    floor = 1e-12 * max(1.0, s[0])
    if s[-1] <= floor:
        return False
    if s[0] / s[-1] > GRAM_CONDITION_CUTOFF:
        return "indeterminate"
    return True


def averaged_form_matrix(q: QuadraticSymbol, k0: int) -> np.ndarray:
    """Matrix R of the sum over j = 0..k0 of Re q((ImF)^j X), real symmetric."""
    if k0 < 0:
        raise InputError("k0 must be non-negative")
    F = hamilton_map(q)
    ReQ = q.Q.real
    R = np.zeros_like(ReQ)
    P = np.eye(2 * q.n)
    for _ in range(k0 + 1):
        R += P.T @ ReQ @ P
        P = F.ImF @ P
    return 0.5 * (R + R.T)


def check_partial_ellipticity(q: QuadraticSymbol, report: SingularSpaceReport,
                              tol: float = 1e-10) -> bool:
    """True iff q does not vanish on the singular space away from the origin.

    On S the real part vanishes identically, so q restricted to S is i times
    a real form; ellipticity there is definiteness of that form, decided by
    its eigenvalues.
    """
    if report.dim_S == 0:
        return True
    B = report.basis_S
    M = B.T @ q.Q @ B
    M2 = 0.5 * (M.imag + M.imag.T)
    eigs = np.linalg.eigvalsh(M2)
    scale = max(1.0, float(np.abs(q.Q).max()))
    if eigs.min() > tol * scale or eigs.max() < -tol * scale:
        return True
    return False


@dataclass(frozen=True)
class SymplecticSplit:
    """Presentation q = q1(x', xi') + i q2(x'', xi'') in adapted coordinates.

    basis_perp holds a symplectic basis of the sigma-orthogonal complement of
    S as columns (u_1..u_k, v_1..v_k with sigma(u_i, v_j) = delta_ij); basis_S
    the same for S.  Q1 and Q2 are the coefficient matrices of q1 and q2 in
    those coordinates.
    """

    n_perp: int
    n_sing: int
    basis_perp: np.ndarray
    basis_S: np.ndarray
    Q1: np.ndarray
    Q2: np.ndarray

    def coordinates(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a phase-space vector into primed and double-primed coordinates."""
        P = np.hstack([self.basis_perp, self.basis_S]) if self.n_sing else self.basis_perp
        c = np.linalg.solve(P, X)
        return c[: 2 * self.n_perp], c[2 * self.n_perp:]


def _symplectic_gram_schmidt(basis: np.ndarray, n: int, pivot_tol: float = 1e-10) -> np.ndarray:
    """Symplectic basis (u_1..u_k, v_1..v_k) of span(basis), pivoting on max |sigma|."""
    S = symplectic_form(n)
    vecs = [basis[:, j].astype(float) for j in range(basis.shape[1])]
    if len(vecs) % 2:
        raise PreconditionError("subspace of odd dimension cannot be symplectic")
    us, vs = [], []
    while vecs:
        G = np.array([[float(a @ S @ b) for b in vecs] for a in vecs])
        i, j = np.unravel_index(np.argmax(np.abs(G)), G.shape)
        pivot = G[i, j]
        if abs(pivot) < pivot_tol:
            raise NumericError(f"symplectic pivot collapsed to {pivot:.3e}")
        u = vecs[i]
        v = vecs[j] / pivot              # sigma(u, v) = 1
        rest = [vecs[k] for k in range(len(vecs)) if k not in (i, j)]
        # project the remainder onto the sigma-orthogonal complement of (u, v)
        vecs = [w - float(w @ S @ v) * u + float(w @ S @ u) * v for w in rest]
        us.append(u)
        vs.append(v)
    return np.array(us + vs).T


def symplectic_split(q: QuadraticSymbol, report: SingularSpaceReport,
                     pivot_tol: float = 1e-10) -> SymplecticSplit:
    """Split q over the symplectic pair (S-orthogonal complement, S)."""
    if report.S_symplectic is not True:
        raise PreconditionError("singular space is not (certifiably) symplectic")
    two_n = 2 * q.n
    if report.dim_S == 0:
        basis_perp = _symplectic_gram_schmidt(np.eye(two_n), q.n, pivot_tol)
        Q1 = basis_perp.T @ q.Q @ basis_perp
        return SymplecticSplit(
            n_perp=q.n, n_sing=0,
            basis_perp=basis_perp, basis_S=np.zeros((two_n, 0)),
            Q1=0.5 * (Q1 + Q1.T), Q2=np.zeros((0, 0)),
        )
    S = symplectic_form(q.n)
    rows = (S @ report.basis_S).T          # row i is sigma(b_i, .)
    perp = kernel(rows)
    basis_perp = _symplectic_gram_schmidt(perp, q.n, pivot_tol)
    basis_sing = _symplectic_gram_schmidt(report.basis_S, q.n, pivot_tol)
    Q1 = basis_perp.T @ q.Q @ basis_perp
    Q1 = 0.5 * (Q1 + Q1.T)
    M = basis_sing.T @ q.Q @ basis_sing
    M = 0.5 * (M + M.T)
    return SymplecticSplit(
        n_perp=basis_perp.shape[1] // 2,
        n_sing=basis_sing.shape[1] // 2,
        basis_perp=basis_perp,
        basis_S=basis_sing,
        Q1=Q1,
        Q2=M.imag,
    )


def split_residual(q: QuadraticSymbol, split: SymplecticSplit, X: np.ndarray) -> float:
    """|q(X) - q1(X') - i q2(X'')| at one point."""
    xp, xs = split.coordinates(np.asarray(X, dtype=float))
    val = complex(xp @ split.Q1 @ xp)
    if split.n_sing:
        val += 1j * float(xs @ split.Q2 @ xs)
    return abs(complex(X @ q.Q @ X) - val)


def predicted_exponent(report: SingularSpaceReport) -> Fraction:
    """Subelliptic exponent 2/(2 k0 + 1)."""
    if report.k0 is None:
        raise PreconditionError("k0 is undefined for this report")
    return Fraction(2, 2 * report.k0 + 1)


def block_symbol(q1: QuadraticSymbol, Q2: np.ndarray) -> QuadraticSymbol:
    """Assemble q1(x', xi') + i q2(x'', xi'') on standard coordinates.

    Primed variables come first in each of the position and momentum groups:
    (x'_1..x'_{n1}, x''_1..x''_{n2}, xi'_1.., xi''_1..).
    """
    Q2 = np.asarray(Q2, dtype=float)
    n2 = Q2.shape[0] // 2
    n1 = q1.n
    n = n1 + n2
    Q = np.zeros((2 * n, 2 * n), dtype=complex)

    def emb1(i):  # index of primed coordinate i in the combined ordering
        return i if i < n1 else n + (i - n1)

    def emb2(i):
        return n1 + i if i < n2 else n + n1 + (i - n2)

    for i in range(2 * n1):
        for j in range(2 * n1):
            Q[emb1(i), emb1(j)] += q1.Q[i, j]
    for i in range(2 * n2):
        for j in range(2 * n2):
            Q[emb2(i), emb2(j)] += 1j * Q2[i, j]
    return quadratic_symbol(Q, label="block")
