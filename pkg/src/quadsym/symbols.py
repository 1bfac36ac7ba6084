"""Phase-space algebra for complex quadratic symbols.

Coordinates on R^{2n} are ordered (x_1..x_n, xi_1..xi_n).  A symbol is the
complex symmetric coefficient matrix Q of the quadratic form
q(X) = X^T Q X; every invariant downstream is a function of Q.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import InputError

__all__ = [
    "QuadraticSymbol",
    "HamiltonMap",
    "symplectic_form",
    "sigma",
    "quadratic_symbol",
    "evaluate",
    "polarized",
    "hamilton_map",
    "hamilton_flow",
    "average_real_part",
    "poisson_bracket_quadratic",
    "numerical_range_samples",
    "fokker_planck",
    "harmonic_oscillator",
    "random_symplectic",
    "conjugate_symbol",
]


def symplectic_form(n: int) -> np.ndarray:
    """Matrix S of sigma((x,xi),(y,eta)) = xi.y - x.eta, block [[0,-I],[I,0]]."""
    S = np.zeros((2 * n, 2 * n))
    S[:n, n:] = -np.eye(n)
    S[n:, :n] = np.eye(n)
    return S


def sigma(X, Y) -> complex:
    """Canonical symplectic pairing of two 2n-vectors."""
    X = np.asarray(X)
    Y = np.asarray(Y)
    n = X.shape[-1] // 2
    return X[..., n:] @ Y[..., :n] - X[..., :n] @ Y[..., n:]


@dataclass(frozen=True)
class QuadraticSymbol:
    """Complex quadratic form on R^{2n} with non-negative real part.

    Attributes
    ----------
    n : space dimension (phase space is R^{2n}).
    Q : complex symmetric (2n, 2n) coefficient matrix, q(X) = X^T Q X.
    label : optional display name.
    psd_warning : True when the smallest eigenvalue of Re Q is negative but
        within tolerance of zero (borderline symbol, accepted with warning).
    """

    n: int
    Q: np.ndarray
    label: str = ""
    psd_warning: bool = field(default=False, compare=False)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def __call__(self, X) -> complex:
        return evaluate(self, X)


def quadratic_symbol(Q, label: str = "", tol_psd: float = 1e-10) -> QuadraticSymbol:
    """Build a validated symbol from a coefficient matrix.

    The matrix is symmetrized exactly; Re Q must be positive semidefinite up
    to ``tol_psd * max(1, ||Re Q||)``.  Borderline negative eigenvalues inside
    that band are accepted and flagged.
    """
    Q = np.asarray(Q, dtype=complex)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] % 2:
        raise InputError(f"coefficient matrix must be square of even size, got {Q.shape}")
    n = Q.shape[0] // 2
    Q = 0.5 * (Q + Q.T)
    re = Q.real
    scale = max(1.0, float(np.linalg.norm(re, 2)))
    lam_min = float(np.linalg.eigvalsh(0.5 * (re + re.T)).min())
    tol = tol_psd * scale
    if lam_min < -tol:
        raise InputError(
            f"real part is not positive semidefinite: min eigenvalue {lam_min:.3e} "
            f"below tolerance {-tol:.3e}"
        )
    warning = lam_min < 0.0
    Q.setflags(write=False)
    return QuadraticSymbol(n=n, Q=Q, label=label, psd_warning=warning)


@dataclass(frozen=True)
class HamiltonMap:
    """Matrix F with sigma(X, F Y) = q(X; Y); skew-symmetric w.r.t. sigma."""

    F: np.ndarray
    ReF: np.ndarray
    ImF: np.ndarray

    @property
    def n(self) -> int:
        return self.F.shape[0] // 2


def evaluate(q: QuadraticSymbol, X) -> complex:
    """Value q(X) = X^T Q X."""
    X = np.asarray(X, dtype=float)
    if X.shape != (q.dim,):
        raise InputError(f"expected vector of length {q.dim}, got shape {X.shape}")
    return complex(X @ q.Q @ X)


def polarized(q: QuadraticSymbol, X, Y) -> complex:
    """Polarized form q(X; Y) = X^T Q Y, symmetric in (X, Y)."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != (q.dim,) or Y.shape != (q.dim,):
        raise InputError(f"expected vectors of length {q.dim}")
    return complex(X @ q.Q @ Y)


def hamilton_map(q: QuadraticSymbol) -> HamiltonMap:
    """Hamilton map of q, the unique F with sigma(X, F Y) = q(X; Y).

    From X^T Q Y = X^T S F Y for all X, Y and S^2 = -I, the closed form is
    F = -S Q.  Re F and Im F are the Hamilton maps of Re q and Im q.
    """
    S = symplectic_form(q.n)
    F = -S @ q.Q
    return HamiltonMap(F=F, ReF=F.real.copy(), ImF=F.imag.copy())


def hamilton_flow(ImF: np.ndarray, t: float, X) -> np.ndarray:
    """Integral curve at time t of the Hamilton field of Im q through X.

    The field of a quadratic form with Hamilton map B is X -> 2 B X (because
    grad q = 2 Q X), so the flow is exp(2 t B).
    """
    X = np.asarray(X, dtype=float)
    return expm(2.0 * t * np.asarray(ImF)) @ X


def average_real_part(q: QuadraticSymbol, T: float, X, order: int = 64) -> float:
    """Gauss-Legendre value of (1/2T) int_{-T}^{T} Re q(flow(t) X) dt."""
    if T <= 0:
        raise InputError("averaging window T must be positive")
    F = hamilton_map(q)
    nodes, weights = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for node, weight in zip(nodes, weights):
        Z = hamilton_flow(F.ImF, T * node, X)
        total += weight * float(Z @ q.Q.real @ Z)
    return 0.5 * total  # (1/2T) * T * sum(w f)


def poisson_bracket_quadratic(a: QuadraticSymbol, b: QuadraticSymbol) -> QuadraticSymbol:
    """Poisson bracket {a, b} = da/dxi . db/dx - da/dx . db/dxi of two forms.

    The result is again quadratic; its Hamilton map is -2 [F_a, F_b].  The
    coefficient matrix used here is the symmetrization of 4 A J^T B with
    J = -S, which the tests check against direct partial derivatives.
    """
    if a.n != b.n:
        raise InputError(f"dimension mismatch: {a.n} vs {b.n}")
    J = -symplectic_form(a.n)  # [[0, I], [-I, 0]]
    M = 4.0 * a.Q @ J.T @ b.Q
    C = 0.5 * (M + M.T)
    out = QuadraticSymbol(n=a.n, Q=C, label=f"{{{a.label or 'a'},{b.label or 'b'}}}")
    out.Q.setflags(write=False)
    return out


def numerical_range_samples(q: QuadraticSymbol, count: int, seed: int = 0) -> np.ndarray:
    """Deterministic values of q on the unit sphere (generators of the range cone)."""
    if count < 1:
        raise InputError("count must be >= 1")
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((count, q.dim))
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    return np.array([complex(p @ q.Q @ p) for p in pts])


def fokker_planck(a: float = 1.0) -> QuadraticSymbol:
    """Kinetic Fokker-Planck symbol xi2^2 + x2^2/4 + i(x2 xi1 - a x1 xi2), n = 2."""
    Q = np.zeros((4, 4), dtype=complex)
    Q[3, 3] = 1.0          # eta^2
    Q[1, 1] = 0.25         # v^2 / 4
    Q[1, 2] = Q[2, 1] = 0.5j        # i v xi
    Q[0, 3] = Q[3, 0] = -0.5j * a   # -i a x eta
    return quadratic_symbol(Q, label=f"fokker-planck(a={a})")


def harmonic_oscillator(n: int = 1) -> QuadraticSymbol:
    """|x|^2 + |xi|^2 on R^{2n}."""
    return quadratic_symbol(np.eye(2 * n), label="harmonic-oscillator")


def random_symplectic(n: int, rng: np.random.Generator, scale: float = 0.3) -> np.ndarray:
    """Random real symplectic matrix exp(J A), A symmetric of spectral size ~scale."""
    A = rng.standard_normal((2 * n, 2 * n))
    A = 0.5 * (A + A.T)
    A *= scale / max(1.0, np.linalg.norm(A, 2))
    J = -symplectic_form(n)
    return expm(J @ A)


def conjugate_symbol(q: QuadraticSymbol, M: np.ndarray) -> QuadraticSymbol:
    """Symbol of q composed with the linear map M, i.e. X -> q(M X)."""
    Q = M.T @ q.Q @ M
    return quadratic_symbol(Q, label=q.label and f"{q.label}∘M")
