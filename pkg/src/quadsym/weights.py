"""Constructive weight functions and sampled certification of their estimates.

All scalar fields here are compositions of quadratic forms, powers of
<X> = (1 + |X|^2)^{1/2} and smooth cutoffs, so gradients are propagated with
a small forward-mode pair (value, grad) rather than finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericInconsistency, PreconditionError
from .symbols import QuadraticSymbol, hamilton_map

__all__ = [
    "CutoffSpec",
    "WeightParams",
    "Diff",
    "cutoff",
    "r_k",
    "g_m",
    "H_applied",
    "multiplier_components",
    "certify_m1",
    "check_giu103",
    "CertificationResult",
]


# ---------------------------------------------------------------------------
# smooth cutoffs built from s(t) = exp(-1/t)
# ---------------------------------------------------------------------------

def _bump(t: float) -> float:
    if t < 1e-8:
        return 0.0
    return math.exp(-1.0 / t)


def _bump_prime(t: float) -> float:
    if t < 1e-8:
        return 0.0
    return math.exp(-1.0 / t) / (t * t)


def _smoothstep(t: float) -> tuple[float, float]:
    """C-infinity step rising 0 -> 1 on [0, 1], with derivative."""
    if t <= 0.0:
        return 0.0, 0.0
    if t >= 1.0:
        return 1.0, 0.0
    u, v = _bump(t), _bump(1.0 - t)
    up, vp = _bump_prime(t), -_bump_prime(1.0 - t)
    denom = u + v
    val = u / denom
    der = (up * v - u * vp) / (denom * denom)
    return val, der


@dataclass(frozen=True)
class CutoffSpec:
    """Threshold table of the four cutoff shapes.

    psi: 1 on [-plateau, plateau], supported in [-support, support].
    chi: 1 on inner <= |x| <= outer of the plateau pair, supported between
         the support pair.
    w:   1 for |x| >= plateau, supported in |x| >= support.
    w2:  variant of w whose transition sits inside psi's plateau so that
         supp psi' lies where w2 = 1 and supp w2' lies where psi = 1.
    """

    psi: tuple = (1.0, 2.0)
    chi: tuple = (0.5, 1.0, 2.0, 3.0)
    w: tuple = (1.0, 2.0)
    w2: tuple = (0.5, 1.0)

    def __post_init__(self):
        if not (self.psi[0] < self.psi[1] and self.w[0] < self.w[1]
                and self.w2[0] < self.w2[1]):
            raise InputError("cutoff thresholds must be strictly increasing")
        if self.w2[1] > self.psi[0]:
            raise InputError(
                "incompatible cutoffs: the w2 transition must finish inside psi's plateau"
            )


def cutoff(kind: str, spec: CutoffSpec, x: float) -> tuple[float, float]:
    """Value and derivative of the named cutoff at x."""
    ax, sx = abs(x), math.copysign(1.0, x)
    if kind == "psi":
        a, b = spec.psi
        v, d = _smoothstep((ax - a) / (b - a))
        return 1.0 - v, -d * sx / (b - a)
    if kind in ("w", "w1"):
        a, b = spec.w
        v, d = _smoothstep((ax - a) / (b - a))
        return v, d * sx / (b - a)
    if kind == "w2":
        a, b = spec.w2
        v, d = _smoothstep((ax - a) / (b - a))
        return v, d * sx / (b - a)
    if kind == "chi":
        s0, p0, p1, s1 = spec.chi
        v1, d1 = _smoothstep((ax - s0) / (p0 - s0))
        v2, d2 = _smoothstep((ax - p1) / (s1 - p1))
        val = v1 * (1.0 - v2)
        der = (d1 / (p0 - s0) * (1.0 - v2) - v1 * d2 / (s1 - p1)) * sx
        return val, der
    raise InputError(f"unknown cutoff kind {kind!r}")


# ---------------------------------------------------------------------------
# forward-mode scalar
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Diff:
    """Scalar value together with its phase-space gradient."""

    value: float
    grad: np.ndarray

    @staticmethod
    def constant(c: float, dim: int) -> "Diff":
        return Diff(float(c), np.zeros(dim))

    def __add__(self, other):
        if isinstance(other, Diff):
            return Diff(self.value + other.value, self.grad + other.grad)
        return Diff(self.value + other, self.grad)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Diff):
            return Diff(self.value - other.value, self.grad - other.grad)
        return Diff(self.value - other, self.grad)

    def __mul__(self, other):
        if isinstance(other, Diff):
            return Diff(self.value * other.value,
                        self.value * other.grad + other.value * self.grad)
        return Diff(self.value * other, self.grad * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Diff):
            inv = 1.0 / other.value
            return Diff(self.value * inv,
                        inv * self.grad - self.value * inv * inv * other.grad)
        return Diff(self.value / other, self.grad / other)

    def powf(self, p: float) -> "Diff":
        v = self.value ** p
        return Diff(v, p * self.value ** (p - 1.0) * self.grad)


def _quad_diff(A: np.ndarray, X: np.ndarray) -> Diff:
    AX = A @ X
    return Diff(float(X @ AX), 2.0 * AX)


def _bracket_pow(X: np.ndarray, p: float) -> Diff:
    b2 = 1.0 + float(X @ X)
    v = b2 ** (p / 2.0)
    return Diff(v, p * b2 ** (p / 2.0 - 1.0) * X)


def _apply_cutoff(kind: str, spec: CutoffSpec, arg: Diff) -> Diff:
    v, d = cutoff(kind, spec, arg.value)
    return Diff(v, d * arg.grad)


class _SymbolGeometry:
    """Cached ImF powers and bilinear block matrices of one symbol."""

    def __init__(self, q: QuadraticSymbol, depth: int):
        self.q = q
        F = hamilton_map(q)
        self.ImF = F.ImF
        ReQ = q.Q.real
        powers = [np.eye(2 * q.n)]
        for _ in range(depth):
            powers.append(self.ImF @ powers[-1])
        self.powers = powers
        # diag_block[l]  : matrix of Re q((ImF)^l X)
        # cross_block[k] : matrix of Re q((ImF)^{k-1} X; (ImF)^k X)
        self.diag_block = [p.T @ ReQ @ p for p in powers]
        self.cross_block = [None] + [
            0.5 * (powers[k - 1].T @ ReQ @ powers[k] + powers[k].T @ ReQ @ powers[k - 1])
            for k in range(1, depth + 1)
        ]

    def u(self, l: int, X: np.ndarray) -> Diff:
        return _quad_diff(self.diag_block[l], X)

    def r(self, k: int, X: np.ndarray) -> Diff:
        return _quad_diff(self.cross_block[k], X)


def r_k(q: QuadraticSymbol, k: int, X) -> float:
    """Mixed block Re q((ImF)^{k-1} X; (ImF)^k X)."""
    if k < 1:
        raise InputError("k must be >= 1")
    X = np.asarray(X, dtype=float)
    geo = _SymbolGeometry(q, k)
    return geo.r(k, X).value


def g_m(q: QuadraticSymbol, m: int, X, spec: CutoffSpec | None = None) -> Diff:
    """Leading weight component for a symbol needing m averaging steps.

    g_m = psi(Re q((ImF)^{m-1}X) <X>^{-2(2m-1)/(2m+1)}) <X>^{-4m/(2m+1)} r_m(X).
    """
    if m < 1:
        raise InputError("m must be >= 1")
    spec = spec or CutoffSpec()
    X = np.asarray(X, dtype=float)
    geo = _SymbolGeometry(q, m)
    mm = 2 * m + 1
    arg = geo.u(m - 1, X) * _bracket_pow(X, -2.0 * (2 * m - 1) / mm)
    gate = _apply_cutoff("psi", spec, arg)
    return gate * _bracket_pow(X, -4.0 * m / mm) * geo.r(m, X)


def H_applied(q: QuadraticSymbol, f, X) -> float:
    """Hamilton field of Im q applied to the scalar field f at X.

    f may be a Diff already evaluated at X, or a callable X -> Diff.
    """
    X = np.asarray(X, dtype=float)
    d = f(X) if callable(f) else f
    ImF = hamilton_map(q).ImF
    return float(d.grad @ (2.0 * ImF @ X))


# ---------------------------------------------------------------------------
# multiplier components for m >= 2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightParams:
    """Constants of the multiplier: m, the Lambda_j >= 1 and alpha_j >= 1."""

    m: int
    lambdas: tuple = ()
    alphas: tuple = ()
    spec: CutoffSpec = field(default_factory=CutoffSpec)

    def __post_init__(self):
        if self.m < 2:
            raise PreconditionError("multiplier components require m >= 2")
        need_lam = self.m - 1
        need_alpha = max(self.m - 2, 0)
        lams = self.lambdas or (1.0,) * need_lam
        alphas = self.alphas or (1.0,) * need_alpha
        if len(lams) != need_lam or len(alphas) != need_alpha:
            raise InputError(
                f"m={self.m} needs {need_lam} lambdas (j=0..m-2) and {need_alpha} alphas"
            )
        if any(l < 1 for l in lams) or any(a < 1 for a in alphas):
            raise InputError("all Lambda_j and alpha_j must be >= 1")
        object.__setattr__(self, "lambdas", tuple(float(v) for v in lams))
        object.__setattr__(self, "alphas", tuple(float(v) for v in alphas))


def multiplier_components(q: QuadraticSymbol, params: WeightParams, X,
                          denom_tol: float = 1e-30) -> dict:
    """Evaluate W~0, the W_j and Psi_j gates, the p_j pieces and their sum p.

    Components are evaluated literally, gated from the outside in: wherever
    the enclosing gate product vanishes the component is defined as 0, and a
    positive gate sitting on a vanishing denominator raises
    :class:`NumericInconsistency` instead of clamping.
    """
    m = params.m
    spec = params.spec
    X = np.asarray(X, dtype=float)
    dim = X.size
    geo = _SymbolGeometry(q, m)
    zero = Diff.constant(0.0, dim)

    u = [geo.u(l, X) for l in range(m)]

    w0_arg = u[m - 1] * _bracket_pow(X, -2.0 * (2 * m - 1) / (2 * m + 1))
    W0t = _apply_cutoff("w", spec, w0_arg)

    W: dict[int, Diff] = {}
    Psi: dict[int, Diff] = {}
    p_parts: dict[int, Diff] = {}

    def _ratio(num: Diff, den: Diff, power: float, lam: float, where: str) -> Diff:
        if den.value <= denom_tol:
            raise NumericInconsistency(
                f"denominator {where} vanished ({den.value:.3e}) inside its support"
            )
        return (num * lam) / den.powf(power)

    gate = W0t
    for j in range(0, m - 1):
        # W_j for j >= 1; gate tracks W~0 * W_1 ... W_{j}
        if j >= 1:
            if gate.value == 0.0:
                W[j] = zero
            else:
                e = (2 * m - 2 * j - 1) / (2 * m - 2 * j + 1)
                W[j] = _apply_cutoff(
                    "w2", spec,
                    _ratio(u[m - j - 1], u[m - j], e, params.lambdas[j - 1], f"of W_{j}"),
                )
            gate = gate * W[j]
        if j <= m - 2:
            if gate.value == 0.0:
                Psi[j] = zero
                p_parts[j] = zero
                continue
            e = (2 * m - 2 * j - 3) / (2 * m - 2 * j - 1)
            Psi[j] = _apply_cutoff(
                "psi", spec,
                _ratio(u[m - j - 2], u[m - j - 1], e, params.lambdas[j], f"of Psi_{j}"),
            )
            if u[m - j - 1].value <= denom_tol:
                raise NumericInconsistency(f"denominator of p_{j} vanished inside support")
            den = u[m - j - 1].powf((2 * m - 2 * j - 2) / (2 * m - 2 * j - 1))
            p_parts[j] = gate * Psi[j] * (geo.r(m - j - 1, X) / den)
    if m - 1 >= 1:
        j = m - 1
        if gate.value == 0.0:
            W[j] = zero
        else:
            e = (2 * m - 2 * j - 1) / (2 * m - 2 * j + 1)
            W[j] = _apply_cutoff(
                "w2", spec,
                _ratio(u[m - j - 1], u[m - j], e, params.lambdas[j - 1], f"of W_{j}"),
            )

    p = p_parts.get(0, zero)
    for j in range(1, m - 1):
        alpha = params.alphas[j - 1]
        p = p + alpha * p_parts[j]

    return {"W0_tilde": W0t, "W": W, "Psi": Psi, "p_parts": p_parts, "p": p}


# ---------------------------------------------------------------------------
# sampled certification
# ---------------------------------------------------------------------------

DEFAULT_SHELLS = tuple(float(2**k) for k in range(11))   # 1 .. 1024
DEFAULT_C1_GRID = (0.0,) + tuple(2.0**k for k in range(-16, 17))


@dataclass(frozen=True)
class CertificationResult:
    """Outcome of a sampled inequality search."""

    ok: bool
    c1: float | None
    c2: float | None
    worst_margin: float
    witnesses: tuple
    shell_margins: tuple      # (radius, min ratio) pairs for the chosen constants
    params: dict


def _shell_points(dim: int, shells, sphere_count: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((sphere_count, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs = np.vstack([np.eye(dim), -np.eye(dim), dirs])
    return [r * d for r in shells for d in dirs]


def certify_m1(q: QuadraticSymbol, shells=DEFAULT_SHELLS, c1_grid=DEFAULT_C1_GRID,
               sphere_count: int = 48, seed: int = 7,
               spec: CutoffSpec | None = None) -> CertificationResult:
    """Search constants c1, c2 > 0 with Re q + c1 H g_1 + 1 >= c2 <X>^{2/3}.

    The inequality is tested on geometric shells times a fixed sphere sample
    (plus the coordinate axes).  The largest feasible c2 over the c1 grid is
    returned; an infeasible search reports the violating points instead.
    """
    spec = spec or CutoffSpec()
    dim = 2 * q.n
    pts = _shell_points(dim, shells, sphere_count, seed)
    ReQ = q.Q.real

    req = np.array([float(X @ ReQ @ X) for X in pts])
    hg1 = np.array([H_applied(q, g_m(q, 1, X, spec), X) for X in pts])
    wt = np.array([(1.0 + float(X @ X)) ** (1.0 / 3.0) for X in pts])

    best = (-np.inf, None)
    for c1 in c1_grid:
        ratios = (req + c1 * hg1 + 1.0) / wt
        c2 = float(ratios.min())
        if c2 > best[0]:
            best = (c2, c1)
    c2, c1 = best
    ratios = (req + c1 * hg1 + 1.0) / wt
    ok = c2 > 0.0
    order = np.argsort(ratios)
    witnesses = tuple(np.asarray(pts[i]) for i in order[:5]) if not ok else ()
    radii = sorted({float(np.linalg.norm(X)) for X in pts})
    shell_margins = tuple(
        (r, float(min(ratios[i] for i, X in enumerate(pts)
                      if abs(np.linalg.norm(X) - r) < 1e-9 * max(1.0, r))))
        for r in radii
    )
    return CertificationResult(
        ok=ok,
        c1=float(c1),
        c2=c2 if ok else None,
        worst_margin=c2,
        witnesses=witnesses,
        shell_margins=shell_margins,
        params={"sphere_count": sphere_count, "seed": seed, "shells": tuple(shells)},
    )


def check_giu103(q: QuadraticSymbol, m: int, shells=DEFAULT_SHELLS,
                 epsilon: float = 0.5, sphere_count: int = 32, seed: int = 7,
                 c_grid=tuple(2.0**k for k in range(0, 21, 2)),
                 doubling_cap: float = 2.0**20,
                 spec: CutoffSpec | None = None) -> CertificationResult:
    """Sampled check of the final multiplier inequality for m >= 2.

    Looks for constants such that
        c Re q(X) + H p(X) + eps <X>^{2/(2m+1)} >= W~0(X) <X>^{2/(2m+1)}
    on the shell samples, doubling the Lambda_j and alpha_j constants in the
    order Lambda_0, alpha_1, Lambda_1, alpha_2, ... until the margin turns
    positive or the cap is reached.
    """
    if m < 2:
        raise PreconditionError("the multiplier inequality applies to m >= 2 only")
    spec = spec or CutoffSpec()
    dim = 2 * q.n
    pts = _shell_points(dim, shells, sphere_count, seed)
    ReQ = q.Q.real
    req = np.array([float(X @ ReQ @ X) for X in pts])
    wt = np.array([(1.0 + float(X @ X)) ** (1.0 / (2 * m + 1)) for X in pts])

    n_lam = m - 1
    n_alpha = max(m - 2, 0)
    lams = [1.0] * n_lam
    alphas = [1.0] * n_alpha
    # interleaved choice order: Lambda_0, alpha_1, Lambda_1, alpha_2, ...
    schedule = []
    for j in range(n_lam):
        schedule.append(("lambda", j))
        if j + 1 <= n_alpha:
            schedule.append(("alpha", j))

    def _margins() -> tuple[np.ndarray, float]:
        params = WeightParams(m=m, lambdas=tuple(lams), alphas=tuple(alphas), spec=spec)
        hp = np.empty(len(pts))
        w0 = np.empty(len(pts))
        for i, X in enumerate(pts):
            comp = multiplier_components(q, params, X)
            hp[i] = H_applied(q, comp["p"], X)
            w0[i] = comp["W0_tilde"].value
        best_margin, best_c = -np.inf, c_grid[0]
        for c in c_grid:
            margin = float((c * req + hp + epsilon * wt - w0 * wt).min())
            if margin > best_margin:
                best_margin, best_c = margin, c
        return hp, w0, best_margin, best_c

    step = 0
    while True:
        hp, w0, margin, c = _margins()
        if margin >= -1e-12 or not schedule:
            break
        kind, idx = schedule[step % len(schedule)]
        step += 1
        if kind == "lambda":
            lams[idx] *= 2.0
        else:
            alphas[idx] *= 2.0
        if max(lams + alphas + [1.0]) > doubling_cap:
            break

    params = WeightParams(m=m, lambdas=tuple(lams), alphas=tuple(alphas), spec=spec)
    margins = c * req + hp + epsilon * wt - w0 * wt
    ok = bool(margins.min() >= -1e-12)
    order = np.argsort(margins)
    witnesses = tuple(np.asarray(pts[i]) for i in order[:5]) if not ok else ()
    radii = sorted({float(np.linalg.norm(X)) for X in pts})
    shell_margins = tuple(
        (r, float(min(margins[i] for i, X in enumerate(pts)
                      if abs(np.linalg.norm(X) - r) < 1e-9 * max(1.0, r))))
        for r in radii
    )
    return CertificationResult(
        ok=ok,
        c1=float(c),
        c2=None,
        worst_margin=float(margins.min()),
        witnesses=witnesses,
        shell_margins=shell_margins,
        params={
            "m": m, "epsilon": epsilon, "lambdas": tuple(lams),
            "alphas": tuple(alphas), "seed": seed, "sphere_count": sphere_count,
        },
    )
