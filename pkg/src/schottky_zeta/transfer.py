"""Collocation discretization of the twisted transfer operator.

The operator acts on functions holomorphic on the union of the discs by

    (L F)(z) = sum_{j != i} (gamma_j'(z))^s * chi_theta(P gamma_j) * F(gamma_j z),
    z in disc i,

and is discretized by values at Chebyshev-Lobatto nodes on the real
diameters, with barycentric Lagrange interpolation transporting node values
to the image points.  All nodes are real and gamma_j' > 0 there, so
(gamma_j')^s = exp(s * log gamma_j') uses the real logarithm and the matrix
entries are branch-free.  Determinants of I - L converge geometrically in
the order because every branch maps its source diameter strictly inside the
target disc.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import NoBracket, NoConvergence, NodeEscapes, NonElementaryRequired
from .geodesics import _cyclic_words_with_maps
from .schottky import SchottkyData, all_maps, fixed_points, inverse_letter

DEFAULT_ORDER = 24
PRESSURE_BRACKET = (1e-4, 1.0 - 1e-4)
POWER_TOL = 1e-13
POWER_MAX_ITER = 20_000


@dataclass(frozen=True)
class ThetaPoint:
    """Point on the character torus R^r/Z^r, coordinates reduced into [0,1)."""

    coordinates: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "coordinates",
            tuple(float(x) - math.floor(float(x)) for x in self.coordinates))

    @classmethod
    def zero(cls, rank: int) -> "ThetaPoint":
        return cls((0.0,) * rank)

    @classmethod
    def of(cls, theta, rank: int) -> "ThetaPoint":
        """Coerce a ThetaPoint or coordinate sequence, checking the rank."""
        pt = theta if isinstance(theta, ThetaPoint) else cls(tuple(theta))
        if len(pt.coordinates) != rank:
            raise ValueError(f"theta has {len(pt.coordinates)} coordinates, need {rank}")
        return pt

    def negated(self) -> "ThetaPoint":
        return ThetaPoint(tuple(-x for x in self.coordinates))

    @property
    def rank(self) -> int:
        return len(self.coordinates)


def letter_characters(theta: ThetaPoint) -> tuple:
    """chi_theta(P gamma_j) for letters j = 1..2r (conjugates for inverses)."""
    vals = [cmath.exp(2j * math.pi * x) for x in theta.coordinates]
    return tuple(vals) + tuple(v.conjugate() for v in vals)


def chebyshev_lobatto(lo: float, hi: float, n: int) -> np.ndarray:
    """n Chebyshev-Lobatto points on [lo, hi], endpoints included, decreasing
    from hi to lo."""
    k = np.arange(n)
    return 0.5 * (lo + hi) + 0.5 * (hi - lo) * np.cos(np.pi * k / (n - 1))


def _barycentric_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[1::2] = -1.0
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _lagrange_rows(nodes: np.ndarray, weights: np.ndarray,
                   points: np.ndarray) -> np.ndarray:
    """Rows of Lagrange evaluation coefficients: out[p, k] = ell_k(points[p]).

    Barycentric second form; exact rows for points coinciding with nodes.
    """
    diff = points[:, None] - nodes[None, :]
    out = np.empty((len(points), len(nodes)))
    hit_p, hit_k = np.nonzero(diff == 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = weights[None, :] / diff
        out = terms / terms.sum(axis=1, keepdims=True)
    if hit_p.size:
        out[hit_p, :] = 0.0
        out[hit_p, hit_k] = 1.0
    return out


@dataclass(frozen=True)
class _Structure:
    """s- and theta-independent collocation data for one (group, order)."""

    nodes: tuple          # per-disc node arrays
    blocks: tuple         # (row_disc i, letter j, dlog array, coeff matrix)
    size: int


@lru_cache(maxsize=32)
def _structure(group: SchottkyData, order: int) -> _Structure:
    if order < 4:
        raise ValueError("collocation order must be >= 4")
    maps = all_maps(group)
    n_discs = 2 * group.rank
    nodes = []
    weights = _barycentric_weights(order)
    for m in range(1, n_discs + 1):
        lo, hi = group.interval(m)
        nodes.append(chebyshev_lobatto(lo, hi, order))
    blocks = []
    for i in group.letters:
        x = nodes[i - 1]
        for j in group.letters:
            if j == i:
                continue
            g = maps[j - 1]
            y = (g.a * x + g.b) / (g.c * x + g.d)
            target = group.disc(inverse_letter(j, group.rank))
            margin = target.radius - np.abs(y - target.center)
            if np.any(margin <= 0.0):
                raise NodeEscapes(
                    f"image of a node of disc {i} under letter {j} escapes "
                    f"disc {inverse_letter(j, group.rank)} (margin {margin.min():.3e})")
            dlog = -2.0 * np.log(np.abs(g.c * x + g.d))
            coeff = _lagrange_rows(nodes[inverse_letter(j, group.rank) - 1],
                                   weights, y)
            blocks.append((i, j, dlog, coeff))
    return _Structure(nodes=tuple(nodes), blocks=tuple(blocks),
                      size=n_discs * order)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense collocation matrix of the twisted operator at one (s, theta)."""

    order: int
    nodes: tuple
    entries: np.ndarray
    s: complex
    theta: ThetaPoint


def build_operator(group: SchottkyData, s: complex, theta,
                   order: int = DEFAULT_ORDER) -> OperatorMatrix:
    """Assemble the collocation matrix of the operator at (s, theta).

    Block (i, m) is nonzero exactly when m is the target disc of some
    letter j != i, i.e. every block except m = pair(i).
    """
    theta = ThetaPoint.of(theta, group.rank)
    st = _structure(group, order)
    chars = letter_characters(theta)
    mat = np.zeros((st.size, st.size), dtype=complex)
    s = complex(s)
    for i, j, dlog, coeff in st.blocks:
        row0 = (i - 1) * order
        col0 = (inverse_letter(j, group.rank) - 1) * order
        w = np.exp(s * dlog) * chars[j - 1]
        mat[row0:row0 + order, col0:col0 + order] = w[:, None] * coeff
    return OperatorMatrix(order=order, nodes=st.nodes, entries=mat,
                          s=s, theta=theta)


def determinant(op: OperatorMatrix) -> complex:
    """det(I - L) via pivoted LU (LAPACK); deterministic for fixed inputs."""
    n = op.entries.shape[0]
    return complex(np.linalg.det(np.eye(n) - op.entries))


def _real_matrix(group: SchottkyData, sigma: float, order: int) -> np.ndarray:
    """Untwisted operator matrix at real s = sigma (real arithmetic)."""
    st = _structure(group, order)
    mat = np.zeros((st.size, st.size))
    for i, j, dlog, coeff in st.blocks:
        row0 = (i - 1) * order
        col0 = (inverse_letter(j, group.rank) - 1) * order
        mat[row0:row0 + order, col0:col0 + order] = \
            np.exp(sigma * dlog)[:, None] * coeff
    return mat


def leading_eigenvalue(group: SchottkyData, sigma: float,
                       order: int = DEFAULT_ORDER,
                       tol: float = POWER_TOL,
                       max_iter: int = POWER_MAX_ITER) -> tuple:
    """Dominant eigenvalue and positive eigenvector node values at real sigma.

    Power iteration from the constant vector; the dominant eigenvalue is
    simple with a strictly positive eigenfunction, so the iteration converges
    with residual below tol.  Raises NoConvergence when the budget runs out.
    """
    mat = _real_matrix(group, float(sigma), order)
    v = np.ones(mat.shape[0])
    lam = 1.0
    for _ in range(max_iter):
        w = mat @ v
        lam = float(np.max(np.abs(w)))
        if lam == 0.0:
            raise NoConvergence("iterate collapsed to zero")
        w /= lam
        if float(np.max(np.abs(mat @ w - lam * w))) <= tol * max(1.0, lam):
            return lam, w
        v = w
    raise NoConvergence(
        f"power iteration did not reach residual {tol} in {max_iter} steps")


def pressure(group: SchottkyData, sigma: float,
              order: int = DEFAULT_ORDER) -> float:
    """Topological pressure P(sigma) = log of the dominant eigenvalue."""
    lam, _ = leading_eigenvalue(group, sigma, order)
    return math.log(lam)


def pressure_from_orbits(group: SchottkyData, sigma: float, n: int) -> float:
    """Periodic-orbit pressure approximant (1/n) log sum over n-periodic points.

    Independent oracle for :func:`pressure`: the weights are the attracting
    fixed-point derivatives of the cyclically reduced words of length n.
    """
    total = 0.0
    for letters, m in _cyclic_words_with_maps(group, n):
        if len(letters) == n:
            att, _ = fixed_points(m)
            total += m.derivative(att) ** sigma
    return math.log(total) / n


def hausdorff_dimension(group: SchottkyData, order: int = DEFAULT_ORDER,
                        tol: float = 1e-13) -> float:
    """Zero of the pressure function: dimension of the limit set, in (0,1).

    Bisection on the fixed bracket down to 1e-3 followed by safeguarded
    Newton with central differences.  Requires rank >= 2 (elementary groups
    have vanishing pressure only at the endpoint).
    """
    if group.rank < 2:
        raise NonElementaryRequired("Hausdorff dimension requires rank >= 2")
    lo, hi = PRESSURE_BRACKET
    p_lo = pressure(group, lo, order)
    p_hi = pressure(group, hi, order)
    if not (p_lo > 0.0 > p_hi):
        raise NoBracket(
            f"pressure does not change sign on {PRESSURE_BRACKET}: "
            f"P({lo}) = {p_lo:.3e}, P({hi}) = {p_hi:.3e}")
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if pressure(group, mid, order) > 0.0:
            lo = mid
        else:
            hi = mid
    x = 0.5 * (lo + hi)
    h = 1e-7
    for _ in range(60):
        p = pressure(group, x, order)
        dp = (pressure(group, x + h, order) - pressure(group, x - h, order)) / (2 * h)
        step = p / dp
        x_new = x - step
        if not lo < x_new < hi:  # fall back to bisection inside the bracket
            x_new = 0.5 * (lo + hi)
        if p > 0.0:
            lo = x
        else:
            hi = x
        if abs(x_new - x) <= tol:
            return x_new
        x = x_new
    return x


def dimension_from_determinant(group: SchottkyData, order: int = DEFAULT_ORDER,
                               hint: Optional[float] = None,
                               tol: float = 1e-13) -> float:
    """Largest real zero of det(I - L_sigma) at theta = 0.

    Second route to the dimension: det(I - L) is real for real sigma,
    positive above the leading zero and negative just below it.  ``hint``
    (defaulting to the pressure root) only seeds the bracket search; the
    returned zero is located on the determinant alone.
    """
    if group.rank < 2:
        raise NonElementaryRequired("leading determinant zero requires rank >= 2")

    def f(sigma: float) -> float:
        n = 2 * group.rank * order
        return float(np.linalg.det(np.eye(n) - _real_matrix(group, sigma, order)))

    x0 = hint if hint is not None else hausdorff_dimension(group, order)
    hi = min(x0 + 0.05, 0.999)
    if f(hi) <= 0.0:
        raise NoBracket(f"determinant not positive at sigma = {hi}")
    lo, step = x0 - 1e-3, 1e-3
    while f(lo) >= 0.0:
        step *= 2.0
        lo -= step
        if lo <= 0.0:
            raise NoBracket("no sign change of the determinant in (0, 1)")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
