"""Twisted Selberg zeta values: determinant route, geodesic series, covers.

The determinant of I - L_{s,theta} is the production path, entire in s.
The log-series over primitive classes

    log Z(s,theta) = - sum_{n>=1} (1/n) sum_C chi_theta(C)^n
                      exp(-s n l(C)) / (1 - exp(-n l(C)))

converges only beyond the critical exponent and serves as an independent
oracle.  Finite abelian covers factor as the product of twisted values over
a rational character grid.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product as iter_product

import numpy as np

from .errors import DomainTooClose, IncompletePrimitives, InvalidCover
from .geodesics import PrimitiveTable, primitive_table
from .schottky import HomologyVector, SchottkyData
from .transfer import (
    DEFAULT_ORDER,
    ThetaPoint,
    build_operator,
    determinant,
    hausdorff_dimension,
)

SERIES_MARGIN = 0.3          # required Re(s) - delta for the geodesic series
ORDER_STEP = 8               # order increment for the error estimate
TAIL_CERT_BOUND = 1e-3       # certified tail must be below this to accept a table
DEFAULT_WORD_CUTOFF = 12
DEFAULT_N_MAX = 3


def character(theta, v: HomologyVector) -> complex:
    """Unitary character exp(2*pi*i <theta, v>) of the homology lattice."""
    theta = theta.coordinates if isinstance(theta, ThetaPoint) else tuple(theta)
    if len(theta) != len(v):
        raise ValueError(f"theta length {len(theta)} != vector length {len(v)}")
    return cmath.exp(2j * math.pi * sum(t * x for t, x in zip(theta, v)))


@dataclass(frozen=True)
class CoverSpec:
    """Finite abelian cover with cyclic factors Z/N_1 x ... x Z/N_k, k <= r."""

    moduli: tuple

    def __post_init__(self):
        object.__setattr__(self, "moduli", tuple(int(n) for n in self.moduli))
        if not self.moduli:
            raise InvalidCover("cover needs at least one cyclic factor")
        if any(n < 2 for n in self.moduli):
            raise InvalidCover(f"moduli must be >= 2, got {self.moduli}")

    @property
    def k(self) -> int:
        return len(self.moduli)

    @property
    def group_order(self) -> int:
        out = 1
        for n in self.moduli:
            out *= n
        return out

    def reduce(self, v: HomologyVector) -> tuple:
        """Image of a homology vector in the cover group (componentwise mod)."""
        if len(v) < self.k:
            raise InvalidCover(f"vector of length {len(v)} shorter than k = {self.k}")
        return tuple(v[i] % n for i, n in enumerate(self.moduli))

    def character_grid(self, rank: int) -> list:
        """The |G| character points (b_1/N_1, ..., b_k/N_k, 0, ..., 0).

        Lexicographic order in (b_1, ..., b_k) for reproducible products.
        """
        if self.k > rank:
            raise InvalidCover(f"k = {self.k} exceeds rank {rank}")
        pad = (0.0,) * (rank - self.k)
        return [
            ThetaPoint(tuple(b / n for b, n in zip(bs, self.moduli)) + pad)
            for bs in iter_product(*(range(n) for n in self.moduli))
        ]


@lru_cache(maxsize=16)
def _delta_cached(group: SchottkyData, order: int) -> float:
    return hausdorff_dimension(group, order)


def zeta_det(group: SchottkyData, s: complex, theta,
             order: int = DEFAULT_ORDER) -> tuple:
    """Twisted zeta value det(I - L) with an order-doubling error estimate.

    Returns (value, error_estimate): the value comes from order + ORDER_STEP,
    the estimate is the difference against the base order.
    """
    lo = determinant(build_operator(group, s, theta, order))
    hi = determinant(build_operator(group, s, theta, order + ORDER_STEP))
    return hi, abs(hi - lo)


def _table_arrays(primitives) -> tuple:
    classes = tuple(primitives)
    lengths = np.array([c.length for c in classes])
    homs = np.array([c.hom for c in classes], dtype=float)
    return lengths, homs


def zeta_series(group: SchottkyData, s: complex, theta, n_max: int,
                primitives, delta: float = None,
                order: int = DEFAULT_ORDER) -> complex:
    """Truncated geodesic log-series for the twisted zeta, Re(s) > delta.

    ``primitives`` should be a PrimitiveTable so completeness is certified;
    a bare class list is accepted and treated as certified up to its largest
    length.  DomainTooClose enforces the convergence margin, and
    IncompletePrimitives rejects tables whose certified tail is too large.
    """
    theta = ThetaPoint.of(theta, group.rank)
    if delta is None:
        delta = _delta_cached(group, order) if group.rank >= 2 else 0.0
    sigma = s.real if isinstance(s, complex) else float(s)
    if sigma - delta < SERIES_MARGIN:
        raise DomainTooClose(
            f"Re(s) - delta = {sigma - delta:.4f} below margin {SERIES_MARGIN}")
    cutoff = (primitives.certified_length if isinstance(primitives, PrimitiveTable)
              else max((c.length for c in primitives), default=0.0))
    tail = zeta_series_tail(group, s, n_max, primitives, delta,
                            certified_length=cutoff)
    if tail > TAIL_CERT_BOUND:
        raise IncompletePrimitives(
            f"certified cutoff {cutoff:.3f} leaves tail bound {tail:.2e}")
    lengths, homs = _table_arrays(primitives)
    phases = 2.0 * math.pi * (homs @ np.asarray(theta.coordinates))
    log_z = 0.0 + 0.0j
    for n in range(1, n_max + 1):
        q = np.exp(-complex(s) * n * lengths)
        log_z -= np.sum(np.exp(1j * n * phases) * q / (1.0 - np.exp(-n * lengths))) / n
    return complex(cmath.exp(log_z))


def zeta_series_tail(group: SchottkyData, s: complex, n_max: int, primitives,
                     delta: float, certified_length: float = None) -> float:
    """Bound on |log Z - truncated sum| from the measured class growth.

    Two pieces: classes beyond the certified length (all n), and repetition
    orders n > n_max (all classes).  The class-counting function is bounded
    by A*exp(delta*x) with A measured on the enumerated list and doubled.
    """
    classes = tuple(primitives)
    if not classes:
        return math.inf
    sigma = complex(s).real
    if certified_length is None:
        certified_length = max(c.length for c in classes)
    lengths = sorted(c.length for c in classes)
    l_min = lengths[0]
    growth = 2.0 * max((i + 1) * math.exp(-delta * x)
                       for i, x in enumerate(lengths))
    gap = sigma - delta
    if gap <= 0.0:
        return math.inf
    wall = 1.0 / (1.0 - math.exp(-l_min))
    # classes with length beyond the certified cutoff, n = 1 dominating
    tail_long = 2.0 * wall * growth * delta \
        * math.exp(-gap * certified_length) / gap if delta > 0 else 0.0
    # repetition orders beyond n_max for the enumerated classes
    s1 = float(np.sum(np.exp(-sigma * np.array([c.length for c in classes]))))
    ratio = math.exp(-sigma * l_min)
    tail_n = wall * s1 * ratio ** n_max / (n_max + 1) / (1.0 - ratio) \
        if ratio < 1.0 else math.inf
    return tail_long + tail_n


def default_primitive_table(group: SchottkyData,
                            word_cutoff: int = DEFAULT_WORD_CUTOFF) -> PrimitiveTable:
    """Certified table at the default desk-scale truncation."""
    return primitive_table(group, word_cutoff)


def cover_zeta(group: SchottkyData, s: complex, cover: CoverSpec,
               order: int = DEFAULT_ORDER) -> complex:
    """Zeta value of the cover: product of twisted values over the character grid.

    Factors are multiplied in the fixed lexicographic grid order so repeated
    runs reproduce bitwise.
    """
    value = 1.0 + 0.0j
    for theta in cover.character_grid(group.rank):
        v, _ = zeta_det(group, s, theta, order)
        value *= v
    return value
