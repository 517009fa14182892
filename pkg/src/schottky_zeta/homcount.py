"""Exact counting of primitive closed geodesics in a fixed homology class.

The counting function N(alpha, T) grows like c0 * exp(delta*T) / T^(r/2+1)
with a full expansion in powers of 1/T whose leading coefficient does not
depend on the class.  Counts here are exact (certified enumeration); the
fits are diagnostics against that law at desk scale, where convergence is
slow and tolerances are deliberately loose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import IllConditioned
from .geodesics import enumerate_primitives_by_length
from .schottky import HomologyVector, SchottkyData
from .transfer import DEFAULT_ORDER, hausdorff_dimension

COND_LIMIT = 1e10


def count_homology(group: SchottkyData, alpha: Sequence, t: float) -> int:
    """Exact number of primitive classes with homology alpha and length <= T."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != group.rank:
        raise ValueError(f"class vector length {len(alpha)} != rank {group.rank}")
    return sum(1 for c in enumerate_primitives_by_length(group, t)
               if c.hom == alpha)


@dataclass(frozen=True)
class HomologyCountTable:
    """Counts N(alpha, T) on an increasing grid of lengths."""

    alpha: HomologyVector
    grid: tuple            # (T, count) pairs, T increasing
    delta: float
    rank: int

    @property
    def lengths(self) -> np.ndarray:
        return np.array([t for t, _ in self.grid])

    @property
    def counts(self) -> np.ndarray:
        return np.array([n for _, n in self.grid])

    def normalized(self) -> np.ndarray:
        """Counts rescaled by T^(r/2+1) * exp(-delta*T): tends to c0."""
        t = self.lengths
        return self.counts * t ** (self.rank / 2.0 + 1.0) * np.exp(-self.delta * t)


def homology_count_table(group: SchottkyData, alpha: Sequence,
                         t_grid: Sequence, order: int = DEFAULT_ORDER,
                         delta: float = None) -> HomologyCountTable:
    """Tabulate exact counts on a length grid (one certified enumeration)."""
    alpha = tuple(int(a) for a in alpha)
    ts = sorted(float(t) for t in t_grid)
    if delta is None:
        delta = hausdorff_dimension(group, order)
    classes = [c for c in enumerate_primitives_by_length(group, ts[-1])
               if c.hom == alpha]
    lengths = sorted(c.length for c in classes)
    grid = []
    for t in ts:
        n = sum(1 for x in lengths if x <= t)
        grid.append((t, n))
    return HomologyCountTable(alpha=alpha, grid=tuple(grid), delta=delta,
                              rank=group.rank)


@dataclass(frozen=True)
class AsymptoticFit:
    """Least-squares coefficients of the 1/T expansion of normalized counts."""

    coefficients: tuple    # (c0, c1, ..., cn)
    residual: float        # ||y - fit|| / ||y||
    condition: float

    @property
    def c0(self) -> float:
        return self.coefficients[0]


def asymptotic_fit(table: HomologyCountTable, n_terms: int) -> AsymptoticFit:
    """Fit normalized counts against a polynomial in 1/T.

    n_terms is the number of correction terms beyond c0.  Raises
    IllConditioned when the design matrix condition number exceeds 1e10
    (grid too short for the requested order).
    """
    if len(table.grid) < n_terms + 3:
        raise ValueError(
            f"need at least {n_terms + 3} grid points for {n_terms} terms")
    t = table.lengths
    y = table.normalized()
    design = np.vander(1.0 / t, n_terms + 1, increasing=True)
    cond = float(np.linalg.cond(design))
    if cond > COND_LIMIT:
        raise IllConditioned(f"design condition number {cond:.3e}")
    coeffs, _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    fitted = design @ coeffs
    scale = float(np.linalg.norm(y))
    residual = float(np.linalg.norm(y - fitted)) / scale if scale > 0 else math.inf
    return AsymptoticFit(coefficients=tuple(float(c) for c in coeffs),
                         residual=residual, condition=cond)
