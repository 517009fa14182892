"""Boundary dynamics and closed geodesics.

The piecewise map T(x) = gamma_j(x) on the real diameters I_j encodes the
group action; its periodic orbits are in bijection with cyclically reduced
words up to rotation, and primitive such classes are the primitive closed
geodesics of the quotient surface.  Classes are kept oriented: a class and
its inverse are two distinct entries with equal length and opposite homology.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Optional

from .errors import CutoffUncertain, OutsideDomain
from .schottky import (
    HomologyVector,
    MoebiusMap,
    SchottkyData,
    Word,
    all_maps,
    compose,
    fixed_points,
    homology,
    inverse_letter,
    translation_length,
)

# Word-length budget for exhaustive sweeps (the alphabet-(2r-1) tree grows fast).
MAX_DISTORTION_LENGTH = 12
CERT_MAX_BLOCK = 4  # contraction measured on cylinder blocks up to this depth


def bowen_series(group: SchottkyData, x: float) -> float:
    """Expanding boundary map: apply gamma_j on the interval I_j containing x."""
    for j in group.letters:
        lo, hi = group.interval(j)
        if lo < x < hi:
            return group.map_for(j)(x)
    raise OutsideDomain(f"{x} lies in no interval of the disc system")


@dataclass(frozen=True)
class PrimitiveClass:
    """Oriented primitive closed geodesic.

    ``representative`` is the lexicographically minimal rotation of the
    cyclically reduced word; ``length`` the geodesic length; ``hom`` the
    homology vector of the class."""

    representative: Word
    length: float
    hom: HomologyVector
    word_length: int


def _cyclic_words_with_maps(group: SchottkyData, n_max: int
                            ) -> Iterator[tuple]:
    """Yield (letters, map) for every cyclically reduced word of length <= n_max.

    Depth-first over the reduced-word tree, sharing prefix matrix products.
    """
    maps = all_maps(group)
    rank = group.rank

    def walk(prefix: tuple, m: MoebiusMap) -> Iterator[tuple]:
        if prefix:
            if prefix[0] != inverse_letter(prefix[-1], rank):
                yield prefix, m
            if len(prefix) == n_max:
                return
        banned = inverse_letter(prefix[-1], rank) if prefix else None
        for x in group.letters:
            if x == banned:
                continue
            yield from walk(prefix + (x,), compose(m, maps[x - 1]))

    yield from walk((), MoebiusMap.identity())


def _is_primitive(letters: tuple) -> bool:
    n = len(letters)
    for d in range(1, n // 2 + 1):
        if n % d == 0 and letters == letters[:d] * (n // d):
            return False
    return True


def _is_canonical(letters: tuple) -> bool:
    return all(letters <= letters[i:] + letters[:i] for i in range(1, len(letters)))


@lru_cache(maxsize=16)
def _primitives_cached(group: SchottkyData, max_word_length: int) -> tuple:
    out: List[PrimitiveClass] = []
    for letters, m in _cyclic_words_with_maps(group, max_word_length):
        if not _is_canonical(letters) or not _is_primitive(letters):
            continue
        out.append(PrimitiveClass(
            representative=Word(letters, group.rank),
            length=translation_length(m),
            hom=homology(letters, group.rank),
            word_length=len(letters),
        ))
    out.sort(key=lambda c: (c.word_length, c.representative.letters))
    return tuple(out)


def enumerate_primitives(group: SchottkyData, max_word_length: int
                         ) -> List[PrimitiveClass]:
    """All primitive classes of word length <= max_word_length.

    Each rotation class of cyclically reduced primitive words appears exactly
    once, represented by its minimal rotation; sorted by (word_length,
    representative).
    """
    if max_word_length < 1:
        raise ValueError("max_word_length must be >= 1")
    return list(_primitives_cached(group, max_word_length))


def count_cyclically_reduced(group: SchottkyData, n: int) -> int:
    """Number of cyclically reduced words of length exactly n (= #Fix(T^n))."""
    return sum(1 for letters, _ in _cyclic_words_with_maps(group, n)
               if len(letters) == n)


def periodic_points(group: SchottkyData, n: int) -> List[float]:
    """Fixed points of T^n, one per cyclically reduced word of length n.

    The point attached to a word w is the attracting fixed point of
    gamma_w, which lies in the interval paired with the first letter; the
    n-fold map strips one letter per step and returns there.
    """
    pts = []
    for letters, m in _cyclic_words_with_maps(group, n):
        if len(letters) == n:
            att, _ = fixed_points(m)
            pts.append(att)
    return pts


@dataclass(frozen=True)
class ContractionCertificate:
    """Measured uniform-hyperbolicity data used to certify length cutoffs.

    ``rate`` is the best per-letter contraction bound exp(-rate) obtained
    from cylinder blocks of depth ``block``: every word of length n has
    geodesic length >= floor(n/block)*block*rate.
    """

    rate: float
    block: int
    per_letter: float  # depth-1 rate, possibly <= 0 when a single letter expands

    def min_length(self, n: int) -> float:
        q, rem = divmod(n, self.block)
        extra = rem * max(self.per_letter, 0.0)
        return q * self.block * self.rate + extra

    def word_cutoff(self, t: float) -> int:
        """Smallest n such that every word longer than n has length > t."""
        n = self.block
        while self.min_length(n + 1) <= t:
            n += 1
            if n > 10_000:
                raise CutoffUncertain("contraction too weak to reach the target length")
        return n


def _sup_derivative(m: MoebiusMap, lo: float, hi: float) -> float:
    """max of m' over [lo, hi]; the derivative is monotone (pole lies outside)."""
    mid = 0.5 * (lo + hi)
    return max(m.derivative(lo), m.derivative(mid), m.derivative(hi))


@lru_cache(maxsize=32)
def contraction_certificate(group: SchottkyData,
                            max_block: int = CERT_MAX_BLOCK) -> ContractionCertificate:
    """Measure the maximal contraction factor of inverse branches.

    For block depth k, rho_k is the sup of gamma_w' over all admissible
    length-k words w and all intervals the word may be applied to; the
    certified per-letter rate is -log(rho_k)/k, maximized over k.  Raises
    CutoffUncertain when no measured depth contracts.
    """
    maps = all_maps(group)
    rank = group.rank
    best_rate, best_block = -math.inf, 1
    per_letter = None
    rho_prev: dict = {(): MoebiusMap.identity()}
    for k in range(1, max_block + 1):
        rho_k = 0.0
        new: dict = {}
        for prefix, m in rho_prev.items():
            banned = inverse_letter(prefix[-1], rank) if prefix else None
            for x in group.letters:
                if x == banned:
                    continue
                new[prefix + (x,)] = compose(m, maps[x - 1])
        for word, m in new.items():
            for j in group.letters:
                if j == word[-1]:
                    continue  # gamma_w admissible on I_j only when last letter != j
                lo, hi = group.interval(j)
                rho_k = max(rho_k, _sup_derivative(m, lo, hi))
        rate_k = -math.log(rho_k) / k if rho_k > 0 else math.inf
        if k == 1:
            per_letter = rate_k if rho_k < 1.0 else 0.0
        if rate_k > best_rate:
            best_rate, best_block = rate_k, k
        rho_prev = new
    if best_rate <= 0.0:
        raise CutoffUncertain(
            "no measured block depth contracts; cannot certify completeness")
    return ContractionCertificate(rate=best_rate, block=best_block,
                                  per_letter=per_letter)


@dataclass(frozen=True)
class PrimitiveTable:
    """Primitive classes together with the completeness they certify.

    Every primitive class of geodesic length <= certified_length appears;
    classes of larger length up to the word cutoff may be present as well.
    """

    classes: tuple
    word_cutoff: int
    certified_length: float

    def __iter__(self):
        return iter(self.classes)

    def __len__(self):
        return len(self.classes)


@dataclass(frozen=True)
class TransitionSystem:
    """Certified per-letter length costs with two letters of lookahead.

    ``weight[(a, b, c)]`` bounds from below the length contribution of an
    occurrence of letter a that is followed by letters b, c in a cyclic
    word: the corresponding derivative factor is evaluated inside
    gamma_b(cylinders of the disc paired with c).  Cyclic sums of weights
    bound geodesic lengths from below.  Weights carry a potential on the
    pair digraph (telescoping away on cycles) so each is at least ``floor``,
    half the certified minimum mean cycle.
    """

    weights: dict
    floor: float
    mean_cycle: float

    def cyclic_bound(self, letters: tuple) -> float:
        n = len(letters)
        return sum(self.weights[(letters[i], letters[(i + 1) % n],
                                 letters[(i + 2) % n])] for i in range(n))


@lru_cache(maxsize=32)
def transition_system(group: SchottkyData, depth: int = 3) -> TransitionSystem:
    """Measure the certified transition costs at a cylinder refinement depth.

    Raises CutoffUncertain when the minimum mean cycle is not positive,
    i.e. uniform hyperbolicity is not visible at this context length.
    """
    rank = group.rank
    letters = list(group.letters)
    pieces = _cylinder_pieces(group, depth)
    domains = {}
    for b in letters:
        g = group.map_for(b)
        for c in letters:
            if c == inverse_letter(b, rank):
                continue
            imgs = []
            for lo, hi in pieces[inverse_letter(c, rank)]:
                u, v = g(lo), g(hi)
                imgs.append((u, v) if u <= v else (v, u))
            domains[(b, c)] = imgs
    raw = {}
    for a in letters:
        g = group.map_for(a)
        for b in letters:
            if b == inverse_letter(a, rank):
                continue
            for c in letters:
                if c == inverse_letter(b, rank):
                    continue
                sup = max(_sup_derivative(g, lo, hi)
                          for lo, hi in domains[(b, c)])
                raw[(a, b, c)] = -math.log(sup)
    # Pair digraph: node (a, b), edge (a, b) -> (b, c) weighted by raw(a,b,c).
    nodes = [(a, b) for a in letters for b in letters
             if b != inverse_letter(a, rank)]
    edges = {((a, b), (b, c)): w for (a, b, c), w in raw.items()}
    mu = _min_mean_cycle(nodes, edges)
    if mu <= 0.0:
        raise CutoffUncertain(
            f"minimum mean transition cycle {mu:.3e} is not positive at "
            f"cylinder depth {depth}")
    lam = 0.5 * mu
    dist = {v: 0.0 for v in nodes}
    for _ in nodes:
        for (u, v), w in edges.items():
            cand = dist[u] + w - lam
            if cand < dist[v]:
                dist[v] = cand
    weights = {(a, b, c): w + dist[(a, b)] - dist[(b, c)]
               for (a, b, c), w in raw.items()}
    return TransitionSystem(weights=weights, floor=lam, mean_cycle=mu)


def _cylinder_pieces(group: SchottkyData, depth: int) -> dict:
    """Depth-k cylinder subintervals of each interval.

    Periodic orbit points lie in the limit set, hence inside every cylinder
    union, so derivative sups over these pieces stay valid bounds for the
    chain factors of cyclic words while being much sharper than the full
    interval when disc sizes are unequal.
    """
    pieces = {m: [group.interval(m)] for m in group.letters}
    for _ in range(depth):
        new = {}
        for m in group.letters:
            g = group.map_for(inverse_letter(m, group.rank))
            new[m] = []
            for j in group.letters:
                if j == inverse_letter(m, group.rank):
                    continue
                for lo, hi in pieces[j]:
                    a, b = g(lo), g(hi)
                    new[m].append((a, b) if a <= b else (b, a))
        pieces = new
    return pieces


def _min_mean_cycle(nodes: list, weights: dict) -> float:
    """Karp's minimum mean cycle on the transition digraph."""
    n = len(nodes)
    big = math.inf
    d = [{v: (0.0 if k == 0 else big) for v in nodes} for k in range(n + 1)]
    for k in range(1, n + 1):
        for (a, b), w in weights.items():
            if d[k - 1][a] < big:
                cand = d[k - 1][a] + w
                if cand < d[k][b]:
                    d[k][b] = cand
    best = big
    for v in nodes:
        if d[n][v] >= big:
            continue
        worst = -big
        for k in range(n):
            if d[k][v] < big:
                worst = max(worst, (d[n][v] - d[k][v]) / (n - k))
        best = min(best, worst)
    return best


# Node budget for the weighted enumeration; prevents runaway trees when the
# requested length is far beyond desk scale.
ENUMERATION_BUDGET = 60_000_000


@lru_cache(maxsize=8)
def _primitives_by_length_cached(group: SchottkyData, t: float) -> tuple:
    """All primitive classes of geodesic length <= t, certified complete.

    Depth-first search over reduced words pruned by cyclic transition-weight
    sums: a prefix is abandoned once its accumulated weight plus the minimal
    possible closing cost exceeds t, which certifies that every discarded
    class is longer than t.
    """
    system = None
    for depth in (3, 4, 5, 6):
        try:
            system = transition_system(group, depth)
            break
        except CutoffUncertain:
            continue
    if system is None:
        raise CutoffUncertain(
            "uniform hyperbolicity not certified up to cylinder depth 6")
    weights = system.weights
    floor = system.floor
    maps = all_maps(group)
    rank = group.rank
    out = []
    budget = [ENUMERATION_BUDGET]

    def emit(prefix, m):
        if system.cyclic_bound(prefix) <= t:
            length = translation_length(m)
            if length <= t and _is_canonical(prefix) and _is_primitive(prefix):
                out.append(PrimitiveClass(
                    representative=Word(prefix, rank),
                    length=length,
                    hom=homology(prefix, rank),
                    word_length=len(prefix),
                ))

    def walk(prefix, m, acc):
        budget[0] -= 1
        if budget[0] < 0:
            raise CutoffUncertain(
                f"enumeration budget exhausted at length {t} "
                "(contraction too weak)")
        if len(prefix) > 900:
            raise CutoffUncertain(
                f"word depth {len(prefix)} exceeded at length {t}")
        first = prefix[0]
        last = prefix[-1]
        if first != inverse_letter(last, rank):  # cyclically reduced
            emit(prefix, m)
        banned = inverse_letter(last, rank)
        for x in group.letters:
            if x == banned:
                continue
            # A canonical representative is minimal among rotations, hence
            # never has a letter smaller than its first one.
            if x < first:
                continue
            # One more interior triple completes with every added letter;
            # closing any extension costs two more edges of at least floor.
            nxt = acc + (weights[(prefix[-2], last, x)]
                         if len(prefix) >= 2 else 0.0)
            if nxt + 2.0 * floor > t:
                continue
            walk(prefix + (x,), compose(m, maps[x - 1]), nxt)

    for a in group.letters:
        walk((a,), maps[a - 1], 0.0)
    out.sort(key=lambda c: (c.word_length, c.representative.letters))
    return tuple(out)


def primitive_table(group: SchottkyData, word_cutoff: int) -> PrimitiveTable:
    """Enumerate primitives up to a word-length cutoff with certification.

    certified_length is a lower bound for the geodesic length of every word
    longer than the cutoff, from the measured contraction certificate (or
    the transition-weight floor when no single block depth contracts).
    """
    try:
        cert = contraction_certificate(group)
        certified = cert.min_length(word_cutoff + 1)
    except CutoffUncertain:
        certified = (word_cutoff + 1) * transition_system(group).floor
    classes = _primitives_cached(group, word_cutoff)
    return PrimitiveTable(classes=classes, word_cutoff=word_cutoff,
                          certified_length=certified)


def enumerate_primitives_by_length(group: SchottkyData, max_geodesic_length: float
                                   ) -> List[PrimitiveClass]:
    """All primitive classes of geodesic length <= T, certified complete.

    Completeness comes from the measured transition weights (CutoffUncertain
    when hyperbolicity cannot be certified or the tree outgrows the budget).
    """
    if max_geodesic_length <= 0.0:
        raise ValueError("max_geodesic_length must be positive")
    return list(_primitives_by_length_cached(group, float(max_geodesic_length)))


@dataclass(frozen=True)
class DistortionReport:
    """Sampled sup-norms of derivative ratios over admissible words of length n.

    max_d2 bounds |gamma''/gamma'|, max_d3 bounds |gamma'''/gamma'|, and
    ratio_bound bounds gamma'(x)/gamma'(y) over points of one interval;
    max_contraction is the sup of gamma' itself.
    """

    n: int
    max_d2: float
    max_d3: float
    ratio_bound: float
    max_contraction: float


def distortion_report(group: SchottkyData, n: int,
                      samples: int = 9) -> DistortionReport:
    """Evaluate distortion quantities over all words in the admissible families.

    Used as a regression check that the bounds stabilize as n grows; n is
    capped at MAX_DISTORTION_LENGTH to keep the sweep exhaustive.
    """
    if not 1 <= n <= MAX_DISTORTION_LENGTH:
        raise ValueError(f"n must be in 1..{MAX_DISTORTION_LENGTH}")
    max_d2 = max_d3 = ratio = rho = 0.0
    for letters, m in _reduced_words_with_maps(group, n):
        for j in group.letters:
            if j == letters[-1]:
                continue
            lo, hi = group.interval(j)
            xs = [lo + (hi - lo) * t / (samples - 1) for t in range(samples)]
            d1 = [m.derivative(x) for x in xs]
            max_d2 = max(max_d2, max(abs(m.log_derivative_ratio2(x)) for x in xs))
            max_d3 = max(max_d3, max(abs(m.log_derivative_ratio3(x)) for x in xs))
            ratio = max(ratio, max(d1) / min(d1))
            rho = max(rho, max(d1))
    return DistortionReport(n=n, max_d2=max_d2, max_d3=max_d3,
                            ratio_bound=ratio, max_contraction=rho)


def _reduced_words_with_maps(group: SchottkyData, n: int) -> Iterator[tuple]:
    """(letters, map) over all reduced words of length exactly n."""
    maps = all_maps(group)
    rank = group.rank

    def walk(prefix: tuple, m: MoebiusMap) -> Iterator[tuple]:
        if len(prefix) == n:
            yield prefix, m
            return
        banned = inverse_letter(prefix[-1], rank) if prefix else None
        for x in group.letters:
            if x == banned:
                continue
            yield from walk(prefix + (x,), compose(m, maps[x - 1]))

    yield from walk((), MoebiusMap.identity())


def class_of_inverse(cls: PrimitiveClass) -> tuple:
    """Canonical letters of the inverse class (involution negating homology)."""
    return cls.representative.inverse().canonical_rotation()
