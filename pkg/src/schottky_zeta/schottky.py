"""Schottky group data: Moebius maps, disc systems, words, homology.

A rank-``r`` Schottky group is the free group generated by ``r`` hyperbolic
Moebius maps pairing ``2r`` pairwise disjoint open discs centered on the
real line: generator ``i`` maps disc ``i`` onto the complement of the
closure of disc ``r+i``.  Letters are integers ``1..2r``; letter ``r+i``
denotes the inverse of generator ``i``.  All word arithmetic is exact
integer arithmetic; geometry is double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, Optional, Sequence

from .errors import (
    BadLetter,
    DiscsNotSeparated,
    FixedPointAtInfinity,
    NonReducedWord,
    NotHyperbolic,
)

DET_TOL = 1e-12
HYPERBOLIC_TOL = 1e-12
PAIRING_SAMPLES = 64

HomologyVector = tuple  # length-r tuple of ints


@dataclass(frozen=True)
class MoebiusMap:
    """Real Moebius transformation z -> (az+b)/(cz+d), normalized to ad-bc=1."""

    a: float
    b: float
    c: float
    d: float

    @classmethod
    def normalized(cls, a: float, b: float, c: float, d: float) -> "MoebiusMap":
        """Scale to unit determinant and fix the sign so that a+d >= 0.

        Raises ValueError on det <= 0 (orientation-reversing or singular).
        """
        det = a * d - b * c
        if det <= 0.0:
            raise ValueError(f"matrix determinant {det} is not positive")
        s = 1.0 / math.sqrt(det)
        a, b, c, d = a * s, b * s, c * s, d * s
        if a + d < 0.0:
            a, b, c, d = -a, -b, -c, -d
        return cls(a, b, c, d)

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_fixed_points(cls, attracting: float, repelling: float,
                          length: float) -> "MoebiusMap":
        """Hyperbolic map with the given real fixed points and translation length.

        The derivative at the attracting fixed point is exp(-length).
        """
        if length <= 0.0:
            raise ValueError("translation length must be positive")
        p, q, k = attracting, repelling, math.exp(-length)
        return cls.normalized(p - q * k, -p * q * (1.0 - k), 1.0 - k, -(q - p * k))

    def __call__(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)

    def derivative(self, z):
        """gamma'(z) = 1/(cz+d)^2; positive for real z away from the pole."""
        w = self.c * z + self.d
        return 1.0 / (w * w)

    def log_derivative_ratio2(self, z):
        """gamma''/gamma' = -2c/(cz+d)."""
        return -2.0 * self.c / (self.c * z + self.d)

    def log_derivative_ratio3(self, z):
        """gamma'''/gamma' = 6c^2/(cz+d)^2."""
        w = self.c * z + self.d
        return 6.0 * self.c * self.c / (w * w)

    def inverse(self) -> "MoebiusMap":
        m = MoebiusMap(self.d, -self.b, -self.c, self.a)
        if m.a + m.d < 0.0:
            m = MoebiusMap(-m.a, -m.b, -m.c, -m.d)
        return m

    @property
    def trace(self) -> float:
        return self.a + self.d

    def is_hyperbolic(self) -> bool:
        return abs(self.trace) > 2.0 + HYPERBOLIC_TOL


def compose(f: MoebiusMap, g: MoebiusMap) -> MoebiusMap:
    """Composition f o g as matrix product, sign-fixed so that a+d >= 0.

    Unit-determinant inputs give a unit-determinant product exactly, so no
    renormalization happens here: for long words the recomputed ad-bc is
    dominated by cancellation noise and dividing by it would inject error.
    """
    a = f.a * g.a + f.b * g.c
    b = f.a * g.b + f.b * g.d
    c = f.c * g.a + f.d * g.c
    d = f.c * g.b + f.d * g.d
    if a + d < 0.0:
        a, b, c, d = -a, -b, -c, -d
    return MoebiusMap(a, b, c, d)


@dataclass(frozen=True)
class Disc:
    """Open Euclidean disc centered on the real line (orthogonal to R)."""

    center: float
    radius: float

    def __post_init__(self):
        if not self.radius > 0.0:
            raise ValueError(f"disc radius must be positive, got {self.radius}")

    @property
    def interval(self) -> tuple:
        """Real diameter (center - radius, center + radius)."""
        return (self.center - self.radius, self.center + self.radius)

    def contains(self, z, margin: float = 0.0) -> bool:
        return abs(z - self.center) < self.radius - margin


def inverse_letter(letter: int, rank: int) -> int:
    """Letter of the inverse generator: i <-> r+i."""
    return letter + rank if letter <= rank else letter - rank


def _check_letters(letters: Sequence[int], rank: int) -> None:
    for x in letters:
        if not (isinstance(x, int) and 1 <= x <= 2 * rank):
            raise BadLetter(f"letter {x!r} outside alphabet 1..{2 * rank}")


@dataclass(frozen=True)
class Word:
    """Word over the alphabet 1..2r, letters stored as an int tuple."""

    letters: tuple
    rank: int

    def __post_init__(self):
        object.__setattr__(self, "letters", tuple(self.letters))
        _check_letters(self.letters, self.rank)

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def reduced(self) -> bool:
        r = self.rank
        return all(
            self.letters[i + 1] != inverse_letter(self.letters[i], r)
            for i in range(len(self.letters) - 1)
        )

    @property
    def cyclically_reduced(self) -> bool:
        w = self.letters
        if not self.reduced:
            return False
        if len(w) <= 1:
            return True
        return w[0] != inverse_letter(w[-1], self.rank)

    def inverse(self) -> "Word":
        r = self.rank
        return Word(tuple(inverse_letter(x, r) for x in reversed(self.letters)), r)

    def rotations(self) -> Iterator[tuple]:
        w = self.letters
        for i in range(len(w)):
            yield w[i:] + w[:i]

    def canonical_rotation(self) -> tuple:
        """Lexicographically minimal cyclic rotation of the letter tuple."""
        return min(self.rotations()) if self.letters else ()

    def is_primitive(self) -> bool:
        """True unless the word is a proper power u^m, m >= 2."""
        w, n = self.letters, len(self.letters)
        if n == 0:
            return False
        for d in range(1, n // 2 + 1):
            if n % d == 0 and w == w[:d] * (n // d):
                return False
        return True


def homology(word, rank: int) -> HomologyVector:
    """Abelianization: entry i counts letter i minus letter r+i occurrences."""
    letters = word.letters if isinstance(word, Word) else tuple(word)
    _check_letters(letters, rank)
    v = [0] * rank
    for x in letters:
        if x <= rank:
            v[x - 1] += 1
        else:
            v[x - rank - 1] -= 1
    return tuple(v)


def enumerate_words(rank: int, length: int,
                    forbidden_last: Optional[int] = None) -> Iterator[Word]:
    """Yield each reduced word of the given length once, in lexicographic order.

    With ``forbidden_last`` set to a letter j, restricts to words whose last
    letter differs from j (the admissible families indexing transfer-operator
    iterates).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    if forbidden_last is not None:
        _check_letters((forbidden_last,), rank)
    alphabet = range(1, 2 * rank + 1)

    def extend(prefix: tuple) -> Iterator[tuple]:
        if len(prefix) == length:
            yield prefix
            return
        last_slot = len(prefix) == length - 1
        for x in alphabet:
            if prefix and x == inverse_letter(prefix[-1], rank):
                continue
            if last_slot and x == forbidden_last:
                continue
            yield from extend(prefix + (x,))

    for letters in extend(()):
        yield Word(letters, rank)


@dataclass(frozen=True)
class SchottkyData:
    """Disc system plus generators; the presentation every other module consumes.

    ``discs`` has length 2r in letter order, ``generators`` length r.  The
    constructor checks shapes only; call :func:`validate` for the semantic
    invariants (disjointness, pairing, determinants).
    """

    rank: int
    discs: tuple
    generators: tuple

    def __post_init__(self):
        object.__setattr__(self, "discs", tuple(self.discs))
        object.__setattr__(self, "generators", tuple(self.generators))
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if len(self.discs) != 2 * self.rank:
            raise ValueError(f"need {2 * self.rank} discs, got {len(self.discs)}")
        if len(self.generators) != self.rank:
            raise ValueError(f"need {self.rank} generators, got {len(self.generators)}")

    def map_for(self, letter: int) -> MoebiusMap:
        """Moebius map of a letter (inverse maps for letters > r)."""
        _check_letters((letter,), self.rank)
        if letter <= self.rank:
            return self.generators[letter - 1]
        return self.generators[letter - self.rank - 1].inverse()

    def disc(self, letter: int) -> Disc:
        _check_letters((letter,), self.rank)
        return self.discs[letter - 1]

    def interval(self, letter: int) -> tuple:
        return self.disc(letter).interval

    @property
    def letters(self) -> range:
        return range(1, 2 * self.rank + 1)


@lru_cache(maxsize=64)
def all_maps(group: SchottkyData) -> tuple:
    """Maps of all 2r letters, index letter-1."""
    return tuple(group.map_for(x) for x in group.letters)


def word_to_map(group: SchottkyData, w) -> MoebiusMap:
    """Compose the letter maps of a reduced word (empty word -> identity)."""
    word = w if isinstance(w, Word) else Word(tuple(w), group.rank)
    if word.rank != group.rank:
        raise BadLetter(f"word rank {word.rank} != group rank {group.rank}")
    if not word.reduced:
        raise NonReducedWord(f"word {word.letters} contains a cancelling pair")
    maps = all_maps(group)
    m = MoebiusMap.identity()
    for x in word.letters:
        m = compose(m, maps[x - 1])
    return m


def fixed_points(g: MoebiusMap) -> tuple:
    """Real fixed points of a hyperbolic map as (attracting, repelling).

    Solves cz^2 + (d-a)z - b = 0.  Maps with c = 0 fix infinity and are
    rejected with FixedPointAtInfinity; validated Schottky generators always
    have finite isometric-circle centers, hence c != 0.
    """
    tr = abs(g.trace)
    if tr <= 2.0 + HYPERBOLIC_TOL:
        raise NotHyperbolic(f"|trace| = {tr} <= 2")
    if g.c == 0.0:
        raise FixedPointAtInfinity("map fixes infinity (c = 0)")
    disc = math.sqrt(tr * tr - 4.0)
    q = g.a - g.d
    # Stable quadratic roots: avoid cancellation in q -/+ disc.
    if q >= 0.0:
        x1 = (q + disc) / (2.0 * g.c)
    else:
        x1 = (q - disc) / (2.0 * g.c)
    # Root product is -b/c.
    x2 = -g.b / (g.c * x1) if x1 != 0.0 else (q - math.copysign(disc, q)) / (2.0 * g.c)
    if abs(g.derivative(x1)) < 1.0:
        return (x1, x2)
    return (x2, x1)


def translation_length(g: MoebiusMap) -> float:
    """Geodesic translation length 2*arccosh(|a+d|/2) of a hyperbolic map."""
    tr = abs(g.trace)
    if tr <= 2.0 + HYPERBOLIC_TOL:
        raise NotHyperbolic(f"|trace| = {tr} <= 2")
    return 2.0 * math.acosh(tr / 2.0)


@dataclass(frozen=True)
class Violation:
    """One failed invariant: kind is DiscOverlap | PairingFailure | NonUnitDeterminant."""

    kind: str
    where: tuple
    detail: float

    def __str__(self) -> str:
        return f"{self.kind}{self.where}: {self.detail:.3e}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v.kind for v in self.violations}

    def __str__(self) -> str:
        if self.ok:
            return "valid Schottky data"
        return "\n".join(str(v) for v in self.violations)


def validate(group: SchottkyData) -> ValidationReport:
    """Check disc disjointness, boundary pairing, and unit determinants.

    Report style: every violated invariant is listed; an empty report means
    the data is a genuine Schottky system.
    """
    out = []
    n = 2 * group.rank
    for i in range(n):
        for j in range(i + 1, n):
            di, dj = group.discs[i], group.discs[j]
            gap = abs(di.center - dj.center) - (di.radius + dj.radius)
            if gap <= DET_TOL:
                out.append(Violation("DiscOverlap", (i + 1, j + 1), gap))
    for i, g in enumerate(group.generators):
        err = abs(g.a * g.d - g.b * g.c - 1.0)
        if err > DET_TOL:
            out.append(Violation("NonUnitDeterminant", (i + 1,), err))
    for i in range(group.rank):
        src = group.discs[i]
        dst = group.discs[i + group.rank]
        g = group.generators[i]
        max_dev = 0.0
        oriented = True
        for k in range(PAIRING_SAMPLES):
            phi = 2.0 * math.pi * k / PAIRING_SAMPLES
            z = complex(src.center + src.radius * math.cos(phi),
                        src.radius * math.sin(phi))
            denom = g.c * z + g.d
            if abs(denom) < 1e-14:  # pole on the boundary: certain failure
                max_dev = math.inf
                break
            w = g(z)
            max_dev = max(max_dev, abs(abs(w - dst.center) - dst.radius))
            # Interior must map to the exterior of the partner disc: probe a
            # point slightly inside the source boundary.
            z_in = src.center + (z - src.center) * 0.99
            if abs(g.c * z_in + g.d) > 1e-14 and abs(g(z_in) - dst.center) < dst.radius:
                oriented = False
        tol = 1e-9 * max(1.0, dst.radius)
        if max_dev > tol or not oriented:
            detail = max_dev if oriented else math.inf
            out.append(Violation("PairingFailure", (i + 1,), detail))
    return ValidationReport(tuple(out))


def _isometric_disc(g: MoebiusMap) -> Disc:
    """Disc on which |g'| > 1: center -d/c = g^{-1}(inf), radius 1/|c|."""
    if g.c == 0.0:
        raise FixedPointAtInfinity("isometric circle undefined for c = 0")
    return Disc(-g.d / g.c, 1.0 / abs(g.c))


def _build_from_generators(rank: int, generators: Sequence[MoebiusMap],
                           min_gap: float = 1e-9) -> SchottkyData:
    gens = tuple(generators)
    discs = [_isometric_disc(g) for g in gens] + \
            [_isometric_disc(g.inverse()) for g in gens]
    for i in range(2 * rank):
        for j in range(i + 1, 2 * rank):
            gap = abs(discs[i].center - discs[j].center) \
                - (discs[i].radius + discs[j].radius)
            if gap <= min_gap:
                raise DiscsNotSeparated(
                    f"isometric discs {i + 1} and {j + 1} overlap (gap {gap:.3e}); "
                    "increase the funnel lengths")
    return SchottkyData(rank, tuple(discs), gens)


# Axis placement for the two-generator builder: fixed points at -OFFSET +/- 1
# and +OFFSET -/+ 1.  Fixed once so that the only free moduli are the lengths.
AXIS_OFFSET = 2.0


def three_funnel(l1: float, l2: float,
                 separation: float = AXIS_OFFSET) -> SchottkyData:
    """Rank-2 group whose generators have translation lengths l1, l2.

    Axes sit at -separation and +separation, mirror images of each other, so
    l1 = l2 gives a disc system symmetric under x -> -x.  The separation
    controls the third funnel's width and defaults to the fixed offset; it
    is exposed for thick "scaled-down" variants.  Discs are the isometric
    circles of the generators; DiscsNotSeparated is raised when the lengths
    are too small for those to be disjoint.
    """
    if l1 <= 0.0 or l2 <= 0.0:
        raise ValueError("funnel lengths must be positive")
    g1 = MoebiusMap.from_fixed_points(-separation + 1.0, -separation - 1.0, l1)
    g2 = MoebiusMap.from_fixed_points(separation - 1.0, separation + 1.0, l2)
    return _build_from_generators(2, (g1, g2))


def _reflection_matrix(center: float, radius: float) -> tuple:
    """Matrix of inversion in the circle: z -> (az+(r^2-a^2))/(z-a) after conj."""
    return (center, radius * radius - center * center, 1.0, -center)


def _reflect_disc(disc: Disc, mirror_center: float, mirror_radius: float) -> Disc:
    """Image of a disc (orthogonal to R) under inversion in another such circle."""
    dx = disc.center - mirror_center
    denom = dx * dx - disc.radius * disc.radius
    scale = mirror_radius * mirror_radius / denom
    return Disc(mirror_center + scale * dx, abs(scale) * disc.radius)


def pants(boundary: float, third: Optional[float] = None) -> SchottkyData:
    """Symmetric pair of pants with boundary lengths (boundary, boundary, third).

    Built from reflections in three disjoint circles orthogonal to R (outer
    pair at -/+1, small middle circle): the generators are the two products
    with the middle reflection and have translation length ``boundary``,
    while the class of gamma_1 gamma_2^{-1} has length ``third``.  Unlike the
    isometric-circle builder this realizes thick surfaces (all boundary
    lengths can be small), at the price of strongly unequal disc sizes.
    """
    if third is None:
        third = boundary
    if boundary <= 0.0 or third <= 0.0:
        raise ValueError("boundary lengths must be positive")
    # Outer circles at -/+1 with radius from the mutual distance third/2;
    # middle radius from the distance boundary/2 to each outer circle.
    r = 1.0 / math.cosh(third / 4.0)
    sh = math.sinh(boundary / 2.0)
    ch = math.cosh(boundary / 2.0)
    r0 = math.sqrt(1.0 + r * r * sh * sh) - r * ch
    if r0 <= 0.0 or r0 + r >= 1.0:
        raise DiscsNotSeparated(
            f"no disjoint reflection circles for boundary {boundary}, third {third}")
    m1 = _reflection_matrix(0.0, r0)
    m2 = _reflection_matrix(-1.0, r)
    m3 = _reflection_matrix(1.0, r)

    def product(a, b):
        return MoebiusMap.normalized(
            a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3])

    g1 = product(m1, m2)
    g2 = product(m1, m3)
    outer_left = Disc(-1.0, r)
    outer_right = Disc(1.0, r)
    discs = (outer_left, outer_right,
             _reflect_disc(outer_left, 0.0, r0),
             _reflect_disc(outer_right, 0.0, r0))
    group = SchottkyData(2, discs, (g1, g2))
    for i in range(4):
        for j in range(i + 1, 4):
            di, dj = discs[i], discs[j]
            if abs(di.center - dj.center) - (di.radius + dj.radius) <= 1e-9:
                raise DiscsNotSeparated(
                    f"pants discs {i + 1} and {j + 1} overlap")
    return group


def cylinder(length: float) -> SchottkyData:
    """Rank-1 group (hyperbolic cylinder): one generator with fixed points -/+1.

    Elementary test surface whose zeta function is an explicit lattice
    product; the isometric discs are disjoint for every positive length.
    """
    if length <= 0.0:
        raise ValueError("length must be positive")
    g = MoebiusMap.from_fixed_points(1.0, -1.0, length)
    return _build_from_generators(1, (g,))


BUILDERS = {
    "three_funnel": three_funnel,
    "pants": pants,
    "cylinder": cylinder,
}


def group_from_dict(data: dict) -> SchottkyData:
    """Build SchottkyData from the JSON-shaped group description.

    Expected shape: {"rank": r, "generators": [[a,b,c,d], ...],
    "discs": [{"center": x, "radius": rho}, ...]}.  Raises ValueError on
    malformed structure; semantic checks are left to :func:`validate`.
    """
    try:
        rank = int(data["rank"])
        gens = tuple(MoebiusMap.normalized(*map(float, row))
                     for row in data["generators"])
        discs = tuple(Disc(float(d["center"]), float(d["radius"]))
                      for d in data["discs"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed group description: {exc}") from exc
    return SchottkyData(rank, discs, gens)


def group_to_dict(group: SchottkyData) -> dict:
    return {
        "rank": group.rank,
        "generators": [[g.a, g.b, g.c, g.d] for g in group.generators],
        "discs": [{"center": d.center, "radius": d.radius} for d in group.discs],
    }
