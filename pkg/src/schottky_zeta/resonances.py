"""Zero location and certification for the twisted determinant.

Zeros are counted with the argument principle by tracking the phase of the
determinant along rectangle boundaries (adaptively refined until consecutive
phase increments stay below pi/2), isolated by quadrisection, polished by
multiplicity-aware Newton with central-difference derivatives, and
re-certified by the winding count of a small square.  The real zero curve
through the leading zero is continued in theta by Newton steps; its values
drive the cover spectral measures.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np

from .errors import BoundaryZero, LostZero, MaxDepth
from .schottky import SchottkyData
from .transfer import DEFAULT_ORDER, ThetaPoint, build_operator, determinant
from .zeta import CoverSpec, _delta_cached, zeta_det

PHASE_LIMIT = math.pi / 2.0
MIN_SEGMENT = 1e-10          # relative to the contour diameter
ABS_FLOOR = 1e-280           # |Z| below this is treated as an on-contour zero
NEWTON_RESIDUAL = 1e-9
CERT_RADIUS = 1e-4           # half-side of the certification square
SEPARATION = 2e-4            # cells smaller than this go straight to Newton
MAX_SUBDIVISION = 48
STEP_LIMIT = 0.02            # largest allowed theta step on continuation paths


@dataclass(frozen=True)
class Rect:
    """Axis-parallel closed rectangle in the s plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate rectangle {self}")

    @property
    def corners(self) -> tuple:
        return (complex(self.re_min, self.im_min),
                complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max),
                complex(self.re_min, self.im_max))

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max),
                       0.5 * (self.im_min + self.im_max))

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    def contains(self, s: complex) -> bool:
        return (self.re_min <= s.real <= self.re_max
                and self.im_min <= s.imag <= self.im_max)

    def quadrisect(self, dx: float = 0.0, dy: float = 0.0) -> tuple:
        """Four subrectangles; dx, dy nudge the split point off zeros."""
        cx = 0.5 * (self.re_min + self.re_max) + dx
        cy = 0.5 * (self.im_min + self.im_max) + dy
        return (Rect(self.re_min, cx, self.im_min, cy),
                Rect(cx, self.re_max, self.im_min, cy),
                Rect(self.re_min, cx, cy, self.im_max),
                Rect(cx, self.re_max, cy, self.im_max))


@dataclass(frozen=True)
class Resonance:
    """A certified zero: location, winding-verified multiplicity, provenance."""

    s: complex
    multiplicity: int
    theta: ThetaPoint
    winding: int
    newton_residual: float
    det_error: float


class _DetFunction:
    """Memoizing wrapper around s -> det(I - L_{s,theta})."""

    def __init__(self, group: SchottkyData, theta, order: int):
        self.group = group
        self.theta = ThetaPoint.of(theta, group.rank)
        self.order = order
        self._cache: dict = {}

    def __call__(self, s: complex) -> complex:
        z = self._cache.get(s)
        if z is None:
            z = determinant(build_operator(self.group, s, self.theta, self.order))
            self._cache[s] = z
        return z


def _winding_number(f: Callable, corners: Sequence[complex]) -> int:
    """Winding of f along the closed polygon, adaptively refined.

    Subdivides every edge until the phase increment per segment is below
    PHASE_LIMIT *and* the modulus ratio stays moderate; the modulus guard
    catches phase aliasing, which always comes with a close approach to a
    zero.  Raises BoundaryZero when refinement bottoms out or |f| collapses
    on the contour.
    """
    diam = max(abs(a - b) for a in corners for b in corners)
    min_len = MIN_SEGMENT * diam
    total = 0.0

    def tame(fa: complex, fb: complex) -> bool:
        ratio = abs(fb) / abs(fa)
        return (abs(cmath.phase(fb / fa)) < PHASE_LIMIT
                and 0.5 < ratio < 2.0)

    def phase_step(a: complex, b: complex, fa: complex, fb: complex,
                   depth: int) -> float:
        # A zero straddled symmetrically fools any two-point test (the
        # endpoint phases and moduli nearly agree while the argument winds a
        # full turn), so every segment is vetted at its midpoint before the
        # two halves are accepted.
        mid = 0.5 * (a + b)
        fm = f(mid)
        if abs(fm) < ABS_FLOOR:
            raise BoundaryZero(f"determinant vanishes near {mid}")
        if tame(fa, fm) and tame(fm, fb):
            return cmath.phase(fm / fa) + cmath.phase(fb / fm)
        if depth >= MAX_SUBDIVISION or abs(b - a) < min_len:
            raise BoundaryZero(
                f"contour segment unresolved near {0.5 * (a + b)}")
        return (phase_step(a, mid, fa, fm, depth + 1)
                + phase_step(mid, b, fm, fb, depth + 1))

    n = len(corners)
    for k in range(n):
        a, b = corners[k], corners[(k + 1) % n]
        # Length-proportional base sampling keeps long edges from aliasing.
        segs = max(4, min(256, math.ceil(abs(b - a) / 0.25)))
        pts = [a + (b - a) * t / segs for t in range(segs + 1)]
        vals = [f(p) for p in pts]
        for v in vals:
            if abs(v) < ABS_FLOOR:
                raise BoundaryZero("determinant vanishes on the contour")
        for i in range(segs):
            total += phase_step(pts[i], pts[i + 1], vals[i], vals[i + 1], 0)
    turns = total / (2.0 * math.pi)
    count = round(turns)
    if abs(turns - count) > 0.25:
        raise BoundaryZero(f"winding {turns:.3f} is not close to an integer")
    return int(count)


def count_zeros(group: SchottkyData, rect: Rect, theta,
                order: int = DEFAULT_ORDER) -> int:
    """Total multiplicity of determinant zeros inside the rectangle."""
    f = _DetFunction(group, theta, order)
    return _winding_number(f, rect.corners)


def count_zeros_disc(group: SchottkyData, center: complex, radius: float,
                     theta, order: int = DEFAULT_ORDER) -> int:
    """Total multiplicity of determinant zeros inside a closed disc.

    Same adaptive phase tracking as the rectangle count, with refinement
    midpoints taken on the circle itself.
    """
    f = _DetFunction(group, theta, order)
    min_arc = MIN_SEGMENT

    def value(t: float) -> complex:
        z = f(center + radius * cmath.exp(2j * math.pi * t))
        if abs(z) < ABS_FLOOR:
            raise BoundaryZero("determinant vanishes on the circle")
        return z

    def tame(fa: complex, fb: complex) -> bool:
        ratio = abs(fb) / abs(fa)
        return (abs(cmath.phase(fb / fa)) < PHASE_LIMIT and 0.5 < ratio < 2.0)

    def arc_step(t0: float, t1: float, f0: complex, f1: complex,
                 depth: int) -> float:
        tm = 0.5 * (t0 + t1)
        fm = value(tm)
        if tame(f0, fm) and tame(fm, f1):
            return cmath.phase(fm / f0) + cmath.phase(f1 / fm)
        if depth >= MAX_SUBDIVISION or (t1 - t0) < min_arc:
            raise BoundaryZero(f"circle arc unresolved near t = {tm:.6f}")
        return (arc_step(t0, tm, f0, fm, depth + 1)
                + arc_step(tm, t1, fm, f1, depth + 1))

    ts = [k / 16 for k in range(17)]
    vals = [value(t) for t in ts]
    total = sum(arc_step(ts[i], ts[i + 1], vals[i], vals[i + 1], 0)
                for i in range(16))
    turns = total / (2.0 * math.pi)
    count = round(turns)
    if abs(turns - count) > 0.25:
        raise BoundaryZero(f"winding {turns:.3f} is not close to an integer")
    return int(count)


def _newton_polish(f: Callable, s0: complex, multiplicity: int,
                   trust: float) -> tuple:
    """Multiplicity-aware Newton from s0; returns (zero, |last step|).

    The derivative is a central difference with step 1e-6*(1+|s|); steps are
    rejected when they exceed the trust radius.
    """
    s = s0
    last = math.inf
    for _ in range(80):
        h = 1e-6 * (1.0 + abs(s))
        z = f(s)
        dz = (f(s + h) - f(s - h)) / (2.0 * h)
        if dz == 0:
            break
        step = multiplicity * z / dz
        if abs(step) > trust:
            step *= trust / abs(step)
        s -= step
        if abs(step) >= last and last < 1e-11:
            break  # stagnated at roundoff level
        last = abs(step)
        if last < 1e-14 * (1.0 + abs(s)):
            break
    return s, last


def find_zeros(group: SchottkyData, rect: Rect, theta,
               order: int = DEFAULT_ORDER) -> List[Resonance]:
    """Locate all determinant zeros in the rectangle with certification.

    Quadrisection until each cell holds at most one zero (or is smaller than
    the separation scale, which handles genuinely multiple zeros), Newton
    polishing, then re-certification by the winding count of a small square
    around each zero.  The returned multiset cardinality (with multiplicity)
    matches count_zeros on the rectangle.
    """
    f = _DetFunction(group, theta, order)

    def counted(r: Rect) -> int:
        return _winding_number(f, r.corners)

    total = counted(rect)
    if total == 0:
        return []

    def certify(s: complex, residual: float) -> Optional[Resonance]:
        """Winding count of the small square around a polished zero."""
        if not math.isfinite(s.real) or residual > NEWTON_RESIDUAL:
            return None
        square = tuple(s + CERT_RADIUS * w
                       for w in (-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j))
        try:
            winding = _winding_number(f, square)
        except BoundaryZero:
            return None
        if winding < 1:
            return None
        _, det_err = zeta_det(group, s, f.theta, order)
        return Resonance(s=s, multiplicity=winding, theta=f.theta,
                         winding=winding, newton_residual=residual,
                         det_error=det_err)

    def seeds(cell: Rect):
        w = cell.re_max - cell.re_min
        h = cell.im_max - cell.im_min
        c = cell.center
        yield c
        for u, v in ((1, 1), (-1, 1), (1, -1), (-1, -1)):
            yield c + complex(0.25 * u * w, 0.25 * v * h)

    found: List[Resonance] = []
    stack = [(rect, total, 0)]
    while stack:
        cell, count, depth = stack.pop()
        if depth > MAX_SUBDIVISION:
            raise MaxDepth(f"subdivision budget exhausted inside {cell}",
                           partial=found)
        # Newton first: with the multiplicity taken from the cell count this
        # lands directly on isolated (possibly multiple) zeros; the winding
        # certificate rejects the attempt when the cell actually holds
        # several distinct zeros (or Newton escapes the cell), and we
        # subdivide instead.
        slack = 1e-7 * (1.0 + abs(cell.center))
        zero = None
        for seed in seeds(cell):
            s, residual = _newton_polish(f, seed, count,
                                         trust=0.75 * cell.diameter + 1e-4)
            if not (math.isfinite(s.real)
                    and cell.re_min - slack <= s.real <= cell.re_max + slack
                    and cell.im_min - slack <= s.imag <= cell.im_max + slack):
                continue
            if any(abs(s - z.s) < 1e-8 for z in found):
                continue  # escaped to a zero that belongs to another cell
            cand = certify(s, residual)
            if cand is not None and cand.winding == count:
                zero = cand
                break
        if zero is not None:
            found.append(zero)
            continue
        if cell.diameter > SEPARATION:
            # Zeros on a split line raise BoundaryZero; move the split, never
            # the cells themselves (a grown cell would count neighbours too).
            # A sub-count mismatch means one contour was under-resolved, so a
            # different split gets another chance before giving up.
            w = cell.re_max - cell.re_min
            h = cell.im_max - cell.im_min
            parts = subcounts = None
            for shift in (0.0, 0.0618, -0.1031, 0.1618, -0.2141, 0.3083):
                try:
                    attempt = cell.quadrisect(shift * w, shift * h)
                    attempt_counts = [counted(p) for p in attempt]
                except BoundaryZero:
                    continue
                if sum(attempt_counts) == count:
                    parts, subcounts = attempt, attempt_counts
                    break
            if parts is None:
                raise MaxDepth(f"could not split {cell} consistently",
                               partial=found)
            for part, c in zip(parts, subcounts):
                if c > 0:
                    stack.append((part, c, depth + 1))
            continue
        raise MaxDepth(
            f"Newton failed to certify the zero(s) in {cell}", partial=found)
    found = _merge_coincident(found)
    if sum(z.multiplicity for z in found) != total:
        raise MaxDepth(
            f"located multiplicity {sum(z.multiplicity for z in found)} "
            f"!= contour count {total}", partial=found)
    found.sort(key=lambda z: (z.s.imag, z.s.real))
    return found


def _merge_coincident(found: List[Resonance]) -> List[Resonance]:
    """Collapse zeros that Newton drove to the same point (within 1e-8)."""
    out: List[Resonance] = []
    for z in found:
        for i, w in enumerate(out):
            if abs(z.s - w.s) < 1e-8:
                # Same zero reached from two cells: keep one certificate.
                if z.newton_residual < w.newton_residual:
                    out[i] = z
                break
        else:
            out.append(z)
    return out


def trace_phi(group: SchottkyData, theta_path: Sequence, order: int = DEFAULT_ORDER,
              window: float = 0.1, im_window: float = 0.5,
              verify_strip: bool = False, delta: float = None) -> List[tuple]:
    """Continue the unique real zero along a path on the character torus.

    The path must start at theta = 0 where the zero is the leading real zero
    delta; consecutive steps are limited to STEP_LIMIT.  Each continuation
    step is a Newton polish seeded from the previous zero; the zero must stay
    real (|Im| < 1e-9), below delta + 1e-9, and inside the strip window
    [delta - window, delta].  With verify_strip the strip winding count is
    checked to be exactly 1 at every step (LostZero reports the theta where
    uniqueness fails, which is how the admissible window is calibrated).
    """
    pts = [ThetaPoint.of(t, group.rank) for t in theta_path]
    if not pts:
        return []
    if any(abs(x) > 1e-12 for x in pts[0].coordinates):
        raise ValueError("theta path must start at 0")
    for a, b in zip(pts, pts[1:]):
        step = _torus_distance(a, b)
        if step > STEP_LIMIT + 1e-12:
            raise ValueError(f"theta step {step:.4f} exceeds {STEP_LIMIT}")
    if delta is None:
        delta = _delta_cached(group, order)
    out = [(pts[0], delta)]
    phi = complex(delta)
    for theta in pts[1:]:
        f = _DetFunction(group, theta, order)
        s, residual = _newton_polish(f, phi, 1, trust=0.05)
        if not math.isfinite(s.real) or residual > NEWTON_RESIDUAL:
            raise LostZero(f"Newton residual {residual:.2e} at theta {theta}",
                           theta=theta, partial=out)
        if abs(s.imag) > 1e-9:
            raise LostZero(f"zero moved off the real axis: Im = {s.imag:.2e}",
                           theta=theta, partial=out)
        if s.real > delta + 1e-9:
            raise LostZero(f"zero {s.real:.9f} exceeds delta {delta:.9f}",
                           theta=theta, partial=out)
        if s.real < delta - window:
            raise LostZero(
                f"zero {s.real:.6f} left the strip window [{delta - window:.6f}, "
                f"{delta:.6f}]", theta=theta, partial=out)
        if verify_strip:
            strip = Rect(delta - window, delta + 0.02, -im_window, im_window)
            if count_zeros(group, strip, theta, order) != 1:
                raise LostZero("strip zero count is not 1", theta=theta,
                               partial=out)
        phi = complex(s.real)
        out.append((theta, s.real))
    return out


def _torus_distance(a: ThetaPoint, b: ThetaPoint) -> float:
    total = 0.0
    for x, y in zip(a.coordinates, b.coordinates):
        d = abs(x - y)
        d = min(d, 1.0 - d)
        total += d * d
    return math.sqrt(total)


def _path_to(target, rank: int, step: float = STEP_LIMIT) -> list:
    """Straight path 0 -> target with steps below the continuation limit."""
    target = ThetaPoint.of(target, rank)
    # March along the lifted straight segment (shortest torus representative).
    coords = tuple(x if x <= 0.5 else x - 1.0 for x in target.coordinates)
    dist = math.sqrt(sum(x * x for x in coords))
    n = max(1, math.ceil(dist / (0.9 * step)))
    return [ThetaPoint(tuple(t * x / n for x in coords)) for t in range(n + 1)]


def phi_at(group: SchottkyData, theta, order: int = DEFAULT_ORDER,
           window: float = 0.1, delta: float = None) -> float:
    """Value of the real zero curve at one theta (continued from 0)."""
    path = _path_to(theta, group.rank)
    return trace_phi(group, path, order, window=window, delta=delta)[-1][1]


def hessian_phi(group: SchottkyData, h: float, order: int = DEFAULT_ORDER,
                window: float = 0.1) -> np.ndarray:
    """Central second differences of the real zero curve at theta = 0.

    Symmetric by construction; the eigenvalues are all negative because the
    curve attains its maximum delta at 0.
    """
    if not 1e-3 <= h <= 5e-2:
        raise ValueError("step h must lie in [1e-3, 5e-2]")
    r = group.rank
    delta = _delta_cached(group, order)

    def phi(coords) -> float:
        return phi_at(group, coords, order, window=window, delta=delta)

    hess = np.empty((r, r))
    for i in range(r):
        e_i = [0.0] * r
        e_i[i] = h
        plus = phi(e_i)
        minus = phi([-x for x in e_i])
        hess[i, i] = (plus - 2.0 * delta + minus) / (h * h)
        for j in range(i + 1, r):
            pp = [0.0] * r
            pp[i], pp[j] = h, h
            pm = [0.0] * r
            pm[i], pm[j] = h, -h
            f_pp = phi(pp)
            f_pm = phi(pm)
            f_mp = phi([-x for x in pm])
            f_mm = phi([-x for x in pp])
            hess[i, j] = hess[j, i] = (f_pp - f_pm - f_mp + f_mm) / (4.0 * h * h)
    return hess


def gradient_phi(group: SchottkyData, h: float = 1e-2,
                 order: int = DEFAULT_ORDER, window: float = 0.1) -> np.ndarray:
    """Central first differences of the zero curve at theta = 0."""
    r = group.rank
    delta = _delta_cached(group, order)
    grad = np.empty(r)
    for i in range(r):
        e_i = [0.0] * r
        e_i[i] = h
        plus = phi_at(group, e_i, order, window=window, delta=delta)
        minus = phi_at(group, [-x for x in e_i], order, window=window, delta=delta)
        grad[i] = (plus - minus) / (2.0 * h)
    return grad


def cover_resonances(group: SchottkyData, cover: CoverSpec, rect: Rect,
                     order: int = DEFAULT_ORDER) -> List[Resonance]:
    """Resonances of the cover in the rectangle: zeros over the character grid.

    Multiset union of find_zeros over theta in the grid, each zero tagged
    with its theta; coincident zeros from different characters stay distinct
    entries.  Results are merged deterministically (grid order, then Im, Re).
    """
    out: List[Resonance] = []
    for theta in cover.character_grid(group.rank):
        out.extend(find_zeros(group, rect, theta, order))
    return out


@dataclass(frozen=True)
class SpectralHistogram:
    """Normalized histogram of real strip resonances of one cover."""

    edges: np.ndarray
    masses: np.ndarray
    points_in_window: int
    group_order: int

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())


def spectral_measure(group: SchottkyData, cover: CoverSpec, eps0: float,
                     bins: int, order: int = DEFAULT_ORDER,
                     im_window: float = 0.5) -> SpectralHistogram:
    """Histogram over [delta - eps0, delta] of the cover's real strip zeros.

    Each character grid point contributes its real zeros in the window with
    weight 1/|G|; the total mass is (number of contributing zeros)/|G| <= 1
    for windows inside the uniqueness region.
    """
    delta = _delta_cached(group, order)
    rect = Rect(delta - eps0, delta + 0.02, -im_window, im_window)
    values = []
    for z in cover_resonances(group, cover, rect, order):
        if abs(z.s.imag) < 1e-8 and z.s.real >= delta - eps0:
            values.extend([z.s.real] * z.multiplicity)
    edges = np.linspace(delta - eps0, delta, bins + 1)
    counts, _ = np.histogram(values, bins=edges)
    return SpectralHistogram(edges=edges,
                             masses=counts / cover.group_order,
                             points_in_window=len(values),
                             group_order=cover.group_order)


@dataclass(frozen=True)
class WindowCalibration:
    """Empirically certified strip window for a group at a given order.

    theta_max is the largest tested distance from the lattice at which the
    strip holds exactly one (real) zero; eps_star = delta - phi at the
    reporting cutoff x_star < theta_max, and t_star is the imaginary
    half-width that was verified.
    """

    delta: float
    theta_max: float
    x_star: float
    eps_star: float
    t_star: float


def calibrate_window(group: SchottkyData, order: int = DEFAULT_ORDER,
                     window: float = 0.1, im_window: float = 0.5,
                     step: float = STEP_LIMIT, max_x: float = 0.5,
                     grid_unit: int = 32) -> WindowCalibration:
    """Measure the uniqueness window along the first character direction.

    Marches theta = (x, 0, ..., 0) from 0, verifying at each step that the
    strip [delta - window, delta] x [-im_window, im_window] holds exactly one
    zero and that it is real.  The reporting cutoff x_star is snapped to a
    quarter-offset of 1/grid_unit so that character grids of size grid_unit
    and 2*grid_unit sample the threshold stably.
    """
    delta = _delta_cached(group, order)
    r = group.rank
    n_steps = int(max_x / step)
    path = [ThetaPoint((step * k,) + (0.0,) * (r - 1)) for k in range(n_steps + 1)]
    try:
        traced = trace_phi(group, path, order, window=window,
                           im_window=im_window, verify_strip=True, delta=delta)
    except LostZero as exc:
        traced = exc.partial
    if len(traced) < 2:
        raise LostZero("no admissible window beyond theta = 0", theta=None)
    theta_max = traced[-1][0].coordinates[0]
    # Snap the reporting cutoff to a quarter-offset of the grid unit: grids of
    # size grid_unit and 2*grid_unit then sample the threshold without ties.
    m = math.floor(grid_unit * 0.92 * theta_max - 0.25)
    if m < 0:
        raise LostZero(f"window {theta_max:.4f} too small for grid {grid_unit}",
                       theta=None)
    x_star = (m + 0.25) / grid_unit
    phi_star = phi_at(group, (x_star,) + (0.0,) * (r - 1), order,
                      window=window, delta=delta)
    return WindowCalibration(delta=delta, theta_max=theta_max, x_star=x_star,
                             eps_star=delta - phi_star, t_star=im_window)
