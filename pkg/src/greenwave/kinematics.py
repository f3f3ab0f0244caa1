"""Piecewise-quadratic kinematics for vehicle trajectories.

Units are meters, seconds, m/s and m/s^2 throughout.  The building block
is a time-bounded quadratic position function (a "segment"); a trajectory
is an ordered run of segments with contiguous time intervals.  Position
and speed are continuous at interior breakpoints unless the trajectory is
explicitly marked ``kinked``, in which case only position continuity is
required (wave-model output, whose speeds may jump).

The module also provides the directed distance functional between two
piecewise-quadratic curves (minimum vertical gap over the overlapping
time window), the generalized inverse (first crossing time of a
location), shadow shifts, lower envelopes of trajectory families, and
CSV emission shared by the rest of the package.
"""

from __future__ import annotations

import csv
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

INF = math.inf
EPS = 1e-9


def scaled_tol(*values: float) -> float:
    """Comparison tolerance scaled by the magnitude of the operands."""
    m = 1.0
    for v in values:
        a = abs(v)
        if m < a < INF:
            m = a
    return EPS * m


class KinematicsError(ValueError):
    """Domain error: query outside a trajectory's covered horizon."""


class UnreachedLocation(KinematicsError):
    """The queried location is never reached by the trajectory."""


class ContinuityError(ValueError):
    """Segments supplied to a trajectory do not join up."""


def quad_roots(a: float, b: float, c: float) -> tuple[float, ...]:
    """Real roots of a*x^2 + b*x + c, ascending.  Stable for small ``a``.

    A tiny negative discriminant (relative 1e-9) is clamped to zero so a
    grazing tangency is not lost to rounding.
    """
    if a == 0.0:
        if b == 0.0:
            return ()
        return (-c / b,)
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        if disc >= -EPS * max(b * b, abs(4.0 * a * c), 1e-300):
            disc = 0.0
        else:
            return ()
    sq = math.sqrt(disc)
    if b == 0.0:
        r = sq / (2.0 * abs(a))
        return (-r, r) if r > 0.0 else (0.0,)
    q = -0.5 * (b + math.copysign(sq, b))
    r1 = q / a
    r2 = c / q  # q != 0 since b != 0
    return (r1, r2) if r1 <= r2 else (r2, r1)


# ---------------------------------------------------------------------------
# value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatePoint:
    """A (location, speed, time) triple."""

    loc: float
    speed: float
    time: float

    def is_feasible(self, v_max: float) -> bool:
        t = scaled_tol(v_max)
        return -t <= self.speed <= v_max + t


@dataclass(frozen=True)
class QuadraticSegment:
    """A quadratic position function restricted to a time interval.

    ``loc`` and ``speed`` hold at the finite anchor time ``ref``;
    position at time t is ``loc + speed*(t-ref) + 0.5*accel*(t-ref)^2``.
    The interval satisfies t0 <= t1 and either endpoint may be infinite;
    construction through :meth:`from_anchor` re-bases the anchor onto the
    interval start whenever that is finite, so segments built backward in
    time are stored in forward-normalized form.
    """

    loc: float
    speed: float
    accel: float
    t0: float
    t1: float
    ref: float

    @classmethod
    def from_anchor(cls, loc: float, speed: float, accel: float,
                    t_anchor: float, t_other: float) -> "QuadraticSegment":
        """Build from a state anchored at ``t_anchor``, spanning to ``t_other``."""
        if not math.isfinite(t_anchor):
            raise KinematicsError("segment anchor time must be finite")
        lo, hi = (t_anchor, t_other) if t_anchor <= t_other else (t_other, t_anchor)
        return cls._build(loc, speed, accel, t_anchor, lo, hi)

    @classmethod
    def _build(cls, loc, speed, accel, ref, lo, hi):
        if math.isfinite(lo):
            new_ref = lo
        elif math.isfinite(hi):
            new_ref = hi
        else:
            new_ref = ref
        if new_ref != ref:
            d = new_ref - ref
            loc = loc + speed * d + 0.5 * accel * d * d
            speed = speed + accel * d
        return cls(loc, speed, accel, lo, hi, new_ref)

    # -- evaluation ---------------------------------------------------------

    def value(self, t: float) -> float:
        d = t - self.ref
        return self.loc + self.speed * d + 0.5 * self.accel * d * d

    def speed_at(self, t: float) -> float:
        return self.speed + self.accel * (t - self.ref)

    def state(self, t: float) -> StatePoint:
        return StatePoint(self.value(t), self.speed_at(t), t)

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    def contains(self, t: float) -> bool:
        tt = scaled_tol(t, self.t0, self.t1)
        return self.t0 - tt <= t <= self.t1 + tt

    def poly(self) -> tuple[float, float, float]:
        """Absolute-time polynomial coefficients (c2, c1, c0)."""
        r = self.ref
        c2 = 0.5 * self.accel
        c1 = self.speed - self.accel * r
        c0 = self.loc - self.speed * r + 0.5 * self.accel * r * r
        return c2, c1, c0

    # -- exact tuple transforms ----------------------------------------------

    def shifted(self, dloc: float, dt: float) -> "QuadraticSegment":
        """Translate by ``dloc`` in space and ``dt`` in time."""
        return QuadraticSegment(self.loc + dloc, self.speed, self.accel,
                                self.t0 + dt, self.t1 + dt, self.ref + dt)

    def raised(self, dloc: float) -> "QuadraticSegment":
        return QuadraticSegment(self.loc + dloc, self.speed, self.accel,
                                self.t0, self.t1, self.ref)

    def sheared(self, w: float) -> "QuadraticSegment":
        """Subtract the moving frame x -> x - w*t (wave-following coordinates)."""
        return QuadraticSegment(self.loc - w * self.ref, self.speed - w,
                                self.accel, self.t0, self.t1, self.ref)

    def rotated(self, t_c: float, x_c: float) -> "QuadraticSegment":
        """Rotate 180 degrees about the point (t_c, x_c)."""
        return QuadraticSegment._build(
            2.0 * x_c - self.loc, self.speed, -self.accel,
            2.0 * t_c - self.ref, 2.0 * t_c - self.t1, 2.0 * t_c - self.t0)

    def clipped(self, lo: float, hi: float) -> "QuadraticSegment":
        return QuadraticSegment(self.loc, self.speed, self.accel,
                                max(self.t0, lo), min(self.t1, hi), self.ref)


def segment(loc, speed, accel, t_a, t_b) -> QuadraticSegment:
    """Shorthand constructor with the anchor at ``t_a``."""
    return QuadraticSegment.from_anchor(loc, speed, accel, t_a, t_b)


# ---------------------------------------------------------------------------
# segment distance
# ---------------------------------------------------------------------------


def critical_time(s1: QuadraticSegment, s2: QuadraticSegment) -> float | None:
    """Stationary time of s1(t) - s2(t), or None when curvatures match."""
    da = s2.accel - s1.accel
    if abs(da) <= EPS * max(1.0, abs(s1.accel), abs(s2.accel)):
        return None
    num = s1.speed - s1.accel * s1.ref - s2.speed + s2.accel * s2.ref
    return num / da


def _diff_at(s1: QuadraticSegment, s2: QuadraticSegment, t: float) -> float:
    if math.isinf(t):
        a = 0.5 * (s1.accel - s2.accel)
        b = (s1.speed - s1.accel * s1.ref) - (s2.speed - s2.accel * s2.ref)
        if a != 0.0:
            lead = a
        elif b != 0.0:
            lead = b if t > 0 else -b
        else:
            return s1.value(s1.ref) - s2.value(s1.ref)
        return INF if lead > 0 else -INF
    return s1.value(t) - s2.value(t)


def _pair_distance(s1, s2, w0: float, w1: float,
                   want_time: bool = False):
    lo = max(s1.t0, s2.t0, w0)
    hi = min(s1.t1, s2.t1, w1)
    if lo > hi:
        return (INF, INF) if want_time else INF
    d_lo = _diff_at(s1, s2, lo)
    d_hi = _diff_at(s1, s2, hi)
    best, t_best = (d_lo, lo) if d_lo <= d_hi else (d_hi, hi)
    if s1.accel - s2.accel > 0.0:
        ts = critical_time(s1, s2)
        if ts is not None and lo < ts < hi:
            best, t_best = _diff_at(s1, s2, ts), ts
    return (best, t_best) if want_time else best


def segment_distance(s1: QuadraticSegment, s2: QuadraticSegment) -> float:
    """Minimum of s1(t) - s2(t) over the overlapping window; +inf if disjoint."""
    return _pair_distance(s1, s2, -INF, INF)


# ---------------------------------------------------------------------------
# trajectories
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Contiguous run of quadratic segments covering a time horizon.

    ``kinked`` relaxes the speed-continuity requirement at breakpoints
    (position continuity is always enforced).
    """

    segments: tuple[QuadraticSegment, ...]
    kinked: bool = False
    _starts: tuple[float, ...] = field(init=False, repr=False)

    def __post_init__(self):
        segs = self.segments
        if not segs:
            raise ContinuityError("trajectory needs at least one segment")
        prev = segs[0]
        for nxt in segs[1:]:
            bk = nxt.t0
            if abs(prev.t1 - bk) > scaled_tol(bk):
                raise ContinuityError(f"time gap at breakpoint {bk}")
            dx = prev.value(bk) - nxt.value(bk)
            if abs(dx) > scaled_tol(prev.value(bk)):
                raise ContinuityError(f"position jump {dx:.3g} at t={bk}")
            if not self.kinked:
                dv = prev.speed_at(bk) - nxt.speed_at(bk)
                if abs(dv) > scaled_tol(prev.speed_at(bk)):
                    raise ContinuityError(f"speed jump {dv:.3g} at t={bk}")
            prev = nxt
        object.__setattr__(self, "_starts", tuple(s.t0 for s in segs))

    # -- basic queries --------------------------------------------------------

    @property
    def start_time(self) -> float:
        return self.segments[0].t0

    @property
    def end_time(self) -> float:
        return self.segments[-1].t1

    def breakpoints(self) -> list[float]:
        return [s.t0 for s in self.segments[1:]]

    def _locate(self, t: float) -> int:
        if t < self.start_time - scaled_tol(t, self.start_time):
            raise KinematicsError(f"t={t} precedes trajectory start {self.start_time}")
        if t > self.end_time + scaled_tol(t, self.end_time):
            raise KinematicsError(f"t={t} beyond trajectory end {self.end_time}")
        k = bisect_right(self._starts, t) - 1
        return max(0, min(k, len(self.segments) - 1))

    def value(self, t: float) -> float:
        return self.segments[self._locate(t)].value(t)

    def speed(self, t: float) -> float:
        return self.segments[self._locate(t)].speed_at(t)

    def accel(self, t: float) -> float:
        return self.segments[self._locate(t)].accel

    def eval(self, t: float) -> tuple[float, float, float]:
        s = self.segments[self._locate(t)]
        return s.value(t), s.speed_at(t), s.accel

    def state(self, t: float) -> StatePoint:
        x, v, _ = self.eval(t)
        return StatePoint(x, v, t)

    # -- vectorized evaluation -------------------------------------------------

    def _arrays(self):
        cached = self.__dict__.get("_arr")
        if cached is None:
            cached = (
                np.array(self._starts),
                np.array([s.loc for s in self.segments]),
                np.array([s.speed for s in self.segments]),
                np.array([s.accel for s in self.segments]),
                np.array([s.ref for s in self.segments]),
            )
            object.__setattr__(self, "_arr", cached)
        return cached

    def _index_array(self, ts: np.ndarray) -> np.ndarray:
        starts = self._arrays()[0]
        idx = np.searchsorted(starts, ts, side="right") - 1
        return np.clip(idx, 0, len(self.segments) - 1)

    def value_array(self, ts: np.ndarray) -> np.ndarray:
        starts, l, v, a, r = self._arrays()
        idx = self._index_array(ts)
        d = ts - r[idx]
        return l[idx] + v[idx] * d + 0.5 * a[idx] * d * d

    def speed_array(self, ts: np.ndarray) -> np.ndarray:
        starts, l, v, a, r = self._arrays()
        idx = self._index_array(ts)
        return v[idx] + a[idx] * (ts - r[idx])

    # -- inverse ---------------------------------------------------------------

    def inverse(self, loc: float) -> float:
        """First time the trajectory reaches ``loc`` (infimum convention)."""
        for s in self.segments:
            x0 = s.value(s.t0) if math.isfinite(s.t0) else _diff_at(s, _ZERO, -INF)
            if math.isfinite(x0) and x0 >= loc - scaled_tol(loc, x0):
                return s.t0
            ts = _segment_crossing(s, loc, s.t0, s.t1)
            if ts is not None:
                return ts
        raise UnreachedLocation(f"location {loc} never reached")

    # -- derived trajectories ----------------------------------------------------

    def shadow(self, order: int, spacing: float, delay: float) -> "Trajectory":
        """Shift down by ``order*spacing`` and right by ``order*delay``.

        Applied as ``order`` successive unit shifts so that composing
        shadows is exactly associative on the stored tuples.
        """
        segs = self.segments
        for _ in range(order):
            segs = tuple(s.shifted(-spacing, delay) for s in segs)
        return Trajectory(segs, self.kinked)

    def raised(self, dloc: float) -> "Trajectory":
        return Trajectory(tuple(s.raised(dloc) for s in self.segments), self.kinked)

    def sheared(self, w: float) -> "Trajectory":
        return Trajectory(tuple(s.sheared(w) for s in self.segments), self.kinked)

    def clip_segments(self, lo: float, hi: float) -> list[QuadraticSegment]:
        out = []
        for s in self.segments:
            a, b = max(s.t0, lo), min(s.t1, hi)
            if b > a:
                out.append(s.clipped(lo, hi))
        return out

    def restrict(self, lo: float, hi: float) -> "Trajectory":
        segs = self.clip_segments(lo, hi)
        if not segs:
            raise KinematicsError(f"empty restriction [{lo}, {hi}]")
        return Trajectory(tuple(segs), self.kinked)


_ZERO = QuadraticSegment(0.0, 0.0, 0.0, -INF, INF, 0.0)


def _segment_crossing(s: QuadraticSegment, loc: float,
                      lo: float, hi: float) -> float | None:
    """Earliest t in [lo, hi] with s(t) = loc, crossing from below."""
    c2, c1, c0 = s.poly()
    roots = quad_roots(c2, c1, c0 - loc)
    pad = scaled_tol(lo if math.isfinite(lo) else hi)
    for t in roots:
        if lo - pad <= t <= hi + pad:
            return min(max(t, lo), hi) if math.isfinite(lo) else min(t, hi)
    return None


def assemble(segments: Iterable[QuadraticSegment], kinked: bool = False) -> Trajectory:
    """Build a trajectory, dropping zero-length (or rounding-negative) pieces."""
    kept = []
    for s in segments:
        if s.t1 - s.t0 > 0.0:
            kept.append(s)
        elif s.t1 - s.t0 < -scaled_tol(s.t0, s.t1):
            raise ContinuityError(f"segment with negative duration: {s}")
    return Trajectory(tuple(kept), kinked)


# ---------------------------------------------------------------------------
# quasi-trajectories and distances
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuasiTrajectory:
    """Pointwise minimum of a non-empty family of trajectories."""

    members: tuple[Trajectory, ...]

    def __post_init__(self):
        if not self.members:
            raise ValueError("quasi-trajectory needs at least one member")

    def value(self, t: float) -> float:
        best = None
        for m in self.members:
            if m.start_time - scaled_tol(t) <= t <= m.end_time + scaled_tol(t):
                v = m.value(t)
                if best is None or v < best:
                    best = v
        if best is None:
            raise KinematicsError(f"no member covers t={t}")
        return best

    def envelope(self, t_lo: float | None = None,
                 t_hi: float | None = None) -> Trajectory:
        return lower_envelope(self.members, t_lo, t_hi)


def lower_envelope(members: Sequence[Trajectory],
                   t_lo: float | None = None,
                   t_hi: float | None = None) -> Trajectory:
    """Explicit piecewise-quadratic lower envelope of a trajectory family.

    The result is position-continuous but generally kinked.  At each time
    only the members whose horizon covers it participate; ties prefer the
    earlier member in the sequence.
    """
    lo = max(min(m.start_time for m in members), -1e12) if t_lo is None else t_lo
    hi = max(m.end_time for m in members) if t_hi is None else t_hi
    cuts = {lo}
    for m in members:
        for t in [m.start_time, *m.breakpoints(), m.end_time]:
            if lo < t < hi:
                cuts.add(t)
    for i, a in enumerate(members):
        for b in members[i + 1:]:
            for sa in a.segments:
                for sb in b.segments:
                    w0 = max(sa.t0, sb.t0, lo)
                    w1 = min(sa.t1, sb.t1, hi)
                    if w0 >= w1:
                        continue
                    pa, pb = sa.poly(), sb.poly()
                    for t in quad_roots(pa[0] - pb[0], pa[1] - pb[1], pa[2] - pb[2]):
                        if w0 < t < w1:
                            cuts.add(t)
    grid = sorted(cuts)
    dedup = [grid[0]]
    for t in grid[1:]:
        if t - dedup[-1] > scaled_tol(t):
            dedup.append(t)
    edges = dedup + [hi]
    pieces: list[QuadraticSegment] = []
    for a, b in zip(edges[:-1], edges[1:]):
        if not b > a:
            continue
        mid = 0.5 * (a + b) if math.isfinite(b) else a + 1.0
        winner = None
        best = INF
        for m in members:
            if m.start_time - scaled_tol(mid) <= mid <= m.end_time + scaled_tol(mid):
                val = m.value(mid)
                if val < best:
                    best, winner = val, m
        if winner is None:
            raise KinematicsError(f"envelope gap at t={mid}")
        src = winner.segments[winner._locate(mid)]
        if pieces and _same_piece(pieces[-1], src):
            pieces[-1] = QuadraticSegment(src.loc, src.speed, src.accel,
                                          pieces[-1].t0, b, src.ref)
        else:
            pieces.append(src.clipped(a, b))
    return assemble(pieces, kinked=True)


def _same_piece(a: QuadraticSegment, b: QuadraticSegment) -> bool:
    return (a.loc, a.speed, a.accel, a.ref) == (b.loc, b.speed, b.accel, b.ref)


def trajectory_distance(p, q, window: tuple[float, float] | None = None) -> float:
    """Directed distance min_t p(t) - q(t) over the overlapping window."""
    return trajectory_distance_argmin(p, q, window)[0]


def trajectory_distance_argmin(p, q, window: tuple[float, float] | None = None
                               ) -> tuple[float, float]:
    """As :func:`trajectory_distance`, also returning the minimizing time."""
    w0, w1 = window if window is not None else (-INF, INF)
    if isinstance(p, QuasiTrajectory):
        best = (INF, INF)
        for m in p.members:
            cand = trajectory_distance_argmin(m, q, (w0, w1))
            if cand[0] < best[0]:
                best = cand
        return best
    if isinstance(q, QuasiTrajectory):
        lo = max(p.start_time, w0) if math.isfinite(max(p.start_time, w0)) else None
        hi = min(p.end_time, w1) if math.isfinite(min(p.end_time, w1)) else None
        return trajectory_distance_argmin(p, q.envelope(lo, hi), (w0, w1))
    best, t_best = INF, INF
    q_starts = q._starts
    nq = len(q.segments)
    for s in p.segments:
        a = max(s.t0, w0)
        b = min(s.t1, w1)
        if a > b:
            continue
        j = max(0, bisect_right(q_starts, a) - 1)
        while j < nq and q.segments[j].t0 <= b:
            d, td = _pair_distance(s, q.segments[j], w0, w1, want_time=True)
            if d < best:
                best, t_best = d, td
            j += 1
    return best, t_best


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------


def sample_window(traj: Trajectory, step: float,
                  t0: float | None = None, t1: float | None = None) -> np.ndarray:
    lo = traj.start_time if t0 is None else max(t0, traj.start_time)
    hi = traj.end_time if t1 is None else min(t1, traj.end_time)
    if not math.isfinite(lo):
        lo = traj.segments[0].t1 - 10.0
    if not math.isfinite(hi):
        hi = traj.segments[-1].t0 + 10.0
    n = max(int(math.floor((hi - lo) / step)) + 1, 2)
    return lo + step * np.arange(n)


def write_trajectory_csv(path, trajectories: Sequence[Trajectory], step: float,
                         ids: Sequence[int] | None = None,
                         t1: float | None = None) -> None:
    """Sampled dump: one row ``vehicle_id, t, x, v, a`` per sample."""
    ids = ids if ids is not None else range(1, len(trajectories) + 1)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["vehicle_id", "t", "x", "v", "a"])
        for vid, traj in zip(ids, trajectories):
            ts = sample_window(traj, step, t1=t1)
            xs = traj.value_array(ts)
            vs = traj.speed_array(ts)
            accs = [traj.segments[k].accel for k in traj._index_array(ts)]
            for t, x, v, a in zip(ts, xs, vs, accs):
                out.writerow([vid, f"{t:.6f}", f"{x:.6f}", f"{v:.6f}", f"{a:.6f}"])


def write_segment_csv(path, trajectories: Sequence[Trajectory],
                      ids: Sequence[int] | None = None) -> None:
    """Exact dump: one row ``vehicle_id, l, v, a, t_start, t_end`` per segment."""
    ids = ids if ids is not None else range(1, len(trajectories) + 1)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["vehicle_id", "l", "v", "a", "t_start", "t_end"])
        for vid, traj in zip(ids, trajectories):
            for s in traj.segments:
                anchored = s.value(s.ref), s.speed_at(s.ref)
                out.writerow([vid, repr(anchored[0]), repr(anchored[1]),
                              repr(s.accel), repr(s.t0), repr(s.t1)])


def read_segment_csv(path, kinked: bool = False) -> list[Trajectory]:
    """Rebuild trajectories from a segment dump written by :func:`write_segment_csv`.

    Anchors are re-based at each segment's start (or its end when the start
    is infinite), matching how the dump was produced.
    """
    rows: dict[int, list[QuadraticSegment]] = {}
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        next(rd)
        for vid, l, v, a, ta, tb in rd:
            t0, t1 = float(ta), float(tb)
            anchor = t0 if math.isfinite(t0) else t1
            rows.setdefault(int(vid), []).append(
                QuadraticSegment._build(float(l), float(v), float(a), anchor, t0, t1))
    return [assemble(sorted(segs, key=lambda s: s.t0), kinked=kinked)
            for _, segs in sorted(rows.items())]
