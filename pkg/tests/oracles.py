"""Independent brute-force oracles the analytic code is checked against.

These deliberately avoid the library's closed forms: dense time sampling
for distances, bisection for inverses, a discretized reachability sweep
for the cone/prism bounds, and a from-scratch transcription of the
car-following law.
"""

import math

import numpy as np

from greenwave.kinematics import INF


def sampled_segment_distance(s1, s2, step=1e-3, lo_cap=-1e4, hi_cap=1e4):
    """min of s1 - s2 over the overlap, by dense sampling."""
    lo = max(s1.t0, s2.t0, lo_cap)
    hi = min(s1.t1, s2.t1, hi_cap)
    if lo > hi:
        return INF
    n = max(int((hi - lo) / step) + 1, 2)
    ts = np.linspace(lo, hi, n)
    d1 = s1.loc + s1.speed * (ts - s1.ref) + 0.5 * s1.accel * (ts - s1.ref) ** 2
    d2 = s2.loc + s2.speed * (ts - s2.ref) + 0.5 * s2.accel * (ts - s2.ref) ** 2
    return float(np.min(d1 - d2))


def sampled_trajectory_distance(p, q, lo, hi, step=1e-3):
    lo = max(lo, p.start_time, q.start_time)
    n = max(int((hi - lo) / step) + 1, 2)
    ts = np.linspace(lo, hi, n)
    return float(np.min(p.value_array(ts) - q.value_array(ts)))


def bisect_inverse(traj, loc, t_lo, t_hi, tol=1e-10):
    """First crossing time of ``loc`` by bisection on the earliest bracket."""
    ts = np.linspace(t_lo, t_hi, 4001)
    vals = traj.value_array(ts)
    above = vals >= loc
    if above[0]:
        return float(ts[0])
    idx = np.argmax(above)
    if not above[idx]:
        raise ValueError("not reached in window")
    a, b = float(ts[idx - 1]), float(ts[idx])
    while b - a > tol:
        m = 0.5 * (a + b)
        if traj.value(m) >= loc:
            b = m
        else:
            a = m
    return b


def reachable_band(v0, x0, t_span, lim, dt, dv):
    """Forward reachability sweep: per step, per speed bin, the attainable
    [x_min, x_max] interval (None where unreachable)."""
    n_v = int(round(lim.v_max / dv)) + 1
    steps = int(round(t_span / dt))
    band = [[None] * n_v for _ in range(steps + 1)]
    k0 = int(round(v0 / dv))
    band[0][k0] = (x0, x0)
    for s in range(steps):
        cur, nxt = band[s], band[s + 1]
        for k, cell in enumerate(cur):
            if cell is None:
                continue
            v = k * dv
            k_lo = max(0, k + int(math.floor(lim.a_min * dt / dv)))
            k_hi = min(n_v - 1, k + int(math.ceil(lim.a_max * dt / dv)))
            for k2 in range(k_lo, k_hi + 1):
                v2 = k2 * dv
                dx = 0.5 * (v + v2) * dt
                lo, hi = cell[0] + dx, cell[1] + dx
                if nxt[k2] is None:
                    nxt[k2] = (lo, hi)
                else:
                    nxt[k2] = (min(nxt[k2][0], lo), max(nxt[k2][1], hi))
    return band


def prism_envelope_oracle(a, b, lim, dt=0.05, dv=0.1):
    """Grid upper/lower prism envelopes over [a.time, b.time].

    Runs a forward sweep from ``a`` and a backward sweep from ``b`` (the
    latter as a forward sweep in the 180-degree-rotated frame), then
    intersects the per-speed position bands.
    """
    span = b.time - a.time
    fwd = reachable_band(a.speed, a.loc, span, lim, dt, dv)
    rot = reachable_band(
        b.speed, 0.0, span, lim.scaled(1.0).__class__(
            lim.v_max, -lim.a_min, -lim.a_max, lim.spacing, lim.delay), dt, dv)
    steps = len(fwd) - 1
    ts, uppers, lowers = [], [], []
    for s in range(steps + 1):
        bwd = rot[steps - s]
        hi = -INF
        lo = INF
        for k in range(len(fwd[s])):
            f, r = fwd[s][k], bwd[k]
            if f is None or r is None:
                continue
            # rotated frame: x_rot = b.loc - x
            b_lo, b_hi = b.loc - r[1], b.loc - r[0]
            x_lo, x_hi = max(f[0], b_lo), min(f[1], b_hi)
            if x_lo <= x_hi + 1e-9:
                hi = max(hi, x_hi)
                lo = min(lo, x_lo)
        ts.append(a.time + s * dt)
        uppers.append(hi)
        lowers.append(lo)
    return np.array(ts), np.array(uppers), np.array(lowers)


def idm_accel_reference(v, v_front, gap, v_now, v_max, a_max, a_min,
                        spacing, delay, veh_len, b):
    """Clean-room transcription of the car-following law."""
    desired = (spacing - veh_len) + v * delay \
        + v * (v - v_front) / math.sqrt(a_max * b)
    out = a_max * (1.0 - desired / gap)
    if v_now >= v_max:
        out = min(out, 0.0)
    else:
        out = min(out, a_max)
    if v_now <= 0.0:
        out = max(out, 0.0)
    else:
        out = max(out, a_min)
    return out
