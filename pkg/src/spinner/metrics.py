"""Tracking-error metrics over a time window of a run log."""
from __future__ import annotations

import numpy as np


def _window(t, err, t1, t2):
    t = np.asarray(t, float)
    err = np.asarray(err, float)
    if not t1 < t2:
        raise ValueError("t1 must be smaller than t2")
    mask = (t >= t1 - 1e-12) & (t <= t2 + 1e-12)
    if np.count_nonzero(mask) < 2:
        raise ValueError(f"window [{t1}, {t2}] holds fewer than two samples")
    return t[mask], err[mask]


def _series(log_or_t, err=None):
    if err is None:
        return log_or_t.t, log_or_t.position_error
    return log_or_t, err


def _span(t, t1, t2):
    return (t[0] if t1 is None else t1), (t[-1] if t2 is None else t2)


def mean_tracking_error(log, t1=None, t2=None, *, err=None) -> float:
    """RMS of the position error, trapezoidal in time.

    Accepts a :class:`~spinner.sim.RunLog` or a time array plus ``err=``.
    """
    t, e = _series(log, err)
    tw, ew = _window(t, e, *_span(t, t1, t2))
    return float(np.sqrt(np.trapezoid(ew ** 2, tw) / (tw[-1] - tw[0])))


def max_tracking_error(log, t1=None, t2=None, *, err=None) -> float:
    t, e = _series(log, err)
    _, ew = _window(t, e, *_span(t, t1, t2))
    return float(np.max(ew))


def steady_spin_rate(log, tail: float = 2.0) -> float:
    """Mean body yaw rate over the final ``tail`` seconds."""
    t = log.t
    return float(np.mean(log.column("wz")[t >= t[-1] - tail]))


def settling_time(t, signal, target, band: float) -> float:
    """First time after which ``signal`` stays within ``band`` of ``target``; inf if never."""
    t = np.asarray(t, float)
    out = np.abs(np.asarray(signal, float) - target) > band
    if not out.any():
        return float(t[0])
    last = int(np.nonzero(out)[0][-1])
    return float(t[last + 1]) if last + 1 < t.size else float("inf")


def max_speed(log) -> float:
    return float(np.max(np.linalg.norm(log.velocity, axis=1)))
