"""CSV persistence for run logs and per-scenario metric summaries.

Log columns follow :data:`spinner.sim.LOG_COLUMNS`; the header names each as
``name[unit]``. Floats are written with 17 significant digits so a read-back
reproduces the in-memory log exactly.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path

import numpy as np

from .metrics import max_speed, max_tracking_error, mean_tracking_error, steady_spin_rate
from .sim import LOG_COLUMNS, RunLog

METRIC_FIELDS = ("scenario", "seed", "t1[s]", "t2[s]", "e_t[m]", "e_pe[m]", "max_speed[m/s]",
                 "spin_rate[rad/s]", "solve_mean[ms]", "solve_max[ms]", "aborted")


def log_header() -> str:
    return ",".join(f"{n}[{u}]" for n, u in LOG_COLUMNS)


def format_log(log: RunLog) -> str:
    buf = io.StringIO()
    np.savetxt(buf, log.data, fmt="%.17g", delimiter=",", header=log_header(), comments="")
    return buf.getvalue()


def write_log(log: RunLog, path) -> Path:
    path = Path(path)
    path.write_text(format_log(log))
    return path


def read_log(path) -> RunLog:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    with path.open() as fh:
        header = fh.readline().strip()
    if header != log_header():
        raise ValueError(f"{path}: unexpected header")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return RunLog(data.reshape(-1, len(LOG_COLUMNS)))


def _g(v) -> str:
    return f"{float(v):.17g}"


def metrics_row(log: RunLog, window=None) -> dict:
    t1, t2 = window if window is not None else (float(log.t[0]), float(log.t[-1]))
    # the first solve pays for loading compiled kernels, so it is left out
    st = log.solve_times[1:] * 1e3 if log.solve_times.size > 1 else np.zeros(1)
    t2 = min(t2, float(log.t[-1]))
    if t2 > t1:
        e_t, e_pe = mean_tracking_error(log, t1, t2), max_tracking_error(log, t1, t2)
    else:  # aborted before the window opened
        e_t = e_pe = float("nan")
    return {
        "scenario": log.scenario,
        "seed": str(log.seed),
        "t1[s]": _g(t1),
        "t2[s]": _g(t2),
        "e_t[m]": _g(e_t),
        "e_pe[m]": _g(e_pe),
        "max_speed[m/s]": _g(max_speed(log)),
        "spin_rate[rad/s]": _g(steady_spin_rate(log)),
        "solve_mean[ms]": _g(np.mean(st)),
        "solve_max[ms]": _g(np.max(st)),
        "aborted": str(int(log.aborted)),
    }


def write_metrics(rows, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=METRIC_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return path


def read_metrics(path) -> list[dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"metrics file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.DictReader(fh))
    missing = set(METRIC_FIELDS) - set(rows[0] if rows else METRIC_FIELDS)
    if missing:
        raise ValueError(f"{path}: missing columns {sorted(missing)}")
    return rows


def report_table(paths, digits: int = 4) -> str:
    """Plain-text table over every row of the given metrics files, plus a mean row."""
    paths = list(paths)
    if not paths:
        raise ValueError("no metrics files given")
    rows = [r for p in paths for r in read_metrics(p)]
    if not rows:
        raise ValueError("metrics files contain no rows")
    cols = [("scenario", "scenario", str), ("seed", "seed", str), ("e_t[m]", "e_t [m]", float),
            ("e_pe[m]", "e_pe [m]", float), ("spin_rate[rad/s]", "spin [rad/s]", float),
            ("solve_mean[ms]", "solve mean [ms]", float), ("solve_max[ms]", "solve max [ms]", float)]
    body = []
    for r in rows:
        body.append([r[k] if conv is str else f"{float(r[k]):.{digits}f}" for k, _, conv in cols])
    mean = ["mean", ""] + [f"{np.mean([float(r[k]) for r in rows]):.{digits}f}" for k, _, conv in cols[2:]]
    table = [[h for _, h, _ in cols]] + body + [mean]
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    lines = ["  ".join(c.rjust(w) if i > 1 else c.ljust(w) for i, (c, w) in enumerate(zip(row, widths)))
             for row in table]
    lines.insert(1, "  ".join("-" * w for w in widths))
    lines.insert(len(lines) - 1, "  ".join("-" * w for w in widths))
    return "\n".join(lines)
