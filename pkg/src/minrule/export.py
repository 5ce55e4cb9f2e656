"""CSV and manifest files written by the command-line runner.

Floats are written with 17 significant digits so values read back are
bit-identical to the in-memory ones. Files are UTF-8 with LF endings.
"""
from __future__ import annotations

import csv
import json
import platform
from pathlib import Path

import numpy as np

from .errors import DataError

TRAJECTORY_HEADER = ("t", "agent", "hypothesis", "log_belief")
METRICS_HEADER = ("t", "agent", "hypothesis", "rate")
COMPARE_HEADER = ("mode", "t", "agent", "log_belief_true", "rate")


def _write_lines(path, header, lines):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(",".join(header) + "\n")
        for line in lines:
            f.write(line)


def write_trajectory_csv(traj, path):
    n, m = traj.n_agents, traj.n_hypotheses

    def lines():
        for r, t in enumerate(traj.rounds):
            block = traj.log_beta[r]
            yield "".join(
                f"{t},{i},{h},{block[i, h]:.17g}\n" for i in range(n) for h in range(m)
            )

    _write_lines(path, TRAJECTORY_HEADER, lines())


def write_metrics_csv(traj, path):
    """Rejection rates of every false hypothesis for rounds t >= 1."""
    n, m, h_true = traj.n_agents, traj.n_hypotheses, traj.h_true
    false_h = [h for h in range(m) if h != h_true]

    def lines():
        for r, t in enumerate(traj.rounds):
            if t < 1:
                continue
            rates = -traj.log_beta[r] / t
            yield "".join(
                f"{t},{i},{h},{rates[i, h]:.17g}\n" for i in range(n) for h in false_h
            )

    _write_lines(path, METRICS_HEADER, lines())


def read_trajectory_csv(path):
    """Parse a trajectory CSV back to ``(rounds, log_beta)``."""
    data = _read_numeric(path, TRAJECTORY_HEADER)
    if data.size == 0:
        raise DataError(f"{path}: no rows")
    t = data[:, 0].astype(np.int64)
    agent = data[:, 1].astype(np.intp)
    hyp = data[:, 2].astype(np.intp)
    rounds = np.unique(t)
    n, m = agent.max() + 1, hyp.max() + 1
    out = np.full((len(rounds), n, m), np.nan)
    out[np.searchsorted(rounds, t), agent, hyp] = data[:, 3]
    if np.isnan(out).any():
        raise DataError(f"{path}: incomplete trajectory grid")
    return rounds, out


def read_metrics_csv(path):
    """Parse a metrics CSV to a dict ``(agent, hypothesis) -> (rounds, rates)``."""
    data = _read_numeric(path, METRICS_HEADER)
    out = {}
    keys = data[:, 1:3].astype(np.intp)
    for a, h in sorted(set(map(tuple, keys.tolist()))):
        sel = (keys[:, 0] == a) & (keys[:, 1] == h)
        out[(a, h)] = (data[sel, 0].astype(np.int64), data[sel, 3])
    return out


def _read_numeric(path, header):
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        first = next(reader, None)
        if tuple(first or ()) != header:
            raise DataError(f"{path}: expected header {','.join(header)}")
        rows = [[float(x) for x in row] for row in reader if row]
    return np.array(rows, dtype=np.float64).reshape(-1, len(header))


def write_compare_csv(rows, path):
    """``rows``: iterable of ``(mode, agent, rounds, log_belief_true, rates)``."""

    def lines():
        for mode, agent, rounds, lb, rates in rows:
            yield "".join(
                f"{mode},{t},{agent},{x:.17g},{r:.17g}\n"
                for t, x, r in zip(rounds, lb, rates)
            )

    _write_lines(path, COMPARE_HEADER, lines())


def read_compare_csv(path):
    """Returns ``{mode: (rounds, log_belief_true[R, N], rate[R, N])}``."""
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.reader(f)
        if tuple(next(reader, ())) != COMPARE_HEADER:
            raise DataError(f"{path}: expected header {','.join(COMPARE_HEADER)}")
        by_mode = {}
        for row in reader:
            if row:
                by_mode.setdefault(row[0], []).append([float(x) for x in row[1:]])
    out = {}
    for mode, rows in by_mode.items():
        arr = np.array(rows)
        rounds = np.unique(arr[:, 0].astype(np.int64))
        n = int(arr[:, 1].max()) + 1
        lb = np.full((len(rounds), n), np.nan)
        rate = np.full((len(rounds), n), np.nan)
        r_idx = np.searchsorted(rounds, arr[:, 0].astype(np.int64))
        a_idx = arr[:, 1].astype(np.intp)
        lb[r_idx, a_idx] = arr[:, 2]
        rate[r_idx, a_idx] = arr[:, 3]
        out[mode] = (rounds, lb, rate)
    return out


def write_manifest(path, **fields):
    from . import __version__

    doc = {"library_version": __version__, "python": platform.python_version(), **fields}
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n",
                          encoding="utf-8")


def read_manifest(path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
