"""Convergence diagnostics and KL-based rate bounds for recorded runs."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, ParameterError
from .observation import kl_divergence


@dataclass(frozen=True)
class RateSeries:
    """Empirical rejection rate -ln(belief)/t of one agent on one hypothesis."""

    agent: int
    hypothesis: int
    rounds: np.ndarray
    values: np.ndarray

    def tail_mean(self, fraction=0.1):
        """Mean over the last ``fraction`` of the recorded rounds."""
        if not 0 < fraction <= 1:
            raise ParameterError("fraction must be in (0, 1]")
        if len(self.values) == 0:
            raise DataError("empty rate series")
        start = self.rounds[-1] - fraction * self.rounds[-1]
        return float(self.values[self.rounds >= start].mean())


def _check_series(traj, i, h):
    if not 0 <= i < traj.n_agents:
        raise DataError(f"agent {i} not recorded (trajectory has {traj.n_agents})")
    if not 0 <= h < traj.n_hypotheses:
        raise DataError(f"hypothesis {h} not recorded (trajectory has {traj.n_hypotheses})")


def rejection_rate(traj, i, h):
    """Rate series for rounds t >= 1, straight from the stored log-beliefs."""
    _check_series(traj, i, h)
    mask = traj.rounds >= 1
    t = traj.rounds[mask]
    return RateSeries(i, h, t, -traj.log_beta[mask, i, h] / t)


def local_log_ratio_rate(traj, i, h, h_true):
    """(1/t) ln(alpha_t(h) / alpha_t(h_true)) from recorded local beliefs."""
    if traj.log_alpha is None:
        raise DataError("trajectory has no local beliefs; record with local=True")
    _check_series(traj, i, h)
    mask = traj.rounds >= 1
    t = traj.rounds[mask]
    la = traj.log_alpha[mask, i]
    return RateSeries(i, h, t, (la[:, h] - la[:, h_true]) / t)


def theoretical_rate_bound(model, h_true, h):
    """Largest K_j(h_true, h) over all agents: the network-wide rejection rate."""
    if h == h_true:
        raise ParameterError("rate bound needs a false hypothesis")
    return max(kl_divergence(model, j, h_true, h) for j in range(model.n_agents))


def discriminating_rate_bound(model, i, h_true, h):
    if h == h_true:
        raise ParameterError("rate bound needs a false hypothesis")
    return kl_divergence(model, i, h_true, h)


def convergence_time(traj, threshold, h_true):
    """First recorded round from which each agent's belief on ``h_true`` stays >= threshold.

    Returns one entry per agent; ``None`` when the belief is below the
    threshold at the last recorded round.
    """
    if not 0 < threshold < 1:
        raise ParameterError("threshold must be in (0, 1)")
    above = traj.log_beta[:, :, h_true] >= np.log(threshold)
    out = []
    for i in range(traj.n_agents):
        col = above[:, i]
        if not col[-1]:
            out.append(None)
            continue
        below = np.flatnonzero(~col)
        first = 0 if len(below) == 0 else below[-1] + 1
        out.append(int(traj.rounds[first]))
    return out


def median_convergence_time(traj, threshold, h_true):
    """Median over agents, ``inf`` when any agent never settles."""
    times = convergence_time(traj, threshold, h_true)
    if any(t is None for t in times):
        return float("inf")
    return float(np.median(times))


def learning_verdict(traj, h_true, tol):
    """True when every agent's final belief on ``h_true`` is at least 1 - tol."""
    final = traj.log_beta[-1, :, h_true]
    return bool(np.exp(final.min()) >= 1 - tol)
