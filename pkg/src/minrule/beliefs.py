"""Log-domain belief updates: local Bayes, min-rule aggregation, estimate refresh.

A belief vector is an ndarray of natural-log probabilities along the last
axis; leading axes batch independent vectors. All functions are pure.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DomainError, NumericalDegeneracyError, ParameterError


class SharedMessage(NamedTuple):
    """Sender's previous-round log-belief on the single hypothesis it shares."""

    hypothesis: int | np.ndarray
    log_belief: float | np.ndarray


def log_sum(log_p):
    """Max-shifted log of the sum of exponentials over the last axis.

    Summation runs strictly left to right so results do not depend on the
    batch shape.
    """
    log_p = np.asarray(log_p, dtype=np.float64)
    m = np.max(log_p, axis=-1, keepdims=True)
    total = np.cumsum(np.exp(log_p - m), axis=-1)[..., -1:]
    return m + np.log(total)


def normalize(log_p):
    """Shift log-weights so their exponentials sum to one."""
    log_p = np.asarray(log_p, dtype=np.float64)
    return log_p - log_sum(log_p)


def to_probabilities(log_p):
    return np.exp(np.asarray(log_p, dtype=np.float64))


def from_probabilities(p):
    p = np.asarray(p, dtype=np.float64)
    if np.any(p <= 0):
        raise DomainError("beliefs must be strictly positive")
    return normalize(np.log(p))


def uniform_belief(m):
    if m < 2:
        raise ParameterError(f"need at least 2 hypotheses, got {m}")
    return np.full(m, -np.log(m))


def local_update_log(alpha_prev, log_likelihood):
    """Bayes rule with the likelihood row already in log form."""
    return normalize(np.asarray(alpha_prev) + np.asarray(log_likelihood))


def local_update(alpha_prev, likelihood):
    """Posterior from the previous local belief and f_i(o|.) for one signal."""
    likelihood = np.asarray(likelihood, dtype=np.float64)
    if np.any(~(likelihood > 0)):
        raise DomainError("likelihood values must be strictly positive")
    return local_update_log(alpha_prev, np.log(likelihood))


def _componentwise_min(own_prev, others, alpha_now):
    own_prev = np.asarray(own_prev, dtype=np.float64)
    alpha_now = np.asarray(alpha_now, dtype=np.float64)
    m = own_prev.shape[-1]
    if alpha_now.shape != own_prev.shape:
        raise ParameterError(f"length mismatch: {own_prev.shape} vs {alpha_now.shape}")
    out = np.minimum(own_prev, alpha_now)
    for vec in others:
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape[-1] != m:
            raise ParameterError(f"length mismatch: expected {m}, got {vec.shape[-1]}")
        out = np.minimum(out, vec)
    return out


def min_rule_full(own_prev, neighbor_prevs, alpha_now):
    """Normalized componentwise minimum of neighbors', own previous and local beliefs."""
    return normalize(_componentwise_min(own_prev, neighbor_prevs, alpha_now))


def min_rule_partial(own_prev, estimates_now, alpha_now):
    """Min-rule over reconstructed neighbor beliefs instead of the true ones."""
    return normalize(_componentwise_min(own_prev, estimates_now, alpha_now))


def log_replacement_mass(log_rest, received):
    """ln(exp(log_rest) + exp(received)): the new mass after swapping one entry.

    ``log_rest`` is the log-sum of the entries that are kept. Summing them
    directly, rather than taking ``1 - exp(stored)``, keeps the result exact
    with respect to the stored vector even when the stored entry is near one.
    """
    with np.errstate(invalid="ignore"):
        mass = np.logaddexp(np.asarray(log_rest, dtype=np.float64),
                            np.asarray(received, dtype=np.float64))
    bad = ~np.isfinite(mass)
    if np.any(bad):
        raise NumericalDegeneracyError(
            "replacement normalizer is not positive", index=np.flatnonzero(bad)
        )
    return mass


def replace_entry(base, msg):
    """Put the received value at the shared hypothesis and renormalize.

    Entries other than the shared one are shifted by a common constant, so
    their ratios are kept exactly.
    """
    out = np.array(base, dtype=np.float64, copy=True)
    tau = np.asarray(msg.hypothesis, dtype=np.intp)
    received = np.asarray(msg.log_belief, dtype=np.float64)
    if out.ndim == 1:
        out[tau] = -np.inf
        with np.errstate(invalid="ignore"):
            log_rest = log_sum(out)[0]
        log_mass = log_replacement_mass(log_rest, received)
        out[tau] = received
        return out - log_mass
    idx = tau[..., None]
    np.put_along_axis(out, idx, -np.inf, axis=-1)
    with np.errstate(invalid="ignore"):
        log_rest = log_sum(out)[..., 0]
    log_mass = log_replacement_mass(log_rest, received)
    np.put_along_axis(out, idx, received[..., None], axis=-1)
    return out - log_mass[..., None]


def estimate_update_previous(estimate_prev, msg):
    """Refresh a stored estimate of a neighbor with its newly shared entry."""
    return replace_entry(estimate_prev, msg)


def estimate_update_own(own_prev, msg):
    """Estimate a neighbor from the receiver's own belief plus the shared entry."""
    return replace_entry(own_prev, msg)
