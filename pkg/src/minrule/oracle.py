"""Direct probability-space recomputation of every update rule.

Written with plain Python floats and lists on purpose: it shares no
normalization or log-domain code with ``beliefs``/``engine``, so agreement
between the two is meaningful. Only usable while every probability stays
above ``UNDERFLOW_LIMIT``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Streams
from .errors import OracleRangeError

UNDERFLOW_LIMIT = 1e-300


@dataclass
class OracleState:
    alpha: list
    beta: list
    estimates: dict  # (receiver, sender) -> list


def _check_range(vec, what):
    low = min(vec)
    if low < UNDERFLOW_LIMIT:
        raise OracleRangeError(f"{what} fell to {low!r}, below {UNDERFLOW_LIMIT}")


def oracle_initial_state(config):
    n, m = config.n_agents, config.n_hypotheses
    prior = [1.0 / m] * m
    est = {}
    if config.mode.stores_estimates:
        est = {(i, j): list(prior) for i in range(n) for j in config.network.adjacency[i]}
    return OracleState([list(prior) for _ in range(n)], [list(prior) for _ in range(n)], est)


def oracle_step(state, t, config, streams, observations=None):
    """One synchronous round using the textbook formulas in linear space."""
    obs, taus = streams.draw(t)
    if observations is not None:
        obs = observations
    n, m = config.n_agents, config.n_hypotheses
    kind = config.mode.kind
    tables = config.model.tables

    alpha = []
    for i in range(n):
        o = int(obs[i])
        weights = [float(tables[i][o, h]) * state.alpha[i][h] for h in range(m)]
        total = sum(weights)
        alpha.append([w / total for w in weights])

    beta, estimates = [], {}
    for i in range(n):
        received = []
        for j in config.network.adjacency[i]:
            if kind == "full":
                received.append(state.beta[j])
                continue
            tau = int(taus[j])
            value = state.beta[j][tau]
            if kind == "partial_own":
                base = state.beta[i]
            else:
                base = state.estimates[(i, j)]
            denom = 1.0 - base[tau] + value
            if not denom > 0:
                raise OracleRangeError(f"round {t}: nonpositive normalizer {denom!r}")
            est = [(value if h == tau else base[h]) / denom for h in range(m)]
            if kind != "partial_own":
                estimates[(i, j)] = est
            received.append(est)
        mins = [
            min([state.beta[i][h], alpha[i][h]] + [r[h] for r in received])
            for h in range(m)
        ]
        total = sum(mins)
        beta.append([x / total for x in mins])

    for i in range(n):
        _check_range(alpha[i], f"round {t}: local belief of agent {i}")
        _check_range(beta[i], f"round {t}: public belief of agent {i}")
    for key, est in estimates.items():
        _check_range(est, f"round {t}: estimate {key}")
    return OracleState(alpha, beta, estimates)


def oracle_run(config, observations=None):
    """Public beliefs for rounds 0..T, shape (T+1, N, M), in probability space."""
    streams = Streams(config)
    state = oracle_initial_state(config)
    out = [state.beta]
    for t in range(1, config.horizon + 1):
        obs = None if observations is None else observations[t - 1]
        state = oracle_step(state, t, config, streams, observations=obs)
        out.append(state.beta)
    return np.array(out, dtype=np.float64)


def exhaustive_local_posterior(model, i, observations, prior):
    """Closed-form posterior prior(h) * prod_t f_i(o_t|h), normalized once."""
    m = model.n_hypotheses
    table = model.tables[i]
    weights = [float(p) for p in prior]
    for o in observations:
        weights = [weights[h] * float(table[int(o), h]) for h in range(m)]
    if min(weights) < UNDERFLOW_LIMIT:
        raise OracleRangeError("unnormalized posterior underflowed; shorten the sequence")
    total = sum(weights)
    return [w / total for w in weights]
