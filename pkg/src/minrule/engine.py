"""Synchronous round-based simulation of min-rule learning on a network.

Every round reads only the previous round's snapshot, so agents can be
updated in any order (or all at once, which is what the default path does).
"""
from __future__ import annotations

import enum
import hashlib
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import beliefs
from .beliefs import SharedMessage
from .errors import EngineError, NumericalDegeneracyError, ParameterError
from .graph import is_strongly_connected
from .observation import check_global_identifiability, sample_round

# spawn keys for named random streams derived from the master seed
OBSERVATION_STREAM = 1
TAU_GLOBAL_STREAM = 2
TAU_AGENT_STREAM = 3

OBSERVATION_BLOCK = 256


@dataclass(frozen=True)
class SharingMode:
    kind: str
    hypothesis: int | None = None

    KINDS = ("full", "partial_previous", "partial_own", "fixed")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ParameterError(f"unknown sharing mode {self.kind!r}")
        if (self.kind == "fixed") != (self.hypothesis is not None):
            raise ParameterError("fixed mode needs exactly one hypothesis")

    @classmethod
    def fixed(cls, h):
        return cls("fixed", int(h))

    @classmethod
    def parse(cls, text, hypothesis=None):
        kind = text.strip().lower()
        if kind == "fixed":
            if hypothesis is None:
                raise ParameterError("fixed mode needs a hypothesis")
            return cls.fixed(hypothesis)
        return cls(kind)

    @property
    def partial(self):
        return self.kind != "full"

    @property
    def stores_estimates(self):
        return self.kind in ("partial_previous", "fixed")

    def __str__(self):
        return f"fixed({self.hypothesis})" if self.kind == "fixed" else self.kind


SharingMode.FULL = SharingMode("full")
SharingMode.PARTIAL_PREVIOUS = SharingMode("partial_previous")
SharingMode.PARTIAL_OWN = SharingMode("partial_own")


class TauMode(enum.Enum):
    GLOBAL = "global"
    PER_AGENT = "per_agent"


@dataclass(frozen=True)
class RecordFlags:
    local: bool = False
    estimates: bool = False
    taus: bool = False
    every: int = 1


@dataclass(frozen=True)
class SimulationConfig:
    network: object
    model: object
    h_true: int
    mode: SharingMode = SharingMode.FULL
    tau_mode: TauMode = TauMode.GLOBAL
    horizon: int = 1000
    master_seed: int = 0
    record: RecordFlags = RecordFlags()

    def __post_init__(self):
        n, m = self.model.n_agents, self.model.n_hypotheses
        if self.network.n_agents != n:
            raise ParameterError(
                f"network has {self.network.n_agents} agents, model has {n}"
            )
        if not 0 <= self.h_true < m:
            raise ParameterError(f"h_true {self.h_true} out of range [0, {m})")
        if self.mode.kind == "fixed" and not 0 <= self.mode.hypothesis < m:
            raise ParameterError(f"fixed hypothesis {self.mode.hypothesis} out of range")
        if self.horizon < 0:
            raise ParameterError("horizon must be nonnegative")
        if self.record.every < 1:
            raise ParameterError("record.every must be >= 1")
        if not is_strongly_connected(self.network):
            raise ParameterError("network is not strongly connected")
        if self.mode.kind != "fixed":
            ok, failing = check_global_identifiability(self.model)
            if not ok:
                warnings.warn(f"model is not globally identifiable; failing pairs {failing}")

    @property
    def n_agents(self):
        return self.model.n_agents

    @property
    def n_hypotheses(self):
        return self.model.n_hypotheses

    def digest(self):
        """Stable hash of everything that determines a run's output."""
        h = hashlib.sha256()
        h.update(repr(sorted(self.network.edges)).encode())
        h.update(repr((self.network.n_agents, self.h_true, str(self.mode),
                       self.tau_mode.value, self.horizon, self.master_seed,
                       self.record)).encode())
        for t in self.model.tables:
            h.update(np.ascontiguousarray(t).tobytes())
        return h.hexdigest()


def named_stream(master_seed, kind, index=None):
    """Independent generator for one named purpose under ``master_seed``."""
    key = (kind,) if index is None else (kind, index)
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=key))


def select_tau(tau_mode, mode, n_hypotheses, t, rng, n_agents):
    """Hypothesis each agent shares at round ``t``; ``None`` under full sharing.

    ``rng`` is one generator for ``TauMode.GLOBAL`` or a sequence with one
    generator per agent for ``TauMode.PER_AGENT``.
    """
    if mode.kind == "full":
        return None
    if mode.kind == "fixed":
        return np.full(n_agents, mode.hypothesis, dtype=np.intp)
    if tau_mode is TauMode.GLOBAL:
        return np.full(n_agents, rng.integers(n_hypotheses), dtype=np.intp)
    return np.array([g.integers(n_hypotheses) for g in rng], dtype=np.intp)


class Streams:
    """Random draws for one run: per-agent signals and hypothesis selection.

    Rounds must be requested in order 1, 2, 3, ...; draws never depend on the
    horizon or on which series are recorded.
    """

    def __init__(self, config):
        self.config = config
        n = config.n_agents
        self._obs_rngs = [named_stream(config.master_seed, OBSERVATION_STREAM, i) for i in range(n)]
        if config.tau_mode is TauMode.GLOBAL:
            self._tau_rng = named_stream(config.master_seed, TAU_GLOBAL_STREAM)
        else:
            self._tau_rng = [named_stream(config.master_seed, TAU_AGENT_STREAM, i) for i in range(n)]
        self._uniforms = None
        self._block_start = 1
        self._next = 1

    def draw(self, t):
        """Return ``(observations, taus)`` for round ``t``."""
        if t != self._next:
            raise ParameterError(f"rounds must be drawn in order; expected {self._next}, got {t}")
        self._next += 1
        cfg = self.config
        if self._uniforms is None or t - self._block_start >= OBSERVATION_BLOCK:
            if self._uniforms is not None:
                self._block_start += OBSERVATION_BLOCK
            self._uniforms = np.stack([g.random(OBSERVATION_BLOCK) for g in self._obs_rngs])
        u = self._uniforms[:, t - self._block_start]
        obs = sample_round(cfg.model, cfg.h_true, u)
        taus = select_tau(cfg.tau_mode, cfg.mode, cfg.n_hypotheses, t, self._tau_rng, cfg.n_agents)
        return obs, taus


@dataclass(frozen=True)
class AgentState:
    alpha: np.ndarray
    beta: np.ndarray
    estimates: dict | None = None


@dataclass(frozen=True)
class NetworkState:
    """All agents' log-beliefs; estimates are indexed by edge (receiver, sender)."""

    log_alpha: np.ndarray
    log_beta: np.ndarray
    estimates: np.ndarray | None = None

    def agent(self, i, network):
        est = None
        if self.estimates is not None:
            receivers, senders = network.edge_arrays()
            est = {int(j): self.estimates[e] for e in np.flatnonzero(receivers == i)
                   for j in [senders[e]]}
        return AgentState(self.log_alpha[i], self.log_beta[i], est)


def initial_state(config):
    n, m = config.n_agents, config.n_hypotheses
    uniform = beliefs.uniform_belief(m)
    alpha = np.tile(uniform, (n, 1))
    beta = alpha.copy()
    estimates = None
    if config.mode.stores_estimates:
        estimates = np.tile(uniform, (config.network.n_edges, 1))
    return NetworkState(alpha, beta, estimates)


def _edge_candidates(state, config, taus, receivers, senders):
    """Per-edge vectors entering the receiver's min-rule, plus new estimates."""
    if config.mode.kind == "full":
        return state.log_beta[senders], None
    tau_e = taus[senders]
    msg = SharedMessage(tau_e, state.log_beta[senders, tau_e])
    if config.mode.stores_estimates:
        est = beliefs.estimate_update_previous(state.estimates, msg)
        return est, est
    return beliefs.estimate_update_own(state.log_beta[receivers], msg), None


def step(state, t, config, streams, order=None, observations=None):
    """Advance every agent from round ``t - 1`` to round ``t``.

    ``order`` switches to an agent-by-agent loop in the given order; results
    are identical to the vectorized default. ``observations`` overrides the
    drawn signals for this round.
    """
    obs, taus = streams.draw(t)
    if observations is not None:
        obs = np.asarray(observations, dtype=np.intp)
    loglik = config.model.log_likelihood(obs)
    receivers, senders = config.network.edge_arrays()
    try:
        if order is None:
            return _step_vectorized(state, config, loglik, taus, receivers, senders)
        return _step_ordered(state, config, loglik, taus, receivers, senders, order)
    except NumericalDegeneracyError as exc:
        agent = None
        if exc.index is not None and len(exc.index):
            agent = int(receivers[exc.index[0]]) if len(receivers) else None
        raise EngineError(f"round {t}, agent {agent}: {exc}", round=t, agent=agent) from exc


def _step_vectorized(state, config, loglik, taus, receivers, senders):
    alpha = beliefs.local_update_log(state.log_alpha, loglik)
    combined = np.minimum(state.log_beta, alpha)
    cand, est = _edge_candidates(state, config, taus, receivers, senders)
    if len(receivers):
        np.minimum.at(combined, receivers, cand)
    return NetworkState(alpha, beliefs.normalize(combined), est)


def _step_ordered(state, config, loglik, taus, receivers, senders, order):
    n = config.n_agents
    if sorted(order) != list(range(n)):
        raise ParameterError("order must be a permutation of the agents")
    alpha = np.empty_like(state.log_alpha)
    beta = np.empty_like(state.log_beta)
    est = None if state.estimates is None else np.empty_like(state.estimates)
    kind = config.mode.kind
    for i in order:
        alpha[i] = beliefs.local_update_log(state.log_alpha[i], loglik[i])
        edges = np.flatnonzero(receivers == i)
        nbrs = senders[edges]
        if kind == "full":
            others = state.log_beta[nbrs]
            beta[i] = beliefs.min_rule_full(state.log_beta[i], list(others), alpha[i])
            continue
        try:
            msg = SharedMessage(taus[nbrs], state.log_beta[nbrs, taus[nbrs]])
            if config.mode.stores_estimates:
                new = beliefs.estimate_update_previous(state.estimates[edges], msg)
                est[edges] = new
            else:
                base = np.broadcast_to(state.log_beta[i], (len(nbrs), config.n_hypotheses))
                new = beliefs.estimate_update_own(base, msg)
        except NumericalDegeneracyError as exc:
            exc.index = edges[exc.index] if exc.index is not None else None
            raise
        beta[i] = beliefs.min_rule_partial(state.log_beta[i], list(new), alpha[i])
    return NetworkState(alpha, beta, est)


@dataclass
class Trajectory:
    """Recorded log-beliefs. ``rounds[r]`` is the round index of slice ``r``."""

    rounds: np.ndarray
    log_beta: np.ndarray
    h_true: int
    mode: SharingMode
    tau_mode: TauMode
    log_alpha: np.ndarray | None = None
    estimates: np.ndarray | None = None
    taus: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_agents(self):
        return self.log_beta.shape[1]

    @property
    def n_hypotheses(self):
        return self.log_beta.shape[2]

    @property
    def horizon(self):
        return int(self.rounds[-1]) if len(self.rounds) else 0

    def beliefs_at(self, r):
        return np.exp(self.log_beta[r])


class _Recorder:
    def __init__(self, config):
        self.config = config
        T, every = config.horizon, config.record.every
        rounds = list(range(0, T + 1, every))
        if rounds[-1] != T:
            rounds.append(T)
        self.rounds = np.array(rounds, dtype=np.int64)
        self._slot = {t: r for r, t in enumerate(rounds)}
        n, m = config.n_agents, config.n_hypotheses
        R = len(rounds)
        self.log_beta = np.empty((R, n, m))
        self.log_alpha = np.empty((R, n, m)) if config.record.local else None
        self.estimates = None
        if config.record.estimates and config.mode.stores_estimates:
            self.estimates = np.empty((R, config.network.n_edges, m))
        self.taus = None
        if config.record.taus and config.mode.partial:
            self.taus = np.empty((T, n), dtype=np.int64)
        self.last = -1

    def add(self, t, state, taus=None):
        if self.taus is not None and taus is not None and t >= 1:
            self.taus[t - 1] = taus
        r = self._slot.get(t)
        if r is None:
            return
        self.log_beta[r] = state.log_beta
        if self.log_alpha is not None:
            self.log_alpha[r] = state.log_alpha
        if self.estimates is not None:
            self.estimates[r] = state.estimates
        self.last = r

    def finish(self, started, complete=True):
        cfg = self.config
        keep = slice(0, self.last + 1)
        traj = Trajectory(
            rounds=self.rounds[keep],
            log_beta=self.log_beta[keep],
            h_true=cfg.h_true,
            mode=cfg.mode,
            tau_mode=cfg.tau_mode,
            log_alpha=None if self.log_alpha is None else self.log_alpha[keep],
            estimates=None if self.estimates is None else self.estimates[keep],
            taus=self.taus,
            metadata={
                "config_digest": cfg.digest(),
                "master_seed": cfg.master_seed,
                "wall_time": time.perf_counter() - started,
                "complete": complete,
            },
        )
        return traj


class _TauCapture:
    """Wraps streams to remember the taus of the latest round."""

    def __init__(self, streams):
        self.streams = streams
        self.taus = None

    def draw(self, t):
        obs, taus = self.streams.draw(t)
        self.taus = taus
        return obs, taus


def run(config, observations=None, order=None):
    """Simulate ``config.horizon`` rounds from uniform beliefs.

    ``observations`` (shape ``(T, N)``) replaces the sampled signals, which is
    handy for hand-traced checks. On failure the raised ``EngineError``
    carries the trajectory recorded so far.
    """
    started = time.perf_counter()
    if observations is not None:
        observations = np.asarray(observations, dtype=np.intp)
        if observations.shape != (config.horizon, config.n_agents):
            raise ParameterError(
                f"observations must have shape {(config.horizon, config.n_agents)}"
            )
    streams = _TauCapture(Streams(config))
    state = initial_state(config)
    rec = _Recorder(config)
    rec.add(0, state)
    for t in range(1, config.horizon + 1):
        try:
            state = step(state, t, config, streams, order=order,
                         observations=None if observations is None else observations[t - 1])
        except EngineError as exc:
            exc.trajectory = rec.finish(started, complete=False)
            raise
        rec.add(t, state, streams.taus)
    return rec.finish(started)
