"""Per-agent likelihood tables over finite signal alphabets.

Agent ``i`` holds a table of shape ``(|O_i|, M)`` whose column ``h`` is the
signal distribution f_i(.|h). KL divergences are in nats.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import GenerationError, ParameterError

DEFAULT_FLOOR = 1e-6
KL_ZERO_TOLERANCE = 1e-12
COLUMN_SUM_TOLERANCE = 1e-12
GENERATOR_DESCRIPTION = "columns of uniform(floor, 1) draws, normalized, re-floored, renormalized"


@dataclass(frozen=True, eq=False)
class LikelihoodModel:
    tables: tuple
    _log_padded: np.ndarray = field(init=False, repr=False)
    _cdf_padded: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        tables = tuple(np.array(t, dtype=np.float64) for t in self.tables)
        if not tables:
            raise ParameterError("model needs at least one agent")
        m = tables[0].shape[1] if tables[0].ndim == 2 else 0
        if m < 2:
            raise ParameterError("model needs at least 2 hypotheses")
        for i, t in enumerate(tables):
            if t.ndim != 2 or t.shape[1] != m or t.shape[0] < 1:
                raise ParameterError(f"agent {i}: table must be |O_i| x {m}, got {t.shape}")
            if not np.all(np.isfinite(t)) or np.any(t <= 0):
                raise ParameterError(f"agent {i}: likelihoods must be finite and > 0")
            err = np.abs(t.sum(axis=0) - 1.0).max()
            if err > COLUMN_SUM_TOLERANCE:
                raise ParameterError(f"agent {i}: columns must sum to 1 (off by {err:.3g})")
            t.setflags(write=False)
        object.__setattr__(self, "tables", tables)

        width = max(t.shape[0] for t in tables)
        log_pad = np.zeros((len(tables), width, m))
        # padded signals get cdf 1 so inverse-cdf sampling never selects them
        cdf_pad = np.ones((len(tables), m, width))
        for i, t in enumerate(tables):
            log_pad[i, : t.shape[0]] = np.log(t)
            cdf_pad[i, :, : t.shape[0]] = np.cumsum(t, axis=0).T
        log_pad.setflags(write=False)
        cdf_pad.setflags(write=False)
        object.__setattr__(self, "_log_padded", log_pad)
        object.__setattr__(self, "_cdf_padded", cdf_pad)

    @property
    def n_agents(self):
        return len(self.tables)

    @property
    def n_hypotheses(self):
        return self.tables[0].shape[1]

    @property
    def alphabet_sizes(self):
        return [t.shape[0] for t in self.tables]

    def log_likelihood(self, observations):
        """Rows ln f_i(o_i|.) for one observation per agent, shape (N, M)."""
        return self._log_padded[np.arange(self.n_agents), observations]

    def signal_cdf(self, h):
        """Per-agent cumulative signal distribution under ``h``, shape (N, max|O|)."""
        return self._cdf_padded[:, h, :]

    def __eq__(self, other):
        if not isinstance(other, LikelihoodModel) or other.n_agents != self.n_agents:
            return NotImplemented
        return all(
            a.shape == b.shape and np.array_equal(a, b)
            for a, b in zip(self.tables, other.tables)
        )

    __hash__ = None


def _check_hypothesis(model, h, name="hypothesis"):
    if not 0 <= h < model.n_hypotheses:
        raise ParameterError(f"{name} {h} out of range [0, {model.n_hypotheses})")


def _check_agent(model, i):
    if not 0 <= i < model.n_agents:
        raise ParameterError(f"agent {i} out of range [0, {model.n_agents})")


def kl_matrix(table):
    """All pairwise K(h_l, h_k) for one table, shape (M, M)."""
    logt = np.log(table)
    # K[l, k] = sum_o p_l (ln p_l - ln p_k)
    ent = np.sum(table * logt, axis=0)
    cross = table.T @ logt
    out = ent[:, None] - cross
    np.fill_diagonal(out, 0.0)
    return out


def kl_divergence(model, i, h_l, h_k):
    """K_i(h_l, h_k) = sum_o f_i(o|h_l) ln(f_i(o|h_l) / f_i(o|h_k))."""
    _check_agent(model, i)
    _check_hypothesis(model, h_l)
    _check_hypothesis(model, h_k)
    if h_l == h_k:
        return 0.0
    p = model.tables[i][:, h_l]
    q = model.tables[i][:, h_k]
    return float(np.sum(p * (np.log(p) - np.log(q))))


def discriminating_set(model, h_l, h_k, tol=KL_ZERO_TOLERANCE):
    """Agents able to tell ``h_l`` from ``h_k`` (KL above ``tol``), ascending."""
    if h_l == h_k:
        raise ParameterError("discriminating set needs two distinct hypotheses")
    return [i for i in range(model.n_agents) if kl_divergence(model, i, h_l, h_k) > tol]


class IdentifiabilityReport(NamedTuple):
    identifiable: bool
    failing_pairs: list


def check_global_identifiability(model, tol=KL_ZERO_TOLERANCE):
    """Check that every unordered pair of hypotheses has a discriminating agent.

    Returns ``(ok, failing_pairs)`` with pairs as ``(l, k)``, ``l < k``. A pair
    fails only if no agent separates it in either KL direction.
    """
    m = model.n_hypotheses
    kls = [kl_matrix(t) for t in model.tables]
    failing = []
    for l in range(m):
        for k in range(l + 1, m):
            if not any(K[l, k] > tol or K[k, l] > tol for K in kls):
                failing.append((l, k))
    return IdentifiabilityReport(not failing, failing)


def max_kl_table(model):
    """max_j K_j(h_l, h_k) for every ordered pair, shape (M, M)."""
    return np.max(np.stack([kl_matrix(t) for t in model.tables]), axis=0)


def _random_table(rng, size, m, floor):
    cols = rng.uniform(floor, 1.0, size=(size, m))
    cols /= cols.sum(axis=0)
    cols = np.maximum(cols, floor)
    cols /= cols.sum(axis=0)
    return cols


def generate_random_model(
    n_agents,
    n_hypotheses,
    alphabet_sizes,
    floor=DEFAULT_FLOOR,
    discriminating_agents=(),
    min_kl=0.0,
    seed=0,
    max_attempts=1000,
):
    """Random likelihood tables, floored to keep every entry positive.

    Each column normalizes i.i.d. uniform(floor, 1) draws, re-floors and
    renormalizes. Agents listed in ``discriminating_agents`` are redrawn until
    every ordered pair of hypotheses has KL at least ``min_kl``.
    """
    if np.isscalar(alphabet_sizes):
        alphabet_sizes = [int(alphabet_sizes)] * n_agents
    alphabet_sizes = [int(s) for s in alphabet_sizes]
    if len(alphabet_sizes) != n_agents:
        raise ParameterError(f"need {n_agents} alphabet sizes, got {len(alphabet_sizes)}")
    if any(s < 1 for s in alphabet_sizes):
        raise ParameterError("alphabet sizes must be >= 1")
    if n_hypotheses < 2:
        raise ParameterError("need at least 2 hypotheses")
    if not 0 < floor < 1.0 / max(alphabet_sizes):
        raise ParameterError(f"floor must lie in (0, 1/max|O_i|), got {floor}")
    if min_kl < 0:
        raise ParameterError("min_kl must be nonnegative")
    discriminating = set(int(a) for a in discriminating_agents)
    for a in discriminating:
        if not 0 <= a < n_agents:
            raise ParameterError(f"discriminating agent {a} out of range")

    rng = np.random.default_rng(seed)
    tables = []
    for i, size in enumerate(alphabet_sizes):
        table = _random_table(rng, size, n_hypotheses, floor)
        if i in discriminating:
            best = -math.inf
            for _ in range(max_attempts):
                K = kl_matrix(table)
                off = K[~np.eye(n_hypotheses, dtype=bool)]
                achieved = float(off.min())
                best = max(best, achieved)
                if achieved >= min_kl and achieved > KL_ZERO_TOLERANCE:
                    break
                table = _random_table(rng, size, n_hypotheses, floor)
            else:
                raise GenerationError(
                    f"agent {i}: pairwise KL >= {min_kl} not reached in {max_attempts} "
                    f"attempts (best minimum KL {best:.6g})"
                )
        tables.append(table)
    return LikelihoodModel(tuple(tables))


def with_copied_columns(model, agents, source, targets):
    """Copy of ``model`` where each agent's columns ``targets`` equal column ``source``.

    ``agents`` is one agent id or an iterable of them; those agents can then
    no longer tell ``source`` from any target hypothesis.
    """
    agents = [agents] if np.isscalar(agents) else list(agents)
    _check_hypothesis(model, source)
    for h in targets:
        _check_hypothesis(model, h)
    tables = [t.copy() for t in model.tables]
    for i in agents:
        _check_agent(model, i)
        for h in targets:
            tables[i][:, h] = tables[i][:, source]
    return LikelihoodModel(tuple(tables))


def _inverse_cdf(cdf, u):
    # count of cdf entries strictly below u; last index absorbs rounding in cdf[-1]
    o = np.sum(cdf < u[..., None], axis=-1)
    return o


def sample_observation(model, i, h_true, rng):
    """Draw one signal index for agent ``i`` under ``h_true``."""
    _check_agent(model, i)
    _check_hypothesis(model, h_true, "h_true")
    size = model.tables[i].shape[0]
    u = np.asarray([rng.random()])
    o = int(_inverse_cdf(model.signal_cdf(h_true)[i, :size], u)[0])
    return min(o, size - 1)


def sample_round(model, h_true, uniforms):
    """Map one uniform per agent to a signal index per agent."""
    o = _inverse_cdf(model.signal_cdf(h_true), np.asarray(uniforms))
    return np.minimum(o, np.asarray(model.alphabet_sizes) - 1)


def save_model(model, path):
    """Write the model as JSON; floats are emitted with round-trip precision."""
    doc = {
        "n_agents": model.n_agents,
        "n_hypotheses": model.n_hypotheses,
        "alphabet_sizes": model.alphabet_sizes,
        "tables": [[float(x) for x in t.ravel(order="C")] for t in model.tables],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_model(path):
    doc = json.loads(Path(path).read_text())
    try:
        n, m, sizes = doc["n_agents"], doc["n_hypotheses"], doc["alphabet_sizes"]
        flat = doc["tables"]
    except KeyError as exc:
        raise ParameterError(f"{path}: missing field {exc.args[0]!r}") from None
    if len(sizes) != n or len(flat) != n:
        raise ParameterError(f"{path}: expected {n} agents")
    tables = []
    for i, (s, vals) in enumerate(zip(sizes, flat)):
        if len(vals) != s * m:
            raise ParameterError(f"{path}: agent {i} table has {len(vals)} values, want {s * m}")
        tables.append(np.array(vals, dtype=np.float64).reshape(s, m))
    return LikelihoodModel(tuple(tables))
