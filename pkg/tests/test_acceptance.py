"""End-to-end acceptance checks. Each test carries ``criterion(n)``; the
terminal summary prints one PASS/FAIL line per criterion."""
import warnings

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from minrule import (
    LikelihoodModel,
    Network,
    RecordFlags,
    SharedMessage,
    SharingMode,
    SimulationConfig,
    TauMode,
    circulant,
    estimate_update_own,
    estimate_update_previous,
    generate_k_regular,
    generate_random_model,
    kl_divergence,
    learning_verdict,
    local_log_ratio_rate,
    local_update,
    median_convergence_time,
    min_rule_full,
    min_rule_partial,
    normalize,
    oracle_run,
    rejection_rate,
    run,
    with_copied_columns,
)
from minrule.experiment import build_model, build_network, make_config, parse_spec
from minrule.export import write_trajectory_csv
from minrule.oracle import exhaustive_local_posterior

from conftest import table

LEARNING_MODES = [SharingMode.FULL, SharingMode.PARTIAL_PREVIOUS, SharingMode.PARTIAL_OWN]
MODE_IDS = [m.kind for m in LEARNING_MODES]
PROPERTY = settings(max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@pytest.fixture(scope="module")
def small_instance():
    """10 agents, 4-regular, 5 hypotheses, 20 signals; agent 0 separates all pairs."""
    g = generate_k_regular(10, 4, seed=0)
    m = generate_random_model(10, 5, 20, discriminating_agents=[0], min_kl=0.05, seed=0)
    return g, m


def _all_learn(g, m, mode, tau_mode):
    failures = []
    for seed in range(10):
        cfg = SimulationConfig(g, m, 0, mode, tau_mode, horizon=3000, master_seed=seed,
                               record=RecordFlags(every=3000))
        if not learning_verdict(run(cfg), 0, 0.01):
            failures.append(seed)
    return failures


@pytest.mark.criterion(1)
@pytest.mark.parametrize("mode", LEARNING_MODES, ids=MODE_IDS)
def test_true_learning_all_modes(small_instance, mode):
    assert _all_learn(*small_instance, mode, TauMode.GLOBAL) == []


@pytest.mark.criterion(2)
def test_local_rate_matches_kl():
    model = LikelihoodModel((table([0.8, 0.2], [0.5, 0.5]),))
    k = kl_divergence(model, 0, 0, 1)
    assert k == pytest.approx(0.1927, abs=1e-4)
    finals = []
    for seed in range(10):
        cfg = SimulationConfig(Network.from_edges(1, []), model, 0, horizon=20000,
                               master_seed=seed, record=RecordFlags(local=True, every=20000))
        finals.append(local_log_ratio_rate(run(cfg), 0, 1, 0).values[-1])
    mean = float(np.mean(finals))
    assert abs(mean - (-k)) <= 0.1 * k, f"mean rate {mean:.5f} vs -K = {-k:.5f}"


@pytest.mark.criterion(3)
@pytest.mark.parametrize("mode", [SharingMode.FULL, SharingMode.PARTIAL_PREVIOUS], ids=["full", "partial_previous"])
def test_discriminating_agent_rate_bound(small_instance, mode):
    g, m = small_instance
    cfg = SimulationConfig(g, m, 0, mode, horizon=20000, master_seed=0)
    traj = run(cfg)
    for h in range(1, m.n_hypotheses):
        bound = kl_divergence(m, 0, 0, h)
        tail = rejection_rate(traj, 0, h).tail_mean(0.1)
        assert tail >= 0.9 * bound, f"h{h + 1}: tail rate {tail:.5f} < 0.9 * {bound:.5f}"


@pytest.mark.criterion(4)
def test_fixed_hypothesis_blocks_learning():
    g = Network.from_undirected(2, [(0, 1)])
    base = generate_random_model(2, 3, 6, discriminating_agents=[0], min_kl=0.1, seed=4)
    model = with_copied_columns(base, 1, 0, [1, 2])
    for seed in range(10):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = SimulationConfig(g, model, 0, SharingMode.fixed(1), horizon=5000,
                                   master_seed=seed, record=RecordFlags(every=5000))
        traj = run(cfg)
        assert np.exp(traj.log_beta[-1, 1, 0]) <= 0.5 + 1e-6
        assert not learning_verdict(traj, 0, 0.01)


def _small_random_instance(rng):
    n = int(rng.integers(1, 5))
    m = int(rng.integers(2, 5))
    sizes = [int(s) for s in rng.integers(2, 7, size=n)]
    if n == 1:
        g = Network.from_edges(1, [])
    elif rng.random() < 0.5:
        g = Network.from_edges(n, [(i, (i + 1) % n) for i in range(n)])  # directed ring
    else:
        g = Network.from_edges(n, [(i, j) for i in range(n) for j in range(n) if i != j])
    base = generate_random_model(n, m, sizes, floor=1e-3, seed=int(rng.integers(2**31)))
    # shrink toward uniform until every pairwise KL is at most 0.1
    tables = []
    for t in base.tables:
        w = 1.0
        while True:
            mixed = w * t + (1 - w) / t.shape[0]
            kls = [kl_divergence(LikelihoodModel((mixed,)), 0, a, b)
                   for a in range(m) for b in range(m)]
            if max(kls) <= 0.1:
                break
            w *= 0.8
        tables.append(mixed)
    return g, LikelihoodModel(tuple(tables)), int(rng.integers(m))


@pytest.mark.criterion(5)
@pytest.mark.parametrize("mode_kind", ["full", "partial_previous", "partial_own", "fixed"])
def test_engine_matches_oracle(mode_kind):
    rng = np.random.default_rng(["full", "partial_previous", "partial_own", "fixed"].index(mode_kind))
    worst = 0.0
    for _ in range(20):
        g, model, h_true = _small_random_instance(rng)
        mode = SharingMode.parse(mode_kind, int(rng.integers(model.n_hypotheses)))
        tau_mode = TauMode.PER_AGENT if rng.random() < 0.5 else TauMode.GLOBAL
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            cfg = SimulationConfig(g, model, h_true, mode, tau_mode, horizon=200,
                                   master_seed=int(rng.integers(1000)))
        ref = oracle_run(cfg)
        got = np.exp(run(cfg).log_beta)
        worst = max(worst, float(np.max(np.abs(got - ref) / ref)))
    assert worst <= 1e-9, f"max relative deviation {worst:.3g}"


@pytest.mark.criterion(6)
def test_large_network_ordering():
    spec = parse_spec()
    network = build_network(spec)
    model = build_model(spec, network.n_agents)
    ordered, report = 0, []
    for seed in range(5):
        medians = []
        for mode in LEARNING_MODES:
            traj = run(make_config(spec, network, model, seed, mode))
            assert learning_verdict(traj, 0, 0.01), f"seed {seed}: {mode} did not learn"
            medians.append(median_convergence_time(traj, 0.99, 0))
        report.append(medians)
        ordered += medians[0] <= medians[1] <= medians[2]
    print("median convergence rounds (full, previous, own):", report)
    assert ordered >= 3, report


@pytest.mark.criterion(7)
@pytest.mark.parametrize("mode", LEARNING_MODES, ids=MODE_IDS)
def test_true_learning_per_agent_tau(small_instance, mode):
    assert _all_learn(*small_instance, mode, TauMode.PER_AGENT) == []


@pytest.mark.criterion(8)
@pytest.mark.parametrize("mode", LEARNING_MODES + [SharingMode.fixed(2)], ids=str)
@pytest.mark.parametrize("tau_mode", list(TauMode), ids=lambda t: t.value)
def test_determinism(small_instance, tmp_path, mode, tau_mode):
    g, m = small_instance
    cfg = SimulationConfig(g, m, 0, mode, tau_mode, horizon=300, master_seed=7)
    a, b = run(cfg), run(cfg)
    write_trajectory_csv(a, tmp_path / "a.csv")
    write_trajectory_csv(b, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    order = np.random.default_rng(1).permutation(g.n_agents)
    assert run(cfg, order=order).log_beta.tobytes() == a.log_beta.tobytes()


# property suite

def log_vectors(m, low=-30.0):
    return st.lists(st.floats(low, 0.0, allow_nan=False), min_size=m, max_size=m).map(
        lambda xs: normalize(np.array(xs)))


@st.composite
def belief_case(draw):
    m = draw(st.integers(2, 8))
    k = draw(st.integers(0, 4))
    own = draw(log_vectors(m))
    others = [draw(log_vectors(m)) for _ in range(k)]
    alpha = draw(log_vectors(m))
    perm = np.array(draw(st.permutations(range(m))))
    tau = draw(st.integers(0, m - 1))
    return own, others, alpha, perm, tau


def _on_simplex(log_p):
    p = np.exp(log_p)
    return np.all(p > 0) and abs(p.sum() - 1.0) <= 1e-9


@pytest.mark.criterion(9)
@PROPERTY
@given(belief_case())
def test_property_simplex(case):
    own, others, alpha, _, tau = case
    assert _on_simplex(min_rule_full(own, others, alpha))
    assert _on_simplex(min_rule_partial(own, others, alpha))
    msg = SharedMessage(tau, others[0][tau] if others else alpha[tau])
    assert _on_simplex(estimate_update_previous(own, msg))
    assert _on_simplex(estimate_update_own(alpha, msg))


@pytest.mark.criterion(9)
@PROPERTY
@given(belief_case(), st.lists(st.floats(1e-3, 1.0), min_size=8, max_size=8))
def test_property_permutation_equivariance(case, lik):
    own, others, alpha, perm, tau = case
    m = len(own)
    lik = np.array(lik[:m])
    got = min_rule_full(own[perm], [o[perm] for o in others], alpha[perm])
    assert np.allclose(got, min_rule_full(own, others, alpha)[perm], rtol=0, atol=1e-12)
    assert np.allclose(local_update(own[perm], lik[perm]), local_update(own, lik)[perm], rtol=0, atol=1e-12)
    # the shared hypothesis tau moves to position inv[tau] after permuting
    inv = np.argsort(perm)
    msg = SharedMessage(tau, alpha[tau])
    got = estimate_update_previous(own[perm], SharedMessage(int(inv[tau]), alpha[tau]))
    assert np.allclose(got, estimate_update_previous(own, msg)[perm], rtol=0, atol=1e-12)


@pytest.mark.criterion(9)
@PROPERTY
@given(belief_case())
def test_property_estimate_identities(case):
    own, others, alpha, _, tau = case
    # resending the stored value leaves the estimate unchanged
    same = estimate_update_previous(own, SharedMessage(tau, own[tau]))
    assert np.allclose(same, own, rtol=0, atol=1e-12)
    assert np.allclose(estimate_update_own(own, SharedMessage(tau, own[tau])), own, rtol=0, atol=1e-12)
    # the shared entry lands at the right ratio; other ratios are untouched
    received = alpha[tau]
    est = estimate_update_previous(own, SharedMessage(tau, received))
    rest = np.arange(len(own)) != tau
    assert np.allclose(est[rest] - est[rest][0], own[rest] - own[rest][0], rtol=0, atol=1e-9)
    assert np.allclose(est[tau] - est[rest], received - own[rest], rtol=0, atol=1e-9)


@pytest.mark.criterion(9)
@PROPERTY
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.integers(1, 6), st.integers(0, 40))
def test_property_telescoping(seed, m, size, length):
    rng = np.random.default_rng(seed)
    model = LikelihoodModel((table(*rng.dirichlet(np.ones(size), size=m) * 0.9 + 0.1 / size),))
    prior = rng.dirichlet(np.ones(m)) * 0.9 + 0.1 / m
    obs = rng.integers(size, size=length)
    log_b = np.log(prior)
    for o in obs:
        log_b = local_update(log_b, model.tables[0][o])
    closed = exhaustive_local_posterior(model, 0, obs, prior)
    assert np.allclose(np.exp(log_b), closed, rtol=1e-9, atol=1e-12)
