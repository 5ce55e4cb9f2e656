from fractions import Fraction as F

import numpy as np
import pytest

from minrule import (
    EngineError,
    LikelihoodModel,
    Network,
    NumericalDegeneracyError,
    ParameterError,
    RecordFlags,
    SharingMode,
    SimulationConfig,
    TauMode,
    generate_k_regular,
    generate_random_model,
    run,
    select_tau,
)
from minrule import beliefs
from minrule.engine import Streams, initial_state, step

from conftest import table

MODES = [SharingMode.FULL, SharingMode.PARTIAL_PREVIOUS, SharingMode.PARTIAL_OWN, SharingMode.fixed(1)]
LINE = Network.from_undirected(2, [(0, 1)])


@pytest.fixture(scope="module")
def small():
    g = generate_k_regular(6, 2, 0)
    m = generate_random_model(6, 4, 5, discriminating_agents=[0], min_kl=0.05, seed=1)
    return g, m


def test_select_tau_variants():
    rng = np.random.default_rng(0)
    taus = select_tau(TauMode.GLOBAL, SharingMode.PARTIAL_PREVIOUS, 20, 1, rng, 7)
    assert len(set(taus.tolist())) == 1 and 0 <= taus[0] < 20
    fixed = SharingMode.fixed(1)
    for t in range(1, 20):
        assert select_tau(TauMode.GLOBAL, fixed, 5, t, rng, 3).tolist() == [1, 1, 1]
    assert select_tau(TauMode.GLOBAL, SharingMode.FULL, 5, 1, rng, 3) is None


def test_select_tau_global_frequencies():
    rng = np.random.default_rng(1)
    n = 100_000
    draws = np.array([select_tau(TauMode.GLOBAL, SharingMode.PARTIAL_OWN, 4, t, rng, 1)[0]
                      for t in range(n)])
    sigma = np.sqrt(0.25 * 0.75 / n)
    freqs = np.bincount(draws, minlength=4) / n
    assert np.all(np.abs(freqs - 0.25) <= 3 * sigma)


def test_select_tau_per_agent_independent():
    rngs = [np.random.default_rng(s) for s in range(5)]
    rows = [select_tau(TauMode.PER_AGENT, SharingMode.PARTIAL_OWN, 10, t, rngs, 5) for t in range(50)]
    assert any(len(set(r.tolist())) > 1 for r in rows)
    assert all(r.min() >= 0 and r.max() < 10 for r in rows)


def test_full_single_agent_is_min_of_previous_and_local():
    model = LikelihoodModel((table([0.7, 0.2, 0.1], [0.2, 0.3, 0.5]),))
    cfg = SimulationConfig(Network.from_edges(1, []), model, 0, horizon=30, master_seed=2,
                           record=RecordFlags(local=True))
    traj = run(cfg)
    for r in range(1, 31):
        expect = beliefs.normalize(np.minimum(traj.log_beta[r - 1, 0], traj.log_alpha[r, 0]))
        assert np.array_equal(traj.log_beta[r, 0], expect)


def _hand_round(beta, est, alpha_prev, lik, obs, tau):
    """One round of the stored-estimate rule for a 2-agent line, exact rationals."""
    alpha, new_beta, new_est = [], [], [None, None]
    for i in range(2):
        w = [lik[i][obs[i]][h] * alpha_prev[i][h] for h in range(2)]
        alpha.append([x / sum(w) for x in w])
    for i in range(2):
        j = 1 - i
        d = 1 - est[i][tau] + beta[j][tau]
        e = [(beta[j][h] if h == tau else est[i][h]) / d for h in range(2)]
        new_est[i] = e
        mins = [min(beta[i][h], alpha[i][h], e[h]) for h in range(2)]
        new_beta.append([x / sum(mins) for x in mins])
    return new_beta, new_est, alpha


def test_partial_previous_hand_trace():
    lik = [
        [[F(8, 10), F(5, 10)], [F(2, 10), F(5, 10)]],  # agent 0: lik[o][h]
        [[F(3, 10), F(6, 10)], [F(7, 10), F(4, 10)]],
    ]
    model = LikelihoodModel(tuple(np.array([[float(x) for x in row] for row in t]) for t in lik))
    obs = np.array([[0, 1], [1, 0]])
    cfg = SimulationConfig(LINE, model, 0, SharingMode.PARTIAL_PREVIOUS, horizon=2, master_seed=5,
                           record=RecordFlags(taus=True, estimates=True))
    traj = run(cfg, observations=obs)

    half = [F(1, 2), F(1, 2)]
    beta, est, alpha = [half, half], [half, half], [half, half]
    beta, est, alpha = _hand_round(beta, est, alpha, lik, obs[0], int(traj.taus[0, 0]))
    assert beta == [[F(13, 23), F(10, 23)], [F(11, 19), F(8, 19)]]
    assert np.exp(traj.log_beta[1]) == pytest.approx(np.array(beta, dtype=float), rel=1e-14)

    beta, est, alpha = _hand_round(beta, est, alpha, lik, obs[1], int(traj.taus[1, 0]))
    assert alpha == [[F(16, 41), F(25, 41)], [F(7, 15), F(8, 15)]]
    assert np.exp(traj.log_beta[2]) == pytest.approx(np.array(beta, dtype=float), rel=1e-14)
    assert np.exp(traj.estimates[2]) == pytest.approx(np.array(est, dtype=float), rel=1e-14)


@pytest.mark.parametrize("mode", MODES, ids=str)
def test_deterministic(small, mode):
    g, m = small
    cfg = SimulationConfig(g, m, 0, mode, horizon=80, master_seed=9)
    a, b = run(cfg), run(cfg)
    assert a.log_beta.tobytes() == b.log_beta.tobytes()


@pytest.mark.parametrize("mode", MODES, ids=str)
def test_processing_order_irrelevant(small, mode):
    g, m = small
    cfg = SimulationConfig(g, m, 0, mode, horizon=60, master_seed=4, tau_mode=TauMode.PER_AGENT)
    ref = run(cfg)
    for order in ([5, 4, 3, 2, 1, 0], [2, 0, 5, 1, 4, 3]):
        assert run(cfg, order=order).log_beta.tobytes() == ref.log_beta.tobytes()


def test_horizon_zero(small):
    g, m = small
    traj = run(SimulationConfig(g, m, 0, horizon=0))
    assert traj.rounds.tolist() == [0]
    assert np.allclose(np.exp(traj.log_beta), 0.25)


def test_horizon_does_not_perturb_draws(small):
    g, m = small
    cfg = SimulationConfig(g, m, 0, SharingMode.PARTIAL_OWN, horizon=300, master_seed=1)
    short = SimulationConfig(g, m, 0, SharingMode.PARTIAL_OWN, horizon=120, master_seed=1)
    assert np.array_equal(run(cfg).log_beta[:121], run(short).log_beta)


def test_record_every(small):
    g, m = small
    cfg = SimulationConfig(g, m, 0, horizon=25, record=RecordFlags(every=10))
    traj = run(cfg)
    assert traj.rounds.tolist() == [0, 10, 20, 25]
    full = run(SimulationConfig(g, m, 0, horizon=25))
    assert np.array_equal(traj.log_beta, full.log_beta[[0, 10, 20, 25]])
    assert len(full.rounds) == 26


def test_complete_graph_identical_observations_identical_beliefs():
    t = table([0.6, 0.3, 0.1], [0.2, 0.5, 0.3], [0.3, 0.3, 0.4])
    model = LikelihoodModel((t,) * 4)
    g = Network.from_edges(4, [(i, j) for i in range(4) for j in range(4) if i != j])
    obs = np.repeat(np.random.default_rng(0).integers(3, size=(40, 1)), 4, axis=1)
    traj = run(SimulationConfig(g, model, 0, horizon=40), observations=obs)
    assert np.all(traj.log_beta == traj.log_beta[:, :1, :])


def test_estimates_keep_unshared_ratios():
    m = generate_random_model(2, 4, 6, discriminating_agents=[0], min_kl=0.05, seed=3)
    cfg = SimulationConfig(LINE, m, 0, SharingMode.PARTIAL_PREVIOUS, horizon=40, master_seed=2,
                           record=RecordFlags(estimates=True, taus=True))
    traj = run(cfg)
    receivers, senders = LINE.edge_arrays()
    for t in range(1, 41):
        tau = traj.taus[t - 1]
        for e, (i, j) in enumerate(zip(receivers, senders)):
            prev, new = traj.estimates[t - 1, e], traj.estimates[t, e]
            sent = traj.log_beta[t - 1, j, tau[j]]
            for h in range(4):
                if h != tau[j]:
                    assert new[tau[j]] - new[h] == pytest.approx(sent - prev[h], abs=1e-12)


def test_agent_state_view(small):
    g, m = small
    cfg = SimulationConfig(g, m, 0, SharingMode.PARTIAL_PREVIOUS, horizon=3)
    state = initial_state(cfg)
    view = state.agent(2, g)
    assert sorted(view.estimates) == list(g.adjacency[2])
    assert initial_state(SimulationConfig(g, m, 0, SharingMode.PARTIAL_OWN)).estimates is None


def test_config_validation(small):
    g, m = small
    with pytest.raises(ParameterError):
        SimulationConfig(Network.from_edges(6, [(0, 1)]), m, 0)
    with pytest.raises(ParameterError):
        SimulationConfig(g, m, 7)
    with pytest.raises(ParameterError):
        SimulationConfig(g, m, 0, SharingMode.fixed(9))
    with pytest.raises(ParameterError):
        SimulationConfig(generate_k_regular(8, 2, 0), m, 0)
    flat = LikelihoodModel((np.full((2, 4), 0.5),) * 6)
    with pytest.warns(UserWarning, match="identifiable"):
        SimulationConfig(g, flat, 0)
    with pytest.raises(ParameterError):
        SharingMode.parse("fixed")
    with pytest.raises(ParameterError):
        SharingMode("gossip")


def test_streams_in_order(small):
    g, m = small
    streams = Streams(SimulationConfig(g, m, 0, SharingMode.PARTIAL_OWN))
    streams.draw(1)
    with pytest.raises(ParameterError):
        streams.draw(3)


def test_engine_error_carries_partial_trajectory(small, monkeypatch):
    g, m = small
    cfg = SimulationConfig(g, m, 0, SharingMode.PARTIAL_PREVIOUS, horizon=10)
    calls = {"n": 0}
    real = beliefs.log_replacement_mass

    def flaky(log_rest, received):
        calls["n"] += 1
        if calls["n"] == 3:
            raise NumericalDegeneracyError("forced", index=np.array([4]))
        return real(log_rest, received)

    monkeypatch.setattr(beliefs, "log_replacement_mass", flaky)
    with pytest.raises(EngineError) as info:
        run(cfg)
    err = info.value
    receivers, _ = g.edge_arrays()
    assert err.round == 3
    assert err.agent == receivers[4]
    assert err.trajectory.rounds.tolist() == [0, 1, 2]
    assert err.trajectory.metadata["complete"] is False
