"""
How fast does one agent reject a wrong hypothesis?
==================================================

A lone agent with two hypotheses and two signals. Under h1 it sees signal 0
with probability 0.8; under h2 the signals are a fair coin. The log-ratio of
its local beliefs should fall at the KL divergence between the two columns.
"""
import numpy as np

import minrule

tables = np.array([[0.8, 0.5],
                   [0.2, 0.5]])
model = minrule.LikelihoodModel((tables,))
k = minrule.kl_divergence(model, 0, 0, 1)
print("K(h1, h2) =", round(k, 6))

lonely = minrule.Network.from_edges(1, [])
rates = []
for seed in range(10):
    cfg = minrule.SimulationConfig(lonely, model, 0, horizon=20000, master_seed=seed,
                                   record=minrule.RecordFlags(local=True, every=1000))
    traj = minrule.run(cfg)
    rates.append(minrule.local_log_ratio_rate(traj, 0, 1, 0).values[-1])

# should sit close to -K
print("empirical (1/t) log(alpha(h2)/alpha(h1)):", np.round(rates, 4))
print("mean:", np.mean(rates), " -K:", -k)
