"""
Always sharing the same hypothesis can stop learning
====================================================

Two agents on a line, three hypotheses. Agent 0 can separate everything;
agent 1's signals look the same under every hypothesis. If the shared
entry is always h2, agent 1 never hears anything that separates h1 from h3.
"""
import warnings

import numpy as np

import minrule

line = minrule.Network.from_undirected(2, [(0, 1)])
base = minrule.generate_random_model(2, 3, 6, discriminating_agents=[0], min_kl=0.1, seed=4)
model = minrule.with_copied_columns(base, 1, 0, [1, 2])
print("agent 1 can separate h1/h3:", 1 in minrule.discriminating_set(model, 0, 2))

for mode in (minrule.SharingMode.fixed(1), minrule.SharingMode.PARTIAL_PREVIOUS):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        cfg = minrule.SimulationConfig(line, model, 0, mode, horizon=5000, master_seed=0)
    traj = minrule.run(cfg)
    final = np.exp(traj.log_beta[-1])
    print(f"{str(mode):17s} agent 1 final beliefs: {np.round(final[1], 4)}"
          f"  learned: {minrule.learning_verdict(traj, 0, 0.01)}")

# with a fixed entry agent 1 keeps h1 and h3 tied at 1/2 each
