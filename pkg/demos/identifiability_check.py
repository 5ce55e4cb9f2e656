"""
Can the network tell the hypotheses apart?
==========================================

Learning needs, for every pair of hypotheses, at least one agent whose
signal distributions differ. Here we break that on purpose.
"""
import numpy as np

import minrule

model = minrule.generate_random_model(5, 4, 8, seed=3)
print(minrule.check_global_identifiability(model))

# every agent gets identical columns for h2 and h4
blind = minrule.with_copied_columns(model, range(5), 1, [3])
report = minrule.check_global_identifiability(blind)
print(report)
print("pairs nobody can separate:", [(l + 1, k + 1) for l, k in report.failing_pairs])

# connectivity matters too: a one-way path does not let the end talk back
path = minrule.Network.from_edges(3, [(0, 1), (1, 2)])
print("one-way path strongly connected:", minrule.is_strongly_connected(path))
print("ring strongly connected:", minrule.is_strongly_connected(minrule.circulant(5, 2)))
