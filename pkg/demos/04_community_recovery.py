# coding: utf-8

# # Finding the groups again
#
# Plant a few dense groups in a sparse random network, run the map-equation
# search, and count how many nodes land with their own group.

# In[1]:

import numpy as np
from scipy.optimize import linear_sum_assignment

from svnet import DetectorConfig, detect, map_equation
from svnet.synthetic import planted_partition_network


def agreement(truth, found):
    # best one-to-one matching of planted groups to clusters
    overlap = np.array([[len(set(t) & set(f)) for f in found] for t in truth])
    r, c = linear_sum_assignment(-overlap)
    return overlap[r, c].sum() / sum(len(t) for t in truth)


# In[2]:

net, truth = planted_partition_network([12, 15, 9, 20], p_in=0.6, p_out=0.02, seed=3)
part = detect(net, DetectorConfig(trials=100, seed=0))
print(len(net.nodes), "nodes,", len(net.edges), "edges,", len(part), "clusters")
print("sizes found:", part.sizes)
print(f"node agreement {agreement(truth, part.clusters):.0%}")


# The codelength of the planted split is a useful yardstick.  If the search
# did its job it should be no worse.

# In[3]:

planted = [[v for v in t if v in set(net.nodes)] for t in truth]
print(f"found   {part.codelength:.4f} bits")
print(f"planted {map_equation(net, planted):.4f} bits")
print(f"one module {map_equation(net, [list(net.nodes)]):.4f} bits")


# As the groups dissolve into the background the signal goes away.  At
# p_in = p_out there is nothing to find and the best description is one
# module.

# In[4]:

for p_in in (0.6, 0.3, 0.15, 0.08, 0.04):
    scores = []
    for seed in range(5):
        net, truth = planted_partition_network([15] * 4, p_in=p_in, p_out=0.04, seed=seed)
        part = detect(net, DetectorConfig(trials=20, seed=seed))
        nodes = set(net.nodes)
        scores.append(agreement([[v for v in t if v in nodes] for t in truth], part.clusters))
    print(f"p_in {p_in:.2f}: agreement {np.mean(scores):.0%}")
