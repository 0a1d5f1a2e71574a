"""Graph geodesics on a sampled unit circle.

Two antipodal points sit at inner distance pi and outer distance 2, so the
circle's normal-embedding constant is pi/2.  Run: python3 demos/circle_oracle.py
"""

import math

import numpy as np

from lnecone.metric import build_graph, inner_distance, lne_constant, spacing

n = 2000
rng = np.random.default_rng(0)
theta = 2 * math.pi * (np.arange(n) + rng.uniform(size=n)) / n
pts = np.concatenate([[[1.0, 0.0], [-1.0, 0.0]], np.column_stack([np.cos(theta), np.sin(theta)])])

graph = build_graph(pts, 6 * spacing(pts))
d = inner_distance(graph, 0, 1)
est = lne_constant(graph, pair_budget=300)
print(f"antipodal inner distance {d:.5f}  (pi = {math.pi:.5f})")
print(f"lambda estimate          {est.value:.5f}  (pi/2 = {math.pi / 2:.5f})")
