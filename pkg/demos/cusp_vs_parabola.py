"""A cusp and a parabola side by side.

Both curves have a half-line or a line as tangent cone, yet only the cusp
folds two sheets onto it.  The shell profile, k_X and the symbolic cone all
see the difference.  Run: python3 demos/cusp_vs_parabola.py
"""

import numpy as np

from lnecone import corpus
from lnecone.cone import kx_estimate, symbolic_cone
from lnecone.expr import is_squarefree
from lnecone.metric import lne_profile, parse_grid

scales = parse_grid("0.2:0.0125:log5")
for name, v in [("cusp", [1.0, 0.0]), ("parabola", [1.0, 0.0])]:
    sets = list(corpus.get(name).set)
    prof = lne_profile(sets, scales)
    kx = kx_estimate(sets, np.array(v))
    (form,) = symbolic_cone(list(sets[0].equations))
    print(f"== {name}")
    for t, lam in zip(prof.scales, prof.lambda_per_scale):
        print(f"   t={t:<8.4g} lambda={lam:.3f}")
    print(f"   slope {prof.exponent_fit.slope:+.3f}  verdict {prof.verdict}")
    print(f"   k_X at {v}: {kx.k} (stable: {kx.stable})")
    print(f"   initial form {form}, squarefree: {is_squarefree(form)}")
