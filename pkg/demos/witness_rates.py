"""Inner/outer ratio along bundled curve pairs.

The ratio blows up like a power of the curve parameter; the fitted slope is
the rate.  Takes about a minute.  Run: python3 demos/witness_rates.py
"""

from lnecone import corpus
from lnecone.metric import parse_grid
from lnecone.witness import witness_exponent, witness_table

for name in ["double-spheres", "ice-cream"]:
    entry = corpus.get(name)
    (pair,) = entry.witnesses
    rows = witness_table(pair.germ(entry), pair.alpha, pair.beta, parse_grid(pair.grid), pair.n)
    print(f"== {name} ({pair.name}), expected slope {pair.expected_slope}")
    for r in rows:
        print(f"   s={r.s:<8.4g} outer={r.outer:.4g} inner~{r.inner_est:.4g} ratio={r.ratio:.2f}")
    fit = witness_exponent(rows)
    print(f"   fitted slope {fit.slope:+.3f} (r2 {fit.r_squared:.3f})")
