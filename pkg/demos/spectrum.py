"""Plan spectrum: what the rewrite does to every join order at once.

A cost-based optimizer is only as good as its cardinality estimates, so a
useful robustness measure is how many of a query's join orders are cheap,
not whether the single chosen one is. This enumerates all orders of one
4-relation chain, executes each both ways, and prints the cumulative
distribution: at every cost threshold the rewritten spectrum should hold
at least as many plans as the baseline one.

Run:  python3 demos/spectrum.py [query-name]
"""

import sys

from ridjoin.bench import SPECTRUM_QUERIES, run_spectrum

named = dict(SPECTRUM_QUERIES)
name = sys.argv[1] if len(sys.argv) > 1 else "chain-knows"
sql = named[name]

print(f"-- {name}: {sql}\n")
spectrum = run_spectrum(sql)

for variant in ("baseline", "rewritten"):
    costs = sorted(spectrum.costs(variant))
    print(f"{variant:>10}: best={costs[0]:<8} worst={costs[-1]:<8} "
          f"n={len(costs)}")

print()
print(spectrum.cdf.render_csv())

best_base = min(spectrum.costs("baseline"))
rewritten = spectrum.costs("rewritten")
within = sum(c <= best_base for c in rewritten)
cheaper = sum(c < best_base for c in rewritten)
print(f"{within} of {len(rewritten)} rewritten plans are at or below the "
      f"best baseline cost ({best_base} tuples); {cheaper} beat it outright.")
