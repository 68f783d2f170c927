"""Per-query cost of turning each optimization off.

Runs the shipped 10-query suite under the four nested configurations and
pivots the tuples_materialized totals into one row per query, so the
contribution of each layer reads left to right: merging saves edge scans,
reverse semijoins prune the probe side, pointers alone remove the
hash-table work but still touch every zone.

Run:  python3 demos/ablation.py
"""

from ridjoin.bench import run_ablation

report = run_ablation()

queries = list(dict.fromkeys(r[0] for r in report.rows))
mats = {(r[0], r[1]): r[3] for r in report.rows}
walls = {(r[0], r[1]): r[2] for r in report.rows}
configs = ("vanilla", "ridmat", "ridmat+rsj", "full")

print("tuples materialized")
print(f"{'query':<15}" + "".join(f"{c:>12}" for c in configs))
for q in queries:
    print(f"{q:<15}" + "".join(f"{mats[q, c]:>12}" for c in configs))

print()
print("median wall ms")
print(f"{'query':<15}" + "".join(f"{c:>12}" for c in configs))
for q in queries:
    print(f"{q:<15}" + "".join(f"{walls[q, c]:>12.2f}" for c in configs))
