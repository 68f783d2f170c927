"""Selectivity sweep on a generated social graph, both directions.

Person-side sweep: as the filter on the source person tightens, the scan
of the edge table should collapse, because the rid masks built from the
few surviving people admit only their zones. Edge-side sweep: tightening
the filter on Knows itself hands the pointer machinery nothing to prune,
and the point of the second table is that it costs nothing anyway.

Scale here is deliberately smaller than the shipped benchmark defaults so
the script finishes in seconds; pass --full for the 10k-person version.

Run:  python3 demos/selectivity_sweep.py [--full] [--plot DIR]
"""

import sys

from ridjoin.bench import (
    MICRO_CONFIG,
    MicroSpec,
    SocialDbConfig,
    run_micro,
    save_micro_plot,
    social_catalog,
)

config = SocialDbConfig(n_person=2000, avg_degree=20.0,
                        n_comment_per_person=0, seed=42)
if "--full" in sys.argv:
    config = MICRO_CONFIG
plot_dir = None
if "--plot" in sys.argv:
    plot_dir = sys.argv[sys.argv.index("--plot") + 1]

catalog = social_catalog(config)
knows = catalog.table("Knows").row_count
print(f"social graph: {config.n_person} people, {knows} edges\n")

for which in ("MICRO-P", "MICRO-K"):
    swept = "Person" if which == "MICRO-P" else "Knows"
    print(f"== {which}: sweep the {swept}-side selectivity ==")
    report = run_micro(MicroSpec(which), catalog=catalog)
    print(report.render_csv())
    if plot_dir:
        path = f"{plot_dir}/{which.lower()}.svg"
        save_micro_plot(report, path)
        print(f"wrote {path}")
    print()
