"""NARMA2 and second-order prediction with the 80-node reservoir, plus a small sweep."""

from igr.tasks import SeriesTaskConfig, node_ablation, run_series_task, sweep

for kind in ("narma2", "second_order"):
    rep = run_series_task(SeriesTaskConfig(kind=kind))
    base = rep.extra["baseline"]
    print(f"{kind:13s} NMSE test {rep.nmse_test:.4f} (baseline {base['nmse_test']:.4f})  "
          f"prediction error {rep.prediction_error_test:.2e} "
          f"(baseline {base['prediction_error_test']:.2e})")

abl = node_ablation(SeriesTaskConfig())
for v, e in enumerate(abl.nmse_per_node, 1):
    print(f"virtual node {v:2d} alone: NMSE {e:.3f}")

# pulse period / duty map; shorter runs keep this under a minute
quick = SeriesTaskConfig(train_length=200, test_length=100)
for cell in sweep((20e-3, 50e-3), (0.5, 0.75), quick):
    flag = "*" if cell.best else " "
    print(f"{flag} period {cell.period * 1e3:4.0f} ms duty {cell.duty:.2f}  NMSE {cell.nmse_test:.4f}")
