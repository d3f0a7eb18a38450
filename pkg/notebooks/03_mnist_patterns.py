"""Four-pulse pattern table and the logistic readout on the bundled digit subset."""

from igr.mnist import MnistConfig, build_pattern_table, run_mnist

table = build_pattern_table()
print(f"offset {table.offset * 1e6:.0f} uA")
for p in range(16):
    print(f"{p:04b}  {table.values[p]:.4f}")

res = run_mnist(MnistConfig())
for n, acc in res.curve:
    print(f"{n:5d} training images -> test accuracy {acc:.3f}")
