"""Plot best-so-far training fitness from a run's trace CSV.

Not part of the package; needs matplotlib.

    python docs/plot_trace.py results/trace_run0.csv trace.png
"""

import csv
import sys

import matplotlib.pyplot as plt

path, out = sys.argv[1], sys.argv[2] if len(sys.argv) > 2 else "trace.png"
with open(path, newline="") as fh:
    rows = list(csv.DictReader(fh))
gens = [int(r["generation"]) for r in rows]
for key in ("task1_best", "task2_best"):
    if key in rows[0]:
        plt.plot(gens, [float(r[key]) for r in rows], label=key)
plt.xlabel("generation")
plt.ylabel("training CV accuracy (%)")
plt.legend()
plt.savefig(out, dpi=120)
