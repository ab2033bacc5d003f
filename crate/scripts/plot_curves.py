"""Plot a few predicted survival curves from `survstack predict` output.

usage: python scripts/plot_curves.py curves.csv [out.png] [n_subjects]
"""
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

src = sys.argv[1]
out = sys.argv[2] if len(sys.argv) > 2 else "curves.png"
k = int(sys.argv[3]) if len(sys.argv) > 3 else 5

df = pd.read_csv(src)
fig, ax = plt.subplots(figsize=(6, 4))
for sid, g in list(df.groupby("subject_id"))[:k]:
    ax.step(g["time"], g["survival"], where="post", label=f"subject {sid}")
ax.set_xlabel("time")
ax.set_ylabel("survival")
ax.set_ylim(0, 1.02)
ax.legend(fontsize=8)
fig.tight_layout()
fig.savefig(out, dpi=120)
