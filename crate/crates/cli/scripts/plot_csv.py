"""Plot a spinprobe trajectory CSV (and its envelope file, if present).

    python plot_csv.py out/fig2.csv [out.png]

Needs matplotlib; spinprobe itself does not depend on it.
"""
import csv
import sys
from pathlib import Path

import matplotlib.pyplot as plt


def read(path):
    with open(path, newline="") as f:
        rows = list(csv.DictReader(f))
    return {k: [float(r[k]) for r in rows] for k in rows[0]}


def main():
    src = Path(sys.argv[1])
    data = read(src)
    fig, (ax_m, ax_phase) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    ax_m.plot(data["t"], data["M"], lw=0.3, label="M")
    ax_m.plot(data["t"], [1 - e for e in data["E"]], label="1 - E")
    env = src.with_name(src.stem + "_envelope.csv")
    if env.exists():
        e = read(env)
        ax_m.plot(e["t"], e["envelope_M"], label="envelope(M)")
    ax_m.legend(loc="lower left")
    valid = [(t, a) for t, a, v in zip(data["t"], data["arg_det"], data["arg_det_valid"]) if v]
    if valid:
        ax_phase.plot(*zip(*valid), ".", ms=1)
    ax_phase.set_ylabel("arg det C")
    ax_phase.set_xlabel("t")
    out = sys.argv[2] if len(sys.argv) > 2 else src.with_suffix(".png")
    fig.savefig(out, dpi=150)


if __name__ == "__main__":
    main()
