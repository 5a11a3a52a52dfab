"""Recompute the calibration numbers behind ``qicsim.calibration``.

Usage: python3 scripts/calibrate.py [--write]
With --write the run is stored in src/qicsim/data/calibration.json.
"""

import argparse
import json
import math
from pathlib import Path

from qicsim import __version__
from qicsim.builtins import build_and_protocol, mu_star, mu_w
from qicsim.calibration import AND_BLOWUP_RS, AND_BLOWUP_WS, AND_DECAY_RS
from qicsim.engine import qic
from qicsim.measures import binary_entropy

OUT = Path(__file__).resolve().parents[1] / "src" / "qicsim" / "data" / "calibration.json"


def blowup_rows():
    rows = []
    for r in AND_BLOWUP_RS:
        p = build_and_protocol(r)
        base = qic(p, mu_star()).qic_total
        for w in AND_BLOWUP_WS:
            delta = qic(p, mu_w(w)).qic_total - base
            rows.append({"r": r, "w": w, "delta_qic": delta, "ratio": delta / (r * binary_entropy(w))})
    return rows


def decay_rows():
    rows = []
    for r in AND_DECAY_RS:
        q = qic(build_and_protocol(r), mu_star()).qic_total
        rows.append({"r": r, "qic": q, "normalized": r * q / math.log2(8 * r)})
    return rows


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--write", action="store_true")
    args = ap.parse_args()
    blow, decay = blowup_rows(), decay_rows()
    run = {
        "version": __version__,
        "blowup": {"rows": blow, "min_ratio": min(x["ratio"] for x in blow)},
        "decay": {
            "rows": decay,
            "min_normalized": min(x["normalized"] for x in decay),
            "max_normalized": max(x["normalized"] for x in decay),
        },
    }
    text = json.dumps(run, indent=2)
    print(text)
    if args.write:
        OUT.write_text(text + "\n")


if __name__ == "__main__":
    main()
