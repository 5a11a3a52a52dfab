"""Constants pinned from a recorded calibration run (``scripts/calibrate.py``).

The run's raw numbers live in ``data/calibration.json``.
"""

import json
from importlib import resources

# min over r in {2, 4, 8}, w in {0.01, 0.05, 0.1, 0.15} of
# (QIC(and_r, mu_w) - QIC(and_r, mu_star)) / (r H(w)) was 1.5087; rounded down
AND_BLOWUP_C = 1.5
AND_BLOWUP_RS = (2, 4, 8)
AND_BLOWUP_WS = (0.01, 0.05, 0.1, 0.15)

# r QIC(and_r, mu_star) / log2(8 r) over r = 1..16 spanned [0.13353, 0.17826]
AND_DECAY_BAND = (0.13, 0.18)
AND_DECAY_RS = tuple(range(1, 17))


def recorded() -> dict:
    """The calibration run as recorded in the package data."""
    return json.loads(resources.files("qicsim").joinpath("data/calibration.json").read_text())
