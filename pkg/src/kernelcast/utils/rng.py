"""Counter-based random streams keyed by (seed, day, hour, purpose).

A stream depends only on its key, so results do not change with the order in
which days and hours are scheduled.
"""

from datetime import date
from typing import Dict

import numpy as np

PURPOSES: Dict[str, int] = {"gpr": 1, "svr": 2, "lear": 3, "diagnostics": 4}


def stream(seed: int, day: date, hour: int, purpose: str) -> np.random.Generator:
    key = [int(seed), day.toordinal(), int(hour), PURPOSES[purpose]]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(key)))
