"""Tiling systems against the chase on their encoding.

For each system under data/tiling the bounded tiler looks for a grid and the
chase looks for the query answer. A negative row only means that neither
side found anything within its bounds.

    python3 demos/tiling.py [BUDGET]
"""

import sys
from pathlib import Path

from pwlward.tiling import TilingSystem, cross_check

budget = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
for path in sorted((Path(__file__).parent / "data" / "tiling").glob("*.json")):
    t = TilingSystem.from_json(path.read_text())
    rep = cross_check(t, budget, (4, 4))
    grid = " / ".join("".join(r) for r in rep["tiling"]) if rep["tiling"] else "-"
    print(f"{path.stem:<24} {rep['status']:<17} grid {grid:<12} chase steps {rep['chase_steps']}"
          f"{'' if rep['chase_terminated'] else ' (budget hit)'}")
