"""Replicate the published gap-closed table on MIPLIB 3.0 instances.

Requires the instance files under data/miplib3/ (they are not bundled;
see data/miplib3/README.md for where to get them).  For every file found
the script reports the gap closed by the elementary closure, by its
strengthened approximation and by one round of tableau GMI cuts, next to
the published elementary-closure value.
"""

import os
import time

from liftproject import ClosureConfig, gap_closed, gmi_rounds, optimize_closure
from liftproject.instances import load_optima, normalize, read_mps

HERE = os.path.dirname(__file__)
DATA = os.path.join(HERE, "..", "data")
MIPLIB = os.path.join(DATA, "miplib3")

PUBLISHED_PE = {
    "bell3a": 64.56,
    "egout": 93.85,
    "flugpl": 11.72,
    "p0033": 8.19,
    "lseu": 16.58,
    "mod008": 9.02,
    "vpm1": 31.42,
    "stein27": 0.0,
}

optima = load_optima(os.path.join(DATA, "reference_optima.txt"))
available = [
    name for name in sorted(PUBLISHED_PE)
    if os.path.exists(os.path.join(MIPLIB, f"{name}.mps"))
]
if not available:
    print("no MIPLIB 3.0 files under data/miplib3/ - nothing to replicate;")
    print("see data/miplib3/README.md for download instructions")
    raise SystemExit(0)

print(f"{'name':<9} {'published Pe':>12} {'Pe':>8} {'Pe*':>8} {'1xGMI':>8} {'secs':>7}")
for name in available:
    nm = normalize(read_mps(os.path.join(MIPLIB, f"{name}.mps")))
    z_opt = optima[name]
    t0 = time.time()
    pe = optimize_closure(nm, ClosureConfig(mode="pe"))
    ps = optimize_closure(nm, ClosureConfig(mode="pestar"))
    g1 = gmi_rounds(nm, 1)
    elapsed = time.time() - t0
    gaps = [gap_closed(r.z_lp, r.z_cut, z_opt) for r in (pe, ps, g1)]
    print(
        f"{name:<9} {PUBLISHED_PE[name]:>12.2f} {gaps[0]:>8.2f} "
        f"{gaps[1]:>8.2f} {gaps[2]:>8.2f} {elapsed:>7.1f}"
    )
