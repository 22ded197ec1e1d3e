"""Time the hot kernels under both backends.

Each backend runs in its own interpreter because the flag is read at import.
Numba compile time is excluded by a warm-up call.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, sys, timeit
from nibblematch import _accel
from nibblematch.augment import enumerate_aug_stars
from nibblematch.generators import random_regular_simple, steiner_triple_system
from nibblematch.nibble import NibbleConfig, init_state, run_nibble, sample_stage

repeat = int(sys.argv[1])
sts = steiner_triple_system(999, seed=0)
reg = random_regular_simple(4, 40, 1200, seed=0)
st = init_state(reg, NibbleConfig(gamma=0.5))
res = run_nibble(reg, NibbleConfig(gamma=0.6, seed=0, stat_pairs=0))

cases = {
    "nibble_sts999": lambda: run_nibble(sts, NibbleConfig(gamma=0.5, seed=1, stat_vertices=0,
                                                          stat_pairs=0)),
    "sample_stage_20k": lambda: sample_stage(reg, st, 20_000, seed=0),
    "star_enumeration": lambda: enumerate_aug_stars(reg, res.matching, res.waste),
    "max_codegree": lambda: reg.edge_subset(range(reg.num_edges)).max_codegree(),
}
out = {"backend": _accel.BACKEND}
for name, fn in cases.items():
    fn()
    out[name] = min(timeit.repeat(fn, number=1, repeat=repeat))
print(json.dumps(out))
"""


def run(backend, repeat):
    env = dict(os.environ, NIBBLEMATCH_BACKEND=backend)
    proc = subprocess.run([sys.executable, "-c", WORKLOAD, str(repeat)], env=env,
                          capture_output=True, text=True, check=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rows = {b: run(b, args.repeat) for b in ("numba", "numpy")}
    names = [k for k in rows["numba"] if k != "backend"]
    print(f"{'kernel':<20}{'numba s':>12}{'numpy s':>12}{'speedup':>10}")
    for n in names:
        a, b = rows["numba"][n], rows["numpy"][n]
        print(f"{n:<20}{a:>12.4f}{b:>12.4f}{b / a:>10.1f}")


if __name__ == "__main__":
    main()
