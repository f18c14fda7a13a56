"""Compare the numba kernels with the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at
import time.  Usage: python benchmarks/bench_kernels.py [--dims 1000,4000]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from qrabi import _accel, eigen, gfunction
from qrabi.model import ModelParams, build_sector_hamiltonian, scaled_params

dims = [int(d) for d in sys.argv[1].split(",")]
p = ModelParams(delta=0.5)
op = build_sector_hamiltonian(p, "plus", 64)
eigen.eigenvalues(op)  # compile / load cache outside the timed region
sc = scaled_params(p)
gfunction.g_values(sc, np.linspace(0.1, 0.9, 8))
out = {"backend": _accel.backend(), "eigen": {}}
for dim in dims:
    op = build_sector_hamiltonian(p, "plus", dim)
    t = time.perf_counter()
    ev = eigen.eigenvalues(op)
    out["eigen"][dim] = time.perf_counter() - t
    out.setdefault("checksum", {})[dim] = float(np.sum(ev))
xs = np.linspace(0.05, 19.95, 20000)
t = time.perf_counter()
gfunction.g_values(sc, xs)
out["g_values_20000"] = time.perf_counter() - t
print(json.dumps(out))
"""


def run(disable: bool, dims: str) -> dict:
    env = dict(os.environ)
    if disable:
        env["QRABI_DISABLE_NUMBA"] = "1"
    else:
        env.pop("QRABI_DISABLE_NUMBA", None)
    res = subprocess.run([sys.executable, "-c", CHILD, dims], env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--dims", default="500,2000,4000")
    args = ap.parse_args()
    fast = run(False, args.dims)
    slow = run(True, args.dims)
    print(f"{'task':<22}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for dim in fast["eigen"]:
        a, b = fast["eigen"][dim], slow["eigen"][dim]
        print(f"{'eigenvalues dim=' + dim:<22}{a:>12.4f}{b:>12.4f}{b / a:>10.1f}")
        # both backends must produce the same spectrum
        assert abs(fast["checksum"][dim] - slow["checksum"][dim]) <= 1e-9 * abs(slow["checksum"][dim])
    a, b = fast["g_values_20000"], slow["g_values_20000"]
    print(f"{'G on 20000 points':<22}{a:>12.4f}{b:>12.4f}{b / a:>10.1f}")


if __name__ == "__main__":
    main()
