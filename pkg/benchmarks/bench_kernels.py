"""Compare the numba-compiled kernels with the pure-numpy fallback.

Each path runs in its own interpreter because the switch (P2MU_DISABLE_NUMBA)
is read at import time.  The child prints timings and a few result values;
the parent checks that both paths agree and reports the speed-up.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
import numpy as np
from p2mu import NUMBA_ENABLED
from p2mu.specfun import ProblemSpec, gen_airy_arrays
from p2mu import ode, electrodiffusion as ed
from p2mu.connection import init_decaying_solution

repeat = int(sys.argv[1])
out = {"numba": NUMBA_ENABLED, "timings": {}, "values": {}}

def best(fn):
    fn()  # warm-up (includes compilation when numba is on)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        val = fn()
        times.append(time.perf_counter() - t)
    return min(times), val

xs = np.linspace(0.05, 30.0, 2000)
t, v = best(lambda: gen_airy_arrays(3, xs))
out["timings"]["gen_airy_2000"] = t
out["values"]["gen_airy_f_sum"] = float(np.sum(v[1]))

spec = ProblemSpec(1)
seed = init_decaying_solution(spec, 0.2820947917738781)
t, tr = best(lambda: ode.integrate(spec, seed.state, -4.0, rel_tol=1e-12, abs_tol=1e-16))
out["timings"]["dopri_hm_leg"] = t
out["values"]["dopri_y_end"] = float(tr.y[-1].real)
out["values"]["dopri_steps"] = tr.n_steps

p = ed.EDParams(1.3, 0.05, 0.02)
st = ed.initial_state_for(p, 0.0, 0.02, 0.01)
t, et = best(lambda: ed.integrate_ed(p, st, 5.0))
out["timings"]["dopri_ed"] = t
out["values"]["ed_E_end"] = float(et.E[-1])
print(json.dumps(out))
"""


def run(disable, repeat):
    env = dict(os.environ, P2MU_DISABLE_NUMBA="1" if disable else "0")
    res = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--json", default=None, help="write the comparison to this file")
    args = ap.parse_args(argv)
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    if not fast["numba"]:
        print("numba is not importable; both runs used the fallback")
    print(f"{'kernel':<18}{'numba [s]':>12}{'fallback [s]':>14}{'speed-up':>10}")
    for name in fast["timings"]:
        a, b = fast["timings"][name], slow["timings"][name]
        print(f"{name:<18}{a:>12.4g}{b:>14.4g}{b / a:>10.1f}")
    print("\nresult agreement (relative):")
    worst = 0.0
    for name in fast["values"]:
        a, b = fast["values"][name], slow["values"][name]
        rel = abs(a - b) / max(abs(a), 1e-300)
        worst = max(worst, rel)
        print(f"  {name:<18}{a:>24.17g}{b:>24.17g}  {rel:.2e}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"numba": fast, "fallback": slow}, fh, indent=2)
    return 0 if worst < 1e-9 else 1


if __name__ == "__main__":
    sys.exit(main())
