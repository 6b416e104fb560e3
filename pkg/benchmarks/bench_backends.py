"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_backends.py [--repeat N]

The kernel rows call both modules directly; the end-to-end row runs the I1
integral in a subprocess per backend, selected with DEQUAD_PURE_PYTHON.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from dequad import _pykernels
from dequad.expr import compile_program, parse

try:
    from dequad import _kernels
except ImportError:
    sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation`")

I1 = "exp(20*(x-1))*sin(256*x)"
END_TO_END = (
    "import time; from dequad.engine import integrate, Integrand;"
    "f = Integrand.from_expr({expr!r}); integrate(f, (0, 1), tol=1e-10);"
    "t = time.perf_counter()\n"
    "for _ in range({n}): integrate(f, (0, 1), tol=1e-10)\n"
    "print((time.perf_counter() - t) / {n})"
)


def best(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def end_to_end(pure, n=20):
    env = dict(os.environ)
    env.pop("DEQUAD_PURE_PYTHON", None)
    if pure:
        env["DEQUAD_PURE_PYTHON"] = "1"
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(expr=I1, n=n)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    ts = np.linspace(-6, 6, 1000)
    values = rng.normal(size=1000)
    prog = compile_program(parse(I1))
    xs = rng.uniform(0, 1, size=1000)
    cases = [
        ("nodes, 1000 points", lambda k: k.tanh_sinh_nodes(ts)),
        ("compensated sum, 1000 terms", lambda k: k.neumaier_sum(values)),
        ("expression, 1000 points", lambda k: k.run_program(prog.code, prog.consts, xs)),
        ("expression, 1 point", lambda k: k.run_program(prog.code, prog.consts, xs[:1])),
    ]
    print(f"{'kernel':<30}{'compiled':>12}{'fallback':>12}{'speedup':>10}")
    for label, call in cases:
        fast = best(lambda: call(_kernels), args.repeat)
        slow = best(lambda: call(_pykernels), args.repeat)
        print(f"{label:<30}{fast * 1e6:>10.1f}us{slow * 1e6:>10.1f}us{slow / fast:>9.1f}x")
    fast, slow = end_to_end(False), end_to_end(True)
    print(f"{'integrate I1, tol 1e-10':<30}{fast * 1e3:>10.2f}ms{slow * 1e3:>10.2f}ms"
          f"{slow / fast:>9.1f}x")


if __name__ == "__main__":
    main()
