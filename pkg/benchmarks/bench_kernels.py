"""Compare the compiled and numpy kernel backends.

Times each kernel on the same inputs, checks that both backends agree, and
times a short end-to-end run with each backend in a subprocess.

    python3 benchmarks/bench_kernels.py --mesh 80 --repeat 20
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from surfactant_richards import _pykernels
from surfactant_richards.mesh import build_unit_square_mesh

try:
    from surfactant_richards import _ckernels
except ImportError:
    _ckernels = None

P = dict(theta_r=0.0026, theta_s=0.42, n=2.9, alpha=0.95, K_s=0.12, a=0.044, b=0.4745,
         log_base=10.0)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def kernel_cases(m, rng):
    mesh = build_unit_square_mesh(m)
    _, indices, pos = mesh.csr_pattern
    nnz = len(indices)
    wq = rng.uniform(0.1, 1.0, (mesh.n_triangles, 3))
    vec = rng.normal(size=(mesh.n_triangles, 2))
    psi = rng.uniform(-3.0, 0.5, 3 * mesh.n_triangles)
    c = rng.uniform(0.0, 4.0, 3 * mesh.n_triangles)
    return {
        "vg_fields": lambda k: k.vg_fields(psi, c, **P)[0][:5],
        "mass_data": lambda k: k.mass_data(mesh.areas, wq, pos, nnz),
        "stiffness_data": lambda k: k.stiffness_data(mesh.areas, mesh.gradients, wq, pos, nnz),
        "advection_data": lambda k: k.advection_data(mesh.areas, mesh.gradients, vec, wq, pos, nnz),
        "flux_load": lambda k: k.flux_load(mesh.areas, mesh.gradients, wq, np.array([0.0, 1.0]),
                                           mesh.triangles, mesh.n_nodes),
        "source_load": lambda k: k.source_load(mesh.areas, wq, mesh.triangles, mesh.n_nodes),
    }


def max_diff(a, b):
    if isinstance(a, (tuple, list)):
        return max(max_diff(x, y) for x, y in zip(a, b))
    return float(np.max(np.abs(np.asarray(a, float) - np.asarray(b, float))))


RUN_SNIPPET = """
import time
from surfactant_richards import BACKEND
from surfactant_richards.problems import get_problem
from surfactant_richards.schemes import SchemeConfig, run_simulation
cfg = SchemeConfig(linearization="picard_two_derivative", condition_numbers="none")
t0 = time.perf_counter()
r = run_simulation(get_problem("1a"), cfg, {m})
print(BACKEND, time.perf_counter() - t0, r.total_iterations)
"""


def end_to_end(m, pure):
    env = dict(os.environ)
    if pure:
        env["SURFACTANT_RICHARDS_PURE_PYTHON"] = "1"
    else:
        env.pop("SURFACTANT_RICHARDS_PURE_PYTHON", None)
    out = subprocess.run([sys.executable, "-c", RUN_SNIPPET.format(m=m)], env=env,
                         capture_output=True, text=True, check=True)
    backend, seconds, iters = out.stdout.split()
    return backend, float(seconds), int(iters)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--mesh", type=int, default=80)
    ap.add_argument("--repeat", type=int, default=10)
    ap.add_argument("--run-mesh", type=int, default=20, help="mesh of the end-to-end run (0 skips)")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    rng = np.random.default_rng(0)
    print(f"kernels on m = {args.mesh} ({2 * args.mesh**2} triangles), best of {args.repeat}")
    print(f"{'kernel':16s} {'cython [ms]':>12s} {'numpy [ms]':>12s} {'speedup':>8s} {'max diff':>10s}")
    for name, fn in kernel_cases(args.mesh, rng).items():
        tc, oc = best_of(lambda: fn(_ckernels), args.repeat)
        tp, op = best_of(lambda: fn(_pykernels), args.repeat)
        print(f"{name:16s} {1e3 * tc:12.3f} {1e3 * tp:12.3f} {tp / tc:8.2f} {max_diff(oc, op):10.2e}")
    if args.run_mesh:
        print(f"\nend-to-end run, problem 1a, m = {args.run_mesh}")
        for pure in (False, True):
            backend, seconds, iters = end_to_end(args.run_mesh, pure)
            print(f"{backend:8s} {seconds:8.3f} s  ({iters} iterations)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
