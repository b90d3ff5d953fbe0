"""Compare the compiled and numpy Crank-Nicolson kernels.

Usage::

    python benchmarks/bench_kernels.py [--emitters 10] [--steps 20000] [--repeat 3]

Times the forward sweep, the adjoint sweep and the monodromy chain for both
backends on the same inputs and reports the speed-up and the largest
difference between their outputs relative to the output scale.
"""

import argparse
import timeit

import numpy as np

from transduce_opt.kernels import available_backends, load_backend


def make_inputs(n_emitters, n_steps, n_phases, seed=0):
    rng = np.random.default_rng(seed)
    d = 2 * n_emitters
    x = rng.normal(size=(n_phases, d, d)) + 1j * rng.normal(size=(n_phases, d, d))
    # Hermitian part plus decay keeps every step contractive, as in the solver
    h = 0.5 * (x + np.conj(np.swapaxes(x, 1, 2))) - 0.5j * np.diag(rng.uniform(0.5, 2.0, d))
    pinv = np.ascontiguousarray(np.linalg.inv(np.eye(d) + 0.005j * h))
    pinv_src = np.ascontiguousarray(pinv @ np.r_[np.ones(n_emitters), np.zeros(n_emitters)].astype(complex))
    coef = np.ascontiguousarray(rng.normal(size=n_steps) + 1j * rng.normal(size=n_steps))
    g = np.ascontiguousarray(rng.normal(size=(n_steps + 1, d)) + 1j * rng.normal(size=(n_steps + 1, d)))
    return pinv, pinv_src, coef, g


def bench(backend, inputs, n_steps, repeat):
    k = load_backend(backend)
    pinv, pinv_src, coef, g = inputs
    psi = k.cn_forward(pinv, pinv_src, coef, n_steps)
    eye = np.eye(pinv.shape[1], dtype=complex)
    calls = {
        "forward": lambda: k.cn_forward(pinv, pinv_src, coef, n_steps),
        "adjoint": lambda: k.cn_adjoint(pinv, psi, g, 1e-3),
        "chain": lambda: k.cn_chain(pinv, eye.copy()),
    }
    times = {name: min(timeit.repeat(fn, number=1, repeat=repeat)) for name, fn in calls.items()}
    outputs = {name: fn() for name, fn in calls.items()}
    return times, outputs


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--emitters", type=int, default=10)
    p.add_argument("--steps", type=int, default=20000)
    p.add_argument("--phases", type=int, default=256)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)

    inputs = make_inputs(args.emitters, args.steps, args.phases)
    backends = available_backends()
    results = {b: bench(b, inputs, args.steps, args.repeat) for b in backends}
    print(f"N={args.emitters} (dimension {2 * args.emitters}), {args.steps} steps, {args.phases} lattice phases")
    print(f"{'kernel':10s}" + "".join(f"{b:>12s}" for b in backends) + ("   speed-up   rel. diff" if len(backends) == 2 else ""))
    for name in ("forward", "adjoint", "chain"):
        line = f"{name:10s}" + "".join(f"{results[b][0][name] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            py, cy = results["python"], results["cython"]
            a, b = np.asarray(py[1][name]), np.asarray(cy[1][name])
            diff = float(np.max(np.abs(a - b)) / np.max(np.abs(a)))
            line += f"   {py[0][name] / cy[0][name]:7.1f}x   {diff:.2e}"
        print(line)
    if "cython" not in backends:
        print("compiled kernels are not built; run `pip install -e .` with Cython available")


if __name__ == "__main__":
    main()
