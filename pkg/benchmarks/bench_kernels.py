"""Time the numba and numpy flavours of each hot kernel side by side.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The numba column is empty when numba is not importable.  Compilation is
done once before timing.
"""

import argparse
import time

import numpy as np

from raysearch import _kernels
from raysearch.qsl import random_smooth


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    rng = np.random.default_rng(0)
    for n in (10, 16, 20):
        x = rng.standard_normal(2 ** n) + 1j * rng.standard_normal(2 ** n)
        yield f"fwht n={n}", "fwht", (x,)

    for n in (10, 16):
        dim = 2 ** n
        psi = np.zeros(dim, dtype=np.complex128)
        psi[0] = 1.0
        e1 = np.zeros(dim, dtype=np.complex128)
        e1[1:] = 1.0 / np.sqrt(dim - 1)
        c, s = 1 / np.sqrt(dim), np.sqrt(1 - 1 / dim)
        f = np.array([c, s], dtype=np.complex128)
        block = -(np.diag([-1.0, 1.0]) @ (np.eye(2) - 2 * np.outer(f, f.conj())))
        m = np.ascontiguousarray(block + np.eye(2), dtype=np.complex128)
        yield (f"plane_iterate n={n} x200", "plane_iterate",
               (psi, psi, e1, complex(-1.0), m, complex(c), float(s), 200, 2.0))

    for dim, steps in ((2, 4096), (4, 4096), (16, 1024)):
        h = random_smooth(1, dim)
        hs = np.ascontiguousarray(h.matrices(np.linspace(0, 5, 2 * steps + 1)))
        psi = np.zeros(dim, dtype=np.complex128)
        psi[0] = 1.0
        yield f"rk4 dim={dim} steps={steps}", "rk4_tabulated", (psi, hs, 5 / steps, 1e-12, 1e-6)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    print(f"{'kernel':<32}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for label, name, call_args in cases():
        np_fn = getattr(_kernels, f"{name}_numpy")
        t_np = best_of(lambda: np_fn(*call_args), args.repeat)
        if _kernels.HAVE_NUMBA:
            nb_fn = getattr(_kernels, f"{name}_numba")
            nb_fn(*call_args)  # compile
            t_nb = best_of(lambda: nb_fn(*call_args), args.repeat)
            print(f"{label:<32}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")
        else:
            print(f"{label:<32}{1e3 * t_np:>12.3f}{'':>12}{'':>10}")


if __name__ == "__main__":
    main()
