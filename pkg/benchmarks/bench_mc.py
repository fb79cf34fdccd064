"""Throughput of the compiled shell-index engine against the numpy fallback."""
from __future__ import annotations

import argparse
import time

import numpy as np

from padicwalk import _mc_py
from padicwalk.laws import make_law
from padicwalk.montecarlo import _engine_params

try:
    from padicwalk import _mc_core
except ImportError:
    _mc_core = None


def _time(fn, *args) -> tuple[float, np.ndarray]:
    t0 = time.perf_counter()
    out = fn(*args)
    return time.perf_counter() - t0, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=50)
    ap.add_argument("--event-paths", type=int, default=200_000)
    ap.add_argument("--event-n", type=int, default=10_000)
    args = ap.parse_args()
    laws = [make_law("1d", 2, 1.0, P0=0.5), make_law("iso2d", 2, 1.0), make_law("aniso2d", 2, 1.0, h=0.5)]
    engines = [("numpy", _mc_py)] + ([("compiled", _mc_core)] if _mc_core is not None else [])
    print(f"{'family':8} {'engine':9} {'steps/s':>10} {'event paths/s':>14} identical")
    for law in laws:
        params = _engine_params(law)
        kcap = 128 if law.family == "aniso2d" else 64
        results = {}
        for name, eng in engines:
            dt, a = _time(eng.run_steps_chunk, *params, 1, 0, args.paths, args.steps, kcap)
            de, b = _time(eng.run_chunk, *params, 1, 0, args.event_paths,
                          np.array([1, 10, 100, args.event_n]), kcap)
            results[name] = (a, b)
            same = ""
            if name == "compiled":
                same = str(all(np.array_equal(x, y) for x, y in zip(results["numpy"], results["compiled"])))
            print(f"{law.family:8} {name:9} {args.paths * args.steps / dt:10.3g} {args.event_paths / de:14.3g} {same}")


if __name__ == "__main__":
    main()
