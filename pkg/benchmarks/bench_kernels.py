"""Compare the compiled and numpy kernel backends on training-sized inputs.

    python3 benchmarks/bench_kernels.py [--p 53] [--width 256] [--repeat 20]

Also times a whole training epoch with each backend. Results are printed as a
table; outputs of the two backends are checked for bit equality first.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from groklab.kernels import available_backends, load_backend
from groklab.network import ActivationSpec


def _inputs(p, width, seed=0):
    rng = np.random.default_rng(seed)
    i, j = np.divmod(np.arange(p * p), p)
    keep = rng.permutation(p * p)[: p * p // 2]
    wt = np.ascontiguousarray(rng.standard_normal((2 * p, width)))
    gz = rng.standard_normal((keep.size, width))
    return wt, i[keep].astype(np.int64), j[keep].astype(np.int64), gz


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat)) * 1e3


EPOCH_SNIPPET = """
import time
from groklab.config import run_config_from_dict
from groklab.experiment import run_training
cfg = run_config_from_dict({{"format_version": 1, "dataset": {{"modulus": {p}, "train_frac": 0.5}},
                            "model": {{"hidden_dims": [{width}]}}, "epochs": {epochs},
                            "log_every": {epochs}}})
t = time.perf_counter(); run_training(cfg); print((time.perf_counter() - t) / {epochs} * 1e3)
"""


def epoch_time(backend, p, width, epochs):
    env = dict(os.environ, GROKLAB_PURE_PYTHON="1" if backend == "python" else "0")
    code = EPOCH_SNIPPET.format(p=p, width=width, epochs=epochs)
    out = subprocess.run([sys.executable, "-c", code], env=env, check=True,
                         capture_output=True, text=True)
    return float(out.stdout.strip())


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--p", type=int, default=53)
    ap.add_argument("--width", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--epochs", type=int, default=200, help="epochs for the end-to-end timing")
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the numpy fallback is available")
    mods = {name: load_backend(name) for name in backends}
    wt, i, j, gz = _inputs(args.p, args.width)
    act = ActivationSpec.polynomial(0.0, 1.0)

    ref = None
    for name, mod in mods.items():
        out = (mod.onehot_hidden(wt, i, j, args.p, act.code, act.b, act.a),
               mod.onehot_scatter(gz, i, j, args.p))
        flat = [out[0][0], out[0][1], out[1]]
        if ref is None:
            ref = flat
        elif not all(np.array_equal(x, y) for x, y in zip(ref, flat)):
            raise SystemExit(f"backend {name} disagrees with {backends[0]}")

    rows = []
    for name, mod in mods.items():
        gather = _best(lambda: mod.onehot_hidden(wt, i, j, args.p, act.code, act.b, act.a),
                       args.repeat)
        scatter = _best(lambda: mod.onehot_scatter(gz, i, j, args.p), args.repeat)
        epoch = epoch_time(name, args.p, args.width, args.epochs)
        rows.append((name, gather, scatter, epoch))

    print(f"P={args.p}, width={args.width}, {i.size} samples; best of {args.repeat} (ms)")
    print(f"{'backend':<8} {'gather':>9} {'scatter':>9} {'epoch':>9}")
    for name, g, s, e in rows:
        print(f"{name:<8} {g:9.3f} {s:9.3f} {e:9.3f}")
    if len(rows) == 2:
        (_, g0, s0, e0), (_, g1, s1, e1) = rows
        print(f"{'speedup':<8} {g1 / g0:8.1f}x {s1 / s0:8.1f}x {e1 / e0:8.1f}x")


if __name__ == "__main__":
    main()
