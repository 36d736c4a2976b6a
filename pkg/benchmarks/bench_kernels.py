"""Time one SGD epoch on paper-scale data with each kernel backend.

    python benchmarks/bench_kernels.py [--epochs N] [--hidden W[,W...]]
"""
import argparse
import time

import numpy as np

from motorfault import _backend, faultgen, neuralnet
from motorfault.neuralnet import NetworkConfig, init_weights


def bench(kernels, params, sizes, X, Y, order, epochs):
    p = params.copy()
    start = time.perf_counter()
    for _ in range(epochs):
        loss = kernels.sgd_epoch(p, sizes, X, Y, order, 0.1)
    return (time.perf_counter() - start) / epochs, loss, p


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--epochs", type=int, default=20)
    ap.add_argument("--hidden", default="10")
    args = ap.parse_args()

    cfg = NetworkConfig(hidden_layers=tuple(int(w) for w in args.hidden.split(",")), seed=1)
    train, _ = faultgen.generate_paper_scale(1)
    X, Y = train.arrays()
    params = neuralnet._pack(init_weights(cfg))
    sizes = np.asarray(cfg.sizes, dtype=np.intp)
    order = np.arange(len(X), dtype=np.intp)

    print(f"network {'-'.join(map(str, cfg.sizes))}, {len(X)} samples/epoch, {args.epochs} epochs per backend")
    results = {}
    for name in ("python", "cython"):
        try:
            kern = _backend.get(name)
        except ImportError:
            print(f"{name:>7}: not built")
            continue
        epochs = max(1, args.epochs // 10) if name == "python" else args.epochs
        per_epoch, loss, p = bench(kern, params, sizes, X, Y, order, epochs)
        results[name] = (per_epoch, p, epochs)
        print(f"{name:>7}: {per_epoch * 1e3:9.3f} ms/epoch  ({per_epoch / len(X) * 1e6:7.2f} us/sample)")
    if len(results) == 2:
        py, cy = results["python"], results["cython"]
        print(f"speed-up: {py[0] / cy[0]:.1f}x")
        n = py[2]
        _, _, p_cy = bench(_backend.get("cython"), params, sizes, X, Y, order, n)
        print(f"identical parameters after {n} epoch(s): {np.array_equal(py[1], p_cy)}")


if __name__ == "__main__":
    main()
