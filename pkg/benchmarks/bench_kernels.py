"""Compare the compiled kernels against the pure-numpy fallback.

Run twice to see both sides:

    python3 benchmarks/bench_kernels.py
    STLFUNNEL_PURE_PYTHON=1 python3 benchmarks/bench_kernels.py

or pass --both to spawn the fallback run as a subprocess and print a
side-by-side table.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def timeit(fn, min_time=0.5):
    fn()  # warm up
    n, elapsed = 0, 0.0
    while elapsed < min_time:
        t0 = time.perf_counter()
        fn()
        elapsed += time.perf_counter() - t0
        n += 1
    return elapsed / n


def bench(repeats=200):
    from stlfunnel import backend
    from stlfunnel.dqn import TrainConfig, train
    from stlfunnel.envs import EnvConfig, make_env
    from stlfunnel.funnel import build_schedule
    from stlfunnel.mlp import MLP
    from stlfunnel.reward import MODE_FUNNEL, RewardSpec
    from stlfunnel.robustness import RhoBounds
    from stlfunnel.stl.formula import temporal_conjuncts
    from stlfunnel.stl.parser import parse_formula

    results = {"backend": "compiled" if backend.COMPILED else "pure-python"}

    net = MLP([4, 128, 128, 61], rng=np.random.default_rng(0))
    x = np.ascontiguousarray(np.random.default_rng(1).normal(size=4))

    def fwd():
        for _ in range(repeats):
            backend.forward_single(net.weights, net.biases, x)

    results["forward_single_us"] = timeit(fwd) / repeats * 1e6

    rng = np.random.default_rng(2)
    p = rng.normal(size=128 * 128)
    g = np.ascontiguousarray(rng.normal(size=p.size))
    m, v = np.zeros_like(p), np.zeros_like(p)

    def adam():
        for i in range(repeats):
            backend.adam_step(p, g, m, v, i + 1, 1e-3, 0.9, 0.999, 1e-8)

    results["adam_step_us"] = timeit(adam) / repeats * 1e6

    env = make_env(EnvConfig(kind="pendulum", tau=0.01, horizon=200))
    phi = parse_formula("G[100,200](abs(theta) <= 0.05 & abs(omega) <= 0.05)",
                        ["theta", "omega"])
    sched = build_schedule(phi, [RhoBounds(0.05 - np.pi, 0.05)], 200,
                           gamma_inf_overrides={0: 0.01})
    spec = RewardSpec(schedule=sched,
                      psis=tuple(c.body for c in temporal_conjuncts(phi)),
                      mode=MODE_FUNNEL)
    cfg = TrainConfig(total_steps=2000, batch_size=64, target_update_freq=500,
                      eval_freq=10 ** 9, hidden_sizes=(128, 128), seed=0)

    t0 = time.perf_counter()
    train(env, spec, None, cfg)
    results["train_steps_per_s"] = cfg.total_steps / (time.perf_counter() - t0)
    return results


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--both", action="store_true",
                        help="also run the pure-python fallback in a subprocess")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    args = parser.parse_args()

    rows = [bench()]
    if args.both:
        env = dict(os.environ, STLFUNNEL_PURE_PYTHON="1")
        out = subprocess.run([sys.executable, __file__, "--json"], env=env,
                             capture_output=True, text=True, check=True)
        rows.append(json.loads(out.stdout))

    if args.json:
        print(json.dumps(rows[0]))
        return

    keys = ["forward_single_us", "adam_step_us", "train_steps_per_s"]
    header = f"{'metric':<22}" + "".join(f"{r['backend']:>16}" for r in rows)
    print(header)
    print("-" * len(header))
    for k in keys:
        line = f"{k:<22}" + "".join(f"{r[k]:>16.2f}" for r in rows)
        print(line)
    if len(rows) == 2:
        print("-" * len(header))
        speedup = rows[1]["forward_single_us"] / rows[0]["forward_single_us"]
        print(f"forward_single speedup: {speedup:.2f}x")
        speedup = rows[1]["adam_step_us"] / rows[0]["adam_step_us"]
        print(f"adam_step speedup:      {speedup:.2f}x")
        speedup = rows[0]["train_steps_per_s"] / rows[1]["train_steps_per_s"]
        print(f"train throughput gain:  {speedup:.2f}x")


if __name__ == "__main__":
    main()
