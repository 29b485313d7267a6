#!/usr/bin/env python3
"""Smoke test for the mvsbm_py extension module.

Builds nothing itself: run `cargo build -p mvsbm-py --release` first.
The compiled cdylib is linked into an importable location, imported,
and exercised end to end on small instances.
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def import_module():
    candidates = [
        REPO / "target" / "release" / "libmvsbm_py.so",
        REPO / "target" / "debug" / "libmvsbm_py.so",
        REPO / "target" / "release" / "libmvsbm_py.dylib",
        REPO / "target" / "debug" / "libmvsbm_py.dylib",
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit("build the extension first: cargo build -p mvsbm-py --release")
    stage = Path(tempfile.mkdtemp(prefix="mvsbm_py_"))
    shutil.copy2(built, stage / "mvsbm_py.so")
    sys.path.insert(0, str(stage))
    import mvsbm_py

    return mvsbm_py


def approx(a, b, tol=1e-12):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    m = import_module()

    # Divergence values on the swapped-Bernoulli example.
    p = m.Distribution([0.2, 0.8], 1)
    q = m.Distribution([0.8, 0.2], 1)
    i_pq = m.renyi_half(p, q)
    approx(i_pq, -2.0 * math.log(0.8))
    approx(m.chernoff_t(p, q, 0.5), i_pq)
    assert m.chernoff_t(p, q, 0.25) <= i_pq + 1e-12
    approx(m.kl(m.Distribution([0.5, 0.5], 1), p), 0.22314355131420976)

    p_tilt, q_tilt = m.geometric_tilt(p, q)
    approx(p_tilt.mass[0], 0.5)
    approx(q_tilt.mass[1], 0.5)

    # Model constructors and the threshold report.
    params = m.Params.bernoulli(0.8, 0.2, 20)
    report = m.threshold_report(params)
    approx(report["renyi_half"], i_pq)
    approx(report["threshold_stat"], 20 * i_pq / math.log(20), 1e-10)
    approx(report["rho"], 4.0)
    approx(report["separation"], 0.5625)
    approx(report["ratio_eq51"], 1.0, 1e-10)

    json_params = m.Params.from_json(
        json.dumps({"n": 20, "D": 1, "kind": "bernoulli", "p1": 0.8, "q1": 0.2})
    )
    approx(m.renyi_half(json_params.within, json_params.across), i_pq)

    # Seeded sampling is deterministic and balanced.
    truth = m.sample_labeling(12, 7, 0)
    assert truth == m.sample_labeling(12, 7, 0)
    assert sum(truth) == 0

    # Noiseless round trip: generate, estimate, recover exactly.
    noiseless = m.Params.identical_views(1.0, 0.0, 2, 12)
    tensor = m.sample_tensor(noiseless, truth, 7, 0)
    assert tensor.n == 12 and tensor.num_views == 2
    blob = tensor.to_bytes(7, 0)
    back, master, trial = m.Tensor.from_bytes(blob)
    assert (master, trial) == (7, 0)
    assert back.pair_masks == tensor.pair_masks

    result = m.ml_exact(noiseless, tensor)
    mis, exact = m.recovery(result["labeling"], truth)
    assert exact and mis == 0
    heur = m.ml_heuristic(noiseless, tensor, 2)
    assert heur["score"] <= result["score"] + 1e-9

    # Union bound on the reference instance.
    bound = m.union_bound_report(params)
    approx(bound["union_bound"], 0.03385558129892984, 1e-10)

    # Synthesis hits the requested threshold statistic.
    point = m.synthesize_point(20, 1, 4.0, "bernoulli", 0.01)
    tau = 20 * m.renyi_half(point.within, point.across) / math.log(20)
    approx(tau, 4.0, 1e-6)

    # A small sweep through the JSON config interface.
    config = {
        "points": [
            {"n": 10, "D": 1, "kind": "bernoulli", "p1": 0.9, "q1": 0.05},
            {"n": 10, "D": 1, "kind": "bernoulli", "p1": 0.3, "q1": 0.3},
        ],
        "trials_per_point": 40,
        "method": "exact",
        "master_seed": 11,
    }
    csv_a = m.run_sweep_csv(json.dumps(config), 1)
    csv_b = m.run_sweep_csv(json.dumps(config), 4)
    assert csv_a == csv_b, "sweep must not depend on the worker count"
    header, strong, flat = csv_a.strip().split("\n")
    assert header.startswith("point,tau,trials,")
    assert float(strong.split(",")[3]) >= float(flat.split(",")[3])

    # Error propagation surfaces the library codes.
    try:
        m.Distribution([0.5, 0.6], 1)
    except ValueError as err:
        assert "NotNormalized" in str(err)
    else:
        raise AssertionError("invalid distribution must raise")

    print("smoke test OK")


if __name__ == "__main__":
    main()
