"""Smoke test for the pybhtest extension module.

Build and install first:

    maturin develop --release -m crates/python/Cargo.toml
"""

import json
import math
import random

import pybhtest


def main():
    assert abs(pybhtest.sn_pdf(0.0, 0.0, 1.0, 0.0) - 1 / math.sqrt(2 * math.pi)) < 1e-12
    assert pybhtest.sn_mode(5.0, 2.0, 0.0) == 5.0

    rng = random.Random(0)
    data = [rng.gauss(2.0, 0.5) for _ in range(500)]
    fit = pybhtest.fit_mle(data)
    xi, omega, beta = pybhtest.fit_mom(data)
    assert fit.nll <= pybhtest.sn_nll(data, xi, omega, beta) + 1e-9
    assert abs(fit.p_value(fit.mode) - 1.0) < 1e-12

    tracker = pybhtest.ScoreTracker(3)
    for action, probs in [(1, [0.3, 0.1, 0.6]), (0, [0.5, 0.2, 0.3]), (2, [0.1, 0.2, 0.7])]:
        tracker.update(action, probs)
    z1, z2, z3 = tracker.values()
    assert tracker.t == 3 and 0.0 <= z1 <= 1.0 and 0.0 <= z3 <= 1.0

    engine = pybhtest.Engine(4, scores="z1", n_replicates=30, seed=1)
    probs = [0.1, 0.2, 0.3, 0.4]
    for t in range(200):
        out = engine.step(rng.choices(range(4), probs)[0], probs)
    assert out["t"] == 200 and len(engine.replicate_statistics()) == 30

    config = json.dumps({"actions": 5, "processes": 4, "steps": 200, "score_ids": ["z1"]})
    report = pybhtest.run_experiment(config)
    assert 0.0 <= report["acc_null"] <= 1.0 and 0.0 <= report["acc_alt"] <= 1.0
    trace = pybhtest.simulate(config, process=3)
    assert len(trace) == 200 and trace[0][7]

    try:
        pybhtest.Engine(4, alpha=0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("alpha = 0 accepted")

    print("smoke test passed:", report["acc_null"], report["acc_alt"])


if __name__ == "__main__":
    main()
