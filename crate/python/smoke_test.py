"""Smoke test for the compiled bindings.

Build first with `pip install -e crates/python --no-build-isolation`.
"""

import math

import relu_moments as rm


def main():
    assert abs(rm.relu_hermite_coeff(0) - 1 / math.sqrt(2 * math.pi)) < 1e-12
    assert abs(rm.relu_hermite_coeff(1) - 0.5) < 1e-12
    assert rm.hermite_eval(2, 3.0) == 8.0

    net = rm.gen_instance("well_separated", 2, 4, budget=2.0, seed=7, sep=0.8)
    assert net.dim == 4 and len(net) == 2
    x = [0.3, -0.1, 0.7, 0.2]
    direct = sum(m * max(0.0, sum(a * b for a, b in zip(u, x))) for m, u in zip(net.weights, net.directions))
    assert abs(net(x) - direct) < 1e-12

    abs_form = net.to_abs_form(2.0)
    assert abs(abs_form(x) - net(x)) < 1e-12
    assert abs_form.l2_dist(abs_form) == 0.0

    exact = abs_form.moment_tensor(2)
    est = rm.estimate_moments(net, 2, 200_000, seed=1)
    err = (est - exact).frobenius_norm()
    assert err < 0.05, err
    assert rm.SymTensor.from_text(est.to_text()).values() == est.values()

    ell, value, bound, holds = rm.powersum_witness([0.9, 0.3], [1.0, -1.0], 1, 0.5, 0.01, 0.1, 0.5, 1.0)
    assert holds and ell == 2 and abs(value - 0.72) < 1e-12

    e = rm.elementary_symmetric([1.0, 2.0, 3.0])
    assert e == [1.0, 6.0, 11.0, 6.0]

    tr = rm.play_clumping([0.0, 3.1, 2.0, 2.0, 3.1, 1.0, 1.0, 3.1, 2.0, 2.0, 3.1, 0.0])
    assert tr["terminal"]["w"] == [0.0]
    assert all(step["legal"] for step in tr["steps"])

    rep = rm.run_suite("hermite", "ci", 3)
    assert rep["passed"] and rep["criterion"] == 1

    report = rm.run_experiment('seed = 3\nsuites = ["vieta_vandermonde"]\n')
    assert report["schema_version"] == rm.SCHEMA_VERSION and report["passed"]
    assert report["constants"] == rm.frozen_constants()

    try:
        rm.run_experiment("seed = 3\nsuites = [\"nope\"]\n")
    except ValueError as exc:
        assert "unknown suite" in str(exc)
    else:
        raise AssertionError("bad suite accepted")

    print("smoke test ok")


if __name__ == "__main__":
    main()
