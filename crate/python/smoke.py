"""Smoke test for the matern_sg extension module.

Build and install first:  maturin develop -m crates/python/Cargo.toml
"""

import math

import matern_sg as sg


def main():
    spec = sg.GridSpec("DASG", ["3/2", "5/2"], level=5, p=[1, 0], omega=[2.0, 2.0])
    print(spec)
    nodes = spec.nodes()
    assert len(nodes) == spec.node_count() == len(spec.exact_nodes())

    def f(x):
        return math.sin(3 * x[0]) * math.exp(-x[1] ** 2)

    s = sg.SparseInterpolant.fit(spec, f)
    worst = max(abs(s(x) - f(x)) for x in nodes)
    assert worst < 1e-9, worst

    back = sg.SparseInterpolant.from_text(s.to_text())
    assert back.weights == s.weights

    small = sg.GridSpec("ISG", [1.5, 1.5], level=3)
    dense = sg.DenseInterpolant.fit(small, f)
    sparse = sg.SparseInterpolant.fit(small, f)
    for x in ([0.1, -0.3], [0.7, 0.2]):
        assert abs(dense(x) - sparse(x)) < 1e-10

    assert abs(sg.matern("1/2", 0.0, 1.0) - math.exp(-1.0)) < 1e-15
    assert sg.epsilon_aniso([1.0], [1.0], 0.0) == 0.0
    assert sg.dasg_bound(["3/2"], [0.5], [0], 4, omega=[1.0]) == 0.0625

    try:
        sg.dasg_bound(["1/2"], [0.5], [0], 4)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("expected ValueError")

    config = "d = 1\nnu = 3/2\nn_cap = 100\n"
    records, termination = sg.sweep(config, "ISG")
    assert termination == "MAX_N" and records
    for level, n, err in records:
        print(f"L={level} N={n} err={err:.3e}")
    print("ok")


if __name__ == "__main__":
    main()
