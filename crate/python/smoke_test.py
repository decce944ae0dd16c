"""Smoke test for the `parabolic` extension module.

Build and install first, e.g.
    maturin build --release -m crates/py/Cargo.toml && pip install target/wheels/parabolic-*.whl
"""

import json
import math

import parabolic


def main():
    # x' = -2x - e^{it} has the bounded solution e^{it} / (-2 - i)
    t, x = parabolic.solve_green([[-2]], [(1.0, [1])])
    assert len(t) == 4096 and len(x) == 1
    sup = max(abs(v) for v in x[0])
    assert abs(sup - 1 / math.sqrt(5)) < 1e-10, sup
    j = len(t) // 2
    want = complex(math.cos(t[j]), math.sin(t[j])) / complex(-2, -1)
    assert abs(x[0][j] - want) < 1e-10

    a = [[-1, 0.5], [0, 1.5]]
    rhs = [(0.5, [1, 1j]), (-1.0, [0.25, 0])]
    _, xg = parabolic.solve_green(a, rhs)
    _, xb, m, ratio = parabolic.solve_band(a, rhs)
    diff = max(abs(p - q) for cg, cb in zip(xg, xb) for p, q in zip(cg, cb))
    assert diff < 1e-6, diff
    kernel, inverse = parabolic.certificates(m)
    assert ratio <= inverse

    assert abs(parabolic.resolvent_bound([[-1]]) - 1.0) < 1e-6
    kernel, inverse = parabolic.certificates(1.0)
    assert abs(kernel - 2 / math.pi * math.sqrt(10)) < 1e-12
    assert abs(parabolic.as_norm([(1.0, [1])], 1) - 5.0) < 1e-9

    report = json.loads(parabolic.run("check", json.dumps({"A": [[-1, 0], [0, 1]]})))
    assert report["schema_version"] == 1
    assert abs(report["results"]["hyperbolic_margin"] - (1 - math.exp(-1))) < 1e-12

    try:
        parabolic.solve_green([[0]], [(1.0, [1])])
    except parabolic.ParabolicError as e:
        assert str(e).startswith("NotHyperbolicError"), e
    else:
        raise AssertionError("A = 0 must be rejected")

    print("smoke test passed")


if __name__ == "__main__":
    main()
