"""Smoke test for the condlab extension module.

Build and stage the module first:
    cargo build --release -p condlab-py
    cp target/release/libcondlab.so python/condlab.so
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import condlab  # noqa: E402


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    # Flat weight: the Dirichlet kernel norm is sqrt(2m + 1).
    for m, v in zip([4, 16, 64], condlab.dirichlet_norms(0.0, [4, 16, 64])):
        assert close(v, math.sqrt(2 * m + 1), 1e-12), (m, v)

    norms = condlab.dirichlet_norms(-0.5, [2**k for k in range(4, 13)])
    fit = condlab.fit_power([(2.0**k, v) for k, v in zip(range(4, 13), norms)])
    assert abs(fit["gamma"] - 0.75) < 0.03, fit

    assert close(condlab.space_norm("lorentz:2,1", [n**-0.5 for n in (1, 2, 3)]), 11 / 6, 1e-14)
    assert condlab.delta_closed_form("lp:1", "lp:inf", 4) == 4.0
    assert all(1.0 <= row["c"] <= 2.0 for row in condlab.fundamental_table("lorentz:4,2", 64))

    e = condlab.System.orthonormal(6)
    assert e.dim == 6 and close(e.norm([3.0, 4.0]), 5.0, 1e-15)
    assert condlab.k_exact(e, 3) == [1.0, 1.0, 1.0]

    d = condlab.System.aa_diamond(0.5, 0.5, 4)
    assert condlab.System.from_json(d.to_json()).dim == 8
    kt = condlab.ktilde_exact(d, 8)
    assert all(a <= b + 1e-15 for a, b in zip(kt, kt[1:]))
    left = condlab.System.trig(-0.5, 4)
    right = condlab.System.trig(0.5, 4)
    bounds = condlab.ccdom_series(left, right, [1, 2, 3, 4])["entries"]
    assert all(kt[b["m"] - 1] >= b["value"] for b in bounds)
    value, subset = condlab.ktilde_heuristic(d, 6, 7)
    assert value <= kt[5] * (1 + 1e-12) and subset

    y = condlab.System.almost_greedy(0.5, 0.5, 8, 8)
    w = condlab.dkk_witness(y, 64)
    assert w["ratio"] >= 1.0
    g = condlab.greedy_ratio(e, [0.3, -2.0, 1.0, 0.5], 2, 1)
    assert g["ratio"] == 1.0 and g["exact"]

    try:
        condlab.System.trig(1.5, 4)
    except ValueError:
        pass
    else:
        raise AssertionError("out-of-range exponent accepted")

    results = condlab.run_acceptance([6])
    assert results[0]["passed"], results
    print("condlab smoke test passed")


if __name__ == "__main__":
    main()
