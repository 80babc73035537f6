"""Smoke test for the qdp extension module.

Build and install first:
    cd crates/py && maturin build --release -o dist && pip install dist/qdp-*.whl
"""

import math

import qdp


def black_scholes_call(s0, k, r, sigma, t):
    d1 = (math.log(s0 / k) + (r + 0.5 * sigma**2) * t) / (sigma * math.sqrt(t))
    d2 = d1 - sigma * math.sqrt(t)
    cdf = lambda x: 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))
    return s0 * cdf(d1) - k * math.exp(-r * t) * cdf(d2)


def main():
    fmt = qdp.FixedPointFormat(34, 2)
    add = qdp.add_resources(fmt)
    print("add", add)
    assert add.t_count == 7 * add.toffoli_count

    n_calls = qdp.oracle_call_bound(1e-3, 0.32)
    print("oracle_call_bound(1e-3, 0.32) =", n_calls)
    assert 5.0e3 <= n_calls <= 6.0e3

    est = qdp.iqae(0.3, 1e-3, 0.05, seed=1)
    lo, hi = est["interval"]
    assert lo <= 0.3 <= hi and hi - lo <= 2e-3 + 1e-12

    model = {"r": 0.02, "sigmas": [0.2], "rho": [[1.0]], "dt": 0.25, "d": 1, "T": 4, "s0": [1.0]}
    call = {"type": "european_call", "strike": 1.0, "maturity": 1.0}
    mc = qdp.mc_price(model, call, paths=100_000, seed=3)
    bs = black_scholes_call(1.0, 1.0, 0.02, 0.2, 1.0)
    print(f"european call: mc {mc['estimate']:.5f} +- {mc['stderr']:.5f}, closed form {bs:.5f}")
    assert abs(mc["estimate"] - bs) <= 4 * mc["stderr"]

    bench = qdp.benchmark_contracts()
    for name, case in bench.items():
        r = qdp.estimate_resources("reparam", case["model"], case["contract"])
        print(f"{name}: T-depth {r['total_t_depth']:.3g}, qubits {r['logical_qubits']}")
        assert r["feasible"]

    riemann = qdp.estimate_resources("riemann", bench["autocallable"]["model"], bench["autocallable"]["contract"])
    assert not riemann["feasible"]

    ansatz = qdp.Ansatz(2, 1, [0.3, 0.1, -0.2, 0.4])
    amps = ansatz.amplitudes()
    assert abs(sum(a * a for a in amps) - 1.0) < 1e-12

    print("ok")


if __name__ == "__main__":
    main()
