"""Smoke test for the basisc Python bindings.

Build and install first:  pip install -e crates/py --no-build-isolation
Then run:                 python3 python/smoke_test.py
"""

import cmath
import json
import math

import basisc


def close(a, b, tol=1e-9):
    return abs(a - b) < tol


def main():
    assert "bv" in basisc.corpus()

    bv = basisc.Program(basisc.corpus_source("bv"), dims={"N": 3}, args={"secret": "110"})
    assert bv.run(shots=64, seed=1) == {"110": 64}, bv.run(shots=64, seed=1)
    doc = json.loads(bv.run_json(shots=8, seed=2))
    assert doc == {"shots": 8, "counts": {"110": 8}, "seed": 2}

    ghz = basisc.Program(basisc.corpus_source("ghz"))
    assert set(ghz.run(shots=500, seed=3)) == {"000", "111"}

    bell = basisc.Program("#@ entry k\nqpu k() -> qubit[2]: '+0' | '1' & std.flip")
    amps = bell.statevector()
    h = 1 / math.sqrt(2)
    assert close(amps[0], h) and close(amps[3], h) and close(amps[1], 0) and close(amps[2], 0)

    x = basisc.lower("std >> {'1','0'}")
    assert close(x[0][1], 1) and close(x[1][0], 1) and close(x[0][0], 0)
    t = 0.4
    rz = basisc.lower(f"{{'0','1'}} >> {{phase({-t / 2})*'0', phase({t / 2})*'1'}}")
    assert close(rz[0][0], cmath.exp(-0.5j * t)) and close(rz[1][1], cmath.exp(0.5j * t))

    src = basisc.corpus_source("grover")
    assert basisc.eval_classical(src, "all_ones", "111") == "1"
    assert basisc.eval_classical(src, "all_ones", "101") == "0"

    assert basisc.driver("shors", seed=5)["answer"] in {"3", "5"}
    assert basisc.driver("dj", args={"f": "balanced"})["answer"] == "balanced"
    simon = basisc.driver("simon", seed=1)
    assert simon["answer"] == "101" and simon["invocations"] <= 25

    assert basisc.bin_frac("0110") == (3, 8)
    assert basisc.convergents(3, 8) == [(0, 1), (1, 2), (1, 3), (3, 8)]
    assert basisc.gf2_nullspace(["111", "010"]) == "101"
    assert basisc.grover_iterations(3, 1) == 2

    try:
        basisc.check("#@ entry k\nqpu k() -> bit: '0' | {'0','+'}.measure")
    except basisc.BasiscTypeError as e:
        assert e.code == "MixedEigenbasis"
    else:
        raise AssertionError("mixed basis accepted")
    try:
        basisc.gf2_nullspace(["110"])
    except basisc.BasiscRuntimeError as e:
        assert e.code == "NeedMoreRows"
    else:
        raise AssertionError("underdetermined system solved")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
