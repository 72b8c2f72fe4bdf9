"""Smoke test for the symqkd extension module.

Build first, e.g. `maturin develop -m crates/python/Cargo.toml`, then run
`python python/smoke_test.py`.
"""

import math

import symqkd


def h2(q):
    return -q * math.log2(q) - (1 - q) * math.log2(1 - q)


def close(a, b, tol):
    assert abs(a - b) < tol, (a, b)


def main():
    opt = symqkd.scheme_rate("2", 2, 0.1)
    close(opt.rate, 1 - 2 * h2(0.1), 1e-9)
    print("bb84 rate at Q=0.1:", opt)

    close(symqkd.threshold("2", 2), 0.110028, 1e-6)
    close(symqkd.threshold("d+1", 2), 0.126193, 1e-6)

    rows = symqkd.sweep("d+1", 5, [0.1, 0.0, 0.05])
    assert [r.q for r in rows] == [0.0, 0.05, 0.1]
    close(rows[0].rate, math.log2(5), 1e-11)

    fam = symqkd.attack_family("d+1", 3, 0.1)
    state = fam.state(0.0)
    cf = symqkd.closed_form_rates(state, "d+1")
    en = symqkd.engine_rates(state, "d+1")
    close(cf.rate, en.rate, 1e-8)
    print("d=3 closed form vs engine:", cf.rate, en.rate)

    six = symqkd.QubitProtocol("sixstate")
    cube = symqkd.QubitProtocol("cube")
    close(six.optimize(0.05).rate, cube.optimize(0.05).rate, 1e-6)
    assert symqkd.commutant_dimension("icosahedral") == 2

    try:
        symqkd.BellDiagonalState(2, [1.0])
    except ValueError as e:
        print("rejected bad state:", e)
    else:
        raise AssertionError("expected ValueError")

    passed, counts = symqkd.run_verify("gpauli", 1)
    assert passed, counts
    print("verify:", counts)
    print("smoke test OK")


if __name__ == "__main__":
    main()
