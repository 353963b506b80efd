"""Smoke test for the cphase extension module.

Build and run from the repository root:

    cargo build --release -p cphase-python --features extension-module
    cp target/release/libcphase.so python/cphase.so
    python3 python/smoke_test.py
"""

import math
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import cphase  # noqa: E402

TWO_PI_MHZ = 2 * math.pi * 1e6


def main():
    cav = cphase.Cavity(g=30.0, kappa=1.0, gamma=1.0)
    r0, t0 = cav.coefficients(0.0, 0)
    r1, _ = cav.coefficients(0.0, 1)
    assert t0 is None
    assert abs(r0 + 1) < 1e-12 and r1.real > 0.99
    assert abs(cav.cooperativity - 900.0) < 1e-9

    net = cphase.Network(
        2,
        g=7.9 * TWO_PI_MHZ,
        kappa=2.3 * TWO_PI_MHZ,
        kappa_prime=0.2 * TWO_PI_MHZ,
        gamma=3.0 * TWO_PI_MHZ,
        tau=10e-9,
    )
    packet = cphase.Packet.from_duration(5e-6)
    report = cphase.gate_fidelity(net, packet)
    print(report)
    assert abs(report.fidelity - 0.65) < 0.02
    assert len(report.overlaps) == 4
    assert abs(cphase.entanglement_fidelity(net, packet) - report.fidelity) < 1e-12

    ideal = cphase.Network(2, g=1.0, kappa=1.0, gamma=1.0, ideal=True)
    assert ideal.ideal_phase("11") == "φ1 + φ2"
    assert ideal.ideal_phase("00") == "π"
    assert abs(ideal.amplitude(0.0, 3) - 1) < 1e-15

    ok, phase = cphase.dd_verify(4)
    assert ok, phase
    print("dd_verify(4):", ok, phase)

    slope = cphase.expansion_coefficient(2, "inv_C")
    assert abs(slope - cphase.inverse_cooperativity_coefficient(2)) < 0.1 * 2.5
    print("1/C coefficient, N=2:", slope)

    near_ideal = cphase.Network(2, g=1e4, kappa=1.0, gamma=1.0)
    mean, stderr = cphase.noisy_fidelity(near_ideal, cphase.Packet.gaussian(1e-4, points=513), 0.3, 8, True, 1)
    assert mean > 0.999, mean

    try:
        cphase.Network(0, g=1.0, kappa=1.0)
    except ValueError as e:
        print("rejected:", e)
    else:
        raise AssertionError("n = 0 accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
