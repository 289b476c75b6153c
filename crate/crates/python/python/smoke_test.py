"""Smoke test for the anisobbm extension module.

Build and install first:  pip install --no-build-isolation -e crates/python
"""

import json
import math

import anisobbm as ab


def close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(b))


def main():
    cube = ab.ConvexBody.cube(2)
    ball = ab.ConvexBody.ball(2)
    assert cube.gauge([3.0, 4.0]) == 4.0
    assert cube.contains([0.5, -0.5]) and not cube.contains([1.5, 0.0])
    assert close(ab.kpn_constant(2.0, 2), math.pi / 2, 1e-12)
    assert close(ab.mixed_modulus([1 + 1j, 0j], 2.0), math.sqrt(2.0), 1e-12)

    value, _ = ab.moment_norm(cube, [1.0, 0.0], 1.0)
    assert close(value, 6.0, 1e-9), value
    sphere, _ = ab.moment_norm_sphere(cube, [1.0, 0.0], 1.0)
    assert close(sphere, 6.0, 1e-6), sphere
    mc, se = ab.moment_norm(cube, [1.0, 0.0], 1.0, samples=50_000, seed=3)
    assert abs(mc - 6.0) < 5 * se, (mc, se)
    assert close(ab.dual_norm_z1(ball, [1.0, 0.0]), 0.25, 1e-4)

    u = ab.Field.gaussian(2)
    assert close(u.value([0.0, 0.0]).real, 1.0, 1e-15)
    energy, _ = ab.local_energy(u, ball, 2.0)
    assert close(energy, math.pi ** 2 / 2, 1e-6), energy
    raw, _ = ab.gagliardo(u, ball, 2.0, 0.9)
    assert 0.0 < 0.1 * raw

    wave = ab.Field.modulated_gaussian([1.0, 0.5])
    b = ab.Potential.rotational(1.0)
    bbm, _ = ab.bbm_uniform(wave, ball, 2.0, 8, potential=b)
    assert bbm > 0.0

    assert close(ab.box_perimeter([0.0, 0.0], [1.0, 1.0], ball), 16.0, 1e-9)

    study = {
        "functional": {"kind": "gagliardo"},
        "p": 2.0,
        "body": {"shape": "ball", "dim": 2},
        "field": {"family": "zero", "dim": 2},
        "schedule": {"kind": "s_values", "values": [0.8, 0.9, 0.95, 0.99]},
        "tolerance": 0.01,
    }
    report = json.loads(ab.run_study(json.dumps(study)))
    assert report["pass"] and report["extrapolation"]["limit"] == 0.0

    limit, _, rate = ab.extrapolate([(t, 2.0 + 3.0 * t, 1e-9) for t in (0.2, 0.1, 0.05, 0.02, 0.01)])
    assert close(limit, 2.0, 1e-9) and close(rate, 1.0, 1e-6)

    try:
        ab.ConvexBody.ball(2, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative radius accepted")
    print("anisobbm smoke test passed")


if __name__ == "__main__":
    main()
