"""Smoke test for the curveflow extension module.

Build and install first, e.g.
    pip install maturin
    maturin build --release -m crates/python/Cargo.toml -o dist
    pip install dist/curveflow-*.whl
then run `python python/smoke_test.py`.
"""

import json
import math

import curveflow as cf


def close(a, b, tol):
    assert abs(a - b) <= tol * max(1.0, abs(b)), f"{a} vs {b}"


def main():
    # kernel
    close(cf.green_integral(1.0, 8192), -1.0, 1e-6)
    close(cf.green_eval(0.5, 1.0), -0.9595173756674719, 1e-12)

    # circle oracle, a = 2
    params = cf.FlowParams(1.0)
    circle = cf.Curve.circle(1.0, 256)
    close(circle.length(), 2 * math.pi, 1e-3)
    assert circle.is_convex()
    traj = cf.evolve(circle, params, 1.0)
    assert traj.outcome == "completed"
    r = traj.lengths()[-1] / (2 * math.pi)
    close(r, cf.circle_radius_exact(1.0, 1.0, params), 1e-3)
    close(cf.circle_radius_exact(1.0, 1.0, params), 0.3770809183741962, 1e-12)
    report = json.loads(traj.check(circle_radius=1.0))
    assert all(c["status"] != "fail" for c in report["checks"]), report

    # a = 1 goes extinct in finite time
    p1 = cf.FlowParams(1.0, a=1.0)
    t_pred = cf.circle_extinction_time(1.0, p1)
    close(t_pred, 6.442340250271482, 1e-12)
    ext = cf.evolve(circle, p1, 100.0, stride=10)
    assert ext.outcome == "extinct"
    close(ext.extinction_time, t_pred, 1e-2)

    # velocity, gradient, metric
    star = cf.Curve.star(3, 0.3, 256)
    v = cf.flow_velocity(star, params)
    g = cf.gradient_of_length(star, params)
    assert len(v) == len(g) == 256
    assert all(abs(a[0] + b[0]) < 1e-15 and abs(a[1] + b[1]) < 1e-15 for a, b in zip(v, g))
    assert cf.metric_inner(star, v, v, params) > 0.0
    assert len(cf.circulant_velocity(star, params)) == 256

    # decay envelope and time map
    close(cf.decay_envelope(1.0, 1.0, 1.0), math.exp(-4.0 / 9.0), 1e-15)
    tau, phi = cf.time_map_to_a([0.0, 1.0, 2.0], [1.0, 1.0, 1.0], 1.0)
    assert len(tau) == len(phi) == 3

    # curve round trip through JSON
    pts = json.loads(star.to_json())["points"]
    back = cf.Curve([tuple(p) for p in pts])
    assert back.points() == star.points()

    # errors surface as Python exceptions
    for bad in (lambda: cf.FlowParams(-1.0), lambda: cf.Curve.circle(1.0, 3)):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("curveflow smoke test: ok")


if __name__ == "__main__":
    main()
