"""Smoke test for the maxlab Python extension."""

import json
import math

import maxlab

PI2 = math.pi**2


def main():
    cube = maxlab.Mesh.box3d([1.0, 1.0, 1.0], 2)
    assert cube.dim == 3 and cube.n_edges == 3 * 2 * 9 + 3 * 4 * 3 + 8
    assert abs(cube.diameter() - math.sqrt(3)) < 1e-12
    assert cube.refine().n_cells == 8 * cube.n_cells

    square = maxlab.Mesh.rect2d([1.0, 1.0], 8)
    eps = maxlab.MaterialField.identity(square)
    lam = maxlab.dirichlet_eigenvalues(square, eps)
    mu = maxlab.neumann_eigenvalues(square)
    assert abs(lam[0] / (2 * PI2) - 1) < 0.04
    assert abs(mu[0]) < 1e-8 and abs(mu[1] / PI2 - 1) < 0.02

    two = maxlab.MaterialField.scalar(square, 2.0)
    lam2 = maxlab.dirichlet_eigenvalues(square, two)
    assert abs(lam2[0] / (2 * lam[0]) - 1) < 1e-12
    lo, hi, hat = two.bounds()
    assert abs(lo - 2**-0.5) < 1e-14 and abs(hi - 2**0.5) < 1e-14

    edge = maxlab.maxwell_eigenvalues(square, trace="tangential")
    assert edge["kernel_dim"] == edge["expected_kernel_dim"]
    for e, m in zip(edge["values"][:3], mu[1:4]):
        assert abs(e / m - 1) < 0.05

    hole = maxlab.Mesh.square_with_hole(3.0, 1.0, 6)
    assert hole.harmonic_dims() == (1, 1)
    dec = maxlab.Decomposer(hole, trace="normal")
    assert dec.harmonic_dim == 1
    rec, orth = dec.property_suite(20, 1)
    assert rec <= 1e-12 and orth <= 1e-10

    value, order = maxlab.richardson_extrapolate([0.5, 0.25, 0.125], [1.25, 1.0625, 1.015625])
    assert abs(value - 1.0) < 1e-12 and abs(order - 2.0) < 1e-6

    report = json.loads(maxlab.constants_report('{"kind": "box3d", "dims": [1, 1, 1]}', [2, 3, 4]))
    assert all(c["status"] == "pass" for c in report["checks"])
    assert abs(report["extrapolated"]["mu2"] / PI2 - 1) < 0.03

    config = json.dumps({"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [4, 8]})
    text, code = maxlab.run_config(config)
    assert code in (0, 2) and json.loads(text)["dim"] == 2
    assert maxlab.validate_config(config) == []

    try:
        maxlab.run_config(json.dumps({"domain": {"kind": "rect2d", "dims": [1, 1]}, "levels": [4, 2]}))
    except ValueError:
        pass
    else:
        raise AssertionError("decreasing levels accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
