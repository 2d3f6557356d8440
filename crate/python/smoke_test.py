"""Smoke test for the `pmns` extension module.

Build and install first, e.g.
    maturin build --release -m crates/python/Cargo.toml -o dist && pip install dist/pmns-*.whl
then run `python python/smoke_test.py`.
"""

import math
import os
import tempfile

import pmns


def close(a, b, rel):
    assert abs(a - b) <= rel * abs(b), (a, b)


def main():
    eta = pmns.eta_constants()
    close(eta["eta_bare"], math.pi**3, 1e-15)
    close(eta["eta_effective"], math.pi**3 * (2 * math.pi) ** -1.5, 1e-15)
    assert abs(pmns.kappa_estimate() - 1.0) < 1e-12

    expected = 4 * math.pi * (8 + 8 * math.log(1 / 3) + 32 / 9)
    close(pmns.b_of_c(2.0), expected, 1e-12)
    close(pmns.b_surface_quadrature(2.0), expected, 1e-8)
    close(pmns.c_of_b(expected), 2.0, 1e-9)
    try:
        pmns.b_of_c(0.5)
    except ValueError:
        pass
    else:
        raise AssertionError("|c| <= 1 must be rejected")

    grid = pmns.FrequencyGrid(8, 0.5)
    assert len(grid) == 512 and grid.n == 8

    # a single shear mode has zero nonlinearity, so the solution is heat flow
    amp = 0.002
    u0 = pmns.SpectralField.cosine(grid, [0, 0, 1], [1.0, 0.0, 0.0], amp)
    knots = pmns.geometric_knots(0.01, 2.0, 2.0)
    sol = pmns.picard_solve(u0, knots)
    assert sol.knots == knots
    for i, t in enumerate(knots):
        close(sol.field(i).pm_norm(2.0), math.exp(-0.25 * t) * u0.pm_norm(2.0), 1e-12)
    phys = sol.field(0).physical()
    assert max(abs(v[0]) for v in phys) <= amp * (1 + 1e-12)
    assert sol.report["ball_radius"] <= 2 * sol.report["epsilon"]

    rnd = pmns.SpectralField.random(grid, 7, 0.03)
    close(rnd.pm_norm(2.0), 0.03, 1e-12)
    assert rnd.divergence_max() < 1e-12
    rep = pmns.picard_solve(rnd, knots).report
    assert max(rep["contraction_ratios"]) <= 4 * eta["eta_effective"] * rep["epsilon"] + 0.05

    field, srep = pmns.stationary_solve(pmns.Force.dirac([0.05, 0.0, 0.0]), grid)
    assert field.pm_norm(2.0) <= 2 * srep["epsilon"]

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "u.pmns")
        rnd.save(path)
        back = pmns.SpectralField.load(path)
        assert (back - rnd).pm_norm(2.0) == 0.0

    reg = pmns.regularize(rnd, 2.5, knots, q=4.0)
    assert reg["within_bound"] and reg["interpolation_worst_ratio"] <= 1.05

    try:
        pmns.picard_solve(rnd, knots, max_iter=2, tol=1e-15)
    except pmns.NonConvergenceError:
        pass
    else:
        raise AssertionError("two iterations cannot reach tol 1e-15")

    print("pmns smoke test passed")


if __name__ == "__main__":
    main()
