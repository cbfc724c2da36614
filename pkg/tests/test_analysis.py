import csv

import numpy as np
import pytest

from conftest import random_function
from pseudofrac.analysis import (
    cone_function,
    embedding_check,
    holder_quotients,
    inclusion_check,
    inequality_suite,
    poincare_check,
    scaled_monotonicity_check,
    sphere_measure,
    viscosity_diagnostic,
    write_check_csv,
)
from pseudofrac.energy import FracParams, GridFunction, seminorm_infty
from pseudofrac.errors import BadExponents, NonProductDomain, ZeroFunction
from pseudofrac.geometry import DomainSpec, build_grid, compute_Rs

P2 = FracParams(0.5, 2.0)


@pytest.fixture(scope="module")
def grid16():
    return build_grid(DomainSpec.rect((0.5, 0.5)), 1 / 16)


@pytest.fixture(scope="module")
def ball_cone():
    dom = DomainSpec.ball(1.0)
    grid = build_grid(dom, 1 / 16)
    geo = compute_Rs(dom, 0.5, grid)
    return grid, geo, cone_function(grid, 0.5, grid.nodes[geo.node_index], geo.node_R_s)


def spike(grid, node=None):
    vals = np.zeros(grid.size)
    vals[grid.size // 2 if node is None else node] = 1.0
    return GridFunction(grid, vals)


def test_sphere_measure():
    assert sphere_measure(1) == 2.0
    assert sphere_measure(3) == pytest.approx(4 * np.pi)


def test_zero_inputs(grid8):
    zero = GridFunction.zeros(grid8)
    with pytest.raises(ZeroFunction):
        poincare_check(zero, P2)
    assert inclusion_check(zero, 0.3, 0.6, 2.0).margin == 0.0
    assert scaled_monotonicity_check(zero, 0.4, 0.8, 2.0).margin == 0.0
    assert embedding_check(zero, P2).margin == 0.0


def test_bad_exponents(grid8, rng):
    u = random_function(grid8, rng)
    with pytest.raises(BadExponents):
        inclusion_check(u, 0.6, 0.3, 2.0)
    with pytest.raises(BadExponents):
        scaled_monotonicity_check(u, 0.5, 0.5, 2.0)


def test_embedding_needs_product_domain():
    grid = build_grid(DomainSpec.ball(1.0), 0.25)
    with pytest.raises(NonProductDomain):
        embedding_check(spike(grid), P2)


def test_spikes_hold(grid16):
    u = spike(grid16)
    assert poincare_check(u, P2).holds()
    assert embedding_check(u, P2).holds()


@pytest.mark.parametrize("check", ["poincare", "inclusion", "monotone", "embedding"])
def test_margins_scale_homogeneously(grid8, rng, check):
    u = random_function(grid8, rng)
    run = {
        "poincare": lambda v: poincare_check(v, P2),
        "inclusion": lambda v: inclusion_check(v, 0.3, 0.6, 2.0),
        "monotone": lambda v: scaled_monotonicity_check(v, 0.4, 0.8, 2.0),
        "embedding": lambda v: embedding_check(v, P2),
    }[check]
    assert run(u * 3.0).margin == pytest.approx(9.0 * run(u).margin, rel=1e-10)


def test_random_margins(grid16, rng):
    for _ in range(20):
        u = random_function(grid16, rng)
        assert poincare_check(u, P2).holds()
        assert inclusion_check(u, 0.3, 0.6, 2.0).holds()
        assert scaled_monotonicity_check(u, 0.4, 0.8, 2.0).holds()
        assert embedding_check(u, P2).holds()


def test_cone_properties(ball_cone):
    grid, geo, cone = ball_cone
    assert cone.values[geo.node_index] == 1.0
    assert cone.values.min() >= 0.0 and cone.values.max() <= 1.0
    assert seminorm_infty(cone, 0.5) <= 1.0 / geo.node_R_s + 1e-9
    assert scaled_monotonicity_check(cone, 0.3, 0.6, 2.0).holds()


def test_holder_quotients_zero(grid8):
    q = holder_quotients(GridFunction.zeros(grid8), 10, 0.5)
    assert (q.A, q.B, q.C, q.D) == (0.0, 0.0, 0.0, 0.0)


def test_holder_quotients_at_argmax(grid8, rng):
    u = GridFunction(grid8, rng.uniform(0.0, 1.0, grid8.size))
    q = holder_quotients(u, int(np.argmax(u.values)), 0.5)
    assert q.A <= 0 and q.C <= 0


def test_cone_downhill_quotient():
    dom = DomainSpec.ball(1.0)
    grid = build_grid(dom, 1 / 32)
    geo = compute_Rs(dom, 0.5, grid)
    centre = grid.nodes[geo.node_index]
    cone = cone_function(grid, 0.5, centre, geo.node_R_s)
    # a node a quarter radius to the right, well inside the support
    node = int(np.argmin(np.hypot(grid.nodes[:, 0] - centre[0] - 0.25, grid.nodes[:, 1] - centre[1])))
    q = holder_quotients(cone, node, 0.5)
    assert min(q.B, q.D) <= -(1 - 0.1) / geo.node_R_s


def test_viscosity_zero_and_csv(grid8, tmp_path):
    report = viscosity_diagnostic(GridFunction.zeros(grid8), 1.0, 0.5)
    assert np.all(report.residual == 0.0)
    u = GridFunction(grid8, np.linspace(0.1, 1.0, grid8.size))
    report = viscosity_diagnostic(u, 1.0, 0.5)
    path = tmp_path / "visc.csv"
    report.write_csv(path)
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["ix", "iy", "A", "B", "C", "D", "residual"]
    assert len(rows) == grid8.size + 1
    assert set(report.quantiles()) == {"min", "median", "q90", "max"}


def test_suite_rows_and_csv(grid8, tmp_path):
    rows = inequality_suite(grid8, count=3, seed=1)
    assert len(rows) == 3 * 2 * 4
    assert all(r.passed for r in rows)
    path = tmp_path / "checks.csv"
    write_check_csv(rows, path)
    lines = list(csv.reader(open(path)))
    assert lines[0] == ["check_name", "param_summary", "margin", "pass"]
    assert len(lines) == len(rows) + 1
