import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pseudofrac.errors import DomainParseError, EmptyGrid
from pseudofrac.geometry import (
    DomainSpec,
    boundary_min_many,
    boundary_min_s,
    build_grid,
    compute_Rs,
    lambda_infinity,
    parse_domain,
    sample_boundary,
)


def test_rectangle_cell_centres():
    grid = build_grid(DomainSpec.rect((1.0, 0.5)), 0.5)
    assert grid.size == 8
    got = sorted(map(tuple, np.round(grid.nodes, 12)))
    want = sorted((x, y) for x in (-0.75, -0.25, 0.25, 0.75) for y in (-0.25, 0.25))
    assert got == want


def test_ball_too_coarse_is_empty():
    with pytest.raises(EmptyGrid):
        build_grid(DomainSpec.ball(1.0), 2.5)


def test_ball_node_count_matches_brute_force():
    h = 0.25
    grid = build_grid(DomainSpec.ball(1.0), h)
    count = 0
    for i in range(-4, 4):
        for j in range(-4, 4):
            corners = [(i * h + a * h, j * h + b * h) for a in (0, 1) for b in (0, 1)]
            if all(x * x + y * y <= 1.0 for x, y in corners):
                count += 1
    assert grid.size == count


@pytest.mark.parametrize(
    "text, kind",
    [("ball:1", "ball"), ("ball:2:0.5,-1", "ball"), ("rect:1,0.5", "rect"),
     ("rectunion:1,0.25,0,0;0.25,1,0,0", "rectunion")],
)
def test_parse_round_trip(text, kind):
    dom = parse_domain(text)
    assert dom.kind == kind
    assert parse_domain(dom.to_string()) == dom


@pytest.mark.parametrize("text", ["", "ball", "ball:-1", "rect:1", "circle:1", "ball:1:0"])
def test_parse_rejects(text):
    with pytest.raises(DomainParseError):
        parse_domain(text)


def test_ball_origin_axis_minimum():
    dom = DomainSpec.ball(1.0)
    samples = sample_boundary(dom, 2 * math.pi / 10_000)
    dense = np.min(np.abs(samples[:, 0]) ** 0.5 + np.abs(samples[:, 1]) ** 0.5)
    assert boundary_min_s(dom, (0.0, 0.0), 0.5) == pytest.approx(1.0, abs=1e-12)
    assert dense == pytest.approx(1.0, abs=1e-6)


def test_rectangle_l1_minimum():
    assert boundary_min_s(DomainSpec.rect((1.0, 0.5)), (0.0, 0.0), 1.0) == pytest.approx(0.5)


@settings(max_examples=25, deadline=None)
@given(
    st.floats(-0.7, 0.7), st.floats(-0.7, 0.7), st.sampled_from(["ball", "rect"]),
)
def test_fast_path_agrees_with_sampling(x, y, kind):
    dom = DomainSpec.ball(1.0) if kind == "ball" else DomainSpec.rect((0.8, 0.8))
    samples = sample_boundary(dom, 1e-3)
    pt = np.array([[x, y]])
    for s in (0.5, 1.0):
        fast = boundary_min_many(dom, pt, s)[0]
        sampled = boundary_min_many(dom, pt, s, samples)[0]
        assert fast <= sampled + 1e-12
        assert sampled - fast <= 2 * 1e-3**s


def test_l1_definition_at_s1():
    dom = DomainSpec.ball(1.0)
    samples = sample_boundary(dom, 0.01)
    pt = (0.3, -0.2)
    want = np.min(np.abs(samples[:, 0] - pt[0]) + np.abs(samples[:, 1] - pt[1]))
    assert boundary_min_s(dom, pt, 1.0, samples) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("s", [0.3, 0.5, 0.8])
def test_ball_scaling(s):
    for radius in (1.0, 2.0):
        dom = DomainSpec.ball(radius)
        geo = compute_Rs(dom, s, build_grid(dom, radius / 20))
        assert geo.R_s == pytest.approx(radius**s, abs=1e-2 * radius**s)


def test_argmax_near_centre_and_rectangle_value():
    dom = DomainSpec.ball(1.0)
    geo = compute_Rs(dom, 0.5, build_grid(dom, 0.05))
    assert np.hypot(*geo.argmax_point) < 0.1
    rect = DomainSpec.rect((1.0, 0.5))
    assert compute_Rs(rect, 0.5, build_grid(rect, 0.05)).R_s == pytest.approx(math.sqrt(0.5), abs=1e-3)
    assert lambda_infinity(rect, 0.5, build_grid(rect, 0.05)) == pytest.approx(math.sqrt(2), abs=1e-2)


def test_ball_r1_against_brute_force():
    dom = DomainSpec.ball(2.0)
    geo = compute_Rs(dom, 1.0, build_grid(dom, 0.1))
    samples = sample_boundary(dom, 0.005)
    xs = np.linspace(-1.0, 1.0, 41)
    pts = np.array([(x, y) for x in xs for y in xs])
    dist = np.abs(pts[:, None, 0] - samples[None, :, 0]) + np.abs(pts[:, None, 1] - samples[None, :, 1])
    brute = dist.min(axis=1).max()
    assert geo.R_s == pytest.approx(brute, abs=1e-2)
    assert geo.R_s == pytest.approx(2.0, abs=1e-2)


def test_nested_balls_monotone():
    values = []
    for radius in (0.5, 1.0, 1.5):
        dom = DomainSpec.ball(radius)
        values.append(compute_Rs(dom, 0.5, build_grid(dom, radius / 12)).R_s)
    assert values == sorted(values)


def test_sample_refinement_is_cauchy_on_rectangle():
    dom = DomainSpec.rect((1.0, 0.5))
    pts = build_grid(dom, 1 / 12).nodes
    vals = [boundary_min_many(dom, pts, s, sample_boundary(dom, 2 * math.pi / n)).max()
            for s in (0.5, 1.0) for n in (64, 128, 256, 512, 1024)]
    for chunk in (vals[:5], vals[5:]):
        changes = np.abs(np.diff(chunk))
        assert np.all(changes[1:] <= changes[:-1] + 1e-12)


def test_nested_ball_samples_decrease_towards_exact():
    dom = DomainSpec.ball(1.0, (0.1, 0.0))
    pts = build_grid(dom, 1 / 12).nodes
    vals = [boundary_min_many(dom, pts, 0.5, sample_boundary(dom, 2 * math.pi / n)).max()
            for n in (64, 128, 256, 512, 1024, 4096)]
    exact = boundary_min_many(dom, pts, 0.5).max()
    assert np.all(np.diff(vals) <= 1e-12)
    assert vals[-1] >= exact - 1e-12
    assert vals[-1] - exact < vals[0] - exact


def test_union_grid_is_l_shaped():
    dom = parse_domain("rectunion:1,0.25,0,0;0.25,1,0,0")
    grid = build_grid(dom, 0.25)
    assert grid.size == 16 + 16 - 4
