import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from laserbench import geometry as g


SQUARE = np.array([[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]])
TRIANGLE = np.array([[0.0, 0.0], [4.0, 0.0], [0.0, 3.0]])
BOWTIE = np.array([[0.0, 0.0], [2.0, 2.0], [2.0, 0.0], [0.0, 2.0]])


def test_as_polygon_validates_shape():
    with pytest.raises(ValueError):
        g.as_polygon([[0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        g.as_polygon(np.zeros((4, 3)))
    with pytest.raises(ValueError):
        g.as_polygon([[0.0, 0.0], [1.0, np.nan], [1.0, 1.0]])


def test_polygon_area_known_values():
    assert g.polygon_area(SQUARE) == pytest.approx(100.0)
    assert g.polygon_area(TRIANGLE) == pytest.approx(6.0)
    # orientation must not matter
    assert g.polygon_area(SQUARE[::-1]) == pytest.approx(100.0)


def test_polygon_simplicity():
    assert g.polygon_is_simple(SQUARE)
    assert g.polygon_is_simple(TRIANGLE)
    assert not g.polygon_is_simple(BOWTIE)


def test_points_in_polygon_square():
    pts = np.array([[5.0, 5.0], [-1.0, 5.0], [11.0, 5.0], [5.0, -0.5], [9.99, 9.99]])
    inside = g.points_in_polygon(pts, SQUARE)
    assert inside.tolist() == [True, False, False, False, True]


def test_points_in_polygon_concave():
    # L-shape: notch removed from the top-right corner
    ell = np.array(
        [[0.0, 0.0], [10.0, 0.0], [10.0, 5.0], [5.0, 5.0], [5.0, 10.0], [0.0, 10.0]]
    )
    pts = np.array([[7.0, 7.0], [2.0, 7.0], [7.0, 2.0]])
    assert g.points_in_polygon(pts, ell).tolist() == [False, True, True]


def test_distance_to_boundary_square():
    pts = np.array([[5.0, 5.0], [0.0, 5.0], [-3.0, 5.0], [13.0, 14.0]])
    d = g.distance_to_boundary(pts, SQUARE)
    assert d == pytest.approx([5.0, 0.0, 3.0, 5.0])


def test_signed_distance_sign_convention():
    pts = np.array([[5.0, 5.0], [-3.0, 5.0]])
    sd = g.signed_distance(pts, SQUARE)
    assert sd[0] == pytest.approx(-5.0)
    assert sd[1] == pytest.approx(3.0)


def test_union_queries():
    other = g.rectangle(20.0, 0.0, 10.0, 10.0)
    pts = np.array([[5.0, 5.0], [25.0, 5.0], [15.0, 5.0]])
    assert g.points_in_any(pts, [SQUARE, other]).tolist() == [True, True, False]
    d = g.distance_to_any(pts, [SQUARE, other])
    assert d == pytest.approx([0.0, 0.0, 5.0])


def test_bounds_and_rectangle():
    assert g.polygons_bounds([SQUARE, g.rectangle(-5.0, 2.0, 1.0, 1.0)]) == (
        -5.0,
        0.0,
        10.0,
        10.0,
    )
    r = g.rectangle(1.0, 2.0, 3.0, 4.0)
    assert g.polygon_area(r) == pytest.approx(12.0)
    assert g.polygon_is_simple(r)


@given(
    cx=st.floats(-50, 50),
    cy=st.floats(-50, 50),
    w=st.floats(0.1, 40),
    h=st.floats(0.1, 40),
    px=st.floats(-100, 100),
    py=st.floats(-100, 100),
)
@settings(max_examples=200, deadline=None)
def test_rectangle_containment_matches_bbox(cx, cy, w, h, px, py):
    rect = g.rectangle(cx, cy, w, h)
    p = np.array([[px, py]])
    expected = (cx < px < cx + w) and (cy < py < cy + h)
    on_edge = (
        abs(px - cx) < 1e-9
        or abs(px - (cx + w)) < 1e-9
        or abs(py - cy) < 1e-9
        or abs(py - (cy + h)) < 1e-9
    )
    if not on_edge:
        assert bool(g.points_in_polygon(p, rect)[0]) == expected


@given(
    n=st.integers(3, 12),
    radius=st.floats(1.0, 30.0),
    phase=st.floats(0.0, 6.28),
)
@settings(max_examples=100, deadline=None)
def test_regular_polygon_area_formula(n, radius, phase):
    ang = phase + np.linspace(0.0, 2.0 * np.pi, n, endpoint=False)
    poly = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    expected = 0.5 * n * radius**2 * np.sin(2.0 * np.pi / n)
    assert g.polygon_area(poly) == pytest.approx(expected, rel=1e-9)
    assert g.polygon_is_simple(poly)


@given(
    px=st.floats(-20, 20),
    py=st.floats(-20, 20),
)
@settings(max_examples=200, deadline=None)
def test_distance_consistent_with_containment(px, py):
    p = np.array([[px, py]])
    sd = float(g.signed_distance(p, SQUARE)[0])
    inside = bool(g.points_in_polygon(p, SQUARE)[0])
    if abs(sd) > 1e-9:
        assert (sd < 0) == inside
