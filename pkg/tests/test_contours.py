import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blochspec.contours import Circle, Polyline, winding_numbers
from blochspec.errors import ContourTooClose

roots = st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False),
                 min_size=1, max_size=6)


def _poly(zs):
    return lambda z: np.prod([z - r for r in zs], axis=0)


def test_circle_geometry():
    c = Circle(1 + 1j, 2.0)
    assert c.contains(2 + 1j) and not c.contains(4 + 1j)
    assert c.max_modulus == pytest.approx(np.sqrt(2) + 2)
    assert abs(c(0.25) - (1 + 3j)) < 1e-15


def test_rectangle_geometry():
    r = Polyline.rectangle(0, 4, -1, 1)
    assert r.contains(1 + 0.5j) and not r.contains(5) and not r.contains(2 + 2j)
    assert r(0) == complex(0, -1)
    # every edge receives at least a quarter of half the nodes
    s = np.arange(64) / 64
    pts = r(s)
    assert np.sum(pts.real == 4) >= 8 and np.sum(pts.real == 0) >= 8


@settings(max_examples=40, deadline=None)
@given(roots)
def test_polynomial_winding(zs):
    circle = Circle(0.0, 4.0)
    if any(abs(abs(r) - 4.0) < 1e-3 for r in zs):
        return
    (w,) = winding_numbers(_poly(zs), [circle])
    assert w == sum(abs(r) < 4 for r in zs)


def test_mixed_contours_in_one_batch():
    f = _poly([0.0, 2.0, 2.1, 10j])
    contours = [Circle(0, 1), Circle(2.05, 0.5), Polyline.rectangle(-1, 3, -1, 1),
                Circle(5, 1)]
    assert winding_numbers(f, contours) == [1, 2, 3, 0]


def test_clockwise_orientation_negative():
    cw = Polyline((1 + 1j, 1 - 1j, -1 - 1j, -1 + 1j))
    assert winding_numbers(lambda z: z, [cw]) == [-1]


def test_rapid_rotation_resolved():
    # z^40 needs many nodes; adaptivity must find all of them
    assert winding_numbers(lambda z: z ** 40, [Circle(0, 1)]) == [40]


def test_zero_on_contour_raises():
    with pytest.raises(ContourTooClose):
        winding_numbers(lambda z: z - 1.0, [Circle(0, 1)])
