import csv
import json

import numpy as np
import pytest

from blochspec import ConfigurationError, OperatorSpec
from blochspec.band_tracker import (GlobalBand, Rectangle, ResolventLine, default_t_grid,
                                    glue_bands, homotopy_track, line_ordinate, plot_bundle,
                                    right_abscissa, simplicity_report, spectrum_table,
                                    track_band, track_bands, verify_line, verify_rectangle,
                                    verify_rectangles, write_bands_csv)
from blochspec.bloch_solver import count_eigenvalues, mu
from blochspec.errors import BranchJump, CertificationCounterexample


@pytest.fixture
def free3():
    return OperatorSpec.build(3)


def test_default_grid():
    g = default_t_grid(4)
    assert g.tolist() == [-0.5, 0.0, 0.5, 1.0]


# -- tracking and gluing ----------------------------------------------------------------

def test_free_bands_exact(free3):
    ts = default_t_grid(9)
    bands = track_bands(free3, [-1, 0, 1], ts)
    for k, band in bands.items():
        expected = (2 * np.pi * k + np.pi * ts) ** 3
        assert np.allclose(band.lam, expected, rtol=1e-10)
        assert np.all(band.count == 1)
        assert band.left_limit == pytest.approx((2 * np.pi * k - np.pi) ** 3, rel=1e-10)


def test_glue_free_third_order(free3):
    bands = track_bands(free3, [-2, -1, 0, 1, 2], default_t_grid(7))
    glob = glue_bands(bands)
    assert len(glob.junctions) == 4
    assert glob.max_residual < 1e-9 * np.pi ** 3 * 125
    # the global band is the single curve (pi t)^3 on the line
    for k in (-2, 0, 1):
        for t0 in default_t_grid(7):
            t = t0 + 2 * k
            assert glob(t) == pytest.approx((np.pi * t) ** 3, rel=1e-9, abs=1e-9)
    assert glob(1.0) == pytest.approx(np.pi ** 3, rel=1e-10)


def test_glue_needs_endpoint(free3):
    bands = track_bands(free3, [0, 1], [0.2, 0.4], verify=False)
    bands[0].t[-1] = 0.9
    with pytest.raises(ConfigurationError):
        glue_bands(bands)


def test_glue_reports_junction_jump(free3):
    bands = track_bands(free3, [0, 1], default_t_grid(5), verify=False)
    bands[0].lam[-1] += 1.0
    with pytest.raises(BranchJump):
        glue_bands(bands)
    assert glue_bands(bands, check=False).max_residual == pytest.approx(1.0)


def test_global_band_missing_branch(free3):
    glob = glue_bands(track_bands(free3, [0], default_t_grid(5), verify=False))
    with pytest.raises(KeyError):
        glob(5.0)


def test_drift_band_continuity(drift2):
    band = track_band(drift2, 1, default_t_grid(21))
    # neighbouring nodes differ by roughly the derivative times the step
    assert band.max_jump < 0.2 * 2 * np.pi * 3 * np.pi
    assert band.at(1.0) == band.lam[-1]


def test_band_csv(tmp_path, free3):
    bands = track_bands(free3, [0, 1], default_t_grid(5), verify=False)
    write_bands_csv(bands, tmp_path / "b.csv")
    rows = list(csv.DictReader(open(tmp_path / "b.csv")))
    assert len(rows) == 10 and set(rows[0]) == {"t", "re_lambda", "im_lambda", "k"}
    bundle = plot_bundle(glue_bands(bands))
    json.dumps(bundle)
    assert [b["k"] for b in bundle["bands"]] == [0, 1]


# -- lines and rectangles ----------------------------------------------------------------

def test_line_geometry(drift4):
    assert line_ordinate(drift4, 0, 0.0) == pytest.approx(-6 * np.pi ** 3)
    assert right_abscissa(4, 2, 0.3) == pytest.approx((5 * np.pi) ** 4)
    assert right_abscissa(4, 2, 0.7) == pytest.approx((4 * np.pi) ** 4)
    line = ResolventLine.horizontal(drift4, 0, 0.0)
    assert line.distance(3 - 6j * np.pi ** 3) == pytest.approx(0)


def test_lines_need_even_order_with_drift(odd3):
    with pytest.raises(ConfigurationError):
        ResolventLine.horizontal(odd3, 0, 0.0)
    with pytest.raises(ConfigurationError):
        Rectangle.build(OperatorSpec.build(2, 0.0, p2={1: 1.0}), 0, 0.2)


def test_line_margin_unperturbed_closed_form(drift4):
    t, s, K = 0.3, 0, 6
    line = ResolventLine.horizontal(drift4, s, t)
    check = verify_line(drift4, line, eps_grid=[0.0], K=K)
    radius = 1.5 * abs(mu(drift4, K + 1, t))
    ks = np.arange(-K - 1, K + 2)
    mus = np.array([mu(drift4, k, t) for k in ks])
    mus = mus[np.abs(mus) <= radius]
    assert check.margin == pytest.approx(np.min(np.abs(mus.imag - line.value)), rel=1e-9)
    assert check.delta_margin == pytest.approx(1.0)


def test_line_margin_perturbed(drift4):
    line = ResolventLine.horizontal(drift4, 1, 0.2)
    check = verify_line(drift4, line, eps_grid=[0.0, 0.5, 1.0], samples=51)
    assert check.margin > 0 and check.delta_margin > 0


def test_rectangle_unperturbed(drift4):
    t = 0.3
    rect = Rectangle.build(drift4, 1, t)
    assert rect.contains(mu(drift4, 1, t))
    assert not rect.contains(mu(drift4, 2, t))
    assert verify_rectangle(drift4, rect, eps_grid=[0.0]) == [1]
    assert all(isinstance(l, ResolventLine) for l in rect.lines(drift4))


def test_strip_between_lines_is_empty(drift4):
    # between b(1, t) and b(2, t) only mu_2 lives; shrink the box to exclude it
    t = 0.3
    rect = Rectangle.build(drift4, 2, t)
    from blochspec.contours import Polyline
    box = Polyline.rectangle(rect.a, mu(drift4, 2, t).real - 500, rect.y0, rect.y1)
    assert count_eigenvalues(drift4, t, 0.0, box, relative=True) == 0


def test_rectangles_along_homotopy(drift4):
    t = 0.45
    rects = [Rectangle.build(drift4, k, t) for k in range(-3, 4)]
    table = verify_rectangles(drift4, rects, eps_grid=[0, 0.25, 0.5, 0.75, 1.0])
    assert np.all(table == 1)


def test_rectangles_need_common_t(drift4):
    rects = [Rectangle.build(drift4, 0, 0.1), Rectangle.build(drift4, 0, 0.2)]
    with pytest.raises(ConfigurationError):
        verify_rectangles(drift4, rects)


def test_rectangle_counterexample_detected():
    # far outside the certified range the perturbation pushes eigenvalues across lines
    spec = OperatorSpec.build(2, 0.05, p2={1: 40.0, -1: 40.0})
    rects = [Rectangle.build(spec, k, 0.3) for k in range(-2, 3)]
    with pytest.raises(CertificationCounterexample):
        verify_rectangles(spec, rects, eps_grid=[0.0, 1.0])


# -- homotopy ---------------------------------------------------------------------------------

def test_homotopy_starts_at_mu(drift4):
    path = homotopy_track(drift4, 1, 0.3, eps_grid=[0.0])
    assert path == [(0.0, mu(drift4, 1, 0.3))]


def test_homotopy_free_is_constant():
    spec = OperatorSpec.build(4, 2.0)
    path = homotopy_track(spec, 0, 0.4, eps_grid=[0.0, 0.5, 1.0])
    assert all(abs(lam - path[0][1]) < 1e-8 * max(1, abs(lam)) for _, lam in path)


def test_homotopy_certified(drift4):
    path = homotopy_track(drift4, -1, 0.6)
    assert len(path) == 11
    assert abs(path[-1][1] - path[0][1]) < 0.5 * abs(mu(drift4, 0, 0.6) - mu(drift4, -1, 0.6))


def test_homotopy_uncertified_rejected():
    spec = OperatorSpec.build(2, 0.1, p2={3: 1.0})
    with pytest.raises(ConfigurationError):
        homotopy_track(spec, 0, 0.3)


# -- simplicity ----------------------------------------------------------------------------------

def test_gasymov_degenerate_at_zero(gasymov):
    report = simplicity_report(gasymov, [0.0, 0.5], k_range=2)
    assert report.degenerate()
    assert report.worst_t == 0.0
    assert report.min_gap < 1e-8


def test_drift_simple(drift2):
    report = simplicity_report(drift2, default_t_grid(8), k_range=3)
    assert not report.degenerate() and report.min_gap > 1
    rows = spectrum_table(report.spectra)
    assert len(rows) == 8 * 7 and {"t", "k", "re_lambda", "count"} <= set(rows[0])
