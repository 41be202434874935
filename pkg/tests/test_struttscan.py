import math

import numpy as np
import pytest

from conftest import PAUL_ORACLE
from quadsqueeze.errors import EmptyResult
from quadsqueeze.floquet import monodromy
from quadsqueeze.propagator import Paul
from quadsqueeze.struttscan import (REFERENCE_CASES, GridSpec, ZeroCurve, compare_entries,
                                    find_squeeze_points, newton_squeeze, paul_batch,
                                    reference_report, scan, segment_intersections,
                                    trace_zero_curves)
from quadsqueeze.sym2core import Mat2

# squeeze points of the default window; entries cross-checked with scipy's DOP853
SQUEEZE_UPPER = (1.2294897880, 0.8357090076)
LAMBDA_UPPER = 0.2356789061


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec((0.0, 1.0, 1))
    with pytest.raises(ValueError):
        GridSpec((1.0, 0.0, 3))
    with pytest.raises(ValueError):
        GridSpec(interval=(1.0, 1.0))
    g = GridSpec((0.5, 0.5, 1), (0.0, 0.0, 1))
    assert g.beta0.tolist() == [0.5]


def test_degenerate_constant_rows():
    g = scan(GridSpec((0.04, 0.25, 2), (0.0, 0.0, 2)))
    assert g.classes.tolist() == [["I", "II"], ["I", "II"]]


def test_row_major_order_and_det():
    spec = GridSpec((0.0, 1.0, 4), (-0.5, 0.5, 3))
    g = scan(spec)
    cells = g.cells
    assert len(cells) == 12
    assert [c.beta0 for c in cells[:4]] == pytest.approx(spec.beta0.tolist())
    assert all(c.beta1 == -0.5 for c in cells[:4])
    for c in cells:
        assert abs(c.u.det - 1.0) <= 1e-6
        ref = monodromy(Paul(c.beta0, c.beta1), tau0=math.pi / 2)
        assert c.u.distance(ref.matrix) < 1e-8
        assert c.motion_class == ref.motion_class.label


def test_batch_matches_oracle():
    pairs = list(PAUL_ORACLE)
    y = paul_batch([p[0] for p in pairs], [p[1] for p in pairs])
    for row, p in zip(y, pairs):
        assert np.allclose(row, PAUL_ORACLE[p], atol=2e-9)


def test_scan_workers_do_not_change_results():
    spec = GridSpec((0.0, 1.0, 9), (-0.5, 0.5, 7))
    a = scan(spec, chunk=16)
    b = scan(spec, chunk=16, workers=2)
    assert np.array_equal(a.u, b.u)


def test_reference_cases_are_class_iii():
    for (b0, b1), _ in REFERENCE_CASES.values():
        g = scan(GridSpec((b0, b0, 1), (b1, b1, 1)))
        assert g.classes[0, 0] == "III"


def test_reference_report_documents_discrepancy():
    rep = reference_report()
    assert rep["discrepancy"] is True
    for name, case in rep["cases"].items():
        pair, _ = REFERENCE_CASES[name]
        assert np.allclose(np.ravel(case["u"]), PAUL_ORACLE[pair], atol=2e-9)
        assert case["fallback_ok"]


def test_compare_entries_near_zero_slot():
    rows = compare_entries(Mat2(0.225, 0.005, 0.0, 4.39), REFERENCE_CASES["us"][1])
    assert all(r["ok"] for r in rows)
    rows = compare_entries(Mat2(0.225, 0.05, 0.0, 4.39), REFERENCE_CASES["us"][1])
    assert [r["ok"] for r in rows] == [True, False, True, True]


def test_zero_curve_on_constant_line():
    # beta1 = 0: u12 = sin(2 pi k)/k vanishes at beta0 = 1/4
    g = scan(GridSpec((0.1, 0.4, 13), (-0.1, 0.1, 9)))
    curves = trace_zero_curves(g, "u12", classes=("I", "II", "III"))
    d = min(np.min(np.hypot(c.polyline[:, 0] - 0.25, c.polyline[:, 1])) for c in curves)
    assert d < 1e-6


def test_empty_result():
    g = scan(GridSpec((0.01, 0.05, 4), (-0.01, 0.01, 4)))
    with pytest.raises(EmptyResult):
        trace_zero_curves(g, "u12")
    with pytest.raises(ValueError):
        trace_zero_curves(g, "u11")


def test_saddle_and_chaining():
    from quadsqueeze.struttscan import _chain, _square_segments

    assert _square_segments((1, -1, 1, -1), 1.0) == [(0, 1), (2, 3)]
    assert _square_segments((1, -1, 1, -1), -1.0) == [(0, 3), (1, 2)]
    assert _square_segments((1, 1, 1, 1), 1.0) == []
    adj = {"a": ["b"], "b": ["a", "c"], "c": ["b"], "x": ["y", "z"], "y": ["x", "z"], "z": ["x", "y"]}
    chains = _chain(adj)
    assert (["a", "b", "c"], False) in chains
    assert any(closed and len(p) == 3 for p, closed in chains)


def test_curves_refined(default_scan):
    grid, red, blue, _ = default_scan
    assert red and blue
    for curves, idx in ((red, 1), (blue, 2)):
        assert all(c.refined for c in curves)
        pts = np.concatenate([c.polyline for c in curves])[::25]
        vals = paul_batch(pts[:, 0], pts[:, 1])[:, idx]
        # re-evaluated in a different batch: integrator noise on top of the 1e-8 target
        assert np.max(np.abs(vals)) <= 1e-8 + 1e-9


def test_curves_inside_class_iii(default_scan):
    _, red, _, _ = default_scan
    pts = np.concatenate([c.polyline for c in red])[::50]
    y = paul_batch(pts[:, 0], pts[:, 1])
    assert np.all(np.abs(y[:, 0] + y[:, 3]) > 2.0)


def test_curve_through_constant_zero_passes_reference_u1(default_scan):
    # the u21 = 0 curve runs within one cell diagonal of the first reference pair
    grid, _, blue, _ = default_scan
    diag = math.hypot(np.diff(grid.beta0[:2])[0], np.diff(grid.beta1[:2])[0])
    b0, b1 = REFERENCE_CASES["u1"][0]
    d = min(np.min(np.hypot(c.polyline[:, 0] - b0, c.polyline[:, 1] - b1)) for c in blue)
    assert d <= diag


def test_squeeze_points(default_scan):
    _, _, _, pts = default_scan
    assert len(pts) == 2
    lower, upper = pts
    assert (upper.beta0, upper.beta1) == pytest.approx(SQUEEZE_UPPER, abs=1e-7)
    assert (lower.beta0, lower.beta1) == pytest.approx((SQUEEZE_UPPER[0], -SQUEEZE_UPPER[1]), abs=1e-7)
    assert upper.lam == pytest.approx(LAMBDA_UPPER, abs=1e-8)
    assert lower.lam == pytest.approx(1 / LAMBDA_UPPER, rel=1e-7)
    for p in pts:
        assert abs(p.u.u12) <= 1e-6 and abs(p.u.u21) <= 1e-6
        assert abs(p.u.u11 * p.u.u22 - 1) <= 1e-6


def test_disjoint_curves_give_nothing():
    red = [ZeroCurve("u12", np.array([[0.0, 0.0], [0.1, 0.0]]), True)]
    blue = [ZeroCurve("u21", np.array([[0.0, 1.0], [0.1, 1.0]]), True)]
    assert find_squeeze_points(red, blue) == []


def test_segment_intersections():
    red = np.array([[[0.0, 0.0], [1.0, 1.0]]])
    blue = np.array([[[0.0, 1.0], [1.0, 0.0]], [[2.0, 2.0], [3.0, 3.0]]])
    assert segment_intersections(red, blue).tolist() == [[0.5, 0.5]]


def test_newton_from_nearby_start():
    x, u = newton_squeeze((1.22, 0.84))
    assert x == pytest.approx(SQUEEZE_UPPER, abs=1e-7)


def test_classes_stable_under_refinement(default_scan):
    fine = default_scan[0]
    coarse = scan(GridSpec(beta0_range=(0.0, 2.0, 100), beta1_range=(-1.6, 1.6, 100)))
    for (b0, b1), _ in REFERENCE_CASES.values():
        labels = []
        for g in (coarse, fine):
            i = int(np.argmin(np.abs(g.beta0 - b0)))
            j = int(np.argmin(np.abs(g.beta1 - b1)))
            labels.append(g.classes[j, i])
        assert labels == ["III", "III"]
