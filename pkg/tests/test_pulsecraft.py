import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from quadsqueeze.errors import InvalidLambda, NotEquidiagonalCore
from quadsqueeze.propagator import propagate, segment_matrix
from quadsqueeze.pulsecraft import (PulsePlan, design_lambda, plan_product, squeezed_fourier,
                                    symmetric_product, two_step_squeeze)
from quadsqueeze.sym2core import Mat2, random_equidiagonal_symplectic, random_symplectic


def test_squeezed_fourier_values():
    assert squeezed_fourier(1.0, 1) == Mat2(0.0, 1.0, -1.0, 0.0)
    assert squeezed_fourier(2.0, -1) == Mat2(0.0, -0.5, 2.0, 0.0)
    assert squeezed_fourier(3.7).det == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(ValueError):
        squeezed_fourier(0.0)


def test_quarter_period_realizes_fourier():
    k = 1.7
    u = propagate(two_step_squeeze(k, k).profile(), 0.0, math.pi / (2 * k))
    assert u.distance(squeezed_fourier(k)) < 1e-9


def test_two_step_values():
    plan = two_step_squeeze(1.0, 2.0)
    assert plan.predicted == Mat2(-2.0, 0.0, 0.0, -0.5)
    assert plan.target_lambda == -2.0
    assert plan.jumps == 3
    assert plan_product(plan).distance(plan.predicted) < 1e-12
    same = two_step_squeeze(1.3, 1.3)
    assert same.predicted.distance(Mat2(-1.0, 0.0, 0.0, -1.0)) < 1e-15


@given(st.floats(0.1, 10), st.floats(0.1, 10))
def test_two_step_closed_form(k1, k2):
    plan = two_step_squeeze(k1, k2)
    assert plan_product(plan).distance(plan.predicted) <= 1e-12 * max(k1 / k2, k2 / k1)
    a, d = plan.predicted.u11, plan.predicted.u22
    assert a == pytest.approx(-k2 / k1) and a * d == pytest.approx(1.0, abs=1e-15)


def test_plan_reintegrates():
    plan = two_step_squeeze(1.0, 3.0)
    u = propagate(plan.profile(), 0.0, plan.duration)
    assert u.distance(plan.predicted) < 1e-10


def test_design_lambda():
    plan = design_lambda(2.0)
    assert {tuple(s) for s in plan.segments} == {(math.pi / 2, 1.0), (math.pi / 4, 4.0)}
    assert plan.predicted == Mat2(-2.0, 0.0, 0.0, -0.5)
    assert plan.requested_lambda == 2.0
    assert design_lambda(-1.0).predicted == Mat2(-1.0, 0.0, 0.0, -1.0)
    p = design_lambda(4.394)
    assert p.predicted.u11 == pytest.approx(-4.394) and p.predicted.u22 == pytest.approx(-0.2276, abs=1e-4)
    with pytest.raises(InvalidLambda):
        design_lambda(0.0)


def test_plan_json_roundtrip():
    plan = design_lambda(3.0)
    doc = json.loads(json.dumps(plan.to_json()))
    assert set(doc) >= {"segments", "predicted", "target_lambda"}
    again = PulsePlan.from_json(doc)
    assert again.segments == plan.segments and again.predicted == plan.predicted


def test_symmetric_product_examples():
    r = segment_matrix(0.6, 0.9)
    assert symmetric_product(Mat2.identity(), [r]).distance(r @ r) < 1e-15
    u = symmetric_product(Mat2(0.0, 1.0, -1.0, 0.0), [Mat2(0.0, 2.0, -0.5, 0.0)])
    assert u.u11 == u.u22 and u.trace == 0.0


def test_symmetric_product_rejects():
    with pytest.raises(NotEquidiagonalCore):
        symmetric_product(Mat2(2.0, 0.0, 0.0, 0.5), [])
    with pytest.raises(NotEquidiagonalCore):
        symmetric_product(Mat2.identity(), [Mat2(2.0, 0.0, 0.0, 0.5)])


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 5))
def test_symmetric_product_equidiagonal(seed, n):
    rng = np.random.default_rng(seed)
    core = random_equidiagonal_symplectic(rng, 2.0)
    wings = [segment_matrix(rng.uniform(-3, 3), rng.uniform(0.05, 1.5)) for _ in range(n)]
    u = symmetric_product(core, wings)
    assert abs(u.u11 - u.u22) <= 1e-12 * max(1.0, u.max_abs())
    assert abs(u.det - 1) <= 1e-10 * max(1.0, u.max_abs() ** 2)


def test_general_wings_break_equidiagonality(rng):
    # the wing-side requirement is real: v A v is not equidiagonal for generic v
    core = random_equidiagonal_symplectic(rng)
    v = random_symplectic(rng)
    u = v @ core @ v
    assert abs(u.u11 - u.u22) > 1e-3
