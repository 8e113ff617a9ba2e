import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from fcpm.contact import (
    ContactParams,
    ContactState,
    GapError,
    beta_b,
    classify,
    complementarity_residual,
    complementarity_residual_max,
    gap,
    linearize_cell,
)

P = ContactParams(F=0.5, c=1.0, K_n=2.0, du_max=0.5)


def test_params_validation():
    with pytest.raises(ValueError):
        ContactParams(F=-1.0)
    with pytest.raises(ValueError):
        ContactParams(c=0.0)
    with pytest.raises(ValueError):
        ContactParams(du_max=0.0)
    with pytest.raises(ValueError):
        ContactParams(K_n=-1.0)


# -- gap -----------------------------------------------------------------------


def test_gap_reference_state():
    p = ContactParams(g0=1e-3)
    assert gap([0.0], 0.0, p) == 1e-3


def test_gap_zero_stiffness_full_closure():
    p = ContactParams(K_n=0.0, du_max=2e-4, g0=1e-3)
    assert gap([0.0], -1.0, p) == pytest.approx(1e-3 - 2e-4)


def test_gap_no_dilation_ignores_tangential_jump():
    assert gap([5.0], -1.0, P) == gap([0.0], -1.0, P)


def test_gap_dilation():
    p = ContactParams(theta=0.1, K_n=2.0, du_max=0.5)
    assert gap([2.0], 0.0, p) == pytest.approx(2.0 * math.tan(0.1))


def test_gap_nonphysical_state():
    with pytest.raises(GapError):
        gap([0.0], 1.0, P)  # du_max*K_n - lam_n = 0


def test_beta_b_matches_gap_derivative():
    lam, h = -0.7, 1e-6
    fd = (gap([0.0], lam + h, P) - gap([0.0], lam - h, P)) / (2 * h)
    assert beta_b(lam, P) == pytest.approx(fd, rel=1e-8)
    assert beta_b(lam, P) == pytest.approx(0.5**2 * 2.0 / (1.0 + 0.7) ** 2)


# -- classification ------------------------------------------------------------------


def test_classify_open_separated():
    cell = classify([0.0, 0.0], [1.0, 0.0], [0.0], P)
    assert cell.state is ContactState.OPEN and not cell.closed


def test_classify_stick():
    cell = classify([-1.0, 0.0], [gap([0.0], -1.0, P), 0.0], [0.0], P)
    assert cell.state is ContactState.STICK and cell.closed
    assert cell.b0 == 0.5


def test_classify_slide():
    cell = classify([-1.0, 0.5], [gap([0.0], -1.0, P), 0.0], [0.2], P)
    assert cell.state is ContactState.SLIDE


def test_classify_rejects_nan():
    with pytest.raises(ValueError):
        classify([np.nan, 0.0], [0.0, 0.0], [0.0], P)
    with pytest.raises(ValueError):
        classify([0.0, 0.0], [0.0, 0.0], [np.nan], P)


def test_cell_invariants():
    lam0 = np.array([-0.8, 0.3])
    cell = classify(lam0, [-0.1, 0.0], [0.05], P)
    assert cell.b0 == -P.F * lam0[0]
    assert cell.eps_mismatch == pytest.approx(abs(lam0[1]) - P.F * abs(lam0[0]))
    assert cell.beta_B == pytest.approx(P.du_max**2 * P.K_n / (P.du_max * P.K_n - lam0[0]) ** 2)


def test_open_threshold():
    p = ContactParams(F=0.5, eps_open=0.1)
    assert classify([-0.1, 0.0], [0.0, 0.0], [0.0], p).state is ContactState.OPEN
    assert classify([-0.3, 0.0], [0.0, 0.0], [0.0], p).state is ContactState.STICK


@settings(max_examples=100, deadline=None)
@given(
    ln=st.floats(-10, 10), lt=st.floats(-10, 10), un=st.floats(-1, 1), dut=st.floats(-10, 10),
    s=st.floats(0.1, 10),
)
def test_classify_scale_consistent(ln, lt, un, dut, s):
    # tractions, velocities and the constant c scale together; c*du_t scales like lam
    p1 = ContactParams(F=0.5, c=1.0, K_n=0.0, du_max=1.0)
    p2 = ContactParams(F=0.5, c=s, K_n=0.0, du_max=1.0)
    a = classify([ln, lt], [un, 0.0], [dut], p1)
    b = classify([s * ln, s * lt], [un, 0.0], [dut], p2)
    assume(abs(abs(lt + dut) - 0.5 * -ln) > 1e-9 and abs(ln) > 1e-9)
    assert a.state is b.state


# -- residual -------------------------------------------------------------------------


def test_residual_open_equilibrium():
    cell = classify([0.0, 0.0], [1.0, 0.0], [0.0], P)
    np.testing.assert_array_equal(complementarity_residual(cell, [0, 0], [1, 0], [0], P), 0.0)


def test_residual_stick_at_contact():
    g = gap([0.0], -1.0, P)
    cell = classify([-1.0, 0.0], [g, 0.0], [0.0], P)
    assert complementarity_residual(cell, [-1.0, 0.0], [g, 0.0], [0.0], P)[0] == 0.0
    assert complementarity_residual_max([-1.0, 0.0], [g, 0.0], [0.0], P)[0] == 0.0


def test_residual_grows_with_c_under_penetration():
    vals = []
    for c in (1.0, 10.0, 100.0):
        p = ContactParams(F=0.5, c=c, K_n=0.0, du_max=1.0)
        g = gap([0.0], -1.0, p)
        vals.append(abs(complementarity_residual_max([-1.0, 0.0], [g - 0.1, 0.0], [0.0], p)[0]))
    assert vals[0] < vals[1] < vals[2]


@settings(max_examples=100, deadline=None)
@given(ln=st.floats(-5, 5), lt=st.floats(-5, 5), un=st.floats(-2, 2), dut=st.floats(-5, 5))
def test_frozen_branch_agrees_with_max_form(ln, lt, un, dut):
    p = ContactParams(F=0.5, c=1.0, K_n=2.0, du_max=0.5)
    lam, jump = [ln, lt], [un, 0.0]
    cell = classify(lam, jump, [dut], p)
    frozen = complementarity_residual(cell, lam, jump, [dut], p)
    mx = complementarity_residual_max(lam, jump, [dut], p)
    np.testing.assert_allclose(frozen, mx, rtol=1e-12, atol=1e-12)


# -- linearization ----------------------------------------------------------------------


def _state(kind, D):
    rng = np.random.default_rng({"open": 1, "stick": 2, "slide": 3}[kind] + 10 * D)
    p = ContactParams(F=0.6, c=0.7, K_n=3.0, du_max=0.4, theta=0.05)
    for _ in range(1000):
        lam = rng.uniform(-2, 1, D)
        jump = rng.uniform(-1, 1, D)
        dut = rng.uniform(-1, 1, D - 1)
        if abs(lam[0]) < 1e-2:
            continue
        cell = classify(lam, jump, dut, p)
        if cell.state.value != kind:
            continue
        ny = np.linalg.norm(cell.y)
        margin = min(abs(cell.b0 - ny), abs(lam[0] + p.c * (jump[0] - cell.gap0)))
        if margin > 1e-2:
            return cell, lam, jump, dut, p
    raise AssertionError("no interior state found")


@pytest.mark.parametrize("D", [2, 3])
@pytest.mark.parametrize("kind", ["open", "stick", "slide"])
def test_linearization_matches_finite_differences(kind, D):
    cell, lam, jump, dut, p = _state(kind, D)
    A, B = linearize_cell(cell, p)
    h = 1e-7

    def R(l, j, d):
        return complementarity_residual(cell, l, j, d, p)

    fdA = np.zeros((D, D))
    fdB = np.zeros((D, D))
    for k in range(D):
        e = np.zeros(D)
        e[k] = h
        fdA[:, k] = (R(lam + e, jump, dut) - R(lam - e, jump, dut)) / (2 * h)
        if k == 0:
            fdB[:, 0] = (R(lam, jump + e, dut) - R(lam, jump - e, dut)) / (2 * h)
        else:
            # increment and total tangential jump move together
            fdB[:, k] = (R(lam, jump + e, dut + e[1:]) - R(lam, jump - e, dut - e[1:])) / (2 * h)
    scale = max(1.0, np.abs(A).max(), np.abs(B).max())
    np.testing.assert_allclose(A, fdA, atol=1e-6 * scale)
    np.testing.assert_allclose(B, fdB, atol=1e-6 * scale)


def test_symbolic_open():
    cell = classify([0.0, 0.0], [1.0, 0.0], [0.0], P)
    A, B = linearize_cell(cell, P)
    np.testing.assert_array_equal(A, np.eye(2))
    np.testing.assert_array_equal(B, 0.0)


def test_symbolic_stick():
    p = ContactParams(F=0.5, c=2.0, K_n=2.0, du_max=0.5)
    lam0 = np.array([-1.0, 0.1])
    cell = classify(lam0, [gap([0.0], -1.0, p) - 0.2, 0.0], [0.05], p)
    assert cell.state is ContactState.STICK and cell.closed
    A, B = linearize_cell(cell, p)
    c, bb = p.c, cell.beta_B
    np.testing.assert_array_equal(A, [[c * bb, 0.0], [-c * p.F * 0.05, 0.0]])
    np.testing.assert_array_equal(B, [[-c, 0.0], [0.0, c * cell.b0]])


def test_symbolic_slide():
    p = ContactParams(F=0.5, c=1.0, K_n=2.0, du_max=0.5)
    lam0 = np.array([-1.0, 0.5])
    cell = classify(lam0, [gap([0.0], -1.0, p) - 0.2, 0.0], [0.3], p)
    assert cell.state is ContactState.SLIDE
    A, B = linearize_cell(cell, p)
    y, lam_t, b0 = 0.8, 0.5, 0.5
    np.testing.assert_allclose(A, [[p.c * cell.beta_B, 0.0],
                                   [-p.F * y, b0 - y - lam_t]], rtol=1e-15)
    np.testing.assert_allclose(B, [[-p.c, 0.0], [0.0, p.c * (b0 - lam_t)]], atol=1e-15)
    assert abs(np.linalg.det(A)) > 0


def test_stick_zero_velocity_singular():
    cell = classify([-1.0, 0.0], [gap([0.0], -1.0, P) - 0.1, 0.0], [0.0], P)
    A, _ = linearize_cell(cell, P)
    s = np.linalg.svd(A, compute_uv=False)
    assert s[-1] <= 1e-12 * s[0]


def test_slide_without_direction_raises():
    cell = classify([-1.0, 0.0], [0.0, 0.0], [0.0], ContactParams(F=0.0, eps_open=-0.0))
    assert cell.state is ContactState.OPEN  # b0 = 0 counts as open
    from dataclasses import replace
    bad = replace(cell, state=ContactState.SLIDE)
    with pytest.raises(ZeroDivisionError):
        linearize_cell(bad, P)
