"""Integrator order, conservation, charge law, and gauge checks.

Closed-form oracles: a single eigenmode rotates as exp(-i mu t); a single
field mode follows the 2x2 damped-wave propagator; the charge obeys a
scalar ODE whenever the state stays a shape-invariant eigenmode.
"""

import dataclasses
import math
import types

import numpy as np
import pytest
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from mscavity.drive import PumpSpec, PumpTerm, phi_preset
from mscavity.dynamics import (
    DiagnosticsRow,
    Params,
    SimulationDiverged,
    State,
    canonical_energy,
    check_stability,
    diagnostics_row,
    grad_check,
    make_initial,
    rhs,
    run,
    stability_limit,
    step_rk4,
    total_energy,
)
from mscavity.spectral import (
    BasisFamily,
    SpectralScalar,
    SpectralVector,
    l2_norm,
    make_domain,
)

MU0 = 1.5 * np.pi**2 + 1.0  # lowest eigenvalue for phi = 1 on the unit cube


def small_domain(n=4):
    return make_domain((1.0, 1.0, 1.0), (n, n, n))


def const_pot(dom, coulomb=True):
    pot = phi_preset(dom, "constant", {"value": 1.0})
    if not coulomb:
        pot = dataclasses.replace(pot, coulomb=False)
    return pot


def oscillator_error(dt, t_final=0.2):
    dom = small_domain()
    pot = const_pot(dom, coulomb=False)
    s0 = make_initial(dom, "ground", q=1.0)
    p = Params(dt=dt, t_final=t_final, coulomb=False)
    _, snaps = run(s0, p, None, pot, record_every=10**9)
    final = snaps[-1]
    exact = np.zeros(dom.scalar_shape, dtype=complex)
    exact[0, 0, 0] = np.exp(-1j * MU0 * t_final)
    return float(np.max(np.abs(final.psi.coeffs - exact))), final


def test_rk4_order_on_eigenmode_rotation():
    e1, final = oscillator_error(2e-3)
    e2, _ = oscillator_error(1e-3)
    assert e1 / e2 == pytest.approx(16.0, rel=0.25)
    # only the recorded mode is populated
    assert abs(final.t - 0.2) < 1e-12


def test_rk4_order_on_damped_wave_mode():
    dom = small_domain()
    pot = const_pot(dom, coulomb=False)
    sigma = 0.4
    k2 = 2.0 * np.pi**2  # Maxwell mode (0,1,1)

    def field_error(dt, t_final=0.4):
        a = SpectralVector.zeros(dom, BasisFamily.MAXWELL)
        pi = SpectralVector.zeros(dom, BasisFamily.MAXWELL)
        a.comps[0][0, 0, 0] = 1.0
        pi.comps[0][0, 0, 0] = -0.3
        s = State(a, pi, SpectralScalar.zeros(dom), 0.0)
        p = Params(dt=dt, t_final=t_final, sigma=sigma, coulomb=False)
        _, snaps = run(s, p, None, pot, record_every=10**9)
        prop = expm(np.array([[0.0, 1.0], [-k2, -sigma]]) * t_final)
        want = prop @ np.array([1.0, -0.3])
        got = np.array(
            [snaps[-1].a.comps[0][0, 0, 0], snaps[-1].pi.comps[0][0, 0, 0]]
        )
        return float(np.max(np.abs(got - want)))

    e1 = field_error(4e-3)
    e2 = field_error(2e-3)
    assert e1 / e2 == pytest.approx(16.0, rel=0.3)


def test_rhs_reductions():
    dom = small_domain()
    pot = const_pot(dom, coulomb=False)
    p = Params(dt=1e-3, t_final=1.0, sigma=0.7, coulomb=False)

    # psi = 0: damped vector wave only
    from mscavity.matter import MAXWELL_PARITIES

    s = make_initial(dom, "random", seed=5, q=0.0, a_norm=0.4, pi_norm=0.2)
    da, dpi, dpsi = rhs(s, p, None, pot)
    assert np.max(np.abs(dpsi.coeffs)) == 0.0
    for i in range(3):
        k2 = dom.kappa_sq(MAXWELL_PARITIES[i])
        want = -k2 * s.a.comps[i] - 0.7 * s.pi.comps[i]
        assert np.max(np.abs(dpi.comps[i] - want)) < 1e-12 * max(1.0, np.max(np.abs(want)))
        assert np.max(np.abs(da.comps[i] - s.pi.comps[i])) == 0.0

    # A = Pi = 0, constant potential: the rotation generator drives psi
    # (the current still sources the field, so only dA/dt is zero there)
    s2 = make_initial(dom, "random", seed=6, q=1.0)
    da2, _, dpsi2 = rhs(s2, Params(dt=1e-3, t_final=1.0, coulomb=False), None, pot)
    mu = 0.5 * dom.kappa_sq(("sin",) * 3) + 1.0
    want = -1j * mu * s2.psi.coeffs
    assert np.max(np.abs(dpsi2.coeffs - want)) < 1e-12 * np.max(np.abs(want))
    for c in da2.comps:
        assert np.max(np.abs(c)) == 0.0


def test_undamped_conservation_with_static_pump():
    dom = make_domain((np.pi, np.pi, np.pi), (6, 6, 6))
    pot = phi_preset(dom, "constant", {"value": 1.0})
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.2, 0.0, 0.0),))
    s0 = make_initial(dom, "random", seed=11, q=0.4, a_norm=0.2, pi_norm=0.1)
    p = Params(dt=5e-3, t_final=1.0)
    rows, _ = run(s0, p, pump, pot, record_every=40)
    e = [r.energy_canonical for r in rows]
    drift = max(abs(x - e[0]) for x in e) / abs(e[0])
    assert drift < 1e-6
    assert max(r.div_a_norm for r in rows) < 1e-10


def test_conservation_reported_for_the_flow_actually_run():
    # params.coulomb=False must win over the potential set's coulomb flag in
    # the reported energies, else a coulomb-free run shows phantom drift
    dom = make_domain((np.pi, np.pi, np.pi), (6, 6, 6))
    pot = phi_preset(dom, "constant", {"value": 1.0})
    assert pot.coulomb
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.2, 0.0, 0.0),))
    s0 = make_initial(dom, "random", seed=11, q=0.4, a_norm=0.2, pi_norm=0.1)
    p = Params(dt=5e-3, t_final=1.0, coulomb=False)
    rows, _ = run(s0, p, pump, pot, record_every=40)
    e = [r.energy_canonical for r in rows]
    drift = max(abs(x - e[0]) for x in e) / abs(e[0])
    assert drift < 1e-6


def test_charge_monotone_and_residual_order():
    dom = small_domain()
    pot = const_pot(dom)
    s0 = make_initial(dom, "random", seed=7, q=1.0, a_norm=0.2, pi_norm=0.1)

    def residual(dt):
        p = Params(dt=dt, t_final=0.05, sigma=0.3, eps=0.05, gamma=0.1)
        rows, _ = run(s0, p, None, pot, record_every=1)
        worst = 0.0
        for r0, r1, r2 in zip(rows, rows[1:], rows[2:]):
            f0 = 2.0 * p.eps * r0.energy + 2.0 * p.gamma * r0.energy * r0.charge
            f1 = 2.0 * p.eps * r1.energy + 2.0 * p.gamma * r1.energy * r1.charge
            f2 = 2.0 * p.eps * r2.energy + 2.0 * p.gamma * r2.energy * r2.charge
            res = (r2.charge - r0.charge) / (2.0 * dt) + (f0 + 4.0 * f1 + f2) / 6.0
            worst = max(worst, abs(res))
        qs = [r.charge for r in rows]
        for a, b in zip(qs, qs[1:]):
            assert b <= a + 1e-10 * qs[0]
        return worst

    r1 = residual(1e-3)
    r2 = residual(5e-4)
    order = math.log2(r1 / r2)
    assert order >= 3.5


def test_charge_ode_oracle_agreement():
    # ground eigenmode with coulomb off stays shape-invariant, so
    # E = mu Q and the charge obeys dQ/dt = -2 eps mu Q - 2 gamma mu Q^2
    dom = small_domain()
    pot = const_pot(dom, coulomb=False)
    s0 = make_initial(dom, "ground", q=1.0)
    eps, gamma = 0.05, 0.1
    p = Params(dt=2e-3, t_final=1.0, eps=eps, gamma=gamma, coulomb=False)
    rows, _ = run(s0, p, None, pot, record_every=100)

    sol = solve_ivp(
        lambda t, y: [-2.0 * eps * MU0 * y[0] - 2.0 * gamma * MU0 * y[0] ** 2],
        (0.0, 1.0),
        [1.0],
        rtol=1e-12,
        atol=1e-14,
        dense_output=True,
    )
    for r in rows:
        want = float(sol.sol(r.t)[0])
        assert abs(r.charge - want) < 1e-5


def test_phase_rotation_leaves_diagnostics_invariant():
    dom = small_domain()
    pot = const_pot(dom)
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.1, 1.3, 0.2),))
    p = Params(dt=2e-3, t_final=0.1, sigma=0.2, eps=0.03, gamma=0.05, eta=0.1)
    s0 = make_initial(dom, "random", seed=9, q=0.8, a_norm=0.3, pi_norm=0.2)
    s1 = s0.copy()
    s1.psi = SpectralScalar(dom, np.exp(1.234j) * s0.psi.coeffs)
    rows0, _ = run(s0, p, pump, pot, record_every=10)
    rows1, _ = run(s1, p, pump, pot, record_every=10)
    for r0, r1 in zip(rows0, rows1):
        for v0, v1 in zip(r0.values(), r1.values()):
            assert abs(v0 - v1) <= 1e-9 * (1.0 + abs(v0))


def test_gauge_preserved_along_driven_damped_run():
    dom = small_domain(5)
    pot = const_pot(dom)
    pump = PumpSpec(dom, (PumpTerm((1, 1, 2), (0.4, 1.0, 0.0), 0.3, 2.1, 0.0),))
    p = Params(dt=2e-3, t_final=0.3, sigma=0.5, eps=0.02, gamma=0.1)
    s0 = make_initial(dom, "random", seed=13, q=1.0, a_norm=0.4, pi_norm=0.3)
    rows, snaps = run(s0, p, pump, pot, record_every=15)
    for r in rows:
        assert r.div_a_norm < 1e-10
        assert r.boundary_residual < 1e-8 * max(1.0, r.state_norm_sq)
        assert all(np.isfinite(v) for v in r.values())
    assert snaps[-1].t == pytest.approx(0.3)


def test_run_zero_duration_and_record_cadence():
    dom = small_domain()
    pot = const_pot(dom)
    s0 = make_initial(dom, "ground")
    rows, snaps = run(s0, Params(dt=1e-3, t_final=0.0), None, pot)
    assert len(rows) == 1 and rows[0].t == 0.0
    assert len(snaps) == 1

    rows, _ = run(s0, Params(dt=1e-3, t_final=0.01), None, pot, record_every=3)
    recorded = [round(r.t / 1e-3) for r in rows]
    assert recorded == [0, 3, 6, 9, 10]


def test_step_dt_zero_is_identity():
    dom = small_domain()
    pot = const_pot(dom)
    s0 = make_initial(dom, "random", seed=1, q=1.0, a_norm=0.1)
    p0 = types.SimpleNamespace(
        dt=0.0, sigma=0.0, eps=0.0, gamma=0.0, coulomb=True, dealias=False
    )
    s1 = step_rk4(s0, p0, None, pot)
    assert np.array_equal(s1.psi.coeffs, s0.psi.coeffs)
    assert s1.t == s0.t


def test_divergence_reported_with_partial_rows():
    dom = small_domain()
    pot = const_pot(dom, coulomb=False)
    s0 = make_initial(dom, "ground")
    s0.pi.comps[0][0, 0, 0] = 1e300
    p = Params(dt=1e-3, t_final=0.5, coulomb=False)
    with pytest.raises(SimulationDiverged) as exc:
        run(s0, p, None, pot, record_every=1)
    assert exc.value.time >= 0.0
    assert len(exc.value.rows) >= 1


def test_param_validation_and_stability_gate():
    dom = small_domain(8)
    with pytest.raises(ValueError):
        Params(dt=-1.0, t_final=1.0)
    with pytest.raises(ValueError):
        Params(dt=1e-3, t_final=1.0, sigma=-0.1)
    limit = stability_limit(dom, 0.0)
    bad = Params(dt=0.6 * limit, t_final=1.0)
    with pytest.raises(ValueError, match="stability"):
        check_stability(bad, dom)
    pot = const_pot(dom)
    s0 = make_initial(dom, "ground")
    with pytest.raises(ValueError, match="stability"):
        run(s0, bad, None, pot)


def test_make_initial_determinism_and_scaling():
    dom = small_domain(6)
    s1 = make_initial(dom, "random", seed=21, q=0.7, a_norm=0.5, pi_norm=0.25)
    s2 = make_initial(dom, "random", seed=21, q=0.7, a_norm=0.5, pi_norm=0.25)
    assert np.array_equal(s1.psi.coeffs, s2.psi.coeffs)
    for c1, c2 in zip(s1.a.comps, s2.a.comps):
        assert np.array_equal(c1, c2)

    q = float(np.sum(np.abs(s1.psi.coeffs) ** 2))
    assert q == pytest.approx(0.7, rel=1e-12)
    assert math.sqrt(sum(float(np.sum(c**2)) for c in s1.a.comps)) == pytest.approx(0.5)

    s10 = make_initial(dom, "scaled", seed=21, q=0.7, a_norm=0.5, pi_norm=0.25, scale=10.0)
    q10 = float(np.sum(np.abs(s10.psi.coeffs) ** 2))
    assert q10 == pytest.approx(100.0 * q, rel=1e-12)
    for c1, c10 in zip(s1.pi.comps, s10.pi.comps):
        assert np.max(np.abs(c10 - 10.0 * c1)) < 1e-12

    with pytest.raises(ValueError):
        make_initial(dom, "warm")


def test_dealias_mask_invariant_under_flow():
    dom = small_domain(6)
    pot = const_pot(dom)
    s0 = make_initial(dom, "random", seed=3, q=1.0, a_norm=0.3, band_frac=1)
    p = Params(dt=2e-3, t_final=0.05, sigma=0.1, dealias=True)
    _, snaps = run(s0, p, None, pot, record_every=10**9)
    final = snaps[-1]
    mask = dom.dealias_mask(("sin",) * 3)
    assert np.max(np.abs(np.where(mask, 0.0, final.psi.coeffs))) == 0.0


def test_grad_check_full_state():
    dom = small_domain(5)
    pot = const_pot(dom)
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.2, 0.0, 0.1),))
    s = make_initial(dom, "random", seed=17, q=0.9, a_norm=0.4, pi_norm=0.3)
    rep = grad_check(s, pump, pot, fd_step=1e-5, n_probe=16)
    for key in ("A", "Pi", "psi_re", "psi_im"):
        assert rep[key] < 1e-6
    assert rep["laplacian_quadratic"] < 1e-8


def test_grad_check_quadratic_part_exact():
    dom = small_domain(5)
    pot = const_pot(dom)
    s = make_initial(dom, "random", seed=19, q=0.0, a_norm=0.5, pi_norm=0.4)
    rep = grad_check(s, None, pot, fd_step=1e-4, n_probe=12)
    assert rep["A"] < 1e-9
    assert rep["Pi"] < 1e-9
