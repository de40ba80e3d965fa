"""Acceptance checklist: one test per claim, one printed line per result.

Each test exercises the full stack at desk scale and prints a single
[PASS]/[FAIL] line with the measured numbers, then asserts.  Run with
``pytest tests/test_acceptance.py -v -s`` to see the lines as they appear.
The heavyweight entries (conservation at 16 modes per axis, the absorbing
ensemble) stay under ten minutes each.
"""

import dataclasses
import math

import numpy as np
import yaml

from mscavity.cli import main, read_csv, snapshot_load, snapshot_save
from mscavity.drive import PumpSpec, PumpTerm
from mscavity.dynamics import (
    Params,
    grad_check,
    make_initial,
    run,
    state_norm_sq,
)
from mscavity.estimates import (
    absorbing_experiment,
    charge_ode_oracle,
    charge_residual,
    lambda_min,
    lambda_min_iterative,
    lyapunov_fit,
    rayleigh_equivalence,
    relative_bound,
)
from mscavity.matter import MAXWELL_PARITIES, PotentialSet
from mscavity.spectral import (
    SCALAR_PARITY,
    BasisFamily,
    BoxDomain,
    SpectralScalar,
    SpectralVector,
    curl,
    divergence,
    gradient,
    l2_norm,
    laplacian,
)
from mscavity.gauge import leray_project


def _criterion(num, name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}: {detail}"
    print(line)
    assert ok, line


def _const_pots(dom, value=1.0, coulomb=False):
    return PotentialSet(dom, np.full(dom.npts, value), coulomb=coulomb)


# -- 1: operator exactness ---------------------------------------------------------


def test_01_operator_exactness():
    dom = BoxDomain((1.0, 2.0, 0.5), (5, 4, 6))
    worst = 0.0

    # Laplacian eigenmode, one mode per axis choice
    c = np.zeros(dom.scalar_shape)
    c[2, 1, 3] = 1.0
    f = SpectralScalar(dom, c)
    k2 = (3 * math.pi / 1.0) ** 2 + (2 * math.pi / 2.0) ** 2 + (4 * math.pi / 0.5) ** 2
    lap = laplacian(f)
    worst = max(worst, float(np.max(np.abs(lap.coeffs + k2 * c))) / k2)

    # gradient amplitudes on the same mode: one coefficient, value kappa_i
    g = gradient(f)
    kappas = (3 * math.pi / 1.0, 2 * math.pi / 2.0, 4 * math.pi / 0.5)
    for i, kap in enumerate(kappas):
        nz = np.abs(g.comps[i])
        worst = max(worst, abs(float(nz.max()) - kap) / kap)
        worst = max(worst, (float(nz.sum()) - float(nz.max())) / kap)

    # divergence of gradient equals Laplacian on a random scalar
    rng = np.random.default_rng(0)
    fr = SpectralScalar(dom, rng.standard_normal(dom.scalar_shape))
    dg = divergence(gradient(fr))
    lf = laplacian(fr)
    scale = float(np.max(np.abs(lf.coeffs)))
    worst = max(worst, float(np.max(np.abs(dg.coeffs - lf.coeffs))) / scale)

    # curl of a gradient vanishes
    cg = curl(gradient(fr))
    worst = max(worst, float(max(np.max(np.abs(c)) for c in cg.comps)) / scale)

    # Leray projector: idempotent and divergence-free output
    comps = tuple(
        rng.standard_normal(dom.coeff_shape(MAXWELL_PARITIES[i])) for i in range(3)
    )
    v = SpectralVector(dom, BasisFamily.MAXWELL, comps)
    pv = leray_project(v)
    ppv = leray_project(pv)
    vnorm = l2_norm(v)
    worst = max(
        worst,
        float(max(np.max(np.abs(a - b)) for a, b in zip(ppv.comps, pv.comps))) / vnorm,
    )
    worst = max(worst, l2_norm(divergence(pv)) / vnorm)

    _criterion(1, "operator exactness", worst < 1e-12, f"worst deviation {worst:.2e}")


# -- 2: integrator order -----------------------------------------------------------


def _schrodinger_error(dt):
    dom = BoxDomain((1.0, 1.0, 1.0), (4, 4, 4))
    pots = _const_pots(dom)
    s0 = make_initial(dom, "ground", q=1.0)
    p = Params(dt=dt, t_final=0.5, coulomb=False)
    rows, snaps = run(s0, p, None, pots, record_every=10**9)
    mu = 1.5 * math.pi**2 + 1.0
    exact = s0.psi.coeffs * np.exp(-1j * mu * p.t_final)
    return float(np.max(np.abs(snaps[-1].psi.coeffs - exact)))


def _wave_error(dt):
    dom = BoxDomain((math.pi,) * 3, (4, 4, 4))
    pots = _const_pots(dom)
    sigma = 0.8
    s0 = make_initial(dom, "random", seed=2, q=0.0, a_norm=0.7, pi_norm=0.5)
    p = Params(dt=dt, t_final=0.5, sigma=sigma, coulomb=False)
    _, snaps = run(s0, p, None, pots, record_every=10**9)
    end = snaps[-1]
    err = 0.0
    for i in range(3):
        k2 = dom.kappa_sq(MAXWELL_PARITIES[i])
        r = np.lib.scimath.sqrt(0.25 * sigma**2 - k2)
        t = p.t_final
        decay = math.exp(-0.5 * sigma * t)
        ch, sh = np.cosh(r * t), np.sinh(r * t) / r
        a0, pi0 = s0.a.comps[i], s0.pi.comps[i]
        a_exact = (decay * (a0 * (ch + 0.5 * sigma * sh) + pi0 * sh)).real
        pi_exact = (decay * (-k2 * a0 * sh + pi0 * (ch - 0.5 * sigma * sh))).real
        err = max(err, float(np.max(np.abs(end.a.comps[i] - a_exact))))
        err = max(err, float(np.max(np.abs(end.pi.comps[i] - pi_exact))))
    return err


def test_02_integrator_order():
    rs = _schrodinger_error(4e-3) / _schrodinger_error(2e-3)
    rw = _wave_error(4e-3) / _wave_error(2e-3)
    ok = 14.0 <= rs <= 18.0 and 14.0 <= rw <= 18.0
    _criterion(2, "integrator order", ok,
               f"error ratios per halving: phase {rs:.2f}, damped wave {rw:.2f}")


# -- 3: charge law -----------------------------------------------------------------


def test_03_charge_law():
    dom = BoxDomain((1.0, 1.0, 1.0), (5, 5, 5))
    pots = _const_pots(dom)
    s0 = make_initial(dom, "random", seed=7, q=1.0, a_norm=0.2, pi_norm=0.1)

    def residual_and_monotone(dt):
        p = Params(dt=dt, t_final=0.05, sigma=0.3, eps=0.05, gamma=0.1,
                   coulomb=False)
        rows, _ = run(s0, p, None, pots, record_every=1)
        qs = [r.charge for r in rows]
        mono = all(b <= a + 1e-10 * qs[0] for a, b in zip(qs, qs[1:]))
        return charge_residual(rows, p.eps, p.gamma, dt), mono

    r1, mono = residual_and_monotone(1e-3)
    r2, _ = residual_and_monotone(5e-4)
    order = math.log2(r1 / r2)

    dom6 = BoxDomain((1.0, 1.0, 1.0), (6, 6, 6))
    pots6 = _const_pots(dom6)
    p = Params(dt=1e-3, t_final=2.0, eps=0.1, gamma=0.1, coulomb=False)
    oracle = charge_ode_oracle(dom6, pots6, p, 1.0)
    rows, _ = run(make_initial(dom6, "ground", q=1.0), p, None, pots6,
                  record_every=50)
    rel = max(abs(r.charge - oracle(r.t)) for r in rows)

    ok = order >= 3.5 and mono and rel < 1e-5
    _criterion(3, "charge law", ok,
               f"residual order {order:.2f}, monotone {mono}, "
               f"oracle max error {rel:.2e}")


# -- 4: conservation ---------------------------------------------------------------


def test_04_undamped_conservation():
    dom = BoxDomain((math.pi,) * 3, (16, 16, 16))
    pots = _const_pots(dom, coulomb=True)
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.2, 0.0, 0.0),))
    s0 = make_initial(dom, "random", seed=11, q=0.4, a_norm=0.2, pi_norm=0.1)
    p = Params(dt=1e-3, t_final=5.0, coulomb=True)
    rows, _ = run(s0, p, pump, pots, record_every=100)
    e = [r.energy_canonical for r in rows]
    drift = max(abs(x - e[0]) for x in e) / abs(e[0])
    gauge = max(r.div_a_norm for r in rows)
    ok = drift < 1e-6 and gauge < 1e-10
    _criterion(4, "undamped conservation", ok,
               f"relative drift {drift:.2e} over T=5, div residual {gauge:.2e}")


# -- 5: Hamiltonian structure --------------------------------------------------------


def test_05_functional_gradients():
    dom = BoxDomain((1.0, 1.0, 1.0), (4, 4, 4))
    pots = _const_pots(dom, coulomb=True)
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.15, 0.7, 0.1),))
    s = make_initial(dom, "random", seed=4, q=0.6, a_norm=0.3, pi_norm=0.2)
    s.t = 0.3
    report = grad_check(s, pump, pots, seed=1)
    worst = max(report.values())
    _criterion(5, "functional gradients", worst < 1e-6,
               f"max relative error {worst:.2e} across {sorted(report)}")


# -- 6: spectral gap -----------------------------------------------------------------


def test_06_spectral_gap():
    cube = BoxDomain((1.0, 1.0, 1.0), (6, 6, 6))
    exact = lambda_min(cube)
    gap_exact = abs(exact - 2.0 * math.pi**2)
    gap_iter = abs(exact - lambda_min_iterative(cube))
    shapes = [(1.0, 1.0, 1.0), (2.0, 1.0, 1.0), (1.0, 3.0, 1.0),
              (0.5, 0.7, 1.3), (5.0, 4.0, 3.0)]
    all_pos = all(lambda_min(BoxDomain(sh, (4, 4, 4))) > 0.0 for sh in shapes)
    ok = gap_exact < 1e-10 and gap_iter < 1e-8 and all_pos
    _criterion(6, "spectral gap", ok,
               f"unit-cube gap {gap_exact:.2e}, iterative gap {gap_iter:.2e}, "
               f"positive on {len(shapes)} shapes {all_pos}")


# -- 7: norm equivalences --------------------------------------------------------------


def test_07_norm_equivalences():
    ok = True
    details = []
    for n in (4, 6):
        dom = BoxDomain((1.0, 1.0, 1.0), (n, n, n))
        phi = np.full(dom.npts, 1.0)
        for order in ("H1", "H2"):
            kw = {} if order == "H1" else {"phi_samples": phi}
            rep0 = rayleigh_equivalence(dom, None, order, **kw)
            if order == "H1":
                ok &= abs(rep0.c_low - 1.0) < 1e-12 and abs(rep0.c_high - 1.0) < 1e-12
            else:
                ok &= rep0.c_low > 0.0 and math.isfinite(rep0.c_high)
            c_lows = []
            for seed in range(6):
                a = make_initial(dom, "random", seed=seed, q=1.0,
                                 a_norm=0.3 + 0.3 * seed).a
                rep = rayleigh_equivalence(dom, a, order, **kw)
                ok &= rep.c_low > 0.0 and math.isfinite(rep.c_high)
                c_lows.append(rep.c_low)
            details.append(f"{order}@{n}: min c1 {min(c_lows):.3f}")
    _criterion(7, "norm equivalences", ok, "; ".join(details))


# -- 8: relative bound -----------------------------------------------------------------


def test_08_relative_bound():
    ok = True
    worst_assym = 0.0
    finite = True
    for n in (4, 6):
        dom = BoxDomain((1.0, 1.0, 1.0), (n, n, n))
        zero = SpectralVector.zeros(dom, BasisFamily.MAXWELL)
        rep0 = relative_bound(dom, zero)
        ok &= all(c == 0.0 for c in rep0.constants)
        for seed in range(6):
            a = make_initial(dom, "random", seed=seed, q=1.0,
                             a_norm=0.3 + 0.3 * seed).a
            rep = relative_bound(dom, a)
            finite &= all(math.isfinite(c) and c >= 0.0 for c in rep.constants)
            worst_assym = max(worst_assym, rep.asymmetry)
    ok &= finite and worst_assym < 1e-10
    _criterion(8, "relative bound", ok,
               f"finite {finite}, zero-field constants zero, "
               f"max asymmetry {worst_assym:.2e}")


# -- 9: Lyapunov decay -----------------------------------------------------------------


def test_09_lyapunov_decay():
    dom = BoxDomain((math.pi,) * 3, (6, 6, 6))
    pots = _const_pots(dom)
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.2, 0.9, 0.0),))
    p = Params(dt=5e-3, t_final=20.0, sigma=0.1, eps=0.1, gamma=0.1, eta=0.05,
               coulomb=False)
    s0 = make_initial(dom, "random", seed=13, q=0.8, a_norm=0.4, pi_norm=0.3)
    rows, _ = run(s0, p, pump, pots, record_every=10)
    fit = lyapunov_fit(rows)
    phis = np.array([r.lyapunov for r in rows])
    ts = np.array([r.t for r in rows])
    env = phis[0] * np.exp(-fit.beta * ts) + fit.floor
    holds = bool(np.all(phis <= env + 1e-9 * max(abs(phis[0]), 1.0)))
    ok = fit.beta > 0.0 and math.isfinite(fit.c_p) and holds and not fit.degenerate
    _criterion(9, "Lyapunov decay", ok,
               f"beta {fit.beta:.3f}, c_p {fit.c_p:.3e}, envelope holds {holds}")


# -- 10: absorbing set -----------------------------------------------------------------


def test_10_absorbing_set():
    dom = BoxDomain((math.pi,) * 3, (3, 3, 3))
    pots = _const_pots(dom, value=2.0)
    pump = PumpSpec(dom, (PumpTerm((0, 1, 1), (1.0, 0.0, 0.0), 0.1, 0.9, 0.0),))
    p = Params(dt=4e-3, t_final=160.0, sigma=1.0, eps=0.0, gamma=4.0, eta=0.1,
               coulomb=False)
    rep = absorbing_experiment(dom, pots, pump, p, (0.1, 1.0, 10.0),
                               record_every=25, seed=5,
                               q=1.0, a_norm=0.05, pi_norm=0.05)
    entries = list(rep.entry_times)
    mono = all(a <= b + 1e-12 for a, b in zip(entries, entries[1:]))
    ok = (not rep.diverged and rep.spread < 0.2 and mono
          and all(rep.stayed_inside))
    _criterion(10, "absorbing set", ok,
               f"bound {rep.b_hat:.3e}, spread {rep.spread:.3f}, "
               f"entries {' '.join(f'{t:.1f}' for t in entries)}, "
               f"stayed {all(rep.stayed_inside)}")


# -- 11: reproducibility ---------------------------------------------------------------


def test_11_reproducibility(tmp_path):
    cfg = {
        "domain": {"lengths": [math.pi, math.pi, math.pi], "modes": [4, 4, 4]},
        "params": {"dt": 5e-3, "t_final": 0.1, "sigma": 0.2, "eps": 0.05,
                   "gamma": 0.1, "eta": 0.05, "coulomb": False, "seed": 21},
        "potential": {"preset": "well",
                      "params": {"offset": 0.5, "strength": 1.0}},
        "pump": [{"mode": [0, 1, 1], "weights": [1.0, 0.0, 0.0],
                  "amplitude": 0.2, "omega": 0.9}],
        "initial": {"kind": "random", "q": 0.5, "a_norm": 0.2, "pi_norm": 0.1},
        "output": {"directory": "", "record_every": 2},
    }
    outs = []
    for name in ("a", "b"):
        cfg["output"]["directory"] = str(tmp_path / name)
        path = tmp_path / f"{name}.yaml"
        path.write_text(yaml.safe_dump(cfg))
        assert main(["simulate", str(path)]) == 0
        outs.append(tmp_path / name)
    csv_same = (outs[0] / "diagnostics.csv").read_bytes() == (
        outs[1] / "diagnostics.csv"
    ).read_bytes()

    dom = BoxDomain((math.pi, math.pi, math.pi), (4, 4, 4))
    snap = str(outs[0] / "final.msw1")
    state = snapshot_load(snap, dom)
    resaved = str(tmp_path / "resave.msw1")
    snapshot_save(state, resaved)
    snap_same = open(snap, "rb").read() == open(resaved, "rb").read()

    rows = read_csv(str(outs[0] / "diagnostics.csv"))
    parse_ok = all(math.isfinite(r["Q"]) for r in rows)

    ok = csv_same and snap_same and parse_ok
    _criterion(11, "reproducibility", ok,
               f"identical CSV {csv_same}, snapshot round trip bit-exact "
               f"{snap_same}")
