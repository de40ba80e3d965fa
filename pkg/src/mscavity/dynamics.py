"""Coupled field-matter evolution, RK4 integrator, energies, diagnostics.

First-order form of the cavity system:

    dA/dt   = Pi
    dPi/dt  = lap A - sigma Pi - P j        (P = divergence-free projection)
    dpsi/dt = -i (1 - i eps) H psi - gamma E psi

with H the magnetic Hamiltonian of the matter module, E = <psi, H psi>,
and the electrostatic potential resolved from the instantaneous density
inside every right-hand-side evaluation.  The field force enters with a
minus sign: the canonical energy below is then an exact first integral of
the undamped flow, which the conservation and gradient self-checks verify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .drive import PumpSpec, pump_eval
from .gauge import boundary_residual, coulomb_energy, leray_project, solve_scalar_potential
from .matter import (
    MAXWELL_PARITIES,
    PotentialSet,
    covariant_gradient,
    kinetic_energy,
    matter_energy,
)
from .spectral import (
    SCALAR_PARITY,
    BasisFamily,
    BoxDomain,
    SpectralScalar,
    SpectralVector,
    curl,
    divergence,
    l2_norm,
)
from .util import stream_rng


class SimulationDiverged(RuntimeError):
    """A field stopped being finite; carries the time it happened."""

    def __init__(self, time: float):
        super().__init__(f"non-finite field values at t = {time:.6g}")
        self.time = time
        self.rows = []
        self.snapshots = []


@dataclass
class State:
    """Fields (A, Pi, psi) on one shared domain at time t."""

    a: SpectralVector
    pi: SpectralVector
    psi: SpectralScalar
    t: float = 0.0

    @property
    def domain(self) -> BoxDomain:
        return self.a.domain

    def copy(self) -> "State":
        return State(self.a.copy(), self.pi.copy(), self.psi.copy(), self.t)


@dataclass(frozen=True)
class Params:
    """Damping coefficients, integrator settings, and switches."""

    dt: float
    t_final: float
    sigma: float = 0.0
    eps: float = 0.0
    gamma: float = 0.0
    eta: float = 0.0
    coulomb: bool = True
    dealias: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("sigma", "eps", "gamma", "eta"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")
        if self.t_final < 0.0:
            raise ValueError("t_final must be nonnegative")


def stability_limit(domain: BoxDomain, eps: float = 0.0) -> float:
    """Largest dt the explicit scheme tolerates (before the safety factor).

    The stiffest rates are the Schrodinger phase |kappa|^2/2 (widened by the
    eps tilt) and the wave frequency |kappa|.
    """
    k2 = max(float(domain.kappa_sq(p).max()) for p in MAXWELL_PARITIES)
    k2 = max(k2, float(domain.kappa_sq(SCALAR_PARITY).max()))
    return 2.8 / max(0.5 * k2 * (1.0 + eps), math.sqrt(k2))


def check_stability(p: Params, domain: BoxDomain) -> None:
    limit = 0.5 * stability_limit(domain, p.eps)
    if p.dt > limit:
        raise ValueError(
            f"dt = {p.dt:.6g} exceeds the stability budget {limit:.6g} "
            f"for this grid (grow the box or shrink dt)"
        )


def _sample_vector(v: SpectralVector) -> np.ndarray:
    dom = v.domain
    return np.stack(
        [dom.synthesize(v.comps[i], MAXWELL_PARITIES[i]) for i in range(3)]
    )


def total_field_samples(a: SpectralVector, pump: PumpSpec | None, t: float):
    """Nodal samples of A + A_p at time t (and the pump part separately)."""
    total = _sample_vector(a)
    if pump is not None and pump.terms:
        ap, _ = pump_eval(pump, t)
        total = total + _sample_vector(ap)
    return total


def _require_finite(s: State) -> None:
    ok = np.isfinite(s.psi.coeffs).all()
    for c in (*s.a.comps, *s.pi.comps):
        ok = ok and np.isfinite(c).all()
    if not ok:
        raise SimulationDiverged(s.t)


def rhs(s: State, p: Params, pump: PumpSpec | None, potentials: PotentialSet):
    """(dA/dt, dPi/dt, dpsi/dt) at the state's own time.

    Raises the divergence error when the incoming state is already
    non-finite; overflow arising inside (a trajectory mid-blowup) is left
    silent and caught by the same gate on the next evaluation.
    """
    _require_finite(s)
    with np.errstate(over="ignore", invalid="ignore"):
        return _rhs(s, p, pump, potentials)


def effective_potentials(p: Params, potentials: PotentialSet) -> PotentialSet:
    """The potential set the flow actually sees: coulomb needs both switches on."""
    if potentials.coulomb and not p.coulomb:
        return replace(potentials, coulomb=False)
    return potentials


def _rhs(s: State, p: Params, pump: PumpSpec | None, potentials: PotentialSet):
    dom = s.domain
    atot = total_field_samples(s.a, pump, s.t)

    spsi = s.psi.samples()
    dpsi = covariant_gradient(s.psi, atot)

    # density and instantaneous electrostatic potential
    rho_nodes = (spsi.conj() * spsi).real
    use_coulomb = p.coulomb and potentials.coulomb
    if use_coulomb:
        rho = SpectralScalar(dom, dom.analyze(rho_nodes, SCALAR_PARITY))
        a0 = solve_scalar_potential(rho)
        a0_nodes = dom.synthesize(a0.coeffs, SCALAR_PARITY)
        v_nodes = potentials.phi + a0_nodes
    else:
        a0_nodes = None
        v_nodes = potentials.phi

    # H psi assembled from the shared covariant gradient
    proj = SpectralVector(
        dom,
        BasisFamily.MAXWELL,
        tuple(dom.analyze(dpsi[i], MAXWELL_PARITIES[i]) for i in range(3)),
    )
    hpsi = -0.5j * divergence(proj).coeffs
    hpsi = hpsi + 0.5 * dom.analyze(np.sum(atot * dpsi, axis=0), SCALAR_PARITY)
    hpsi = hpsi + dom.analyze(v_nodes * spsi, SCALAR_PARITY)

    energy = float(
        0.5 * np.sum(np.abs(dpsi) ** 2) * dom.cell_volume
        + np.sum(v_nodes * rho_nodes) * dom.cell_volume
    )

    dpsi_dt = (-1j - p.eps) * hpsi - (p.gamma * energy) * s.psi.coeffs

    # field force: projected current, entering with the energy-consistent sign
    jcomps = tuple(
        dom.analyze((spsi.conj() * dpsi[i]).real, MAXWELL_PARITIES[i])
        for i in range(3)
    )
    force = leray_project(SpectralVector(dom, BasisFamily.MAXWELL, jcomps))

    k2a = tuple(dom.kappa_sq(MAXWELL_PARITIES[i]) for i in range(3))
    dpi = tuple(
        -k2a[i] * s.a.comps[i] - p.sigma * s.pi.comps[i] - force.comps[i]
        for i in range(3)
    )

    da = SpectralVector(dom, BasisFamily.MAXWELL, tuple(c.copy() for c in s.pi.comps))
    dpi_v = SpectralVector(dom, BasisFamily.MAXWELL, dpi)
    dpsi_s = SpectralScalar(dom, dpsi_dt)
    if p.dealias:
        mask_s = dom.dealias_mask(SCALAR_PARITY)
        dpsi_s = SpectralScalar(dom, np.where(mask_s, dpsi_s.coeffs, 0.0))
        masked = []
        for i in range(3):
            m = dom.dealias_mask(MAXWELL_PARITIES[i])
            masked.append(np.where(m, dpi_v.comps[i], 0.0))
        dpi_v = SpectralVector(dom, BasisFamily.MAXWELL, tuple(masked))
    return da, dpi_v, dpsi_s


def _advance(s: State, k, h: float) -> State:
    ka, kpi, kpsi = k
    dom = s.domain
    # after a blow-up the stage values may hold inf/nan until the gate fires
    with np.errstate(over="ignore", invalid="ignore"):
        a = SpectralVector(
            dom, BasisFamily.MAXWELL,
            tuple(s.a.comps[i] + h * ka.comps[i] for i in range(3)),
        )
        pi = SpectralVector(
            dom, BasisFamily.MAXWELL,
            tuple(s.pi.comps[i] + h * kpi.comps[i] for i in range(3)),
        )
        psi = SpectralScalar(dom, s.psi.coeffs + h * kpsi.coeffs)
    return State(a, pi, psi, s.t + h)


def step_rk4(s: State, p: Params, pump, potentials) -> State:
    """One classical Runge-Kutta step of size p.dt; re-projects the gauge."""
    dt = p.dt
    if dt == 0.0:
        return s.copy()
    k1 = rhs(s, p, pump, potentials)
    k2 = rhs(_advance(s, k1, 0.5 * dt), p, pump, potentials)
    k3 = rhs(_advance(s, k2, 0.5 * dt), p, pump, potentials)
    k4 = rhs(_advance(s, k3, dt), p, pump, potentials)
    dom = s.domain
    with np.errstate(over="ignore", invalid="ignore"):
        acc = []
        for i in range(3):
            acc.append(
                s.a.comps[i]
                + (dt / 6.0)
                * (k1[0].comps[i] + 2 * k2[0].comps[i] + 2 * k3[0].comps[i] + k4[0].comps[i])
            )
        pcc = []
        for i in range(3):
            pcc.append(
                s.pi.comps[i]
                + (dt / 6.0)
                * (k1[1].comps[i] + 2 * k2[1].comps[i] + 2 * k3[1].comps[i] + k4[1].comps[i])
            )
        psi = s.psi.coeffs + (dt / 6.0) * (
            k1[2].coeffs + 2 * k2[2].coeffs + 2 * k3[2].coeffs + k4[2].coeffs
        )
        # defensive gauge re-projection; a no-op up to roundoff
        a = leray_project(SpectralVector(dom, BasisFamily.MAXWELL, tuple(acc)))
        pi = leray_project(SpectralVector(dom, BasisFamily.MAXWELL, tuple(pcc)))
    return State(a, pi, SpectralScalar(dom, psi), s.t + dt)


# -- energies -----------------------------------------------------------------------


def _vector_l2_sq(v: SpectralVector) -> float:
    return sum(float(np.sum(np.abs(c) ** 2)) for c in v.comps)


def _vector_h1_sq(v: SpectralVector) -> float:
    dom = v.domain
    out = 0.0
    for i in range(3):
        k2 = dom.kappa_sq(MAXWELL_PARITIES[i])
        out += float(np.sum((1.0 + k2) * np.abs(v.comps[i]) ** 2))
    return out


def _grad_a_norm_sq(v: SpectralVector) -> float:
    dom = v.domain
    out = 0.0
    for i in range(3):
        k2 = dom.kappa_sq(MAXWELL_PARITIES[i])
        out += float(np.sum(k2 * np.abs(v.comps[i]) ** 2))
    return out


def _matter_pieces(s: State, pump, potentials: PotentialSet):
    dom = s.domain
    atot = total_field_samples(s.a, pump, s.t)
    kin = kinetic_energy(s.psi, atot)
    rho_nodes = np.abs(s.psi.samples()) ** 2
    pot = float(np.sum(potentials.phi * rho_nodes) * dom.cell_volume)
    rho = SpectralScalar(dom, dom.analyze(rho_nodes, SCALAR_PARITY))
    return kin, pot, rho


def canonical_energy(s: State, pump, potentials: PotentialSet) -> float:
    """First integral of the undamped statically-pumped flow.

    1/2 ||Pi||^2 + 1/2 ||curl A||^2 + 1/2 ||D psi||^2 + <phi, rho>
    + 1/2 <rho, (-lap)^{-1} rho>  (last term only with coulomb on).
    """
    field = 0.5 * _vector_l2_sq(s.pi) + 0.5 * _vector_l2_sq(curl(s.a))
    kin, pot, rho = _matter_pieces(s, pump, potentials)
    e = field + kin + pot
    if potentials.coulomb:
        e += coulomb_energy(rho)
    return e


def hamiltonian_weighted(s: State, pump, potentials: PotentialSet) -> float:
    """Energy variant with half-weighted matter block.

    1/2 [||Pi||^2 + ||curl A||^2] + 1/2 <psi, (1/2 D^2 + phi + 1/2 A0) psi>;
    reported alongside the canonical form for comparison.
    """
    field = 0.5 * _vector_l2_sq(s.pi) + 0.5 * _vector_l2_sq(curl(s.a))
    kin, pot, rho = _matter_pieces(s, pump, potentials)
    e = field + 0.5 * (kin + pot)
    if potentials.coulomb:
        e += 0.5 * coulomb_energy(rho)
    return e


def lyapunov_phi(
    s: State, p: Params, pump, potentials: PotentialSet, base: str = "canonical"
) -> float:
    """Energy plus the eta <Pi, A> mixing term that closes the decay loop."""
    potentials = effective_potentials(p, potentials)
    if base == "canonical":
        e = canonical_energy(s, pump, potentials)
    elif base == "weighted":
        e = hamiltonian_weighted(s, pump, potentials)
    else:
        raise ValueError(f"unknown energy base {base!r}")
    mix = sum(float(np.sum(s.pi.comps[i] * s.a.comps[i])) for i in range(3))
    return e + p.eta * mix


def total_energy(s: State, pump, potentials: PotentialSet) -> float:
    """E = <psi, H psi> with the full instantaneous Hamiltonian."""
    atot = total_field_samples(s.a, pump, s.t)
    a0 = None
    if potentials.coulomb:
        rho_nodes = np.abs(s.psi.samples()) ** 2
        rho = SpectralScalar(s.domain, s.domain.analyze(rho_nodes, SCALAR_PARITY))
        a0 = solve_scalar_potential(rho)
    return matter_energy(s.psi, atot, potentials.phi, a0)


def state_norm_sq(s: State) -> float:
    """||X||^2 in the state space: H1 for A, L2 for Pi, H1 for psi."""
    psi_h1 = float(
        np.sum((1.0 + s.domain.kappa_sq(SCALAR_PARITY)) * np.abs(s.psi.coeffs) ** 2)
    )
    return _vector_h1_sq(s.a) + _vector_l2_sq(s.pi) + psi_h1


# -- diagnostics and the driver loop ------------------------------------------------


@dataclass(frozen=True)
class DiagnosticsRow:
    """One recorded sample of the scalar observables."""

    t: float
    charge: float
    energy: float
    energy_canonical: float
    energy_weighted: float
    lyapunov: float
    grad_a_norm: float
    pi_norm: float
    psi_h1: float
    div_a_norm: float
    boundary_residual: float
    state_norm_sq: float

    FIELDS = (
        "t",
        "Q",
        "E",
        "E_canonical",
        "E_weighted",
        "Phi",
        "grad_A_norm",
        "Pi_norm",
        "psi_H1",
        "div_A_norm",
        "boundary_residual",
        "X_norm_sq",
    )

    def values(self):
        return (
            self.t,
            self.charge,
            self.energy,
            self.energy_canonical,
            self.energy_weighted,
            self.lyapunov,
            self.grad_a_norm,
            self.pi_norm,
            self.psi_h1,
            self.div_a_norm,
            self.boundary_residual,
            self.state_norm_sq,
        )


def diagnostics_row(s: State, p: Params, pump, potentials: PotentialSet) -> DiagnosticsRow:
    # rows for states mid-blowup legitimately hold inf; no warning needed
    with np.errstate(over="ignore", invalid="ignore"):
        return _diagnostics_row(s, p, pump, potentials)


def _diagnostics_row(s: State, p: Params, pump, potentials: PotentialSet) -> DiagnosticsRow:
    # reported energies must describe the flow actually integrated
    potentials = effective_potentials(p, potentials)
    q = float(np.sum(np.abs(s.psi.coeffs) ** 2))
    e = total_energy(s, pump, potentials)
    ec = canonical_energy(s, pump, potentials)
    ew = hamiltonian_weighted(s, pump, potentials)
    phi = lyapunov_phi(s, p, pump, potentials)
    bres = max(
        boundary_residual(s.a, n_tangent=9),
        boundary_residual(s.psi, n_tangent=9),
    )
    psi_h1 = math.sqrt(
        float(np.sum((1.0 + s.domain.kappa_sq(SCALAR_PARITY)) * np.abs(s.psi.coeffs) ** 2))
    )
    return DiagnosticsRow(
        t=s.t,
        charge=q,
        energy=e,
        energy_canonical=ec,
        energy_weighted=ew,
        lyapunov=phi,
        grad_a_norm=math.sqrt(_grad_a_norm_sq(s.a)),
        pi_norm=math.sqrt(_vector_l2_sq(s.pi)),
        psi_h1=psi_h1,
        div_a_norm=l2_norm(divergence(s.a)),
        boundary_residual=bres,
        state_norm_sq=state_norm_sq(s),
    )


def run(
    initial: State,
    p: Params,
    pump,
    potentials: PotentialSet,
    record_every: int = 1,
    snapshot_times=(),
):
    """Integrate to t_final, recording diagnostics every record_every steps.

    Returns (rows, snapshots); snapshots holds copies of the state at the
    requested times (matched to the nearest step) plus always the final
    state.  On divergence the partial rows/snapshots are attached to the
    raised error.
    """
    check_stability(p, initial.domain)
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    n_steps = int(round(p.t_final / p.dt))
    want = sorted(float(ts) for ts in snapshot_times)
    rows = []
    snaps = []
    s = initial.copy()
    if p.dealias:
        dom = s.domain
        mask_s = dom.dealias_mask(SCALAR_PARITY)
        s.psi = SpectralScalar(dom, np.where(mask_s, s.psi.coeffs, 0.0))
    try:
        rows.append(diagnostics_row(s, p, pump, potentials))
        for n in range(1, n_steps + 1):
            s = step_rk4(s, p, pump, potentials)
            if want and s.t >= want[0] - 0.5 * p.dt:
                snaps.append(s.copy())
                want.pop(0)
            if n % record_every == 0 or n == n_steps:
                _require_finite(s)
                rows.append(diagnostics_row(s, p, pump, potentials))
    except SimulationDiverged as err:
        err.rows = rows
        err.snapshots = snaps
        raise
    snaps.append(s.copy())
    return rows, snaps


# -- initial data -------------------------------------------------------------------


def _random_divfree(dom: BoxDomain, rng, norm: float, band_frac: int = 3):
    comps = []
    for i in range(3):
        par = MAXWELL_PARITIES[i]
        c = np.zeros(dom.coeff_shape(par))
        keep = tuple(
            max(1, n // band_frac) + (1 if q == "cos" else 0)
            for n, q in zip(dom.modes, par)
        )
        c[: keep[0], : keep[1], : keep[2]] = rng.standard_normal(keep)
        comps.append(c)
    v = leray_project(SpectralVector(dom, BasisFamily.MAXWELL, tuple(comps)))
    cur = math.sqrt(_vector_l2_sq(v))
    if norm == 0.0 or cur == 0.0:
        return SpectralVector.zeros(dom, BasisFamily.MAXWELL)
    return (norm / cur) * v


def make_initial(
    domain: BoxDomain,
    kind: str = "ground",
    seed: int = 0,
    q: float = 1.0,
    a_norm: float = 0.0,
    pi_norm: float = 0.0,
    scale: float = 1.0,
    band_frac: int = 3,
) -> State:
    """Deterministic initial states.

    ground: the lowest sine mode with charge q, no field.  random:
    band-limited random fields with the requested norms, divergence-free by
    projection.  scaled: the random state with every field multiplied by
    ``scale`` (charge scales by scale^2).
    """
    if kind == "ground":
        c = np.zeros(domain.scalar_shape, dtype=complex)
        c[0, 0, 0] = math.sqrt(q)
        psi = SpectralScalar(domain, c)
        a = SpectralVector.zeros(domain, BasisFamily.MAXWELL)
        pi = SpectralVector.zeros(domain, BasisFamily.MAXWELL)
        return State(a, pi, psi, 0.0)
    if kind not in ("random", "scaled"):
        raise ValueError(f"unknown initial-data kind {kind!r}")
    rng_psi = stream_rng(seed, "init-psi")
    keep = tuple(max(1, n // band_frac) for n in domain.modes)
    c = np.zeros(domain.scalar_shape, dtype=complex)
    c[: keep[0], : keep[1], : keep[2]] = rng_psi.standard_normal(
        keep
    ) + 1j * rng_psi.standard_normal(keep)
    cur = math.sqrt(float(np.sum(np.abs(c) ** 2)))
    if cur > 0.0:
        c *= math.sqrt(q) / cur
    psi = SpectralScalar(domain, c)
    a = _random_divfree(domain, stream_rng(seed, "init-A"), a_norm, band_frac)
    pi = _random_divfree(domain, stream_rng(seed, "init-Pi"), pi_norm, band_frac)
    s = State(a, pi, psi, 0.0)
    if kind == "scaled" and scale != 1.0:
        s = State(
            scale * s.a,
            scale * s.pi,
            SpectralScalar(domain, scale * s.psi.coeffs),
            0.0,
        )
    return s


# -- gradient self-checks ------------------------------------------------------------


def _energy_of(dom, a_comps, pi_comps, psi_coeffs, pump, potentials, t):
    s = State(
        SpectralVector(dom, BasisFamily.MAXWELL, tuple(a_comps)),
        SpectralVector(dom, BasisFamily.MAXWELL, tuple(pi_comps)),
        SpectralScalar(dom, psi_coeffs),
        t,
    )
    return canonical_energy(s, pump, potentials)


def analytic_gradients(s: State, pump, potentials: PotentialSet):
    """Coefficient-space gradients of the canonical energy.

    grad_A = curl(curl A) + projected-current pullback; grad_Pi = Pi;
    grad w.r.t. (Re psi, Im psi) = 2 Re / 2 Im of H psi with the full
    self-consistent Hamiltonian (the Coulomb quartic differentiates into
    the A0 psi term at unit strength).
    """
    dom = s.domain
    atot = total_field_samples(s.a, pump, s.t)
    spsi = s.psi.samples()
    dpsi = covariant_gradient(s.psi, atot)
    jcomps = tuple(
        dom.analyze((spsi.conj() * dpsi[i]).real, MAXWELL_PARITIES[i])
        for i in range(3)
    )
    cc = curl(curl(s.a))
    grad_a = tuple(cc.comps[i] + jcomps[i] for i in range(3))
    grad_pi = tuple(c.copy() for c in s.pi.comps)

    a0 = None
    if potentials.coulomb:
        rho = SpectralScalar(dom, dom.analyze((spsi.conj() * spsi).real, SCALAR_PARITY))
        a0 = solve_scalar_potential(rho)
    from .matter import apply_hamiltonian

    v_nodes = potentials.phi
    if a0 is not None:
        v_nodes = v_nodes + dom.synthesize(a0.coeffs, SCALAR_PARITY)
    hpsi = apply_hamiltonian(s.psi, atot, v_nodes)
    return grad_a, grad_pi, 2.0 * hpsi.coeffs.real, 2.0 * hpsi.coeffs.imag


def grad_check(
    s: State,
    pump,
    potentials: PotentialSet,
    fd_step: float = 1e-5,
    n_probe: int = 24,
    seed: int = 0,
) -> dict:
    """Central finite differences of the canonical energy vs analytic gradients.

    Probes n_probe random coefficients in each block and reports the max
    relative error per block, plus the quadratic-laplacian self-check
    (functional sum of axis-derivative norms against twice the negative
    laplacian).
    """
    dom = s.domain
    rng = stream_rng(seed, "grad-check")
    ga, gpi, gre, gim = analytic_gradients(s, pump, potentials)

    def fd(change):
        plus = _energy_of(dom, *change(+fd_step), pump, potentials, s.t)
        minus = _energy_of(dom, *change(-fd_step), pump, potentials, s.t)
        return (plus - minus) / (2.0 * fd_step)

    a0c = [c.copy() for c in s.a.comps]
    p0c = [c.copy() for c in s.pi.comps]
    psi0 = s.psi.coeffs.copy()

    def rel(err, scale):
        return err / max(scale, 1e-30)

    report = {}
    for block, grads in (("A", ga), ("Pi", gpi)):
        worst = 0.0
        scale = max(max(np.max(np.abs(g)) for g in grads), 1e-12)
        for _ in range(n_probe):
            i = int(rng.integers(3))
            idx = tuple(int(rng.integers(n)) for n in grads[i].shape)

            def change(h, i=i, idx=idx, block=block):
                ac = [c.copy() for c in a0c]
                pc = [c.copy() for c in p0c]
                if block == "A":
                    ac[i][idx] += h
                else:
                    pc[i][idx] += h
                return ac, pc, psi0

            worst = max(worst, rel(abs(fd(change) - grads[i][idx]), scale))
        report[block] = worst

    for block, grad in (("psi_re", gre), ("psi_im", gim)):
        worst = 0.0
        scale = max(float(np.max(np.abs(grad))), 1e-12)
        for _ in range(n_probe):
            idx = tuple(int(rng.integers(n)) for n in grad.shape)

            def change(h, idx=idx, block=block):
                pc = psi0.copy()
                pc[idx] += h if block == "psi_re" else 1j * h
                return a0c, p0c, pc

            worst = max(worst, rel(abs(fd(change) - grad[idx]), scale))
        report[block] = worst

    report["laplacian_quadratic"] = _laplacian_quadratic_check(s, fd_step, rng)
    return report


def _laplacian_quadratic_check(s: State, fd_step: float, rng) -> float:
    """FD gradient of sum_axis ||d_axis A||^2 against 2 |kappa|^2 A."""
    from .spectral import axis_derivative

    dom = s.domain

    def functional(comps):
        out = 0.0
        for i in range(3):
            for ax in range(3):
                dc, dp = axis_derivative(dom, comps[i], MAXWELL_PARITIES[i], ax)
                nod = dom.synthesize(dc, dp)
                out += float(np.sum(nod * nod)) * dom.cell_volume
        return out

    base = [c.copy() for c in s.a.comps]
    worst = 0.0
    scale = max(
        max(
            float(np.max(dom.kappa_sq(MAXWELL_PARITIES[i]) * np.abs(base[i])))
            for i in range(3)
        )
        * 2.0,
        1e-12,
    )
    for _ in range(12):
        i = int(rng.integers(3))
        idx = tuple(int(rng.integers(n)) for n in base[i].shape)
        want = 2.0 * float(dom.kappa_sq(MAXWELL_PARITIES[i])[idx]) * base[i][idx]
        plus = [c.copy() for c in base]
        plus[i][idx] += fd_step
        minus = [c.copy() for c in base]
        minus[i][idx] -= fd_step
        got = (functional(plus) - functional(minus)) / (2.0 * fd_step)
        worst = max(worst, abs(got - want) / scale)
    return worst
