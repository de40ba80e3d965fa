"""Verification suite for the operator and decay estimates.

Four families of checks:
  * spectral gap of the field Laplacian on divergence-free modes
    (enumeration plus an independent iterative eigensolve),
  * two-sided norm equivalences for the covariant H1/H2 pairs as
    generalized eigenvalue extremes,
  * the relative bound of the magnetic perturbation T = D'D - (-lap)
    against -lap + 1,
  * trajectory-level facts: Lyapunov envelope fits, the closed-form charge
    law, measured coupling constants with the damping feasibility window,
    and the absorbing-ball ensemble experiment.

Dense eigensolves are used up to 12 modes per axis; beyond that the extreme
eigenvalues come from Lanczos iterations on matrix-free operators.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.linalg import eigh, eigvalsh
from scipy.sparse.linalg import LinearOperator, eigsh

from .dynamics import Params, SimulationDiverged, make_initial, run
from .gauge import leray_project, solve_scalar_potential
from .matter import MAXWELL_PARITIES, matter_energy
from .spectral import (
    SCALAR_PARITY,
    SIN,
    BasisFamily,
    BoxDomain,
    SpectralVector,
    grad_norm_sq,
    h1_norm_sq,
    inner_l2,
    lp_norm,
)

DENSE_CAP = 12


# -- spectral gap of the field block -------------------------------------------------


def lambda_min_mode(domain: BoxDomain) -> tuple[float, tuple[int, int, int]]:
    """Smallest |kappa|^2 over divergence-free field modes plus its minimizer.

    A mode with two zero indices supports no component at all (two sine
    factors would need index zero); one zero index leaves exactly the
    component whose own axis carries the zero, and that component is
    automatically divergence-free; fully interior modes keep a transverse
    polarization plane.  Every admissible mode therefore realizes its
    |kappa|^2 as an eigenvalue, and at least two axes carry k >= 1.
    """
    best = math.inf
    arg = (0, 0, 0)
    for k in product(*(range(0, n + 1) for n in domain.modes)):
        if sum(1 for ki in k if ki == 0) >= 2:
            continue
        val = sum((ki * math.pi / li) ** 2 for ki, li in zip(k, domain.lengths))
        if val < best:
            best, arg = val, k
    return best, arg


def lambda_min(domain: BoxDomain) -> float:
    """Smallest |kappa|^2 over divergence-free field modes, by enumeration."""
    return lambda_min_mode(domain)[0]


def lambda_min_iterative(domain: BoxDomain, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of |kappa|^2 restricted to divergence-free fields.

    Independent of the enumeration: assembles the quadratic form as a
    matrix-free operator (compressive penalty on the gradient complement)
    and runs a Lanczos eigensolve.
    """
    shapes = [domain.coeff_shape(MAXWELL_PARITIES[i]) for i in range(3)]
    sizes = [int(np.prod(s)) for s in shapes]
    k2 = [domain.kappa_sq(MAXWELL_PARITIES[i]) for i in range(3)]
    kmax = max(float(x.max()) for x in k2)
    penalty = 10.0 * kmax

    def unpack(x):
        comps = []
        ofs = 0
        for s, n in zip(shapes, sizes):
            comps.append(x[ofs : ofs + n].reshape(s))
            ofs += n
        return SpectralVector(domain, BasisFamily.MAXWELL, tuple(comps))

    def pack(v):
        return np.concatenate([c.ravel() for c in v.comps])

    def apply(x):
        v = unpack(x)
        pv = leray_project(v)
        scaled = SpectralVector(
            domain,
            BasisFamily.MAXWELL,
            tuple(k2[i] * pv.comps[i] for i in range(3)),
        )
        core = pack(leray_project(scaled))
        residual = x - pack(pv)
        return core + penalty * residual

    n = sum(sizes)
    op = LinearOperator((n, n), matvec=apply, dtype=float)
    vals = eigsh(op, k=1, which="SA", tol=tol, maxiter=5000, return_eigenvectors=False)
    return float(vals[0])


# -- norm equivalence as generalized eigenvalue extremes -----------------------------


@dataclass(frozen=True)
class RayleighReport:
    c_low: float
    c_high: float
    pair: str
    a_h1: float
    modes: tuple
    method: str


def _sl3(axis: int, s: slice):
    """Index tuple applying slice s on one of the trailing three axes."""
    return (Ellipsis,) + tuple(s if j == axis else slice(None) for j in range(3))


def _batched_apply_h(dom: BoxDomain, coeffs, a_samples, v_nodes):
    """H applied to a batch of scalar coefficient arrays (leading dims kept)."""
    spsi = dom.synthesize(coeffs, SCALAR_PARITY)
    dpsi = []
    for i in range(3):
        par = MAXWELL_PARITIES[i]
        shape = coeffs.shape[:-3] + dom.coeff_shape(par)
        g = np.zeros(shape, dtype=coeffs.dtype)
        kcol = dom.kappa_axis(SIN, i).reshape(
            tuple(-1 if j == i else 1 for j in range(3))
        )
        g[_sl3(i, slice(1, None))] = coeffs * kcol
        nod = -1j * dom.synthesize(g, par)
        if a_samples is not None:
            nod = nod + a_samples[i] * spsi
        dpsi.append(nod)
    out = np.zeros_like(coeffs)
    for i in range(3):
        par = MAXWELL_PARITIES[i]
        proj = dom.analyze(dpsi[i], par)
        kcol = dom.kappa_axis(SIN, i).reshape(
            tuple(-1 if j == i else 1 for j in range(3))
        )
        out += 0.5j * proj[_sl3(i, slice(1, None))] * kcol
    if a_samples is not None:
        adot = a_samples[0] * dpsi[0] + a_samples[1] * dpsi[1] + a_samples[2] * dpsi[2]
        out = out + 0.5 * dom.analyze(adot, SCALAR_PARITY)
    if v_nodes is not None:
        out = out + dom.analyze(v_nodes * spsi, SCALAR_PARITY)
    return out


def _hamiltonian_matrix(dom: BoxDomain, a_samples, v_nodes, chunk: int = 128):
    """Dense matrix of H on the scalar coefficient space (raw, unsymmetrized)."""
    d = int(np.prod(dom.scalar_shape))
    mat = np.empty((d, d), dtype=complex)
    for lo in range(0, d, chunk):
        hi = min(lo + chunk, d)
        batch = np.zeros((hi - lo, d), dtype=complex)
        batch[np.arange(hi - lo), np.arange(lo, hi)] = 1.0
        batch = batch.reshape(hi - lo, *dom.scalar_shape)
        out = _batched_apply_h(dom, batch, a_samples, v_nodes)
        mat[:, lo:hi] = out.reshape(hi - lo, d).T
    return mat


def _field_samples(a_field: SpectralVector | None):
    if a_field is None:
        return None, 0.0
    dom = a_field.domain
    samples = np.stack(
        [dom.synthesize(a_field.comps[i], MAXWELL_PARITIES[i]) for i in range(3)]
    )
    return samples, math.sqrt(h1_norm_sq(a_field))


def rayleigh_equivalence(
    domain: BoxDomain,
    a_field: SpectralVector | None = None,
    order: str = "H1",
    phi_samples=None,
    dense_cap: int = DENSE_CAP,
    tol: float = 1e-8,
) -> RayleighReport:
    """Extreme generalized eigenvalues of the covariant norm pairs.

    H1: (||D psi||^2 + ||psi||^2) against the H1 norm, field coupling only;
    H2: (||H psi||^2 + ||psi||^2) against the H2 norm, with any scalar
    potential included in H.  Positivity of the lower constant and
    finiteness of the upper one discretize the two-sided equivalence; the
    non-quadratic bracket [||D psi|| + ||psi||]^2 lies within a factor 2.
    """
    if order not in ("H1", "H2"):
        raise ValueError("order must be H1 or H2")
    a_samples, a_h1 = _field_samples(a_field)
    v_nodes = None if order == "H1" else phi_samples
    k2 = domain.kappa_sq(SCALAR_PARITY).ravel()
    weight = 1.0 + k2 if order == "H1" else (1.0 + k2) ** 2
    dense = all(n <= dense_cap for n in domain.modes)
    if dense:
        h = _hamiltonian_matrix(domain, a_samples, v_nodes)
        h = 0.5 * (h + h.conj().T)
        if order == "H1":
            m = 2.0 * h + np.eye(h.shape[0])
        else:
            m = h @ h + np.eye(h.shape[0])
        vals = eigh(m, np.diag(weight), eigvals_only=True)
        c_low, c_high = float(vals[0]), float(vals[-1])
        method = "dense"
    else:
        d = int(np.prod(domain.scalar_shape))
        inv_sqrt = 1.0 / np.sqrt(weight)

        def matvec(x):
            c = (x * inv_sqrt).reshape(domain.scalar_shape)
            hc = _batched_apply_h(domain, c, a_samples, v_nodes)
            if order == "H1":
                out = 2.0 * hc + c
            else:
                out = _batched_apply_h(domain, hc, a_samples, v_nodes) + c
            return out.reshape(d) * inv_sqrt

        op = LinearOperator((d, d), matvec=matvec, dtype=complex)
        lo = eigsh(op, k=1, which="SA", tol=tol, return_eigenvectors=False)
        hi = eigsh(op, k=1, which="LA", tol=tol, return_eigenvectors=False)
        c_low, c_high = float(lo[0]), float(hi[0])
        method = "iterative"
    return RayleighReport(c_low, c_high, order, a_h1, domain.modes, method)


# -- relative bound of the magnetic perturbation -------------------------------------


@dataclass(frozen=True)
class RelativeBoundReport:
    deltas: tuple
    constants: tuple
    asymmetry: float
    a_h1: float


def relative_bound(
    domain: BoxDomain,
    a_field: SpectralVector,
    deltas=(0.5, 0.25, 0.125),
) -> RelativeBoundReport:
    """C_delta with |<psi, T psi>| <= delta <psi, (-lap+1) psi> + C ||psi||^2.

    T = D'D - (-lap) is the magnetic perturbation (the first-order coupling
    plus the quadratic potential).  Finiteness for every positive delta is
    the discrete relative-bound statement; at A = 0, T = 0.
    """
    a_samples, a_h1 = _field_samples(a_field)
    h = _hamiltonian_matrix(domain, a_samples, None)
    k2 = domain.kappa_sq(SCALAR_PARITY).ravel()
    t = 2.0 * h - np.diag(k2)
    asym = float(np.max(np.abs(t - t.conj().T)))
    t = 0.5 * (t + t.conj().T)
    lam = np.diag(1.0 + k2)
    consts = []
    for d in deltas:
        top = float(eigvalsh(t - d * lam)[-1])
        bot = float(eigvalsh(-t - d * lam)[-1])
        consts.append(max(0.0, top, bot))
    return RelativeBoundReport(tuple(deltas), tuple(consts), asym, a_h1)


# -- Lyapunov envelope fit ------------------------------------------------------------


@dataclass(frozen=True)
class LyapunovFit:
    beta: float
    c_p: float
    floor: float
    degenerate: bool
    envelope_ok: bool


def lyapunov_fit(rows, min_rows: int = 10) -> LyapunovFit:
    """Largest decay rate whose exponential envelope the series respects.

    For each candidate beta the smallest admissible plateau is
    max_t [Phi(t) - Phi(0) e^{-beta t}]_+; the fit takes the largest beta
    whose plateau stays within 10% of the best achievable one, and reports
    C_p = beta * plateau.  A series that never drops below 95% of its
    start carries no decay information and is flagged degenerate.
    """
    if len(rows) < min_rows:
        raise ValueError(f"need at least {min_rows} diagnostic rows, got {len(rows)}")
    t = np.array([r.t for r in rows])
    phi = np.array([r.lyapunov for r in rows])
    t = t - t[0]
    phi0 = phi[0]
    span = float(t[-1]) if t[-1] > 0 else 1.0
    betas = np.geomspace(0.01 / span, 50.0 / span, 400)
    envelopes = phi0 * np.exp(-np.outer(betas, t))
    plateaus = np.maximum(phi[None, :] - envelopes, 0.0).max(axis=1)
    scale = max(abs(phi0), 1.0)
    pmin = float(plateaus.min())
    ok = plateaus <= pmin * 1.1 + 1e-12 * scale
    idx = int(np.nonzero(ok)[0][-1])
    beta = float(betas[idx])
    floor = float(plateaus[idx])
    degenerate = bool(phi.min() > 0.95 * phi0) or idx == 0
    envelope_ok = bool(np.all(phi <= phi0 * np.exp(-beta * t) + floor + 1e-9 * scale))
    return LyapunovFit(beta, beta * floor, floor, degenerate, envelope_ok)


# -- closed-form charge law -----------------------------------------------------------


@dataclass(frozen=True)
class ChargeOracle:
    """Q(t) for a shape-invariant eigenmode under pure absorption.

    dQ/dt = -2 eps mu Q - 2 gamma mu Q^2 with mu the mode eigenvalue;
    the closed form covers both damping channels and their limits.
    """

    q0: float
    mu: float
    eps: float
    gamma: float

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.eps == 0.0:
            return self.q0 / (1.0 + 2.0 * self.mu * self.gamma * self.q0 * t)
        decay = np.exp(-2.0 * self.mu * self.eps * t)
        num = self.eps * self.q0 * decay
        den = self.eps + self.gamma * self.q0 * (1.0 - decay)
        return num / den


def charge_ode_oracle(
    domain: BoxDomain, potentials, params: Params, q0: float
) -> ChargeOracle:
    """Validated oracle for the ground-mode damped run.

    Preconditions: constant confinement potential, electrostatic coupling
    off, no pump, fields zero, psi(0) the lowest sine mode with charge q0.
    The caller owns the state-side preconditions; the checkable ones are
    enforced here.
    """
    phi = potentials.phi
    if float(phi.max() - phi.min()) > 1e-12 * max(1.0, abs(float(phi.max()))):
        raise ValueError("charge oracle requires a constant potential")
    if params.coulomb and potentials.coulomb:
        raise ValueError("charge oracle requires the electrostatic coupling off")
    mu = 0.5 * sum((math.pi / li) ** 2 for li in domain.lengths) + float(phi.min())
    return ChargeOracle(q0, mu, params.eps, params.gamma)


def charge_residual(rows, eps: float, gamma: float, dt: float) -> float:
    """Worst Simpson-rule residual of the charge balance law over the series.

    The law dQ/dt = -(2 eps E + 2 gamma E Q) is tested on consecutive step
    triples; needs rows recorded every step.
    """
    worst = 0.0
    for r0, r1, r2 in zip(rows, rows[1:], rows[2:]):
        fs = [
            2.0 * eps * r.energy + 2.0 * gamma * r.energy * r.charge
            for r in (r0, r1, r2)
        ]
        res = (r2.charge - r0.charge) / (2.0 * dt) + (fs[0] + 4.0 * fs[1] + fs[2]) / 6.0
        worst = max(worst, abs(res))
    return worst


# -- coupling constants and the damping feasibility window ---------------------------


def measure_coupling(
    domain: BoxDomain,
    potentials,
    n_samples: int = 40,
    seed: int = 0,
) -> dict:
    """Measured surrogates of the current-field coupling constants.

    Samples random states and takes the worst ratio
    |<j, A>| / (||grad A|| sqrt(E) ||D psi||), plus the embedding-style
    ratios it rests on.  The squared half of the worst ratio feeds the
    feasibility window (Young inequality with ||D psi||^2 <= 2E).
    """
    from .dynamics import total_field_samples
    from .matter import covariant_gradient, densities

    worst = 0.0
    l6_ratio = 0.0
    l3_ratio = 0.0
    for k in range(n_samples):
        s = make_initial(
            domain,
            "random",
            seed=seed + 1000 * k,
            q=0.2 + 1.6 * ((k * 2654435761) % 97) / 97.0,
            a_norm=0.1 + 2.0 * ((k * 40503) % 89) / 89.0,
            pi_norm=0.0,
        )
        atot = total_field_samples(s.a, None, 0.0)
        rho, j = densities(s.psi, atot)
        inner = inner_l2(j, s.a).real
        grad_a = math.sqrt(grad_norm_sq(s.a))
        a0 = solve_scalar_potential(rho) if potentials.coulomb else None
        energy = matter_energy(s.psi, atot, potentials.phi, a0)
        dpsi = covariant_gradient(s.psi, atot)
        dnorm = math.sqrt(float(np.sum(np.abs(dpsi) ** 2)) * domain.cell_volume)
        if grad_a > 1e-12 and energy > 1e-12 and dnorm > 1e-12:
            worst = max(worst, abs(inner) / (grad_a * math.sqrt(energy) * dnorm))

        if grad_a > 1e-12:
            l6_ratio = max(l6_ratio, lp_norm(s.a, 6) / grad_a)
        if energy > 1e-12:
            l3_ratio = max(l3_ratio, lp_norm(s.psi, 3) / math.sqrt(energy))
    return {
        "c1_hat": worst,
        "c2_hat": 0.5 * worst**2,
        "sup_a_l6_over_grad": l6_ratio,
        "sup_psi_l3_over_sqrt_e": l3_ratio,
        "samples": n_samples,
    }


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    eta: float
    delta: float
    margin: float


def damping_feasibility(sigma: float, gamma: float, c2: float) -> FeasibilityReport:
    """Search (eta, delta) making all three damping margins positive.

    The margins are eta (1 - 3 delta), sigma - eta - eta/delta, and
    gamma - c2 eta / delta; the report carries the best pair found.
    """
    best = (-math.inf, 0.0, 0.0)
    for delta in np.linspace(0.02, 0.32, 31):
        cap = min(sigma * delta / (1.0 + delta), gamma * delta / max(c2, 1e-300))
        if cap <= 0.0:
            continue
        for eta in np.linspace(cap / 50.0, 0.98 * cap, 50):
            margin = min(
                eta * (1.0 - 3.0 * delta),
                sigma - eta - eta / delta,
                gamma - c2 * eta / delta,
            )
            if margin > best[0]:
                best = (margin, eta, delta)
    margin, eta, delta = best
    return FeasibilityReport(bool(margin > 0.0), float(eta), float(delta), float(margin))


# -- absorbing-ball ensemble ----------------------------------------------------------


@dataclass
class AbsorbingReport:
    radii: tuple
    times: np.ndarray
    series: tuple
    tail_bounds: tuple
    b_hat: float
    spread: float
    entry_times: tuple
    stayed_inside: tuple
    diverged: tuple


def absorbing_experiment(
    domain: BoxDomain,
    potentials,
    pump,
    p: Params,
    radii,
    record_every: int = 20,
    seed: int = 0,
    workers: int | None = None,
    q: float = 1.0,
    a_norm: float = 1.0,
    pi_norm: float = 1.0,
    band_frac: int = 3,
) -> AbsorbingReport:
    """Ensemble fan-out over initial radii; common terminal bound and entry.

    Each trajectory starts from the same random draw rescaled so the state
    norm ||X(0)|| equals the requested radius exactly; q/a_norm/pi_norm fix
    the draw's composition before rescaling.  The terminal bound is the
    worst tail maximum of ||X||^2 over the last half of the window; entry
    time is the first sample after which the trajectory never leaves the
    doubled ball.  Divergent members are reported and skipped in the bound.
    """
    from .dynamics import state_norm_sq

    radii = tuple(float(r) for r in radii)
    base = make_initial(
        domain, "random", seed=seed, q=q, a_norm=a_norm, pi_norm=pi_norm,
        band_frac=band_frac,
    )
    base_norm = math.sqrt(state_norm_sq(base))

    def one(r):
        s0 = make_initial(
            domain,
            "scaled",
            seed=seed,
            q=q,
            a_norm=a_norm,
            pi_norm=pi_norm,
            band_frac=band_frac,
            scale=r / base_norm if base_norm > 0 else 0.0,
        )
        try:
            rows, _ = run(s0, p, pump, potentials, record_every=record_every)
        except SimulationDiverged as err:
            return None, err.time
        t = np.array([row.t for row in rows])
        x2 = np.array([row.state_norm_sq for row in rows])
        return (t, x2), None

    n_workers = workers or min(len(radii), 8)
    with ThreadPoolExecutor(max_workers=max(1, n_workers)) as pool:
        results = list(pool.map(one, radii))

    times = None
    series = []
    tail_bounds = []
    diverged = []
    for (res, err_t), r in zip(results, radii):
        if res is None:
            diverged.append((r, err_t))
            series.append(None)
            tail_bounds.append(math.inf)
            continue
        t, x2 = res
        times = t
        series.append(x2)
        tail = x2[t >= 0.5 * t[-1]]
        tail_bounds.append(float(tail.max()))
    finite = [b for b in tail_bounds if math.isfinite(b)]
    b_hat = max(finite) if finite else math.inf
    lo = min(finite) if finite else math.inf
    spread = 0.0 if b_hat == 0.0 else (b_hat - lo) / b_hat if finite else math.inf

    entry_times = []
    stayed = []
    for x2 in series:
        if x2 is None:
            entry_times.append(math.inf)
            stayed.append(False)
            continue
        suffix = np.maximum.accumulate(x2[::-1])[::-1]
        inside = suffix <= 2.0 * b_hat + 1e-12
        if inside.any():
            k = int(np.argmax(inside))
            entry_times.append(float(times[k]))
            stayed.append(bool(np.all(x2[k:] <= 2.0 * b_hat + 1e-12)))
        else:
            entry_times.append(math.inf)
            stayed.append(False)
    return AbsorbingReport(
        radii,
        times,
        tuple(series),
        tuple(tail_bounds),
        b_hat,
        spread,
        tuple(entry_times),
        tuple(stayed),
        tuple(diverged),
    )
