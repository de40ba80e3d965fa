"""Matter sector: covariant derivative, magnetic Hamiltonian, densities.

The kinetic operator is built variationally.  With D psi = -i grad psi +
a psi evaluated at the collocation nodes, the Hamiltonian applies

    H psi = 1/2 Ddag (D psi) + Proj[(phi + a0) psi],

where Ddag v = -i div(Proj_M v) + Proj[a . v] is the exact adjoint of D
with respect to the coefficient and quadrature inner products.  This makes
<chi, H psi> = conj <psi, H chi> hold to rounding for any real a and real
potentials, aliasing included, and it is the same operator whose quadratic
form the energy functionals differentiate (so force consistency is exact).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    SCALAR_PARITY,
    BasisFamily,
    BoxDomain,
    DomainError,
    SpectralScalar,
    SpectralVector,
    divergence,
    gradient,
    vector_parities,
)

MAXWELL_PARITIES = vector_parities(BasisFamily.MAXWELL)


@dataclass(frozen=True)
class PotentialSet:
    """Confinement potential sampled at the nodes; min value must be > 0."""

    domain: BoxDomain
    phi: np.ndarray
    kappa: float = field(init=False)
    label: str = "custom"
    coulomb: bool = True

    def __post_init__(self):
        phi = np.asarray(self.phi, dtype=float)
        if phi.shape != self.domain.npts:
            raise DomainError(
                f"potential samples {phi.shape} do not match grid {self.domain.npts}"
            )
        if not np.all(np.isfinite(phi)):
            raise ValueError("potential contains non-finite values")
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "kappa", float(np.min(phi)))
        if self.kappa <= 0.0:
            raise ValueError(
                f"potential minimum must be positive, got kappa = {self.kappa}"
            )


def covariant_gradient(psi: SpectralScalar, a_samples=None) -> np.ndarray:
    """D psi = -i grad psi + a psi at the nodes; shape (3, P1, P2, P3)."""
    dom = psi.domain
    g = gradient(psi)
    out = np.empty((3, *dom.npts), dtype=np.complex128)
    for i in range(3):
        out[i] = -1j * dom.synthesize(g.comps[i], MAXWELL_PARITIES[i])
    if a_samples is not None:
        out += np.asarray(a_samples) * psi.samples()
    return out


def apply_hamiltonian(
    psi: SpectralScalar,
    a_samples=None,
    scalar_potential=None,
) -> SpectralScalar:
    """H psi with H = 1/2 Ddag D + multiplication by the scalar potential.

    ``scalar_potential`` is the full nodal multiplier (confinement plus any
    Coulomb potential); None means zero.  Exactly symmetric and positive
    semidefinite in its kinetic part by construction.
    """
    dom = psi.domain
    dpsi = covariant_gradient(psi, a_samples)
    # Ddag: -i div of the Maxwell-parity projection plus a . (.) pullback
    proj = SpectralVector(
        dom,
        BasisFamily.MAXWELL,
        tuple(dom.analyze(dpsi[i], MAXWELL_PARITIES[i]) for i in range(3)),
    )
    out = -0.5j * divergence(proj).coeffs
    if a_samples is not None:
        adot = np.sum(np.asarray(a_samples) * dpsi, axis=0)
        out = out + 0.5 * dom.analyze(adot, SCALAR_PARITY)
    if scalar_potential is not None:
        out = out + dom.analyze(np.asarray(scalar_potential) * psi.samples(), SCALAR_PARITY)
    return SpectralScalar(dom, out)


def densities(psi: SpectralScalar, a_samples=None):
    """Charge density rho = |psi|^2 and current j = Re[conj(psi) D psi].

    Both are returned as spectral fields (rho in the scalar family, j in
    the Maxwell family); the nodal products are projected, which is the
    adjoint-consistent pullback used by the field equation.
    """
    dom = psi.domain
    s = psi.samples()
    rho = SpectralScalar(dom, dom.analyze((s.conj() * s).real, SCALAR_PARITY))
    dpsi = covariant_gradient(psi, a_samples)
    jcomps = []
    for i in range(3):
        ji = (s.conj() * dpsi[i]).real
        jcomps.append(dom.analyze(ji, MAXWELL_PARITIES[i]))
    j = SpectralVector(dom, BasisFamily.MAXWELL, tuple(jcomps))
    return rho, j


def charge(psi: SpectralScalar) -> float:
    """Total charge Q = ||psi||_L2^2."""
    return float(np.sum(np.abs(psi.coeffs) ** 2))


def kinetic_energy(psi: SpectralScalar, a_samples=None) -> float:
    """1/2 ||D psi||^2 by nodal quadrature."""
    dpsi = covariant_gradient(psi, a_samples)
    return float(0.5 * np.sum(np.abs(dpsi) ** 2) * psi.domain.cell_volume)


def matter_energy(
    psi: SpectralScalar,
    a_samples=None,
    phi_samples=None,
    a0: SpectralScalar | None = None,
) -> float:
    """E = <psi, H psi> = 1/2 ||D psi||^2 + <phi, rho> + <a0, rho>.

    Real and >= kappa Q by construction (all terms are nonnegative except
    the confinement one, which is bounded below by kappa Q nodally).
    """
    dom = psi.domain
    e = kinetic_energy(psi, a_samples)
    if phi_samples is not None or a0 is not None:
        s2 = np.abs(psi.samples()) ** 2
        v = 0.0
        if phi_samples is not None:
            v = np.asarray(phi_samples)
        if a0 is not None:
            v = v + dom.synthesize(a0.coeffs, SCALAR_PARITY).real
        e += float(np.sum(v * s2) * dom.cell_volume)
    return e
