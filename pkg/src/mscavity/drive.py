"""Static potential presets and the quasi-periodic pumping field.

Pump profiles are finite combinations of Maxwell-family modes, so the
conducting-wall conditions hold exactly; each profile is passed through the
divergence-free projection at load time and normalized to unit L2 norm, so
amplitudes are directly comparable.  Almost-periodic driving is realized as
a finite trigonometric sum with arbitrary, possibly incommensurate,
frequencies (the only finitely representable subclass).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gauge import leray_project
from .matter import PotentialSet
from .spectral import (
    BasisFamily,
    BoxDomain,
    DomainError,
    SpectralVector,
    axis_derivative,
    vector_parities,
)

MAXWELL_PARITIES = vector_parities(BasisFamily.MAXWELL)


@dataclass(frozen=True)
class PumpTerm:
    """One trigonometric pump component: c * cos(omega t + theta) * e_mode."""

    mode: tuple[int, int, int]
    weights: tuple[float, float, float]
    amplitude: float
    omega: float = 0.0
    phase: float = 0.0


def _term_profile(domain: BoxDomain, term: PumpTerm) -> SpectralVector:
    """Unit-norm divergence-free profile for one pump term."""
    comps = []
    for i in range(3):
        par = MAXWELL_PARITIES[i]
        c = np.zeros(domain.coeff_shape(par))
        if term.weights[i] != 0.0:
            idx = []
            for ax in range(3):
                m = term.mode[ax]
                n = domain.modes[ax]
                if par[ax] == "sin":
                    if not 1 <= m <= n:
                        raise DomainError(
                            f"pump mode {term.mode} needs sine index in 1..{n} on axis {ax}"
                        )
                    idx.append(m - 1)
                else:
                    if not 0 <= m <= n:
                        raise DomainError(
                            f"pump mode {term.mode} needs cosine index in 0..{n} on axis {ax}"
                        )
                    idx.append(m)
            c[tuple(idx)] = term.weights[i]
        comps.append(c)
    raw = SpectralVector(domain, BasisFamily.MAXWELL, tuple(comps))
    proj = leray_project(raw)
    norm = math.sqrt(sum(float(np.sum(c**2)) for c in proj.comps))
    if norm < 1e-12:
        raise ValueError(
            f"pump term with mode {term.mode}, weights {term.weights} is a pure "
            "gradient: the divergence-free projection annihilates it"
        )
    return SpectralVector(
        domain, BasisFamily.MAXWELL, tuple(c / norm for c in proj.comps)
    )


@dataclass(frozen=True)
class PumpSpec:
    """Validated pump: projected unit profiles plus per-term time laws."""

    domain: BoxDomain
    terms: tuple[PumpTerm, ...]
    profiles: tuple[SpectralVector, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "profiles",
            tuple(_term_profile(self.domain, t) for t in self.terms),
        )


def pump_eval(spec: PumpSpec, t: float):
    """(A_p, dA_p/dt) at time t, exact trigonometric time dependence."""
    a = SpectralVector.zeros(spec.domain, BasisFamily.MAXWELL)
    adot = SpectralVector.zeros(spec.domain, BasisFamily.MAXWELL)
    for term, prof in zip(spec.terms, spec.profiles):
        ph = term.omega * t + term.phase
        a = a + (term.amplitude * math.cos(ph)) * prof
        adot = adot + (-term.amplitude * term.omega * math.sin(ph)) * prof
    return a, adot


def pump_bounds(spec: PumpSpec, t_grid) -> dict:
    """Pointwise sup bounds of |A_p|, |grad A_p|, |dA_p/dt| over a time grid.

    These are the finiteness quantities the driving assumption asks for;
    they scale linearly in the amplitudes.
    """
    dom = spec.domain
    sup_a = sup_grad = sup_adot = 0.0
    for t in np.atleast_1d(np.asarray(t_grid, dtype=float)):
        a, adot = pump_eval(spec, float(t))
        mag = np.zeros(dom.npts)
        jac = np.zeros(dom.npts)
        dmag = np.zeros(dom.npts)
        for i in range(3):
            par = MAXWELL_PARITIES[i]
            mag += dom.synthesize(a.comps[i], par) ** 2
            dmag += dom.synthesize(adot.comps[i], par) ** 2
            for ax in range(3):
                dc, dp = axis_derivative(dom, a.comps[i], par, ax)
                jac += dom.synthesize(dc, dp) ** 2
        sup_a = max(sup_a, math.sqrt(float(mag.max())))
        sup_grad = max(sup_grad, math.sqrt(float(jac.max())))
        sup_adot = max(sup_adot, math.sqrt(float(dmag.max())))
    return {
        "sup_pump": sup_a,
        "sup_grad_pump": sup_grad,
        "sup_pump_rate": sup_adot,
        "sup_total": sup_a + sup_grad + sup_adot,
    }


def phi_preset(domain: BoxDomain, name: str, params: dict | None = None) -> PotentialSet:
    """Build one of the named confinement potentials on the grid.

    constant: flat value.  well: offset + strength * prod x_i (L_i - x_i),
    minimum near the walls.  soft-coulomb: offset - charge / sqrt(r^2 + a^2)
    centered in the box by default.  The grid minimum must come out positive.
    """
    params = dict(params or {})
    x, y, z = domain.grid()
    lx, ly, lz = domain.lengths
    if name == "constant":
        value = float(params.pop("value", 1.0))
        phi = np.full(domain.npts, value)
    elif name == "well":
        offset = float(params.pop("offset", 1.0))
        strength = float(params.pop("strength", 1.0))
        phi = offset + strength * (x * (lx - x)) * (y * (ly - y)) * (z * (lz - z))
    elif name == "soft-coulomb":
        offset = float(params.pop("offset", 2.0))
        zq = float(params.pop("charge", 1.0))
        soft = float(params.pop("softening", 0.5))
        center = params.pop("center", (0.5 * lx, 0.5 * ly, 0.5 * lz))
        cx, cy, cz = (float(c) for c in center)
        r2 = (x - cx) ** 2 + (y - cy) ** 2 + (z - cz) ** 2
        phi = offset - zq / np.sqrt(r2 + soft**2)
    else:
        raise ValueError(
            f"unknown potential preset {name!r}; expected constant, well, or soft-coulomb"
        )
    if params:
        raise ValueError(f"unknown parameters for preset {name!r}: {sorted(params)}")
    return PotentialSet(domain, phi, label=name)
