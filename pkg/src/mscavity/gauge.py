"""Coulomb-gauge machinery: divergence-free projection, the scalar
potential solve, and boundary-condition diagnostics.

All three vector components of a Maxwell-family field carry the same mode
triple (k1,k2,k3) only when every k_i >= 1; modes with one zero index
exist in a single component and are automatically divergence free, so the
Leray projector acts mode-by-mode on the aligned all-positive block and
leaves the single-component slices alone.
"""

from __future__ import annotations

import numpy as np

from .spectral import (
    SCALAR_PARITY,
    SIN,
    BasisFamily,
    BoxDomain,
    DomainError,
    SpectralScalar,
    SpectralVector,
    vector_parities,
)


def _interior(v: SpectralVector):
    """Views of the three components on the aligned k_i >= 1 mode block."""
    return (
        v.comps[0][1:, :, :],
        v.comps[1][:, 1:, :],
        v.comps[2][:, :, 1:],
    )


def _kappa_cols(dom: BoxDomain):
    k1 = dom.kappa_axis(SIN, 0)[:, None, None]
    k2 = dom.kappa_axis(SIN, 1)[None, :, None]
    k3 = dom.kappa_axis(SIN, 2)[None, None, :]
    return k1, k2, k3


def leray_project(v: SpectralVector) -> SpectralVector:
    """Orthogonal projection onto divergence-free Maxwell fields.

    Per mode: a -> a - kappa (kappa . a) / |kappa|^2.  Idempotent and
    self-adjoint; returns a new field.
    """
    if v.family is not BasisFamily.MAXWELL:
        raise DomainError("Leray projection acts on the Maxwell family")
    out = v.copy()
    a1, a2, a3 = _interior(out)
    k1, k2, k3 = _kappa_cols(v.domain)
    ksq = k1**2 + k2**2 + k3**2
    div = (k1 * a1 + k2 * a2 + k3 * a3) / ksq
    a1 -= k1 * div
    a2 -= k2 * div
    a3 -= k3 * div
    return out


def solve_scalar_potential(rho: SpectralScalar) -> SpectralScalar:
    """Solve -Lap u = rho with wall-vanishing boundary values.

    Diagonal in the sine basis: c -> c / |kappa|^2 (never singular, since
    every scalar mode has all k_i >= 1).
    """
    ksq = rho.domain.kappa_sq(SCALAR_PARITY)
    return SpectralScalar(rho.domain, rho.coeffs / ksq)


def coulomb_energy(rho: SpectralScalar) -> float:
    """Self-interaction energy (1/2) <rho, (-Lap)^{-1} rho>, >= 0."""
    ksq = rho.domain.kappa_sq(SCALAR_PARITY)
    return float(0.5 * np.sum(np.abs(rho.coeffs) ** 2 / ksq))


def parity_face_residual(
    dom: BoxDomain,
    coeffs: np.ndarray,
    parities,
    face_axes=(0, 1, 2),
    n_tangent: int = 17,
) -> float:
    """Max |field| over the requested walls for one coefficient block."""
    worst = 0.0
    for ax in face_axes:
        for side in (0, 1):
            vals = dom.eval_on_face(coeffs, tuple(parities), ax, side, n_tangent)
            worst = max(worst, float(np.max(np.abs(vals))))
    return worst


def boundary_residual(field, n_tangent: int = 17) -> float:
    """Largest boundary-condition violation of a spectral field.

    Scalars must vanish on every wall.  Maxwell vectors must have zero
    tangential components; curl-dual vectors zero normal component.  For
    in-basis fields this is rounding noise; a genuinely out-of-class field
    shows an O(coefficient) residual.
    """
    dom = field.domain
    if isinstance(field, SpectralScalar):
        return parity_face_residual(dom, field.coeffs, SCALAR_PARITY, n_tangent=n_tangent)
    pars = vector_parities(field.family)
    worst = 0.0
    for comp in range(3):
        if field.family is BasisFamily.MAXWELL:
            faces = tuple(ax for ax in range(3) if ax != comp)  # tangential walls
        else:
            faces = (comp,)  # normal component on its own walls
        worst = max(
            worst,
            parity_face_residual(
                dom, field.comps[comp], pars[comp], faces, n_tangent
            ),
        )
    return worst
