"""Nonlinear and coupling terms of the Hall-MHD system.

All quadratic terms run through the alias-free padded transforms, so the
discrete versions of the continuum cancellations (energy-neutral
advection, Lorentz/induction pairing, Hall orthogonality) hold to
rounding, not just to truncation order.  Velocity advection inside the
assembled tendencies uses the rotational form (curl u) x u, whose
difference from u.grad u is a pure gradient and is removed exactly by
the Leray projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import (
    SpectralScalarField,
    SpectralVectorField,
    WaveLattice,
    assert_solenoidal,
    derivative,
    from_physical,
    leray_project,
    to_physical,
    vector_field,
)


@dataclass
class Tendency:
    """Right-hand side of the evolution system at one instant."""

    du: SpectralVectorField
    db: SpectralVectorField


def curl(v: SpectralVectorField) -> SpectralVectorField:
    """Spectral curl: (i k) x vhat."""
    lat = v.lattice
    k1, k2, k3 = lat.k1, lat.k2, lat.k3
    c = v.coeffs
    out = np.empty_like(c)
    out[0] = 1j * (k2 * c[2] - k3 * c[1])
    out[1] = 1j * (k3 * c[0] - k1 * c[2])
    out[2] = 1j * (k1 * c[1] - k2 * c[0])
    return SpectralVectorField(lat, out * lat.nyquist_mask)


def directional_derivative(v: SpectralVectorField, n_vec: np.ndarray) -> SpectralVectorField:
    """Constant-coefficient n.grad, the multiplier i (n.k) per mode."""
    lat = v.lattice
    alpha = n_vec[0] * lat.k1 + n_vec[1] * lat.k2 + n_vec[2] * lat.k3
    return SpectralVectorField(lat, 1j * alpha * v.coeffs)


def _cross_phys(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    out = np.empty_like(a)
    out[0] = a[1] * b[2] - a[2] * b[1]
    out[1] = a[2] * b[0] - a[0] * b[2]
    out[2] = a[0] * b[1] - a[1] * b[0]
    return out


def advect(u: SpectralVectorField, f: SpectralVectorField) -> SpectralVectorField:
    """(u . grad) f, componentwise alias-free products."""
    lat = u.lattice
    up = to_physical(lat, u.coeffs, padded=True)
    grads = np.empty((3, 3) + lat.shape, dtype=np.complex128)
    for i in range(3):
        for j, k in enumerate((lat.k1, lat.k2, lat.k3)):
            grads[i, j] = 1j * k * f.coeffs[i]
    gp = to_physical(lat, grads, padded=True)
    out_phys = np.einsum("jxyz,ijxyz->ixyz", up, gp)
    return SpectralVectorField(lat, from_physical(lat, out_phys, padded=True))


def lorentz(b: SpectralVectorField) -> SpectralVectorField:
    """(curl b) x b."""
    lat = b.lattice
    jp = to_physical(lat, curl(b).coeffs, padded=True)
    bp = to_physical(lat, b.coeffs, padded=True)
    return SpectralVectorField(lat, from_physical(lat, _cross_phys(jp, bp), padded=True))


def hall_term(b: SpectralVectorField) -> SpectralVectorField:
    """curl((curl b) x b), the Hall contribution to the induction equation."""
    return curl(lorentz(b))


def induction_term(u: SpectralVectorField, b: SpectralVectorField) -> SpectralVectorField:
    """curl(u x b)."""
    lat = u.lattice
    up = to_physical(lat, u.coeffs, padded=True)
    bp = to_physical(lat, b.coeffs, padded=True)
    uxb = SpectralVectorField(lat, from_physical(lat, _cross_phys(up, bp), padded=True))
    return curl(uxb)


def hall_term_expanded(b: SpectralVectorField) -> SpectralVectorField:
    """b.grad(curl b) - (curl b).grad b; cross-check form of the Hall term.

    Identical to hall_term for solenoidal b (both equal curl of the
    Lorentz force); kept as an independent route for the identity suite.
    """
    j = curl(b)
    term1 = advect(b, j)
    term2 = advect(j, b)
    return SpectralVectorField(b.lattice, term1.coeffs - term2.coeffs)


def dissipation_multiplier(lattice: WaveLattice, gamma: float) -> np.ndarray:
    """|k|^{2 gamma}, the symbol of (-Laplace)^gamma."""
    if not (0.5 < gamma <= 2.0):
        raise ValueError(f"gamma must lie in (1/2, 2], got {gamma}")
    return lattice.k_sq ** gamma


# ---------------------------------------------------------------------------
# assembled tendencies

def _nonlinear_parts(
    u: SpectralVectorField, b: SpectralVectorField
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Momentum advection (rotational form), Lorentz force, u x b, as coefficients."""
    lat = u.lattice
    stack = np.concatenate(
        [u.coeffs, b.coeffs, curl(u).coeffs, curl(b).coeffs], axis=0
    ).reshape(4, 3, *lat.shape)
    phys = to_physical(lat, stack, padded=True)
    up, bp, wp, jp = phys[0], phys[1], phys[2], phys[3]
    prods = np.empty((3, 3) + up.shape[1:], dtype=np.float64)
    prods[0] = _cross_phys(wp, up)   # (curl u) x u
    prods[1] = _cross_phys(jp, bp)   # (curl b) x b
    prods[2] = _cross_phys(up, bp)   # u x b
    spec = from_physical(lat, prods, padded=True)
    return spec[0], spec[1], spec[2]


def rhs_original(
    u: SpectralVectorField, b: SpectralVectorField, gamma: float = 1.0, tol_div: float = 1e-8
) -> Tendency:
    """Tendency of the unperturbed system.

    du = P[-u.grad u + (curl b) x b]
    db = -(-Laplace)^gamma b + curl(u x b) - curl((curl b) x b)
    """
    assert_solenoidal(u, tol_div)
    assert_solenoidal(b, tol_div)
    lat = u.lattice
    adv_rot, lor, uxb = _nonlinear_parts(u, b)
    du = leray_project(SpectralVectorField(lat, lor - adv_rot))
    db = (
        curl(SpectralVectorField(lat, uxb)).coeffs
        - curl(SpectralVectorField(lat, lor)).coeffs
        - dissipation_multiplier(lat, gamma) * b.coeffs
    )
    return Tendency(du=du, db=SpectralVectorField(lat, db))


def rhs_perturbed(
    u: SpectralVectorField,
    b: SpectralVectorField,
    n_vec: np.ndarray,
    gamma: float = 1.0,
    tol_div: float = 1e-8,
) -> Tendency:
    """Tendency of the system for fluctuations about the constant background n.

    du = P[-u.grad u + n.grad b + (curl b) x b]
    db = -(-Laplace)^gamma b + curl(u x b) + n.grad u
         - n.grad(curl b) - curl((curl b) x b)
    """
    assert_solenoidal(u, tol_div)
    assert_solenoidal(b, tol_div)
    lat = u.lattice
    n_vec = np.asarray(n_vec, dtype=np.float64)
    adv_rot, lor, uxb = _nonlinear_parts(u, b)
    coupling = explicit_coupling(u, b, n_vec)
    du = leray_project(SpectralVectorField(lat, lor - adv_rot))
    du = SpectralVectorField(lat, du.coeffs + coupling[0])
    db = (
        curl(SpectralVectorField(lat, uxb)).coeffs
        - curl(SpectralVectorField(lat, lor)).coeffs
        + coupling[1]
        - dissipation_multiplier(lat, gamma) * b.coeffs
    )
    return Tendency(du=du, db=SpectralVectorField(lat, db))


def explicit_coupling(
    u: SpectralVectorField, b: SpectralVectorField, n_vec: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Linear background coupling: (n.grad b, n.grad u - n.grad curl b).

    n.grad b is already solenoidal, so the projection in the momentum
    equation leaves it unchanged.
    """
    lat = u.lattice
    alpha = 1j * (n_vec[0] * lat.k1 + n_vec[1] * lat.k2 + n_vec[2] * lat.k3)
    cu = alpha * b.coeffs
    cb = alpha * u.coeffs - alpha * curl(b).coeffs
    return cu, cb


def explicit_tendency(
    u: SpectralVectorField, b: SpectralVectorField, n_vec: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Everything except the diffusion term, for the integrating-factor step."""
    lat = u.lattice
    adv_rot, lor, uxb = _nonlinear_parts(u, b)
    cu, cb = explicit_coupling(u, b, n_vec)
    du = leray_project(SpectralVectorField(lat, lor - adv_rot)).coeffs + cu
    db = (
        curl(SpectralVectorField(lat, uxb)).coeffs
        - curl(SpectralVectorField(lat, lor)).coeffs
        + cb
    )
    return du, db


def pressure_from_state(
    u: SpectralVectorField, b: SpectralVectorField, n_vec: np.ndarray | None = None
) -> SpectralScalarField:
    """Recover the pressure from |k|^2 phat = -i k . Fhat.

    F is the unprojected momentum flux -u.grad u + (curl b) x b plus the
    background coupling when n is given; the zero mode of p is zero.
    """
    lat = u.lattice
    flux = lorentz(b).coeffs - advect(u, u).coeffs
    if n_vec is not None:
        flux = flux + explicit_coupling(u, b, np.asarray(n_vec, dtype=np.float64))[0]
    kdotf = lat.k1 * flux[0] + lat.k2 * flux[1] + lat.k3 * flux[2]
    k_sq = lat.k_sq.copy()
    k_sq[0, 0, 0] = 1.0
    p = -1j * kdotf / k_sq
    p[0, 0, 0] = 0.0
    return SpectralScalarField(lat, p * lat.nyquist_mask)
