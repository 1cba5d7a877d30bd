"""Shared helpers: random Hermitian fields and brute-force oracles."""

from __future__ import annotations

import numpy as np
import pytest

from hallmhd.spectral import (
    SpectralScalarField,
    SpectralVectorField,
    WaveLattice,
    hermitianize,
    leray_project,
)


def random_scalar(lattice: WaveLattice, seed: int, kmax: float | None = None) -> SpectralScalarField:
    """Random-phase real scalar field, zero mean, optional support cutoff."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(lattice.shape) + 1j * rng.standard_normal(lattice.shape)
    if kmax is not None:
        raw = raw * (lattice.k_sq <= kmax * kmax)
    coeffs = hermitianize(raw, lattice.nyquist_mask)
    coeffs[0, 0, 0] = 0.0
    return SpectralScalarField(lattice, coeffs)


def random_vector(
    lattice: WaveLattice, seed: int, solenoidal: bool = True, kmax: float | None = None
) -> SpectralVectorField:
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((3,) + lattice.shape) + 1j * rng.standard_normal(
        (3,) + lattice.shape
    )
    if kmax is not None:
        raw = raw * (lattice.k_sq <= kmax * kmax)
    coeffs = hermitianize(raw, lattice.nyquist_mask)
    coeffs[:, 0, 0, 0] = 0.0
    v = SpectralVectorField(lattice, coeffs)
    if solenoidal:
        v = leray_project(v)
    return v


def convolution_oracle(f: np.ndarray, g: np.ndarray, lattice: WaveLattice) -> np.ndarray:
    """Direct convolution sum (fg)hat(k) = sum_{k1+k2=k} fhat(k1) ghat(k2).

    Independent of the padded-FFT route: loops over every source mode
    and accumulates into a wide cube, then reads off the lattice modes.
    O(n^6); keep to n <= 8.
    """
    n = lattice.n_grid
    wide = 2 * n
    acc = np.zeros((wide, wide, wide), dtype=np.complex128)
    half = n // 2
    ks = np.fft.fftfreq(n, 1.0 / n).astype(int)
    ks[half] = half
    for i1 in range(n):
        for i2 in range(n):
            for i3 in range(n):
                fv = f[i1, i2, i3]
                if fv == 0.0:
                    continue
                # place fv * g at offsets k + k'; index arithmetic in the
                # wide cube keeps every sum-of-wavevectors distinct
                acc[
                    (ks[i1] + ks[:, None, None]) % wide,
                    (ks[i2] + ks[None, :, None]) % wide,
                    (ks[i3] + ks[None, None, :]) % wide,
                ] += fv * g
    out = np.zeros((n, n, n), dtype=np.complex128)
    for i1 in range(n):
        for i2 in range(n):
            for i3 in range(n):
                out[i1, i2, i3] = acc[ks[i1] % wide, ks[i2] % wide, ks[i3] % wide]
    return out * lattice.nyquist_mask


def quadrature_inner(lattice: WaveLattice, fp: np.ndarray, gp: np.ndarray) -> float:
    """Rectangle-rule inner product on physical samples; exact for trig polys."""
    n = fp.shape[-1]
    return float(np.sum(fp * gp)) * (2.0 * np.pi / n) ** 3


@pytest.fixture(scope="session")
def lat16() -> WaveLattice:
    from hallmhd.spectral import make_lattice

    return make_lattice(16)


@pytest.fixture(scope="session")
def lat8() -> WaveLattice:
    from hallmhd.spectral import make_lattice

    return make_lattice(8)
