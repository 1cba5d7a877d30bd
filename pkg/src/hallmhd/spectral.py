"""Spectral representation on the periodic box [0, 2pi)^3.

Fields are stored as complex Fourier coefficient cubes in standard FFT
layout, with the convention

    f(x) = sum_k fhat(k) exp(i k . x),

so coefficients are mode amplitudes, not raw FFT bins.  Real fields are
kept Hermitian-symmetric (fhat(-k) = conj(fhat(k))) and the Nyquist
planes are always zero, which keeps every wavevector paired with its
negative.  Quadratic terms go through zero-padded transforms so the
retained modes carry the exact convolution, free of aliasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

VOLUME = (2.0 * np.pi) ** 3


def _padded_size(n_grid: int, pad_factor: float) -> int:
    m = math.ceil(pad_factor * n_grid)
    # even sizes keep the padded grid's own Nyquist handling trivial
    if m % 2:
        m += 1
    return m


@dataclass(frozen=True)
class WaveLattice:
    """Wavevector bookkeeping for one grid resolution.

    Components of k run over (-n_grid/2, n_grid/2]; the +n_grid/2
    (Nyquist) planes are carried by the layout but always masked to
    zero so the retained set is symmetric under k -> -k.
    """

    n_grid: int
    pad_factor: float
    k1: np.ndarray = field(repr=False)
    k2: np.ndarray = field(repr=False)
    k3: np.ndarray = field(repr=False)
    k_sq: np.ndarray = field(repr=False)
    nyquist_mask: np.ndarray = field(repr=False)  # True where modes are retained

    @property
    def shape(self) -> tuple[int, int, int]:
        n = self.n_grid
        return (n, n, n)

    @property
    def padded_size(self) -> int:
        return _padded_size(self.n_grid, self.pad_factor)

    def radius(self) -> float:
        """Largest |k| among retained (non-Nyquist) modes."""
        return math.sqrt(3.0) * (self.n_grid // 2 - 1)


def make_lattice(n_grid: int, pad_factor: float = 1.5) -> WaveLattice:
    """Build the wavevector lattice for an even grid size n_grid >= 8."""
    if n_grid < 8 or n_grid % 2 != 0:
        raise ValueError(f"n_grid must be even and >= 8, got {n_grid}")
    if pad_factor < 1.0:
        raise ValueError(f"pad_factor must be >= 1, got {pad_factor}")
    axis = np.fft.fftfreq(n_grid, 1.0 / n_grid).astype(np.int64)
    # report the Nyquist component as +n/2 per the (-n/2, n/2] convention;
    # it is masked below, so arithmetic never sees the sign choice
    axis[n_grid // 2] = n_grid // 2
    k1, k2, k3 = np.meshgrid(axis, axis, axis, indexing="ij")
    k_sq = (k1 * k1 + k2 * k2 + k3 * k3).astype(np.float64)
    half = n_grid // 2
    nyq_axis = np.abs(axis) != half
    mask = nyq_axis[:, None, None] & nyq_axis[None, :, None] & nyq_axis[None, None, :]
    return WaveLattice(
        n_grid=n_grid,
        pad_factor=float(pad_factor),
        k1=k1.astype(np.float64),
        k2=k2.astype(np.float64),
        k3=k3.astype(np.float64),
        k_sq=k_sq,
        nyquist_mask=mask,
    )


@dataclass
class SpectralScalarField:
    lattice: WaveLattice
    coeffs: np.ndarray  # complex128, shape (n, n, n)

    def copy(self) -> "SpectralScalarField":
        return SpectralScalarField(self.lattice, self.coeffs.copy())


@dataclass
class SpectralVectorField:
    """Three scalar components stacked as coeffs[0..2] = (x1, x2, x3)."""

    lattice: WaveLattice
    coeffs: np.ndarray  # complex128, shape (3, n, n, n)

    def component(self, i: int) -> SpectralScalarField:
        return SpectralScalarField(self.lattice, self.coeffs[i])

    def copy(self) -> "SpectralVectorField":
        return SpectralVectorField(self.lattice, self.coeffs.copy())


def scalar_field(lattice: WaveLattice, coeffs: np.ndarray | None = None) -> SpectralScalarField:
    if coeffs is None:
        coeffs = np.zeros(lattice.shape, dtype=np.complex128)
    return SpectralScalarField(lattice, np.asarray(coeffs, dtype=np.complex128))

def vector_field(lattice: WaveLattice, coeffs: np.ndarray | None = None) -> SpectralVectorField:
    if coeffs is None:
        coeffs = np.zeros((3,) + lattice.shape, dtype=np.complex128)
    return SpectralVectorField(lattice, np.asarray(coeffs, dtype=np.complex128))


def reflected_conj(coeffs: np.ndarray) -> np.ndarray:
    """conj(coeffs) sampled at -k, i.e. index i -> (-i) mod n on each axis."""
    out = np.conj(coeffs[..., ::-1, ::-1, ::-1])
    return np.roll(out, 1, axis=(-3, -2, -1))


def hermitianize(coeffs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Project onto the Hermitian-symmetric subspace and zero the Nyquist planes."""
    return 0.5 * (coeffs + reflected_conj(coeffs)) * mask


def hermitian_defect(coeffs: np.ndarray) -> float:
    return float(np.max(np.abs(coeffs - reflected_conj(coeffs))))


# ---------------------------------------------------------------------------
# transforms

def _block_slices(n: int, m: int) -> list[tuple[slice, slice]]:
    # the non-Nyquist modes form two index blocks per axis: low [0, n/2) and
    # high (n/2, n), the latter landing at the top of the padded axis
    half = n // 2
    return [
        (slice(0, half), slice(0, half)),
        (slice(half + 1, n), slice(m - half + 1, m)),
    ]


def _embed(coeffs: np.ndarray, n: int, m: int) -> np.ndarray:
    big = np.zeros(coeffs.shape[:-3] + (m, m, m), dtype=np.complex128)
    blocks = _block_slices(n, m)
    for s1, d1 in blocks:
        for s2, d2 in blocks:
            for s3, d3 in blocks:
                big[..., d1, d2, d3] = coeffs[..., s1, s2, s3]
    return big


def _extract(spec: np.ndarray, n: int, m: int) -> np.ndarray:
    out = np.zeros(spec.shape[:-3] + (n, n, n), dtype=np.complex128)
    blocks = _block_slices(n, m)
    for s1, d1 in blocks:
        for s2, d2 in blocks:
            for s3, d3 in blocks:
                out[..., s1, s2, s3] = spec[..., d1, d2, d3]
    return out


def to_physical(lattice: WaveLattice, coeffs: np.ndarray, padded: bool = False) -> np.ndarray:
    """Evaluate f(x) = sum_k fhat(k) e^{ik.x} on the (optionally padded) grid.

    Accepts stacked inputs with leading axes; the transform runs over the
    trailing three.  Output is real (the imaginary part is rounding for
    Hermitian input and is dropped).
    """
    n = lattice.n_grid
    if padded and lattice.padded_size != n:
        work = _embed(coeffs, n, lattice.padded_size)
    else:
        work = coeffs
    phys = sfft.ifftn(work, axes=(-3, -2, -1), norm="forward")
    return np.ascontiguousarray(phys.real)


def from_physical(lattice: WaveLattice, values: np.ndarray, padded: bool = False) -> np.ndarray:
    """Forward transform of real samples back to mode amplitudes on the lattice."""
    n = lattice.n_grid
    spec = sfft.fftn(np.asarray(values, dtype=np.float64), axes=(-3, -2, -1), norm="forward")
    if padded and lattice.padded_size != n:
        m = lattice.padded_size
        if values.shape[-1] != m:
            raise ValueError(f"expected padded grid of size {m}, got {values.shape[-1]}")
        out = _extract(spec, n, m)
    else:
        out = spec
    return out * lattice.nyquist_mask


def alias_free_product(f: SpectralScalarField, g: SpectralScalarField) -> SpectralScalarField:
    """Pointwise product via zero-padded transforms.

    With pad_factor >= 3/2 the retained coefficients equal the exact
    convolution sum of the two band-limited factors; pad_factor = 1
    computes the product on the unpadded grid and aliases (useful as a
    negative control).
    """
    if f.lattice is not g.lattice and (
        f.lattice.n_grid != g.lattice.n_grid or f.lattice.pad_factor != g.lattice.pad_factor
    ):
        raise ValueError("product factors must share a lattice")
    lat = f.lattice
    fp = to_physical(lat, f.coeffs, padded=True)
    gp = to_physical(lat, g.coeffs, padded=True)
    return SpectralScalarField(lat, from_physical(lat, fp * gp, padded=True))


# ---------------------------------------------------------------------------
# calculus and norms

def derivative(f: SpectralScalarField, axis: int) -> SpectralScalarField:
    """Partial derivative along axis in {0,1,2}: multiplication by i k_axis."""
    if axis not in (0, 1, 2):
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
    k = (f.lattice.k1, f.lattice.k2, f.lattice.k3)[axis]
    return SpectralScalarField(f.lattice, 1j * k * f.coeffs * f.lattice.nyquist_mask)


def gradient(f: SpectralScalarField) -> SpectralVectorField:
    lat = f.lattice
    out = np.empty((3,) + lat.shape, dtype=np.complex128)
    for ax, k in enumerate((lat.k1, lat.k2, lat.k3)):
        out[ax] = 1j * k * f.coeffs
    return SpectralVectorField(lat, out * lat.nyquist_mask)


def divergence(v: SpectralVectorField) -> SpectralScalarField:
    lat = v.lattice
    out = 1j * (lat.k1 * v.coeffs[0] + lat.k2 * v.coeffs[1] + lat.k3 * v.coeffs[2])
    return SpectralScalarField(lat, out * lat.nyquist_mask)


def sobolev_norm(f: SpectralScalarField | SpectralVectorField, s: float) -> float:
    """H^s norm with multiplier (1 + |k|^2)^{s/2}.

    Vector fields give the root-sum-square over components.  The sum
    carries the (2pi)^3 box volume, so ||sin x1||_{H^0} = sqrt((2pi)^3/2).
    """
    w = (1.0 + f.lattice.k_sq) ** s
    mags = np.abs(f.coeffs) ** 2
    if mags.ndim == 4:
        mags = mags.sum(axis=0)
    return math.sqrt(float(np.sum(w * mags)) * VOLUME)


def weighted_mode_sum(f: SpectralScalarField | SpectralVectorField, weight: np.ndarray) -> float:
    """sum_k weight(k) |fhat(k)|^2 (2pi)^3, components summed for vectors."""
    mags = np.abs(f.coeffs) ** 2
    if mags.ndim == 4:
        mags = mags.sum(axis=0)
    return float(np.sum(weight * mags)) * VOLUME


def l2_inner(f, g) -> float:
    """Real L^2 inner product <f, g> = sum_k fhat . conj(ghat) (2pi)^3."""
    acc = np.sum(f.coeffs * np.conj(g.coeffs))
    return float(acc.real) * VOLUME


def leray_project(v: SpectralVectorField) -> SpectralVectorField:
    """Remove the gradient part: vhat -> vhat - k (k.vhat)/|k|^2, k=0 untouched."""
    lat = v.lattice
    k_sq = lat.k_sq.copy()
    k_sq[0, 0, 0] = 1.0  # k=0 has no gradient component to remove
    kdotv = lat.k1 * v.coeffs[0] + lat.k2 * v.coeffs[1] + lat.k3 * v.coeffs[2]
    scale = kdotv / k_sq
    out = np.empty_like(v.coeffs)
    out[0] = v.coeffs[0] - lat.k1 * scale
    out[1] = v.coeffs[1] - lat.k2 * scale
    out[2] = v.coeffs[2] - lat.k3 * scale
    return SpectralVectorField(lat, out)


def solenoidal_defect(v: SpectralVectorField) -> float:
    """max_k |k . vhat(k)|, the absolute divergence residual in mode space."""
    lat = v.lattice
    kdotv = lat.k1 * v.coeffs[0] + lat.k2 * v.coeffs[1] + lat.k3 * v.coeffs[2]
    return float(np.max(np.abs(kdotv)))


def mean_mode_max(v: SpectralVectorField) -> float:
    return float(np.max(np.abs(v.coeffs[:, 0, 0, 0])))


def assert_solenoidal(v: SpectralVectorField, tol_div: float = 1e-8) -> None:
    scale = float(np.max(np.sqrt(v.lattice.k_sq) * np.abs(v.coeffs).max(axis=0)))
    if solenoidal_defect(v) > tol_div * max(scale, 1e-300):
        raise ValueError("vector field is not solenoidal within tolerance")
