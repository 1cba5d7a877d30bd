"""Finite-radius Diophantine certificates for the background direction.

A background n is useful when |n . k| >= c / |k|^r for every nonzero
integer wavevector.  Nothing finite can certify that for all k, so the
estimate here is the exhaustive minimum of |n . k| |k|^r over 0 < |k| <= K,
which is exactly the constant that the mode-wise Poincare inequality
needs on any lattice of radius <= K.  Dot products are accumulated in
80-bit extended precision to keep the near-cancelling directions honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralScalarField, SpectralVectorField, sobolev_norm

# cubic-field triples (1, t, t^2) are rationally independent with
# near-optimal simultaneous approximation exponents, so their finite-K
# minima stay well away from zero
_CANDIDATE_TRIPLES: tuple[tuple[float, float, float], ...] = (
    (1.0, 2.0 ** (1.0 / 3.0), 4.0 ** (1.0 / 3.0)),
    (1.0, 3.0 ** (1.0 / 3.0), 9.0 ** (1.0 / 3.0)),
    (1.0, 5.0 ** (1.0 / 3.0), 25.0 ** (1.0 / 3.0)),
    (1.0, 2.0 ** (1.0 / 3.0), 3.0 ** (1.0 / 3.0)),
)

_CANDIDATE_FLOOR = 1e-6  # reject candidates whose scaled c_est falls below floor*amplitude


@dataclass(frozen=True)
class DiophantineVector:
    """A background direction together with its finite-radius certificate."""

    n: np.ndarray = field(repr=False)
    r: float
    K: int
    c_est: float
    argmin: tuple[int, int, int]

    def __post_init__(self):
        object.__setattr__(self, "n", np.asarray(self.n, dtype=np.float64).reshape(3))

    @property
    def magnitude(self) -> float:
        return float(np.linalg.norm(self.n))

    def usable(self) -> bool:
        return self.c_est > 0.0


@dataclass
class ShellReport:
    radius: int          # shell j covers j-1 < |k| <= j
    min_value: float
    argmin: tuple[int, int, int]
    satisfied: bool


@dataclass
class ConditionReport:
    c: float
    satisfied: bool
    tightest_shell: int
    shells: list[ShellReport]


def lattice_search_radius(n_grid: int) -> int:
    """Smallest K covering every retained mode of an n_grid lattice."""
    return math.ceil(math.sqrt(3.0) * (n_grid // 2 - 1))


def _slab_minima(n_vec: np.ndarray, r: float, K: int):
    """Yield (value, |k|^2, k1, k2, k3) slab minima in ascending k1 order.

    Values are np.longdouble; ties inside a slab resolve to the smallest
    (|k|^2, k2, k3), so the caller's tuple comparison implements the
    global (value, |k|^2, lexicographic) tie-break.
    """
    n1, n2, n3 = (np.longdouble(c) for c in n_vec)
    axis = np.arange(-K, K + 1, dtype=np.int64)
    k2g, k3g = np.meshgrid(axis, axis, indexing="ij")
    ksq_plane = k2g * k2g + k3g * k3g
    rhalf = np.longdouble(r) / 2.0
    for k1 in range(-K, K + 1):
        ksq = k1 * k1 + ksq_plane
        mask = (ksq > 0) & (ksq <= K * K)
        if not mask.any():
            continue
        dot = n1 * k1 + n2 * k2g.astype(np.longdouble) + n3 * k3g.astype(np.longdouble)
        val = np.abs(dot) * np.power(ksq.astype(np.longdouble), rhalf)
        val = np.where(mask, val, np.longdouble(np.inf))
        vmin = val.min()
        tie = np.argwhere(val == vmin)
        order = np.lexsort(
            (tie[:, 1], tie[:, 0], ksq[tie[:, 0], tie[:, 1]])
        )  # sort keys: |k|^2 outermost, then k2, then k3
        i2, i3 = tie[order[0]]
        yield vmin, int(ksq[i2, i3]), int(k1), int(axis[i2]), int(axis[i3])


def min_product(n_vec: np.ndarray, r: float, K: int) -> tuple[float, tuple[int, int, int]]:
    """Exhaustive min of |n.k| |k|^r over 0 < |k| <= K.

    Returns (c_est, argmin).  Ties break toward the smallest |k|^2 and
    then lexicographically smallest (k1, k2, k3), which keeps the
    reported witness independent of K for degenerate backgrounds.
    """
    n_vec = np.asarray(n_vec, dtype=np.float64).reshape(3)
    if not r > 2.0:
        raise ValueError(f"r must exceed 2, got {r}")
    if K < 1:
        raise ValueError(f"K must be a positive integer, got {K}")
    best = None
    for vmin, ksq, k1, k2, k3 in _slab_minima(n_vec, r, int(K)):
        cand = (vmin, ksq, k1, k2, k3)
        if best is None or cand < best:
            best = cand
    value = float(best[0])
    if value < 1e-300:
        value = 0.0  # an exact integer-orthogonal witness
    return value, (best[2], best[3], best[4])


def check_condition(dv: DiophantineVector, c: float) -> ConditionReport:
    """Per-shell verdicts for |n.k| |k|^r >= c up to radius K.

    c = 0 is accepted and trivially satisfied everywhere.
    """
    if c < 0.0:
        raise ValueError(f"threshold c must be nonnegative, got {c}")
    shell_best: dict[int, tuple] = {}
    for vmin, ksq, k1, k2, k3 in _slab_minima(dv.n, dv.r, dv.K):
        j = math.ceil(math.sqrt(ksq))
        cand = (vmin, ksq, k1, k2, k3)
        if j not in shell_best or cand < shell_best[j]:
            shell_best[j] = cand
    shells = []
    global_best = None
    global_shell = 0
    for j in sorted(shell_best):
        vmin, ksq, k1, k2, k3 = shell_best[j]
        shells.append(
            ShellReport(
                radius=j,
                min_value=float(vmin),
                argmin=(k1, k2, k3),
                satisfied=bool(vmin >= c),
            )
        )
        if global_best is None or shell_best[j] < global_best:
            global_best = shell_best[j]
            global_shell = j
    return ConditionReport(
        c=float(c),
        satisfied=all(s.satisfied for s in shells),
        tightest_shell=global_shell,
        shells=shells,
    )


def verify_poincare(
    f: SpectralScalarField | SpectralVectorField, dv: DiophantineVector, s: float
) -> tuple[float, float, float]:
    """Check ||f||_{H^s} <= (1/c_est) ||n.grad f||_{H^{s+r}} for mean-zero f.

    Returns (lhs, rhs, ratio).  The inequality holds mode by mode
    whenever c_est was computed with K covering the lattice, so any
    violation indicates a defect, not a near-miss.
    """
    if dv.c_est <= 0.0:
        raise ValueError("background has c_est = 0; Poincare bound is void")
    lat = f.lattice
    if lat.radius() > dv.K + 1e-9:
        raise ValueError(
            f"lattice radius {lat.radius():.2f} exceeds certificate radius K={dv.K}"
        )
    mean = np.abs(f.coeffs[..., 0, 0, 0]).max()
    scale = np.abs(f.coeffs).max()
    if mean > 1e-13 * max(scale, 1e-300):
        raise ValueError("field must have zero mean for the Poincare bound")
    lhs = sobolev_norm(f, s)
    alpha = dv.n[0] * lat.k1 + dv.n[1] * lat.k2 + dv.n[2] * lat.k3
    w = (1.0 + lat.k_sq) ** (s + dv.r) * alpha**2
    mags = np.abs(f.coeffs) ** 2
    if mags.ndim == 4:
        mags = mags.sum(axis=0)
    rhs = math.sqrt(float(np.sum(w * mags)) * (2.0 * np.pi) ** 3) / dv.c_est
    ratio = 0.0 if rhs == 0.0 else lhs / rhs
    return lhs, rhs, ratio


def suggest_background(r: float, K: int, amplitude: float) -> DiophantineVector:
    """Pick an amplitude-|n| background from the cubic-irrational candidates.

    Candidates are normalized to |n| = amplitude and screened by their
    finite-K estimate; the first one clearing the floor wins.  A zero
    amplitude returns the zero vector with c_est = 0, which downstream
    consumers must reject.
    """
    if amplitude == 0.0:
        # argmin matches what min_product's tie-break reports for a
        # degenerate direction: every product is zero, so the smallest
        # |k|^2 = 1 mode with lexicographically least components wins
        return DiophantineVector(
            n=np.zeros(3), r=float(r), K=int(K), c_est=0.0, argmin=(-1, 0, 0)
        )
    best = None
    for triple in _CANDIDATE_TRIPLES:
        n_vec = np.asarray(triple, dtype=np.float64)
        n_vec = n_vec * (amplitude / float(np.linalg.norm(n_vec)))
        c_est, argmin = min_product(n_vec, r, K)
        dv = DiophantineVector(n=n_vec, r=float(r), K=int(K), c_est=c_est, argmin=argmin)
        if c_est >= _CANDIDATE_FLOOR * abs(amplitude):
            return dv
        if best is None or c_est > best.c_est:
            best = dv
    return best


def certify(n_vec: np.ndarray, r: float, K: int) -> DiophantineVector:
    """Wrap an explicit background with its finite-radius certificate."""
    c_est, argmin = min_product(n_vec, r, K)
    return DiophantineVector(
        n=np.asarray(n_vec, dtype=np.float64), r=float(r), K=int(K), c_est=c_est, argmin=argmin
    )
