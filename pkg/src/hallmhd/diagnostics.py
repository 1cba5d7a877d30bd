"""Energy functionals, cancellation residuals, decay fits, CSV emission.

The monitored energy couples the H^{r+4} norms to a cross term built
from integer derivative orders s = 0..floor(r+3); with the weight A
from choose_A it dominates the plain squared norms, and along solutions
dE/dt + D/2 <= 0 within finite-difference error.  Everything here is a
pure function of sampled states or series; figure rendering lives in
the CLI report layer, and this module emits CSV only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .diophantine import DiophantineVector
from .operators import (
    advect,
    curl,
    directional_derivative,
    hall_term,
    pressure_from_state,
    rhs_perturbed,
)
from .spectral import (
    VOLUME,
    SpectralScalarField,
    SpectralVectorField,
    gradient,
    l2_inner,
    mean_mode_max,
    sobolev_norm,
    solenoidal_defect,
    to_physical,
    weighted_mode_sum,
)

IDENTITY_NAMES = (
    "id_advect_u",
    "id_advect_b",
    "id_cross_b",
    "id_cross_n",
    "id_hall_b",
    "id_lorentz_pw",
    "id_pressure",
    "id_mean",
)

NORM_FLOOR = 1e-13      # below this the decay verdict passes outright
DEFAULT_MARGIN = 0.15   # fitted exponent may trail the prediction by this much
_TINY = 1e-300


@dataclass
class EnergyReport:
    t: float
    dt: float
    l2_u: float
    l2_b: float
    grad_b_l2: float
    hs_u: tuple[float, ...]
    hs_b: tuple[float, ...]
    E: float
    D: float
    div_max: float
    mean_max: float
    identities: dict[str, float]
    lyap_residual: float = math.nan


@dataclass
class DecayFit:
    fitted_alpha: float
    predicted_alpha: float
    r_squared: float
    window: tuple[float, float]
    n_points: int
    passed: bool
    at_floor: bool


def choose_A(dv: DiophantineVector) -> float:
    """A = 1 + (floor(r+3)+1) |n|; makes E dominate the squared norms."""
    return 1.0 + (math.floor(dv.r + 3.0) + 1.0) * dv.magnitude


def _cross_term_base(u: SpectralVectorField, b: SpectralVectorField, dv: DiophantineVector):
    lat = u.lattice
    alpha = dv.n[0] * lat.k1 + dv.n[1] * lat.k2 + dv.n[2] * lat.k3
    # Re[ bhat . conj(i alpha uhat) ] summed over components
    return np.real(np.sum(b.coeffs * np.conj(1j * alpha * u.coeffs), axis=0))


def energy_E(
    u: SpectralVectorField, b: SpectralVectorField, dv: DiophantineVector, A: float
) -> float:
    """A(||u||^2 + ||b||^2)_{H^{r+4}} minus the integer-order cross sum."""
    lat = u.lattice
    w = 1.0 + lat.k_sq
    s_top = math.floor(dv.r + 3.0)
    norms = (
        weighted_mode_sum(u, w ** (dv.r + 4.0))
        + weighted_mode_sum(b, w ** (dv.r + 4.0))
    )
    base = _cross_term_base(u, b, dv)
    cross = 0.0
    for s in range(s_top + 1):
        cross += float(np.sum(w**s * base))
    return A * norms - cross * VOLUME


def dissipation_D(
    u: SpectralVectorField, b: SpectralVectorField, dv: DiophantineVector, A: float
) -> float:
    """A ||grad b||^2_{H^{r+4}} + ||n.grad u||^2_{H^{r+3}}."""
    lat = u.lattice
    w = 1.0 + lat.k_sq
    alpha_sq = (dv.n[0] * lat.k1 + dv.n[1] * lat.k2 + dv.n[2] * lat.k3) ** 2
    term_b = weighted_mode_sum(b, w ** (dv.r + 4.0) * lat.k_sq)
    term_u = weighted_mode_sum(u, w ** (dv.r + 3.0) * alpha_sq)
    return A * term_b + term_u


# ---------------------------------------------------------------------------
# identity suite

def identity_suite(
    u: SpectralVectorField,
    b: SpectralVectorField,
    dv: DiophantineVector,
    gamma: float = 1.0,
) -> dict[str, float]:
    """Normalized residuals of the discrete cancellation identities.

    Keys follow IDENTITY_NAMES: the energy-neutral advection pair, the
    two mixed pairings, Hall orthogonality against b, the pointwise
    Lorentz-force orthogonality, the pressure/coupling orthogonality at
    each integer order, and mean preservation of the full tendency.
    Each residual is scaled by the product of the norms that enter it.
    """
    lat = u.lattice
    norm_u = sobolev_norm(u, 0.0)
    norm_b = sobolev_norm(b, 0.0)
    out: dict[str, float] = {}

    adv_uu = advect(u, u)
    adv_ub = advect(u, b)
    out["id_advect_u"] = abs(l2_inner(adv_uu, u)) / (sobolev_norm(adv_uu, 0.0) * norm_u + _TINY)
    out["id_advect_b"] = abs(l2_inner(adv_ub, b)) / (sobolev_norm(adv_ub, 0.0) * norm_b + _TINY)

    adv_bb = advect(b, b)
    adv_bu = advect(b, u)
    num = l2_inner(adv_bb, u) + l2_inner(adv_bu, b)
    den = (
        sobolev_norm(adv_bb, 0.0) * norm_u + sobolev_norm(adv_bu, 0.0) * norm_b + _TINY
    )
    out["id_cross_b"] = abs(num) / den

    ndb = directional_derivative(b, dv.n)
    ndu = directional_derivative(u, dv.n)
    num = l2_inner(ndb, u) + l2_inner(ndu, b)
    den = sobolev_norm(ndb, 0.0) * norm_u + sobolev_norm(ndu, 0.0) * norm_b + _TINY
    out["id_cross_n"] = abs(num) / den

    hall = hall_term(b)
    out["id_hall_b"] = abs(l2_inner(hall, b)) / (sobolev_norm(hall, 0.0) * norm_b + _TINY)

    jp = to_physical(lat, curl(b).coeffs, padded=True)
    bp = to_physical(lat, b.coeffs, padded=True)
    triple = (
        (jp[1] * bp[2] - jp[2] * bp[1]) * jp[0]
        + (jp[2] * bp[0] - jp[0] * bp[2]) * jp[1]
        + (jp[0] * bp[1] - jp[1] * bp[0]) * jp[2]
    )
    scale = float(np.max(jp[0] ** 2 + jp[1] ** 2 + jp[2] ** 2)) * float(np.max(np.abs(bp)))
    out["id_lorentz_pw"] = float(np.max(np.abs(triple))) / (scale + _TINY)

    p = pressure_from_state(u, b, dv.n)
    gp = gradient(p)
    w = 1.0 + lat.k_sq
    base = np.real(np.sum(ndb.coeffs * np.conj(gp.coeffs), axis=0))
    worst = 0.0
    for s in range(math.floor(dv.r + 3.0) + 1):
        num = abs(float(np.sum(w**s * base)) * VOLUME)
        den = sobolev_norm(ndb, float(s)) * sobolev_norm(gp, float(s)) + _TINY
        worst = max(worst, num / den)
    out["id_pressure"] = worst

    tend = rhs_perturbed(u, b, dv.n, gamma)
    scale = max(
        float(np.max(np.abs(tend.du.coeffs))), float(np.max(np.abs(tend.db.coeffs))), _TINY
    )
    out["id_mean"] = max(mean_mode_max(tend.du), mean_mode_max(tend.db)) / scale
    return out


# ---------------------------------------------------------------------------
# series diagnostics

def fd_weights(nodes: np.ndarray, x0: float, order: int) -> np.ndarray:
    """Finite-difference weights for the order-th derivative at x0.

    Fornberg's recursion; nodes need not be uniform.
    """
    nodes = np.asarray(nodes, dtype=np.float64)
    n = len(nodes)
    if n < order + 1:
        raise ValueError(f"need at least {order + 1} nodes for order {order}")
    c = np.zeros((n, order + 1))
    c[0, 0] = 1.0
    c1 = 1.0
    c4 = nodes[0] - x0
    for i in range(1, n):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = nodes[i] - x0
        for j in range(i):
            c3 = nodes[i] - nodes[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def lyapunov_monitor(ts: np.ndarray, Es: np.ndarray, Ds: np.ndarray) -> np.ndarray:
    """Centered-difference dE/dt + D/2 at interior samples.

    Returns residuals aligned with ts[1:-1]; frames the Lyapunov
    inequality, so values should be <= a small positive tolerance.
    """
    ts = np.asarray(ts, dtype=np.float64)
    Es = np.asarray(Es, dtype=np.float64)
    Ds = np.asarray(Ds, dtype=np.float64)
    if len(ts) < 3:
        raise ValueError("need at least 3 samples for the Lyapunov monitor")
    res = np.empty(len(ts) - 2)
    for i in range(1, len(ts) - 1):
        w = fd_weights(ts[i - 1 : i + 2], ts[i], 1)
        res[i - 1] = float(w @ Es[i - 1 : i + 2]) + 0.5 * Ds[i]
    return res


def basic_energy_law(
    ts: np.ndarray, l2_u: np.ndarray, l2_b: np.ndarray, grad_b_l2: np.ndarray
) -> np.ndarray:
    """Residual of (1/2) d/dt(||u||^2 + ||b||^2) + ||grad b||^2 per sample.

    grad_b_l2 carries the gamma-dissipation norm, so the same formula
    covers fractional diffusion.  Uses 5-point (4th-order) differences:
    the self-convergence check needs the differencing error to shrink at
    least as fast as the scheme's own error under dt halving.
    Returns residuals aligned with ts[2:-2].
    """
    ts = np.asarray(ts, dtype=np.float64)
    if len(ts) < 5:
        raise ValueError("need at least 5 samples for the energy-law residual")
    Q = np.asarray(l2_u) ** 2 + np.asarray(l2_b) ** 2
    res = np.empty(len(ts) - 4)
    for i in range(2, len(ts) - 2):
        w = fd_weights(ts[i - 2 : i + 3], ts[i], 1)
        res[i - 2] = 0.5 * float(w @ Q[i - 2 : i + 3]) + float(grad_b_l2[i]) ** 2
    return res


def predicted_alpha(N: float, beta: float, r: float) -> float:
    """Decay exponent 3(N - beta) / (2(N - r - 4)) for the H^beta norms."""
    return 3.0 * (N - beta) / (2.0 * (N - r - 4.0))


def decay_fit(
    ts: np.ndarray,
    norms: np.ndarray,
    beta: float,
    N: float,
    r: float,
    window: tuple[float, float] | None = None,
    margin: float = DEFAULT_MARGIN,
) -> DecayFit:
    """Least-squares decay exponent of norms against (1+t) on a tail window.

    The verdict passes when the fitted exponent reaches the predicted
    one minus margin, or when the norms have collapsed below NORM_FLOOR
    (decay faster than any power).  Default window: the final half of
    the run in log(1+t).
    """
    if not beta >= r + 4.0 or not beta < N:
        raise ValueError(f"beta must lie in [r+4, N) = [{r + 4.0}, {N}), got {beta}")
    ts = np.asarray(ts, dtype=np.float64)
    norms = np.asarray(norms, dtype=np.float64)
    if window is None:
        t_end = float(ts[-1])
        window = (math.sqrt(1.0 + t_end) - 1.0, t_end)
    lo, hi = window
    mask = (ts >= lo) & (ts <= hi)
    if not mask.any():
        raise ValueError(f"no samples in fit window [{lo:.4g}, {hi:.4g}]")
    pred = predicted_alpha(N, beta, r)
    tail = norms[mask]
    if float(np.max(tail)) < NORM_FLOOR:
        return DecayFit(
            fitted_alpha=math.inf,
            predicted_alpha=pred,
            r_squared=1.0,
            window=(float(lo), float(hi)),
            n_points=int(mask.sum()),
            passed=True,
            at_floor=True,
        )
    positive = mask & (norms > 0.0)
    x = np.log1p(ts[positive])
    y = np.log(norms[positive])
    if len(x) < 2:
        raise ValueError("fit window holds fewer than 2 usable samples")
    slope, intercept = np.polyfit(x, y, 1)
    fitted = -float(slope)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r_sq = 1.0 if ss_tot == 0.0 else 1.0 - float(np.sum(resid**2)) / ss_tot
    return DecayFit(
        fitted_alpha=fitted,
        predicted_alpha=pred,
        r_squared=r_sq,
        window=(float(lo), float(hi)),
        n_points=int(positive.sum()),
        passed=fitted >= pred - margin,
        at_floor=False,
    )


# ---------------------------------------------------------------------------
# sampling and CSV emission

def sample_state(state, dt: float, A: float, hs: tuple[float, ...]) -> EnergyReport:
    """One EnergyReport row for the current state."""
    u, b, dv = state.u, state.b, state.dv
    gamma_weight = u.lattice.k_sq ** state.gamma
    return EnergyReport(
        t=state.t,
        dt=dt,
        l2_u=sobolev_norm(u, 0.0),
        l2_b=sobolev_norm(b, 0.0),
        grad_b_l2=math.sqrt(weighted_mode_sum(b, gamma_weight)),
        hs_u=tuple(sobolev_norm(u, s) for s in hs),
        hs_b=tuple(sobolev_norm(b, s) for s in hs),
        E=energy_E(u, b, dv, A),
        D=dissipation_D(u, b, dv, A),
        div_max=max(solenoidal_defect(u), solenoidal_defect(b)),
        mean_max=max(mean_mode_max(u), mean_mode_max(b)),
        identities=identity_suite(u, b, dv, state.gamma),
    )


def finalize_series(samples: list[EnergyReport]) -> None:
    """Fill centered Lyapunov residuals; endpoint rows stay NaN."""
    if len(samples) < 3:
        return
    ts = np.array([s.t for s in samples])
    Es = np.array([s.E for s in samples])
    Ds = np.array([s.D for s in samples])
    res = lyapunov_monitor(ts, Es, Ds)
    for i, r in enumerate(res):
        samples[i + 1].lyap_residual = float(r)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def csv_header(hs: tuple[float, ...]) -> list[str]:
    cols = ["t", "dt", "l2_u", "l2_b", "grad_b_l2"]
    for s in hs:
        cols.append(f"hs_u_{s:g}")
        cols.append(f"hs_b_{s:g}")
    cols += ["E", "D", "lyap_residual", "div_max", "mean_max"]
    cols += list(IDENTITY_NAMES)
    return cols


def write_csv(samples: list[EnergyReport], hs: tuple[float, ...], path: str) -> None:
    """Emit the run series; float cells carry 17 significant digits."""
    lines = [",".join(csv_header(hs))]
    for s in samples:
        row = [_fmt(s.t), _fmt(s.dt), _fmt(s.l2_u), _fmt(s.l2_b), _fmt(s.grad_b_l2)]
        for i in range(len(hs)):
            row.append(_fmt(s.hs_u[i]))
            row.append(_fmt(s.hs_b[i]))
        row += [_fmt(s.E), _fmt(s.D), _fmt(s.lyap_residual), _fmt(s.div_max), _fmt(s.mean_max)]
        row += [_fmt(s.identities[name]) for name in IDENTITY_NAMES]
        lines.append(",".join(row))
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_csv(path: str) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    data = np.array([[float(cell) for cell in row] for row in rows])
    if data.size == 0:
        raise ValueError(f"{path}: empty series")
    return {name: data[:, i] for i, name in enumerate(header)}
