"""Time integration: integrating-factor RK4 with adaptive CFL steps.

The magnetic diffusion is diagonal in mode space, so it is absorbed
exactly into exponential factors and the classical RK4 stages advance
only the transported/coupled terms.  With every explicit term switched
off the scheme therefore reproduces e^{-|k|^{2 gamma} t} per mode to
rounding, which the test suite pins.  After each full step (never per
stage) the state is re-projected and the Nyquist planes re-zeroed.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .diophantine import DiophantineVector, certify, lattice_search_radius
from .operators import dissipation_multiplier, explicit_tendency
from .spectral import (
    SpectralVectorField,
    WaveLattice,
    hermitianize,
    leray_project,
    make_lattice,
    sobolev_norm,
    to_physical,
)

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"HMHD"
CHECKPOINT_VERSION = 1


class BlowUpError(RuntimeError):
    """Raised when the state leaves the resolvable regime."""

    def __init__(self, t: float, detail: str):
        super().__init__(f"blow-up detected at t={t:.6g}: {detail}")
        self.t = t
        self.detail = detail


@dataclass
class SimState:
    u: SpectralVectorField
    b: SpectralVectorField
    t: float
    gamma: float
    dv: DiophantineVector


@dataclass
class StepControl:
    dt_max: float = 0.05
    dt_min: float = 1e-7
    cfl_adv: float = 0.5
    cfl_hall: float = 0.4

    def __post_init__(self):
        if not (0.0 < self.dt_min <= self.dt_max):
            raise ValueError("need 0 < dt_min <= dt_max")
        for name in ("cfl_adv", "cfl_hall"):
            v = getattr(self, name)
            if not (0.0 < v <= 1.0):
                raise ValueError(f"{name} must lie in (0, 1], got {v}")


def max_physical(v: SpectralVectorField) -> float:
    phys = to_physical(v.lattice, v.coeffs)
    return float(np.max(np.abs(phys)))


def choose_dt(state: SimState, ctl: StepControl) -> float:
    """dt = min(dt_max, cfl_adv h / V, cfl_hall h^2 / B_tot).

    V = max physical |u| + |n| and B_tot = max physical |b| + |n|; a
    vanishing speed drops the corresponding bound.  Clamped (with a
    warning) at dt_min.
    """
    h = 2.0 * np.pi / state.u.lattice.n_grid
    mag_n = state.dv.magnitude
    vel = max_physical(state.u) + mag_n
    b_tot = max_physical(state.b) + mag_n
    if not (math.isfinite(vel) and math.isfinite(b_tot)):
        raise BlowUpError(state.t, "non-finite field amplitudes")
    dt = ctl.dt_max
    if vel > 0.0:
        dt = min(dt, ctl.cfl_adv * h / vel)
    if b_tot > 0.0:
        dt = min(dt, ctl.cfl_hall * h * h / b_tot)
    if dt < ctl.dt_min:
        log.warning("dt %.3e below dt_min %.3e; clamping", dt, ctl.dt_min)
        dt = ctl.dt_min
    return dt


def _project(lat: WaveLattice, coeffs: np.ndarray) -> np.ndarray:
    return leray_project(SpectralVectorField(lat, coeffs * lat.nyquist_mask)).coeffs


def step(state: SimState, dt: float, rhs_fn=None) -> SimState:
    """One integrating-factor RK4 step of size dt.

    rhs_fn(u, b) -> (du, db) supplies every term except the diffusion
    (which the integrating factor handles exactly); the default is the
    full perturbed tendency for state.dv.
    """
    if rhs_fn is None:
        n_vec = state.dv.n

        def rhs_fn(u, b):
            return explicit_tendency(u, b, n_vec)

    lat = state.u.lattice
    decay = dissipation_multiplier(lat, state.gamma)
    E = np.exp(-decay * (0.5 * dt))
    E2 = E * E
    u0, b0 = state.u.coeffs, state.b.coeffs

    n1u, n1b = rhs_fn(state.u, state.b)
    y2u = u0 + (0.5 * dt) * n1u
    y2b = E * (b0 + (0.5 * dt) * n1b)
    n2u, n2b = rhs_fn(SpectralVectorField(lat, y2u), SpectralVectorField(lat, y2b))
    y3u = u0 + (0.5 * dt) * n2u
    y3b = E * b0 + (0.5 * dt) * n2b
    n3u, n3b = rhs_fn(SpectralVectorField(lat, y3u), SpectralVectorField(lat, y3b))
    y4u = u0 + dt * n3u
    y4b = E2 * b0 + dt * (E * n3b)
    n4u, n4b = rhs_fn(SpectralVectorField(lat, y4u), SpectralVectorField(lat, y4b))

    u1 = u0 + (dt / 6.0) * (n1u + 2.0 * (n2u + n3u) + n4u)
    b1 = E2 * b0 + (dt / 6.0) * (E2 * n1b + 2.0 * E * (n2b + n3b) + n4b)
    return SimState(
        u=SpectralVectorField(lat, _project(lat, u1)),
        b=SpectralVectorField(lat, _project(lat, b1)),
        t=state.t + dt,
        gamma=state.gamma,
        dv=state.dv,
    )


def zero_rhs(u: SpectralVectorField, b: SpectralVectorField):
    """All explicit terms off; stepping with this is pure diffusion."""
    return np.zeros_like(u.coeffs), np.zeros_like(b.coeffs)


def make_linear_rhs(dv: DiophantineVector):
    """Background coupling only (quadratic terms dropped)."""
    from .operators import explicit_coupling

    def rhs(u, b):
        return explicit_coupling(u, b, dv.n)

    return rhs


# ---------------------------------------------------------------------------
# initial data

def make_initial_data(
    seed: int,
    spectrum_slope: float,
    eps: float,
    lattice: WaveLattice,
    sobolev_index: float,
) -> tuple[SpectralVectorField, SpectralVectorField]:
    """Random-phase solenoidal fields with ||u||_{H^N} + ||b||_{H^N} = eps.

    Support sits on 0 < |k| <= n_grid/4 with mode amplitudes shaped by
    |k|^spectrum_slope; a common factor rescales both fields so the sum
    of the two H^N norms hits eps exactly (to rounding).
    """
    if seed is None:
        raise ValueError("seed is required; runs must be reproducible")
    if eps < 0.0:
        raise ValueError(f"eps must be non-negative, got {eps}")
    rng = np.random.default_rng(int(seed))
    k_mag = np.sqrt(lattice.k_sq)
    support = (lattice.k_sq > 0) & (lattice.k_sq <= (lattice.n_grid / 4.0) ** 2)
    envelope = np.zeros(lattice.shape)
    envelope[support] = k_mag[support] ** spectrum_slope

    fields = []
    for _ in range(2):
        raw = rng.standard_normal((3,) + lattice.shape) + 1j * rng.standard_normal(
            (3,) + lattice.shape
        )
        coeffs = hermitianize(raw * envelope, lattice.nyquist_mask)
        fields.append(leray_project(SpectralVectorField(lattice, coeffs)))
    u, b = fields
    total = sobolev_norm(u, sobolev_index) + sobolev_norm(b, sobolev_index)
    factor = 0.0 if total == 0.0 else eps / total
    u.coeffs *= factor
    b.coeffs *= factor
    return u, b


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path: str | os.PathLike, state: SimState) -> None:
    """Binary snapshot: header then six coefficient cubes (u then b).

    Layout: magic "HMHD"; uint32 version; uint32 n_grid; float64 gamma,
    r, n1, n2, n3, t; then u1,u2,u3,b1,b2,b3 as little-endian (re, im)
    float64 pairs in row-major k order over the full lattice.
    """
    head = np.array(
        [state.gamma, state.dv.r, *state.dv.n, state.t], dtype="<f8"
    )
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(np.array([CHECKPOINT_VERSION, state.u.lattice.n_grid], dtype="<u4").tobytes())
        fh.write(head.tobytes())
        fh.write(np.ascontiguousarray(state.u.coeffs).astype("<c16").tobytes())
        fh.write(np.ascontiguousarray(state.b.coeffs).astype("<c16").tobytes())


def load_checkpoint(path: str | os.PathLike, pad_factor: float = 1.5, K: int | None = None) -> SimState:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    version, n_grid = np.frombuffer(blob, dtype="<u4", count=2, offset=4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    gamma, r, n1, n2, n3, t = np.frombuffer(blob, dtype="<f8", count=6, offset=12)
    n_grid = int(n_grid)
    lattice = make_lattice(n_grid, pad_factor)
    ncube = n_grid**3
    cubes = np.frombuffer(blob, dtype="<c16", count=6 * ncube, offset=60)
    cubes = cubes.reshape(2, 3, n_grid, n_grid, n_grid).astype(np.complex128)
    dv = certify(np.array([n1, n2, n3]), float(r), K or lattice_search_radius(n_grid))
    return SimState(
        u=SpectralVectorField(lattice, cubes[0].copy()),
        b=SpectralVectorField(lattice, cubes[1].copy()),
        t=float(t),
        gamma=float(gamma),
        dv=dv,
    )


# ---------------------------------------------------------------------------
# run driver

@dataclass
class RunResult:
    samples: list
    state: SimState
    dv: DiophantineVector
    A: float
    status: str = "completed"
    detail: str = ""
    checkpoints: list[str] = field(default_factory=list)


def simulate(config, restart_path: str | None = None) -> RunResult:
    """Advance the perturbed system to t_end, sampling diagnostics.

    `config` is a RunConfig; diagnostics are sampled every
    config.sample_every steps (plus the initial and final states) and
    checkpoints written every config.checkpoint_every steps when an
    output directory is set.  Blow-up aborts the run and is reported in
    the result status rather than raised.
    """
    from . import diagnostics
    from .config import resolve_background

    lattice = make_lattice(config.n_grid, config.pad_factor)
    dv = resolve_background(config)
    if not dv.usable():
        raise ValueError("background certificate failed: c_est = 0")

    if restart_path is not None:
        state = load_checkpoint(restart_path, pad_factor=config.pad_factor, K=config.K or None)
        if state.u.lattice.n_grid != config.n_grid:
            raise ValueError(
                f"checkpoint resolution {state.u.lattice.n_grid} != configured {config.n_grid}"
            )
    else:
        u, b = make_initial_data(
            config.seed, config.spectrum_slope, config.epsilon, lattice, config.N
        )
        state = SimState(u=u, b=b, t=0.0, gamma=config.gamma, dv=dv)

    ctl = StepControl(
        dt_max=config.dt_max,
        dt_min=config.dt_min,
        cfl_adv=config.cfl_adv,
        cfl_hall=config.cfl_hall,
    )
    A = diagnostics.choose_A(dv)
    hs = tuple(config.hs)
    h3_init = sobolev_norm(state.u, 3.0) + sobolev_norm(state.b, 3.0)

    out_dir = config.output_dir if config.checkpoint_every > 0 else None
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)

    samples: list = []
    checkpoints: list[str] = []
    status, detail = "completed", ""

    def take_sample(dt_value: float) -> None:
        samples.append(
            diagnostics.sample_state(state, dt_value, A, hs)
        )

    try:
        dt = choose_dt(state, ctl)
        take_sample(dt)
        step_idx = 0
        while state.t < config.t_end - 1e-12:
            dt = min(choose_dt(state, ctl), config.t_end - state.t)
            state = step(state, dt)
            step_idx += 1
            at_end = state.t >= config.t_end - 1e-12
            if step_idx % config.sample_every == 0 or at_end:
                h3 = sobolev_norm(state.u, 3.0) + sobolev_norm(state.b, 3.0)
                if not math.isfinite(h3):
                    raise BlowUpError(state.t, "non-finite Sobolev norm")
                if h3_init > 0.0 and h3 > 1e3 * h3_init:
                    raise BlowUpError(
                        state.t, f"H^3 norm grew to {h3:.3e} (initial {h3_init:.3e})"
                    )
                take_sample(dt)
            if out_dir and step_idx % config.checkpoint_every == 0:
                path = os.path.join(out_dir, f"checkpoint_{step_idx:08d}.hmhd")
                save_checkpoint(path, state)
                checkpoints.append(path)
    except BlowUpError as exc:
        status, detail = "blowup", str(exc)

    diagnostics.finalize_series(samples)
    return RunResult(
        samples=samples,
        state=state,
        dv=dv,
        A=A,
        status=status,
        detail=detail,
        checkpoints=checkpoints,
    )
