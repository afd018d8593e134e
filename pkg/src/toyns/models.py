"""Right-hand sides of the four evolution systems and their time integration.

All systems are written in projected form ``d_t u_hat + sigma(xi) u_hat =
N(u_hat)`` with ``sigma`` the dissipation symbol; the pressure never
appears.  The nonlinear terms:

* ``TNS``: ``Q(u, u) = q(xi) . (u_hat^i * s_hat)_i`` with ``s = sum_k u^k`` and
  ``q`` the projected toy symbol, i.e. component ``j`` is
  ``r_j(xi) (s_hat * s_hat)(xi)``.  Each term is a product of nonnegative
  factors for positivity-class data, and the image of ``q`` is divergence
  free.
* ``NS``: ``-P(xi) [sum_m i xi_m (u_hat^m * u_hat^j)]_j``.
* ``VORTICITY_TOY``: ``-(w_hat * w_hat)``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import numpy as np
import scipy.fft as sfft

from .multipliers import MultiplierMatrix, leray_multiplier, toy_multiplier
from .spectral import (
    FrequencyLattice,
    LatticeMismatch,
    SpectralScalarField,
    SpectralVectorField,
    is_hermitian,
    physical_arrays,
    spectral_arrays,
    write_checkpoint,
)

log = logging.getLogger(__name__)

__all__ = [
    "ModelKind",
    "Scheme",
    "ModelSpec",
    "StepperConfig",
    "Termination",
    "SimulationResult",
    "Dynamics",
    "rhs_tns",
    "rhs_ns",
    "rhs_vorticity_toy",
    "velocity_from_vorticity",
    "curl",
    "step",
    "simulate",
]


class ModelKind(str, enum.Enum):
    NS = "NS"
    TNS = "TNS"
    VORTICITY_TOY = "VORTICITY_TOY"
    TNS_HYPERVISCOUS = "TNS_HYPERVISCOUS"


class Scheme(str, enum.Enum):
    ETD1_POSITIVE = "ETD1_POSITIVE"
    RK4_IF = "RK4_IF"


class Termination(str, enum.Enum):
    REACHED_T_END = "reached_t_end"
    NORM_CAP_EXCEEDED = "norm_cap_exceeded"
    DT_UNDERFLOW = "dt_underflow"
    NONFINITE = "nonfinite"

    @property
    def blew_up(self) -> bool:
        return self is not Termination.REACHED_T_END


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind
    dim: int
    alpha: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        if self.dim not in (2, 3):
            raise ValueError(f"unsupported dimension {self.dim}")
        if self.kind is ModelKind.VORTICITY_TOY and self.dim != 2:
            raise ValueError("the vorticity toy model is two-dimensional")
        if self.alpha < 1:
            raise ValueError(f"alpha={self.alpha} must be >= 1")
        if self.kind is not ModelKind.TNS_HYPERVISCOUS and self.alpha != 1:
            raise ValueError(f"alpha={self.alpha} is only meaningful for TNS_HYPERVISCOUS")

    @property
    def scalar(self) -> bool:
        return self.kind is ModelKind.VORTICITY_TOY


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    scheme: Scheme = Scheme.ETD1_POSITIVE
    adaptive: bool = False
    dt_min: float = 1e-9
    blowup_norm_cap: float = 1e6
    record_interval: float | None = None
    monitor: str = "l1"

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.dt > 0:
            raise ValueError(f"dt={self.dt} must be positive")
        if not self.t_end > 0:
            raise ValueError(f"t_end={self.t_end} must be positive")
        if not 0 < self.dt_min < self.dt:
            raise ValueError(f"need 0 < dt_min < dt, got dt_min={self.dt_min}, dt={self.dt}")
        if not self.blowup_norm_cap > 0:
            raise ValueError("blowup_norm_cap must be positive")
        if self.record_interval is not None and not self.record_interval > 0:
            raise ValueError("record_interval must be positive")
        if self.monitor not in MONITORS:
            raise ValueError(f"unknown monitored norm {self.monitor!r}; expected one of {sorted(MONITORS)}")


# -- nonlinear kernels on raw arrays --------------------------------------

def _grid(lattice):
    return sfft.next_fast_len(2 * (2 * lattice.N + 1), real=True)


def _physical(c, lattice, real):
    return physical_arrays(c, lattice, _grid(lattice), real)


def tns_nonlinear(comps: np.ndarray, matrix: MultiplierMatrix) -> np.ndarray:
    lat = matrix.lattice
    real = is_hermitian(comps[0]) and all(is_hermitian(c) for c in comps[1:])
    if matrix.constant_rows:
        s = _physical(comps.sum(axis=0), lat, real)
        ss = spectral_arrays(s * s, lat)
        return matrix.entries[:, 0] * ss
    phys = _physical(comps, lat, real)
    s = phys.sum(axis=0)
    v = spectral_arrays(phys * s, lat)
    return matrix.apply(v)


def ns_nonlinear(comps: np.ndarray, lattice: FrequencyLattice, leray: MultiplierMatrix | None = None) -> np.ndarray:
    d = lattice.dim
    real = all(is_hermitian(c) for c in comps)
    phys = _physical(comps, lattice, real)
    xi = lattice.xi
    out = np.zeros_like(comps)
    for a in range(d):
        for b in range(a, d):
            t = spectral_arrays(phys[a] * phys[b], lattice)
            out[b] += 1j * xi[a] * t
            if a != b:
                out[a] += 1j * xi[b] * t
    if leray is None:
        leray = leray_multiplier(lattice)
    return -leray.apply(out)


def vorticity_nonlinear(w: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    p = _physical(w, lattice, is_hermitian(w))
    return -spectral_arrays(p * p, lattice)


# -- public right-hand sides ---------------------------------------------

def rhs_tns(u: SpectralVectorField, matrix: MultiplierMatrix | None = None) -> SpectralVectorField:
    if matrix is None:
        matrix = toy_multiplier(u.lattice)
    if matrix.lattice != u.lattice:
        raise LatticeMismatch("multiplier and field live on different lattices")
    return u.replace(tns_nonlinear(u.components, matrix))


def rhs_ns(u: SpectralVectorField) -> SpectralVectorField:
    return u.replace(ns_nonlinear(u.components, u.lattice))


def rhs_vorticity_toy(w: SpectralScalarField) -> SpectralScalarField:
    return w.replace(vorticity_nonlinear(w.coeffs, w.lattice))


def velocity_from_vorticity(w: SpectralScalarField) -> SpectralVectorField:
    """Biot-Savart: ``u_hat = i (xi2, -xi1) w_hat / |xi|^2``, so ``curl u = w``."""
    lat = w.lattice
    if lat.dim != 2:
        raise ValueError("velocity_from_vorticity needs a 2-D lattice")
    n2 = lat.xi_norm2
    inv = np.where(n2 > 0, 1.0 / np.where(n2 > 0, n2, 1.0), 0.0)
    x1, x2 = lat.xi
    comps = np.stack([1j * x2 * inv * w.coeffs, -1j * x1 * inv * w.coeffs])
    return SpectralVectorField(lat, comps, w.time)


def curl(u: SpectralVectorField) -> SpectralScalarField:
    """2-D curl ``d1 u2 - d2 u1`` in frequency space."""
    if u.dim != 2:
        raise ValueError("curl is implemented for 2-D fields")
    x1, x2 = u.lattice.xi
    return SpectralScalarField(u.lattice, 1j * x1 * u.components[1] - 1j * x2 * u.components[0], u.time)


# -- integrators ---------------------------------------------------------

class Dynamics:
    """Symbols and nonlinear term of one model on one lattice."""

    def __init__(self, model: ModelSpec, lattice: FrequencyLattice):
        if lattice.dim != model.dim:
            raise LatticeMismatch(f"model is {model.dim}-D, lattice is {lattice.dim}-D")
        self.model = model
        self.lattice = lattice
        n2 = lattice.xi_norm2
        self.sigma = n2 if model.alpha == 1 else n2**model.alpha
        if model.kind in (ModelKind.TNS, ModelKind.TNS_HYPERVISCOUS):
            self.matrix = toy_multiplier(lattice)
            self.nonlinear: Callable[[np.ndarray], np.ndarray] = lambda c: tns_nonlinear(c, self.matrix)
        elif model.kind is ModelKind.NS:
            leray = leray_multiplier(lattice)
            self.matrix = None
            self.nonlinear = lambda c: ns_nonlinear(c, lattice, leray)
        else:
            self.matrix = None
            self.nonlinear = lambda c: vorticity_nonlinear(c, lattice)
        self._decay: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def decay(self, dt: float):
        hit = self._decay.get(dt)
        if hit is None:
            hit = (np.exp(-dt * self.sigma), np.exp(-0.5 * dt * self.sigma))
            if len(self._decay) > 8:
                self._decay.clear()
            self._decay[dt] = hit
        return hit

    def etd1(self, c: np.ndarray, dt: float) -> np.ndarray:
        e, _ = self.decay(dt)
        return e * (c + dt * self.nonlinear(c))

    def rk4_if(self, c: np.ndarray, dt: float) -> np.ndarray:
        e, e2 = self.decay(dt)
        k1 = self.nonlinear(c)
        k2 = self.nonlinear(e2 * (c + 0.5 * dt * k1))
        k3 = self.nonlinear(e2 * c + 0.5 * dt * k2)
        k4 = self.nonlinear(e * c + dt * e2 * k3)
        return e * c + dt / 6.0 * (e * k1 + 2.0 * e2 * (k2 + k3) + k4)

    def advance(self, c: np.ndarray, dt: float, scheme: Scheme) -> np.ndarray:
        if scheme is Scheme.ETD1_POSITIVE:
            return self.etd1(c, dt)
        return self.rk4_if(c, dt)


def _coeffs(state):
    return state.coeffs if isinstance(state, SpectralScalarField) else state.components


def _wrap(state, c, t):
    if isinstance(state, SpectralScalarField):
        return SpectralScalarField(state.lattice, c, t)
    return SpectralVectorField(state.lattice, c, t)


def step(state, model: ModelSpec, config: StepperConfig, dynamics: Dynamics | None = None):
    """One step of size ``config.dt``; raises FloatingPointError on overflow."""
    if dynamics is None:
        dynamics = Dynamics(model, state.lattice)
    with np.errstate(over="ignore", invalid="ignore"):
        c = dynamics.advance(_coeffs(state), config.dt, config.scheme)
    if not np.isfinite(c).all():
        raise FloatingPointError(f"non-finite coefficients after step at t={state.time}")
    return _wrap(state, c, state.time + config.dt)


@dataclass
class SimulationResult:
    reason: Termination
    final: object
    records: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)
    steps: int = 0
    rejected: int = 0
    dt_final: float = 0.0
    worst_positivity: float = 0.0
    worst_divergence: float = 0.0
    peak_sup: float = 0.0

    @property
    def t_final(self) -> float:
        return self.final.time

    @property
    def blew_up(self) -> bool:
        return self.reason.blew_up


def _sup(c):
    return float(np.abs(c).max())


def _l1(c):
    # the lattice cell factor cancels in every ratio taken by simulate
    return float(np.abs(c).sum())


MONITORS = {"l1": _l1, "sup": _sup}


def simulate(
    u0,
    model: ModelSpec,
    config: StepperConfig,
    snapshot_times: Iterable[float] = (),
    record: bool = True,
    checkpoint_dir: str | Path | None = None,
    on_record: Callable | None = None,
) -> SimulationResult:
    """Integrate from ``u0`` to ``config.t_end`` or until a blow-up criterion fires.

    Diagnostics are recorded every ``config.record_interval`` (and at the
    start and the end); full fields are kept at ``snapshot_times``.  The
    monitored norm (``config.monitor``: ``"l1"`` for ``sum |u_hat|``, or
    ``"sup"``) is checked after every step: the run stops when it exceeds
    ``blowup_norm_cap`` times its initial value.  In adaptive mode a step
    whose monitored norm more than doubles is retried with half the step;
    the run stops once the step would fall below ``dt_min``.
    """
    from .analysis import record as make_record

    lat = u0.lattice
    dyn = Dynamics(model, lat)
    if model.scalar != isinstance(u0, SpectralScalarField):
        raise TypeError(f"{model.kind.value} needs a {'scalar' if model.scalar else 'vector'} field")

    t_end = config.t_end
    record_events = {t_end}
    if config.record_interval is not None:
        n = int(math.floor(t_end / config.record_interval + 1e-9))
        record_events.update(k * config.record_interval for k in range(1, n + 1))
    events = sorted(record_events | {float(t) for t in snapshot_times if 0 < t <= t_end})

    state = u0
    c = _coeffs(u0)
    norm = MONITORS[config.monitor]
    norm0 = norm(c)
    cap = config.blowup_norm_cap * norm0
    result = SimulationResult(Termination.REACHED_T_END, u0, dt_final=config.dt, peak_sup=_sup(c))
    if checkpoint_dir is not None:
        checkpoint_dir = Path(checkpoint_dir)
        checkpoint_dir.mkdir(parents=True, exist_ok=True)

    def monitor(st, cc):
        scale = _sup(cc)
        if scale > 0:
            result.worst_positivity = min(result.worst_positivity, float(np.real(cc).min()) / scale)
            if not model.scalar:
                result.worst_divergence = max(result.worst_divergence, st.divergence_residual())
        result.peak_sup = max(result.peak_sup, scale)

    def take_record(st):
        if record:
            rec = make_record(st, dyn.matrix, model=model, dt=dt)
            result.records.append(rec)
            if on_record is not None:
                on_record(rec)

    def snap(st):
        for ts in snapshot_times:
            if abs(ts - st.time) <= 1e-12 * max(1.0, t_end):
                result.snapshots[float(ts)] = st
                if checkpoint_dir is not None:
                    write_checkpoint(checkpoint_dir / f"state_t{st.time:.6f}.tnsf", st)

    def land(st):
        if st.time in record_events:
            take_record(st)
        snap(st)

    dt = config.dt
    monitor(state, c)
    take_record(state)
    snap(state)
    ev = 0
    t = 0.0
    while ev < len(events):
        target = events[ev]
        gap = target - t
        if gap <= 1e-14 * max(1.0, t_end):
            if gap != 0:
                t = target
                state = _wrap(state, c, t)
            ev += 1
            land(state)
            continue
        # absorb rounding drift: land on the event instead of leaving a sliver
        h = gap if gap <= dt * (1 + 1e-9) else dt
        with np.errstate(over="ignore", invalid="ignore"):
            new = dyn.advance(c, h, config.scheme)
        finite = bool(np.isfinite(new).all())
        new_norm = norm(new) if finite else math.inf
        if config.adaptive and (not finite or new_norm > 2.0 * norm(c)):
            dt = 0.5 * min(dt, h)
            result.rejected += 1
            if dt < config.dt_min:
                result.reason = Termination.DT_UNDERFLOW
                break
            continue
        if not finite:
            result.reason = Termination.NONFINITE
            break
        landed = h == gap
        t = target if landed else t + h
        c = new
        state = _wrap(state, c, t)
        result.steps += 1
        monitor(state, c)
        if new_norm > cap:
            result.reason = Termination.NORM_CAP_EXCEEDED
            break
        if landed:
            ev += 1
            land(state)
    result.final = state
    result.dt_final = dt
    if result.reason is not Termination.REACHED_T_END and record:
        take_record(state)
    if checkpoint_dir is not None:
        write_checkpoint(checkpoint_dir / "final.tnsf", state)
    log.info("%s run ended: %s at t=%.6g after %d steps", model.kind.value, result.reason.value, state.time, result.steps)
    return result
