"""Norm and structure diagnostics on lattice fields.

Suprema over ``x`` are taken on the unpadded physical grid, except for
fields whose coefficients are all nonnegative: there the supremum sits at
``x = 0`` and equals ``h^dim |sum of coefficients|`` exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.fft as sfft

from .spectral import (
    FrequencyLattice,
    SpectralScalarField,
    SpectralVectorField,
    is_hermitian,
    physical_arrays,
)

__all__ = [
    "DEFAULT_T_GRID",
    "default_t_grid",
    "CUTOFF_PROFILE",
    "DiagnosticsRecord",
    "BesovNorm",
    "dyadic_range",
    "block_weight",
    "lp_block",
    "besov_norm",
    "heat_besov_minus1",
    "inner",
    "energy_flux",
    "ns_energy_flux",
    "record",
    "write_diagnostics",
    "read_diagnostics",
]

DEFAULT_T_GRID = 2.0 ** np.arange(-20, 7)
CUTOFF_PROFILE = "psi(log2|xi| - k), psi(x) = S(|x|), S(s) = e^(-1/(1-s)) / (e^(-1/(1-s)) + e^(-1/s))"


def _smooth_step(s):
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1 - s, 1.0)), 0.0)
        b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


def _coeffs(f) -> np.ndarray:
    return f.coeffs if isinstance(f, SpectralScalarField) else f.components


def _batch(f) -> np.ndarray:
    c = _coeffs(f)
    return c[None] if isinstance(f, SpectralScalarField) else c


# -- Littlewood-Paley ----------------------------------------------------

def dyadic_range(lattice: FrequencyLattice) -> tuple[int, int]:
    """Block indices whose weights sum to one on every nonzero lattice frequency."""
    top = math.sqrt(lattice.dim) * lattice.xi_max
    return math.floor(math.log2(lattice.h)), math.ceil(math.log2(top))


def block_weight(norm: np.ndarray, k: int, profile: Callable = _smooth_step) -> np.ndarray:
    """Smooth radial weight of block ``k``, supported on ``2^(k-1) < |xi| < 2^(k+1)``."""
    with np.errstate(divide="ignore"):
        x = np.where(norm > 0, np.log2(np.where(norm > 0, norm, 1.0)) - k, np.inf)
    return np.where(np.abs(x) < 1, profile(np.abs(np.minimum(np.abs(x), 1.0))), 0.0)


def _check_k(lattice, k):
    lo, hi = dyadic_range(lattice)
    if not lo <= k <= hi:
        raise ValueError(f"block k={k} outside the lattice dyadic range [{lo}, {hi}]")


def lp_block(f, k: int):
    """Littlewood-Paley block ``Delta_k f``."""
    _check_k(f.lattice, k)
    w = block_weight(np.sqrt(f.lattice.xi_norm2), k)
    if isinstance(f, SpectralScalarField):
        return f.replace(coeffs=w * f.coeffs)
    return f.replace(components=w * f.components)


def _is_nonnegative(c: np.ndarray, rtol: float = 1e-12) -> bool:
    scale = np.abs(c).max()
    if scale == 0:
        return True
    return bool(c.real.min() >= -rtol * scale and np.abs(c.imag).max() <= rtol * scale)


def _sup_grid(lattice: FrequencyLattice) -> int:
    return sfft.next_fast_len(2 * lattice.N + 1, real=True)


def _sup_physical(c: np.ndarray, lattice: FrequencyLattice) -> float:
    """``sup_x |f(x)|`` over the grid for a ``(ncomp, *shape)`` array."""
    if not np.any(c):
        return 0.0
    real = all(is_hermitian(ci) for ci in c)
    vals = physical_arrays(c, lattice, _sup_grid(lattice), real)
    mag = np.abs(vals) ** 2
    return float(np.sqrt(mag.sum(axis=0).max()))


def _sup_origin(c: np.ndarray, lattice: FrequencyLattice) -> float:
    s = lattice.cell * c.reshape(c.shape[0], -1).sum(axis=1)
    return float(np.sqrt((np.abs(s) ** 2).sum()))


@dataclass
class BesovNorm:
    """``sup_k 2^(ks) ||Delta_k f||_inf`` with per-block details.

    ``l1_bound`` is ``sup_k 2^(ks) h^dim sum |block coefficients|``,
    filled in for nonnegative-coefficient fields.
    """

    s: float
    value: float
    l1_bound: float | None
    blocks: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


def _block_table(f, method: str = "auto") -> dict:
    lat = f.lattice
    c = _batch(f)
    nonneg = _is_nonnegative(c)
    use_origin = method == "origin" or (method == "auto" and nonneg)
    norm = np.sqrt(lat.xi_norm2)
    lo, hi = dyadic_range(lat)
    table = {}
    for k in range(lo, hi + 1):
        w = block_weight(norm, k)
        if not np.any(w):
            continue
        b = w * c
        sup = _sup_origin(b, lat) if use_origin else _sup_physical(b, lat)
        l1 = lat.cell * float(np.sqrt((np.abs(b).reshape(b.shape[0], -1).sum(axis=1) ** 2).sum())) if nonneg else None
        table[k] = (sup, l1)
    return table


def besov_norm(f, s: float, method: str = "auto", table: dict | None = None) -> BesovNorm:
    """Homogeneous ``B^s_{inf,inf}`` norm over the resolvable blocks.

    ``method``: ``"grid"`` samples the blocks on the physical grid,
    ``"origin"`` uses the exact ``x = 0`` formula for nonnegative fields,
    ``"auto"`` picks the latter whenever it applies.
    """
    table = _block_table(f, method) if table is None else table
    value = 0.0
    bound = None
    for k, (sup, l1) in table.items():
        value = max(value, 2.0 ** (k * s) * sup)
        if l1 is not None:
            bound = max(bound or 0.0, 2.0 ** (k * s) * l1)
    return BesovNorm(float(s), value, bound, dict(table))


def default_t_grid(max_norm2: float = 0.0) -> np.ndarray:
    """``2^m`` for ``m = -20..6``, extended below ``1 / (4 max|xi|^2)`` when needed."""
    lo = -20
    if max_norm2 > 0:
        lo = min(lo, math.floor(math.log2(0.25 / max_norm2)))
    return 2.0 ** np.arange(lo, 7)


def heat_besov_minus1(f, t_grid: Sequence[float] | None = None, method: str = "auto") -> float:
    """``max_t sqrt(t) sup_x |e^(t Laplacian) f|`` over a geometric time grid."""
    lat = f.lattice
    if t_grid is None:
        t_grid = default_t_grid(lat.dim * lat.xi_max**2)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ValueError("empty time grid")
    if np.any(t_grid <= 0):
        raise ValueError("heat times must be positive")
    c = _batch(f)
    if not np.any(c):
        return 0.0
    use_origin = method == "origin" or (method == "auto" and _is_nonnegative(c))
    n2 = lat.xi_norm2
    best = 0.0
    for t in t_grid:
        g = np.exp(-t * n2) * c
        sup = _sup_origin(g, lat) if use_origin else _sup_physical(g, lat)
        best = max(best, math.sqrt(t) * sup)
    return best


# -- energy --------------------------------------------------------------

def inner(a, b) -> float:
    """Real ``L^2`` inner product ``h^dim sum Re[a conj(b)]``."""
    ca, cb = _coeffs(a), _coeffs(b)
    return float(a.lattice.cell * np.real(np.vdot(cb, ca)))


def energy_flux(u: SpectralVectorField, matrix=None) -> float:
    """``<rhs_tns(u), u>``; positive for positivity-class data meeting the cone."""
    from .models import rhs_tns

    return inner(rhs_tns(u, matrix), u)


def ns_energy_flux(u: SpectralVectorField) -> float:
    """``<rhs_ns(u), u>``, which vanishes for divergence-free ``u``."""
    from .models import rhs_ns

    return inner(rhs_ns(u), u)


# -- records -------------------------------------------------------------

BESOV_ORDERS = (-1.0, 0.0)


@dataclass
class DiagnosticsRecord:
    t: float
    dt: float
    sup_fourier: float
    min_fourier: float
    l2_energy: float
    besov_s_inf_inf: dict
    heat_besov_minus1: float
    divergence_residual: float
    energy_flux: float

    def is_finite(self) -> bool:
        vals = [self.t, self.sup_fourier, self.min_fourier, self.l2_energy, self.heat_besov_minus1, self.divergence_residual, self.energy_flux]
        return all(math.isfinite(v) for v in vals + list(self.besov_s_inf_inf.values()))

    def row(self) -> list[float]:
        return [
            self.t,
            self.dt,
            self.sup_fourier,
            self.min_fourier,
            self.l2_energy,
            *self.besov_s_inf_inf.values(),
            self.heat_besov_minus1,
            self.divergence_residual,
            self.energy_flux,
        ]

    def columns(self) -> list[str]:
        return (
            ["t", "dt", "sup_fourier", "min_fourier", "l2_energy"]
            + [f"besov_s{s:g}_inf_inf" for s in self.besov_s_inf_inf]
            + ["heat_besov_minus1", "divergence_residual", "energy_flux"]
        )


def record(u, matrix=None, model=None, dt: float = float("nan"), besov_orders: Iterable[float] = BESOV_ORDERS) -> DiagnosticsRecord:
    """All diagnostics of one state.

    ``model`` (a ModelSpec) picks the nonlinearity used for the energy
    flux; without it vector fields use the toy nonlinearity and scalar
    fields the vorticity toy.
    """
    from .models import ModelKind, rhs_ns, rhs_tns, rhs_vorticity_toy

    c = _batch(u)
    lat = u.lattice
    sup = float(np.abs(c).max())
    mn = float(c.real.min())
    l2 = float(lat.cell * (np.abs(c) ** 2).sum())
    table = _block_table(u)
    besov = {float(s): besov_norm(u, s, table=table).value for s in besov_orders}
    heat = heat_besov_minus1(u)
    if isinstance(u, SpectralScalarField):
        div = 0.0
        flux = inner(rhs_vorticity_toy(u), u)
    else:
        div = u.divergence_residual() if sup > 0 else 0.0
        kind = None if model is None else model.kind
        rhs = rhs_ns(u) if kind is ModelKind.NS else rhs_tns(u, matrix)
        flux = inner(rhs, u)
    return DiagnosticsRecord(float(u.time), float(dt), sup, mn, l2, besov, heat, div, flux)


def norm_metadata() -> dict:
    return {
        "cutoff_profile": CUTOFF_PROFILE,
        "besov_blocks": "2^(k-1) < |xi| < 2^(k+1), k from floor(log2 h) to ceil(log2(sqrt(dim) N h))",
        "heat_t_grid": "2^m, m = -20..6, lower end extended to 1/(4 dim (N h)^2) when smaller",
        "sup_over_x": "exact at x = 0 for nonnegative coefficients, else unpadded physical grid",
    }


def write_diagnostics(records: Sequence[DiagnosticsRecord], path: str | Path, config: dict | None = None) -> Path:
    """CSV of records plus a ``.meta`` sidecar with norm conventions.

    Both files start with ``#`` lines holding the resolved run config.
    """
    path = Path(path)
    header = []
    if config is not None:
        header.append("# config: " + json.dumps(config, sort_keys=True))
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    if records:
        w.writerow(records[0].columns())
        for r in records:
            w.writerow([repr(float(v)) for v in r.row()])
    path.write_text(buf.getvalue())
    meta = "".join(line + "\n" for line in header)
    meta += "".join(f"{k}: {v}\n" for k, v in norm_metadata().items())
    path.with_suffix(path.suffix + ".meta").write_text(meta)
    return path


def read_diagnostics(path: str | Path) -> dict[str, np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    if not lines:
        return {}
    rows = list(csv.reader(lines))
    cols = rows[0]
    data = np.array([[float(v) for v in r] for r in rows[1:]]).reshape(-1, len(cols))
    return {c: data[:, i] for i, c in enumerate(cols)}
