"""Fourier symbols: Leray projector, sector/cone indicators, the toy
quadratic-form matrix and dissipation symbols.

Every symbol is vectorised: ``xi`` is a sequence of ``dim`` broadcastable
arrays (or plain floats for a single frequency).  The mean mode ``xi = 0``
gets a zero toy symbol.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .spectral import FrequencyLattice

__all__ = [
    "MultiplierMatrix",
    "ConeSpec",
    "leray_symbol",
    "cone_indicator",
    "cone_mask",
    "toy_matrix",
    "toy_rows",
    "dissipation_symbol",
    "leray_multiplier",
    "toy_multiplier",
    "PositivityReport",
    "verify_positivity",
    "sample_cone",
]


@dataclass(frozen=True)
class ConeSpec:
    """Support region of the toy symbol.

    ``dim == 2``: the sector ``xi1 * xi2 < 0``.  ``dim == 3``: the cone
    ``xi1 xi2 < 0, xi1 xi3 < 0, |xi2| < min(|xi1|, |xi3|)``.
    """

    dim: int

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"no cone defined in dimension {self.dim}")

    def contains(self, xi) -> np.ndarray:
        return cone_mask(xi)


def _split(xi):
    return [np.asarray(x, dtype=float) for x in xi]


def cone_mask(xi: Sequence) -> np.ndarray:
    x = _split(xi)
    if len(x) == 2:
        return x[0] * x[1] < 0
    if len(x) == 3:
        a1, a2, a3 = (np.abs(c) for c in x)
        return (x[0] * x[1] < 0) & (x[0] * x[2] < 0) & (a2 < np.minimum(a1, a3))
    raise ValueError(f"no cone defined in dimension {len(x)}")


def cone_indicator(xi: Sequence[float], dim: int | None = None) -> bool:
    if dim is not None and len(xi) != dim:
        raise ValueError(f"frequency {tuple(xi)} is not {dim}-dimensional")
    return bool(cone_mask(xi))


def toy_rows(xi: Sequence) -> list[np.ndarray]:
    """Row values ``r_j(xi)`` of the projected toy symbol (rows are constant).

    Written as sums of terms that are each nonnegative on the cone, so the
    floating-point result keeps the exact sign.
    """
    x = _split(xi)
    norm = np.sqrt(sum(c * c for c in x))
    mask = cone_mask(x) & (norm > 0)
    safe = np.where(mask, norm, 1.0)
    if len(x) == 2:
        x1, x2 = x
        rows = [x2 * (x2 - x1), x1 * (x1 - x2)]
    else:
        x1, x2, x3 = x
        rows = [
            x2 * (x2 - x1) + x3 * (x3 - x1),
            x1 * (x1 - x2) + x3 * (x3 - x2),
            x1 * x1 + x2 * x2 - x3 * (x1 + x2),
        ]
    return [np.where(mask, r / safe, 0.0) for r in rows]


def toy_matrix(xi: Sequence[float], dim: int | None = None) -> np.ndarray:
    """Projected toy symbol at one frequency: ``P(xi) |xi| 1_cone ones``."""
    d = len(xi) if dim is None else dim
    if len(xi) != d:
        raise ValueError(f"frequency {tuple(xi)} is not {d}-dimensional")
    rows = [float(r) for r in toy_rows(xi)]
    return np.repeat(np.array(rows)[:, None], d, axis=1)


def leray_symbol(xi: Sequence[float]) -> np.ndarray:
    """``I - xi xi^T / |xi|^2``; the identity at ``xi = 0``."""
    x = np.asarray(xi, dtype=float)
    n2 = x @ x
    if n2 == 0:
        return np.eye(x.size)
    return np.eye(x.size) - np.outer(x, x) / n2


def dissipation_symbol(xi, alpha: float = 1.0):
    """``|xi|^(2 alpha)``; accepts a single vector or a sequence of arrays."""
    if alpha < 1:
        raise ValueError(f"dissipation exponent alpha={alpha} must be >= 1")
    x = _split(xi)
    n2 = sum(c * c for c in x)
    out = n2 if alpha == 1 else n2**alpha
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class MultiplierMatrix:
    """``dim x dim`` real symbol arrays; ``entries[a, b]`` has lattice shape."""

    lattice: FrequencyLattice
    entries: np.ndarray
    name: str = ""
    constant_rows: bool = field(default=False, compare=False)

    def __post_init__(self):
        d = self.lattice.dim
        e = np.array(self.entries, dtype=float)
        if e.shape != (d, d) + self.lattice.shape:
            raise ValueError(f"entries of shape {e.shape} do not fit a {d}-D lattice")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    def at(self, m: Sequence[int]) -> np.ndarray:
        idx = self.lattice.index_of(m)
        return self.entries[(slice(None), slice(None)) + idx]

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Pointwise matrix-vector product with a ``(dim, *shape)`` array."""
        if self.constant_rows:
            s = v.sum(axis=0)
            return self.entries[:, 0] * s
        return np.einsum("ab...,b...->a...", self.entries, v)


def leray_multiplier(lattice: FrequencyLattice) -> MultiplierMatrix:
    d = lattice.dim
    xi = lattice.xi_full
    n2 = lattice.xi_norm2
    safe = np.where(n2 > 0, n2, 1.0)
    e = np.empty((d, d) + lattice.shape)
    for a in range(d):
        for b in range(d):
            e[a, b] = (a == b) - np.where(n2 > 0, xi[a] * xi[b] / safe, 0.0)
    return MultiplierMatrix(lattice, e, "leray")


def toy_multiplier(lattice: FrequencyLattice) -> MultiplierMatrix:
    rows = toy_rows(lattice.xi)
    d = lattice.dim
    e = np.empty((d, d) + lattice.shape)
    for a in range(d):
        e[a, :] = np.broadcast_to(rows[a], lattice.shape)
    return MultiplierMatrix(lattice, e, "toy", constant_rows=True)


# -- positivity verification ---------------------------------------------

def sample_cone(dim: int, n: int, rng: np.random.Generator, scale_decades: float = 4.0) -> np.ndarray:
    """``n`` random frequencies strictly inside the sector/cone, shape (n, dim).

    Magnitudes are log-uniform over ``scale_decades`` decades around 1.
    """
    scale = 10.0 ** rng.uniform(-scale_decades / 2, scale_decades / 2, n)
    sign = rng.choice([-1.0, 1.0], n)
    if dim == 2:
        a = rng.uniform(0, 1, n)
        b = rng.uniform(0, 1, n)
        pts = np.stack([a, -b], axis=1)
    elif dim == 3:
        a = rng.uniform(0, 1, n)
        c = rng.uniform(0, 1, n)
        b = rng.uniform(0, 1, n) * np.minimum(a, c)
        pts = np.stack([a, -b, -c], axis=1)
    else:
        raise ValueError(f"no cone defined in dimension {dim}")
    pts = pts * (sign * scale)[:, None]
    keep = cone_mask(pts.T)
    return pts[keep]


@dataclass
class PositivityReport:
    dim: int
    n_lattice: int
    n_random: int
    min_on_cone: float
    max_abs_off_cone: float
    identity_residual: float
    divergence_residual: float
    violations: list = field(default_factory=list)
    tol: float = 1e-14

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_text(self) -> str:
        lines = [
            f"toy symbol positivity, dim={self.dim}",
            f"  lattice points checked : {self.n_lattice}",
            f"  random cone samples    : {self.n_random}",
            f"  min entry on cone / |xi|: {self.min_on_cone:.3e}",
            f"  max |entry| off cone    : {self.max_abs_off_cone:.3e}",
            f"  factorisation residual  : {self.identity_residual:.3e}",
            f"  xi . (q v) residual     : {self.divergence_residual:.3e}",
            f"  violations              : {len(self.violations)}",
            f"  verdict                 : {'PASS' if self.ok else 'FAIL'}",
        ]
        return "\n".join(lines)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join([f"xi{i + 1}" for i in range(self.dim)] + ["row", "col", "value"]) + "\n")
        for xi, a, b, val in self.violations:
            buf.write(",".join([repr(float(c)) for c in xi] + [str(a), str(b), repr(float(val))]) + "\n")
        return buf.getvalue()


def _check_points(pts: np.ndarray, tol: float, report: PositivityReport, limit: int):
    x = [pts[:, i] for i in range(pts.shape[1])]
    inside = cone_mask(x)
    norm = np.sqrt((pts * pts).sum(axis=1))
    rows = toy_rows(x)
    safe = np.where(norm > 0, norm, 1.0)
    for a, r in enumerate(rows):
        on = inside & (norm > 0)
        if on.any():
            rel = r[on] / safe[on]
            report.min_on_cone = min(report.min_on_cone, float(rel.min()))
        off = ~on
        if off.any():
            report.max_abs_off_cone = max(report.max_abs_off_cone, float(np.abs(r[off]).max()))
        bad = np.flatnonzero((on & (r < -tol * norm)) | (off & (r != 0)))
        for i in bad[: max(0, limit - len(report.violations))]:
            for b in range(pts.shape[1]):
                report.violations.append((pts[i].copy(), a, b, r[i]))
    # expanded forms of the rows, compared with the sign-exact ones
    if pts.shape[1] == 2:
        x1, x2 = x
        expanded = [x2 * x2 - x1 * x2, x1 * x1 - x1 * x2]
    else:
        x1, x2, x3 = x
        expanded = [
            x2 * x2 + x3 * x3 - x1 * x2 - x1 * x3,
            x1 * x1 + x3 * x3 - x1 * x2 - x2 * x3,
            x1 * x1 + x2 * x2 - x1 * x3 - x2 * x3,
        ]
    on = inside & (norm > 0)
    if on.any():
        n2 = norm[on] ** 2
        for a, r in enumerate(rows):
            res = np.abs(r[on] * norm[on] - expanded[a][on]) / n2
            report.identity_residual = max(report.identity_residual, float(res.max()))
        # the rows satisfy sum_j xi_j r_j = 0, so every column is divergence free
        div = sum(x[j][on] * rows[j][on] for j in range(len(rows)))
        report.divergence_residual = max(report.divergence_residual, float((np.abs(div) / n2).max()))


def verify_positivity(
    lattice: FrequencyLattice | None,
    dim: int,
    samples: int,
    rng: np.random.Generator | int | None = 0,
    tol: float = 1e-14,
    chunk: int = 250_000,
    max_violations: int = 1000,
) -> PositivityReport:
    """Check the toy symbol is nonnegative on the cone and zero off it.

    Scans every point of ``lattice`` (if given) plus ``samples`` random
    points inside the cone and ``samples // 10`` random points anywhere.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if lattice is not None and lattice.dim != dim:
        raise ValueError(f"lattice is {lattice.dim}-D but dim={dim}")
    rng = np.random.default_rng(rng)
    report = PositivityReport(dim, 0, 0, np.inf, 0.0, 0.0, 0.0, tol=tol)
    if lattice is not None:
        pts = np.stack([x.ravel() for x in lattice.xi_full], axis=1)
        for s in range(0, pts.shape[0], chunk):
            _check_points(pts[s : s + chunk], tol, report, max_violations)
        report.n_lattice = pts.shape[0]
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        pts = sample_cone(dim, n, rng)
        _check_points(pts, tol, report, max_violations)
        done += pts.shape[0]
    report.n_random = done
    anywhere = rng.normal(size=(max(1, samples // 10), dim))
    _check_points(anywhere, tol, report, max_violations)
    return report
