"""Initial-data families with nonnegative, even Fourier transforms.

Amplitudes are fixed through the Fourier L1 norm ``A = h^dim sum |u_hat|``
(summed over components), the quantity that drives the blow-up threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .multipliers import cone_mask
from .spectral import FrequencyLattice, SpectralScalarField, SpectralVectorField

__all__ = [
    "AdmissibilityError",
    "BumpSpec",
    "ProfileSpec",
    "CGSpec",
    "mollifier",
    "ms_bump",
    "cg_prefactor",
    "cg_data",
    "cg_heat_besov_minus1",
    "vorticity_bump",
    "AdmissibilityReport",
    "validate_admissibility",
]


class AdmissibilityError(ValueError):
    """A data specification violates a support or sign constraint."""


def _smooth_step(s):
    # 1 at s <= 0, 0 at s >= 1, C-infinity in between, and step(s) + step(1 - s) == 1
    s = np.clip(s, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(s < 1, np.exp(-1.0 / np.where(s < 1, 1 - s, 1.0)), 0.0)
        b = np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)
    return a / (a + b)


def mollifier(rho):
    """Even radial profile: 1 for rho <= 1/2, smooth decay to 0 at rho = 1."""
    return _smooth_step(2.0 * np.asarray(rho, dtype=float) - 1.0)


def _even_bump(lattice: FrequencyLattice, center, radius, profile, stretch=None, shifts=((0.0,) * 3,)):
    """Sum of ``profile(|A(xi) -/+ c| / r)`` over the mirror pair, on the lattice."""
    out = np.zeros(lattice.shape)
    c = np.asarray(center, dtype=float)
    xi = lattice.xi
    for shift in shifts:
        for sign in (1.0, -1.0):
            d2 = 0.0
            for a in range(lattice.dim):
                x = xi[a] if stretch is None else stretch[a] * xi[a]
                d2 = d2 + (x + shift[a] - sign * c[a]) ** 2
            rho = np.sqrt(d2) / radius
            out = out + np.where(rho < 1, profile(np.minimum(rho, 1.0)), 0.0)
    return out


# -- Montgomery-Smith type bumps -----------------------------------------

@dataclass(frozen=True)
class BumpSpec:
    """Ball ``B(center, radius)`` and its mirror carrying the free component.

    ``amplitude`` is the Fourier L1 norm of the generated field.
    """

    dim: int
    center: tuple
    radius: float
    amplitude: float
    component: int = 0
    profile: Callable = field(default=mollifier, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if len(self.center) != self.dim:
            raise AdmissibilityError(f"center {self.center} is not {self.dim}-dimensional")
        if not self.radius > 0:
            raise AdmissibilityError("radius must be positive")
        if self.amplitude < 0:
            raise AdmissibilityError("amplitude must be nonnegative")
        if self.component not in (0, 1):
            raise AdmissibilityError("the free component must be 0 or 1")


def _cone_normals(center) -> list[np.ndarray]:
    """Inward unit normals of the half-spaces cutting out the sector/cone piece containing ``center``."""
    s = 1.0 if center[0] > 0 else -1.0
    if len(center) == 2:
        return [s * np.array([1.0, 0.0]), s * np.array([0.0, -1.0])]
    r2 = math.sqrt(0.5)
    return [
        s * np.array([1.0, 0.0, 0.0]),
        s * np.array([0.0, -1.0, 0.0]),
        s * np.array([0.0, 0.0, -1.0]),
        s * np.array([r2, r2, 0.0]),
        s * np.array([0.0, r2, -r2]),
    ]


def check_bump(lattice: FrequencyLattice, spec: BumpSpec) -> None:
    """Raise AdmissibilityError naming the first violated constraint."""
    c = np.asarray(spec.center)
    r = spec.radius
    region = "sector xi1*xi2 < 0" if spec.dim == 2 else "cone E"
    if lattice.dim != spec.dim:
        raise AdmissibilityError(f"bump is {spec.dim}-D but lattice is {lattice.dim}-D")
    if not cone_mask(c):
        raise AdmissibilityError(f"center {spec.center} lies outside the {region}")
    for n in _cone_normals(c):
        if n @ c <= r:
            raise AdmissibilityError(f"ball of radius {r} around {spec.center} leaves the {region}")
    if np.linalg.norm(c) + r > 1 + 1e-12:
        raise AdmissibilityError(f"ball of radius {r} around {spec.center} leaves the unit ball |xi| <= 1")
    gap = np.maximum(0.0, 0.5 - np.abs(c))
    if np.linalg.norm(gap) > r:
        raise AdmissibilityError(f"ball of radius {r} around {spec.center} misses the set |xi_j| >= 1/2")
    if np.max(np.abs(c)) + r > lattice.xi_max:
        raise AdmissibilityError(f"ball exceeds the lattice range |xi_j| <= {lattice.xi_max}")


def ms_bump(lattice: FrequencyLattice, spec: BumpSpec) -> SpectralVectorField:
    """Divergence-free field with nonnegative even spectrum supported in the sector/cone.

    The free component is a smooth bump on the ball and its mirror; the
    other in-plane component follows from ``xi1 u1 + xi2 u2 = 0``; in 3-D
    the third component vanishes.
    """
    check_bump(lattice, spec)
    free = _even_bump(lattice, spec.center, spec.radius, spec.profile)
    x1, x2 = lattice.xi_full[0], lattice.xi_full[1]
    on = free > 0
    if not on.any():
        raise AdmissibilityError("bump contains no lattice point; refine h or enlarge the radius")
    seed_zone = on & np.all([np.abs(x) >= 0.5 for x in lattice.xi_full], axis=0)
    if not seed_zone.any():
        raise AdmissibilityError("no lattice point of the bump satisfies |xi_j| >= 1/2 for all j")
    comps = np.zeros((lattice.dim,) + lattice.shape)
    if spec.component == 0:
        comps[0] = free
        comps[1] = np.where(on, -x1 * free / np.where(on, x2, 1.0), 0.0)
    else:
        comps[1] = free
        comps[0] = np.where(on, -x2 * free / np.where(on, x1, 1.0), 0.0)
    l1 = lattice.cell * comps.sum()
    comps *= spec.amplitude / l1
    return SpectralVectorField(lattice, comps)


# -- Chemin-Gallagher family ---------------------------------------------

@dataclass(frozen=True)
class ProfileSpec:
    """Even bump ``phi_hat`` on the ball ``B(center, radius)`` and its mirror."""

    center: tuple
    radius: float
    amplitude: float = 1.0
    profile: Callable = field(default=mollifier, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    def phi_hat(self, points: Sequence[np.ndarray]) -> np.ndarray:
        c = np.asarray(self.center)
        out = 0.0
        for sign in (1.0, -1.0):
            d2 = sum((p - sign * ci) ** 2 for p, ci in zip(points, c))
            rho = np.sqrt(d2) / self.radius
            out = out + np.where(rho < 1, self.profile(np.minimum(rho, 1.0)), 0.0)
        return self.amplitude * out


@dataclass(frozen=True)
class CGSpec:
    eps: float
    alpha: float
    profile: ProfileSpec

    def __post_init__(self):
        if not 0 < self.eps < 1:
            raise AdmissibilityError(f"eps={self.eps} must lie in (0, 1)")
        if not 0 < self.alpha < 1:
            raise AdmissibilityError(f"alpha={self.alpha} must lie in (0, 1)")
        c = np.asarray(self.profile.center)
        r = self.profile.radius
        if len(c) not in (2, 3):
            raise AdmissibilityError("profile center must be 2- or 3-dimensional")
        if not (c[0] * c[1] < 0 and abs(c[0]) > r and abs(c[1]) > r):
            raise AdmissibilityError("profile support must lie in xi1*xi2 < 0")
        if self.profile.amplitude < 0:
            raise AdmissibilityError("profile amplitude must be nonnegative")


def cg_prefactor(spec: CGSpec, dim: int) -> float:
    """``(-log eps)^(1/5) / eps^(1 - 2 alpha)``, halved in 3-D by the cosine."""
    p = (-math.log(spec.eps)) ** 0.2 / spec.eps ** (1 - 2 * spec.alpha)
    return 0.5 * p if dim == 3 else p


def _cg_shape(lattice: FrequencyLattice, spec: CGSpec) -> np.ndarray:
    d = lattice.dim
    if len(spec.profile.center) != d:
        raise AdmissibilityError(f"profile is {len(spec.profile.center)}-D but lattice is {d}-D")
    xi = lattice.xi_full
    s = spec.eps**spec.alpha
    c = np.abs(np.asarray(spec.profile.center))
    r = spec.profile.radius
    reach = [c[0] + r, (c[1] + r) / s]
    if d == 3:
        inv = 1.0 / spec.eps
        m = inv / lattice.h
        if abs(m - round(m)) > 1e-9 * max(1.0, m):
            raise AdmissibilityError(f"1/eps = {inv} is not a multiple of h = {lattice.h}")
        reach.append(inv + c[2] + r)
        phi = spec.profile.phi_hat((xi[0], s * xi[1], xi[2] + inv)) + spec.profile.phi_hat((xi[0], s * xi[1], xi[2] - inv))
    else:
        phi = spec.profile.phi_hat((xi[0], s * xi[1]))
    if max(reach) > lattice.xi_max:
        raise AdmissibilityError(f"lattice range {lattice.xi_max} cannot hold the support (needs {max(reach):.4g})")
    big = np.all([np.abs(x) >= 0.5 for x in xi], axis=0)
    if not (big & (phi > 0)).any():
        raise AdmissibilityError("data support misses the set |xi_j| >= 1/2 on this lattice")
    comps = np.zeros((d,) + lattice.shape)
    comps[0] = -xi[0] * xi[1] * phi
    comps[1] = xi[0] * xi[0] * phi
    return comps


def cg_data(lattice: FrequencyLattice, spec: CGSpec) -> SpectralVectorField:
    """The large-data family ``u = (d2 phi_eps, -d1 phi_eps, 0)`` built in frequency space.

    On a 3-D lattice the cosine factor shifts the profile to ``xi3 = -/+ 1/eps``.
    On a 2-D lattice the ``x3`` dependence is dropped and the field is
    ``(-xi1 xi2, xi1^2) * prefactor * phi_hat(xi1, eps^alpha xi2)``.
    """
    return SpectralVectorField(lattice, cg_prefactor(spec, lattice.dim) * _cg_shape(lattice, spec))


def cg_heat_besov_minus1(spec: CGSpec, t_grid=None, points: int = 48) -> float:
    """Heat-semigroup ``B^{-1}_{inf,inf}`` monitor of the 3-D family in the continuum.

    The frequency integrals are computed in the profile variables
    ``eta = (xi1, eps^alpha xi2, xi3 -/+ 1/eps)``, where the support is an
    eps-independent pair of balls, by a midpoint rule with ``points`` nodes
    per radius.  All coefficients are nonnegative, so the supremum over
    ``x`` sits at ``x = 0``.  The default time grid reaches below
    ``1 / (4 |xi|^2)`` for every frequency of the support.
    """
    from .analysis import default_t_grid

    if len(spec.profile.center) != 3:
        raise AdmissibilityError("the continuum evaluation is for the 3-D family")
    inv = 1.0 / spec.eps
    s = spec.eps**spec.alpha
    r = spec.profile.radius
    if t_grid is None:
        # the default grid 2^m, m = -20..6, extended down to 1 / (4 |xi|max^2)
        c = np.abs(np.asarray(spec.profile.center)) + r
        top2 = c[0] ** 2 + (c[1] / s) ** 2 + (inv + c[2]) ** 2
        t_grid = default_t_grid(top2)
    t_grid = np.asarray(t_grid, dtype=float)
    d = r / points
    nodes = (np.arange(-points, points) + 0.5) * d
    pref = cg_prefactor(spec, 3)
    sums = np.zeros((len(t_grid), 2))
    c = np.asarray(spec.profile.center)
    for ball in (c, -c):
        e1 = (ball[0] + nodes)[:, None, None]
        e2 = (ball[1] + nodes)[None, :, None]
        e3 = (ball[2] + nodes)[None, None, :]
        phi = spec.profile.phi_hat((e1, e2, e3))
        x1, x2 = e1, e2 / s
        u1 = pref * np.abs(x1 * x2) * phi
        u2 = pref * x1 * x1 * phi
        for shift in (inv, -inv):
            n2 = x1 * x1 + x2 * x2 + (e3 - shift) ** 2
            for i, t in enumerate(t_grid):
                w = np.exp(-t * n2)
                sums[i, 0] += (w * u1).sum()
                sums[i, 1] += (w * u2).sum()
    sups = d**3 / s * np.sqrt((sums**2).sum(axis=1))
    return float(np.max(np.sqrt(t_grid) * sups))


# -- vorticity toy data --------------------------------------------------

def vorticity_bump(
    lattice: FrequencyLattice,
    amplitude: float,
    center: Sequence[float] = (0.6, -0.6),
    radius: float = 0.05,
    profile: Callable = mollifier,
) -> SpectralScalarField:
    """``w_hat = -(even nonnegative bump)`` with ``h^2 sum |w_hat| = amplitude``."""
    if lattice.dim != 2:
        raise AdmissibilityError("the vorticity toy model is two-dimensional")
    if amplitude < 0:
        raise AdmissibilityError("amplitude must be nonnegative")
    b = _even_bump(lattice, center, radius, profile)
    if not (b > 0).any():
        raise AdmissibilityError("bump contains no lattice point")
    if amplitude == 0:
        return SpectralScalarField.zeros(lattice)
    b *= amplitude / (lattice.cell * b.sum())
    return SpectralScalarField(lattice, -b)


# -- admissibility -------------------------------------------------------

@dataclass
class AdmissibilityReport:
    checks: dict = field(default_factory=dict)

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks[name] = (bool(ok), detail)

    @property
    def ok(self) -> bool:
        return all(v[0] for v in self.checks.values())

    @property
    def first_failure(self) -> str | None:
        for name, (ok, detail) in self.checks.items():
            if not ok:
                return f"{name}: {detail}" if detail else name
        return None

    def __bool__(self):
        return self.ok

    def to_text(self) -> str:
        return "\n".join(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}".rstrip() for name, (ok, detail) in self.checks.items())


def validate_admissibility(u0: SpectralVectorField, dim: int | None = None, rtol: float = 1e-12) -> AdmissibilityReport:
    """Sign, symmetry, incompressibility and support conditions for blow-up data."""
    rep = AdmissibilityReport()
    lat = u0.lattice
    if dim is not None and dim != lat.dim:
        rep.add("dimension", False, f"field is {lat.dim}-D, expected {dim}-D")
        return rep
    c = u0.components
    scale = float(np.abs(c).max())
    if scale == 0:
        rep.add("nonzero", False, "zero field")
        return rep
    tol = rtol * scale
    min_re = float(c.real.min())
    max_im = float(np.abs(c.imag).max())
    rep.add("nonnegative", min_re >= -tol and max_im <= tol, f"min Re = {min_re:.3e}, max |Im| = {max_im:.3e}")
    mirror = c[(slice(None),) + (slice(None, None, -1),) * lat.dim]
    odd = float(np.abs(c - mirror).max())
    rep.add("even", odd <= tol, f"max |u(xi) - u(-xi)| = {odd:.3e}")
    div = u0.divergence_residual()
    rep.add("divergence_free", div <= 1e-10, f"residual = {div:.3e}")
    x1, x2 = lat.xi_full[0], lat.xi_full[1]
    carried = np.abs(c).max(axis=0) > tol
    outside = carried & ~(x1 * x2 < 0)
    rep.add("support_in_sector", not outside.any(), f"{int(outside.sum())} supported modes with xi1*xi2 >= 0")
    big = np.all([np.abs(x) >= 0.5 for x in lat.xi_full], axis=0)
    rep.add("meets_|xi_j|>=1/2", bool((carried & big).any()), f"{int((carried & big).sum())} supported modes")
    if lat.dim == 3:
        frac = float((carried & cone_mask(lat.xi_full)).sum()) / max(1, int(carried.sum()))
        rep.checks["cone_fraction"] = (True, f"{frac:.3f} of supported modes in the cone E (informational)")
    return rep
