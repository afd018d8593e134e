"""Inductive lower bound for the toy dynamics, used as an independent oracle.

For data whose j-th Fourier component dominates ``A w0`` with a seed
``w0`` supported in ``{|xi_i| >= 1/2} cap {|xi| <= 1}``, the solution obeys

    u_hat^j(t) >= A^(2^k) e^(-2^k t) 2^(k - 4(2^k - 1)) 1_{t >= t_k} w^k,

where ``w^k`` is the ``2^k``-fold convolution power of the seed.  All
amplitude arithmetic is done on logarithms.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .initdata import validate_admissibility
from .multipliers import toy_rows
from .spectral import FrequencyLattice, SpectralScalarField, SpectralVectorField, convolve_arrays

__all__ = [
    "EmptySeed",
    "SupportOverflow",
    "Insufficient",
    "BlowUpCertificate",
    "DominationReport",
    "T_INFINITY",
    "seed_mask",
    "seed_from_data",
    "support_sumset",
    "k_max_for",
    "conv_power",
    "conv_powers",
    "tk_schedule",
    "log_envelope_factor",
    "envelope",
    "threshold_amplitude",
    "growth_factor",
    "certify",
    "verify_domination",
    "besov_lower_bound",
]

LOG2 = math.log(2.0)
T_INFINITY = LOG2 / 3.0


class EmptySeed(ValueError):
    """The seed restriction of the data is empty."""


class SupportOverflow(ValueError):
    """A convolution power would leave the lattice."""


# -- seed ----------------------------------------------------------------

def seed_mask(lattice: FrequencyLattice, half: int = -1) -> np.ndarray:
    """``|xi_i| >= 1/2`` for all i, ``|xi| <= 1`` and ``sign(xi_1) == half``."""
    xi = lattice.xi_full
    mask = np.all([np.abs(x) >= 0.5 for x in xi], axis=0)
    mask &= lattice.xi_norm2 <= 1.0
    mask &= (xi[0] * half) > 0
    return mask


def seed_from_data(u0: SpectralVectorField, j: int, half: int = -1) -> tuple[float, SpectralScalarField]:
    """Amplitude ``A = h^dim sum |u0_hat|`` and the normalised seed of component ``j``."""
    lat = u0.lattice
    if not 0 <= j < lat.dim:
        raise ValueError(f"component {j} out of range for a {lat.dim}-D field")
    A = u0.l1()
    if A == 0:
        raise EmptySeed("zero data has no seed")
    c = np.real(u0.components[j])
    w = np.where(seed_mask(lat, half) & (c > 0), c / A, 0.0)
    if not np.any(w):
        raise EmptySeed(f"component {j} vanishes on |xi_i| >= 1/2, |xi| <= 1, sign(xi_1) = {half:+d}")
    return A, SpectralScalarField(lat, w.astype(complex))


# -- convolution powers --------------------------------------------------

def _hull_reach(mask: np.ndarray, N: int) -> int:
    """Largest ``|index|`` along any axis over the support."""
    idx = np.nonzero(mask)
    return max(int(np.abs(i - N).max()) for i in idx)


def k_max_for(seed: SpectralScalarField) -> int:
    """Largest k whose ``2^k``-dilated seed hull stays inside ``[-N, N]^dim``."""
    lat = seed.lattice
    mask = np.real(seed.coeffs) > 0
    if not mask.any():
        raise EmptySeed("empty seed")
    reach = _hull_reach(mask, lat.N)
    return int(math.floor(math.log2(lat.N / reach))) if reach > 0 else 10**6


def support_sumset(mask: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    """``S + S`` for a boolean support on the lattice."""
    counts = convolve_arrays(mask.astype(complex), mask.astype(complex), lattice).real / lattice.cell
    return counts > 0.5


def conv_powers(seed: SpectralScalarField, k: int) -> list[tuple[SpectralScalarField, np.ndarray]]:
    """``[(w^0, S_0), ..., (w^k, S_k)]``: powers by repeated squaring with exact supports.

    Values off the sumset support are rounding noise and are zeroed;
    values on it are clipped at 0.
    """
    lat = seed.lattice
    K = k_max_for(seed)
    if k > K:
        raise SupportOverflow(f"k={k} exceeds K_max={K}: the support of the 2^{k}-fold power leaves the lattice")
    if k < 0:
        raise ValueError("k must be >= 0")
    w = np.real(seed.coeffs).copy()
    mask = w > 0
    out = [(seed, mask)]
    for _ in range(k):
        mask = support_sumset(mask, lat)
        w = convolve_arrays(w.astype(complex), w.astype(complex), lat).real
        w = np.where(mask, np.maximum(w, 0.0), 0.0)
        out.append((SpectralScalarField(lat, w.astype(complex), seed.time), mask))
    return out


def conv_power(seed: SpectralScalarField, k: int) -> SpectralScalarField:
    """``w^k = w^(k-1) * w^(k-1)``, the ``2^k``-fold convolution power."""
    return conv_powers(seed, k)[-1][0]


# -- schedule and envelope -----------------------------------------------

def tk_schedule(k: int) -> float:
    """``t_k = (log 2 / 3)(1 - 4^-k)``, so ``t_k - t_(k-1) = 4^-k log 2``."""
    if k < 0:
        raise ValueError("k must be >= 0")
    return T_INFINITY * (1.0 - 4.0 ** (-k))


def threshold_amplitude() -> float:
    """``A* = 16 e^(t_inf) = 16 * 2^(1/3)``."""
    return 16.0 * 2.0 ** (1.0 / 3.0)


def growth_factor(A: float) -> float:
    """``A e^(-t_inf) / 16``; the envelope diverges with k iff this exceeds 1."""
    return A * math.exp(-T_INFINITY) / 16.0


def log_envelope_factor(A: float, k: int, t: float) -> float:
    """``log(A^(2^k) e^(-2^k t) 2^(k - 4(2^k - 1)))``."""
    if A <= 0:
        raise ValueError("amplitude must be positive")
    p = 2.0**k
    return p * (math.log(A) - t) + (k - 4.0 * (p - 1.0)) * LOG2


def _envelope_values(A, k, t, w):
    if t < tk_schedule(k):
        return np.zeros_like(w)
    L = log_envelope_factor(A, k, t)
    pos = w > 0
    with np.errstate(over="ignore", divide="ignore"):
        return np.where(pos, np.exp(L + np.log(np.where(pos, w, 1.0))), 0.0)


def envelope(A: float, k: int, t: float, seed: SpectralScalarField, power: SpectralScalarField | None = None) -> SpectralScalarField:
    """Lower envelope of ``u_hat^j(t)`` from the k-th induction step.

    Overflowing entries come back as ``+inf``; ``power`` skips recomputing ``w^k``.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    w = np.real((conv_power(seed, k) if power is None else power).coeffs)
    return SpectralScalarField(seed.lattice, _envelope_values(A, k, t, w).astype(complex), t)


# -- certificates --------------------------------------------------------

@dataclass(frozen=True)
class Insufficient:
    reason: str
    detail: str = ""

    def __bool__(self):
        return False

    def to_text(self) -> str:
        return f"no certificate: {self.reason}" + (f" ({self.detail})" if self.detail else "")


@dataclass
class BlowUpCertificate:
    A: float
    j: int
    seed: SpectralScalarField
    schedule: list
    K_max: int
    measured_C: float
    half: int = -1
    powers: list = field(default_factory=list, repr=False)

    def __bool__(self):
        return True

    @property
    def lattice(self) -> FrequencyLattice:
        return self.seed.lattice

    @property
    def growth(self) -> float:
        return growth_factor(self.A)

    @property
    def c_seed(self) -> float:
        return float(self.lattice.cell * np.real(self.seed.coeffs).sum())

    def power(self, k: int) -> tuple[SpectralScalarField, np.ndarray]:
        if k > self.K_max:
            raise SupportOverflow(f"k={k} exceeds K_max={self.K_max}")
        if k >= len(self.powers):
            self.powers[:] = conv_powers(self.seed, k)
        return self.powers[k]

    def envelope(self, k: int, t: float) -> SpectralScalarField:
        return envelope(self.A, k, t, self.seed, self.power(k)[0])

    def checkpoints(self, k_max: int | None = None) -> list[float]:
        k_max = self.K_max if k_max is None else min(k_max, self.K_max)
        return [tk_schedule(k) for k in range(k_max + 1)]

    def table(self) -> list[dict]:
        rows = []
        rows_q = toy_rows(self.lattice.xi)[self.j]
        q = np.broadcast_to(rows_q, self.lattice.shape)
        for k in range(self.K_max + 1):
            w, mask = self.power(k)
            rows.append(
                {
                    "k": k,
                    "t_k": tk_schedule(k),
                    "support_size": int(mask.sum()),
                    "w_l1": float(self.lattice.cell * np.real(w.coeffs).sum()),
                    "min_q_jj_over_2k": float(q[mask].min() / 2.0**k),
                    "log_envelope_factor_at_t_k": log_envelope_factor(self.A, k, tk_schedule(k)),
                }
            )
        return rows

    def to_text(self) -> str:
        lat = self.lattice
        lines = [
            "blow-up certificate",
            f"  lattice          : dim={lat.dim} N={lat.N} h={lat.h!r}",
            f"  amplitude A      : {self.A!r}",
            f"  threshold A*     : {threshold_amplitude()!r}",
            f"  growth factor    : {self.growth!r}",
            f"  component j      : {self.j}",
            f"  seed half        : sign(xi_1) = {self.half:+d}",
            f"  seed modes       : {int((np.real(self.seed.coeffs) > 0).sum())}",
            f"  c_seed           : {self.c_seed!r}",
            f"  K_max            : {self.K_max}",
            f"  measured C       : {self.measured_C!r}",
            "  schedule t_k     : " + ", ".join(f"{t:.12g}" for t in self.schedule),
        ]
        return "\n".join(lines)

    def to_csv(self) -> str:
        rows = self.table()
        buf = io.StringIO()
        buf.write(",".join(rows[0].keys()) + "\n")
        for r in rows:
            buf.write(",".join(repr(v) for v in r.values()) + "\n")
        return buf.getvalue()


def certify(u0: SpectralVectorField, lattice: FrequencyLattice | None = None, component: int | None = None, half: int = -1):
    """Issue a BlowUpCertificate, or Insufficient with the first failing condition."""
    if lattice is not None and lattice != u0.lattice:
        return Insufficient("lattice", "data lives on a different lattice")
    if not isinstance(u0, SpectralVectorField):
        return Insufficient("model", "certificates cover velocity fields of the toy system")
    rep = validate_admissibility(u0)
    if not rep.ok:
        return Insufficient("admissibility", rep.first_failure)
    lat = u0.lattice
    candidates = range(lat.dim) if component is None else [component]
    best = None
    for j in candidates:
        try:
            A, seed = seed_from_data(u0, j, half)
        except EmptySeed:
            continue
        mass = np.real(seed.coeffs).sum()
        if best is None or mass > best[2]:
            best = (j, A, mass, seed)
    if best is None:
        return Insufficient("empty seed", "no component is supported on |xi_i| >= 1/2, |xi| <= 1")
    j, A, _, seed = best
    if not A > threshold_amplitude():
        return Insufficient("amplitude", f"A={A:.6g} <= A*={threshold_amplitude():.6g}")
    K = k_max_for(seed)
    powers = conv_powers(seed, K)
    q = np.broadcast_to(toy_rows(lat.xi)[j], lat.shape)
    C = min(float(q[mask].min()) / 2.0**k for k, (_, mask) in enumerate(powers))
    if not C > 0:
        return Insufficient("cone", f"q_jj vanishes on the support of a convolution power (C={C:.3g})")
    return BlowUpCertificate(A, j, seed, [tk_schedule(k) for k in range(K + 1)], K, C, half, powers)


# -- domination ----------------------------------------------------------

@dataclass
class DominationReport:
    rows: list = field(default_factory=list)
    missing: list = field(default_factory=list)
    rtol: float = 1e-9
    allowance: float = 0.0
    k_max: int = 0

    def verdict(self, k: int) -> str:
        if k in self.missing:
            return "missing"
        rs = [r for r in self.rows if r["k"] == k]
        return "pass" if rs and all(r["pass"] for r in rs) else "fail"

    @property
    def verdicts(self) -> dict:
        return {k: self.verdict(k) for k in range(self.k_max + 1)}

    @property
    def passed(self) -> bool:
        return all(v == "pass" for v in self.verdicts.values())

    @property
    def strict_passed(self) -> bool:
        return self.passed and all(r["strict_pass"] for r in self.rows)

    def worst_margin(self) -> float:
        return min((r["rel_margin"] for r in self.rows), default=math.nan)

    def to_text(self) -> str:
        lines = [
            "envelope domination",
            f"  tolerance  : {self.rtol:g} relative, integrator allowance {self.allowance:g} (reported separately)",
        ]
        for k, v in self.verdicts.items():
            lines.append(f"  checkpoint k={k} t_k={tk_schedule(k):.9f}: {v.upper()}")
            for r in self.rows:
                if r["k"] == k:
                    lines.append(
                        f"      envelope k'={r['k_env']}: margin={r['margin']:.6e} scale={r['scale']:.6e} "
                        f"relative={r['rel_margin']:.3e}{'' if r['strict_pass'] else ' (within allowance only)' if r['pass'] else ''}"
                    )
        lines.append(f"  overall    : {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)

    def to_csv(self) -> str:
        cols = ["k", "t_k", "k_env", "margin", "scale", "rel_margin", "strict_pass", "pass"]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for r in self.rows:
            buf.write(",".join(repr(r[c]) if isinstance(r[c], float) else str(r[c]) for c in cols) + "\n")
        for k in self.missing:
            buf.write(f"{k},{tk_schedule(k)!r},,,,,False,False\n")
        return buf.getvalue()


def _snapshots(trajectory) -> dict:
    snaps = getattr(trajectory, "snapshots", trajectory)
    if isinstance(snaps, Mapping):
        return {float(t): f for t, f in snaps.items()}
    return {float(f.time): f for f in snaps}


def verify_domination(
    trajectory,
    cert: BlowUpCertificate,
    k_max: int | None = None,
    dt: float = 0.0,
    rtol: float = 1e-9,
    allowance: float | None = None,
) -> DominationReport:
    """Compare snapshots at the t_k against every envelope k' <= k.

    ``trajectory`` is a SimulationResult, a mapping time -> field or a
    sequence of fields.  A row passes when its margin is at least
    ``-(rtol + allowance) * scale`` (allowance defaults to ``10 dt``);
    ``strict_pass`` uses ``rtol`` alone.
    """
    k_max = cert.K_max if k_max is None else k_max
    if k_max > cert.K_max:
        raise SupportOverflow(f"k_max={k_max} exceeds K_max={cert.K_max}")
    allowance = 10.0 * dt if allowance is None else allowance
    snaps = _snapshots(trajectory)
    rep = DominationReport(rtol=rtol, allowance=allowance, k_max=k_max)
    for k in range(k_max + 1):
        tk = tk_schedule(k)
        hit = [t for t in snaps if abs(t - tk) <= 1e-12 * max(1.0, tk)]
        if not hit:
            rep.missing.append(k)
            continue
        u = snaps[hit[0]]
        uj = np.real(u.components[cert.j] if isinstance(u, SpectralVectorField) else u.coeffs)
        for kp in range(k + 1):
            w, mask = cert.power(kp)
            env = _envelope_values(cert.A, kp, tk, np.real(w.coeffs))
            scale = float(env[mask].max())
            margin = float((uj[mask] - env[mask]).min()) if np.all(np.isfinite(env[mask])) else -math.inf
            rel = margin / scale if scale > 0 and math.isfinite(scale) else -math.inf
            rep.rows.append(
                {
                    "k": k,
                    "t_k": tk,
                    "k_env": kp,
                    "margin": margin,
                    "scale": scale,
                    "rel_margin": rel,
                    "strict_pass": bool(rel >= -rtol),
                    "pass": bool(rel >= -(rtol + allowance)),
                }
            )
    return rep


def besov_lower_bound(cert: BlowUpCertificate, s: float, k: int) -> float:
    """``(A e^(-t_inf) / 16)^(2^k) 2^((s+1)k) c_seed``."""
    if not 0 <= k <= cert.K_max:
        raise SupportOverflow(f"k={k} outside [0, K_max={cert.K_max}]")
    log_v = 2.0**k * math.log(cert.growth) + (s + 1.0) * k * LOG2 + math.log(cert.c_seed)
    return math.exp(log_v) if log_v < 709.0 else math.inf
