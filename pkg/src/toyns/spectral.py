"""Frequency-lattice fields, padded transforms and linear convolution.

Fields live on the symmetric lattice ``xi = h * m`` with integer index
``m`` in ``[-N, N]`` along every axis.  Arrays are stored in centred order,
so array position ``m + N`` holds index ``m``.

Physical samples are taken on the periodic grid ``x_n = 2 pi n / (M h)`` of
``M`` points per axis, with the normalisation

    f(x_n) = h**dim * sum_m f_hat(m) exp(i h m . x_n)

chosen so that pointwise products of samples transform back to the
lattice convolution ``(f * g)(xi) = h**dim sum_eta f(eta) g(xi - eta)``.
"""

from __future__ import annotations

import itertools
import struct
from dataclasses import dataclass, field
from functools import cached_property
from typing import BinaryIO, Sequence

import numpy as np
import scipy.fft as sfft

__all__ = [
    "FrequencyLattice",
    "SpectralScalarField",
    "SpectralVectorField",
    "LatticeMismatch",
    "make_lattice",
    "convolve",
    "convolve_arrays",
    "to_physical",
    "to_spectral",
    "is_hermitian",
    "write_checkpoint",
    "read_checkpoint",
]

MAGIC = b"TNSF"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIddI")


class LatticeMismatch(ValueError):
    pass


@dataclass(frozen=True)
class FrequencyLattice:
    dim: int
    N: int
    h: float
    padded: bool = True

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"unsupported dimension {self.dim}; expected 2 or 3")
        if self.N < 1:
            raise ValueError(f"modes_per_axis N={self.N} must be >= 1")
        if not self.h > 0:
            raise ValueError(f"frequency step h={self.h} must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (2 * self.N + 1,) * self.dim

    @property
    def size(self) -> int:
        return (2 * self.N + 1) ** self.dim

    @property
    def cell(self) -> float:
        """Volume element ``h**dim`` of the Riemann sums."""
        return self.h**self.dim

    @property
    def xi_max(self) -> float:
        return self.N * self.h

    @cached_property
    def grid_size(self) -> int:
        # 2(2N+1) points make products of two lattice fields alias-free.
        if self.padded:
            return sfft.next_fast_len(2 * (2 * self.N + 1), real=True)
        return 2 * self.N + 1

    @cached_property
    def indices(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    @cached_property
    def xi(self) -> tuple[np.ndarray, ...]:
        """Frequency components as broadcastable open-grid arrays."""
        axes = []
        for a in range(self.dim):
            shape = [1] * self.dim
            shape[a] = 2 * self.N + 1
            axes.append((self.h * self.indices).reshape(shape))
        return tuple(axes)

    @cached_property
    def xi_full(self) -> tuple[np.ndarray, ...]:
        return tuple(np.broadcast_to(x, self.shape) for x in self.xi)

    @cached_property
    def xi_norm2(self) -> np.ndarray:
        out = np.zeros(self.shape)
        for x in self.xi:
            out = out + x * x
        return out

    def index_of(self, m: Sequence[int]) -> tuple[int, ...]:
        """Array position of integer lattice index ``m``."""
        if len(m) != self.dim or any(abs(int(k)) > self.N for k in m):
            raise IndexError(f"lattice index {tuple(m)} outside [-{self.N}, {self.N}]^{self.dim}")
        return tuple(int(k) + self.N for k in m)

    def nearest_index(self, xi: Sequence[float]) -> tuple[int, ...]:
        return tuple(int(round(x / self.h)) for x in xi)

    def zeros(self, ncomp: int | None = None) -> np.ndarray:
        if ncomp is None:
            return np.zeros(self.shape, dtype=complex)
        return np.zeros((ncomp,) + self.shape, dtype=complex)


def make_lattice(dim: int, N: int, h: float, padded: bool = True) -> FrequencyLattice:
    """Simulation lattice; rejects ``N < 8`` (tiny lattices are for oracle checks only)."""
    if dim not in (2, 3):
        raise ValueError(f"unsupported dimension {dim}; expected 2 or 3")
    if N < 8:
        raise ValueError(f"modes_per_axis N={N} must be >= 8")
    return FrequencyLattice(dim, N, h, padded)


def _frozen(a, shape):
    arr = np.array(a, dtype=complex)
    if arr.shape != shape:
        raise ValueError(f"coefficient array has shape {arr.shape}, expected {shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SpectralScalarField:
    lattice: FrequencyLattice
    coeffs: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, self.lattice.shape))

    @classmethod
    def zeros(cls, lattice, time=0.0):
        return cls(lattice, lattice.zeros(), time)

    def replace(self, coeffs=None, time=None) -> "SpectralScalarField":
        return SpectralScalarField(
            self.lattice,
            self.coeffs if coeffs is None else coeffs,
            self.time if time is None else time,
        )

    def __mul__(self, c):
        return self.replace(self.coeffs * c)

    __rmul__ = __mul__

    def __add__(self, other):
        _check_same(self.lattice, other.lattice)
        return self.replace(self.coeffs + other.coeffs)

    def __sub__(self, other):
        _check_same(self.lattice, other.lattice)
        return self.replace(self.coeffs - other.coeffs)

    def __getitem__(self, m):
        return self.coeffs[self.lattice.index_of(m)]

    def l1(self) -> float:
        return float(self.lattice.cell * np.abs(self.coeffs).sum())


@dataclass(frozen=True)
class SpectralVectorField:
    lattice: FrequencyLattice
    components: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        shape = (self.lattice.dim,) + self.lattice.shape
        object.__setattr__(self, "components", _frozen(self.components, shape))

    @classmethod
    def zeros(cls, lattice, time=0.0):
        return cls(lattice, lattice.zeros(lattice.dim), time)

    @classmethod
    def from_scalars(cls, fields: Sequence[SpectralScalarField], time=0.0):
        lat = fields[0].lattice
        for f in fields:
            _check_same(lat, f.lattice)
        return cls(lat, np.stack([f.coeffs for f in fields]), time)

    @property
    def dim(self) -> int:
        return self.lattice.dim

    def component(self, j: int) -> SpectralScalarField:
        return SpectralScalarField(self.lattice, self.components[j], self.time)

    def replace(self, components=None, time=None) -> "SpectralVectorField":
        return SpectralVectorField(
            self.lattice,
            self.components if components is None else components,
            self.time if time is None else time,
        )

    def __mul__(self, c):
        return self.replace(self.components * c)

    __rmul__ = __mul__

    def __add__(self, other):
        _check_same(self.lattice, other.lattice)
        return self.replace(self.components + other.components)

    def __sub__(self, other):
        _check_same(self.lattice, other.lattice)
        return self.replace(self.components - other.components)

    def divergence(self) -> np.ndarray:
        """``xi . u_hat(xi)`` on the lattice (the i factor dropped)."""
        out = np.zeros(self.lattice.shape, dtype=complex)
        for j, x in enumerate(self.lattice.xi):
            out = out + x * self.components[j]
        return out

    def divergence_residual(self) -> float:
        """max |xi . u_hat| relative to max |u_hat| (0 for the zero field)."""
        scale = np.abs(self.components).max()
        if scale == 0:
            return 0.0
        return float(np.abs(self.divergence()).max() / scale)

    def is_divergence_free(self, rtol: float = 1e-10) -> bool:
        return self.divergence_residual() <= rtol

    def l1(self) -> float:
        return float(self.lattice.cell * np.abs(self.components).sum())


def _check_same(a: FrequencyLattice, b: FrequencyLattice):
    if a != b:
        raise LatticeMismatch(f"lattice mismatch: {a} vs {b}")


def is_hermitian(coeffs: np.ndarray, rtol: float = 1e-14) -> bool:
    """True when ``c(-m) == conj(c(m))`` for a centred lattice array."""
    mirror = np.conj(coeffs[(slice(None, None, -1),) * coeffs.ndim])
    scale = np.abs(coeffs).max()
    return bool(np.abs(coeffs - mirror).max() <= rtol * scale) if scale > 0 else True


# -- transforms ----------------------------------------------------------

def _grid_size(lattice, grid_size):
    M = lattice.grid_size if grid_size is None else int(grid_size)
    if M < 2 * lattice.N + 1:
        raise ValueError(f"grid size {M} cannot hold {2 * lattice.N + 1} modes per axis")
    return M


def _blocks(N: int, M: int, d: int, half: bool):
    """(lattice slices, grid slices) pairs mapping centred indices to FFT order."""
    pos = (slice(N, 2 * N + 1), slice(0, N + 1))
    neg = (slice(0, N), slice(M - N, M))
    axes = [(pos, neg)] * d
    if half:
        axes[-1] = (pos,)
    for combo in itertools.product(*axes):
        yield tuple(c[0] for c in combo), tuple(c[1] for c in combo)


def _pad_axis(a: np.ndarray, axis: int, N: int, M: int) -> np.ndarray:
    """Centred axis of length 2N+1 -> zero-padded FFT-ordered axis of length M."""
    shape = list(a.shape)
    shape[axis] = M
    out = np.zeros(shape, dtype=complex)
    lead = (slice(None),) * (a.ndim + axis)
    out[lead + (slice(0, N + 1),)] = a[lead + (slice(N, 2 * N + 1),)]
    out[lead + (slice(M - N, M),)] = a[lead + (slice(0, N),)]
    return out


def _crop_axis(a: np.ndarray, axis: int, N: int, M: int) -> np.ndarray:
    lead = (slice(None),) * (a.ndim + axis)
    return np.concatenate([a[lead + (slice(M - N, M),)], a[lead + (slice(0, N + 1),)]], axis=axis)


def physical_arrays(coeffs: np.ndarray, lattice: FrequencyLattice, M: int, real: bool) -> np.ndarray:
    """Samples of the field(s) in ``coeffs`` (leading axes are batch axes).

    The Hermitian path transforms one axis at a time and skips the
    all-zero padding blocks.
    """
    d = lattice.dim
    N = lattice.N
    if not real:
        buf = np.zeros(coeffs.shape[:-d] + (M,) * d, dtype=complex)
        for src, dst in _blocks(N, M, d, False):
            buf[(Ellipsis,) + dst] = coeffs[(Ellipsis,) + src]
        buf *= lattice.cell
        return sfft.ifftn(buf, axes=tuple(range(-d, 0)), norm="forward", overwrite_x=True)
    a = coeffs[..., N:] * lattice.cell
    for axis in range(-d, -1):
        a = sfft.ifft(_pad_axis(a, axis, N, M), axis=axis, norm="forward", overwrite_x=True)
    return sfft.irfft(a, n=M, axis=-1, norm="forward")


def spectral_arrays(samples: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    """Lattice coefficients of physical samples (inverse of physical_arrays)."""
    d = lattice.dim
    N = lattice.N
    M = samples.shape[-1]
    if samples.shape[-d:] != (M,) * d:
        raise ValueError(f"samples of shape {samples.shape} are not a {d}-D cubic grid")
    if M < 2 * N + 1:
        raise ValueError(f"grid size {M} cannot hold {2 * N + 1} modes per axis")
    out = np.empty(samples.shape[:-d] + lattice.shape, dtype=complex)
    if not np.isrealobj(samples):
        buf = sfft.fftn(samples, axes=tuple(range(-d, 0)), norm="forward")
        for src, dst in _blocks(N, M, d, False):
            out[(Ellipsis,) + src] = buf[(Ellipsis,) + dst]
    else:
        a = sfft.rfft(samples, axis=-1, norm="forward")[..., : N + 1]
        for axis in range(-2, -d - 1, -1):
            a = _crop_axis(sfft.fft(a, axis=axis, norm="forward", overwrite_x=True), axis, N, M)
        out[..., N:] = a
        flip = (Ellipsis,) + (slice(None, None, -1),) * (d - 1) + (slice(2 * N, N, -1),)
        out[..., :N] = np.conj(out[flip])
    out /= lattice.cell
    return out


def to_physical(f, grid_size: int | None = None) -> np.ndarray:
    """Physical samples of a scalar or vector field.

    Hermitian fields give real samples.  ``grid_size`` defaults to the
    lattice's padded size.
    """
    coeffs = f.coeffs if isinstance(f, SpectralScalarField) else f.components
    M = _grid_size(f.lattice, grid_size)
    return physical_arrays(coeffs, f.lattice, M, is_hermitian(coeffs))


def to_spectral(samples: np.ndarray, lattice: FrequencyLattice, time: float = 0.0):
    """Inverse of :func:`to_physical`; extra leading axis gives a vector field."""
    samples = np.asarray(samples)
    d = lattice.dim
    if samples.ndim == d:
        return SpectralScalarField(lattice, spectral_arrays(samples, lattice), time)
    if samples.ndim == d + 1 and samples.shape[0] == d:
        return SpectralVectorField(lattice, spectral_arrays(samples, lattice), time)
    raise ValueError(f"samples of shape {samples.shape} do not match a {d}-D lattice")


def convolve_arrays(a: np.ndarray, b: np.ndarray, lattice: FrequencyLattice) -> np.ndarray:
    """Truncated linear convolution of two centred coefficient arrays."""
    if a.shape != lattice.shape or b.shape != lattice.shape:
        raise LatticeMismatch("coefficient arrays do not match the lattice")
    M = sfft.next_fast_len(2 * (2 * lattice.N + 1), real=True)
    real = is_hermitian(a) and is_hermitian(b)
    pa = physical_arrays(a, lattice, M, real)
    pb = pa if b is a else physical_arrays(b, lattice, M, real)
    return spectral_arrays(pa * pb, lattice)


def convolve(f: SpectralScalarField, g: SpectralScalarField) -> SpectralScalarField:
    _check_same(f.lattice, g.lattice)
    return SpectralScalarField(f.lattice, convolve_arrays(f.coeffs, g.coeffs, f.lattice), f.time)


# -- checkpoints ---------------------------------------------------------

def write_checkpoint(fp: BinaryIO | str, f) -> None:
    """Write a field in the ``TNSF`` binary checkpoint format."""
    if isinstance(fp, (str, bytes)) or hasattr(fp, "__fspath__"):
        with open(fp, "wb") as fh:
            return write_checkpoint(fh, f)
    lat = f.lattice
    if isinstance(f, SpectralScalarField):
        comps = f.coeffs[None]
    else:
        comps = f.components
    fp.write(_HEADER.pack(MAGIC, FORMAT_VERSION, lat.dim, lat.N, lat.h, float(f.time), comps.shape[0]))
    data = np.ascontiguousarray(comps, dtype="<c16")
    fp.write(data.view("<f8").tobytes(order="C"))


def read_checkpoint(fp: BinaryIO | str, padded: bool = True):
    if isinstance(fp, (str, bytes)) or hasattr(fp, "__fspath__"):
        with open(fp, "rb") as fh:
            return read_checkpoint(fh, padded)
    head = fp.read(_HEADER.size)
    if len(head) != _HEADER.size:
        raise ValueError("truncated checkpoint header")
    magic, version, dim, N, h, time, ncomp = _HEADER.unpack(head)
    if magic != MAGIC:
        raise ValueError(f"bad checkpoint magic {magic!r}")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    lat = FrequencyLattice(dim, N, h, padded)
    count = ncomp * lat.size
    raw = np.frombuffer(fp.read(16 * count), dtype="<f8")
    if raw.size != 2 * count:
        raise ValueError("truncated checkpoint payload")
    comps = raw.view("<c16").reshape((ncomp,) + lat.shape)
    if ncomp == 1:
        return SpectralScalarField(lat, comps[0], time)
    if ncomp != dim:
        raise ValueError(f"checkpoint has {ncomp} components for a {dim}-D lattice")
    return SpectralVectorField(lat, comps, time)
