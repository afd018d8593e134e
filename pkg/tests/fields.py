"""Random field generators for the tests."""

import numpy as np

from toyns.spectral import SpectralVectorField


def hermitian(c, d):
    flip = c[(Ellipsis,) + (slice(None, None, -1),) * d]
    return 0.5 * (c + np.conj(flip))


def random_hermitian(lattice, rng, ncomp=None):
    shape = lattice.shape if ncomp is None else (ncomp,) + lattice.shape
    c = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    return hermitian(c, lattice.dim)


def random_complex(lattice, rng, ncomp=None):
    shape = lattice.shape if ncomp is None else (ncomp,) + lattice.shape
    return rng.normal(size=shape) + 1j * rng.normal(size=shape)


def random_positive_even(lattice, rng, ncomp=None):
    shape = lattice.shape if ncomp is None else (ncomp,) + lattice.shape
    c = rng.uniform(0, 1, size=shape)
    return hermitian(c, lattice.dim).real.astype(complex)


def leray_project(comps, lattice):
    xi = lattice.xi
    n2 = lattice.xi_norm2
    inv = np.where(n2 > 0, 1 / np.where(n2 > 0, n2, 1), 0)
    dot = sum(x * c for x, c in zip(xi, comps))
    return np.stack([c - x * dot * inv for x, c in zip(xi, comps)])


def random_divfree(lattice, rng):
    return SpectralVectorField(lattice, leray_project(random_hermitian(lattice, rng, lattice.dim), lattice))
