import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import conv_direct
from toyns.spectral import (
    FrequencyLattice,
    LatticeMismatch,
    SpectralScalarField,
    SpectralVectorField,
    convolve,
    convolve_arrays,
    is_hermitian,
    make_lattice,
    read_checkpoint,
    to_physical,
    to_spectral,
    write_checkpoint,
)
from fields import random_complex, random_hermitian, random_positive_even


def rel(a, b):
    return np.abs(a - b).max() / max(np.abs(b).max(), 1e-300)


def test_lattice_shapes():
    lat = make_lattice(2, 32, 0.25)
    assert lat.shape == (65, 65)
    assert lat.xi_max == 8.0
    lat3 = make_lattice(3, 16, 0.5)
    assert lat3.shape == (33, 33, 33)
    assert lat3.xi[0].min() == -8.0 and lat3.xi[0].max() == 8.0


def test_lattice_rejects_bad_dimension_and_size():
    with pytest.raises(ValueError, match="dimension"):
        make_lattice(4, 16, 0.5)
    with pytest.raises(ValueError):
        make_lattice(2, 4, 0.5)
    with pytest.raises(ValueError):
        FrequencyLattice(2, 4, 0.0)


def test_delta_convolution():
    lat = make_lattice(2, 8, 0.3)
    f = SpectralScalarField.zeros(lat)
    c = f.coeffs.copy()
    c[lat.index_of((1, -1))] = 1.0
    f = f.replace(c)
    out = convolve(f, f)
    expect = np.zeros(lat.shape, complex)
    expect[lat.index_of((2, -2))] = lat.h**2
    np.testing.assert_allclose(out.coeffs, expect, atol=1e-15)


@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("kind", ["complex", "hermitian"])
def test_convolution_matches_double_sum(dim, kind, rng):
    lat = FrequencyLattice(dim, 4, 0.37)
    gen = random_complex if kind == "complex" else random_hermitian
    for _ in range(5):
        a, b = gen(lat, rng), gen(lat, rng)
        assert rel(convolve_arrays(a, b, lat), conv_direct(a, b, 4, lat.h, dim)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_convolution_of_nonnegative_is_nonnegative(seed):
    rng = np.random.default_rng(seed)
    lat = FrequencyLattice(2, 5, 0.2)
    a, b = random_positive_even(lat, rng), random_positive_even(lat, rng)
    out = convolve_arrays(a, b, lat)
    assert out.real.min() >= -1e-13 * np.abs(out).max()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_convolution_bilinear(seed, s, t):
    rng = np.random.default_rng(seed)
    lat = FrequencyLattice(2, 4, 0.5)
    a, b, c = (random_complex(lat, rng) for _ in range(3))
    lhs = convolve_arrays(s * a + t * b, c, lat)
    rhs = s * convolve_arrays(a, c, lat) + t * convolve_arrays(b, c, lat)
    assert np.abs(lhs - rhs).max() <= 1e-12 * (1 + np.abs(rhs).max())


@pytest.mark.parametrize("dim", [2, 3])
def test_round_trip(dim, rng):
    lat = make_lattice(dim, 8, 0.3)
    for gen in (random_complex, random_hermitian):
        f = SpectralVectorField(lat, gen(lat, rng, dim))
        back = to_spectral(to_physical(f), lat)
        assert rel(back.components, f.components) < 1e-12


def test_hermitian_fields_give_real_samples(rng):
    lat = make_lattice(2, 8, 0.3)
    f = SpectralScalarField(lat, random_hermitian(lat, rng))
    assert is_hermitian(f.coeffs)
    x = to_physical(f)
    assert np.isrealobj(x)
    full = to_physical(SpectralScalarField(lat, f.coeffs + 0j), grid_size=lat.grid_size)
    assert np.isrealobj(full)


def test_physical_normalisation():
    # f(0) = h^d * sum of coefficients
    lat = make_lattice(2, 8, 0.25)
    c = np.zeros(lat.shape, complex)
    c[lat.index_of((0, 0))] = 3.0
    x = to_physical(SpectralScalarField(lat, c))
    np.testing.assert_allclose(x, 3.0 * lat.h**2, rtol=1e-14)


def test_zero_field():
    lat = make_lattice(2, 8, 0.3)
    z = SpectralScalarField.zeros(lat)
    assert not np.any(convolve(z, z).coeffs)
    assert not np.any(to_physical(z))


def test_lattice_mismatch():
    a = SpectralScalarField.zeros(make_lattice(2, 8, 0.3))
    b = SpectralScalarField.zeros(make_lattice(2, 9, 0.3))
    with pytest.raises(LatticeMismatch):
        convolve(a, b)


@pytest.mark.parametrize("dim", [2, 3])
def test_checkpoint_round_trip(dim, rng):
    lat = make_lattice(dim, 8, 0.3)
    f = SpectralVectorField(lat, random_complex(lat, rng, dim), time=0.125)
    buf = io.BytesIO()
    write_checkpoint(buf, f)
    buf.seek(0)
    g = read_checkpoint(buf)
    assert g.lattice == lat and g.time == 0.125
    assert np.array_equal(g.components, f.components)


def test_checkpoint_rejects_garbage():
    with pytest.raises(ValueError):
        read_checkpoint(io.BytesIO(b"XXXX" + bytes(64)))
    with pytest.raises(ValueError):
        read_checkpoint(io.BytesIO(b"TN"))


def test_fields_are_immutable(rng):
    lat = make_lattice(2, 8, 0.3)
    f = SpectralScalarField(lat, random_complex(lat, rng))
    with pytest.raises(ValueError):
        f.coeffs[0, 0] = 1.0
