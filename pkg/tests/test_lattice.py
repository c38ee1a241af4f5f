import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from latthom.lattice import (SizingError, TorusLattice, annulus_sites, apply_operator, divergence,
                             dyadic_annuli, gradient, mask_eta, read_field, write_field)
from latthom.solver import OperatorSpec, operator_matrix

dims = st.integers(1, 3)
sides = st.integers(2, 5)


def brute_adjoint(u, F):
    """Double-loop evaluation of sum grad(u).F and sum u div(F)."""
    lat = TorusLattice.of(u)
    lhs = rhs = 0.0
    for x in itertools.product(range(lat.n), repeat=lat.d):
        for i in range(lat.d):
            xp = list(x)
            xp[i] = (xp[i] + 1) % lat.n
            xm = list(x)
            xm[i] = (xm[i] - 1) % lat.n
            lhs += (u[tuple(xp)] - u[x]) * F[x + (i,)]
            rhs += u[x] * (F[x + (i,)] - F[tuple(xm) + (i,)])
    return lhs, rhs


def test_neighbors_and_index_bijection():
    lat = TorusLattice(3, 4)
    for k in range(lat.num_sites):
        assert lat.site_index(lat.site(k)) == k
        assert len(set(lat.neighbors(lat.site(k)))) == 6
    assert lat.num_edges == 3 * 64


@given(dims, sides, st.data())
def test_site_index_roundtrip(d, n, data):
    lat = TorusLattice(d, n)
    x = data.draw(st.tuples(*[st.integers(-3 * n, 3 * n)] * d))
    assert lat.site(lat.site_index(x)) == tuple(c % n for c in x)


def test_gradient_of_delta():
    u = np.zeros((4, 4))
    u[0, 0] = 1.0
    g = gradient(u)
    assert g[0, 0, 0] == -1.0
    assert g[3, 0, 0] == 1.0
    assert np.count_nonzero(g[..., 0]) == 2


def test_constants_are_annihilated():
    assert np.all(gradient(np.full((5, 5, 5), 2.5)) == 0)
    F = np.broadcast_to([1.0, -2.0, 3.0], (4, 4, 4, 3))
    assert np.all(divergence(F) == 0)


@given(dims, st.integers(0, 10_000))
def test_adjointness_against_double_loop(d, seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((3,) * d)
    F = rng.standard_normal((3,) * d + (d,))
    lhs, rhs = brute_adjoint(u, F)
    fast_lhs = (gradient(u) * F).sum()
    fast_rhs = (u * divergence(F)).sum()
    assert fast_lhs == pytest.approx(lhs, rel=1e-12, abs=1e-12)
    assert fast_rhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
    # divergence is minus the adjoint of the forward gradient
    assert lhs == pytest.approx(-rhs, rel=1e-12, abs=1e-12)


@given(dims, sides, st.integers(0, 10_000))
def test_divergence_sums_to_zero(d, n, seed):
    F = np.random.default_rng(seed).standard_normal((n,) * d + (d,))
    assert abs(divergence(F).sum()) <= 1e-12 * np.abs(F).sum()


def test_five_point_stencil():
    spec = OperatorSpec(np.ones((6, 6, 2)), 0.0)
    u = np.zeros((6, 6))
    u[0, 0] = 1.0
    out = apply_operator(spec, u)
    assert out[0, 0] == 4.0
    for y in [(1, 0), (5, 0), (0, 1), (0, 5)]:
        assert out[y] == -1.0
    assert np.count_nonzero(out) == 5


def test_operator_on_constants_is_mass():
    a = np.random.default_rng(0).uniform(1, 2, (5, 5, 2))
    out = apply_operator(OperatorSpec(a, 1 / 7), np.ones((5, 5)))
    assert np.allclose(out, 1 / 7, rtol=0, atol=1e-15)


@given(st.integers(1, 3), st.integers(0, 10_000))
@settings(max_examples=20)
def test_operator_symmetric_and_matches_dense(d, seed):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.5, 3, (3,) * d + (d,))
    spec = OperatorSpec(a, 0.3)
    u, v = rng.standard_normal((2,) + (3,) * d)
    Au, Av = apply_operator(spec, u), apply_operator(spec, v)
    assert (v * Au).sum() == pytest.approx((u * Av).sum(), rel=1e-12)
    M = operator_matrix(spec)
    assert np.allclose(M @ u.ravel(), Au.ravel(), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("profile", ["cos2", "flat"])
@pytest.mark.parametrize("d,n,L", [(1, 10, 3), (2, 16, 4), (3, 8, 4), (2, 9, 2)])
def test_mask(profile, d, n, L):
    lat = TorusLattice(d, n)
    eta = mask_eta(lat, L, profile)
    assert abs(eta.sum() - 1.0) <= 1e-14
    assert eta.min() >= 0
    disp = lat.displacement()
    outside = ~np.all((disp >= -L) & (disp < L), axis=-1)
    assert np.all(eta[outside] == 0)
    if profile == "flat":
        return  # uniform on the half-open box, so not reflection symmetric
    flipped = eta
    for ax in range(d):
        flipped = np.roll(np.flip(flipped, axis=ax), 1, axis=ax)
    assert np.allclose(flipped, eta, atol=1e-15)


def test_mask_sizing_error():
    with pytest.raises(SizingError):
        mask_eta(TorusLattice(2, 8), 5)


def test_annulus_examples():
    lat = TorusLattice(2, 8)
    nn = annulus_sites(lat, (0, 0), 0, 1)
    assert sorted(lat.site(k) for k in nn) == [(0, 1), (0, 7), (1, 0), (7, 0)]
    everything = annulus_sites(lat, (3, 3), 0, 8 * np.sqrt(2) / 2)
    assert everything.size == 63


@pytest.mark.parametrize("d,n", [(2, 16), (3, 8)])
def test_dyadic_annuli_partition_punctured_torus(d, n):
    lat = TorusLattice(d, n)
    rings = [(0.0, 0.5)] + dyadic_annuli(0.5, 2 * n)
    sets = [set(annulus_sites(lat, (1,) * d, lo, hi)) for lo, hi in rings]
    assert sum(len(s) for s in sets) == n ** d - 1
    assert len(set().union(*sets)) == n ** d - 1


def test_field_roundtrip(tmp_path, rng):
    a = rng.uniform(1, 2, (4, 4, 4, 3))
    path = tmp_path / "a.field"
    write_field(path, a, "edge")
    back, kind = read_field(path)
    assert kind == "edge"
    assert np.array_equal(back, a)
    header = path.read_bytes().split(b"\n", 1)[0]
    assert header == b'{"d": 3, "n": 4, "kind": "edge"}'


def test_field_size_mismatch(tmp_path):
    path = tmp_path / "bad.field"
    path.write_bytes(b'{"d": 2, "n": 4, "kind": "node"}\n' + np.zeros(3).tobytes())
    with pytest.raises(ValueError):
        read_field(path)
