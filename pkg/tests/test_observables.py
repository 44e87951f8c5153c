import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_density
from dqbaker.channel import BathParams, DissipatorPlan, evolve
from dqbaker.errors import GridMismatch, NegativeForm
from dqbaker.observables import fidelity, husimi_l1_distance, purity
from dqbaker.torus import DensityMatrix, HusimiField, StateVector, TorusSpace, position_state


def test_purity_examples():
    s = TorusSpace(100)
    assert purity(position_state(s, 4).projector()) == pytest.approx(1.0, abs=1e-12)
    assert purity(DensityMatrix.maximally_mixed(s)) == pytest.approx(0.01, abs=1e-15)
    mix = 0.5 * (position_state(s, 1).projector().entries + position_state(s, 2).projector().entries)
    assert purity(DensityMatrix(mix, "position", s)) == pytest.approx(0.5)


def test_purity_basis_independent(rng):
    rho = random_density(TorusSpace(20), rng, rank=3)
    assert purity(rho.to("momentum")) == pytest.approx(purity(rho), abs=1e-14)


def test_fidelity_examples():
    s = TorusSpace(100)
    psi = position_state(s, 7)
    assert fidelity(psi, psi.projector()) == pytest.approx(1.0)
    assert fidelity(psi, DensityMatrix.maximally_mixed(s)) == pytest.approx(0.1)
    assert fidelity(psi, position_state(s, 8).projector()) == 0.0


def test_fidelity_cross_basis(rng):
    s = TorusSpace(16)
    rho = random_density(s, rng)
    psi = StateVector.normalized(rng.normal(size=16) + 1j * rng.normal(size=16), "position", s)
    assert fidelity(psi, rho) == pytest.approx(fidelity(psi.to("momentum"), rho.to("momentum")), abs=1e-13)


def test_fidelity_clipping_and_negative_form():
    s = TorusSpace(4)
    psi = position_state(s, 0)
    tiny = np.zeros((4, 4), dtype=complex)
    tiny[0, 0] = -1e-13
    assert fidelity(psi, DensityMatrix(tiny, "position", s)) == 0.0
    tiny[0, 0] = -1e-6
    with pytest.raises(NegativeForm):
        fidelity(psi, DensityMatrix(tiny, "position", s))


def test_fidelity_global_phase(rng):
    s = TorusSpace(12)
    rho = random_density(s, rng, rank=2)
    v = rng.normal(size=12) + 1j * rng.normal(size=12)
    a = StateVector.normalized(v, "position", s)
    b = StateVector.normalized(v * np.exp(2.1j), "position", s)
    assert fidelity(a, rho) == pytest.approx(fidelity(b, rho), abs=1e-15)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=2, max_value=24), st.integers(min_value=1, max_value=6), st.integers(0, 2**32 - 1))
def test_purity_bounds(N, rank, seed):
    rho = random_density(TorusSpace(N), np.random.default_rng(seed), rank=min(rank, N))
    assert 1 / N - 1e-9 <= purity(rho) <= 1 + 1e-9


def test_closed_eigenprojector_fidelity(space100, baker100, spectrum100):
    psi = spectrum100.eigenstate(42)
    b = BathParams(0.0, 1.0, space100)
    f = evolve(psi, baker100, b, DissipatorPlan(1), 20).column("fidelity")
    assert np.abs(f - 1).max() < 1e-9


def field(values):
    return HusimiField(np.asarray(values, dtype=float), 10)


def test_l1_examples():
    a = field(np.arange(1, 13).reshape(3, 4))
    assert husimi_l1_distance(a, a) == 0.0
    assert husimi_l1_distance(a, field(2 * a.values)) == pytest.approx(0.0, abs=1e-15)
    left = field([[1, 0], [1, 0]])
    right = field([[0, 2], [0, 3]])
    assert husimi_l1_distance(left, right) == pytest.approx(1.0)
    with pytest.raises(GridMismatch):
        husimi_l1_distance(left, a)


positive_grids = arrays(np.float64, (4, 5), elements=st.floats(min_value=1e-3, max_value=10.0))


@given(positive_grids, positive_grids, positive_grids)
def test_l1_metric_properties(x, y, z):
    a, b, c = field(x), field(y), field(z)
    dab = husimi_l1_distance(a, b)
    assert 0.0 <= dab <= 1.0 + 1e-12
    assert dab == pytest.approx(husimi_l1_distance(b, a), abs=1e-15)
    assert husimi_l1_distance(a, c) <= dab + husimi_l1_distance(b, c) + 1e-12
