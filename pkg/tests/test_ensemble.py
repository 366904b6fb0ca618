import json

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from affinepr import ensemble as E
from affinepr.exceptions import InvalidArgumentError


def test_gaussian_deterministic():
    a = E.gen_gaussian(4, 8, seed=7)
    b = E.gen_gaussian(4, 8, seed=7)
    assert np.array_equal(a.rows, b.rows)
    assert not np.array_equal(a.rows, E.gen_gaussian(4, 8, seed=8).rows)


def test_gaussian_statistics():
    ens = E.gen_gaussian(64, 640, seed=1)
    A = ens.rows
    clt = 4 * (1 / np.sqrt(2)) / np.sqrt(A.size)
    assert abs(A.real.mean()) < clt
    assert abs(A.imag.mean()) < clt
    power = np.mean(np.abs(A) ** 2)
    assert 0.95 <= power <= 1.05
    # real and imaginary parts each carry variance 1/2
    assert A.real.var() == pytest.approx(0.5, rel=0.05)


@pytest.mark.parametrize("n, m", [(0, 4), (4, 0)])
def test_gaussian_rejects_zero_dims(n, m):
    with pytest.raises(InvalidArgumentError):
        E.gen_gaussian(n, m, seed=0)


def _octanary_law():
    # Exact enumeration built from the law's definition, independent of the library.
    atoms = []
    for unit in (1, -1, sp.I, -sp.I):
        for mag, prob in ((sp.sqrt(2) / 2, sp.Rational(4, 5)), (sp.sqrt(3), sp.Rational(1, 5))):
            atoms.append((unit * mag, prob / 4))
    return atoms


def test_octanary_moments_exact():
    law = _octanary_law()
    assert sum(p for _, p in law) == 1
    mean = sp.simplify(sum(p * d for d, p in law))
    second = sp.simplify(sum(p * d ** 2 for d, p in law))
    power = sp.simplify(sum(p * d * sp.conjugate(d) for d, p in law))
    fourth = sp.simplify(sum(p * (d * sp.conjugate(d)) ** 2 for d, p in law))
    assert mean == 0
    assert second == 0
    assert power == 1
    assert fourth == 2 == 2 * power ** 2


def test_octanary_atoms_match_law():
    atoms = E.octanary_atoms()
    assert len(atoms) == 8
    assert sum(p for *_, p in atoms) == 1
    assert sum(p * m2 for _, m2, p in atoms) == 1
    assert sum(p * m2 ** 2 for _, m2, p in atoms) == 2
    # every atom is bounded by sqrt(3) < sqrt(6)
    assert max(m2 for _, m2, _ in atoms) == 3


def test_octanary_sampler_frequencies():
    rng = np.random.default_rng(0)
    d = E.sample_octanary(rng, size=200_000)
    mags = np.abs(d)
    assert np.all(np.isclose(mags, np.sqrt(2) / 2) | np.isclose(mags, np.sqrt(3)))
    assert np.mean(np.isclose(mags, np.sqrt(3))) == pytest.approx(0.2, abs=0.005)
    phases = np.round(np.angle(d) / (np.pi / 2)) % 4
    assert np.bincount(phases.astype(int), minlength=4) / d.size == pytest.approx([0.25] * 4, abs=0.005)
    assert isinstance(E.sample_octanary(rng), complex)


def test_cdp_all_ones_first_row():
    ens = E.cdp_from_patterns(np.ones((1, 4)), b=0.0)
    assert np.allclose(ens.rows[0], 1.0)
    x = np.array([1.0, 2.0 - 1j, -0.5j, 3.0])
    assert (ens.rows @ x)[0] == pytest.approx(x.sum())
    # rows are the conjugate DFT rows: row k is exp(-2 pi i t k / n)
    assert np.allclose(ens.rows, np.fft.fft(np.eye(4)))


def test_cdp_dense_matches_fft():
    ens = E.gen_cdp(8, 2, seed=3)
    x = np.random.default_rng(1).standard_normal(8) + 1j * np.random.default_rng(2).standard_normal(8)
    dense = ens.forward(x, method="dense")
    fast = ens.forward(x, method="fft")
    assert np.max(np.abs(dense - fast)) / np.max(np.abs(dense)) < 1e-12


def test_cdp_shapes_and_moduli():
    ens = E.gen_cdp(8, 3, seed=5)
    assert ens.m == 24 and ens.L == 3
    mods = np.abs(ens.rows)
    assert np.all(np.isclose(mods, np.sqrt(2) / 2) | np.isclose(mods, np.sqrt(3)))
    # each entry's modulus equals its pattern value's modulus
    assert np.allclose(mods.reshape(3, 8, 8), np.abs(ens.patterns)[:, None, :])


def test_cdp_unit_patterns_are_isometric():
    ens = E.cdp_from_patterns(np.ones((3, 5)))
    gram = ens.rows.conj().T @ ens.rows / ens.m
    assert np.allclose(gram, np.eye(5), atol=1e-13)


def test_cdp_rejects_zero_dims():
    with pytest.raises(InvalidArgumentError):
        E.gen_cdp(0, 2, seed=0)
    with pytest.raises(InvalidArgumentError):
        E.gen_cdp(4, 0, seed=0)


def test_offsets_are_constant():
    ens = E.gen_gaussian(3, 10, seed=0, b=2 - 1j)
    assert np.all(ens.offsets == 2 - 1j)
    assert ens.b == 2 - 1j


def test_measure_scalar_example():
    ens = E.from_rows([[1.0, 0.0]], b=2.0)
    assert E.measure(ens, [1.0, 0.0]).y[0] == 9.0


def test_measure_cauchy_schwarz_case():
    x = np.array([1 + 1j, -2.0, 0.5j])
    row = x.conj() / np.linalg.norm(x)
    ens = E.from_rows(np.tile(row, (4, 1)), b=0.0)
    assert np.allclose(E.measure(ens, x).y, np.linalg.norm(x) ** 2)


def test_measure_cdp_first_column():
    ens = E.cdp_from_patterns(np.ones((1, 4)), b=1.0)
    x = np.array([1.0, 0, 0, 0])
    # dense evaluation: a_j^* e_1 is the first column of the DFT matrix, all ones
    assert np.allclose(ens.rows[:, 0], 1.0)
    assert np.allclose(E.measure(ens, x).y, 4.0)
    assert np.allclose(E.measure(ens, x, method="fft").y, 4.0)


def test_measure_dimension_mismatch():
    ens = E.gen_gaussian(3, 5, seed=0)
    with pytest.raises(InvalidArgumentError):
        E.measure(ens, np.ones(4))


def test_ensemble_is_immutable():
    ens = E.gen_gaussian(3, 5, seed=0)
    with pytest.raises(ValueError):
        ens.rows[0, 0] = 0
    with pytest.raises(AttributeError):
        ens.n = 4


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 6), m=st.integers(1, 12), seed=st.integers(0, 2**64 - 1))
def test_measure_nonnegative_and_reproducible(n, m, seed):
    ens = E.gen_gaussian(n, m, seed)
    x = E.random_signal(n, seed)
    y = E.measure(ens, x).y
    assert np.all(y >= 0)
    assert np.array_equal(y, E.measure(E.gen_gaussian(n, m, seed), x).y)


def test_derive_seed_stable_and_distinct():
    assert E.derive_seed(0, 0) == E.derive_seed(0, 0)
    seeds = {E.derive_seed(42, i) for i in range(1000)}
    assert len(seeds) == 1000
    assert all(0 <= s < 2**64 for s in seeds)
    # splitmix64 reference output for state 0
    assert E.splitmix64(0) == 0xE220A8397B1DCDAF


@pytest.mark.parametrize("kind", ["gaussian", "cdp"])
def test_serialization_round_trip(tmp_path, kind):
    ens = E.gen_gaussian(3, 4, seed=11, b=1.5 - 2j) if kind == "gaussian" else E.gen_cdp(4, 2, seed=11)
    json_path, bin_path = E.save_ensemble(ens, tmp_path / "ens")
    header = json.loads(json_path.read_text())
    assert header == {"model": ens.model, "n": ens.n, "m": ens.m, "L": ens.L, "seed": 11,
                      "b_re": ens.b.real, "b_im": ens.b.imag}
    raw = np.frombuffer(bin_path.read_bytes(), dtype="<f8")
    assert raw[0] == ens.rows[0, 0].real and raw[1] == ens.rows[0, 0].imag
    assert raw[2] == ens.rows[0, 1].real
    back = E.load_ensemble(tmp_path / "ens")
    assert np.array_equal(back.rows, ens.rows)
    assert np.array_equal(back.offsets, ens.offsets)
    if kind == "cdp":
        assert np.allclose(back.patterns, ens.patterns)
        x = E.random_signal(4, 0)
        assert np.allclose(back.forward(x, "fft"), ens.forward(x, "fft"))


def test_serialization_rejects_varying_offsets(tmp_path):
    ens = E.from_rows(np.eye(2), b=[1.0, 2.0])
    with pytest.raises(InvalidArgumentError):
        E.save_ensemble(ens, tmp_path / "ens")
