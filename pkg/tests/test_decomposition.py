import json

import numpy as np
import pytest

from conftest import make_skew
from prefgame import (
    Decomposition,
    DomainError,
    PreferenceScoreMatrix,
    decompose,
    transitivity_fraction,
)
from prefgame.decomposition import transitive_matrix

RPS = PreferenceScoreMatrix([[0, 1, -1], [-1, 0, 1], [1, -1, 0]])


def ranking_game(r):
    return PreferenceScoreMatrix(transitive_matrix(np.asarray(r, dtype=float)))


class TestDecompose:
    def test_pure_cycle(self):
        dec = decompose(RPS)
        assert np.allclose(dec.f, 0.0, atol=1e-15)
        assert np.allclose(dec.T, 0.0, atol=1e-15)
        assert np.array_equal(dec.C, RPS.s)

    def test_pure_ranking(self):
        dec = decompose(ranking_game([2.0, 1.0, 0.0]))
        assert np.allclose(dec.f, [1.0, 0.0, -1.0], atol=1e-12)
        assert np.allclose(dec.C, 0.0, atol=1e-12)

    def test_construct_then_decompose_roundtrip(self):
        mixed = PreferenceScoreMatrix(transitive_matrix([2.0, 1.0, 0.0]) + RPS.s)
        dec = decompose(mixed)
        assert np.allclose(dec.f, [1.0, 0.0, -1.0], atol=1e-12)
        assert np.allclose(dec.C, RPS.s, atol=1e-12)

    def test_uniqueness_on_random_games(self, rng):
        for _ in range(100):
            n = int(rng.integers(3, 31))
            r = rng.normal(size=n)
            r -= r.mean()
            cyclic = decompose(make_skew(rng, n)).C
            dec = decompose(PreferenceScoreMatrix(transitive_matrix(r) + cyclic))
            assert np.max(np.abs(dec.f - r)) <= 1e-9
            assert np.max(np.abs(dec.C - cyclic)) <= 1e-9

    def test_invariants_on_random_games(self, rng):
        for _ in range(50):
            m = make_skew(rng, int(rng.integers(3, 25)), scale=2.0)
            dec = decompose(m)
            assert abs(float(dec.f.mean())) <= 1e-12
            assert np.max(np.abs(dec.T + dec.C - m.s)) <= 1e-10
            assert np.max(np.abs(dec.C.sum(axis=1))) <= 1e-10
            assert np.max(np.abs(dec.C + dec.C.T)) <= 1e-10
            # Frobenius orthogonality of the two parts
            assert abs(float(np.sum(dec.T * dec.C))) <= 1e-8

    def test_idempotence(self, rng):
        m = make_skew(rng, 8)
        dec = decompose(m)
        again_t = decompose(PreferenceScoreMatrix(dec.T))
        assert np.max(np.abs(again_t.C)) <= 1e-10
        again_c = decompose(PreferenceScoreMatrix(dec.C))
        assert np.max(np.abs(again_c.f)) <= 1e-10


class TestTransitivityFraction:
    def test_pure_cases(self):
        assert transitivity_fraction(RPS) == 0.0
        assert transitivity_fraction(ranking_game([2.0, 1.0, 0.0])) == pytest.approx(1.0, abs=1e-12)

    def test_equal_energy_blend(self):
        # scale the cycle so both parts carry the same Frobenius energy
        t_part = transitive_matrix([1.0, 0.0, -1.0])
        c_part = RPS.s * np.sqrt(np.sum(t_part**2) / np.sum(RPS.s**2))
        assert np.sum(t_part**2) == pytest.approx(np.sum(c_part**2), rel=1e-12)
        frac = transitivity_fraction(PreferenceScoreMatrix(t_part + c_part))
        assert frac == pytest.approx(0.5, abs=1e-12)

    def test_zero_game_rejected(self):
        with pytest.raises(DomainError):
            transitivity_fraction(PreferenceScoreMatrix(np.zeros((3, 3))))


class TestSerialization:
    def test_json_roundtrip(self, rng):
        dec = decompose(make_skew(rng, 9))
        payload = json.loads(json.dumps(dec.to_dict()))
        again = Decomposition.from_dict(payload)
        assert np.allclose(again.f, dec.f, atol=0)
        assert np.allclose(again.C, dec.C, atol=0)
        assert np.max(np.abs(again.T - dec.T)) == 0.0

    def test_validation(self):
        with pytest.raises(DomainError):
            Decomposition([0.0, 0.0], [[0.0, 1.0], [1.0, 0.0]])  # not skew
        with pytest.raises(DomainError):
            Decomposition([0.0, 0.0, 0.0], RPS.s + 0.1)  # row sums off
