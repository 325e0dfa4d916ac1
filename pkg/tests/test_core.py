import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_skew
from prefgame import (
    DomainError,
    PreferenceScoreMatrix,
    ProbabilityMatrix,
    ShapeError,
    TabularPolicy,
    policy_vs_policy,
    prob_to_score,
    score_to_prob,
    win_prob_vs_policy,
)

RPS = [[0, 1, -1], [-1, 0, 1], [1, -1, 0]]


class TestScoreProbConversions:
    def test_symmetry_point(self):
        assert score_to_prob(0.0) == 0.5

    def test_log3(self):
        assert score_to_prob(math.log(3)) == pytest.approx(0.75, abs=1e-12)
        assert score_to_prob(-math.log(3)) == pytest.approx(0.25, abs=1e-12)

    def test_prob_to_score_examples(self):
        assert prob_to_score(0.5) == 0.0
        assert prob_to_score(0.75) == pytest.approx(math.log(3), abs=1e-12)
        # near-boundary: direct evaluation is the oracle
        p = 0.9999999
        assert prob_to_score(p) == pytest.approx(math.log(p / (1 - p)), abs=1e-9)
        assert prob_to_score(p) == pytest.approx(16.118095650958319, abs=1e-6)

    def test_rejects_nonfinite_scores(self):
        for bad in (float("nan"), float("inf"), -float("inf")):
            with pytest.raises(DomainError):
                score_to_prob(bad)

    def test_rejects_hard_labels(self):
        for bad in (0.0, 1.0, -0.1, 1.1, float("nan")):
            with pytest.raises(DomainError):
                prob_to_score(bad)

    def test_output_stays_in_open_interval(self):
        for s in (-800.0, -50.0, 50.0, 800.0):
            p = score_to_prob(s)
            assert 0.0 < p < 1.0

    def test_roundtrip_grid(self):
        # Score-domain round trip.  Inside |s| <= 13.8 (probabilities in
        # [1e-6, 1 - 1e-6]) the identity holds to 1e-10; beyond that the
        # float64 representation of p near 1 only carries ~exp(|s|) * 2^-53
        # of score resolution, which is the binding limit on [-20, 20].
        s = np.linspace(-13.8, 13.8, 1000)
        back = prob_to_score(score_to_prob(s))
        assert np.max(np.abs(back - s)) <= 1e-10

        wide = np.linspace(-20.0, 20.0, 1000)
        back = prob_to_score(score_to_prob(wide))
        limit = 4.0 * np.exp(np.abs(wide)) * 2.0**-53 + 1e-12
        assert np.all(np.abs(back - wide) <= limit)

    def test_roundtrip_probability_domain(self):
        p = np.concatenate([np.array([1e-6, 1 - 1e-6]),
                            np.linspace(1e-6, 1 - 1e-6, 1000)])
        back = score_to_prob(prob_to_score(p))
        assert np.max(np.abs(back - p)) <= 1e-12

    @settings(max_examples=200, deadline=None)
    @given(a=st.floats(-60, 60), b=st.floats(-60, 60))
    def test_sigmoid_lipschitz_quarter(self, a, b):
        assert abs(score_to_prob(a) - score_to_prob(b)) <= abs(a - b) / 4 + 1e-15


class TestPreferenceScoreMatrix:
    def test_exact_skew_storage(self, rng):
        m = make_skew(rng, 7)
        assert np.all(m.s + m.s.T == 0.0)
        assert np.all(np.diag(m.s) == 0.0)

    def test_rejects_asymmetric(self):
        with pytest.raises(DomainError):
            PreferenceScoreMatrix([[0, 1], [1, 0]])

    def test_rejects_violating_diagonal(self):
        with pytest.raises(DomainError):
            PreferenceScoreMatrix([[1e-6, 1], [-1, 0]])

    def test_accepts_tiny_violation(self):
        PreferenceScoreMatrix([[0, 1 + 1e-13], [-1, 0]])

    def test_rejects_nonfinite(self):
        with pytest.raises(DomainError):
            PreferenceScoreMatrix([[0, np.inf], [-np.inf, 0]])

    def test_rejects_nonsquare(self):
        with pytest.raises(ShapeError):
            PreferenceScoreMatrix(np.zeros((2, 3)))

    def test_from_upper_row_major(self):
        m = PreferenceScoreMatrix.from_upper(3, [1.0, -1.0, 1.0])
        assert np.array_equal(m.s, np.array(RPS, dtype=float))

    def test_json_roundtrip(self, rng):
        m = make_skew(rng, 6)
        payload = json.loads(json.dumps(m.to_dict()))
        again = PreferenceScoreMatrix.from_dict(payload)
        assert np.array_equal(m.s, again.s)

    def test_immutable(self, rng):
        m = make_skew(rng, 4)
        with pytest.raises(ValueError):
            m.s[0, 1] = 2.0


class TestProbabilityMatrix:
    def test_complement_exactly_one(self, rng):
        for _ in range(50):
            m = make_skew(rng, int(rng.integers(2, 15)), scale=5.0)
            p = m.probabilities.p
            assert np.all(p + p.T == 1.0)
            assert np.all(np.diag(p) == 0.5)
            assert np.all((p > 0.0) & (p < 1.0))

    def test_validating_constructor(self):
        good = np.array([[0.5, 0.8], [0.2, 0.5]])
        ProbabilityMatrix(good)
        with pytest.raises(DomainError):
            ProbabilityMatrix(np.array([[0.5, 0.8], [0.3, 0.5]]))
        with pytest.raises(DomainError):
            ProbabilityMatrix(np.array([[0.5, 1.0], [0.0, 0.5]]))


class TestTabularPolicy:
    def test_constructors(self):
        u = TabularPolicy.uniform(4)
        assert u.p.sum() == pytest.approx(1.0, abs=1e-15)
        pm = TabularPolicy.point_mass(3, 1)
        assert pm.p[1] == 1.0
        w = TabularPolicy.from_weights([2.0, 2.0, 4.0])
        assert np.allclose(w.p, [0.25, 0.25, 0.5])

    def test_validation(self):
        with pytest.raises(DomainError):
            TabularPolicy([0.5, 0.6])
        with pytest.raises(DomainError):
            TabularPolicy([-0.1, 1.1])
        with pytest.raises(DomainError):
            TabularPolicy([np.nan, 1.0])
        with pytest.raises(DomainError):
            TabularPolicy.from_weights([0.0, 0.0])
        with pytest.raises(ShapeError):
            TabularPolicy.point_mass(3, 5)

    def test_entropy(self):
        assert TabularPolicy.uniform(3).entropy() == pytest.approx(math.log(3), abs=1e-12)
        assert TabularPolicy.point_mass(5, 2).entropy() == 0.0


class TestWinProbabilities:
    def test_rps_uniform_is_half(self):
        m = PreferenceScoreMatrix(RPS)
        for i in range(3):
            assert win_prob_vs_policy(m, i, TabularPolicy.uniform(3)) == pytest.approx(0.5, abs=1e-12)

    def test_point_mass_degenerates(self, rng):
        m = make_skew(rng, 5)
        for i in range(5):
            for j in range(5):
                expected = m.probabilities.p[i, j]
                assert win_prob_vs_policy(m, i, TabularPolicy.point_mass(5, j)) == expected

    def test_mixed_row_example(self):
        # row 0 scores (0, 2, 2) against the uniform opponent: (1/2 + 2 sigma(2)) / 3
        m = PreferenceScoreMatrix([[0, 2, 2], [-2, 0, 0], [-2, 0, 0]])
        expected = (0.5 + 2.0 / (1.0 + math.exp(-2.0))) / 3.0
        got = win_prob_vs_policy(m, 0, TabularPolicy.uniform(3))
        assert got == pytest.approx(expected, abs=1e-12)
        assert got == pytest.approx(0.7538647186519216, abs=1e-12)

    def test_shape_errors(self, rng):
        m = make_skew(rng, 4)
        with pytest.raises(ShapeError):
            win_prob_vs_policy(m, 0, TabularPolicy.uniform(5))
        with pytest.raises(ShapeError):
            win_prob_vs_policy(m, 7, TabularPolicy.uniform(4))


class TestPolicyVsPolicy:
    def test_self_play_tie_exact(self, rng):
        for _ in range(100):
            n = int(rng.integers(2, 12))
            m = make_skew(rng, n, scale=3.0)
            pi = TabularPolicy.from_weights(rng.random(n) + 1e-3)
            assert policy_vs_policy(m, pi, pi) == 0.5

    def test_point_masses(self, rng):
        m = make_skew(rng, 4)
        for i in range(4):
            for j in range(4):
                if i == j:
                    continue
                got = policy_vs_policy(m, TabularPolicy.point_mass(4, i), TabularPolicy.point_mass(4, j))
                assert got == pytest.approx(score_to_prob(m.s[i, j]), abs=1e-12)

    def test_uniform_vs_point_mass_on_rps(self):
        m = PreferenceScoreMatrix(RPS)
        for j in range(3):
            got = policy_vs_policy(m, TabularPolicy.uniform(3), TabularPolicy.point_mass(3, j))
            assert got == pytest.approx(0.5, abs=1e-12)

    def test_complement(self, rng):
        for _ in range(50):
            n = int(rng.integers(2, 10))
            m = make_skew(rng, n, scale=2.0)
            a = TabularPolicy.from_weights(rng.random(n) + 1e-3)
            b = TabularPolicy.from_weights(rng.random(n) + 1e-3)
            assert policy_vs_policy(m, a, b) + policy_vs_policy(m, b, a) == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self, rng):
        m = make_skew(rng, 4)
        with pytest.raises(ShapeError):
            policy_vs_policy(m, TabularPolicy.uniform(3), TabularPolicy.uniform(4))
