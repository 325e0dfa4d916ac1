import numpy as np
import pytest

from oracles import d1_grid_max_min, dominant_cycle_d1_grid_cap
from prefgame import (
    DomainError,
    PlanarEmbedding,
    SignPattern,
    build_dominant_cycle_d2,
    d1_dominant_feasible,
    geometric_score,
    hard_cycle_infeasibility,
    pattern_capacity_search,
)
from prefgame.witnesses import (
    CapacitySearchConfig,
    dominant_cycle_pattern,
    rps_pattern,
    score_matrix,
    skew_operator,
)

TWO_PI = 2 * np.pi


def random_embedding(rng, n, d):
    return PlanarEmbedding(rng.uniform(0, 2, size=(n, d)),
                           rng.uniform(0, TWO_PI - 1e-9, size=(n, d)))


class TestGeometricScore:
    def test_self_score_zero(self, rng):
        e = random_embedding(rng, 5, 3)
        for i in range(5):
            assert geometric_score(e, i, i) == 0.0

    def test_quarter_turn(self):
        e = PlanarEmbedding([[1.0], [1.0]], [[0.0], [np.pi / 2]])
        assert geometric_score(e, 0, 1) == pytest.approx(1.0, abs=1e-12)

    def test_antisymmetry(self, rng):
        e = random_embedding(rng, 6, 2)
        for i in range(6):
            for j in range(6):
                assert geometric_score(e, i, j) == pytest.approx(-geometric_score(e, j, i), abs=1e-12)

    def test_matches_cartesian_bilinear_form(self, rng):
        for _ in range(1000):
            n, d = int(rng.integers(2, 6)), int(rng.integers(1, 4))
            e = random_embedding(rng, n, d)
            z = e.to_cartesian()
            r = skew_operator(d)
            i, j = rng.integers(0, n, size=2)
            assert geometric_score(e, int(i), int(j)) == pytest.approx(
                float(z[i] @ r @ z[j]), abs=1e-10)

    def test_score_matrix_consistent(self, rng):
        e = random_embedding(rng, 5, 2)
        s = score_matrix(e)
        for i in range(5):
            for j in range(5):
                assert s[i, j] == pytest.approx(geometric_score(e, i, j), abs=1e-12)


class TestDominantCycleConstruction:
    def test_n3_dominant_scores_exactly_one(self):
        e = build_dominant_cycle_d2(3)
        s = score_matrix(e)
        for i in range(3):
            assert s[3, i] == pytest.approx(1.0, abs=1e-9)
        assert s[0, 1] == pytest.approx(np.sin(TWO_PI / 3), abs=1e-12)

    def test_cycle_scores_follow_sine(self):
        for n in (3, 5, 7):
            e = build_dominant_cycle_d2(n)
            s = score_matrix(e)
            for i in range(n):
                for j in range(n):
                    assert s[i, j] == pytest.approx(np.sin(TWO_PI * (j - i) / n), abs=1e-12)

    def test_n4_antipodal_tie(self):
        s = score_matrix(build_dominant_cycle_d2(4))
        assert abs(s[0, 2]) <= 1e-12

    def test_n5_successor_scores(self):
        s = score_matrix(build_dominant_cycle_d2(5))
        for i in range(5):
            assert s[i, (i + 1) % 5] == pytest.approx(np.sin(TWO_PI / 5), abs=1e-12)

    def test_rejects_small_cycles(self):
        with pytest.raises(DomainError):
            build_dominant_cycle_d2(2)

    def test_odd_cycles_pass_full_orientation_pattern(self):
        for n in (3, 5, 9):
            e = build_dominant_cycle_d2(n)
            s = score_matrix(e)
            pairs = [(n, i) for i in range(n)]
            for i in range(n):
                for k in range(1, (n - 1) // 2 + 1):
                    pairs.append((i, (i + k) % n))
            pattern = SignPattern.from_pairs(n + 1, pairs)
            assert pattern.satisfied(s) == len(pairs)


class TestSemicircleFeasibility:
    def test_spread_cycle_infeasible(self):
        rep = d1_dominant_feasible([0.0, TWO_PI / 3, 2 * TWO_PI / 3])
        assert not rep.feasible
        assert rep.witness is None
        assert rep.margin == pytest.approx(-0.5, abs=1e-12)

    def test_tight_cluster_feasible(self):
        rep = d1_dominant_feasible([0.1, 0.2, 0.3])
        assert rep.feasible and rep.margin > 0
        grid_margin, _ = d1_grid_max_min([0.1, 0.2, 0.3])
        assert rep.margin == pytest.approx(grid_margin, abs=1e-6)
        # witness must actually dominate
        assert min(np.sin(np.array([0.1, 0.2, 0.3]) - rep.witness)) == pytest.approx(rep.margin, abs=1e-12)

    def test_single_angle(self):
        rep = d1_dominant_feasible([1.0])
        assert rep.feasible
        assert rep.witness == pytest.approx(np.mod(1.0 - np.pi / 2, TWO_PI), abs=1e-12)
        assert rep.margin == pytest.approx(1.0, abs=1e-12)

    def test_matches_grid_oracle_on_random_sets(self, rng):
        for _ in range(40):
            k = int(rng.integers(1, 8))
            angles = rng.uniform(0, TWO_PI, size=k)
            rep = d1_dominant_feasible(angles)
            grid_margin, _ = d1_grid_max_min(angles)
            assert rep.margin == pytest.approx(grid_margin, abs=1e-6)
            if abs(rep.margin) > 1e-4:  # away from the boundary the verdicts agree
                assert rep.feasible == (grid_margin > 0)

    def test_diameter_criterion(self, rng):
        # feasible iff the angular diameter (arc complement of the widest
        # gap) is below pi; diameter recomputed independently here
        for _ in range(40):
            k = int(rng.integers(2, 8))
            angles = np.mod(rng.uniform(0, TWO_PI, size=k), TWO_PI)
            theta = np.sort(angles)
            gaps = np.diff(np.concatenate([theta, [theta[0] + TWO_PI]]))
            diameter = TWO_PI - float(gaps.max())
            if abs(diameter - np.pi) <= 1e-3:
                continue
            rep = d1_dominant_feasible(angles)
            assert rep.feasible == (diameter < np.pi)


class TestHardCycle:
    def test_two_cycle_boundary(self):
        # antipodal pair: best achievable min is 0 (float pi leaves ~1e-16 slack)
        rep = hard_cycle_infeasibility(2, 1)
        assert abs(rep.max_min_score) <= 1e-15
        assert not rep.feasible

    def test_three_cycle_any_rank(self):
        rep = hard_cycle_infeasibility(3, 2)
        assert rep.max_min_score == pytest.approx(-0.5, abs=1e-9)
        assert not rep.feasible

    @pytest.mark.parametrize("n", [2, 3, 5, 10])
    @pytest.mark.parametrize("d", [1, 2, 5])
    def test_always_infeasible(self, n, d):
        rep = hard_cycle_infeasibility(n, d)
        assert rep.max_min_score <= 1e-9
        assert not rep.feasible

    def test_rejects_degenerate(self):
        with pytest.raises(DomainError):
            hard_cycle_infeasibility(1, 1)
        with pytest.raises(DomainError):
            hard_cycle_infeasibility(3, 0)


class TestSignPattern:
    def test_from_pairs_and_required(self):
        pat = rps_pattern()
        assert pat.n == 3
        assert set(pat.required()) == {(0, 1), (1, 2), (2, 0)}

    def test_antisymmetry_enforced(self):
        with pytest.raises(DomainError):
            SignPattern(np.array([[0, 1], [1, 0]]))

    def test_contradictory_pairs_rejected(self):
        with pytest.raises(DomainError):
            SignPattern.from_pairs(2, [(0, 1), (1, 0)])

    def test_dominant_cycle_pattern_shape(self):
        pat = dominant_cycle_pattern(3)
        assert pat.n == 4
        assert len(pat.required()) == 6

    def test_ties_count_as_violations(self):
        pat = rps_pattern()
        scores = np.zeros((3, 3))
        assert pat.satisfied(scores) == 0


class TestCapacitySearch:
    def test_rps_d1_fully_satisfiable(self):
        res = pattern_capacity_search(rps_pattern(), 1, CapacitySearchConfig(seed=0))
        assert res.best_accuracy == 1.0

    def test_dominant_cycle_d1_capped(self):
        res = pattern_capacity_search(dominant_cycle_pattern(3), 1, CapacitySearchConfig(seed=0))
        assert res.best_accuracy <= 5 / 6 + 1e-12
        assert res.best_accuracy == pytest.approx(5 / 6)

    def test_dominant_cycle_d2_fully_satisfiable(self):
        res = pattern_capacity_search(dominant_cycle_pattern(3), 2, CapacitySearchConfig(seed=0))
        assert res.best_accuracy == 1.0
        # returned embedding certifies the claim
        s = score_matrix(res.best_embedding)
        assert dominant_cycle_pattern(3).satisfied(s) == 6

    def test_deterministic(self):
        a = pattern_capacity_search(dominant_cycle_pattern(3), 1, CapacitySearchConfig(seed=7))
        b = pattern_capacity_search(dominant_cycle_pattern(3), 1, CapacitySearchConfig(seed=7))
        assert a.best_accuracy == b.best_accuracy
        assert np.array_equal(a.best_embedding.angles, b.best_embedding.angles)

    def test_grid_oracle_confirms_d1_cap(self):
        # exhaustive 1-degree sweep: no angle assignment satisfies all six signs
        assert dominant_cycle_d1_grid_cap(steps=360) == 5


class TestPlanarEmbedding:
    def test_validation(self):
        with pytest.raises(DomainError):
            PlanarEmbedding([[-1.0]], [[0.0]])
        with pytest.raises(DomainError):
            PlanarEmbedding([[1.0]], [[7.0]])

    def test_cartesian_roundtrip(self, rng):
        e = random_embedding(rng, 6, 2)
        back = PlanarEmbedding.from_cartesian(e.to_cartesian())
        assert np.allclose(back.magnitudes, e.magnitudes, atol=1e-12)
        # compare angles where the magnitude is meaningful
        mask = e.magnitudes > 1e-9
        diff = np.mod(back.angles - e.angles + np.pi, TWO_PI) - np.pi
        assert np.max(np.abs(diff[mask])) <= 1e-9
