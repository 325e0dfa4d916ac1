"""What low-rank skew-symmetric bilinear scores can and cannot represent.

Embeddings live in ``d`` planar subspaces: item ``i`` has magnitude
``L[i, l] >= 0`` and angle ``phi[i, l]`` in subspace ``l``, and the pairwise
score is

    s(i, j) = sum_l L[i,l] * L[j,l] * sin(phi[j,l] - phi[i,l]),

which equals the bilinear form ``z_i^T R z_j`` of the interleaved Cartesian
coordinates ``z = (L cos phi, L sin phi, ...)`` with ``R`` the fixed
block-diagonal of 2x2 rotations ``[[0, 1], [-1, 0]]``.

Constructions and checks:

- a cycle of any size plus an item that strictly beats every cycle member
  is representable with two subspaces (``build_dominant_cycle_d2``);
- with one subspace it is representable iff the cycle's angles fit in an
  open semicircle (``d1_dominant_feasible``);
- the "hard" cycle whose subspace embeddings are identical and aligned
  defeats every candidate dominant item at every ``d``: the dominance
  score collapses to one sinusoid of the cycle angle, whose mean over the
  circle is zero (``hard_cycle_infeasibility``).

Strict preferences are certified numerically: "strictly positive" means
``score > STRICT_TOL``.  Grid searches use ``ANGLE_GRID`` points over
``[0, 2*pi)`` with one local refinement pass, so reported margins are
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import DomainError, ShapeError

TWO_PI = 2.0 * np.pi

#: A required strict preference counts as satisfied when score > STRICT_TOL.
STRICT_TOL = 1e-9

#: Points in the coarse angle grid over [0, 2*pi).
ANGLE_GRID = 3600


def skew_operator(d: int) -> np.ndarray:
    """Block-diagonal ``2d x 2d`` operator of planar rotations [[0, 1], [-1, 0]].

    Any real skew-symmetric operator reduces to this form up to basis and
    per-block scales, which learnable projections and gates absorb.
    """
    if d < 1:
        raise DomainError("need at least one planar subspace")
    r = np.zeros((2 * d, 2 * d))
    for l in range(d):
        r[2 * l, 2 * l + 1] = 1.0
        r[2 * l + 1, 2 * l] = -1.0
    return r


@dataclass(frozen=True)
class PlanarEmbedding:
    """Per item, per subspace: magnitude and angle of a planar vector."""

    magnitudes: np.ndarray  # (n, d), >= 0
    angles: np.ndarray      # (n, d), in [0, 2*pi)

    def __post_init__(self):
        mags = np.asarray(self.magnitudes, dtype=float)
        angs = np.asarray(self.angles, dtype=float)
        if mags.ndim != 2 or mags.shape != angs.shape:
            raise ShapeError("magnitudes and angles must share an (n, d) shape")
        if not (np.all(np.isfinite(mags)) and np.all(np.isfinite(angs))):
            raise DomainError("embedding entries must be finite")
        if np.any(mags < 0.0):
            raise DomainError("magnitudes must be non-negative")
        if np.any(angs < 0.0) or np.any(angs >= TWO_PI):
            raise DomainError("angles must lie in [0, 2*pi)")
        mags = mags.copy()
        angs = angs.copy()
        mags.flags.writeable = False
        angs.flags.writeable = False
        object.__setattr__(self, "magnitudes", mags)
        object.__setattr__(self, "angles", angs)

    @property
    def n(self) -> int:
        return self.magnitudes.shape[0]

    @property
    def d(self) -> int:
        return self.magnitudes.shape[1]

    def to_cartesian(self) -> np.ndarray:
        """Interleaved coordinates ``(L cos phi, L sin phi)`` per subspace, shape (n, 2d)."""
        z = np.empty((self.n, 2 * self.d))
        z[:, 0::2] = self.magnitudes * np.cos(self.angles)
        z[:, 1::2] = self.magnitudes * np.sin(self.angles)
        return z

    @classmethod
    def from_cartesian(cls, z) -> "PlanarEmbedding":
        z = np.asarray(z, dtype=float)
        if z.ndim != 2 or z.shape[1] % 2 != 0:
            raise ShapeError(f"expected shape (n, 2d), got {z.shape}")
        x, y = z[:, 0::2], z[:, 1::2]
        return cls(np.hypot(x, y), np.mod(np.arctan2(y, x), TWO_PI))


def geometric_score(emb: PlanarEmbedding, i: int, j: int) -> float:
    """Score of item ``i`` over item ``j``; antisymmetric, zero for i == j."""
    n = emb.n
    if not (0 <= i < n and 0 <= j < n):
        raise ShapeError(f"indices ({i}, {j}) out of range for n={n}")
    li, lj = emb.magnitudes[i], emb.magnitudes[j]
    return float(np.sum(li * lj * np.sin(emb.angles[j] - emb.angles[i])))


def score_matrix(emb: PlanarEmbedding) -> np.ndarray:
    """All-pairs score matrix of an embedding (skew-symmetric up to rounding)."""
    x = emb.magnitudes * np.cos(emb.angles)
    y = emb.magnitudes * np.sin(emb.angles)
    return x @ y.T - y @ x.T


def build_dominant_cycle_d2(n: int) -> PlanarEmbedding:
    """Cycle of ``n`` items plus a dominant item, in two subspaces.

    Items ``0..n-1`` sit on the unit circle of subspace 1 at angles
    ``2*pi*i/n`` (so successive members beat each other by ``sin(2*pi/n)``)
    and share the angle-0 unit vector of subspace 2.  The dominant item
    (index ``n``) vanishes in subspace 1 and sits at angle ``-pi/2`` in
    subspace 2, scoring exactly ``sin(pi/2) = 1`` against every cycle
    member.  For even ``n`` antipodal cycle pairs tie (score 0): a required
    strict sign on such a pair counts as violated.
    """
    if n < 3:
        raise DomainError("a cycle needs at least 3 items")
    mags = np.ones((n + 1, 2))
    angs = np.zeros((n + 1, 2))
    angs[:n, 0] = TWO_PI * np.arange(n) / n
    mags[n, 0] = 0.0
    angs[n, 1] = np.mod(-np.pi / 2.0, TWO_PI)
    return PlanarEmbedding(mags, angs)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of the one-subspace dominance check."""

    feasible: bool
    witness: float | None  # dominant angle achieving the margin, when feasible
    margin: float          # max over dominant angles of min_i sin(theta_i - delta)


def d1_dominant_feasible(angles) -> FeasibilityReport:
    """Can a single-subspace item strictly beat all items at the given angles?

    Feasible iff the angles fit in an open semicircle.  With the points
    spanning a circular arc of diameter ``D``, centring the dominant item
    opposite the arc gives the exact optimum ``margin = cos(D / 2)``; the
    witness angle is the arc midpoint minus ``pi/2``.
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    if angles.size < 1:
        raise DomainError("need at least one angle")
    if not np.all(np.isfinite(angles)):
        raise DomainError("angles must be finite")
    theta = np.sort(np.mod(angles, TWO_PI))
    if theta.size == 1:
        witness = float(np.mod(theta[0] - np.pi / 2.0, TWO_PI))
        return FeasibilityReport(True, witness, 1.0)
    gaps = np.diff(np.concatenate([theta, [theta[0] + TWO_PI]]))
    k = int(np.argmax(gaps))
    diameter = TWO_PI - float(gaps[k])
    alpha = float(theta[(k + 1) % theta.size])  # arc start, just past the widest gap
    margin = float(np.cos(diameter / 2.0))
    feasible = margin > STRICT_TOL
    witness = float(np.mod(alpha + diameter / 2.0 - np.pi / 2.0, TWO_PI)) if feasible else None
    return FeasibilityReport(feasible, witness, margin)


@dataclass(frozen=True)
class HardCycleReport:
    """Outcome of the aligned-cycle dominance search."""

    n: int
    d: int
    max_min_score: float
    feasible: bool
    best_offset: float  # dominant phase achieving max_min_score


def hard_cycle_infeasibility(n: int, d: int, grid: int = ANGLE_GRID) -> HardCycleReport:
    """Best possible dominance margin against the aligned cycle; <= 0 always.

    The cycle places item ``i`` at angle ``2*pi*i/n`` identically in every
    subspace.  Any candidate dominant item's score against member ``i``
    collapses, by linearity across subspaces, to ``A * sin(theta_i + delta)``
    for some amplitude ``A >= 0`` and phase ``delta``; with amplitude
    normalized away the search is a one-dimensional maximin over ``delta``,
    scanned on the angle grid with one refinement pass.
    """
    if n < 2:
        raise DomainError("hard cycle needs at least 2 members")
    if d < 1:
        raise DomainError("need at least one subspace")
    theta = TWO_PI * np.arange(n) / n

    def min_score(deltas: np.ndarray) -> np.ndarray:
        return np.sin(theta[None, :] + deltas[:, None]).min(axis=1)

    step = TWO_PI / grid
    deltas = np.arange(grid) * step
    values = min_score(deltas)
    k = int(np.argmax(values))
    best_delta, best_value = float(deltas[k]), float(values[k])

    fine = np.linspace(best_delta - step, best_delta + step, 2 * grid + 1)
    fine_values = min_score(fine)
    kf = int(np.argmax(fine_values))
    if fine_values[kf] > best_value:
        best_delta, best_value = float(np.mod(fine[kf], TWO_PI)), float(fine_values[kf])

    return HardCycleReport(n, d, best_value, best_value > STRICT_TOL, best_delta)


class SignPattern:
    """Antisymmetric ``{+1, -1, 0}`` pattern of required strict preferences."""

    def __init__(self, signs):
        signs = np.asarray(signs)
        if signs.ndim != 2 or signs.shape[0] != signs.shape[1]:
            raise ShapeError(f"expected a square sign matrix, got {signs.shape}")
        if not np.all(np.isin(signs, (-1, 0, 1))):
            raise DomainError("sign entries must be -1, 0, or +1")
        signs = signs.astype(np.int8)
        if np.any(signs != -signs.T):
            raise DomainError("sign pattern must be antisymmetric")
        signs.flags.writeable = False
        self._signs = signs

    @property
    def signs(self) -> np.ndarray:
        return self._signs

    @property
    def n(self) -> int:
        return self._signs.shape[0]

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "SignPattern":
        """Build from (winner, loser) index pairs."""
        signs = np.zeros((n, n), dtype=np.int8)
        for w, l in pairs:
            if not (0 <= w < n and 0 <= l < n) or w == l:
                raise DomainError(f"invalid preference pair ({w}, {l}) for n={n}")
            if signs[w, l] == -1:
                raise DomainError(f"contradictory signs requested for pair ({w}, {l})")
            signs[w, l] = 1
            signs[l, w] = -1
        return cls(signs)

    def required(self) -> list[tuple[int, int]]:
        """Ordered (winner, loser) pairs, one per constraint."""
        return [(int(w), int(l)) for w, l in zip(*np.nonzero(self._signs == 1))]

    def satisfied(self, scores: np.ndarray, tol: float = STRICT_TOL) -> int:
        """Number of required strict preferences met by a score matrix."""
        pairs = self.required()
        return sum(1 for w, l in pairs if scores[w, l] > tol)

    def fraction_satisfied(self, scores: np.ndarray, tol: float = STRICT_TOL) -> float:
        pairs = self.required()
        if not pairs:
            raise DomainError("pattern has no required preferences")
        return self.satisfied(scores, tol) / len(pairs)

    def __repr__(self):
        return f"SignPattern(n={self.n}, required={len(self.required())})"


def rps_pattern() -> SignPattern:
    """The 3-cycle: 0 beats 1 beats 2 beats 0."""
    return SignPattern.from_pairs(3, [(0, 1), (1, 2), (2, 0)])


def dominant_cycle_pattern(n: int) -> SignPattern:
    """Successor cycle over items 0..n-1 plus item ``n`` beating every member."""
    if n < 3:
        raise DomainError("a cycle needs at least 3 items")
    pairs = [(i, (i + 1) % n) for i in range(n)]
    pairs += [(n, i) for i in range(n)]
    return SignPattern.from_pairs(n + 1, pairs)


@dataclass(frozen=True)
class CapacitySearchConfig:
    restarts: int = 8
    steps: int = 600
    learning_rate: float = 0.2
    temperature: float = 0.1
    init_scale: float = 0.5
    seed: int = 0


@dataclass(frozen=True)
class CapacityResult:
    best_accuracy: float
    best_embedding: PlanarEmbedding
    satisfied: int
    total: int


def pattern_capacity_search(
    pattern: SignPattern,
    d: int,
    config: CapacitySearchConfig = CapacitySearchConfig(),
) -> CapacityResult:
    """Search embeddings maximizing the satisfied strict signs of a pattern.

    Multi-restart projected gradient ascent on the smooth surrogate
    ``sum log sigma(sign * score / temperature)`` with each planar vector
    projected into the unit ball (interior points allowed, so subspaces can
    be switched off).  Deterministic: restart ``r`` draws from the seed
    sequence ``(seed, r)``.  Reports the best fraction of satisfied signs
    seen anywhere along any restart's trajectory.
    """
    if d < 1:
        raise DomainError("need at least one subspace")
    required = pattern.required()
    if not required:
        raise DomainError("pattern has no required preferences")
    n = pattern.n
    # dObj/ds[i, j] accumulates here; antisymmetrized once below.
    w_idx = np.array([w for w, _ in required])
    l_idx = np.array([l for _, l in required])

    def evaluate(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, int]:
        s = x @ y.T - y @ x.T
        return s, sum(1 for w, l in required if s[w, l] > STRICT_TOL)

    best_count = -1
    best_z = None
    for restart in range(config.restarts):
        rng = np.random.default_rng(np.random.SeedSequence([config.seed, restart]))
        x = rng.normal(scale=config.init_scale, size=(n, d))
        y = rng.normal(scale=config.init_scale, size=(n, d))
        for _ in range(config.steps):
            s = x @ y.T - y @ x.T
            margins = s[w_idx, l_idx] / config.temperature
            # d/ds of sum log sigma(s/temp), scattered onto required pairs
            weights = np.zeros((n, n))
            np.add.at(weights, (w_idx, l_idx), (1.0 - expit(margins)) / config.temperature)
            v = weights - weights.T
            gx, gy = v @ y, -(v @ x)
            x += config.learning_rate * gx
            y += config.learning_rate * gy
            norms = np.hypot(x, y)
            over = norms > 1.0
            if np.any(over):
                x[over] /= norms[over]
                y[over] /= norms[over]
            _, count = evaluate(x, y)
            if count > best_count:
                best_count = count
                best_z = (x.copy(), y.copy())

    x, y = best_z
    z = np.empty((n, 2 * d))
    z[:, 0::2] = x
    z[:, 1::2] = y
    emb = PlanarEmbedding.from_cartesian(z)
    return CapacityResult(best_count / len(required), emb, best_count, len(required))
