"""Core types and conversions for finite preference games.

Conventions used throughout the package:

- A pairwise preference is carried as a *score*: the log-odds of the first
  argument beating the second, ``s = log(p / (1 - p))``.  Positive score
  means the first (row) response is preferred.
- A finite game over ``n`` responses is an ``n x n`` skew-symmetric matrix
  of scores.  Scores are the canonical representation; win probabilities
  are derived views through the logistic function.
- Skew-symmetry is structural, not approximate: constructors keep the
  strict upper triangle and mirror it with exact floating-point negation,
  so ``s[j, i] == -s[i, j]`` bitwise and the diagonal is exactly zero.
  The mirrored probability view stores ``p[j, i] = 1 - p[i, j]``, which
  makes ``p[i, j] + p[j, i]`` round to exactly 1.0.

All types here are immutable after construction (arrays are marked
read-only) and safe to share across concurrent readers; every operation
is a pure function.
"""

from __future__ import annotations

from functools import cached_property

import numpy as np
from scipy.special import expit

from .errors import DataFormatError, DomainError, ShapeError

#: Absolute tolerance for accepting a full matrix as skew-symmetric.
SKEW_TOL = 1e-12

# Probabilities are saturated one ulp away from {0, 1} so that log-odds and
# complements stay finite and representable.
_P_HI = 1.0 - 2.0**-53
_P_LO = 2.0**-53

# Free-form feature vectors are plain float arrays; the aliases name the two
# roles they play in the model modules.
FeatureVector = np.ndarray
ContextFeatures = np.ndarray


def as_features(h, name: str = "features") -> np.ndarray:
    """Validate and return a finite 1-d float vector."""
    h = np.asarray(h, dtype=float)
    if h.ndim != 1:
        raise ShapeError(f"{name} must be a 1-d vector, got shape {h.shape}")
    if not np.all(np.isfinite(h)):
        raise DomainError(f"{name} must be finite")
    return h


def score_to_prob(s):
    """Win probability ``sigma(s)`` of a preference score.

    Accepts scalars or arrays.  Results are clamped into the open interval
    ``(0, 1)`` (one ulp from the boundaries) so that the score of the
    returned probability is always finite.
    """
    s = np.asarray(s, dtype=float)
    if not np.all(np.isfinite(s)):
        raise DomainError("preference score must be finite")
    p = np.clip(expit(s), _P_LO, _P_HI)
    return float(p) if p.ndim == 0 else p


def prob_to_score(p):
    """Log-odds ``log(p / (1 - p))`` of a win probability.

    Inputs are *not* clamped: a hard 0/1 label has no finite score and is
    rejected, which surfaces degenerate labels instead of hiding them.
    """
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise DomainError("probability must be finite")
    if np.any(p <= 0.0) or np.any(p >= 1.0):
        raise DomainError("probability must lie strictly in (0, 1); hard labels have no finite score")
    s = np.log(p) - np.log1p(-p)
    return float(s) if s.ndim == 0 else s


def _mirror_skew(upper_part: np.ndarray) -> np.ndarray:
    """Full skew matrix from a matrix whose strict upper triangle is kept."""
    u = np.triu(upper_part, 1)
    full = u - u.T
    full.flags.writeable = False
    return full


class PreferenceScoreMatrix:
    """``n x n`` skew-symmetric matrix of pairwise preference scores.

    ``s[i, j]`` is the log-odds that response ``i`` beats response ``j``.
    """

    def __init__(self, s):
        s = np.asarray(s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {s.shape}")
        if s.shape[0] < 1:
            raise ShapeError("matrix must have at least one response")
        if not np.all(np.isfinite(s)):
            raise DomainError("scores must be finite")
        dev = float(np.max(np.abs(s + s.T)))
        if dev > SKEW_TOL:
            raise DomainError(f"matrix is not skew-symmetric: max |s + s^T| = {dev:g} > {SKEW_TOL:g}")
        self._s = _mirror_skew(s)

    @property
    def s(self) -> np.ndarray:
        return self._s

    @property
    def n(self) -> int:
        return self._s.shape[0]

    @classmethod
    def from_upper(cls, n: int, upper) -> "PreferenceScoreMatrix":
        """Build from the row-major strict upper triangle (``n*(n-1)/2`` scores)."""
        upper = np.asarray(upper, dtype=float)
        want = n * (n - 1) // 2
        if upper.ndim != 1 or upper.size != want:
            raise ShapeError(f"expected {want} upper-triangle entries for n={n}, got {upper.size}")
        m = np.zeros((n, n))
        m[np.triu_indices(n, 1)] = upper
        return cls(m - m.T)

    def upper(self) -> np.ndarray:
        """Row-major strict upper triangle."""
        return self._s[np.triu_indices(self.n, 1)]

    @cached_property
    def probabilities(self) -> "ProbabilityMatrix":
        """Derived win-probability view (cached; both objects are immutable)."""
        return ProbabilityMatrix.from_scores(self)

    def to_dict(self) -> dict:
        return {"n": self.n, "upper": [float(x) for x in self.upper()]}

    @classmethod
    def from_dict(cls, payload: dict) -> "PreferenceScoreMatrix":
        try:
            n = int(payload["n"])
            upper = payload["upper"]
        except (KeyError, TypeError) as exc:
            raise DataFormatError("score matrix payload needs keys 'n' and 'upper'") from exc
        return cls.from_upper(n, upper)

    def __repr__(self):
        return f"PreferenceScoreMatrix(n={self.n})"


class ProbabilityMatrix:
    """``n x n`` matrix of pairwise win probabilities, complement-consistent.

    Stored so that ``p[i, j] + p[j, i]`` is exactly 1.0 and ``p[i, i]`` is
    exactly 0.5 (one triangle is kept, the other mirrored).
    """

    def __init__(self, p):
        p = np.asarray(p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ShapeError(f"expected a square matrix, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DomainError("probabilities must be finite")
        if np.any(p <= 0.0) or np.any(p >= 1.0):
            raise DomainError("probabilities must lie strictly in (0, 1)")
        if float(np.max(np.abs(p + p.T - 1.0))) > SKEW_TOL:
            raise DomainError(f"p[i][j] + p[j][i] must equal 1 within {SKEW_TOL:g}")
        self._p = self._canonicalize(p)

    @staticmethod
    def _canonicalize(p: np.ndarray) -> np.ndarray:
        n = p.shape[0]
        out = np.array(p, dtype=float)
        iu, ju = np.triu_indices(n, 1)
        out[ju, iu] = 1.0 - out[iu, ju]
        np.fill_diagonal(out, 0.5)
        out.flags.writeable = False
        return out

    @property
    def p(self) -> np.ndarray:
        return self._p

    @property
    def n(self) -> int:
        return self._p.shape[0]

    @classmethod
    def from_scores(cls, scores: PreferenceScoreMatrix) -> "ProbabilityMatrix":
        p = np.clip(expit(scores.s), _P_LO, _P_HI)
        obj = cls.__new__(cls)
        obj._p = cls._canonicalize(p)
        return obj

    def __repr__(self):
        return f"ProbabilityMatrix(n={self.n})"


class TabularPolicy:
    """Probability vector over a finite response set (simplex-constrained)."""

    #: Tolerance on |sum(p) - 1| at construction.
    SUM_TOL = 1e-12

    def __init__(self, p):
        p = np.array(p, dtype=float)
        if p.ndim != 1 or p.size < 1:
            raise ShapeError(f"policy must be a non-empty 1-d vector, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise DomainError("policy entries must be finite")
        if np.any(p < 0.0):
            raise DomainError("policy entries must be non-negative")
        if abs(float(p.sum()) - 1.0) > self.SUM_TOL:
            raise DomainError(f"policy must sum to 1 within {self.SUM_TOL:g}, got {float(p.sum())!r}")
        p.flags.writeable = False
        self._p = p

    @property
    def p(self) -> np.ndarray:
        return self._p

    @property
    def n(self) -> int:
        return self._p.size

    @classmethod
    def uniform(cls, n: int) -> "TabularPolicy":
        if n < 1:
            raise DomainError("need at least one response")
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def point_mass(cls, n: int, i: int) -> "TabularPolicy":
        if not 0 <= i < n:
            raise ShapeError(f"index {i} out of range for n={n}")
        p = np.zeros(n)
        p[i] = 1.0
        return cls(p)

    @classmethod
    def from_weights(cls, w) -> "TabularPolicy":
        """Normalize non-negative weights onto the simplex."""
        w = np.asarray(w, dtype=float)
        if not np.all(np.isfinite(w)) or np.any(w < 0.0):
            raise DomainError("weights must be finite and non-negative")
        total = float(w.sum())
        if total <= 0.0:
            raise DomainError("weights must not all be zero")
        return cls(w / total)

    def entropy(self) -> float:
        """Shannon entropy in nats (0 * log 0 treated as 0)."""
        nz = self._p[self._p > 0.0]
        return float(-np.sum(nz * np.log(nz)))

    def __repr__(self):
        return f"TabularPolicy({np.array2string(self._p, precision=4)})"


def _check_policy_dims(matrix: PreferenceScoreMatrix, policy: TabularPolicy):
    if policy.n != matrix.n:
        raise ShapeError(f"policy has {policy.n} responses, matrix has {matrix.n}")


def win_prob_vs_policy(matrix: PreferenceScoreMatrix, i: int, policy: TabularPolicy) -> float:
    """Probability that pure response ``i`` beats a draw from ``policy``."""
    _check_policy_dims(matrix, policy)
    if not 0 <= i < matrix.n:
        raise ShapeError(f"response index {i} out of range for n={matrix.n}")
    return float(matrix.probabilities.p[i] @ policy.p)


def policy_vs_policy(matrix: PreferenceScoreMatrix, first: TabularPolicy, second: TabularPolicy) -> float:
    """Probability that a draw from ``first`` beats a draw from ``second``.

    Evaluated through the identity ``sigma(s) = (1 + tanh(s / 2)) / 2``:
    the quadratic form of the (exactly skew) ``tanh`` matrix is summed over
    unordered pairs, so the self-play value is exactly 0.5 and swapping the
    arguments negates the correction term bitwise.
    """
    _check_policy_dims(matrix, first)
    _check_policy_dims(matrix, second)
    a, b = first.p, second.p
    t = np.tanh(matrix.s / 2.0)
    iu, ju = np.triu_indices(matrix.n, 1)
    terms = t[iu, ju] * (a[iu] * b[ju] - a[ju] * b[iu])
    return 0.5 + 0.5 * float(terms.sum())
