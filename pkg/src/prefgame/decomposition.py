"""Exact split of a finite preference game into ranking and rotation parts.

For a skew-symmetric score matrix ``M`` over ``n`` responses, define the
potential of response ``i`` as its mean score against the uniform opponent,

    f[i] = (1/n) * sum_j M[i][j],

recentred to mean zero (skew-symmetry already forces the grand mean to
vanish, recentring just removes the floating-point residue).  Then

    T[i][j] = f[i] - f[j]        (transitive part: a consistent ranking)
    C       = M - T              (cyclic part: zero row sums, skew)

and ``M = T + C``.  The split is unique: any other potential producing a
zero-row-sum residual differs from ``f`` by a constant, which cancels in
``T``.  The two parts are orthogonal under the Frobenius inner product.

The uniform opponent is the only exchangeable choice for a bare finite
response set; weighted variants are out of scope.
"""

from __future__ import annotations

import numpy as np

from .core import PreferenceScoreMatrix
from .errors import DataFormatError, DomainError, ShapeError

#: Tolerances for the reconstruction / zero-row-sum invariants.
RECONSTRUCTION_TOL = 1e-10


def transitive_matrix(f) -> np.ndarray:
    """Rank-2 matrix of potential differences, ``T[i][j] = f[i] - f[j]``."""
    f = np.asarray(f, dtype=float)
    if f.ndim != 1:
        raise ShapeError(f"potential must be a 1-d vector, got shape {f.shape}")
    return np.subtract.outer(f, f)


class Decomposition:
    """Potential vector plus transitive and cyclic score matrices."""

    def __init__(self, f, cyclic):
        f = np.array(f, dtype=float)
        cyclic = np.array(cyclic, dtype=float)
        if f.ndim != 1:
            raise ShapeError("potential must be a 1-d vector")
        n = f.size
        if cyclic.shape != (n, n):
            raise ShapeError(f"cyclic part must be {n}x{n}, got {cyclic.shape}")
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(cyclic))):
            raise DomainError("decomposition entries must be finite")
        if float(np.max(np.abs(cyclic + cyclic.T))) > RECONSTRUCTION_TOL:
            raise DomainError("cyclic part must be skew-symmetric")
        if float(np.max(np.abs(cyclic.sum(axis=1)))) > RECONSTRUCTION_TOL:
            raise DomainError("cyclic part must have zero row sums")
        t = transitive_matrix(f)
        for arr in (f, t, cyclic):
            arr.flags.writeable = False
        self._f, self._t, self._c = f, t, cyclic

    @property
    def f(self) -> np.ndarray:
        return self._f

    @property
    def T(self) -> np.ndarray:
        return self._t

    @property
    def C(self) -> np.ndarray:
        return self._c

    @property
    def n(self) -> int:
        return self._f.size

    def matrix(self) -> PreferenceScoreMatrix:
        """Reassemble ``T + C`` as a validated score matrix."""
        return PreferenceScoreMatrix(self._t + self._c)

    def to_dict(self) -> dict:
        iu = np.triu_indices(self.n, 1)
        return {
            "f": [float(x) for x in self._f],
            "cyclic_upper": [float(x) for x in self._c[iu]],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "Decomposition":
        try:
            f = np.asarray(payload["f"], dtype=float)
            upper = np.asarray(payload["cyclic_upper"], dtype=float)
        except (KeyError, TypeError) as exc:
            raise DataFormatError("decomposition payload needs keys 'f' and 'cyclic_upper'") from exc
        n = f.size
        want = n * (n - 1) // 2
        if upper.size != want:
            raise DataFormatError(f"expected {want} cyclic upper entries for n={n}, got {upper.size}")
        c = np.zeros((n, n))
        c[np.triu_indices(n, 1)] = upper
        return cls(f, c - c.T)

    def __repr__(self):
        return f"Decomposition(n={self.n})"


def decompose(matrix: PreferenceScoreMatrix) -> Decomposition:
    """Split a game into its transitive and cyclic components."""
    m = matrix.s
    f = m.mean(axis=1)
    f = f - f.mean()
    c = m - transitive_matrix(f)
    return Decomposition(f, c)


def transitivity_fraction(matrix: PreferenceScoreMatrix) -> float:
    """Share of the game's Frobenius energy carried by the transitive part.

    1.0 for purely transitive games, 0.0 for purely cyclic ones.  The parts
    are Frobenius-orthogonal, so the two energies sum to the total.
    """
    if not np.any(matrix.s):
        raise DomainError("transitivity fraction is undefined for the zero game")
    dec = decompose(matrix)
    et = float(np.sum(dec.T**2))
    ec = float(np.sum(dec.C**2))
    return et / (et + ec)
