"""Tabular self-play solver for finite preference games.

The solver iterates a multiplicative-weights update against a score
oracle: with ``P_t(i) = sum_j pi_t[j] * sigma(M_t[i][j])`` the probability
that response ``i`` beats a draw from the current policy,

    pi_{t+1}(i)  proportional to  pi_t(i) * exp(eta * (P_t(i) - 1/2)).

(The centring by 1/2 does not change the update and makes the all-ties
state an exact fixed point.)  The oracle is either a fixed matrix or a
time-varying blend of a game's transitive and cyclic parts,

    s_t = (1 + lam / t^p) * T + (1 - lam / t^p) * C,      p = 0.5 default,

which starts ranking-heavy and converges to ``s_inf = T + C`` with
worst-case score error ``eps_t <= |lam| * (max|T| + max|C|) / t^p``.

Convergence is measured by the duality gap of the running mixture policy
``mean(pi_1..pi_t)`` against ``s_inf``:

    gap = 2 * (max_i P(i beats mixture) - 1/2),

zero exactly at an equilibrium (the best response to any mixture is pure,
so the maximum over mixed opponents is attained at a pure response).  The
mixture is the object with an O(1/sqrt(T)) guarantee; the last iterate is
reported alongside but nothing is asserted about it.

A run is sequential by nature; independent runs can execute concurrently.
Everything is deterministic given the configured seeds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import linprog

from .core import PreferenceScoreMatrix, TabularPolicy
from .decomposition import Decomposition, transitive_matrix
from .errors import DomainError, OracleError, PrefGameError, ShapeError, StateError

#: Tolerance for the structural checks on schedule components.
FORM_TOL = 1e-9


@dataclass(frozen=True)
class Exact:
    """Evaluate win probabilities by exact expectation (the default)."""


@dataclass(frozen=True)
class MonteCarlo:
    """Estimate win probabilities from ``k`` opponent samples."""

    k: int
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("sample count must be at least 1")


Estimation = Exact | MonteCarlo


class OracleSchedule:
    """Score oracle for a run: static, or the lam/t^p transitive/cyclic blend.

    Built through :meth:`static` or :meth:`blend`.  The blend requires the
    transitive part in potential-difference form and the cyclic part skew
    with zero row sums, so the limit ``T + C`` is a genuine split; all
    entries are bounded by the stated ``rho``.
    """

    def __init__(self, kind, matrix=None, t_part=None, c_part=None, lam=0.0, exponent=0.5):
        self.kind = kind
        self.matrix = matrix
        self.t_part = t_part
        self.c_part = c_part
        self.lam = float(lam)
        self.exponent = float(exponent)
        if kind == "static":
            self.rho = float(np.max(np.abs(matrix.s)))
            self._s_inf = matrix
        else:
            scale = float(np.max(np.abs(t_part))) + float(np.max(np.abs(c_part)))
            self.rho = (1.0 + abs(self.lam)) * scale
            self._s_inf = PreferenceScoreMatrix(t_part + c_part)

    @classmethod
    def static(cls, matrix: PreferenceScoreMatrix) -> "OracleSchedule":
        return cls("static", matrix=matrix)

    @classmethod
    def blend(cls, t_part, c_part, lam: float, exponent: float = 0.5) -> "OracleSchedule":
        t_part = np.asarray(t_part, dtype=float)
        c_part = np.asarray(c_part, dtype=float)
        if t_part.shape != c_part.shape or t_part.ndim != 2:
            raise ShapeError("transitive and cyclic parts must be square matrices of equal shape")
        if not (np.all(np.isfinite(t_part)) and np.all(np.isfinite(c_part))):
            raise DomainError("schedule components must be finite")
        f = t_part.mean(axis=1)
        if float(np.max(np.abs(t_part - transitive_matrix(f)))) > FORM_TOL:
            raise DomainError("transitive part is not of potential-difference form")
        if float(np.max(np.abs(c_part + c_part.T))) > FORM_TOL:
            raise DomainError("cyclic part must be skew-symmetric")
        if float(np.max(np.abs(c_part.sum(axis=1)))) > FORM_TOL:
            raise DomainError("cyclic part must have zero row sums")
        if not 0.0 < exponent < 1.0:
            raise DomainError("schedule exponent must lie in (0, 1)")
        if abs(lam) > 1.0:
            warnings.warn(
                f"|lam| = {abs(lam):g} > 1: a blend coefficient is negative for small t",
                stacklevel=2)
        return cls("blend", t_part=t_part.copy(), c_part=c_part.copy(),
                   lam=lam, exponent=exponent)

    @classmethod
    def from_decomposition(cls, dec: Decomposition, lam: float, exponent: float = 0.5) -> "OracleSchedule":
        return cls.blend(dec.T, dec.C, lam, exponent)

    # the blend is the schedule induced by the hybrid model's two heads
    hrc_schedule = blend

    def s_infinity(self) -> PreferenceScoreMatrix:
        """The limiting (true) score matrix."""
        return self._s_inf

    @property
    def n(self) -> int:
        return self._s_inf.n


def schedule_score(sched: OracleSchedule, t: int) -> PreferenceScoreMatrix:
    """Score matrix served at iteration ``t`` (1-based)."""
    if t < 1:
        raise DomainError("iteration index must be >= 1")
    if sched.kind == "static":
        return sched.matrix
    w = sched.lam / float(t) ** sched.exponent
    return PreferenceScoreMatrix((1.0 + w) * sched.t_part + (1.0 - w) * sched.c_part)


def _win_probs(matrix: PreferenceScoreMatrix, policy: TabularPolicy,
               estimation: Estimation) -> np.ndarray:
    probs = matrix.probabilities.p
    if isinstance(estimation, Exact):
        return probs @ policy.p
    rng = np.random.default_rng(estimation.seed)
    opponents = rng.choice(matrix.n, size=estimation.k, p=policy.p)
    return probs[:, opponents].mean(axis=1)


def sppo_step(policy: TabularPolicy, matrix: PreferenceScoreMatrix, eta: float,
              estimation: Estimation = Exact()) -> TabularPolicy:
    """One multiplicative-weights update of the policy against ``matrix``."""
    if policy.n != matrix.n:
        raise ShapeError(f"policy has {policy.n} responses, matrix has {matrix.n}")
    if not np.isfinite(eta) or eta <= 0.0:
        raise DomainError("learning rate must be positive")
    if not np.all(np.isfinite(policy.p)):
        raise StateError("policy state is degenerate (non-finite entries)")
    pwin = _win_probs(matrix, policy, estimation)
    factors = np.exp(eta * (pwin - 0.5))
    if np.all(factors == 1.0):
        return policy  # exact tie fixed point
    w = policy.p * factors
    total = float(w.sum())
    if not np.isfinite(total) or total <= 0.0:
        raise StateError("multiplicative update produced a degenerate weight vector")
    return TabularPolicy(w / total)


def duality_gap(matrix: PreferenceScoreMatrix, mixture: TabularPolicy) -> float:
    """``2 * (best pure-response win probability - 1/2)`` against the mixture.

    Non-negative (the policy's own average response wins with probability
    exactly 1/2), and zero exactly at an equilibrium.
    """
    if mixture.n != matrix.n:
        raise ShapeError(f"policy has {mixture.n} responses, matrix has {matrix.n}")
    best = float(np.max(matrix.probabilities.p @ mixture.p))
    return max(2.0 * (best - 0.5), 0.0)


@dataclass(frozen=True)
class SolverConfig:
    eta: float | str = "theory"        # "theory" = max|log pi_0| / sqrt(T)
    iterations: int = 1000
    estimation: Estimation = Exact()
    checkpoint_stride: int | str = "pow2"

    def __post_init__(self):
        if self.iterations < 1:
            raise DomainError("need at least one iteration")
        if isinstance(self.eta, str):
            if self.eta != "theory":
                raise DomainError(f"eta must be a positive number or 'theory', got {self.eta!r}")
        elif not np.isfinite(self.eta) or self.eta <= 0.0:
            raise DomainError("eta must be positive")
        if isinstance(self.checkpoint_stride, str):
            if self.checkpoint_stride != "pow2":
                raise DomainError("checkpoint stride must be a positive integer or 'pow2'")
        elif self.checkpoint_stride < 1:
            raise DomainError("checkpoint stride must be a positive integer or 'pow2'")


@dataclass(frozen=True)
class Checkpoint:
    t: int
    policy: TabularPolicy
    mixture: TabularPolicy
    gap: float          # duality gap of the mixture against s_inf
    gap_last: float     # duality gap of the current iterate (reported only)
    epsilon: float      # max |s_inf - s_t|
    epsilon_bound: float


@dataclass(frozen=True)
class TrajectoryReport:
    checkpoints: tuple
    eta: float
    iterations: int
    final_gap: float
    gap_sqrt_t: tuple  # (t, gap * sqrt(t)) per checkpoint

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "iterations": self.iterations,
            "checkpoints": [
                {
                    "t": cp.t,
                    "policy": [float(x) for x in cp.policy.p],
                    "mixture": [float(x) for x in cp.mixture.p],
                    "gap": cp.gap,
                    "gap_last": cp.gap_last,
                    "epsilon": cp.epsilon,
                    "epsilon_bound": cp.epsilon_bound,
                }
                for cp in self.checkpoints
            ],
            "summary": {
                "final_gap": self.final_gap,
                "gap_sqrt_t": [[t, v] for t, v in self.gap_sqrt_t],
            },
        }

    CSV_COLUMNS = ("t", "gap", "epsilon_t", "entropy")

    def csv_rows(self) -> list:
        """Rows for the flat trajectory CSV: t, mixture gap, eps_t, entropy of pi_t."""
        return [
            (cp.t, cp.gap, cp.epsilon, cp.policy.entropy())
            for cp in self.checkpoints
        ]


def _checkpoints(stride, total: int) -> set:
    if stride == "pow2":
        ticks = set()
        t = 1
        while t <= total:
            ticks.add(t)
            t *= 2
    else:
        ticks = set(range(stride, total + 1, stride))
    ticks.add(total)
    return ticks


def resolve_eta(eta, pi0: TabularPolicy, iterations: int) -> float:
    if eta == "theory":
        return float(np.max(np.abs(np.log(pi0.p)))) / float(np.sqrt(iterations))
    return float(eta)


def _epsilon_at(sched: OracleSchedule, s_inf: np.ndarray, t: int):
    if sched.kind == "static":
        return 0.0, 0.0
    s_t = schedule_score(sched, t).s
    eps = float(np.max(np.abs(s_inf - s_t)))
    scale = float(np.max(np.abs(sched.t_part))) + float(np.max(np.abs(sched.c_part)))
    return eps, abs(sched.lam) * scale / float(t) ** sched.exponent


def run(sched: OracleSchedule, config: SolverConfig, pi0: TabularPolicy) -> TrajectoryReport:
    """Iterate the self-play update under the schedule; deterministic given seeds."""
    if pi0.n != sched.n:
        raise ShapeError(f"initial policy has {pi0.n} responses, game has {sched.n}")
    if np.any(pi0.p <= 0.0):
        raise DomainError("initial policy must be strictly positive (fully supported)")
    total = config.iterations
    eta = resolve_eta(config.eta, pi0, total)
    ticks = _checkpoints(config.checkpoint_stride, total)
    s_inf = sched.s_infinity()

    pi = pi0
    psum = np.zeros(pi0.n)
    checkpoints = []
    for t in range(1, total + 1):
        m_t = schedule_score(sched, t)
        psum = psum + pi.p
        if t in ticks:
            mixture = TabularPolicy(psum / t)
            eps, bound = _epsilon_at(sched, s_inf.s, t)
            checkpoints.append(Checkpoint(
                t, pi, mixture,
                duality_gap(s_inf, mixture),
                duality_gap(s_inf, pi),
                eps, bound))
        estimation = config.estimation
        if isinstance(estimation, MonteCarlo):
            step_seed = int(np.random.SeedSequence([estimation.seed, t]).generate_state(1)[0])
            estimation = replace(estimation, seed=step_seed)
        pi = sppo_step(pi, m_t, eta, estimation)

    final_gap = checkpoints[-1].gap
    gap_sqrt_t = tuple((cp.t, cp.gap * float(np.sqrt(cp.t))) for cp in checkpoints)
    return TrajectoryReport(tuple(checkpoints), eta, total, final_gap, gap_sqrt_t)


@dataclass(frozen=True)
class EpsilonReport:
    """Exact per-iteration oracle error against the analytic decay bounds."""

    t: np.ndarray
    epsilon: np.ndarray
    bound: np.ndarray
    average: float
    average_bound: float


def epsilon_schedule_check(sched: OracleSchedule, total: int) -> EpsilonReport:
    """Verify ``eps_t`` decay for a blended schedule over ``t = 1..total``.

    Checks ``eps_t <= |lam| * (max|T| + max|C|) / t^p`` for every t and the
    average against ``|lam| * (max|T| + max|C|) / ((1 - p) * total^p)``
    (``2 |lam| C' / sqrt(total)`` at the default exponent).  A static
    schedule has ``eps_t == 0`` identically and is rejected here rather
    than trivially asserted against a decay bound.
    """
    if sched.kind == "static":
        raise DomainError("epsilon decay check applies to blended schedules only")
    if total < 1:
        raise DomainError("need at least one iteration")
    s_inf = sched.s_infinity().s
    ts = np.arange(1, total + 1)
    eps = np.empty(total)
    bound = np.empty(total)
    for i, t in enumerate(ts):
        eps[i], bound[i] = _epsilon_at(sched, s_inf, int(t))
    if np.any(eps > bound + 1e-12):
        raise PrefGameError("schedule error exceeded its analytic bound")
    scale = float(np.max(np.abs(sched.t_part))) + float(np.max(np.abs(sched.c_part)))
    p = sched.exponent
    average_bound = abs(sched.lam) * scale / ((1.0 - p) * float(total) ** p)
    return EpsilonReport(ts, eps, bound, float(eps.mean()), average_bound)


#: Desk-scale cap for the equilibrium oracle.
NASH_ORACLE_MAX_N = 50

#: Duality-gap tolerance the oracle must reach.
NASH_ORACLE_TOL = 1e-3


def nash_oracle(matrix: PreferenceScoreMatrix) -> TabularPolicy:
    """Independent equilibrium of the symmetric game with payoffs ``sigma(s) - 1/2``.

    Solved as a linear program (maximize the guaranteed payoff ``v`` over
    the simplex), which is exact up to solver tolerance and shares no code
    path with the iterative solver it validates.  Raises ``OracleError``
    with the best policy found if the duality-gap tolerance is not met.
    """
    n = matrix.n
    if n > NASH_ORACLE_MAX_N:
        raise DomainError(f"equilibrium oracle is desk-scale only (n <= {NASH_ORACLE_MAX_N})")
    payoff = matrix.probabilities.p - 0.5
    # variables: x_1..x_n, v; maximize v s.t. payoff^T x >= v, x in simplex
    c = np.zeros(n + 1)
    c[n] = -1.0
    a_ub = np.hstack([-payoff.T, np.ones((n, 1))])
    b_ub = np.zeros(n)
    a_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
    b_eq = np.array([1.0])
    bounds = [(0.0, None)] * n + [(None, None)]
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                  bounds=bounds, method="highs")
    if not res.success:
        raise OracleError(f"equilibrium solve failed: {res.message}")
    x = np.maximum(res.x[:n], 0.0)
    policy = TabularPolicy.from_weights(x)
    gap = duality_gap(matrix, policy)
    if gap > NASH_ORACLE_TOL:
        raise OracleError(
            f"oracle gap {gap:g} exceeds tolerance {NASH_ORACLE_TOL:g}", best_found=policy)
    return policy
