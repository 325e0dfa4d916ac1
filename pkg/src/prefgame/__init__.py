"""Skew-symmetric preference games at desk scale.

Subpackages by concern:

- ``core``          score/probability conversions, game matrices, policies
- ``decomposition`` exact transitive/cyclic split of a finite game
- ``models``        trainable pairwise preference models (bt, gpm, hrc)
- ``witnesses``     what low-rank skew bilinear scores can represent
- ``synthdata``     cyclic and dominant+cycle synthetic datasets
- ``selfplay``      multiplicative-weights solver with duality-gap tracking
- ``cli``           the ``prefgame`` command-line front end
"""

from .core import (
    ContextFeatures,
    FeatureVector,
    PreferenceScoreMatrix,
    ProbabilityMatrix,
    TabularPolicy,
    policy_vs_policy,
    prob_to_score,
    score_to_prob,
    win_prob_vs_policy,
)
from .decomposition import Decomposition, decompose, transitivity_fraction
from .errors import (
    DataFormatError,
    DomainError,
    GenerationError,
    OracleError,
    PrefGameError,
    ShapeError,
    StateError,
    TrainingError,
)
from .models import (
    BtModel,
    EmbeddingTable,
    FitConfig,
    FitResult,
    GpmModel,
    HrcModel,
    PairDataset,
    PairRecord,
    bt_score,
    eval_accuracy,
    fit,
    gpm_score,
    hrc_score,
    pair_loss,
    pair_loss_grad,
)
from .selfplay import (
    Exact,
    MonteCarlo,
    OracleSchedule,
    SolverConfig,
    TrajectoryReport,
    duality_gap,
    epsilon_schedule_check,
    nash_oracle,
    run,
    schedule_score,
    sppo_step,
)
from .synthdata import gen_cyclic, gen_dominant_cycle, to_pair_dataset
from .witnesses import (
    PlanarEmbedding,
    SignPattern,
    build_dominant_cycle_d2,
    d1_dominant_feasible,
    geometric_score,
    hard_cycle_infeasibility,
    pattern_capacity_search,
)

__version__ = "0.1.0"
