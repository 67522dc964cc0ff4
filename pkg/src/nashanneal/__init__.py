"""Nash equilibria of bimatrix games by simulated annealing.

The objective being annealed is the max-form QUBO
f = max(Mq) + max(N'p) - p'(M+N)q, whose zeros are exactly the game's
equilibria, pure and mixed alike. Alongside the solver live a behavioral
simulator of the crossbar/WTA hardware that evaluates that objective, a
slack-penalty QUBO baseline for comparison, and an exact enumeration oracle
for ground truth.
"""

from .annealer import (
    BatchStats,
    ExactBackend,
    RunResult,
    Schedule,
    anneal,
    anneal_s_qubo,
    metropolis,
    run_many,
    two_phase_evaluate,
)
from .cim import CimBackend, CrossbarConfig, ProgrammedCrossbar, WtaTree, modeled_time, phase1, phase2, program, wta_max
from .errors import (
    BackendError,
    CapacityError,
    DimensionError,
    EncodingError,
    InputError,
    LatticeError,
    SizeError,
    SolverError,
)
from .game import (
    AffineRecord,
    BimatrixGame,
    MixedStrategy,
    PureOrMixed,
    StrategyProfile,
    classify,
    epsilon_ne_gap,
    is_epsilon_ne,
    normalize_payoffs,
    payoff,
)
from .lattice import (
    QuantizedProfile,
    QuantizedStrategy,
    dequantize,
    dequantize_profile,
    neighbor,
    quantize,
    random_profile,
)
from .oracle import CoverageReport, NeSolutionSet, coverage, enumerate_all, enumerate_pure
from .qubo import (
    FixedPointFormat,
    SQuboAssignment,
    SQuboObjective,
    alpha,
    beta,
    max_qubo,
    max_qubo_counts,
    max_qubo_decomposed,
    minimize_s_qubo,
    s_qubo,
    scaled_objective,
    scaled_objective_batch,
)

__version__ = "0.1.0"
