"""Unary-basis photonic option pricing: circuit simulation, amplitude
estimation, adversarial distribution loading, and a Monte Carlo baseline."""

from .market import (
    BsmParams,
    DegenerateRangeError,
    DiscreteDistribution,
    McResult,
    discretize,
    expected_payoff_discrete,
    lognormal_terminal_params,
    mc_price,
)
from .circuit import (
    CircuitUnitary,
    DegenerateStrikeWarning,
    LoaderParams,
    PayoffAngles,
    UnaryState,
    ancilla_one_prob,
    apply,
    build_loader,
    build_payoff,
    build_q,
    build_s_0,
    build_s_psi,
    fit_loader,
    initial_bin,
    initial_state,
    loader_layers,
    payoff_angles,
    perturb_angles,
    perturb_splits,
    sample_shots,
)
from .estimation import (
    AEResult,
    AESchedule,
    ConvergenceRow,
    DepthRecord,
    InconsistentRecordsError,
    PricingCircuit,
    binomial_ci,
    convergence_study,
    default_schedule,
    estimate_payoff,
    oracle_calls_for,
    recover_angle,
    run_depth,
)
from .gan import (
    CriticNet,
    GanHistory,
    GeneratorAnsatz,
    TrainConfig,
    angles_for_splits,
    critic_score,
    critic_update,
    evolve_generation,
    export_history_csv,
    generate_distribution,
    l2_norm,
    load_generator_params,
    make_critic,
    save_generator_params,
    train_gan,
)

__version__ = "0.1.0"
