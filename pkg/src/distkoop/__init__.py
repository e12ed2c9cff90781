"""distkoop: Koopman analysis of random dynamical systems via distribution observables."""

__version__ = "0.1.0"

from .measures import (
    EmpiricalMeasure,
    MeasureSampler,
    dirac,
    evolve_measure,
    expectation,
    pushforward,
    sub_arc_measures,
    variance_of,
)
from .rds import (
    RdsModel,
    TrajectoryEnsemble,
    generate_pairs,
    generate_trajectory,
    rotation_model,
    sde_model,
    simulate_ensemble,
    step,
)
from .observables import (
    DistObservable,
    ObservableBank,
    StateObservable,
    evaluate_bank,
    gaussian_bank,
    indicator_bank,
    monomial_bank,
    pq_bank,
    variance_coeff,
)
from .dmd import (
    GalerkinOracle,
    KoopmanMatrix,
    SnapshotMatrices,
    SpectralDecomposition,
    build_galerkin_oracle,
    fit_dko,
    fit_sko,
    hilbert_schmidt_residual,
    match_eigenvalues,
    predict,
    spectrum,
)
