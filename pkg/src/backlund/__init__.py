"""Backlund transformations, kinks and solitons, and orbital-stability experiments.

Modules
-------
grid         uniform grids, lattice windows, norms and high-order quadrature
sine_gordon  kinks, the Backlund map and its linearization, leapfrog evolution
toda         solitons, the lattice Backlund map, symplectic evolution
dichotomy    first-order linear ODEs and recurrences with dichotomic coefficients
stability    perturbation, modulation fitting and stability experiments
cli          command-line front end (``backlund`` / ``python -m backlund``)

The hot loops live in a compiled extension; ``kernels.BACKEND`` reports
whether it or the pure-Python fallback is in use.
"""

from . import kernels
from .dichotomy import (
    CoefficientProfile,
    adjoint_solution,
    case1_constant,
    ode_residual,
    pairing,
    recurrence_residual,
    solve_case1_continuous,
    solve_case1_discrete,
    solve_case2_continuous,
    solve_case2_discrete,
)
from .errors import *  # noqa: F401,F403
from .grid import Field, Grid1D, LatticeWindow, Seq, diff_x, h1_norm, l2_norm, l2_seq, sup_norm
from .rng import SplitMix64
from .sine_gordon import (
    KinkParams,
    SGState,
    bt_forward,
    bt_residual,
    sg_alpha,
    sg_bt_inverse,
    sg_distance,
    sg_energy,
    sg_evolve,
    sg_kernel_element,
    sg_kink,
    sg_linearized_uv,
    sg_nondegeneracy,
    sg_step,
    sg_zero,
)
from .stability import (
    ExperimentConfig,
    FitOptions,
    PerturbationSpec,
    StabilityReport,
    conjugation_residual_series,
    fit_modulation_sg,
    fit_modulation_toda,
    make_perturbation,
    run_stability_experiment,
)
from .toda import (
    SolitonParams,
    TodaState,
    toda_alpha,
    toda_bt_forward,
    toda_bt_inverse,
    toda_bt_residual,
    toda_distance,
    toda_energy,
    toda_evolve,
    toda_multisoliton,
    toda_phase,
    toda_soliton,
    toda_step,
    toda_vacuum,
)

BACKEND = kernels.BACKEND
__version__ = "0.1.0"
