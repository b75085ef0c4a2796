"""marketforge: exact finite-market engine for information-flow expansion.

Layers, bottom up:

``arith``      two arithmetic backends (exact rationals, tolerant floats)
``linalg``     elimination-based linear algebra over either backend
``space``      sample spaces, filtrations, processes, enlargement pairs
``calculus``   compensators, brackets, integrals, stochastic exponentials
``mrp``        representation drivers and integrand recovery
``enlarge``    expanded-flow drift, the gauge (N, phi, u), its checks
``jumpkernel`` per-(time, atom) jump sites and the restricted-inverse solver
``viability``  structure solves, deflators, and market verdicts
``scenario``   JSON ingestion for scenarios and sites
``report``     deterministic machine reports and human rendering
``selftest``   built-in verification battery
``cli``        the ``marketforge`` command
"""

from .arith import EXACT, FLOAT, Arithmetic
from .calculus import (
    bracket,
    compensator,
    doob_decompose,
    integrate,
    is_martingale,
    pred_bracket,
    stoch_exp,
)
from .enlarge import DriftGauge, check_support_condition, drift, solve_phi
from .jumpkernel import (
    AccessibleSite,
    CoercivityFailure,
    InaccessibleSite,
    KernelError,
    PsdSolve,
    SiteChild,
    check_coercivity,
    check_jump_bound,
    energy_bound,
    restricted_inverse,
    tilt_floor,
    verify_density,
    xi_accessible,
    xi_inaccessible,
)
from .mrp import Driver, check_mrp, represent, synthesize_driver
from .scenario import BuiltScenario, ScenarioError, load_scenario, load_site
from .space import (
    EnlargementPair,
    Filtration,
    Partition,
    Process,
    RandomTime,
    SampleSpace,
    build_initial_enlargement,
    build_progressive_enlargement,
    natural_filtration,
)
from .viability import (
    ASSUMPTION_VIOLATED,
    NON_VIABLE,
    VIABLE,
    FailureWitness,
    Market,
    NonViable,
    Strategy,
    StructureSolution,
    Verdict,
    solve_structure_F,
    solve_structure_G,
    verify_deflator,
)

__version__ = "0.1.0"

__all__ = [
    "ASSUMPTION_VIOLATED",
    "AccessibleSite",
    "Arithmetic",
    "BuiltScenario",
    "CoercivityFailure",
    "DriftGauge",
    "Driver",
    "EXACT",
    "EnlargementPair",
    "FLOAT",
    "FailureWitness",
    "Filtration",
    "InaccessibleSite",
    "KernelError",
    "Market",
    "NON_VIABLE",
    "NonViable",
    "Partition",
    "Process",
    "PsdSolve",
    "RandomTime",
    "SampleSpace",
    "ScenarioError",
    "SiteChild",
    "Strategy",
    "StructureSolution",
    "VIABLE",
    "Verdict",
    "bracket",
    "build_initial_enlargement",
    "build_progressive_enlargement",
    "check_coercivity",
    "check_jump_bound",
    "check_mrp",
    "check_support_condition",
    "compensator",
    "doob_decompose",
    "drift",
    "energy_bound",
    "integrate",
    "is_martingale",
    "load_scenario",
    "load_site",
    "natural_filtration",
    "pred_bracket",
    "represent",
    "restricted_inverse",
    "solve_phi",
    "solve_structure_F",
    "solve_structure_G",
    "stoch_exp",
    "synthesize_driver",
    "tilt_floor",
    "verify_deflator",
    "verify_density",
    "xi_accessible",
    "xi_inaccessible",
]
