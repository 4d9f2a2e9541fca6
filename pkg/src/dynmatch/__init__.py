"""Online weighted matching with deadlines: deferred-acceptance algorithms,
baseline policies, an offline oracle and a benchmark harness."""

__version__ = "0.1.0"

from .algorithms import get_algorithm, run_algorithm
from .auction import AuctionState, DualLedger
from .baselines import run_batching, run_greedy, run_mdda, run_patient, run_reopt
from .dda import ConstrainedBipartiteInstance, expected_value_exact, run_dda, run_sdda
from .exceptions import *  # noqa: F401,F403
from .generators import GeneratorSpec, generate
from .io import read_instance, write_instance
from .market import (
    Coins,
    DepartureModel,
    DynamicInstance,
    Event,
    Matching,
    RunResult,
    build_instance,
    event_stream,
    resolve_deadlines,
    validate_matching,
)
from .oracle import OptResult, competitive_ratio, offline_opt, verify_certificate
from .pdda import (
    decompose_two_matching,
    run_pdda,
    run_pdda_known_departures,
    run_pdda_unknown_departures,
)
