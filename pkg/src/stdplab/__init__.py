"""Event-driven STDP lab: ideal rules, behavioral circuits, dataset fitting."""

from .spikes import InteractionScheme, SpikeTrain, as_spike_train
from .rules import (PairParams, TraceState, TripletParams, StdpRunResult,
                    WeightEvent, pair_delta_w, run_pair_stdp, run_triplet_stdp)
from .protocols import (PairingProtocol, ProtocolError, ProtocolSpec,
                        QuadrupletProtocol, TripletPostPrePost,
                        TripletPrePostPre, build_trains)
from .circuit import (CircuitParams, CircuitRun, CircuitState, CircuitTopology,
                      calibrate_time_constant, fit_window_lobe, simulate_circuit,
                      stdp_window, write_trajectory_csv)
from .datasets import (DataPoint, Dataset, DatasetError, bundled_dataset,
                       bundled_param_file, load_dataset, load_params,
                       write_dataset, write_params)
from .fitting import (FitError, FitParameter, FitProblem, FitResult,
                      evaluate_model, fit, nmse)
from .montecarlo import (MismatchSpec, MismatchNmseResult, MismatchWindowResult,
                         run_mismatch_nmse, run_mismatch_window)
from .estimators import CircuitStdp, PairStdp, TripletStdp

__version__ = "0.1.0"

__all__ = [
    "InteractionScheme", "SpikeTrain", "as_spike_train",
    "PairParams", "TripletParams", "TraceState", "StdpRunResult", "WeightEvent",
    "pair_delta_w", "run_pair_stdp", "run_triplet_stdp",
    "PairingProtocol", "TripletPrePostPre", "TripletPostPrePost",
    "QuadrupletProtocol", "ProtocolSpec", "ProtocolError", "build_trains",
    "CircuitParams", "CircuitState", "CircuitTopology", "CircuitRun",
    "simulate_circuit", "stdp_window", "calibrate_time_constant",
    "fit_window_lobe", "write_trajectory_csv",
    "DataPoint", "Dataset", "DatasetError", "load_dataset", "write_dataset",
    "bundled_dataset", "bundled_param_file", "load_params", "write_params",
    "FitParameter", "FitProblem", "FitResult", "FitError",
    "nmse", "evaluate_model", "fit",
    "MismatchSpec", "MismatchWindowResult", "MismatchNmseResult",
    "run_mismatch_window", "run_mismatch_nmse",
    "PairStdp", "TripletStdp", "CircuitStdp",
    "__version__",
]
