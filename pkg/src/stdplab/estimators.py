"""Scikit-learn style estimators wrapping the rules and circuit models.

Each estimator predicts the fractional weight change of stimulation
protocols and can fit its free parameters to measured changes by
minimizing the sem-normalized mean square error:

    >>> ds = bundled_dataset("visual_cortex")
    >>> est = TripletStdp(variant="minimal-visual-cortex", seed=1)
    >>> est.fit(ds)                                    # doctest: +SKIP
    >>> est.predict(ds.protocols)                      # doctest: +SKIP

``X`` is a sequence of protocol specifications (or a Dataset, in which
case ``y``/``sem`` are taken from it). Estimators are clonable and
grid-searchable: constructor arguments are hyperparameters, fitted
state lives in trailing-underscore attributes (``params_``, ``nmse_``,
``result_``).
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .datasets import Dataset
from .fitting import (FitParameter, FitProblem, default_free_parameters,
                      evaluate_model, fit, model_param_names, nmse)
from .protocols import (PairingProtocol, QuadrupletProtocol, TripletPostPrePost,
                        TripletPrePostPre)
from .spikes import InteractionScheme, as_scheme

__all__ = ["PairStdp", "TripletStdp", "CircuitStdp"]

_PROTOCOL_TYPES = (PairingProtocol, TripletPrePostPre, TripletPostPrePost,
                   QuadrupletProtocol)


def _check_protocols(X):
    """Validate X into a tuple of protocol specs."""
    if isinstance(X, Dataset):
        return X.protocols
    protocols = tuple(X)
    for i, p in enumerate(protocols):
        if not isinstance(p, _PROTOCOL_TYPES):
            raise TypeError(
                f"X[{i}] is {type(p).__name__}; expected a protocol spec "
                f"({', '.join(t.__name__ for t in _PROTOCOL_TYPES)})")
    return protocols


def _check_targets(X, y, sem):
    """Resolve (protocols, y, sem) from the fit inputs."""
    if isinstance(X, Dataset):
        if y is not None:
            raise ValueError("y must be None when X is a Dataset (it carries its own targets)")
        return X
    protocols = _check_protocols(X)
    if y is None:
        raise ValueError("y (measured weight changes) is required when X is not a Dataset")
    y = np.asarray(y, dtype=float)
    if y.shape != (len(protocols),):
        raise ValueError(f"y has shape {y.shape}, expected ({len(protocols)},)")
    if sem is None:
        sem = np.ones_like(y)
    sem = np.asarray(sem, dtype=float)
    if sem.shape != y.shape or np.any(sem <= 0.0):
        raise ValueError("sem must match y in shape and be strictly positive")
    from .datasets import DataPoint
    points = tuple(DataPoint(protocol=p, dw_exp=float(yi), sem=float(si))
                   for p, yi, si in zip(protocols, y, sem))
    return Dataset(name="adhoc", points=points)


class _StdpEstimatorBase(BaseEstimator):
    """Shared predict/fit/score plumbing; subclasses define the model name."""

    def _model_name(self) -> str:
        raise NotImplementedError

    def _value_params(self) -> dict[str, float]:
        """Current parameter values, from init args (or fit results)."""
        names = model_param_names(self._model_name())
        fitted = getattr(self, "params_", None)
        if fitted is not None:
            return dict(fitted)
        return {name: float(getattr(self, name)) for name in names}

    def _interaction(self) -> InteractionScheme:
        return as_scheme(getattr(self, "interaction", "nearest"))

    def _free_parameters(self) -> tuple[FitParameter, ...]:
        model = self._model_name()
        defaults = default_free_parameters(model)
        optimize = getattr(self, "optimize", None)
        if optimize is None:
            return defaults
        by_name = {p.name: p for p in defaults}
        out = []
        for name in optimize:
            if name not in by_name:
                raise ValueError(
                    f"{name!r} cannot be optimized for model {model!r}; "
                    f"allowed: {sorted(by_name)}")
            out.append(by_name[name])
        return tuple(out)

    def predict(self, X) -> np.ndarray:
        """Fractional weight change per protocol, at the current parameters."""
        protocols = _check_protocols(X)
        from .datasets import DataPoint
        points = tuple(DataPoint(protocol=p, dw_exp=0.0, sem=1.0) for p in protocols)
        problem = FitProblem(model=self._model_name(), dataset=Dataset("predict", points),
                             free=self._free_parameters(),
                             fixed=self._fixed_for_eval(),
                             interaction=self._interaction())
        return evaluate_model(problem, self._value_params())

    def _fixed_for_eval(self) -> dict[str, float]:
        params = self._value_params()
        free = {p.name for p in self._free_parameters()}
        return {k: v for k, v in params.items() if k not in free}

    def fit(self, X, y=None, sem=None):
        """Fit the free parameters to measured weight changes."""
        dataset = _check_targets(X, y, sem)
        problem = FitProblem(model=self._model_name(), dataset=dataset,
                             free=self._free_parameters(),
                             fixed=self._fixed_for_eval(),
                             interaction=self._interaction())
        result = fit(problem, budget=self.budget, seed=self.seed,
                     n_starts=self.n_starts)
        self.result_ = result
        self.params_ = dict(result.best_params)
        self.nmse_ = result.nmse
        self.n_evaluations_ = result.evaluations
        return self

    def score(self, X, y=None, sem=None) -> float:
        """Negative NMSE (higher is better, sklearn convention)."""
        dataset = _check_targets(X, y, sem)
        problem = FitProblem(model=self._model_name(), dataset=dataset,
                             free=self._free_parameters(),
                             fixed=self._fixed_for_eval(),
                             interaction=self._interaction())
        return -nmse(evaluate_model(problem, self._value_params()), dataset)


class PairStdp(_StdpEstimatorBase):
    """Pair-rule estimator: exponential learning window per spike pair."""

    def __init__(self, a_plus=0.005, a_minus=0.005, tau_plus=0.0168,
                 tau_minus=0.0337, interaction="nearest", optimize=None,
                 n_starts=32, budget=20_000, seed=0):
        self.a_plus = a_plus
        self.a_minus = a_minus
        self.tau_plus = tau_plus
        self.tau_minus = tau_minus
        self.interaction = interaction
        self.optimize = optimize
        self.n_starts = n_starts
        self.budget = budget
        self.seed = seed

    def _model_name(self) -> str:
        return "ideal-pair"


class TripletStdp(_StdpEstimatorBase):
    """Triplet-rule estimator (full rule or one of the minimal variants).

    ``variant`` is "full", "minimal-visual-cortex" (pair potentiation and
    triplet depression off) or "minimal-hippocampal" (triplet depression
    off); the corresponding amplitudes are pinned to zero regardless of
    their init values.
    """

    _VARIANTS = {"full": "ideal-triplet-full",
                 "minimal-visual-cortex": "ideal-triplet-minimal-visual-cortex",
                 "minimal-hippocampal": "ideal-triplet-minimal-hippocampal"}

    def __init__(self, variant="full", a2_plus=0.005, a2_minus=0.005,
                 a3_plus=0.005, a3_minus=0.0, tau_plus=0.0168, tau_minus=0.0337,
                 tau_x=0.101, tau_y=0.125, interaction="nearest", optimize=None,
                 n_starts=32, budget=20_000, seed=0):
        self.variant = variant
        self.a2_plus = a2_plus
        self.a2_minus = a2_minus
        self.a3_plus = a3_plus
        self.a3_minus = a3_minus
        self.tau_plus = tau_plus
        self.tau_minus = tau_minus
        self.tau_x = tau_x
        self.tau_y = tau_y
        self.interaction = interaction
        self.optimize = optimize
        self.n_starts = n_starts
        self.budget = budget
        self.seed = seed

    def _model_name(self) -> str:
        try:
            return self._VARIANTS[self.variant]
        except KeyError:
            raise ValueError(f"unknown variant {self.variant!r}; "
                             f"expected one of {sorted(self._VARIANTS)}") from None

    def _value_params(self) -> dict[str, float]:
        params = super()._value_params()
        if self.variant == "minimal-visual-cortex":
            params["a2_plus"] = 0.0
            params["a3_minus"] = 0.0
        elif self.variant == "minimal-hippocampal":
            params["a3_minus"] = 0.0
        return params


class CircuitStdp(_StdpEstimatorBase):
    """Behavioral-circuit estimator; parameters are the bias currents (A)."""

    _TOPOLOGIES = {"pair": "circuit-pair",
                   "triplet-full": "circuit-triplet-full",
                   "triplet-minimal-visual-cortex": "circuit-triplet-minimal-visual-cortex",
                   "triplet-minimal-hippocampal": "circuit-triplet-minimal-hippocampal"}

    def __init__(self, topology="pair", i_pot1=150e-9, i_dep1=150e-9,
                 i_pot2=0.0, i_dep2=0.0, i_tp1=24e-12, i_td1=18e-12,
                 i_tp2=0.0, i_td2=0.0, optimize=None, n_starts=32,
                 budget=20_000, seed=0):
        self.topology = topology
        self.i_pot1 = i_pot1
        self.i_dep1 = i_dep1
        self.i_pot2 = i_pot2
        self.i_dep2 = i_dep2
        self.i_tp1 = i_tp1
        self.i_td1 = i_td1
        self.i_tp2 = i_tp2
        self.i_td2 = i_td2
        self.optimize = optimize
        self.n_starts = n_starts
        self.budget = budget
        self.seed = seed

    def _model_name(self) -> str:
        try:
            return self._TOPOLOGIES[self.topology]
        except KeyError:
            raise ValueError(f"unknown topology {self.topology!r}; "
                             f"expected one of {sorted(self._TOPOLOGIES)}") from None
