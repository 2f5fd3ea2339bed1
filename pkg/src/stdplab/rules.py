"""Ideal STDP rules: pair-based and triplet-based (full + minimal variants).

Weight changes are dimensionless fractions and accumulate without bounds;
saturation is a property of the hardware model, not of the rules.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .spikes import InteractionScheme, SpikeTrain, as_scheme, as_spike_train

__all__ = [
    "PairParams",
    "TripletParams",
    "TraceState",
    "WeightEvent",
    "StdpRunResult",
    "pair_delta_w",
    "run_pair_stdp",
    "run_triplet_stdp",
]


def _check_positive(name: str, value: float) -> None:
    if not (value > 0.0) or not math.isfinite(value):
        raise ValueError(f"{name} must be a finite positive number, got {value}")


def _check_non_negative(name: str, value: float) -> None:
    if not (value >= 0.0) or not math.isfinite(value):
        raise ValueError(f"{name} must be finite and >= 0, got {value}")


@dataclass(frozen=True)
class PairParams:
    """Amplitudes and time constants of the pair rule.

    ``a_plus``/``a_minus`` are the maximal potentiation/depression per
    event; ``tau_plus``/``tau_minus`` are the learning-window time
    constants in seconds.
    """

    a_plus: float
    a_minus: float
    tau_plus: float
    tau_minus: float

    def __post_init__(self):
        _check_non_negative("a_plus", self.a_plus)
        _check_non_negative("a_minus", self.a_minus)
        _check_positive("tau_plus", self.tau_plus)
        _check_positive("tau_minus", self.tau_minus)


@dataclass(frozen=True)
class TripletParams:
    """Amplitudes and time constants of the triplet rule.

    ``a2_*`` are pair-term amplitudes, ``a3_*`` triplet-term amplitudes.
    ``tau_plus``/``tau_x`` govern the two pre-synaptic detector traces,
    ``tau_minus``/``tau_y`` the two post-synaptic ones (seconds).
    """

    a2_plus: float
    a2_minus: float
    a3_plus: float
    a3_minus: float
    tau_plus: float
    tau_minus: float
    tau_x: float
    tau_y: float

    def __post_init__(self):
        for name in ("a2_plus", "a2_minus", "a3_plus", "a3_minus"):
            _check_non_negative(name, getattr(self, name))
        for name in ("tau_plus", "tau_minus", "tau_x", "tau_y"):
            _check_positive(name, getattr(self, name))

    @classmethod
    def minimal_visual_cortex(cls, a2_minus, a3_plus, tau_plus, tau_minus, tau_y,
                              tau_x=0.101) -> "TripletParams":
        """Minimal variant for the frequency-pairing data: no pair
        potentiation and no triplet depression (a2_plus = a3_minus = 0)."""
        return cls(a2_plus=0.0, a2_minus=a2_minus, a3_plus=a3_plus, a3_minus=0.0,
                   tau_plus=tau_plus, tau_minus=tau_minus, tau_x=tau_x, tau_y=tau_y)

    @classmethod
    def minimal_hippocampal(cls, a2_plus, a2_minus, a3_plus, tau_plus, tau_minus, tau_y,
                            tau_x=0.101) -> "TripletParams":
        """Minimal variant for the culture data: triplet depression off
        (a3_minus = 0), everything else free."""
        return cls(a2_plus=a2_plus, a2_minus=a2_minus, a3_plus=a3_plus, a3_minus=0.0,
                   tau_plus=tau_plus, tau_minus=tau_minus, tau_x=tau_x, tau_y=tau_y)

    def as_pair(self) -> PairParams:
        """Pair-rule view of the pair terms (only exact when a3 terms are 0)."""
        return PairParams(a_plus=self.a2_plus, a_minus=self.a2_minus,
                          tau_plus=self.tau_plus, tau_minus=self.tau_minus)


@dataclass
class TraceState:
    """Detector traces of the triplet rule at time ``t_last``.

    r1/r2 are pre-synaptic traces (decay tau_plus / tau_x), o1/o2
    post-synaptic ones (decay tau_minus / tau_y). Under nearest-spike
    interaction every trace stays in [0, 1].
    """

    r1: float = 0.0
    r2: float = 0.0
    o1: float = 0.0
    o2: float = 0.0
    t_last: float = 0.0

    def decayed_to(self, t: float, p: TripletParams) -> "TraceState":
        dt = t - self.t_last
        if dt < 0:
            raise ValueError("trace state cannot decay backwards in time")
        return TraceState(
            r1=self.r1 * math.exp(-dt / p.tau_plus),
            r2=self.r2 * math.exp(-dt / p.tau_x),
            o1=self.o1 * math.exp(-dt / p.tau_minus),
            o2=self.o2 * math.exp(-dt / p.tau_y),
            t_last=t,
        )


@dataclass(frozen=True)
class WeightEvent:
    """One spike's contribution to the total weight change."""

    t: float
    source: str  # "pre" or "post"
    dw: float


@dataclass(frozen=True)
class StdpRunResult:
    """Total weight change plus the per-event change log (time ordered)."""

    total: float
    events: tuple[WeightEvent, ...] = field(default_factory=tuple)


def pair_delta_w(dt: float, p: PairParams) -> float:
    """Weight change of one spike pair with timing difference ``dt`` (s).

    ``dt = t_post - t_pre``; dt >= 0 takes the potentiation branch
    (+a_plus * exp(-dt/tau_plus)), dt < 0 the depression branch
    (-a_minus * exp(dt/tau_minus)). No clipping is applied.
    """

    if not math.isfinite(dt):
        raise ValueError(f"dt must be finite, got {dt}")
    if dt >= 0.0:
        return p.a_plus * math.exp(-dt / p.tau_plus)
    return -p.a_minus * math.exp(dt / p.tau_minus)


def _merge_events(pre: SpikeTrain, post: SpikeTrain):
    """Merge the two trains into (t, is_pre) events, pre first on ties."""
    events = [(t, True) for t in pre.times]
    events += [(t, False) for t in post.times]
    # sort by time; pre (True) before post (False) at equal times
    events.sort(key=lambda e: (e[0], not e[1]))
    return events


def run_pair_stdp(pre, post, p: PairParams,
                  scheme: InteractionScheme = InteractionScheme.NEAREST_SPIKE,
                  record_events: bool = True) -> StdpRunResult:
    """Accumulated pair-rule weight change over two spike trains.

    Under NEAREST_SPIKE each post spike potentiates against only the
    latest preceding pre spike and each pre spike depresses against only
    the latest preceding post spike; under ALL_TO_ALL every ordered pair
    contributes. Simultaneous pre/post spikes are processed pre-first, so
    a zero timing difference lands on the potentiation branch.
    """

    pre = as_spike_train(pre)
    post = as_spike_train(post)
    scheme = as_scheme(scheme)
    if len(pre) + len(post) == 0:
        raise ValueError("at least one spike is required across both trains")

    nearest = scheme is InteractionScheme.NEAREST_SPIKE
    exp = math.exp
    r1 = 0.0  # pre trace, decays with tau_plus
    o1 = 0.0  # post trace, decays with tau_minus
    t_last = 0.0
    total = 0.0
    events: list[WeightEvent] = []
    for t, is_pre in _merge_events(pre, post):
        gap = t - t_last
        if gap > 0.0:
            r1 *= exp(-gap / p.tau_plus)
            o1 *= exp(-gap / p.tau_minus)
            t_last = t
        if is_pre:
            dw = -p.a_minus * o1
            r1 = 1.0 if nearest else r1 + 1.0
        else:
            dw = p.a_plus * r1
            o1 = 1.0 if nearest else o1 + 1.0
        total += dw
        if record_events:
            events.append(WeightEvent(t=t, source="pre" if is_pre else "post", dw=dw))
    return StdpRunResult(total=total, events=tuple(events))


def run_triplet_stdp(pre, post, p: TripletParams,
                     scheme: InteractionScheme = InteractionScheme.NEAREST_SPIKE,
                     record_events: bool = True) -> StdpRunResult:
    """Accumulated triplet-rule weight change over two spike trains.

    Trace-based evaluation: at a pre spike the weight changes by
    ``-o1 * (a2_minus + a3_minus * r2)`` and at a post spike by
    ``+r1 * (a2_plus + a3_plus * o2)``, where the spike's own traces are
    read strictly before its increment (and incremented after the weight
    update). Under NEAREST_SPIKE increments are resets to 1.
    """

    pre = as_spike_train(pre)
    post = as_spike_train(post)
    scheme = as_scheme(scheme)

    nearest = scheme is InteractionScheme.NEAREST_SPIKE
    exp = math.exp
    r1 = r2 = o1 = o2 = 0.0
    t_last = 0.0
    total = 0.0
    events: list[WeightEvent] = []
    for t, is_pre in _merge_events(pre, post):
        gap = t - t_last
        if gap > 0.0:
            r1 *= exp(-gap / p.tau_plus)
            r2 *= exp(-gap / p.tau_x)
            o1 *= exp(-gap / p.tau_minus)
            o2 *= exp(-gap / p.tau_y)
            t_last = t
        if is_pre:
            dw = -o1 * (p.a2_minus + p.a3_minus * r2)
            if nearest:
                r1 = r2 = 1.0
            else:
                r1 += 1.0
                r2 += 1.0
        else:
            dw = r1 * (p.a2_plus + p.a3_plus * o2)
            if nearest:
                o1 = o2 = 1.0
            else:
                o1 += 1.0
                o2 += 1.0
        total += dw
        if record_events:
            events.append(WeightEvent(t=t, source="pre" if is_pre else "post", dw=dw))
    return StdpRunResult(total=total, events=tuple(events))
