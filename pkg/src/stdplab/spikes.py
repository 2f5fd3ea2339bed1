"""Spike trains and input validation helpers."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = ["SpikeTrain", "InteractionScheme", "as_spike_train", "as_scheme"]


class InteractionScheme(Enum):
    """How a spike pairs with opposite-channel spikes.

    NEAREST_SPIKE: each spike interacts only with its immediate
    preceding/succeeding neighbours (trace reset-to-1). Default for all
    dataset reproductions. ALL_TO_ALL: every pair interacts (traces
    accumulate).
    """

    NEAREST_SPIKE = "nearest"
    ALL_TO_ALL = "all-to-all"


@dataclass(frozen=True)
class SpikeTrain:
    """Ordered spike times, in seconds, on one pre- or post-synaptic channel.

    Times must be finite, non-negative and strictly increasing.
    """

    times: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1:
            raise ValueError(f"spike times must be one-dimensional, got shape {t.shape}")
        if t.size and not np.all(np.isfinite(t)):
            raise ValueError("spike times must all be finite")
        if t.size and t[0] < 0.0:
            raise ValueError(f"spike times must be >= 0, got {t[0]}")
        if t.size > 1 and not np.all(np.diff(t) > 0.0):
            raise ValueError("spike times must be strictly increasing (no duplicates)")
        t = t.copy()
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    def __len__(self) -> int:
        return int(self.times.size)

    def shifted(self, offset: float) -> "SpikeTrain":
        """Translate every spike by ``offset`` seconds (must stay >= 0)."""
        return SpikeTrain(self.times + offset)

    @property
    def span(self) -> float:
        """Time between first and last spike (0 for <= 1 spike)."""
        if len(self) < 2:
            return 0.0
        return float(self.times[-1] - self.times[0])


def as_spike_train(times) -> SpikeTrain:
    """Coerce an array-like of times (or a SpikeTrain) into a SpikeTrain."""
    if isinstance(times, SpikeTrain):
        return times
    return SpikeTrain(np.asarray(times, dtype=float))


def as_scheme(scheme) -> InteractionScheme:
    """Coerce a string or InteractionScheme into an InteractionScheme."""
    if isinstance(scheme, InteractionScheme):
        return scheme
    try:
        return InteractionScheme(scheme)
    except ValueError:
        names = ", ".join(repr(s.value) for s in InteractionScheme)
        raise ValueError(f"unknown interaction scheme {scheme!r}; expected one of {names}") from None
