"""Declarative stimulation protocols and spike-train generation.

Each protocol describes one spike group (pair, triplet or quadruplet)
repeated ``reps`` times at frequency ``rho``. All times are seconds;
timing differences follow the usual conventions::

    pairing        dt  = t_post - t_pre
    pre-post-pre   dt1 = t_post - t_pre1,  dt2 = t_post - t_pre2
    post-pre-post  dt1 = t_post1 - t_pre,  dt2 = t_post2 - t_pre
    quadruplet     post-pre pair (inner delay -dt) and pre-post pair
                   (inner delay +dt) whose midpoints are t_sep apart
                   (t_sep > 0 puts the post-pre pair first)

Groups are anchored so that the earliest spike of repetition k sits at
k / rho, which keeps all times non-negative; every timing difference is
unchanged by that translation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Union

import numpy as np

from .spikes import SpikeTrain

__all__ = [
    "PairingProtocol",
    "TripletPrePostPre",
    "TripletPostPrePost",
    "QuadrupletProtocol",
    "ProtocolSpec",
    "ProtocolError",
    "build_trains",
]

DEFAULT_REPS = 60
DEFAULT_RHO = 1.0


class ProtocolError(ValueError):
    """Raised when a protocol specification is inconsistent."""


def _check_common(rho: float, reps: int) -> None:
    if not (isinstance(reps, int) and reps >= 1):
        raise ProtocolError(f"reps must be an integer >= 1, got {reps!r}")
    if not (rho > 0.0 and math.isfinite(rho)):
        raise ProtocolError(f"rho must be a finite positive frequency in Hz, got {rho!r}")


@dataclass(frozen=True)
class PairingProtocol:
    """One pre spike and one post spike, ``dt = t_post - t_pre``."""

    dt: float
    rho: float = DEFAULT_RHO
    reps: int = DEFAULT_REPS

    def __post_init__(self):
        _check_common(self.rho, self.reps)
        if not math.isfinite(self.dt):
            raise ProtocolError(f"dt must be finite, got {self.dt!r}")

    def local_offsets(self):
        return ([0.0], [self.dt])


@dataclass(frozen=True)
class TripletPrePostPre:
    """pre1 - post - pre2 group with dt1 = t_post - t_pre1, dt2 = t_post - t_pre2."""

    dt1: float
    dt2: float
    rho: float = DEFAULT_RHO
    reps: int = DEFAULT_REPS

    def __post_init__(self):
        _check_common(self.rho, self.reps)
        if not (math.isfinite(self.dt1) and math.isfinite(self.dt2)):
            raise ProtocolError("dt1 and dt2 must be finite")
        if self.dt1 == self.dt2:
            raise ProtocolError("dt1 == dt2 would place both pre spikes at the same time")

    def local_offsets(self):
        # anchor pre1 at 0: post at dt1, pre2 at dt1 - dt2
        return ([0.0, self.dt1 - self.dt2], [self.dt1])


@dataclass(frozen=True)
class TripletPostPrePost:
    """post1 - pre - post2 group with dt1 = t_post1 - t_pre, dt2 = t_post2 - t_pre."""

    dt1: float
    dt2: float
    rho: float = DEFAULT_RHO
    reps: int = DEFAULT_REPS

    def __post_init__(self):
        _check_common(self.rho, self.reps)
        if not (math.isfinite(self.dt1) and math.isfinite(self.dt2)):
            raise ProtocolError("dt1 and dt2 must be finite")
        if self.dt1 == self.dt2:
            raise ProtocolError("dt1 == dt2 would place both post spikes at the same time")

    def local_offsets(self):
        # anchor post1 at 0: pre at -dt1, post2 at dt2 - dt1
        return ([-self.dt1], [0.0, self.dt2 - self.dt1])


@dataclass(frozen=True)
class QuadrupletProtocol:
    """post-pre and pre-post pairs, inner delay ``dt`` > 0, midpoints ``t_sep`` apart.

    ``t_sep`` > 0 puts the post-pre pair first, matching the convention
    dt = -dt1 = dt2 for the two inner delays.
    """

    dt: float
    t_sep: float
    rho: float = DEFAULT_RHO
    reps: int = DEFAULT_REPS

    def __post_init__(self):
        _check_common(self.rho, self.reps)
        if not (self.dt > 0.0 and math.isfinite(self.dt)):
            raise ProtocolError(f"quadruplet inner delay dt must be > 0, got {self.dt!r}")
        if not math.isfinite(self.t_sep):
            raise ProtocolError(f"t_sep must be finite, got {self.t_sep!r}")
        # t_sep == +/-dt would collapse the two pre (or two post) spikes
        # onto each other; build_trains rejects that as a duplicate.

    def local_offsets(self):
        # post-pre pair midpoint at 0, pre-post pair midpoint at t_sep
        half = 0.5 * self.dt
        pre = [half, self.t_sep - half]
        post = [-half, self.t_sep + half]
        return (pre, post)


ProtocolSpec = Union[PairingProtocol, TripletPrePostPre, TripletPostPrePost, QuadrupletProtocol]


def _sorted_unique(offsets, channel: str):
    out = sorted(offsets)
    for a, b in zip(out, out[1:]):
        if a == b:
            raise ProtocolError(f"two {channel} spikes coincide at group offset {a}")
    return out


@lru_cache(maxsize=1024)
def build_trains(spec: ProtocolSpec) -> tuple[SpikeTrain, SpikeTrain]:
    """Emit the (pre, post) spike trains of a protocol.

    Repetition k is the group pattern translated to start exactly at
    k / rho. Consecutive groups must not overlap: the group span has to
    be strictly shorter than the repetition period.
    """

    pre_off, post_off = spec.local_offsets()
    pre_off = _sorted_unique(pre_off, "pre")
    post_off = _sorted_unique(post_off, "post")
    base = min(pre_off[0], post_off[0])
    pre_off = [t - base for t in pre_off]
    post_off = [t - base for t in post_off]

    period = 1.0 / spec.rho
    span = max(pre_off[-1], post_off[-1])
    if spec.reps > 1 and span >= period:
        raise ProtocolError(
            f"group span {span:.6g} s reaches into the next repetition "
            f"(period {period:.6g} s at rho={spec.rho:g} Hz); repetition 0 overlaps repetition 1")

    onsets = np.arange(spec.reps) * period
    pre = (onsets[:, None] + np.asarray(pre_off)[None, :]).ravel()
    post = (onsets[:, None] + np.asarray(post_off)[None, :]).ravel()
    return SpikeTrain(pre), SpikeTrain(post)
