"""Behavioral model of the pulse-driven synaptic weight-change circuits.

Abstraction level: ideal capacitors, ideal current sources, and one
subthreshold exponential transconductance per weight-changing branch.
Each spike is a voltage pulse of fixed width. A pulse connects its
timing capacitor to a diode-set bias voltage (charging at the amplitude
bias current, so the node tops out at ``v = k * ln(i_amp / I_DIODE)``
with ``k = n_slope * u_t``); between pulses the node discharges
linearly at ``i_decay / c_node`` and floors at 0 V. While an opposing
pulse is high, the weight capacitor integrates ``i_0 * exp(v / k)``
from every enabled branch: gate-node linear decay composed with the
exponential transconductance yields exponential learning windows with
``tau = k * c_node / i_decay``. Triplet branches are series stacks of
two gates and carry the minimum of the two gate currents.

Simulation runs in accelerated circuit time (biological seconds divided
by ``time_scale``); all reported times are biological. The triplet
timing capacitors are charged by a delayed copy of their own channel's
pulse, so within a spike's own pulse they are read at their pre-spike
value and re-charged only at the pulse's end.

Everything is event-driven and piecewise-analytic; there is no
fixed-step integration anywhere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

from scipy.optimize import brentq

from .spikes import SpikeTrain, as_spike_train

__all__ = [
    "CircuitParams",
    "CircuitState",
    "CircuitTopology",
    "CircuitRun",
    "simulate_circuit",
    "stdp_window",
    "calibrate_time_constant",
    "fit_window_lobe",
    "write_trajectory_csv",
    "I_DIODE",
    "BIAS_NAMES",
]

# Subthreshold scale current of the diode-connected bias transistors.
I_DIODE = 1e-15
# Branch-device scale current; the ratio i_0 / I_DIODE is the effective
# mirror gain between a bias current and the peak branch current. The
# default is calibrated so that the reference bias tables land near
# their published dataset errors.
DEFAULT_I0 = 3.2e-16

BIAS_NAMES = ("i_pot1", "i_dep1", "i_pot2", "i_dep2",
              "i_tp1", "i_td1", "i_tp2", "i_td2")

# Weight change magnitudes below this fraction of v_dd are reported as
# zero: the far tail of a window only carries floor leakage.
REPORT_CUTOFF_VDD = 1e-6


class CircuitTopology(Enum):
    """Which weight-changing branches are wired in."""

    PAIR = "pair"
    TRIPLET_FULL = "triplet-full"
    TRIPLET_MINIMAL_VISUAL = "triplet-minimal-visual-cortex"
    TRIPLET_MINIMAL_HIPPOCAMPAL = "triplet-minimal-hippocampal"

    @property
    def has_pair_pot(self) -> bool:
        return self is not CircuitTopology.TRIPLET_MINIMAL_VISUAL

    @property
    def has_pair_dep(self) -> bool:
        return True

    @property
    def has_triplet_pot(self) -> bool:
        return self is not CircuitTopology.PAIR

    @property
    def has_triplet_dep(self) -> bool:
        return self is CircuitTopology.TRIPLET_FULL


def as_topology(topology) -> CircuitTopology:
    if isinstance(topology, CircuitTopology):
        return topology
    try:
        return CircuitTopology(topology)
    except ValueError:
        names = ", ".join(repr(t.value) for t in CircuitTopology)
        raise ValueError(f"unknown topology {topology!r}; expected one of {names}") from None


@dataclass(frozen=True)
class CircuitParams:
    """Bias currents, capacitances and device constants of the circuits.

    ``i_pot1``/``i_dep1``/``i_pot2``/``i_dep2`` set the branch
    amplitudes (pair potentiation, pair depression, triplet
    potentiation, triplet depression); ``i_tp1``/``i_td1``/``i_tp2``/
    ``i_td2`` set the matching decay rates and hence the window time
    constants. The pair circuit uses only the ``*1`` subset.
    """

    i_pot1: float = 0.0
    i_dep1: float = 0.0
    i_pot2: float = 0.0
    i_dep2: float = 0.0
    i_tp1: float = 0.0
    i_td1: float = 0.0
    i_tp2: float = 0.0
    i_td2: float = 0.0
    c_w: float = 10e-12
    c_node: float = 10e-15
    pulse_width: float = 1e-6
    v_dd: float = 3.3
    n_slope: float = 1.3
    u_t: float = 0.02585
    i_0: float = DEFAULT_I0
    time_scale: float = 1000.0

    def __post_init__(self):
        for name in BIAS_NAMES:
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0, got {v!r}")
        for name in ("c_w", "c_node", "pulse_width", "v_dd", "n_slope", "u_t",
                     "i_0", "time_scale"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and > 0, got {v!r}")

    @property
    def k(self) -> float:
        """Subthreshold slope voltage n * U_T (volts)."""
        return self.n_slope * self.u_t

    def bias_voltage(self, i_amp: float) -> float:
        """Gate voltage produced by a diode-connected device at ``i_amp``."""
        if i_amp <= I_DIODE:
            return 0.0
        return min(self.v_dd, self.k * math.log(i_amp / I_DIODE))

    def branch_current(self, v: float) -> float:
        """Subthreshold branch current at gate voltage ``v``."""
        return self.i_0 * math.exp(v / self.k)

    def window_tau_bio(self, i_decay: float) -> float:
        """Biological window time constant set by a decay bias current."""
        if i_decay <= 0.0:
            return math.inf
        return self.time_scale * self.k * self.c_node / i_decay

    def with_biases(self, **biases) -> "CircuitParams":
        unknown = set(biases) - set(BIAS_NAMES)
        if unknown:
            raise ValueError(f"unknown bias names: {sorted(unknown)}")
        return replace(self, **biases)


@dataclass(frozen=True)
class CircuitState:
    """Node voltages at one biological time point."""

    t: float
    v_pot1: float
    v_dep1: float
    v_pot2: float
    v_dep2: float
    v_w: float


@dataclass(frozen=True)
class CircuitRun:
    """Simulation output: weight trajectory and net fractional change."""

    dw: float
    v_w_initial: float
    v_w_final: float
    saturated: bool
    trajectory: tuple[CircuitState, ...]


class _Node:
    """One timing capacitor: linear charge toward a target, linear decay."""

    __slots__ = ("v", "target", "charge_rate", "decay_rate")

    def __init__(self, params: CircuitParams, i_amp: float, i_decay: float):
        self.v = 0.0
        self.target = params.bias_voltage(i_amp)
        self.charge_rate = i_amp / params.c_node
        self.decay_rate = i_decay / params.c_node

    def pieces(self, length: float, charging: bool):
        """Piecewise-linear trajectory over a segment: [(u_start, v_start, slope)]."""
        v = self.v
        if charging and self.charge_rate > 0.0 and v < self.target:
            t_hit = (self.target - v) / self.charge_rate
            if t_hit >= length:
                return [(0.0, v, self.charge_rate)]
            return [(0.0, v, self.charge_rate), (t_hit, self.target, 0.0)]
        if charging:
            return [(0.0, v, 0.0)]  # held at the bias voltage
        if self.decay_rate <= 0.0 or v <= 0.0:
            return [(0.0, v, 0.0)]
        t_floor = v / self.decay_rate
        if t_floor >= length:
            return [(0.0, v, -self.decay_rate)]
        return [(0.0, v, -self.decay_rate), (t_floor, 0.0, 0.0)]

    def advance(self, length: float, charging: bool) -> None:
        pieces = self.pieces(length, charging)
        u0, v0, slope = pieces[-1]
        self.v = v0 + slope * (length - u0)

    def reset_from_pulse(self, pulse_width: float) -> None:
        """Apply one full pulse worth of charge (the delayed-copy path)."""
        if self.charge_rate <= 0.0:
            return
        self.v = min(self.target, self.v + self.charge_rate * pulse_width)


def _piece_value(pieces, u: float):
    """(value, slope) of a piecewise-linear trajectory at offset u."""
    v0, s0 = None, None
    for u_start, v_start, slope in pieces:
        if u_start > u:
            break
        v0 = v_start + slope * (u - u_start)
        s0 = slope
    return v0, s0


def _exp_integral(i_0: float, k: float, v0: float, slope: float, length: float) -> float:
    """Integral of i_0 * exp((v0 + slope*u)/k) du over [0, length]."""
    if length <= 0.0:
        return 0.0
    if slope == 0.0:
        return length * i_0 * math.exp(v0 / k)
    return i_0 * k / slope * (math.exp((v0 + slope * length) / k) - math.exp(v0 / k))


class _WeightCap:
    """The weight capacitor with rail clamping at 0 and v_dd."""

    __slots__ = ("v", "c", "v_dd", "saturated")

    def __init__(self, params: CircuitParams):
        self.v = params.v_dd / 2.0
        self.c = params.c_w
        self.v_dd = params.v_dd
        self.saturated = False

    def apply(self, dq_pot: float, dq_dep: float) -> None:
        """Apply a sub-piece's charge; monotone pieces only."""
        v_new = self.v + (dq_pot - dq_dep) / self.c
        if v_new > self.v_dd:
            v_new = self.v_dd
            self.saturated = True
        elif v_new < 0.0:
            v_new = 0.0
            self.saturated = True
        self.v = v_new


def _integrate_weight(params: CircuitParams, cap: _WeightCap, branches, length: float) -> None:
    """Integrate all active branches over one segment.

    ``branches`` is a list of (sign, gate_pieces_tuple); every gate's
    trajectory is piecewise linear over the segment.
    """
    # merged breakpoints of all gate trajectories
    cuts = {0.0, length}
    for _, gates in branches:
        for pieces in gates:
            for u_start, _, _ in pieces:
                if 0.0 < u_start < length:
                    cuts.add(u_start)
    # min-stack crossings: add where the two gate voltages cross
    for _, gates in branches:
        if len(gates) == 2:
            grid = sorted(cuts)
            for a, b in zip(grid, grid[1:]):
                va, sa = _piece_value(gates[0], a)
                vb, sb = _piece_value(gates[1], a)
                dv, ds = va - vb, sa - sb
                if ds != 0.0:
                    u_cross = a - dv / ds
                    if a < u_cross < b:
                        cuts.add(u_cross)
    grid = sorted(cuts)
    k = params.k
    for a, b in zip(grid, grid[1:]):
        seg = b - a
        if seg <= 0.0:
            continue
        dq_pot = dq_dep = 0.0
        for sign, gates in branches:
            if len(gates) == 1:
                v0, s = _piece_value(gates[0], a)
            else:
                va, sa = _piece_value(gates[0], a)
                vb, sb = _piece_value(gates[1], a)
                # the lower gate at the midpoint rules the whole sub-piece
                mid = 0.5 * seg
                if va + sa * mid <= vb + sb * mid:
                    v0, s = va, sa
                else:
                    v0, s = vb, sb
            q = _exp_integral(params.i_0, k, v0, s, seg)
            if sign > 0:
                dq_pot += q
            else:
                dq_dep += q
        _apply_piece(params, cap, branches, a, b, dq_pot, dq_dep)


def _charges(params: CircuitParams, branches, a: float, b: float):
    """(dq_pot, dq_dep) over [a, b] given linear gates on that window."""
    k = params.k
    seg = b - a
    dq_pot = dq_dep = 0.0
    for sign, gates in branches:
        if len(gates) == 1:
            v0, s = _piece_value(gates[0], a)
        else:
            va, sa = _piece_value(gates[0], a)
            vb, sb = _piece_value(gates[1], a)
            mid = 0.5 * seg
            if va + sa * mid <= vb + sb * mid:
                v0, s = va, sa
            else:
                v0, s = vb, sb
        q = _exp_integral(params.i_0, k, v0, s, seg)
        if sign > 0:
            dq_pot += q
        else:
            dq_dep += q
    return dq_pot, dq_dep


def _apply_piece(params, cap, branches, a, b, dq_pot, dq_dep, depth: int = 0) -> None:
    """Apply one sub-piece's charge with exact rail handling.

    Monotone pieces clamp exactly. Mixed pieces apply directly when the
    one-sided totals cannot reach a rail from the current voltage;
    otherwise they are bisected until each half is rail-safe (or a depth
    limit is hit, at which point the clamped net is an approximation of
    an already-saturated trajectory).
    """
    if dq_pot == 0.0 or dq_dep == 0.0:
        cap.apply(dq_pot, dq_dep)
        return
    rail_safe = (cap.v - dq_dep / cap.c) > 0.0 and (cap.v + dq_pot / cap.c) < cap.v_dd
    if rail_safe or depth >= 24:
        cap.apply(dq_pot, dq_dep)
        return
    mid = 0.5 * (a + b)
    qp1, qd1 = _charges(params, branches, a, mid)
    _apply_piece(params, cap, branches, a, mid, qp1, qd1, depth + 1)
    qp2, qd2 = _charges(params, branches, mid, b)
    _apply_piece(params, cap, branches, mid, b, qp2, qd2, depth + 1)


def simulate_circuit(topology, params: CircuitParams, pre, post,
                     record_trajectory: bool = True) -> CircuitRun:
    """Event-driven run of one circuit over a pair of spike trains.

    Input trains are biological seconds; they are divided by
    ``time_scale`` on entry and the trajectory is reported back in
    biological time. The weight capacitor starts at v_dd / 2 and ``dw``
    is its net fractional change; a run that pins v_w to a rail is
    flagged ``saturated``, not an error.
    """
    topology = as_topology(topology)
    pre = as_spike_train(pre)
    post = as_spike_train(post)
    scale = params.time_scale
    pw = params.pulse_width

    # action codes: 0 pre-on, 1 pre-off, 2 post-on, 3 post-off
    actions = []
    for t in pre.times:
        ts = t / scale
        actions.append((ts, 0))
        actions.append((ts + pw, 1))
    for t in post.times:
        ts = t / scale
        actions.append((ts, 2))
        actions.append((ts + pw, 3))
    actions.sort()

    pot1 = _Node(params, params.i_pot1, params.i_tp1)
    dep1 = _Node(params, params.i_dep1, params.i_td1)
    pot2 = _Node(params, params.i_pot2, params.i_tp2)
    dep2 = _Node(params, params.i_dep2, params.i_td2)
    cap = _WeightCap(params)
    v_init = cap.v

    pair_pot = topology.has_pair_pot and params.i_pot1 > 0.0
    pair_dep = topology.has_pair_dep and params.i_dep1 > 0.0
    trip_pot = topology.has_triplet_pot and params.i_pot2 > 0.0
    trip_dep = topology.has_triplet_dep and params.i_dep2 > 0.0

    trajectory: list[CircuitState] = []

    def snapshot(ts: float) -> None:
        if not record_trajectory:
            return
        state = CircuitState(t=ts * scale, v_pot1=pot1.v, v_dep1=dep1.v,
                             v_pot2=pot2.v, v_dep2=dep2.v, v_w=cap.v)
        if trajectory and trajectory[-1].t == state.t:
            trajectory[-1] = state
        else:
            trajectory.append(state)

    t_cur = 0.0
    pre_n = post_n = 0
    snapshot(t_cur)

    for t_evt, code in actions:
        length = t_evt - t_cur
        if length > 0.0:
            pre_on = pre_n > 0
            post_on = post_n > 0
            branches = []
            if post_on:
                if pair_pot:
                    branches.append((+1, (pot1.pieces(length, pre_on),)))
                if trip_pot:
                    branches.append((+1, (pot1.pieces(length, pre_on),
                                          pot2.pieces(length, False))))
            if pre_on:
                if pair_dep:
                    branches.append((-1, (dep1.pieces(length, post_on),)))
                if trip_dep:
                    branches.append((-1, (dep1.pieces(length, post_on),
                                          dep2.pieces(length, False))))
            if branches:
                _integrate_weight(params, cap, branches, length)
            pot1.advance(length, pre_on)
            dep2.advance(length, False)
            dep1.advance(length, post_on)
            pot2.advance(length, False)
            t_cur = t_evt
        if code == 0:
            pre_n += 1
        elif code == 1:
            pre_n -= 1
            dep2.reset_from_pulse(pw)  # delayed copy of the pre pulse
        elif code == 2:
            post_n += 1
        else:
            post_n -= 1
            pot2.reset_from_pulse(pw)  # delayed copy of the post pulse
        snapshot(t_cur)

    dv = cap.v - v_init
    dw = 0.0 if abs(dv) < REPORT_CUTOFF_VDD * params.v_dd else dv / v_init
    return CircuitRun(dw=dw, v_w_initial=v_init, v_w_final=cap.v,
                      saturated=cap.saturated, trajectory=tuple(trajectory))


def stdp_window(topology, params: CircuitParams, dt_grid) -> list[tuple[float, float]]:
    """Learning window: net weight change of one isolated pair per grid point.

    ``dt = t_post - t_pre`` in biological seconds.
    """
    out = []
    for dt in dt_grid:
        if not math.isfinite(dt):
            raise ValueError(f"dt grid values must be finite, got {dt!r}")
        if dt >= 0.0:
            pre, post = SpikeTrain([0.0]), SpikeTrain([dt])
        else:
            pre, post = SpikeTrain([-dt]), SpikeTrain([0.0])
        run = simulate_circuit(topology, params, pre, post, record_trajectory=False)
        out.append((float(dt), run.dw))
    return out


def fit_window_lobe(window, side: str) -> tuple[float, float, float]:
    """Least-squares single-exponential fit of one window lobe.

    Returns (amplitude, tau_seconds, r_squared) from a linear regression
    of log magnitude against |dt|, using the lobe's sign convention
    (side "pot": dt > 0, dw > 0; side "dep": dt < 0, dw < 0). Points
    where the reported change is zero (floored gate) are excluded.
    """
    if side == "pot":
        pts = [(dt, dw) for dt, dw in window if dt > 0.0 and dw > 0.0]
    elif side == "dep":
        pts = [(-dt, -dw) for dt, dw in window if dt < 0.0 and dw < 0.0]
    else:
        raise ValueError(f"side must be 'pot' or 'dep', got {side!r}")
    if len(pts) < 3:
        raise ValueError(f"not enough non-zero points on the {side} lobe to fit")
    xs = [p[0] for p in pts]
    ys = [math.log(p[1]) for p in pts]
    n = len(xs)
    mean_x = sum(xs) / n
    mean_y = sum(ys) / n
    sxx = sum((x - mean_x) ** 2 for x in xs)
    sxy = sum((x - mean_x) * (y - mean_y) for x, y in zip(xs, ys))
    if sxx == 0.0:
        raise ValueError("degenerate lobe grid")
    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    ss_res = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    ss_tot = sum((y - mean_y) ** 2 for y in ys)
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    if slope >= 0.0:
        raise ValueError("lobe does not decay; cannot extract a time constant")
    return math.exp(intercept), -1.0 / slope, r2


# Bias currents are searched inside these bounds when calibrating.
CALIBRATION_BIAS_BOUNDS = (1e-12, 1e-5)


def calibrate_time_constant(target_tau: float, topology=CircuitTopology.PAIR,
                            side: str = "pot",
                            params: CircuitParams | None = None) -> float:
    """Decay bias current whose fitted window time constant hits ``target_tau``.

    Scalar root-finding on the monotone bias -> tau map; the result's
    fitted tau is within 2 % of the target. Raises ValueError when the
    target is unreachable inside the calibration bias bounds.
    """
    if not (target_tau > 0.0 and math.isfinite(target_tau)):
        raise ValueError(f"target_tau must be a positive time in seconds, got {target_tau!r}")
    topology = as_topology(topology)
    if side not in ("pot", "dep"):
        raise ValueError(f"side must be 'pot' or 'dep', got {side!r}")
    base = params if params is not None else CircuitParams(
        i_pot1=150e-9, i_dep1=150e-9, i_tp1=24e-12, i_td1=18e-12)

    bias_name = "i_tp1" if side == "pot" else "i_td1"
    lo, hi = CALIBRATION_BIAS_BOUNDS

    def fitted_tau(bias: float) -> float:
        p = base.with_biases(**{bias_name: bias})
        tau_guess = p.window_tau_bio(bias)
        dts = [f * tau_guess for f in (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0)]
        if side == "dep":
            dts = [-dt for dt in dts]
        window = stdp_window(topology, p, dts)
        _, tau, _ = fit_window_lobe(window, side)
        return tau

    def gap(log_bias: float) -> float:
        return fitted_tau(math.exp(log_bias)) - target_tau

    # tau is monotone decreasing in the bias current
    if gap(math.log(lo)) < 0.0 or gap(math.log(hi)) > 0.0:
        reachable = (fitted_tau(hi), fitted_tau(lo))
        raise ValueError(
            f"target tau {target_tau:g} s is unreachable within bias bounds "
            f"[{lo:g}, {hi:g}] A (reachable range {reachable[0]:.3g}..{reachable[1]:.3g} s)")
    log_bias = brentq(gap, math.log(lo), math.log(hi), xtol=1e-4)
    return math.exp(log_bias)


def write_trajectory_csv(run: CircuitRun, path) -> None:
    """Export a trajectory: t_seconds, v_w_volts plus one column per node."""
    from .datasets import format_number
    lines = ["t_seconds,v_w_volts,v_pot1_volts,v_dep1_volts,v_pot2_volts,v_dep2_volts"]
    for s in run.trajectory:
        lines.append(",".join(format_number(x) for x in
                              (s.t, s.v_w, s.v_pot1, s.v_dep1, s.v_pot2, s.v_dep2)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
