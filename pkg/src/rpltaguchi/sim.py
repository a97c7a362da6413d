"""Event-driven model of DODAG formation over mobile low-power nodes.

Node 0 is the root, pinned at the area center with rank 0.  Every node
runs a trickle timer; a fire broadcasts a DIO to all nodes currently
within radio range (unit disk, lossless).  Receivers join or re-parent
only on a strict rank improvement, which classifies as an inconsistency
and resets their timer; anything else counts as a consistent receipt.  A
node that has not heard its parent for ``parent_timeout_intervals`` times
the maximum trickle interval drops back out of the graph.

The clock is integer microseconds and every event is ordered by
(time, event class, node id, sequence number), so a run is a pure
function of its configuration: identical configs give identical results,
byte for byte.  Each node draws from its own PRNG stream, derived from
(seed, node id), so changing the node count does not reshuffle the
other nodes' draws.

Per-node power is a partition of the run into four states (tx while
sending DIOs, cpu while processing them, the rest split between idle
listening and low-power mode by ``idle_listen_fraction``).  The state
times are integers and sum to the duration exactly.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass, field

from .exceptions import AccountingError, ConfigError, InvariantViolationError
from .trickle import TrickleParams, TrickleTimer, i_max_of

US_PER_MS = 1000

# Event classes, in tie-break order at equal timestamps.
_MOBILITY, _DELIVERY, _FIRE, _END, _PARENT = range(5)

_ROOT_VERSION = 1


@dataclass(frozen=True)
class PowerModel:
    """Per-state power draws (mW) and per-DIO costs (ms).

    ``idle_listen_fraction`` is the share of non-tx, non-cpu time spent
    idle-listening rather than in low-power mode.  The default 0.02
    mirrors a duty-cycled MAC: with these draws an always-on radio would
    make listening dominate to the point that extra DIO traffic lowers
    net power, inverting the effect the interval factors are supposed to
    show.
    """

    cpu_active_mw: float = 1.8
    lpm_mw: float = 0.0545
    listen_mw: float = 60.0
    tx_mw: float = 57.6
    dio_airtime_ms: float = 3.2
    dio_cpu_cost_ms: float = 1.0
    idle_listen_fraction: float = 0.02

    def __post_init__(self):
        for name in ("cpu_active_mw", "lpm_mw", "listen_mw", "tx_mw"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be a finite number >= 0, got {v!r}")
        for name in ("dio_airtime_ms", "dio_cpu_cost_ms"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be a finite number >= 0, got {v!r}")
        f = self.idle_listen_fraction
        if not isinstance(f, (int, float)) or not 0.0 <= f <= 1.0:
            raise ConfigError(f"idle_listen_fraction must lie in [0, 1], got {f!r}")


@dataclass(frozen=True)
class SimConfig:
    node_count: int = 20
    area: tuple = (100.0, 100.0)
    duration_ms: int = 600_000
    mobility_speed: float = 5.0
    trickle: TrickleParams = field(default_factory=lambda: TrickleParams(12, 8, 10))
    radio_range: float = 50.0
    seed: int = 1
    power: PowerModel = field(default_factory=PowerModel)
    mobility_step_ms: int = 100
    parent_timeout_intervals: int = 3
    positions: tuple | None = None
    check_invariants: bool = False
    trace_path: str | None = None

    def __post_init__(self):
        if not isinstance(self.node_count, int) or self.node_count < 2:
            raise ConfigError(f"node_count must be an integer >= 2, got {self.node_count!r}")
        area = tuple(float(v) for v in self.area)
        if len(area) != 2 or any(not math.isfinite(v) or v <= 0 for v in area):
            raise ConfigError(f"area must be two positive lengths, got {self.area!r}")
        object.__setattr__(self, "area", area)
        if not isinstance(self.duration_ms, int) or self.duration_ms < 1:
            raise ConfigError(f"duration_ms must be an integer >= 1, got {self.duration_ms!r}")
        if not math.isfinite(self.mobility_speed) or self.mobility_speed < 0:
            raise ConfigError(f"mobility_speed must be >= 0, got {self.mobility_speed!r}")
        if not isinstance(self.trickle, TrickleParams):
            raise ConfigError("trickle must be a TrickleParams")
        if not math.isfinite(self.radio_range) or self.radio_range <= 0:
            raise ConfigError(f"radio_range must be > 0, got {self.radio_range!r}")
        if not isinstance(self.seed, int):
            raise ConfigError(f"seed must be an integer, got {self.seed!r}")
        if not isinstance(self.power, PowerModel):
            raise ConfigError("power must be a PowerModel")
        if not isinstance(self.mobility_step_ms, int) or self.mobility_step_ms < 1:
            raise ConfigError(
                f"mobility_step_ms must be an integer >= 1, got {self.mobility_step_ms!r}"
            )
        if not isinstance(self.parent_timeout_intervals, int) or self.parent_timeout_intervals < 1:
            raise ConfigError(
                "parent_timeout_intervals must be an integer >= 1, "
                f"got {self.parent_timeout_intervals!r}"
            )
        if self.positions is not None:
            pos = tuple((float(x), float(y)) for x, y in self.positions)
            if len(pos) != self.node_count:
                raise ConfigError(
                    f"{len(pos)} positions for {self.node_count} nodes"
                )
            w, h = area
            for x, y in pos:
                if not 0 <= x <= w or not 0 <= y <= h:
                    raise ConfigError(f"position ({x}, {y}) outside area {area}")
            object.__setattr__(self, "positions", pos)


@dataclass(frozen=True)
class DioMessage:
    sender: int
    rank: int
    version: int
    timestamp_us: int


@dataclass(frozen=True)
class PowerBreakdown:
    """Average power of one node over the run, by state and overall (mW)."""

    cpu_mw: float
    lpm_mw: float
    listen_mw: float
    tx_mw: float
    overall_mw: float

    def to_dict(self) -> dict:
        return {
            "cpu_mw": self.cpu_mw,
            "lpm_mw": self.lpm_mw,
            "listen_mw": self.listen_mw,
            "tx_mw": self.tx_mw,
            "overall_mw": self.overall_mw,
        }


def account_power(
    model: PowerModel,
    cpu_us: int,
    lpm_us: int,
    listen_us: int,
    tx_us: int,
    duration_us: int,
) -> PowerBreakdown:
    """Average the state draws over a run.

    The four state times must partition the duration (integer-exact for
    integer inputs, within 1e-6 relative otherwise).  The overall figure
    is the sum of the four components by construction.
    """
    if duration_us <= 0:
        raise AccountingError(f"duration must be > 0, got {duration_us}")
    times = (cpu_us, lpm_us, listen_us, tx_us)
    if any(t < 0 for t in times):
        raise AccountingError(f"negative state time in {times}")
    total = sum(times)
    if abs(total - duration_us) > 1e-6 * duration_us:
        raise AccountingError(
            f"state times sum to {total}, duration is {duration_us}"
        )
    cpu = model.cpu_active_mw * (cpu_us / duration_us)
    lpm = model.lpm_mw * (lpm_us / duration_us)
    listen = model.listen_mw * (listen_us / duration_us)
    tx = model.tx_mw * (tx_us / duration_us)
    return PowerBreakdown(
        cpu_mw=cpu,
        lpm_mw=lpm,
        listen_mw=listen,
        tx_mw=tx,
        overall_mw=cpu + lpm + listen + tx,
    )


def mobility_step(x, y, waypoint, speed_mps, dt_us, area, rng):
    """Advance one random-waypoint step.

    Moves ``speed * dt`` meters straight toward the waypoint, or snaps to
    it if closer than that; on arrival a fresh waypoint is drawn uniformly
    from the area.  Returns ``(x, y, waypoint)``.
    """
    if speed_mps <= 0:
        return x, y, waypoint
    step = speed_mps * (dt_us / 1e6)
    wx, wy = waypoint
    dx, dy = wx - x, wy - y
    dist = math.hypot(dx, dy)
    if dist <= step:
        w, h = area
        return wx, wy, (rng.uniform(0.0, w), rng.uniform(0.0, h))
    scale = step / dist
    return x + dx * scale, y + dy * scale, waypoint


@dataclass(frozen=True)
class SimResult:
    """Outcome of one run: power, convergence, and DIO counters.

    ``node_state_times_us`` holds the exact integer state partition per
    node as ``(cpu, lpm, listen, tx)``; the four entries sum to the run
    duration for every node.
    """

    node_power: tuple
    node_state_times_us: tuple
    mean_power_mw: float
    time_to_all_ranked_ms: float | None
    final_depth: int
    ranked_at_end: int
    dio_sent: int
    dio_suppressed: int
    dio_received: int
    node_dio_sent: tuple
    final_ranks: tuple

    def to_dict(self) -> dict:
        return {
            "node_power": [p.to_dict() for p in self.node_power],
            "node_state_times_us": [list(t) for t in self.node_state_times_us],
            "mean_power_mw": self.mean_power_mw,
            "time_to_all_ranked_ms": self.time_to_all_ranked_ms,
            "final_depth": self.final_depth,
            "ranked_at_end": self.ranked_at_end,
            "dio_sent": self.dio_sent,
            "dio_suppressed": self.dio_suppressed,
            "dio_received": self.dio_received,
            "node_dio_sent": list(self.node_dio_sent),
            "final_ranks": list(self.final_ranks),
        }

    def to_json(self) -> str:
        """Canonical JSON; equal configs produce equal bytes."""
        return json.dumps(self.to_dict(), sort_keys=True)


class _Node:
    __slots__ = (
        "id",
        "x",
        "y",
        "waypoint",
        "rng",
        "timer",
        "rank",
        "parent",
        "version",
        "last_parent_heard",
        "parent_epoch",
        "tx_us",
        "cpu_us",
        "sent",
        "suppressed",
        "received",
    )

    def __init__(self, node_id, x, y, waypoint, rng, timer):
        self.id = node_id
        self.x = x
        self.y = y
        self.waypoint = waypoint
        self.rng = rng
        self.timer = timer
        self.rank = None
        self.parent = None
        self.version = _ROOT_VERSION
        self.last_parent_heard = 0
        self.parent_epoch = 0
        self.tx_us = 0
        self.cpu_us = 0
        self.sent = 0
        self.suppressed = 0
        self.received = 0


def _node_rng(seed: int, node_id: int) -> random.Random:
    # String seeding hashes through SHA-512, which is stable across runs,
    # platforms, and interpreter versions.
    return random.Random(f"{seed}:{node_id}")


class Simulation:
    """One configured run.  Use :func:`run` unless tests need the seams."""

    def __init__(self, config: SimConfig):
        self.config = config
        self._duration_us = config.duration_ms * US_PER_MS
        self._airtime_us = round(config.power.dio_airtime_ms * US_PER_MS)
        self._cpu_cost_us = round(config.power.dio_cpu_cost_ms * US_PER_MS)
        self._parent_timeout_us = (
            config.parent_timeout_intervals * i_max_of(config.trickle) * US_PER_MS
        )
        self._range_sq = config.radio_range * config.radio_range
        self._heap = []
        self._seq = 0
        self._all_ranked_us = None
        self._trace_rows = [] if config.trace_path else None

        w, h = config.area
        self.nodes = []
        for i in range(config.node_count):
            rng = _node_rng(config.seed, i)
            if config.positions is not None:
                x, y = config.positions[i]
            elif i == 0:
                x, y = w / 2.0, h / 2.0
            else:
                x, y = rng.uniform(0.0, w), rng.uniform(0.0, h)
            waypoint = (x, y) if i == 0 else (rng.uniform(0.0, w), rng.uniform(0.0, h))
            timer = TrickleTimer(config.trickle, scale=US_PER_MS)
            self.nodes.append(_Node(i, x, y, waypoint, rng, timer))

        root = self.nodes[0]
        root.rank = 0
        self._ranked_count = 1
        if config.node_count == 1:  # pragma: no cover - config forbids it
            self._all_ranked_us = 0

        for node in self.nodes:
            node.timer.start_interval(0, node.rng)
            self._schedule_timer(node)
        if config.mobility_speed > 0 and config.node_count > 1:
            step_us = config.mobility_step_ms * US_PER_MS
            if step_us < self._duration_us:
                self._push(step_us, _MOBILITY, -1, None)

    # -- event plumbing -------------------------------------------------

    def _push(self, time_us: int, klass: int, node_id: int, payload) -> None:
        if time_us >= self._duration_us:
            return
        self._seq += 1
        heapq.heappush(self._heap, (time_us, klass, node_id, self._seq, payload))

    def _schedule_timer(self, node: _Node) -> None:
        epoch = node.timer.epoch
        self._push(node.timer.fire_time, _FIRE, node.id, epoch)
        self._push(node.timer.end_time, _END, node.id, epoch)

    def _trace(self, now: int, node_id: int, event: str, detail: str) -> None:
        if self._trace_rows is not None:
            self._trace_rows.append((now, node_id, event, detail))

    # -- protocol -------------------------------------------------------

    def _neighbors(self, node: _Node) -> tuple:
        rsq = self._range_sq
        x, y = node.x, node.y
        out = []
        for m in self.nodes:
            if m is node:
                continue
            dx = m.x - x
            dy = m.y - y
            if dx * dx + dy * dy <= rsq:
                out.append(m.id)
        return tuple(out)

    def _would_loop(self, adopter_id: int, candidate_id: int) -> bool:
        # A DIO cannot tell the receiver whether the sender sits in its own
        # sub-graph, so the model applies the loop check with global
        # knowledge; see the module docstring for the rationale.
        seen = 0
        current = candidate_id
        while current is not None and seen <= len(self.nodes):
            if current == adopter_id:
                return True
            current = self.nodes[current].parent
            seen += 1
        return False

    def receive_dio(self, receiver_id: int, msg: DioMessage, now: int) -> str:
        """Process one DIO at ``receiver_id``; returns the classification."""
        node = self.nodes[receiver_id]
        node.received += 1
        node.cpu_us += min(self._cpu_cost_us, self._duration_us - now)
        self._trace(now, node.id, "rx", f"from={msg.sender} rank={msg.rank}")
        timer = node.timer

        if node.id == 0:
            timer.on_consistent(now)
            return "consistent"

        if node.rank is None or msg.rank + 1 < node.rank:
            if self._would_loop(node.id, msg.sender):
                # Stale information from our own sub-graph; joining through
                # it would close a parent cycle.  Treat as chatter.
                timer.on_consistent(now)
                return "consistent"
            if node.rank is None:
                kind = "adopt"
                self._ranked_count += 1
                if self._ranked_count == len(self.nodes) and self._all_ranked_us is None:
                    self._all_ranked_us = now
            elif node.parent == msg.sender:
                kind = "improve"
            else:
                kind = "reparent"
            node.rank = msg.rank + 1
            node.parent = msg.sender
            node.version = msg.version
            node.last_parent_heard = now
            node.parent_epoch += 1
            self._push(now + self._parent_timeout_us, _PARENT, node.id, node.parent_epoch)
            timer.reset(now, node.rng)
            self._schedule_timer(node)
            self._trace(now, node.id, kind, f"parent={msg.sender} rank={node.rank}")
            if self.config.check_invariants:
                self._assert_acyclic()
            return kind

        if msg.version != node.version:
            node.version = msg.version
            timer.reset(now, node.rng)
            self._schedule_timer(node)
            return "version-reset"

        if msg.sender == node.parent:
            if msg.rank + 1 > node.rank:
                # The parent now advertises a worse rank than the one our
                # membership was built on; the edge is no longer
                # rank-consistent, so leave and rejoin cleanly.
                self._detach(node, now, "stale-parent")
                return "stale-parent"
            node.last_parent_heard = now

        timer.on_consistent(now)
        return "consistent"

    def _detach(self, node: _Node, now: int, reason: str) -> None:
        node.rank = None
        node.parent = None
        node.parent_epoch += 1
        self._ranked_count -= 1
        node.timer.reset(now, node.rng)
        self._schedule_timer(node)
        self._trace(now, node.id, "detach", reason)
        if self.config.check_invariants:
            self._assert_acyclic()

    def _assert_acyclic(self) -> None:
        limit = len(self.nodes)
        for node in self.nodes:
            if node.rank is None:
                continue
            current, steps = node, 0
            while current.parent is not None:
                current = self.nodes[current.parent]
                steps += 1
                if current is node or steps > limit:
                    raise InvariantViolationError(
                        f"parent cycle through node {node.id}"
                    )

    # -- event handlers -------------------------------------------------

    def _handle_fire(self, node: _Node, epoch: int, now: int) -> None:
        if epoch != node.timer.epoch:
            return
        transmit = node.timer.fire(now)
        if node.rank is None:
            return  # not a member: nothing to advertise, not an opportunity
        if not transmit:
            node.suppressed += 1
            self._trace(now, node.id, "suppress", f"c={node.timer.counter}")
            return
        node.sent += 1
        node.tx_us += min(self._airtime_us, self._duration_us - now)
        receivers = self._neighbors(node)
        self._trace(now, node.id, "tx", f"rank={node.rank} heard_by={len(receivers)}")
        if receivers:
            msg = DioMessage(
                sender=node.id, rank=node.rank, version=node.version, timestamp_us=now
            )
            self._push(now + self._airtime_us, _DELIVERY, node.id, (msg, receivers))

    def _handle_end(self, node: _Node, epoch: int, now: int) -> None:
        if epoch != node.timer.epoch:
            return
        node.timer.end_interval(now, node.rng)
        self._schedule_timer(node)

    def _handle_parent_check(self, node: _Node, epoch: int, now: int) -> None:
        if epoch != node.parent_epoch or node.parent is None:
            return
        due = node.last_parent_heard + self._parent_timeout_us
        if now < due:
            self._push(due, _PARENT, node.id, node.parent_epoch)
            return
        self._detach(node, now, "parent-timeout")

    def _handle_mobility(self, now: int) -> None:
        cfg = self.config
        dt_us = cfg.mobility_step_ms * US_PER_MS
        for node in self.nodes[1:]:
            node.x, node.y, node.waypoint = mobility_step(
                node.x,
                node.y,
                node.waypoint,
                cfg.mobility_speed,
                dt_us,
                cfg.area,
                node.rng,
            )
        self._push(now + dt_us, _MOBILITY, -1, None)

    # -- driver ---------------------------------------------------------

    def run(self) -> SimResult:
        heap = self._heap
        nodes = self.nodes
        while heap:
            now, klass, node_id, _, payload = heapq.heappop(heap)
            if klass == _DELIVERY:
                msg, receivers = payload
                for rid in receivers:
                    self.receive_dio(rid, msg, now)
            elif klass == _FIRE:
                self._handle_fire(nodes[node_id], payload, now)
            elif klass == _END:
                self._handle_end(nodes[node_id], payload, now)
            elif klass == _MOBILITY:
                self._handle_mobility(now)
            else:
                self._handle_parent_check(nodes[node_id], payload, now)
        return self._finalize()

    def _finalize(self) -> SimResult:
        duration = self._duration_us
        fraction = self.config.power.idle_listen_fraction
        breakdowns = []
        state_times = []
        for node in self.nodes:
            idle = duration - node.tx_us - node.cpu_us
            if idle < 0:
                raise AccountingError(
                    f"node {node.id}: tx {node.tx_us} + cpu {node.cpu_us} "
                    f"exceed duration {duration}"
                )
            listen = round(idle * fraction)
            lpm = idle - listen
            state_times.append((node.cpu_us, lpm, listen, node.tx_us))
            breakdowns.append(
                account_power(
                    self.config.power, node.cpu_us, lpm, listen, node.tx_us, duration
                )
            )
        if self._trace_rows is not None:
            with open(self.config.trace_path, "w") as fp:
                fp.write("time_us,node,event,detail\n")
                for now, node_id, event, detail in self._trace_rows:
                    fp.write(f"{now},{node_id},{event},{detail}\n")
        ranks = tuple(node.rank for node in self.nodes)
        ranked = [r for r in ranks if r is not None]
        return SimResult(
            node_power=tuple(breakdowns),
            node_state_times_us=tuple(state_times),
            mean_power_mw=sum(b.overall_mw for b in breakdowns) / len(breakdowns),
            time_to_all_ranked_ms=(
                self._all_ranked_us / US_PER_MS if self._all_ranked_us is not None else None
            ),
            final_depth=max(ranked),
            ranked_at_end=len(ranked),
            dio_sent=sum(n.sent for n in self.nodes),
            dio_suppressed=sum(n.suppressed for n in self.nodes),
            dio_received=sum(n.received for n in self.nodes),
            node_dio_sent=tuple(n.sent for n in self.nodes),
            final_ranks=ranks,
        )


def run(config: SimConfig) -> SimResult:
    """Simulate one configuration to completion."""
    return Simulation(config).run()
