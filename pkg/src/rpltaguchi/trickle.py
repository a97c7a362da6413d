"""Exponential-backoff beacon timer with redundancy suppression.

The timer is unit-agnostic: exponents size the base interval in
milliseconds, and a ``scale`` factor lets a caller run the same state
machine on a finer clock (the simulator uses microseconds).  All times are
integers.

Within each interval of length I a fire point t is drawn uniformly from
[I/2, I).  Consistent receipts bump a counter; the fire transmits only
while the counter is below the redundancy constant k.  Every interval
expiry doubles I up to the cap, and a reset drops I back to the base.
"""

from __future__ import annotations

from dataclasses import dataclass

from .exceptions import ConfigError

#: Largest supported interval exponent; beyond this the interval arithmetic
#: would not fit the simulator's 63-bit microsecond clock.
MAX_EXPONENT = 62


@dataclass(frozen=True)
class TrickleParams:
    """Timer constants: base-interval exponent, doubling count, redundancy."""

    i_min_exp: int
    doublings: int
    k: int

    def __post_init__(self):
        if not isinstance(self.i_min_exp, int) or self.i_min_exp < 1:
            raise ConfigError(f"i_min_exp must be an integer >= 1, got {self.i_min_exp!r}")
        if not isinstance(self.doublings, int) or self.doublings < 0:
            raise ConfigError(f"doublings must be an integer >= 0, got {self.doublings!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k!r}")


def i_min_of(params: TrickleParams) -> int:
    """Base interval in milliseconds: ``2 ** i_min_exp``."""
    if params.i_min_exp > MAX_EXPONENT:
        raise OverflowError(f"i_min_exp {params.i_min_exp} exceeds {MAX_EXPONENT}")
    return 1 << params.i_min_exp

def i_max_of(params: TrickleParams) -> int:
    """Interval cap in milliseconds: ``i_min * 2 ** doublings``."""
    total = params.i_min_exp + params.doublings
    if total > MAX_EXPONENT:
        raise OverflowError(
            f"i_min_exp + doublings = {total} exceeds {MAX_EXPONENT}"
        )
    return 1 << total


class TrickleTimer:
    """Single-owner mutable timer state.

    The owner drives it with ``start_interval`` / ``on_consistent`` /
    ``fire`` / ``end_interval`` / ``reset`` and schedules its own events at
    ``fire_time`` and ``end_time``.  ``epoch`` increments whenever a new
    interval begins, so stale scheduled events can be recognized and
    dropped.  An optional trace callable receives
    ``(timestamp, event, interval, t, counter)`` tuples.
    """

    __slots__ = (
        "i_min",
        "i_max",
        "k",
        "interval",
        "interval_start",
        "t",
        "counter",
        "pending_tx",
        "epoch",
        "trace",
    )

    def __init__(self, params: TrickleParams, scale: int = 1, trace=None):
        if not isinstance(scale, int) or scale < 1:
            raise ConfigError(f"scale must be an integer >= 1, got {scale!r}")
        self.i_min = i_min_of(params) * scale
        self.i_max = i_max_of(params) * scale
        self.k = params.k
        self.interval = self.i_min
        self.interval_start = 0
        self.t = 0
        self.counter = 0
        self.pending_tx = False
        self.epoch = 0
        self.trace = trace

    def _emit(self, now, event):
        if self.trace is not None:
            self.trace((now, event, self.interval, self.t, self.counter))

    def start_interval(self, now: int, rng) -> None:
        """Begin an interval of the current length at ``now``."""
        self.interval_start = now
        self.counter = 0
        self.t = rng.randrange(self.interval // 2, self.interval)
        self.pending_tx = True
        self.epoch += 1
        self._emit(now, "interval-start")

    def on_consistent(self, now: int | None = None) -> None:
        """Record one consistent receipt."""
        self.counter += 1
        self._emit(now, "consistent")

    def should_transmit(self) -> bool:
        """True while the scheduled fire would actually transmit."""
        return self.pending_tx and self.counter < self.k

    def fire(self, now: int | None = None) -> bool:
        """Consume the interval's fire point; returns whether to transmit."""
        decision = self.should_transmit()
        self.pending_tx = False
        self._emit(now, "fire-tx" if decision else "fire-suppressed")
        return decision

    def end_interval(self, now: int, rng) -> None:
        """Double the interval (capped) and start the next one."""
        self.interval = min(self.interval * 2, self.i_max)
        self._emit(now, "double")
        self.start_interval(now, rng)

    def reset(self, now: int, rng) -> None:
        """Drop back to the base interval (inconsistency seen)."""
        self.interval = self.i_min
        self._emit(now, "reset")
        self.start_interval(now, rng)

    @property
    def fire_time(self) -> int:
        return self.interval_start + self.t

    @property
    def end_time(self) -> int:
        return self.interval_start + self.interval

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return (
            f"TrickleTimer(I={self.interval}, start={self.interval_start}, "
            f"t={self.t}, c={self.counter}, pending={self.pending_tx})"
        )
