"""Replicated state machines on top of the log.

Each replica appends its commands to a shared :class:`~xorlog.logcore.Log`
and folds the log, in order, into a locally cached state.  Because every
replica folds the same total order with the same deterministic ``apply``, all
of them agree on the object's state; ``invoke`` is lock-free because
``append`` is, and ``refresh`` is wait-free because ``poll`` is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Protocol

from .logcore import Log
from .slotcodec import to_signed64


class StateMachine(Protocol):
    initial_state: Any

    def apply(self, state: Any, command: int) -> Any:
        """Deterministic, total transition."""


@dataclass(frozen=True)
class CounterMachine:
    """Signed 64-bit counter; each command is an item added with wraparound."""

    initial_state: int = 0

    def apply(self, state: int, command: int) -> int:
        return to_signed64(state + command)


def fold(machine: StateMachine, commands) -> Any:
    state = machine.initial_state
    for cmd in commands:
        state = machine.apply(state, cmd)
    return state


class Replica:
    """One thread's view of the replicated object.

    ``replay_cursor`` counts log items already folded into ``state``;
    ``last_slot`` is the slot where the most recent :meth:`invoke` landed.
    """

    def __init__(self, log: Log, machine: StateMachine):
        self.log = log
        self.machine = machine
        self.handle = log.register()
        self.state = machine.initial_state
        self.replay_cursor = 0
        self.last_slot = -1

    def _fold(self, stop_at: int | None = None):
        res = self.log.poll_scan(self.handle)
        at = None
        for slot, cmd in zip(res.slots.tolist(), res.items.tolist()):
            self.state = self.machine.apply(self.state, cmd)
            self.replay_cursor += 1
            if slot == stop_at:
                at = self.state
        return at

    def invoke(self, command: int) -> Any:
        """Append ``command`` and return the state right after it takes effect."""
        slot = self.log.append(self.handle, command).slot
        self.last_slot = slot
        result = None
        # Once append returns, every lower slot is non-empty, so one poll
        # reaches our own slot; loop only as a guard.
        while result is None:
            if self.handle.cursor > slot:
                raise RuntimeError(f"own slot {slot} was passed without being folded")
            result = self._fold(stop_at=slot)
        return result

    def refresh(self) -> Any:
        self._fold()
        return self.state


def _demo(replicas: int = 4, commands: int = 1000, seed: int = 0) -> int:
    import numpy as np

    from .logcore import run_threads

    log = Log.create(n_max=replicas, capacity=replicas * commands + 2 * replicas)
    machine = CounterMachine()
    reps = [Replica(log, machine) for _ in range(replicas)]
    rng = np.random.default_rng(seed)
    cmds = [rng.integers(0, 1000, commands).tolist() for _ in reps]

    def run(r, cs):
        return lambda: [r.invoke(c) for c in cs]

    run_threads([run(r, cs) for r, cs in zip(reps, cmds)])
    states = [r.refresh() for r in reps]
    expected = fold(machine, log.final_order())
    print(f"replicas={replicas} commands={commands} states={states} fold={expected}")
    return 0 if all(s == expected for s in states) else 1


if __name__ == "__main__":
    raise SystemExit(_demo())
