"""Conflict-free workload partitioning for parallel row updates.

Every mode is cut into M parts, bucketing the entries into M^N blocks.  An
epoch visits the blocks in M^(N-1) rounds of M blocks each; within a round
the assigned blocks differ in every mode component, so no two workers can
ever touch the same factor row concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coo import SparseTensorCoo


@dataclass(frozen=True)
class PartitionPlan:
    """Block boundaries per mode and the entry ids bucketed into each block."""

    m: int
    boundaries: tuple[tuple[int, ...], ...]
    block_entries: dict

    def block_of(self, index) -> tuple[int, ...]:
        out = []
        for n, i in enumerate(index):
            cuts = self.boundaries[n]
            out.append(int(np.searchsorted(cuts, i, side="right")) - 1)
        return tuple(out)


@dataclass(frozen=True)
class RoundSchedule:
    """Rounds of conflict-free worker-to-block assignments.

    rounds[t][w] is the block worker w owns in round t; every block appears
    exactly once across all rounds.
    """

    order: int
    m: int
    rounds: tuple[tuple[tuple[int, ...], ...], ...]


def build_partition(tensor: SparseTensorCoo, m: int) -> PartitionPlan:
    """Cut each mode at floor(k * I_n / m) and bucket every entry."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > min(tensor.dims):
        raise ValueError(
            f"m={m} exceeds smallest mode dimension {min(tensor.dims)}"
        )
    boundaries = tuple(
        tuple(k * d // m for k in range(m + 1)) for d in tensor.dims
    )
    order = tensor.order
    buckets = np.empty((tensor.nnz, order), dtype=np.int64)
    for n in range(order):
        cuts = np.asarray(boundaries[n], dtype=np.int64)
        buckets[:, n] = np.searchsorted(cuts, tensor.indices[:, n], side="right") - 1
    # Linearise block ids, then group entry positions with a stable sort so
    # source order is preserved inside each block.
    key = np.zeros(tensor.nnz, dtype=np.int64)
    for n in range(order):
        key = key * m + buckets[:, n]
    sort_ids = np.argsort(key, kind="stable")
    block_entries = {}
    if tensor.nnz:
        sorted_keys = key[sort_ids]
        starts = np.flatnonzero(np.r_[True, sorted_keys[1:] != sorted_keys[:-1]])
        ends = np.r_[starts[1:], len(sorted_keys)]
        for s, e in zip(starts, ends):
            k = int(sorted_keys[s])
            block = []
            for n in range(order - 1, -1, -1):
                block.append(k % m)
                k //= m
            block_entries[tuple(reversed(block))] = sort_ids[s:e]
    return PartitionPlan(m, boundaries, block_entries)


def _snake_offsets(digits: int, m: int):
    """Enumerate offset vectors so adjacent rounds change one digit.

    Boustrophedon over the lexicographic grid; for two digits base 2 this
    yields (0,0), (0,1), (1,1), (1,0).
    """
    if digits == 0:
        yield ()
        return
    tails = list(_snake_offsets(digits - 1, m))
    for lead in range(m):
        seq = tails if lead % 2 == 0 else reversed(tails)
        for tail in seq:
            yield (lead,) + tail


def round_schedule(order: int, m: int) -> RoundSchedule:
    """Build the M^(N-1)-round schedule.

    Worker w in the round with offsets (d_1, ..., d_{N-1}) owns block
    (w, (w+d_1) mod M, ..., (w+d_{N-1}) mod M).
    """
    if order < 2:
        raise ValueError("order must be >= 2")
    if m < 1:
        raise ValueError("m must be >= 1")
    rounds = []
    for offsets in _snake_offsets(order - 1, m):
        rounds.append(
            tuple(
                (w,) + tuple((w + d) % m for d in offsets) for w in range(m)
            )
        )
    return RoundSchedule(order, m, tuple(rounds))


def schedule_text(schedule: RoundSchedule, plan: PartitionPlan | None = None) -> str:
    """Human-readable dump of the schedule, optionally with block sizes."""
    lines = [
        f"order={schedule.order} m={schedule.m} "
        f"rounds={len(schedule.rounds)} workers={schedule.m}"
    ]
    for t, rnd in enumerate(schedule.rounds):
        parts = []
        for w, block in enumerate(rnd):
            txt = f"w{w}->({','.join(str(b) for b in block)})"
            if plan is not None:
                size = len(plan.block_entries.get(block, ()))
                txt += f"[{size}]"
            parts.append(txt)
        lines.append(f"round {t}: " + "  ".join(parts))
    return "\n".join(lines)
