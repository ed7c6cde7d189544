"""Equivalence diffs, mass ledgers and communication tables."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .deposition import total_mass


@dataclass(frozen=True)
class FieldDiff:
    max_abs: float
    l2: float
    worst_block: Optional[int]
    worst_cell: Optional[tuple]


def diff_fields(a, b) -> FieldDiff:
    """Elementwise comparison of two per-block field lists."""
    if len(a) != len(b):
        raise ValueError(f"field lists differ in length: {len(a)} vs {len(b)}")
    worst = 0.0
    where = (None, None)
    sq = 0.0
    for fa, fb in zip(a, b):
        if fa.block != fb.block or fa.values.shape != fb.values.shape:
            raise ValueError(f"block {fa.block}: shape {fa.values.shape} vs "
                             f"block {fb.block}: shape {fb.values.shape}")
        d = np.abs(fa.values - fb.values)
        sq += float(np.sum(d * d))
        if d.size and d.max() > worst:
            worst = float(d.max())
            cell = np.unravel_index(int(np.argmax(d)), d.shape)
            where = (fa.block, tuple(int(i) for i in cell))
    return FieldDiff(worst, math.sqrt(sq), *where)


@dataclass(frozen=True)
class MassLedger:
    initial: float
    deposited: float
    lost: float
    residual: float

    def relative_residual(self) -> float:
        return abs(self.residual) / self.initial if self.initial else abs(self.residual)

    def balanced(self, rtol: float = 1e-12) -> bool:
        return self.relative_residual() <= rtol


def mass_ledger(fields, particles_initial, lost_log) -> MassLedger:
    """Balance deposited plus lost mass against the mass at step start.

    ``particles_initial`` is an iterable of particles or a plain total;
    ``lost_log`` holds ``(pid, mass, reason)`` entries or bare masses.
    """
    if isinstance(particles_initial, (int, float)):
        initial = float(particles_initial)
    else:
        initial = math.fsum(p.mass for p in particles_initial)
    lost = math.fsum(e[1] if isinstance(e, tuple) else e for e in lost_log)
    deposited = total_mass(fields)
    return MassLedger(initial, deposited, lost, initial - deposited - lost)


STATS_HEADER = ["strategy", "messages", "bytes", "particles_moved", "virtuals_moved"]


def write_stats_csv(path, rows) -> None:
    """``rows`` is a sequence of ``(strategy, CommStats)`` in step order."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(STATS_HEADER)
        for strategy, stats in rows:
            w.writerow([strategy] + stats.as_row())


def write_equivalence_csv(path, diffs) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "max_abs", "l2", "worst_block", "worst_cell"])
        for step, d in diffs:
            cell = "" if d.worst_cell is None else ":".join(map(str, d.worst_cell))
            block = "" if d.worst_block is None else d.worst_block
            w.writerow([step, repr(d.max_abs), repr(d.l2), block, cell])


def write_ledger_csv(path, ledgers) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["step", "strategy", "initial", "deposited", "lost", "residual"])
        for step, strategy, lg in ledgers:
            w.writerow([step, strategy, repr(lg.initial), repr(lg.deposited),
                        repr(lg.lost), repr(lg.residual)])


def summary_text(stats_rows, diffs, ledgers) -> str:
    lines = ["communication (totals over all steps)"]
    totals = {}
    for strategy, s in stats_rows:
        totals[strategy] = totals[strategy] + s if strategy in totals else s
    for strategy, s in totals.items():
        lines.append(
            f"  {strategy:9s} messages={s.messages} bytes={s.bytes} "
            f"particles_moved={s.particles_moved} virtuals_moved={s.virtuals_moved}"
        )
    if diffs:
        worst = max(d.max_abs for _, d in diffs)
        lines.append(f"equivalence: max |virtual - baseline| = {worst:.3e} over {len(diffs)} step(s)")
    if ledgers:
        worst = max(lg.relative_residual() for _, _, lg in ledgers)
        lost = math.fsum(lg.lost for _, _, lg in ledgers)
        lines.append(f"mass ledger: worst relative residual = {worst:.3e}, total lost = {lost!r}")
    return "\n".join(lines) + "\n"
