"""Tabular output for experiment results.

One fixed column set serves both granularities.  Aggregate rows carry one
trial per row with `round` holding the number of rounds the trial used,
`N` and `n` the initial frame parameters, `k_active` every tag that was
ever present, and the count columns whole-trial totals.  Per-round rows
carry one round per row with the parameters that round actually ran
with.  Baseline rounds without a reservation phase report n = 0.
"""
from __future__ import annotations

import csv
import io
import json
import sys
from typing import Dict, List, Optional, Sequence, Union

from .experiment import ExperimentResult, SweepCell

COLUMNS = (
    "trial",
    "round",
    "protocol",
    "N",
    "n",
    "k_active",
    "idle",
    "reserved_true",
    "detected_collisions",
    "undetected_collisions",
    "identified",
    "round_time_us",
)

Row = Dict[str, Union[int, float, str]]


def result_rows(result: ExperimentResult, per_round: bool = False) -> List[Row]:
    """Flatten one experiment into report rows."""
    protocol = result.config.protocol
    if per_round:
        return [
            {
                "trial": r.trial,
                "round": r.round_index,
                "protocol": protocol,
                "N": r.slots,
                "n": r.seq_bits,
                "k_active": r.k_active,
                "idle": r.idle,
                "reserved_true": r.reserved_true,
                "detected_collisions": r.detected_collisions,
                "undetected_collisions": r.undetected_collisions,
                "identified": r.identified,
                "round_time_us": r.time_us,
            }
            for r in result.round_records
        ]
    return [
        {
            "trial": t.trial,
            "round": t.rounds_used,
            "protocol": protocol,
            "N": result.config.frame_slots,
            "n": result.initial_seq_bits,
            "k_active": t.ever_present,
            "idle": t.idle_total,
            "reserved_true": t.reserved_true_total,
            "detected_collisions": t.detected_total,
            "undetected_collisions": t.undetected_total,
            "identified": t.tags_identified,
            "round_time_us": t.total_time_us,
        }
        for t in result.trial_records
    ]


def sweep_rows(cells: Sequence[SweepCell], per_round: bool = False) -> List[Row]:
    """Rows for every cell that ran, in sweep order."""
    rows: List[Row] = []
    for cell in cells:
        if cell.result is not None:
            rows.extend(result_rows(cell.result, per_round=per_round))
    return rows


def render_csv(rows: Sequence[Row]) -> str:
    """CSV text with a header line, always, even for zero rows.

    Floats render via str(), which in Python is the shortest exact
    representation, so output is byte-stable and loses no precision.
    """
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=COLUMNS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render_json(rows: Sequence[Row]) -> str:
    """JSON array of row objects mirroring the CSV schema, full precision."""
    return json.dumps(list(rows), indent=2) + "\n"


def parse_json(text: str) -> List[Row]:
    """Inverse of render_json, for round-trip checks and downstream tools."""
    rows = json.loads(text)
    if not isinstance(rows, list):
        raise ValueError("expected a JSON array of row objects")
    return rows


def write_rows(
    rows: Sequence[Row],
    fmt: str = "csv",
    destination: Optional[str] = None,
) -> None:
    """Emit rows as `fmt` to a path, or to stdout when destination is None or '-'."""
    if fmt == "csv":
        text = render_csv(rows)
    elif fmt == "json":
        text = render_json(rows)
    else:
        raise ValueError(f"format must be csv or json, not {fmt!r}")
    if destination is None or destination == "-":
        sys.stdout.write(text)
    else:
        with open(destination, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
