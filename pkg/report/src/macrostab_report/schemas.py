"""CSV schemas for the experiment tables this package knows how to plot.

The producing pipeline documents one header per table; anything else is
rejected up front so a figure can never silently plot the wrong column.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple


class SchemaError(ValueError):
    """Input CSV does not match the documented table schema."""


class FigureKind(enum.Enum):
    SCALING = "SCALING"
    CLUSTER = "CLUSTER"
    PURITY = "PURITY"
    LM_HEATMAP = "LM_HEATMAP"
    CASCADE_HIST = "CASCADE_HIST"


# header of the primary (required) input table for each figure kind
PRIMARY_HEADERS: Dict[FigureKind, List[str]] = {
    FigureKind.SCALING: ["V", "k", "max_fluct", "op_cx_re", "op_cx_im",
                         "op_cy_re", "op_cy_im", "op_cz_re", "op_cz_im"],
    FigureKind.CLUSTER: ["epsilon", "V", "omega"],
    FigureKind.PURITY: ["t", "purity", "stderr"],
    FigureKind.LM_HEATMAP: ["x", "y", "deviation"],
    FigureKind.CASCADE_HIST: ["run", "seed", "count", "converged", "final_max_fluct"],
}

# optional second input (overlay data), by kind
SECONDARY_HEADERS: Dict[FigureKind, List[str]] = {
    FigureKind.PURITY: ["gamma_formula", "gamma_measured", "gamma_stderr", "t_lo", "t_hi"],
}


@dataclass(frozen=True)
class FigureSpec:
    kind: FigureKind
    inputs: Tuple[str, ...]
    output: str

    def __post_init__(self):
        if not self.inputs:
            raise SchemaError("at least one input CSV is required")
        limit = 2 if self.kind in SECONDARY_HEADERS else 1
        if len(self.inputs) > limit:
            raise SchemaError(f"{self.kind.value} takes at most {limit} input(s)")


def read_table(path: str, expected: Sequence[str]) -> List[List[float]]:
    """Read a CSV, insist on the exact expected header, return float rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        if header != list(expected):
            bad = _first_mismatch(header, expected)
            raise SchemaError(f"{path}: unexpected column {bad!r}, "
                              f"expected header {list(expected)}")
        rows = [[float(cell) for cell in row] for row in reader if row]
    if not rows:
        raise SchemaError(f"{path}: table has a header but no rows")
    return rows


def _first_mismatch(header: Sequence[str], expected: Sequence[str]) -> str:
    for got, want in zip(header, expected):
        if got != want:
            return got
    if len(header) > len(expected):
        return header[len(expected)]
    return "<missing>" if len(header) < len(expected) else "<none>"
