"""Typed result tables with deterministic CSV serialization.

Numeric cells are written with Python's repr (shortest round-trip decimal),
rows are kept in sorted primary-key order, lines end with LF, and no field
ever needs quoting.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


def format_cell(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    raise TypeError(f"unsupported cell type {type(v)!r}; split complex values into re/im")


@dataclass(frozen=True, eq=False)
class ResultTable:
    """Ordered rows of typed columns under a named schema."""

    schema: str
    columns: tuple[str, ...]
    rows: list[tuple]

    def __post_init__(self) -> None:
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError(
                    f"row width {len(row)} != column count {len(self.columns)} in {self.schema}"
                )

    def to_csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(format_cell(v) for v in row))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: Path) -> None:
        path.write_text(self.to_csv_text(), encoding="ascii", newline="\n")
