"""CSV reading and writing for results and option chains.

Floats are written with 9 significant digits and ``\\n`` line endings so that
identical inputs always produce identical bytes.
"""
from __future__ import annotations

import csv
import dataclasses
import io
from typing import IO, Iterable, Optional, Sequence

from .errors import ConfigError, DomainError
from .experiments import SIG_DIGITS, Figure1Row, ResultRow
from .replication import OptionQuote

RESULT_COLUMNS = ["scenario", "side", "direct", "direct_se", "replication", "error_ratio"]
CHAIN_COLUMNS = ["kind", "strike", "maturity_years", "price"]


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.{SIG_DIGITS}g}"
    return str(value)


def writer(fh: IO[str]):
    return csv.writer(fh, lineterminator="\n")


def write_result_rows(rows: Iterable[ResultRow], fh: IO[str], timings: bool = False) -> None:
    w = writer(fh)
    w.writerow(RESULT_COLUMNS + (["wall_time_s"] if timings else []))
    for r in rows:
        cells = [r.scenario, r.side, r.direct, r.direct_se, r.replication, r.error_ratio]
        if timings:
            cells.append(r.wall_time)
        w.writerow([fmt(c) for c in cells])


def _opt_float(text: str) -> Optional[float]:
    return None if text == "" else float(text)


def read_result_rows(fh: IO[str]) -> list[ResultRow]:
    reader = csv.DictReader(fh)
    missing = [c for c in RESULT_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise ConfigError(f"result file lacks columns {missing}")
    return [
        ResultRow(
            scenario=rec["scenario"],
            side=rec["side"],
            direct=float(rec["direct"]),
            direct_se=_opt_float(rec["direct_se"]),
            replication=float(rec["replication"]),
            error_ratio=float(rec["error_ratio"]),
            wall_time=_opt_float(rec.get("wall_time_s") or ""),
        )
        for rec in reader
    ]


def write_records(rows: Sequence, fh: IO[str]) -> None:
    """Write flat dataclass rows, one column per field."""
    w = writer(fh)
    if not rows:
        return
    names = [f.name for f in dataclasses.fields(rows[0])]
    w.writerow(names)
    for r in rows:
        w.writerow([fmt(getattr(r, n)) for n in names])


def write_figure1(rows: Sequence[Figure1Row], position_names: Sequence[str], fh: IO[str]) -> None:
    w = writer(fh)
    w.writerow(["sweep", "sigma", "t"] + [f"uil_{n}" for n in position_names])
    for r in rows:
        w.writerow([r.sweep, fmt(r.sigma), fmt(r.t)] + [fmt(v) for v in r.values])


def read_chain(fh: IO[str], source: str = "<chain>") -> tuple[list[OptionQuote], list[str]]:
    """Parse an option chain CSV with header ``kind,strike,maturity_years,price``.

    Rows that cannot be parsed are skipped with a note naming the line;
    unusable prices are left for :func:`replication.validate_chain` to flag.
    """
    reader = csv.reader(fh)
    try:
        header = [h.strip().lower() for h in next(reader)]
    except StopIteration:
        return [], [f"{source}: empty file"]
    missing = [c for c in CHAIN_COLUMNS if c not in header]
    if missing:
        raise ConfigError(f"{source}:1: chain header lacks columns {missing}")
    idx = {c: header.index(c) for c in CHAIN_COLUMNS}
    quotes, notes = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            quotes.append(
                OptionQuote(
                    kind=row[idx["kind"]].strip().lower(),
                    strike=float(row[idx["strike"]]),
                    maturity=float(row[idx["maturity_years"]]),
                    price=float(row[idx["price"]]),
                )
            )
        except (IndexError, ValueError, DomainError) as exc:
            notes.append(f"{source}:{lineno}: skipped row ({exc})")
    return quotes, notes


def write_chain(quotes: Iterable[OptionQuote], fh: IO[str]) -> None:
    w = writer(fh)
    w.writerow(CHAIN_COLUMNS)
    for q in quotes:
        w.writerow([q.kind, repr(q.strike), repr(q.maturity), repr(q.price)])


def to_text(write, *args) -> str:
    buf = io.StringIO()
    write(*args, buf)
    return buf.getvalue()
