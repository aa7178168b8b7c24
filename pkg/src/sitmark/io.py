"""CSV readers and writers.

All CSVs are comma separated with a header row, ``.`` decimal point, ISO
dates and floats written with ``repr`` so output is byte-reproducible.
Files are written to a temporary sibling and renamed into place.
"""

import csv
from datetime import date
import io
import math
import os
import tempfile

from .errors import ValidationError
from .index import ProviderQuote

QUOTE_COLUMNS = ("provider_id", "raw_price", "capability_score", "volume", "mmlu", "humaneval", "gsm8k")


def atomic_write_text(path, text: str) -> None:
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    if isinstance(v, date):
        return v.isoformat()
    if hasattr(v, "item"):  # numpy scalar
        return _cell(v.item())
    return str(v)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    atomic_write_text(path, csv_text(header, rows))


def ensemble_rows(ensemble, max_paths=None):
    """Rows ``(path_id, time, price, cumulative_jumps)``."""
    n = ensemble.n_paths if max_paths is None else min(max_paths, ensemble.n_paths)
    for i in range(n):
        cum = 0
        for k, t in enumerate(ensemble.times):
            if k:
                cum += int(ensemble.jump_marks[i, k - 1])
            yield (i, float(t), math.exp(float(ensemble.log_prices[i, k])), cum)


def write_ensemble_csv(path, ensemble, max_paths=None) -> None:
    write_csv(path, ("path_id", "time", "price", "cumulative_jumps"), ensemble_rows(ensemble, max_paths))


def write_fan_chart_csv(path, stats) -> None:
    write_csv(path, ("time", "mean", "p5", "p25", "p75", "p95"), stats.fan_chart_rows())


def write_curve_csv(path, quotes) -> None:
    write_csv(path, ("maturity", "price"), ((q.T, q.price) for q in quotes))


def write_hedge_report_csv(path, report) -> None:
    row = report.as_row()
    write_csv(path, tuple(row), [tuple(row.values())])


def write_ledger_csv(path, rows) -> None:
    write_csv(path, ("date", "account", "position", "settle", "cashflow", "balance", "margin_call"), rows)


def index_row(snapshot):
    ids = sorted(snapshot.weights)
    header = ("timestamp", "tpi") + tuple(f"weight_{i}" for i in ids)
    return header, (snapshot.timestamp or "", snapshot.tpi) + tuple(snapshot.weights[i] for i in ids)


def read_quotes_csv(path):
    """Read provider quotes (columns ``QUOTE_COLUMNS``; extra columns are ignored)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in QUOTE_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValidationError(f"{path}: missing column(s) {missing}")
        quotes = []
        for line, rec in enumerate(reader, 2):
            try:
                quotes.append(
                    ProviderQuote(
                        provider_id=rec["provider_id"].strip(),
                        raw_price=float(rec["raw_price"]),
                        capability_score=float(rec["capability_score"]),
                        volume=float(rec["volume"]),
                        benchmarks={
                            "MMLU": float(rec["mmlu"]),
                            "HumanEval": float(rec["humaneval"]),
                            "GSM8K": float(rec["gsm8k"]),
                        },
                    )
                )
            except ValueError as exc:
                raise ValidationError(f"{path}:{line}: {exc}") from None
    if not quotes:
        raise ValidationError(f"{path}: no quotes")
    return quotes
