"""CSV ingestion and serialization.

Contingency tables travel as UTF-8 CSV with a label header row and a
label column; write→read→write is byte-stable. Result tables use six
significant digits, except structural zeros which are written as a
literal "0" so sparsity survives grep.
"""

import csv
import os
from pathlib import Path

import numpy as np

from .ca import CADecomposition, ContingencyTable, contributions
from .errors import InputError, ParseError
from .sparse import SparseCAModel, sparse_contributions
from .tuning import TuningResult


def _parse_cell(cell: str, line: int, column: int) -> float:
    try:
        value = float(cell)
    except ValueError:
        raise ParseError(f"non-numeric cell {cell!r}", line=line, column=column)
    if not np.isfinite(value):
        raise ParseError(f"non-finite cell {cell!r}", line=line, column=column)
    if value < 0:
        raise ParseError(f"negative cell {cell!r}", line=line, column=column)
    return value


def read_contingency_csv(path, drop_empty: bool = False) -> ContingencyTable:
    """Load a labeled contingency table.

    The header row starts with an empty cell or ``id`` followed by the
    column labels; every other row starts with its row label. Ragged
    rows, non-numeric or negative cells, and duplicate labels raise
    ``ParseError`` with the offending line and column (1-based).
    """
    with open(path, encoding="utf-8-sig", newline="") as handle:
        rows = [(i, row) for i, row in enumerate(csv.reader(handle), start=1) if row]
    if not rows:
        raise ParseError("empty file", line=1, column=1)
    _line, header = rows[0]
    if len(header) < 2:
        raise ParseError("header must hold a label cell and at least one column", line=1, column=1)
    if header[0] not in ("", "id"):
        raise ParseError(
            f"first header cell must be empty or 'id', got {header[0]!r}",
            line=1,
            column=1,
        )
    col_labels = header[1:]
    seen = {}
    for j, label in enumerate(col_labels, start=2):
        if label in seen:
            raise ParseError(f"duplicate column label {label!r}", line=1, column=j)
        seen[label] = j

    row_labels = []
    counts = []
    seen = {}
    for line, row in rows[1:]:
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, got {len(row)}",
                line=line,
                column=min(len(row), len(header)) + 1,
            )
        label = row[0]
        if label in seen:
            raise ParseError(f"duplicate row label {label!r}", line=line, column=1)
        seen[label] = line
        row_labels.append(label)
        counts.append(
            [_parse_cell(cell, line, j) for j, cell in enumerate(row[1:], start=2)]
        )
    if not counts:
        raise ParseError("no data rows", line=1, column=1)
    return ContingencyTable.from_counts(
        np.array(counts, dtype=float),
        row_labels=row_labels,
        col_labels=col_labels,
        drop_empty=drop_empty,
    )


def _format_count(value: float) -> str:
    # integers print without a decimal point; everything else uses the
    # shortest representation that parses back to the same float
    value = float(value)
    if value == int(value) and abs(value) < 1e16:
        return str(int(value))
    return repr(value)


def write_contingency_csv(table: ContingencyTable, path) -> None:
    """Inverse of ``read_contingency_csv``, byte-stable on round trips."""
    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["id", *table.col_labels])
        for label, row in zip(table.row_labels, table.counts):
            writer.writerow([label, *[_format_count(v) for v in row]])


def build_dtm(
    token_counts_path,
    stoplist_path=None,
    min_count: int = 1,
    max_vocab: int | None = None,
    drop_empty: bool = True,
) -> ContingencyTable:
    """Documents-by-tokens table from a (doc_id, token, count) CSV.

    Stoplisted tokens are removed, tokens whose corpus-wide count is
    not strictly above ``min_count`` are dropped, and the vocabulary is
    capped at the ``max_vocab`` most frequent tokens (ties by token).
    Documents keep their order of first appearance; token columns are
    ordered by descending corpus count, then token. Documents left
    empty after filtering are dropped when ``drop_empty`` is set.
    """
    if min_count < 1:
        raise InputError(f"min_count must be at least 1, got {min_count}")
    if max_vocab is not None and max_vocab < 1:
        raise InputError(f"max_vocab must be at least 1, got {max_vocab}")

    stoplist = set()
    if stoplist_path is not None:
        with open(stoplist_path, encoding="utf-8") as handle:
            stoplist = {line.strip() for line in handle if line.strip()}

    with open(token_counts_path, encoding="utf-8-sig", newline="") as handle:
        rows = [(i, row) for i, row in enumerate(csv.reader(handle), start=1) if row]
    if not rows:
        raise ParseError("empty token-counts file", line=1, column=1)
    _line, header = rows[0]
    expected = ["doc_id", "token", "count"]
    if [cell.strip().lower() for cell in header[:3]] != expected:
        raise ParseError(
            f"header must be doc_id,token,count, got {header!r}", line=1, column=1
        )

    doc_order = []
    cells = {}
    totals = {}
    for line, row in rows[1:]:
        if len(row) != 3:
            raise ParseError(
                f"expected 3 cells, got {len(row)}", line=line, column=len(row) + 1
            )
        doc, token, raw = row
        count = _parse_cell(raw, line, 3)
        if token in stoplist:
            continue
        if doc not in cells:
            doc_order.append(doc)
            cells[doc] = {}
        cells[doc][token] = cells[doc].get(token, 0.0) + count
        totals[token] = totals.get(token, 0.0) + count

    kept = [token for token, total in totals.items() if total > min_count]
    kept.sort(key=lambda token: (-totals[token], token))
    if max_vocab is not None:
        kept = kept[:max_vocab]
    if not kept or not doc_order:
        raise InputError("no tokens survive the stoplist and frequency filters")

    counts = np.zeros((len(doc_order), len(kept)))
    index = {token: j for j, token in enumerate(kept)}
    for i, doc in enumerate(doc_order):
        for token, count in cells[doc].items():
            j = index.get(token)
            if j is not None:
                counts[i, j] = count
    return ContingencyTable.from_counts(
        counts, row_labels=doc_order, col_labels=kept, drop_empty=drop_empty
    )


def format_sig(value: float) -> str:
    """Six significant digits; exact zeros become a literal "0"."""
    if value == 0:
        return "0"
    return f"{float(value):.6g}"


def _open_writer(path):
    handle = open(path, "w", encoding="utf-8", newline="")
    return handle, csv.writer(handle, lineterminator="\n")


def write_tables_csv(model, out_dir) -> list:
    """Serialize a fitted model to eigenvalues.csv, rows.csv, cols.csv.

    Accepts either a plain or a sparse fit. The eigenvalue table lists
    each dimension with its share of total inertia and the running
    cumulative share. Row and column tables carry one contribution and
    one coordinate column per dimension; sparse fits prepend the weight
    columns, plain fits omit them (the weights are just rescaled
    coordinates there).
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    sparse = isinstance(model, SparseCAModel)
    if not sparse and not isinstance(model, CADecomposition):
        raise InputError(f"cannot serialize {type(model).__name__}")

    if sparse:
        eigenvalues = model.eigenvalues
        inertia = float(np.sum(model.residuals**2))
        contrib = sparse_contributions(model)
        weights_u = np.column_stack([f.u for f in model.factors])
        weights_v = np.column_stack([f.v for f in model.factors])
        n_dims = len(model.factors)
    else:
        eigenvalues = model.eigenvalues
        inertia = model.total_inertia
        contrib = contributions(model)
        n_dims = model.n_dims
    table = model.table

    paths = []
    path = out_dir / "eigenvalues.csv"
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["dim", "eigenvalue", "percent", "cumulative_percent"])
        running = 0.0
        for k, lam in enumerate(np.asarray(eigenvalues), start=1):
            share = 100.0 * lam / inertia
            running += share
            writer.writerow([k, format_sig(lam), format_sig(share), format_sig(running)])
    paths.append(path)

    for name, labels, coords, contrib_side, weights in (
        ("rows.csv", table.row_labels, model.row_coords, contrib.row_contrib,
         weights_u if sparse else None),
        ("cols.csv", table.col_labels, model.col_coords, contrib.col_contrib,
         weights_v if sparse else None),
    ):
        path = out_dir / name
        handle, writer = _open_writer(path)
        with handle:
            header = ["label"]
            for d in range(1, n_dims + 1):
                if weights is not None:
                    header.append(f"weight_{d}")
                header += [f"contrib_{d}", f"coord_{d}"]
            writer.writerow(header)
            for i, label in enumerate(labels):
                row = [label]
                for d in range(n_dims):
                    if weights is not None:
                        row.append(format_sig(weights[i, d]))
                    row += [format_sig(contrib_side[i, d]), format_sig(coords[i, d])]
                writer.writerow(row)
        paths.append(path)
    return paths


def write_tuning_csv(result: TuningResult, path) -> None:
    """One grid cell per row, with the selected cell flagged."""
    grid = result.grid
    two_d = grid.axis2 is not None
    handle, writer = _open_writer(path)
    with handle:
        head = ["value_u", "value_v"] if two_d else ["value"]
        writer.writerow([*head, "criterion", "nnz_u", "nnz_v", "fit", "selected"])
        if two_d:
            for i, vu in enumerate(grid.axis1):
                for j, vv in enumerate(grid.axis2):
                    selected = int((vu, vv) == tuple(result.optimum))
                    writer.writerow([
                        format_sig(vu), format_sig(vv),
                        format_sig(grid.values[i, j]),
                        int(grid.nnz_u[i, j]), int(grid.nnz_v[i, j]),
                        format_sig(grid.fit[i, j]), selected,
                    ])
        else:
            for i, value in enumerate(grid.axis1):
                writer.writerow([
                    format_sig(value), format_sig(grid.values[i]),
                    int(grid.nnz_u[i]), int(grid.nnz_v[i]),
                    format_sig(grid.fit[i]), int(value == result.optimum),
                ])


def write_clusters_csv(labels, assignment, path) -> None:
    """Row label and cluster id, one line per clustered item."""
    assignment = np.asarray(assignment, dtype=int)
    if len(labels) != assignment.size:
        raise InputError(f"{assignment.size} assignments for {len(labels)} labels")
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["label", "cluster"])
        for label, cluster in zip(labels, assignment):
            writer.writerow([label, int(cluster)])


def write_typicality_csv(table, path) -> None:
    """Ranked typical categories per cluster."""
    handle, writer = _open_writer(path)
    with handle:
        writer.writerow(["cluster", "rank", "category", "z"])
        for i, ranked in enumerate(table.ranked):
            for rank, (category, z) in enumerate(ranked, start=1):
                writer.writerow([table.cluster_labels[i], rank, category, format_sig(z)])
