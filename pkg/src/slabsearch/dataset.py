"""Data ingestion and the precomputes every downstream routine reuses.

The raw design matrix is kept as loaded (dense ndarray or CSC sparse) and is
never standardized in place.  Standardized columns are produced on demand from
per-column centers and scales, so sparsity survives and the full centered
matrix never materializes.

Scaling convention: population standard deviation, divisor n (not n - 1).
Every standardized column x_j then satisfies sum(x_j) = 0 and x_j'x_j = n
exactly, which the scoring kernel relies on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse


class DataFormatError(ValueError):
    """Malformed input file: bad shape, unparseable cell, missing value."""


class DegenerateColumnError(ValueError):
    """A covariate column is constant and cannot be standardized."""


# Columns whose population SD falls below this times a scale proxy are
# treated as constant rather than standardized into noise.
_SD_FLOOR = 1e-12


@dataclass(frozen=True)
class Dataset:
    """Raw covariates plus the statistics the scoring kernel needs.

    Attributes
    ----------
    z : ndarray or scipy.sparse.csc_array, shape (n, p)
        Covariates exactly as loaded.
    y : ndarray, shape (n,)
        Response, uncentered.
    z_bar : ndarray, shape (p,)
        Column means of ``z``.
    d_inv : ndarray, shape (p,)
        Reciprocal population SDs; standardized column j is
        ``(z[:, j] - z_bar[j]) * d_inv[j]``.
    y_tilde : ndarray, shape (n,)
        Centered response ``y - y_bar``.
    yty : float
        ``y_tilde @ y_tilde``.
    zeta : ndarray, shape (p,)
        Inner products of every standardized column with ``y_tilde``,
        computed without centering ``z`` (centering is a no-op against a
        centered response).
    columns : tuple of str
        Display names, used in reports and error messages.
    """

    z: object
    y: np.ndarray
    z_bar: np.ndarray
    d_inv: np.ndarray
    y_tilde: np.ndarray
    y_bar: float
    yty: float
    zeta: np.ndarray
    n: int
    p: int
    columns: tuple

    @property
    def is_sparse(self) -> bool:
        return sparse.issparse(self.z)

    @classmethod
    def from_arrays(cls, z, y, columns=None) -> "Dataset":
        """Build a Dataset from in-memory arrays.

        Parameters
        ----------
        z : array_like or sparse, shape (n, p)
        y : array_like, shape (n,)
        columns : sequence of str, optional
            Defaults to ``x1 .. xp``.

        Raises
        ------
        DegenerateColumnError
            If any column is constant (zero population SD).
        ValueError
            On shape mismatch or n < 2.
        """
        if sparse.issparse(z):
            z = sparse.csc_array(z)
            z_values = None
        else:
            z = np.ascontiguousarray(np.asarray(z, dtype=np.float64))
            if z.ndim != 2:
                raise ValueError(f"covariates must be 2-d, got {z.ndim}-d")
            z_values = z
        y = np.asarray(y, dtype=np.float64).ravel()
        n, p = z.shape
        if y.shape[0] != n:
            raise ValueError(f"{n} covariate rows but {len(y)} response values")
        if n < 2:
            raise ValueError("need at least two rows")
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite values")

        if z_values is not None:
            if not np.all(np.isfinite(z_values)):
                raise ValueError("covariates contain non-finite values")
            z_bar = z_values.mean(axis=0)
            var = z_values.var(axis=0)  # population variance, divisor n
            col_scale = np.maximum(np.abs(z_values).max(axis=0), 1.0)
        else:
            if not np.all(np.isfinite(z.data)):
                raise ValueError("covariates contain non-finite values")
            z_bar = z.sum(axis=0) / n
            sumsq = (z * z).sum(axis=0)
            var = sumsq / n - z_bar**2
            col_scale = np.ones(p)
            if z.nnz:
                mags = np.zeros(p)
                np.maximum.at(mags, _csc_cols(z), np.abs(z.data))
                col_scale = np.maximum(mags, 1.0)

        sd = np.sqrt(np.maximum(var, 0.0))
        bad = np.flatnonzero(sd <= _SD_FLOOR * col_scale)
        if bad.size:
            j = int(bad[0])
            raise DegenerateColumnError(
                f"column {j + 1} is constant (sd={sd[j]:.3g}); drop it before fitting"
            )
        d_inv = 1.0 / sd

        y_bar = float(y.mean())
        y_tilde = y - y_bar
        yty = float(y_tilde @ y_tilde)
        # (Z - 1 z_bar')' y_tilde = Z' y_tilde since 1' y_tilde = 0
        zeta = d_inv * (z.T @ y_tilde if z_values is None else z_values.T @ y_tilde)

        if columns is None:
            columns = tuple(f"x{j + 1}" for j in range(p))
        else:
            columns = tuple(str(c) for c in columns)
            if len(columns) != p:
                raise ValueError(f"{len(columns)} column names for {p} columns")
        return cls(
            z=z, y=y, z_bar=np.asarray(z_bar, dtype=np.float64),
            d_inv=d_inv, y_tilde=y_tilde, y_bar=y_bar, yty=yty,
            zeta=np.asarray(zeta, dtype=np.float64), n=n, p=p, columns=columns,
        )


def _csc_cols(z) -> np.ndarray:
    """Column index of every stored entry of a CSC array."""
    return np.repeat(np.arange(z.shape[1]), np.diff(z.indptr))


def standardized_column(ds: Dataset, j: int) -> np.ndarray:
    """Return standardized column j as a dense (n,) vector."""
    if not 0 <= j < ds.p:
        raise IndexError(f"column {j} out of range for p={ds.p}")
    if ds.is_sparse:
        col = ds.z[:, [j]].toarray().ravel()
    else:
        col = ds.z[:, j]
    return (col - ds.z_bar[j]) * ds.d_inv[j]


def standardized_submatrix(ds: Dataset, cols) -> np.ndarray:
    """Dense (n, k) block of standardized columns, in the order given."""
    cols = list(cols)
    if not cols:
        return np.zeros((ds.n, 0))
    if ds.is_sparse:
        block = ds.z[:, cols].toarray()
    else:
        block = ds.z[:, cols].copy()
    block -= ds.z_bar[cols]
    block *= ds.d_inv[cols]
    return np.asfortranarray(block)


# ---------------------------------------------------------------------------
# file loaders


_DELIMS = [",", "\t", ";", " "]


def _sniff_delimiter(sample: str) -> str:
    try:
        return csv.Sniffer().sniff(sample, delimiters="".join(_DELIMS)).delimiter
    except csv.Error:
        first = sample.splitlines()[0] if sample else ""
        for d in _DELIMS:
            if d in first:
                return d
        return ","


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _read_table(path):
    """Parse a delimited numeric table; returns (data, header-or-None)."""
    with open(path, "r", newline="") as fh:
        sample = fh.read(65536)
        fh.seek(0)
        delim = _sniff_delimiter(sample)
        rows = [r for r in csv.reader(fh, delimiter=delim) if r and any(c.strip() for c in r)]
    if not rows:
        raise DataFormatError(f"{path}: empty file")

    header = None
    if any(not _is_float(c.strip()) for c in rows[0]):
        header = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataFormatError(f"{path}: header but no data rows")

    ncol = len(header) if header is not None else len(rows[0])
    data = np.empty((len(rows), ncol))
    for i, row in enumerate(rows):
        if len(row) != ncol:
            raise DataFormatError(
                f"{path}: row {i + (2 if header else 1)} has {len(row)} cells, expected {ncol}"
            )
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.lower() in ("na", "nan"):
                raise DataFormatError(
                    f"{path}: missing value at row {i + (2 if header else 1)}, column {j + 1}"
                )
            try:
                data[i, j] = float(cell)
            except ValueError:
                raise DataFormatError(
                    f"{path}: cannot parse {cell!r} at row "
                    f"{i + (2 if header else 1)}, column {j + 1}"
                ) from None
    return data, header


def load_dense(path, response) -> Dataset:
    """Load a delimited text matrix with the response as one of its columns.

    Delimiter is sniffed from the first lines (comma, tab, semicolon, or
    space).  A header row is assumed when the first row has any cell that
    does not parse as a number; otherwise columns are named ``x1 .. xp``
    positionally (response excluded).

    Parameters
    ----------
    path : str or Path
    response : str or int
        Column name (requires a header) or 1-based column index.

    Raises
    ------
    DataFormatError
        On ragged rows, unparseable or missing cells (reported with 1-based
        row and column), unknown response column, or an empty file.
    DegenerateColumnError
        If a covariate column is constant.
    """
    data, header = _read_table(path)
    ncol = data.shape[1]

    if isinstance(response, str) and not response.lstrip("-").isdigit():
        if header is None:
            raise DataFormatError(
                f"{path}: response named {response!r} but the file has no header"
            )
        try:
            r_idx = header.index(response)
        except ValueError:
            raise DataFormatError(
                f"{path}: no column named {response!r}; have {header}"
            ) from None
    else:
        r_idx = int(response) - 1
        if not 0 <= r_idx < ncol:
            raise DataFormatError(
                f"{path}: response column {response} out of range 1..{ncol}"
            )

    y = data[:, r_idx]
    z = np.delete(data, r_idx, axis=1)
    if header is not None:
        names = [h for k, h in enumerate(header) if k != r_idx]
    else:
        names = None
    return Dataset.from_arrays(z, y, columns=names)


def load_covariates(path):
    """Load a delimited covariates-only matrix (no response column).

    Same parsing rules as ``load_dense``.  Returns ``(matrix, names)`` where
    names is None when the file has no header.
    """
    return _read_table(path)


def load_sparse(path, y_path) -> Dataset:
    """Load a coordinate-format sparse design matrix plus a response file.

    The matrix file starts with a header line ``n p nnz`` followed by nnz
    lines ``row col value`` with 1-based indices.  The response file holds
    one value per line, n of them.

    Raises
    ------
    DataFormatError
        On header/nnz mismatch, out-of-range indices, duplicate (row, col)
        entries, unparseable lines, or n mismatch with the response file.
    DegenerateColumnError
        If a covariate column (including an all-zero one) is constant.
    """
    with open(path, "r") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    head = lines[0].split()
    if len(head) != 3:
        raise DataFormatError(f"{path}: header must be 'n p nnz', got {lines[0]!r}")
    try:
        n, p, nnz = (int(t) for t in head)
    except ValueError:
        raise DataFormatError(f"{path}: non-integer header {lines[0]!r}") from None
    if n < 1 or p < 1 or nnz < 0:
        raise DataFormatError(f"{path}: bad dimensions n={n} p={p} nnz={nnz}")
    if len(lines) - 1 != nnz:
        raise DataFormatError(
            f"{path}: header promises {nnz} entries, file has {len(lines) - 1}"
        )

    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    for k, ln in enumerate(lines[1:]):
        toks = ln.split()
        if len(toks) != 3:
            raise DataFormatError(f"{path}: line {k + 2}: expected 'row col value', got {ln!r}")
        try:
            r, c = int(toks[0]), int(toks[1])
            v = float(toks[2])
        except ValueError:
            raise DataFormatError(f"{path}: line {k + 2}: cannot parse {ln!r}") from None
        if not (1 <= r <= n and 1 <= c <= p):
            raise DataFormatError(
                f"{path}: line {k + 2}: entry ({r}, {c}) outside {n} x {p}"
            )
        rows[k], cols[k], vals[k] = r - 1, c - 1, v

    # coo would silently sum duplicates; reject them instead
    order = np.lexsort((rows, cols))
    rs, cs = rows[order], cols[order]
    dup = np.flatnonzero((rs[1:] == rs[:-1]) & (cs[1:] == cs[:-1]))
    if dup.size:
        k = order[dup[0] + 1]
        raise DataFormatError(
            f"{path}: duplicate entry for (row {rows[k] + 1}, col {cols[k] + 1})"
        )
    z = sparse.csc_array(sparse.coo_array((vals, (rows, cols)), shape=(n, p)))

    with open(y_path, "r") as fh:
        y_lines = [ln.strip() for ln in fh if ln.strip()]
    try:
        y = np.array([float(t) for t in y_lines])
    except ValueError:
        raise DataFormatError(f"{y_path}: non-numeric response line") from None
    if y.shape[0] != n:
        raise DataFormatError(
            f"{y_path}: {len(y)} response values but matrix declares n={n}"
        )
    return Dataset.from_arrays(z, y)


# ---------------------------------------------------------------------------
# optional pre-fit column filters (off unless asked for)


def apply_column_filters(ds: Dataset, min_maf: float | None = None,
                         drop_duplicates: bool = False):
    """Drop low-frequency or exactly duplicated columns before fitting.

    ``min_maf`` applies to 0/1-coded columns only (allele-style coding): a
    column whose minor category frequency ``min(mean, 1 - mean)`` falls below
    the threshold is dropped; non-binary columns always pass.  Duplicate
    removal keeps the first of each group of byte-identical columns.

    Returns
    -------
    (Dataset, ndarray)
        The filtered dataset (same object if nothing was dropped) and the
        0-based original indices of the kept columns.
    """
    keep = np.ones(ds.p, dtype=bool)
    if min_maf is not None:
        for j in range(ds.p):
            if ds.is_sparse:
                raw = ds.z[:, [j]].toarray().ravel()
            else:
                raw = ds.z[:, j]
            u = np.unique(raw)
            if u.size <= 2 and np.all(np.isin(u, (0.0, 1.0))):
                f = raw.mean()
                if min(f, 1.0 - f) < min_maf:
                    keep[j] = False
    if drop_duplicates:
        seen = {}
        for j in range(ds.p):
            if not keep[j]:
                continue
            if ds.is_sparse:
                a, b = ds.z.indptr[j], ds.z.indptr[j + 1]
                key = (ds.z.indices[a:b].tobytes(), ds.z.data[a:b].tobytes())
            else:
                key = np.ascontiguousarray(ds.z[:, j]).tobytes()
            if key in seen:
                keep[j] = False
            else:
                seen[key] = j
    kept = np.flatnonzero(keep)
    if kept.size == ds.p:
        return ds, kept
    z = ds.z[:, kept] if not ds.is_sparse else sparse.csc_array(ds.z[:, kept])
    names = tuple(ds.columns[j] for j in kept)
    return Dataset.from_arrays(z, ds.y, columns=names), kept
