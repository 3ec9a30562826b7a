import io
import math
import re

import numpy as np
import pandas as pd

from ScopeSync.exceptions import FormatError

_PARSER_LINE = re.compile(r'line (\d+)')


def format_float(value) -> str:
    """Shortest decimal that reads back to the same 64-bit float."""
    return repr(float(value))


def to_exact_csv(df: pd.DataFrame) -> str:
    """Serialize a DataFrame as CSV text with bit-exact floats.
    Parameters
    ----------
    df : pandas.core.frame.DataFrame
        Integer, float and string columns.
    Returns
    -------
    str
        Header line plus one line per row, ``\\n`` terminated.
    """
    out = pd.DataFrame(index=df.index)
    for column, dtype in df.dtypes.to_dict().items():
        if pd.api.types.is_float_dtype(dtype):
            out[column] = df[column].map(format_float)
        elif pd.api.types.is_integer_dtype(dtype):
            out[column] = df[column].map(lambda v: str(int(v)))
        else:
            out[column] = df[column].astype(str)
    return out.to_csv(index=False, lineterminator='\n')


def read_exact_csv(path, columns) -> pd.DataFrame:
    """Read a CSV written by :func:`to_exact_csv`, every cell kept as text.
    Parameters
    ----------
    path : str or Path
    columns : list
        Exact header expected on line 1.
    Returns
    -------
    pandas.core.frame.DataFrame
        String columns; row ``i`` came from file line ``i + 2``.
    Raises
    ------
    FormatError
        Truncated file, wrong header, or a row with the wrong field count.
    """
    with open(path, 'r', newline='') as handle:
        text = handle.read()
    if not text:
        raise FormatError('empty file', path=path, line=1)
    lines = text.split('\n')
    if lines[-1] != '':
        raise FormatError('truncated row (no line terminator)', path=path, line=len(lines))
    lines = lines[:-1]
    if lines[0].split(',') != list(columns):
        raise FormatError(f'unexpected header {lines[0]!r}', path=path, line=1)
    for number, line in enumerate(lines[1:], start=2):
        if line.count(',') != len(columns) - 1:
            raise FormatError(f'expected {len(columns)} fields, got {line.count(",") + 1}',
                              path=path, line=number)
    try:
        df = pd.read_csv(io.StringIO(text), dtype=str, keep_default_na=False, na_filter=False)
    except pd.errors.ParserError as exc:
        match = _PARSER_LINE.search(str(exc))
        raise FormatError(f'malformed CSV: {exc}', path=path,
                          line=int(match.group(1)) if match else None) from exc
    return df


def _parse_cell(parser, value):
    result = parser(value)
    if isinstance(result, float) and not math.isfinite(result):
        raise ValueError(f'non-finite value {value!r}')
    return result


def parse_column(df: pd.DataFrame, column: str, parser, path=None) -> np.ndarray:
    """Convert one text column, naming the file line of the first bad cell.
    Parameters
    ----------
    df : pandas.core.frame.DataFrame
        As returned by :func:`read_exact_csv`.
    column : str
    parser : callable
        ``float`` or ``int``; Python's parsers are correctly rounded.
    Returns
    -------
    numpy.ndarray
    """
    values = []
    for row, cell in enumerate(df[column].tolist()):
        try:
            values.append(_parse_cell(parser, cell))
        except ValueError as exc:
            raise FormatError(f'bad {column} value {cell!r}', path=path, line=row + 2) from exc
    dtype = np.int64 if parser is int else float
    return np.array(values, dtype=dtype)


def histogram(values, edges, name='value') -> pd.DataFrame:
    """Counts per bin ``[edge_i, edge_(i+1))``; the last bin is open to the right.
    Parameters
    ----------
    values : array-like
    edges : list
        Increasing bin edges; values below the first edge are not counted.
    name : str
        Prefix of the bin bound columns.
    Returns
    -------
    pandas.core.frame.DataFrame
        Columns ``{name}_low``, ``{name}_high`` and ``count``.
    Example
    -------
    >> histogram([3, 20, 400], [0, 15, 30], name='duration_s')
        duration_s_low | duration_s_high | count
                   0.0 |            15.0 |     1
                  15.0 |            30.0 |     1
                  30.0 |             inf |     1
    """
    bins = [float(e) for e in edges] + [math.inf]
    categories = pd.cut(pd.Series(values, dtype=float), bins=bins, right=False)
    counts = categories.value_counts(sort=False).reindex(categories.cat.categories, fill_value=0)
    return pd.DataFrame({f'{name}_low': bins[:-1], f'{name}_high': bins[1:],
                         'count': counts.to_numpy(dtype=np.int64)})
