"""
ESRI ASCII grid reading and writing.

A header of "key value" lines (ncols, nrows, xllcorner or xllcenter,
yllcorner or yllcenter, cellsize, NODATA_value) is followed by nrows lines of
whitespace separated values, top row first. Cells equal to the NODATA value,
the literal token NODATA or NaN are missing.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from dgc.grid import RasterGrid

logger = logging.getLogger(__name__)

DEFAULT_NODATA = -9999.0
_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "xllcenter", "yllcorner", "yllcenter", "cellsize", "nodata_value")
_REQUIRED = ("ncols", "nrows")
# body token marking a missing cell besides the numeric NODATA value
NODATA_TOKEN = "nodata"


class RasterParseError(ValueError):
    """Malformed raster file; line and column are 1-based when known"""

    def __init__(self, message: str, path: Union[str, Path, None] = None,
                 line: Optional[int] = None, column: Optional[int] = None):
        self.message = message
        self.path = str(path) if path is not None else None
        self.line = line
        self.column = column
        where = ""
        if self.path:
            where = self.path
            if line is not None:
                where += f":{line}"
                if column is not None:
                    where += f":{column}"
            where += ": "
        super().__init__(f"{where}{message}")

    def __reduce__(self):
        return (self.__class__, (self.message, self.path, self.line, self.column))


def _parse_header(lines: List[str], path) -> Tuple[Dict[str, float], int]:
    header: Dict[str, float] = {}
    i = 0
    while i < len(lines):
        tokens = lines[i].split()
        if not tokens:
            i += 1
            continue
        key = tokens[0].lower()
        if key not in _HEADER_KEYS:
            break
        if len(tokens) != 2:
            raise RasterParseError(f"header line for {tokens[0]} must hold one value", path, i + 1)
        try:
            header[key] = float(tokens[1])
        except ValueError:
            raise RasterParseError(f"invalid header value {tokens[1]!r}", path, i + 1, 2) from None
        i += 1

    for key in _REQUIRED:
        if key not in header:
            raise RasterParseError(f"missing header field {key}", path, i + 1)
        if header[key] != int(header[key]) or header[key] < 1:
            raise RasterParseError(f"{key} must be a positive integer, got {header[key]}", path)
    return header, i


def read_raster(path: Union[str, Path]) -> RasterGrid:
    """
    Read an ESRI ASCII grid.

    Returns:
        RasterGrid whose mask is False at NODATA cells

    Raises:
        RasterParseError: malformed header, wrong cell count or an unreadable number
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        lines = f.read().splitlines()

    header, body_start = _parse_header(lines, path)
    n_cols, n_rows = int(header["ncols"]), int(header["nrows"])
    nodata = header.get("nodata_value", DEFAULT_NODATA)
    cellsize = header.get("cellsize")

    xll = header.get("xllcorner")
    yll = header.get("yllcorner")
    # centre references shift by half a cell
    if xll is None and "xllcenter" in header:
        xll = header["xllcenter"] - 0.5 * (cellsize or 1.0)
    if yll is None and "yllcenter" in header:
        yll = header["yllcenter"] - 0.5 * (cellsize or 1.0)

    values = np.empty(n_rows * n_cols, dtype=np.float64)
    count = 0
    for line_no in range(body_start, len(lines)):
        tokens = lines[line_no].split()
        for col_no, token in enumerate(tokens, start=1):
            if count >= values.size:
                raise RasterParseError(
                    f"more than {n_rows}x{n_cols} = {values.size} cells", path, line_no + 1, col_no
                )
            if token.lower() == NODATA_TOKEN:
                values[count] = np.nan
                count += 1
                continue
            try:
                values[count] = float(token)
            except ValueError:
                raise RasterParseError(f"unreadable number {token!r}", path, line_no + 1, col_no) from None
            count += 1
    if count != values.size:
        raise RasterParseError(f"expected {values.size} cells, found {count}", path, len(lines))

    values = values.reshape(n_rows, n_cols)
    mask = (values != nodata) & np.isfinite(values)
    logger.info(f"Read {path}: {n_rows}x{n_cols}, {int((~mask).sum())} missing cells")
    return RasterGrid(values, mask, xllcorner=xll or 0.0, yllcorner=yll or 0.0, cellsize=cellsize)


def _format_value(value: float) -> str:
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def _pick_nodata(grid: RasterGrid, nodata: float) -> float:
    sampled = grid.sampled_values
    candidate = nodata
    while np.any(sampled == candidate):
        candidate = candidate * 10 if candidate < 0 else -candidate - 1
    if candidate != nodata:
        logger.warning(f"NODATA value {nodata} collides with data, using {candidate}")
    return candidate


def write_raster(path: Union[str, Path], grid: RasterGrid, nodata: float = DEFAULT_NODATA) -> float:
    """
    Write an ESRI ASCII grid; missing cells get the NODATA value.

    Values are written with the shortest representation that reads back
    exactly.

    Returns:
        The NODATA value actually written, changed if it collides with data
    """
    nodata = _pick_nodata(grid, nodata)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    lines = [
        f"ncols {grid.n_cols}",
        f"nrows {grid.n_rows}",
        f"xllcorner {_format_value(grid.xllcorner)}",
        f"yllcorner {_format_value(grid.yllcorner)}",
        f"cellsize {_format_value(grid.cellsize if grid.cellsize is not None else 1.0)}",
        f"NODATA_value {_format_value(nodata)}",
    ]
    body = np.where(grid.mask, grid.values, nodata)
    for row in body:
        lines.append(" ".join(_format_value(v) for v in row))

    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
    logger.debug(f"Wrote {path}")
    return nodata
