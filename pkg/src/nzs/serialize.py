"""Flat-file formats.

Instance files are self-describing: an 8-byte magic/version tag, an
8-byte little-endian length, a JSON metadata block, then the raw CSR
arrays in little-endian order. One file stores the pre-fee payoff matrix
so a single instance serves a whole fee sweep. Points and reports are
plain JSON.
"""

import json
import struct

import numpy as np

from .games import JointPoint
from .vecmat import SparseMatrix

MAGIC = b"NZSINST1"

_DTYPES = {"int64": "<i8", "float64": "<f8"}


class FormatError(ValueError):
    pass


def write_instance(path, M, meta):
    """Write a payoff matrix and its metadata to one binary file."""
    arrays = [
        ("row_offsets", "int64", M.row_offsets),
        ("col_indices", "int64", M.col_indices),
        ("values", "float64", M.values),
    ]
    header = dict(meta)
    header["format"] = 1
    header["shape"] = [M.n_rows, M.n_cols]
    header["arrays"] = [{"name": n, "dtype": d, "length": len(a)}
                        for n, d, a in arrays]
    blob = json.dumps(header, sort_keys=True,
                      separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, dtype, arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[dtype]).tobytes())


def read_instance(path):
    """Read an instance file; returns (SparseMatrix, metadata dict)."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise FormatError(f"not an instance file (magic {magic!r})")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode("utf-8"))
        data = {}
        for spec in header["arrays"]:
            raw = fh.read(spec["length"] * 8)
            data[spec["name"]] = np.frombuffer(
                raw, dtype=_DTYPES[spec["dtype"]]).copy()
    m, n = header["shape"]
    M = SparseMatrix(m, n, data["row_offsets"], data["col_indices"],
                     data["values"])
    meta = {k: v for k, v in header.items()
            if k not in ("arrays", "format", "shape")}
    return M, meta


def write_point(path, point):
    with open(path, "w") as fh:
        json.dump({"x": list(map(float, point.x)),
                   "y": list(map(float, point.y))}, fh)


def read_point(path):
    with open(path) as fh:
        data = json.load(fh)
    return JointPoint(np.asarray(data["x"], dtype=np.float64),
                      np.asarray(data["y"], dtype=np.float64))


def write_report(path, report_dict):
    with open(path, "w") as fh:
        json.dump(report_dict, fh, indent=2, sort_keys=True)
        fh.write("\n")
