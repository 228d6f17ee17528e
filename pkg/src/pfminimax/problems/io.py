"""LIBSVM text datasets and the two matrix containers (CSV and ``MMX1``)."""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ..core import ArgumentError, ParseError

__all__ = [
    "MMX_MAGIC",
    "Samples",
    "read_libsvm",
    "read_matrix_csv",
    "read_mmx",
    "write_libsvm",
    "write_matrix_csv",
    "write_mmx",
]

MMX_MAGIC = b"MMX1"
_HEADER = struct.Struct("<4sQQ")


@dataclass
class Samples:
    """Parsed classification data.

    ``labels`` are remapped to ``1..k`` in order of first appearance;
    ``label_names[j - 1]`` is the original token of class ``j``.
    """

    features: sp.csr_matrix
    labels: np.ndarray
    label_names: list[str]

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def k(self) -> int:
        return len(self.label_names)


def read_libsvm(path) -> Samples:
    """Parse ``label idx:val ...`` lines with 1-based, strictly increasing indices.

    Blank lines and ``#`` comments are skipped. The feature dimension is the
    largest index seen.
    """
    indptr, indices, data, raw_labels = [0], [], [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            tokens = line.split()
            raw_labels.append(tokens[0])
            prev = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep:
                    raise ParseError(f"expected idx:val, got {tok!r}", lineno)
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(f"bad feature token {tok!r}", lineno) from None
                if idx < 1:
                    raise ParseError(f"feature index {idx} < 1", lineno)
                if idx <= prev:
                    raise ParseError(f"feature index {idx} does not increase", lineno)
                if not np.isfinite(val):
                    raise ParseError(f"non-finite value in {tok!r}", lineno)
                prev = idx
                indices.append(idx - 1)
                data.append(val)
            indptr.append(len(indices))
    names: dict[str, int] = {}
    labels = np.array([names.setdefault(tok, len(names) + 1) for tok in raw_labels], dtype=np.int64)
    d = max(indices) + 1 if indices else 0
    features = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
        shape=(len(raw_labels), d),
    )
    return Samples(features, labels, list(names))


def write_libsvm(path, samples: Samples) -> None:
    """Inverse of :func:`read_libsvm`; values use ``repr`` so they round-trip exactly."""
    F = sp.csr_matrix(samples.features)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(F.shape[0]):
            lo, hi = F.indptr[i], F.indptr[i + 1]
            parts = [samples.label_names[samples.labels[i] - 1]]
            parts += [f"{j + 1}:{float(v)!r}" for j, v in zip(F.indices[lo:hi], F.data[lo:hi])]
            fh.write(" ".join(parts) + "\n")


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ArgumentError("expected a 2-D matrix")
    return M


def write_matrix_csv(path, M) -> None:
    """Header ``rows,cols``, then the two sizes, then one row per line."""
    M = _as_matrix(M)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["rows", "cols"])
        w.writerow(M.shape)
        for row in M:
            w.writerow([repr(float(v)) for v in row])


def read_matrix_csv(path) -> np.ndarray:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 2 or rows[0] != ["rows", "cols"]:
        raise ParseError("missing 'rows,cols' header", 1)
    try:
        m, n = (int(v) for v in rows[1])
    except ValueError:
        raise ParseError("bad size line", 2) from None
    body = rows[2:]
    if len(body) != m:
        raise ParseError(f"expected {m} data rows, found {len(body)}")
    out = np.empty((m, n))
    for i, row in enumerate(body):
        if len(row) != n:
            raise ParseError(f"expected {n} values", i + 3)
        try:
            out[i] = [float(v) for v in row]
        except ValueError:
            raise ParseError("non-numeric value", i + 3) from None
    return out


def write_mmx(path, M) -> None:
    """``MMX1`` container: magic, u64 rows, u64 cols (little-endian), f64 row-major."""
    M = _as_matrix(M)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MMX_MAGIC, *M.shape))
        fh.write(np.ascontiguousarray(M, dtype="<f8").tobytes())


def read_mmx(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ParseError("truncated MMX1 header")
    magic, m, n = _HEADER.unpack_from(raw)
    if magic != MMX_MAGIC:
        raise ParseError(f"bad magic {magic!r}")
    payload = raw[_HEADER.size:]
    if len(payload) != 8 * m * n:
        raise ParseError(f"payload has {len(payload)} bytes, expected {8 * m * n}")
    return np.frombuffer(payload, dtype="<f8").reshape(m, n).astype(np.float64)
