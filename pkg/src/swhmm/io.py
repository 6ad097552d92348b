"""Binary file formats.

Bit matrix (``.bin``)::

    offset size  field
    0      4     magic b"SWBM"
    4      4     version (uint32 LE) = 1
    8      4     rows    (uint32 LE)
    12     4     cols    (uint32 LE)
    16     ...   bits, row-major, packed 8 per byte LSB-first, last byte zero-padded

Compressed stream::

    0      4     magic b"SWCS"
    4      2     version (uint16 LE) = 1
    6      2     reserved, 0
    8      4     block_length N
    12     4     run_length L
    16     4     pilots M
    20     4     K = N - (syndrome length)
    24     8     interleaver seed (uint64 LE)
    32     16    first 16 bytes of SHA-256 over the code's canonical alist text
    48     ...   pilot columns, column-major, packed LSB-first, zero-padded to a byte
    ...    ...   syndromes of columns M..L-1, column-major, packed the same way
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .codec import CompressedStream, FrameLayout
from .errors import FormatError

BITMATRIX_MAGIC = b"SWBM"
BITMATRIX_VERSION = 1
STREAM_MAGIC = b"SWCS"
STREAM_VERSION = 1

_BM_HEADER = struct.Struct("<4sIII")
_CS_HEADER = struct.Struct("<4sHHIIIIQ16s")


def pack_bits(bits: np.ndarray) -> bytes:
    return np.packbits(np.asarray(bits, dtype=np.uint8).reshape(-1), bitorder="little").tobytes()


def unpack_bits(data: bytes, count: int) -> np.ndarray:
    arr = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little", count=count)
    if arr.size != count:
        raise FormatError(f"expected {count} bits, found {arr.size}")
    return arr


def bitmatrix_to_bytes(mat: np.ndarray) -> bytes:
    mat = np.asarray(mat, dtype=np.uint8)
    if mat.ndim != 2:
        raise ValueError("bit matrix must be 2-D")
    if mat.size and mat.max() > 1:
        raise ValueError("bit matrix entries must be 0 or 1")
    rows, cols = mat.shape
    return _BM_HEADER.pack(BITMATRIX_MAGIC, BITMATRIX_VERSION, rows, cols) + pack_bits(mat)


def bitmatrix_from_bytes(data: bytes) -> np.ndarray:
    if len(data) < _BM_HEADER.size:
        raise FormatError("bit matrix file shorter than its header")
    magic, version, rows, cols = _BM_HEADER.unpack_from(data)
    if magic != BITMATRIX_MAGIC:
        raise FormatError(f"bad bit matrix magic {magic!r}")
    if version != BITMATRIX_VERSION:
        raise FormatError(f"unsupported bit matrix version {version}")
    payload = data[_BM_HEADER.size:]
    if len(payload) != (rows * cols + 7) // 8:
        raise FormatError("bit matrix payload size does not match header")
    return unpack_bits(payload, rows * cols).reshape(rows, cols)


def write_bitmatrix(path: str | Path, mat: np.ndarray) -> None:
    Path(path).write_bytes(bitmatrix_to_bytes(mat))


def read_bitmatrix(path: str | Path) -> np.ndarray:
    return bitmatrix_from_bytes(Path(path).read_bytes())


def stream_to_bytes(stream: CompressedStream) -> bytes:
    lay = stream.layout
    N = lay.block_length
    header = _CS_HEADER.pack(STREAM_MAGIC, STREAM_VERSION, 0, N, lay.run_length, lay.pilots,
                             N - stream.syndrome_length, stream.interleaver_seed,
                             stream.code_digest[:16].ljust(16, b"\0"))
    # transposing first makes the flattened order column-major
    return (header + pack_bits(stream.pilot_columns.T)
            + pack_bits(stream.syndromes.T))


def stream_from_bytes(data: bytes) -> CompressedStream:
    if len(data) < _CS_HEADER.size:
        raise FormatError("stream shorter than its header")
    magic, version, _, N, L, M, K, seed, digest = _CS_HEADER.unpack_from(data)
    if magic != STREAM_MAGIC:
        raise FormatError(f"bad stream magic {magic!r}")
    if version != STREAM_VERSION:
        raise FormatError(f"unsupported stream version {version}")
    try:
        layout = FrameLayout(L, N, M)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    m = N - K
    n_pilot = N * M
    n_syn = m * (L - M)
    p_bytes = (n_pilot + 7) // 8
    s_bytes = (n_syn + 7) // 8
    body = data[_CS_HEADER.size:]
    if len(body) != p_bytes + s_bytes:
        raise FormatError("stream payload size does not match header")
    pilots = unpack_bits(body[:p_bytes], n_pilot).reshape(M, N).T.copy()
    syn = unpack_bits(body[p_bytes:], n_syn).reshape(L - M, m).T.copy()
    return CompressedStream(layout=layout, pilot_columns=pilots, syndromes=syn,
                            interleaver_seed=int(seed), code_digest=digest)


def write_stream(path: str | Path, stream: CompressedStream) -> None:
    Path(path).write_bytes(stream_to_bytes(stream))


def read_stream(path: str | Path) -> CompressedStream:
    return stream_from_bytes(Path(path).read_bytes())
