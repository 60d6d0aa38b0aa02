"""Binary persistence of :class:`IntervalCounts`.

Layout (all integers little-endian)::

    b"CCL1" u32 version u64 meta_len  meta (UTF-8 JSON, sorted keys)
    3 x string section      u64 n, then n x (u32 len, UTF-8 bytes)   # PAPER, JOURNAL, SUBJECT
    3 x citing section      u64 n, then n x u64 paper id             # T-1, T0, T1
    9 x count block         b"CCL1" u8 level u8 interval u16 0 u64 entries
                            entries x (u64 a, u64 b, u64 freq), sorted
                            u64 n, then n x (u64 element, u64 d), sorted

Blocks are ordered by interval then level, so equal counts give equal bytes.
"""

from __future__ import annotations

import io
import json
import struct
from pathlib import Path

import numpy as np

from .cooccur import IntervalCounts, Level, PairTable, Vocab, pack, unpack
from .corpus import Interval, WindowSpec
from .errors import DataError

MAGIC = b"CCL1"
VERSION = 1
_TRIPLE = np.dtype([("a", "<u8"), ("b", "<u8"), ("f", "<u8")])
_DOUBLE = np.dtype([("e", "<u8"), ("d", "<u8")])


def _u64(n) -> bytes:
    return struct.pack("<Q", int(n))


def dump_counts(counts: IntervalCounts, meta: dict | None = None) -> bytes:
    buf = io.BytesIO()
    header = {"window": counts.window.to_dict(), "options": counts.options, "meta": meta or {}}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    buf.write(MAGIC + struct.pack("<I", VERSION) + _u64(len(blob)) + blob)
    for level in Level:
        strings = counts.vocabs[level].strings
        buf.write(_u64(len(strings)))
        for s in strings:
            b = s.encode("utf-8")
            buf.write(struct.pack("<I", len(b)) + b)
    for interval in Interval:
        ids = np.asarray(counts.citing[interval], dtype="<u8")
        buf.write(_u64(len(ids)) + ids.tobytes())
    for interval in Interval:
        for level in Level:
            table = counts.pairs[interval, level]
            rec = np.empty(len(table), dtype=_TRIPLE)
            rec["a"], rec["b"] = unpack(table.keys)
            rec["f"] = table.freq
            buf.write(MAGIC + struct.pack("<BBH", level, interval, 0) + _u64(len(rec)) + rec.tobytes())
            d = counts.cites[interval, level]
            nz = np.flatnonzero(d)
            el = np.empty(len(nz), dtype=_DOUBLE)
            el["e"], el["d"] = nz, d[nz]
            buf.write(_u64(len(el)) + el.tobytes())
    return buf.getvalue()


def save_counts(counts: IntervalCounts, path, meta: dict | None = None) -> None:
    Path(path).write_bytes(dump_counts(counts, meta))


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.pos = 0

    def take(self, n: int) -> memoryview:
        if self.pos + n > len(self.data):
            raise DataError("counts cache truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]


def loads_counts(data: bytes) -> tuple[IntervalCounts, dict]:
    """Parse cache bytes; returns the counts and the stored user metadata."""
    r = _Reader(data)
    if bytes(r.take(4)) != MAGIC:
        raise DataError("not a counts cache (bad magic)")
    (version,) = struct.unpack("<I", r.take(4))
    if version != VERSION:
        raise DataError(f"unsupported counts cache version {version}")
    try:
        header = json.loads(bytes(r.take(r.u64())).decode())
        window = WindowSpec(**header["window"])
    except (ValueError, KeyError, TypeError) as exc:
        raise DataError(f"corrupt counts cache header ({exc})") from None
    vocabs = {}
    for level in Level:
        n = r.u64()
        strings = []
        for _ in range(n):
            (ln,) = struct.unpack("<I", r.take(4))
            strings.append(bytes(r.take(ln)).decode("utf-8"))
        vocabs[level] = Vocab(strings)
    counts = IntervalCounts.empty(window, vocabs, header.get("options"))
    for interval in Interval:
        n = r.u64()
        counts.citing[interval] = np.frombuffer(r.take(8 * n), dtype="<u8").astype(np.int64)
    for interval in Interval:
        for level in Level:
            if bytes(r.take(4)) != MAGIC:
                raise DataError("corrupt counts cache (bad block magic)")
            lv, iv, _ = struct.unpack("<BBH", r.take(4))
            if (lv, iv) != (level, interval):
                raise DataError("corrupt counts cache (blocks out of order)")
            n = r.u64()
            rec = np.frombuffer(r.take(_TRIPLE.itemsize * n), dtype=_TRIPLE)
            counts.pairs[interval, level] = PairTable(pack(rec["a"], rec["b"]), rec["f"].astype(np.int64))
            n = r.u64()
            el = np.frombuffer(r.take(_DOUBLE.itemsize * n), dtype=_DOUBLE)
            d = np.zeros(len(vocabs[level]), dtype=np.int64)
            d[el["e"].astype(np.int64)] = el["d"].astype(np.int64)
            counts.cites[interval, level] = d
    if r.pos != len(r.data):
        raise DataError("trailing bytes in counts cache")
    return counts, header.get("meta", {})


def load_counts(path) -> tuple[IntervalCounts, dict]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"counts cache not found: {path}")
    return loads_counts(path.read_bytes())
