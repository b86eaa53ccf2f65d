"""Utterance collections: JSONL manifests and the LEMB binary embedding format.

A manifest is one JSON object per line with keys `id`, `duration_sec`, and
`embedding`. The binary format holds embeddings only (magic `LEMB`, version
byte 1, little-endian u32 dim, little-endian u64 count, then count*dim f32
values little-endian, row-major); rows pair with a manifest in file order.
Files store f32, computation is f64 throughout.
"""

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BinaryFormatError, DataError, ManifestError

_MAGIC = b"LEMB"
_VERSION = 1
_HEADER = struct.Struct("<4sBIQ")


@dataclass(eq=False)
class UtteranceRecord:
    """One utterance: opaque id, duration in seconds, embedding vector."""

    id: str
    duration_sec: float
    embedding: np.ndarray

    def __post_init__(self):
        self.embedding = np.asarray(self.embedding, dtype=np.float64)
        self.embedding.setflags(write=False)

    def __eq__(self, other):
        if not isinstance(other, UtteranceRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.duration_sec == other.duration_sec
            and np.array_equal(self.embedding, other.embedding)
        )


@dataclass(eq=False)
class Corpus:
    """Ordered utterance collection with a single embedding dimension.

    dim is 0 only for an empty corpus. Treated as immutable once built.
    """

    dim: int
    records: list = field(default_factory=list)

    def __post_init__(self):
        if self.records and self.dim < 1:
            raise DataError("non-empty corpus needs a positive dimension")
        seen = set()
        for rec in self.records:
            if rec.id in seen:
                raise DataError(f"duplicate id {rec.id!r}")
            seen.add(rec.id)
            if rec.embedding.shape != (self.dim,):
                raise DataError(
                    f"record {rec.id!r} has dimension {rec.embedding.shape[0]}, "
                    f"expected {self.dim}"
                )

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return self.dim == other.dim and self.records == other.records

    def __len__(self):
        return len(self.records)

    def ids(self):
        return [rec.id for rec in self.records]

    def durations(self):
        """id -> duration_sec map."""
        return {rec.id: rec.duration_sec for rec in self.records}

    def embedding_matrix(self):
        """All embeddings stacked as an (n, dim) f64 C-contiguous matrix."""
        if not self.records:
            return np.empty((0, self.dim), dtype=np.float64)
        return np.ascontiguousarray([rec.embedding for rec in self.records])


def _check_duration(value, line_no):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ManifestError(f"line {line_no}: duration_sec must be a number")
    d = float(value)
    if not math.isfinite(d) or d < 0:
        raise ManifestError(f"line {line_no}: duration_sec must be finite and >= 0")
    return d


def _check_id(value, line_no, seen):
    if not isinstance(value, str) or not value:
        raise ManifestError(f"line {line_no}: id must be a non-empty string")
    if value in seen:
        raise ManifestError(f"line {line_no}: duplicate id {value!r}")
    return value


def _parse_line(raw, line_no, required):
    raw = raw.strip()
    if not raw:
        raise ManifestError(f"line {line_no}: blank line")
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"line {line_no}: malformed JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise ManifestError(f"line {line_no}: record must be a JSON object")
    for key in required:
        if key not in obj:
            raise ManifestError(f"line {line_no}: missing key {key!r}")
    return obj


def _check_embedding(value, line_no, dim):
    if not isinstance(value, list) or not value:
        raise ManifestError(f"line {line_no}: embedding must be a non-empty array")
    if dim is not None and len(value) != dim:
        raise ManifestError(
            f"line {line_no}: expected dimension {dim}, got {len(value)}"
        )
    vec = np.empty(len(value), dtype=np.float64)
    for k, comp in enumerate(value):
        if isinstance(comp, bool) or not isinstance(comp, (int, float)):
            raise ManifestError(f"line {line_no}: embedding component {k} not a number")
        vec[k] = float(comp)
    if not np.all(np.isfinite(vec)):
        raise ManifestError(f"line {line_no}: non-finite embedding component")
    return vec


def load_manifest(path):
    """Load a JSONL manifest into a Corpus, validating every record.

    Violations are reported with their 1-based line number. Unknown keys in a
    record are tolerated.
    """
    records = []
    seen = set()
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            obj = _parse_line(raw, line_no, ("id", "duration_sec", "embedding"))
            uid = _check_id(obj["id"], line_no, seen)
            dur = _check_duration(obj["duration_sec"], line_no)
            vec = _check_embedding(obj["embedding"], line_no, dim)
            if dim is None:
                dim = vec.shape[0]
            seen.add(uid)
            records.append(UtteranceRecord(uid, dur, vec))
    return Corpus(dim if dim is not None else 0, records)


def load_binary_embeddings(manifest_path, blob_path):
    """Load a manifest whose embeddings live in a LEMB blob, in file order.

    Manifest rows need only `id` and `duration_sec`; an inline `embedding`
    key, if present, is ignored — the blob is authoritative.
    """
    rows = []
    seen = set()
    with open(manifest_path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            obj = _parse_line(raw, line_no, ("id", "duration_sec"))
            uid = _check_id(obj["id"], line_no, seen)
            dur = _check_duration(obj["duration_sec"], line_no)
            seen.add(uid)
            rows.append((uid, dur))

    with open(blob_path, "rb") as fh:
        header = fh.read(_HEADER.size)
        if len(header) < _HEADER.size:
            raise BinaryFormatError(f"{blob_path}: truncated header")
        magic, version, dim, count = _HEADER.unpack(header)
        if magic != _MAGIC:
            raise BinaryFormatError(f"{blob_path}: bad magic {magic!r}")
        if version != _VERSION:
            raise BinaryFormatError(f"{blob_path}: unsupported version {version}")
        if count != len(rows):
            raise BinaryFormatError(
                f"{blob_path}: header count {count} != manifest rows {len(rows)}"
            )
        if dim < 1 and count > 0:
            raise BinaryFormatError(f"{blob_path}: dimension must be positive")
        payload = fh.read()
    expected = count * dim * 4
    if len(payload) < expected:
        raise BinaryFormatError(
            f"{blob_path}: truncated blob ({len(payload)} bytes, expected {expected})"
        )
    if len(payload) > expected:
        raise BinaryFormatError(
            f"{blob_path}: oversized blob ({len(payload)} bytes, expected {expected})"
        )
    flat = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    if not np.all(np.isfinite(flat)):
        raise BinaryFormatError(f"{blob_path}: non-finite embedding component")
    mat = flat.reshape(count, dim) if count else flat.reshape(0, max(dim, 0))
    records = [
        UtteranceRecord(uid, dur, mat[i]) for i, (uid, dur) in enumerate(rows)
    ]
    return Corpus(int(dim) if count else 0, records)


def write_manifest(corpus, path):
    """Write a Corpus as JSONL; reloading yields an equal Corpus."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "duration_sec": rec.duration_sec,
                        "embedding": [float(v) for v in rec.embedding],
                    }
                )
            )
            fh.write("\n")


def write_binary_embeddings(corpus, manifest_path, blob_path):
    """Write a manifest (id + duration only) and the embeddings as a blob.

    Embeddings are stored f32; a round-trip is bit-exact at f32 precision.
    """
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for rec in corpus.records:
            fh.write(json.dumps({"id": rec.id, "duration_sec": rec.duration_sec}))
            fh.write("\n")
    mat = corpus.embedding_matrix().astype("<f4")
    with open(blob_path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, _VERSION, corpus.dim, len(corpus.records)))
        fh.write(mat.tobytes(order="C"))


def load_durations(path):
    """Load only id -> duration_sec from a manifest, in file order.

    Accepts both manifest flavors (inline embeddings or id+duration rows);
    any embedding key is ignored. Returns (ordered id list, duration dict).
    """
    ids = []
    durations = {}
    seen = set()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            obj = _parse_line(raw, line_no, ("id", "duration_sec"))
            uid = _check_id(obj["id"], line_no, seen)
            dur = _check_duration(obj["duration_sec"], line_no)
            seen.add(uid)
            ids.append(uid)
            durations[uid] = dur
    return ids, durations


def total_duration(records):
    """Exact sum of durations in seconds (order-independent)."""
    return math.fsum(rec.duration_sec for rec in records)


def normalized_copy(corpus):
    """Corpus with every embedding scaled to unit L2 norm."""
    records = []
    for rec in corpus.records:
        norm = float(np.linalg.norm(rec.embedding))
        if norm == 0.0:
            raise DataError(f"record {rec.id!r}: zero embedding cannot be normalized")
        records.append(UtteranceRecord(rec.id, rec.duration_sec, rec.embedding / norm))
    return Corpus(corpus.dim, records)
