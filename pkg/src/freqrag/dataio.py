"""Dataset and knowledge-base ingestion, serialization, and synthesis.

Two interchangeable on-disk formats:

* JSONL: first line is a header object (``{"d_t": int, "d_v": int}`` for
  datasets, ``{"d_k": int}`` for knowledge bases), then one record object per
  line.  Floats are written with Python's shortest round-trip repr.
* Binary: little-endian, float32 vectors:

  - dataset ``QFSE``: magic ``QFSE``, u16 version=1, u32 n_samples, u32 d_t,
    u32 d_v; per record u32 id-length, UTF-8 id, u8 label, d_t f32, d_v f32.
  - knowledge ``QFKB``: magic ``QFKB``, u16 version=1, u32 n_entries, u32 d_k;
    per entry u32 id-length, id, u32 payload-length, UTF-8 payload, d_k f32.

Vectors are float32 on disk and float64 in core.
"""

import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError
from .rng import Rng

DATASET_MAGIC = b"QFSE"
KNOWLEDGE_MAGIC = b"QFKB"
FORMATS = ("jsonl", "binary")


@dataclass(frozen=True)
class Sample:
    id: str
    label: int
    text_emb: np.ndarray
    image_emb: np.ndarray


@dataclass
class SampleSet:
    d_t: int
    d_v: int
    samples: list[Sample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.samples)

    def labels(self) -> list[int]:
        return [s.label for s in self.samples]

    def by_id(self, sample_id: str) -> Sample:
        for s in self.samples:
            if s.id == sample_id:
                return s
        raise DataError(f"unknown sample id {sample_id!r}")

    def validate(self) -> "SampleSet":
        if self.d_t < 1 or self.d_v < 1:
            raise DataError("embedding dimensions must be positive")
        seen: set[str] = set()
        for i, s in enumerate(self.samples):
            if s.label not in (0, 1):
                raise DataError(f"record {i}: label {s.label!r} not in {{0,1}}")
            if s.text_emb.shape != (self.d_t,):
                raise DataError(
                    f"record {i}: text_emb length {s.text_emb.shape[0]} != d_t={self.d_t}"
                )
            if s.image_emb.shape != (self.d_v,):
                raise DataError(
                    f"record {i}: image_emb length {s.image_emb.shape[0]} != d_v={self.d_v}"
                )
            if not (np.isfinite(s.text_emb).all() and np.isfinite(s.image_emb).all()):
                raise DataError(f"record {i}: non-finite embedding value")
            if s.id in seen:
                raise DataError(f"record {i}: duplicate id {s.id!r}")
            seen.add(s.id)
        return self


@dataclass(frozen=True)
class KnowledgeEntry:
    id: str
    key_emb: np.ndarray
    payload: str


@dataclass
class KnowledgeBase:
    d_k: int
    entries: list[KnowledgeEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def validate(self) -> "KnowledgeBase":
        if self.d_k < 1:
            raise DataError("d_k must be positive")
        seen: set[str] = set()
        for i, e in enumerate(self.entries):
            if e.key_emb.shape != (self.d_k,):
                raise DataError(
                    f"entry {i}: key_emb length {e.key_emb.shape[0]} != d_k={self.d_k}"
                )
            if not np.isfinite(e.key_emb).all():
                raise DataError(f"entry {i}: non-finite key value")
            if not e.key_emb.any():
                raise DataError(
                    f"entry {i} ({e.id!r}): all-zero key has no direction to encode"
                )
            if e.id in seen:
                raise DataError(f"entry {i}: duplicate id {e.id!r}")
            seen.add(e.id)
        return self


def _as_f64(values, what: str, index: int) -> np.ndarray:
    try:
        arr = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"record {index}: {what} is not a numeric vector") from exc
    if arr.ndim != 1:
        raise DataError(f"record {index}: {what} is not a flat vector")
    return arr


def _check_format(fmt: str) -> None:
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")


# ---------------------------------------------------------------------------
# JSONL

def _read_jsonl_header(path, expected_keys) -> tuple[dict, list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DataError(f"{path}: empty file, missing header line")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed header line: {exc}") from exc
    if not isinstance(header, dict) or set(expected_keys) - set(header):
        raise DataError(f"{path}: header must declare {expected_keys}")
    return header, lines[1:]


def _parse_record(line: str, index: int):
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"record {index}: malformed JSON: {exc}") from exc
    if not isinstance(rec, dict):
        raise DataError(f"record {index}: expected an object")
    return rec


# ---------------------------------------------------------------------------
# Binary primitives

class _Reader:
    def __init__(self, buf: bytes, path):
        self.buf = buf
        self.pos = 0
        self.path = path

    def take(self, n: int, what: str) -> bytes:
        if self.pos + n > len(self.buf):
            raise DataError(f"{self.path}: truncated file while reading {what}")
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]

    def u8(self, what: str) -> int:
        return self.take(1, what)[0]

    def utf8(self, n: int, what: str) -> str:
        raw = self.take(n, what)
        try:
            return raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"{self.path}: invalid UTF-8 in {what}") from exc

    def f32vec(self, n: int, what: str) -> np.ndarray:
        raw = self.take(4 * n, what)
        return np.frombuffer(raw, dtype="<f4").astype(np.float64)

    def done(self) -> None:
        if self.pos != len(self.buf):
            raise DataError(f"{self.path}: {len(self.buf) - self.pos} trailing bytes")


def _f32_bytes(vec: np.ndarray) -> bytes:
    return np.asarray(vec, dtype="<f4").tobytes()


# ---------------------------------------------------------------------------
# Datasets

def read_dataset(path, fmt: str) -> SampleSet:
    """Parse a dataset file; record order follows the file."""
    _check_format(fmt)
    if fmt == "jsonl":
        header, lines = _read_jsonl_header(path, ("d_t", "d_v"))
        out = SampleSet(d_t=int(header["d_t"]), d_v=int(header["d_v"]))
        for line in lines:
            if not line.strip():
                continue
            i = len(out.samples)
            rec = _parse_record(line, i)
            try:
                sample = Sample(
                    id=str(rec["id"]),
                    label=int(rec["label"]),
                    text_emb=_as_f64(rec["text_emb"], "text_emb", i),
                    image_emb=_as_f64(rec["image_emb"], "image_emb", i),
                )
            except KeyError as exc:
                raise DataError(f"record {i}: missing field {exc}") from exc
            out.samples.append(sample)
        return out.validate()

    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    if r.take(4, "magic") != DATASET_MAGIC:
        raise DataError(f"{path}: bad magic, not a QFSE dataset")
    version = r.u16("version")
    if version != 1:
        raise DataError(f"{path}: unsupported QFSE version {version}")
    n, d_t, d_v = r.u32("n_samples"), r.u32("d_t"), r.u32("d_v")
    out = SampleSet(d_t=d_t, d_v=d_v)
    for i in range(n):
        id_len = r.u32(f"record {i} id length")
        sid = r.utf8(id_len, f"record {i} id")
        label = r.u8(f"record {i} label")
        text = r.f32vec(d_t, f"record {i} text_emb")
        image = r.f32vec(d_v, f"record {i} image_emb")
        out.samples.append(Sample(sid, label, text, image))
    r.done()
    return out.validate()


def write_dataset(sample_set: SampleSet, path, fmt: str) -> None:
    """Serialize a validated, non-empty dataset."""
    _check_format(fmt)
    sample_set.validate()
    if not sample_set.samples:
        raise DataError("refusing to write an empty dataset (training needs samples)")
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"d_t": sample_set.d_t, "d_v": sample_set.d_v}) + "\n")
            for s in sample_set.samples:
                fh.write(
                    json.dumps(
                        {
                            "id": s.id,
                            "label": s.label,
                            "text_emb": s.text_emb.tolist(),
                            "image_emb": s.image_emb.tolist(),
                        }
                    )
                    + "\n"
                )
        return
    with open(path, "wb") as fh:
        fh.write(DATASET_MAGIC)
        fh.write(struct.pack("<HIII", 1, len(sample_set.samples), sample_set.d_t, sample_set.d_v))
        for s in sample_set.samples:
            sid = s.id.encode("utf-8")
            fh.write(struct.pack("<I", len(sid)))
            fh.write(sid)
            fh.write(struct.pack("B", s.label))
            fh.write(_f32_bytes(s.text_emb))
            fh.write(_f32_bytes(s.image_emb))


# ---------------------------------------------------------------------------
# Knowledge bases

def read_knowledge_base(path, fmt: str) -> KnowledgeBase:
    """Parse a knowledge-base file; entry order follows the file."""
    _check_format(fmt)
    if fmt == "jsonl":
        header, lines = _read_jsonl_header(path, ("d_k",))
        out = KnowledgeBase(d_k=int(header["d_k"]))
        for line in lines:
            if not line.strip():
                continue
            i = len(out.entries)
            rec = _parse_record(line, i)
            try:
                entry = KnowledgeEntry(
                    id=str(rec["id"]),
                    key_emb=_as_f64(rec["key_emb"], "key_emb", i),
                    payload=str(rec["payload"]),
                )
            except KeyError as exc:
                raise DataError(f"record {i}: missing field {exc}") from exc
            out.entries.append(entry)
        return out.validate()

    with open(path, "rb") as fh:
        r = _Reader(fh.read(), path)
    if r.take(4, "magic") != KNOWLEDGE_MAGIC:
        raise DataError(f"{path}: bad magic, not a QFKB knowledge base")
    version = r.u16("version")
    if version != 1:
        raise DataError(f"{path}: unsupported QFKB version {version}")
    n, d_k = r.u32("n_entries"), r.u32("d_k")
    out = KnowledgeBase(d_k=d_k)
    for i in range(n):
        id_len = r.u32(f"entry {i} id length")
        eid = r.utf8(id_len, f"entry {i} id")
        payload_len = r.u32(f"entry {i} payload length")
        payload = r.utf8(payload_len, f"entry {i} payload")
        key = r.f32vec(d_k, f"entry {i} key_emb")
        out.entries.append(KnowledgeEntry(eid, key, payload))
    r.done()
    return out.validate()


def write_knowledge_base(kb: KnowledgeBase, path, fmt: str) -> None:
    _check_format(fmt)
    kb.validate()
    if not kb.entries:
        raise DataError("refusing to write an empty knowledge base")
    if fmt == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(json.dumps({"d_k": kb.d_k}) + "\n")
            for e in kb.entries:
                fh.write(
                    json.dumps(
                        {"id": e.id, "key_emb": e.key_emb.tolist(), "payload": e.payload}
                    )
                    + "\n"
                )
        return
    with open(path, "wb") as fh:
        fh.write(KNOWLEDGE_MAGIC)
        fh.write(struct.pack("<HII", 1, len(kb.entries), kb.d_k))
        for e in kb.entries:
            eid = e.id.encode("utf-8")
            payload = e.payload.encode("utf-8")
            fh.write(struct.pack("<I", len(eid)))
            fh.write(eid)
            fh.write(struct.pack("<I", len(payload)))
            fh.write(payload)
            fh.write(_f32_bytes(e.key_emb))


# ---------------------------------------------------------------------------
# Synthetic data

@dataclass(frozen=True)
class SynthConfig:
    n_samples: int = 200
    d_t: int = 768
    d_v: int = 2048
    d_k: int = 768
    n_knowledge: int = 64
    class_separation: float = 8.0
    noise_sigma: float = 1.0
    seed: int = 42

    def validate(self) -> "SynthConfig":
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2 so both classes appear")
        if min(self.d_t, self.d_v, self.d_k) < 2:
            raise ValueError("embedding dimensions must be >= 2")
        if self.n_knowledge < 2:
            raise ValueError("n_knowledge must be >= 2 (one prototype per class)")
        if self.class_separation < 0:
            raise ValueError("class_separation must be non-negative")
        if self.noise_sigma <= 0:
            raise ValueError("noise_sigma must be positive")
        return self


def _orthonormal_pair(rng: Rng, d: int) -> tuple[np.ndarray, np.ndarray]:
    a = np.array(rng.gauss_list(d))
    b = np.array(rng.gauss_list(d))
    u = a / math.sqrt(float(a @ a))
    w = b - (b @ u) * u
    v = w / math.sqrt(float(w @ w))
    return u, v


def synth_dataset(cfg: SynthConfig) -> tuple[SampleSet, KnowledgeBase]:
    """Generate a two-class Gaussian dataset plus a matching knowledge base.

    Per modality the class means sit on two orthogonal directions, each at
    distance class_separation/sqrt(2) from the origin, so the means are
    class_separation apart; samples are mean + noise_sigma * N(0, I).  Labels
    alternate 0,1,0,1,...  The knowledge base holds one prototype key per
    class (the class mean in key space when d_k == d_t, else a fresh
    direction; unit directions when class_separation is 0) followed by
    n_knowledge - 2 Gaussian distractor keys.  All draws come from one seeded
    stream in a fixed order, so output is byte-identical per seed.
    """
    cfg.validate()
    rng = Rng(cfg.seed)
    half_sep = cfg.class_separation / math.sqrt(2.0)

    t_dir0, t_dir1 = _orthonormal_pair(rng, cfg.d_t)
    v_dir0, v_dir1 = _orthonormal_pair(rng, cfg.d_v)
    t_means = (half_sep * t_dir0, half_sep * t_dir1)
    v_means = (half_sep * v_dir0, half_sep * v_dir1)

    if cfg.d_k == cfg.d_t:
        k_dirs = (t_dir0, t_dir1)
        k_means = t_means
    else:
        k_dirs = _orthonormal_pair(rng, cfg.d_k)
        k_means = (half_sep * k_dirs[0], half_sep * k_dirs[1])

    samples = []
    for i in range(cfg.n_samples):
        label = i % 2
        text = t_means[label] + cfg.noise_sigma * np.array(rng.gauss_list(cfg.d_t))
        image = v_means[label] + cfg.noise_sigma * np.array(rng.gauss_list(cfg.d_v))
        samples.append(Sample(f"sample-{i}", label, text, image))

    entries = []
    for c in (0, 1):
        proto = k_means[c] if cfg.class_separation > 0 else k_dirs[c]
        entries.append(KnowledgeEntry(f"proto-{c}", proto, f"prototype of class {c}"))
    for j in range(cfg.n_knowledge - 2):
        key = cfg.noise_sigma * np.array(rng.gauss_list(cfg.d_k))
        entries.append(KnowledgeEntry(f"distractor-{j}", key, f"distractor {j}"))

    sample_set = SampleSet(cfg.d_t, cfg.d_v, samples).validate()
    kb = KnowledgeBase(cfg.d_k, entries).validate()
    return sample_set, kb
