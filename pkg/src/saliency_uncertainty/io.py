"""File formats: SUV1 volumes, fixation CSV, TOML run configs, reports.

SUV1 layout (little-endian)::

    offset  size  field
    0       4     magic b"SUV1"
    4       2     version (u16, currently 1)
    6       1     kind (u8: 0 saliency, 1 uncertainty, 2 fixation, 3 true uncertainty)
    7       12    height, width, frames (3 x u32)
    19      1     scale label (u8, 0 = unspecified)
    20      16    reserved, zero
    36      4*M*N*K  float32 voxels, frame-major, then row-major

Every writer goes through :func:`atomic_write` so a failed run leaves no
partial output behind.
"""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import json
import os
import struct
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib
import tomli_w

from .errors import ConfigError, FormatError, ParseError
from .groundtruth import FixationEvent, FixationEventLog
from .volume import Kind, Volume

__all__ = [
    "MAGIC",
    "HEADER",
    "HEADER_SIZE",
    "atomic_write",
    "encode_volume",
    "decode_volume",
    "read_volume",
    "write_volume",
    "read_header",
    "read_fixation_csv",
    "write_fixation_csv",
    "RunConfig",
    "write_json",
]

MAGIC = b"SUV1"
VERSION = 1
HEADER = struct.Struct("<4sHB3IB16s")
HEADER_SIZE = HEADER.size


@contextlib.contextmanager
def atomic_write(path, mode: str = "wb"):
    """Write to a temp file next to ``path`` and rename it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    kwargs = {} if "b" in mode else {"newline": "", "encoding": "utf-8"}
    try:
        with os.fdopen(fd, mode, **kwargs) as fh:
            yield fh
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def encode_volume(v: Volume, scale_label: int = 0) -> bytes:
    m, n, k = v.shape
    header = HEADER.pack(MAGIC, VERSION, int(v.kind), m, n, k, scale_label, bytes(16))
    payload = np.ascontiguousarray(v.data.transpose(2, 0, 1), dtype="<f4").tobytes()
    return header + payload


def _parse_header(buf: bytes):
    if len(buf) < HEADER_SIZE:
        raise FormatError(f"header truncated: expected {HEADER_SIZE} bytes, got {len(buf)}", offset=len(buf))
    magic, version, kind, m, n, k, label, reserved = HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    try:
        kind = Kind(kind)
    except ValueError:
        raise FormatError(f"unknown volume kind {kind}", offset=6) from None
    if min(m, n, k) == 0:
        raise FormatError(f"empty geometry {m}x{n}x{k}", offset=7)
    if reserved != bytes(16):
        raise FormatError("reserved header bytes must be zero", offset=20)
    return kind, (m, n, k), label


def decode_volume(buf: bytes) -> tuple[Volume, int]:
    """Parse SUV1 bytes into ``(volume, scale_label)``."""
    kind, (m, n, k), label = _parse_header(buf)
    expected = HEADER_SIZE + 4 * m * n * k
    if len(buf) != expected:
        what = "truncated" if len(buf) < expected else "oversized"
        raise FormatError(f"{what} payload: expected {expected} bytes, got {len(buf)}", offset=min(len(buf), expected))
    data = np.frombuffer(buf, dtype="<f4", offset=HEADER_SIZE).reshape(k, m, n)
    bad = ~np.isfinite(data)
    if bad.any():
        flat = int(np.flatnonzero(bad.ravel())[0])
        raise FormatError("non-finite voxel", offset=HEADER_SIZE + 4 * flat)
    try:
        vol = Volume(data.transpose(1, 2, 0), kind)
    except ValueError as exc:
        raise FormatError(f"payload violates {kind.name} invariants: {exc}", offset=HEADER_SIZE) from None
    return vol, label


def read_volume(path) -> Volume:
    return decode_volume(Path(path).read_bytes())[0]


def read_header(path) -> tuple[Kind, tuple[int, int, int], int]:
    with open(path, "rb") as fh:
        return _parse_header(fh.read(HEADER_SIZE))


def write_volume(v: Volume, path, scale_label: int = 0):
    blob = encode_volume(v, scale_label)
    with atomic_write(path) as fh:
        fh.write(blob)


def read_fixation_csv(path, source: tuple[int, int], frames: int | None = None) -> FixationEventLog:
    """Parse ``subject,frame,row,col`` lines; bounds are exclusive.

    When ``frames`` is ``None`` the frame count is one past the largest
    frame index seen.
    """
    height, width = source
    events = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["subject", "frame", "row", "col"]:
            raise ParseError(f"expected header 'subject,frame,row,col', got {header!r}", line=1)
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not f.strip() for f in rec):
                continue
            if len(rec) != 4:
                raise ParseError(f"expected 4 fields, got {len(rec)}", line=lineno)
            subject = rec[0].strip()
            try:
                frame, row, col = (int(f) for f in rec[1:])
            except ValueError:
                raise ParseError(f"non-integer coordinate in {rec!r}", line=lineno) from None
            if not 0 <= row < height:
                raise ParseError(f"row {row} outside [0, {height})", line=lineno)
            if not 0 <= col < width:
                raise ParseError(f"col {col} outside [0, {width})", line=lineno)
            if frame < 0 or (frames is not None and frame >= frames):
                raise ParseError(f"frame {frame} outside [0, {frames})", line=lineno)
            events.append(FixationEvent(subject, frame, row, col))
    if frames is None:
        frames = max((e.frame for e in events), default=-1) + 1
        frames = max(frames, 1)
    return FixationEventLog(height, width, frames, events)


def write_fixation_csv(log: FixationEventLog, path):
    with atomic_write(path, "w") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "frame", "row", "col"])
        for e in log.events:
            writer.writerow([e.subject, e.frame, e.row, e.col])


def write_json(obj, path):
    with atomic_write(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


_METHODS = ("stu", "tu", "su", "fusion", "baseline", "eu")


@dataclass
class RunConfig:
    """One estimator run plus its evaluation settings."""

    method: str = "stu"
    kernel: tuple[int, int, int] = (5, 5, 5)
    scale: str = "1"
    scaling: str = "fixed"
    padding: str = "replicate"
    t1: float = 0.55
    steps: int = 1024
    bins: int = 64
    seed: int = 0
    input: str = ""
    output: str = ""
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        self.kernel = tuple(int(x) for x in self.kernel)
        self.validate()

    def validate(self):
        from .kernels import KernelSpec
        from .volume import ScaleSpec

        if self.method not in _METHODS:
            raise ConfigError(f"unknown method {self.method!r}")
        if len(self.kernel) != 3:
            raise ConfigError(f"kernel needs three extents, got {self.kernel}")
        try:
            KernelSpec(*self.kernel)
            ScaleSpec.parse(self.scale)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.scaling not in ("fixed", "maxnorm"):
            raise ConfigError(f"unknown scaling {self.scaling!r}")
        if self.padding not in ("replicate", "zero"):
            raise ConfigError(f"unknown padding {self.padding!r}")
        if not 0 <= self.t1 <= 1:
            raise ConfigError(f"t1 must lie in [0, 1], got {self.t1}")
        if self.steps < 2 or self.bins < 2:
            raise ConfigError("steps and bins must be >= 2")

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kernel"] = list(self.kernel)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> RunConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def dumps(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def loads(cls, text: str) -> RunConfig:
        try:
            return cls.from_dict(tomllib.loads(text))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None
