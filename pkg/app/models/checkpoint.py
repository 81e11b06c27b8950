"""Binary checkpoints for parameter vectors.

Layout: 16-byte header (magic b"RPV1", uint32 version, uint64 length), then
`length` little-endian float64 values.
"""

from pathlib import Path

import numpy as np

from app.errors import CheckpointError

from .spec import ParamVector

MAGIC = b"RPV1"
VERSION = 1
HEADER = np.dtype([("magic", "S4"), ("version", "<u4"), ("length", "<u8")])


def save_params(path, theta: ParamVector) -> Path:
    path = Path(path)
    theta = np.asarray(theta, dtype="<f8").ravel()
    if not np.all(np.isfinite(theta)):
        raise CheckpointError("refusing to checkpoint non-finite parameters")
    header = np.array([(MAGIC, VERSION, theta.shape[0])], dtype=HEADER)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(header.tobytes())
        f.write(theta.tobytes())
    return path


def load_params(path) -> ParamVector:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.itemsize:
        raise CheckpointError(f"{path}: file is shorter than the {HEADER.itemsize}-byte header")
    header = np.frombuffer(raw[: HEADER.itemsize], dtype=HEADER)[0]
    if bytes(header["magic"]) != MAGIC:
        raise CheckpointError(f"{path}: bad magic {bytes(header['magic'])!r}")
    if int(header["version"]) != VERSION:
        raise CheckpointError(f"{path}: unsupported version {int(header['version'])}")
    length = int(header["length"])
    body = raw[HEADER.itemsize:]
    if len(body) != 8 * length:
        raise CheckpointError(f"{path}: expected {length} values, found {len(body) // 8}")
    return np.frombuffer(body, dtype="<f8").astype(np.float64)
