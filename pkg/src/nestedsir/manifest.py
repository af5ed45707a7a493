"""Run manifests: parameters, seed, host and output digests."""
from __future__ import annotations

import hashlib
import json
import platform
import socket
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


@dataclass
class RunManifest:
    version: str
    command: str
    params: dict
    seed: int
    host: dict = field(default_factory=dict)
    wall_time_s: float = 0.0
    outputs: dict = field(default_factory=dict)

    def write(self, path) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True, default=str))


def host_info() -> dict:
    return {"hostname": socket.gethostname(), "python": sys.version.split()[0],
            "platform": platform.platform()}


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0
        return False


def digests(paths) -> dict:
    return {Path(p).name: sha256_file(p) for p in paths}
