"""Trained-model container and its binary file format.

Layout: one magic line, an 8-byte little-endian manifest length, the
manifest as sorted-key JSON, then every tensor as little-endian float64 in
manifest order.  Nothing time-dependent is stored, so identical training
runs produce identical bytes.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DomainError

MAGIC = b"AIRSCRIPT-CKPT/1\n"
FORMAT_VERSION = 1
KINDS = ("gru1", "gru2", "cnn")


@dataclass(eq=False)
class Checkpoint:
    kind: str
    network: dict  # constructor arguments of the network
    params: dict[str, np.ndarray]  # insertion order is the payload order
    preprocessing: dict
    optimizer: dict = field(default_factory=dict)
    seed: int = 0
    loss_history: list[float] = field(default_factory=list)
    train_fingerprint: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown model kind {self.kind!r}")
        self._net = None

    def manifest(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "network": self.network,
            "preprocessing": self.preprocessing,
            "optimizer": self.optimizer,
            "seed": self.seed,
            "loss_history": [float(v) for v in self.loss_history],
            "train_fingerprint": self.train_fingerprint,
            "tensors": [[name, list(np.shape(a))] for name, a in self.params.items()],
        }

    def to_bytes(self) -> bytes:
        head = json.dumps(self.manifest(), sort_keys=True, separators=(",", ":")).encode()
        payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in self.params.values())
        return MAGIC + struct.pack("<Q", len(head)) + head + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Checkpoint":
        if not blob.startswith(MAGIC):
            raise DomainError("not an airscript checkpoint (bad magic)")
        pos = len(MAGIC)
        if len(blob) < pos + 8:
            raise DomainError("truncated checkpoint header")
        (n,) = struct.unpack_from("<Q", blob, pos)
        pos += 8
        try:
            man = json.loads(blob[pos : pos + n].decode())
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise DomainError(f"corrupt checkpoint manifest: {exc}") from exc
        if man.get("format_version") != FORMAT_VERSION:
            raise DomainError(f"unsupported checkpoint version {man.get('format_version')!r}")
        pos += n
        params = {}
        for name, shape in man["tensors"]:
            count = int(np.prod(shape, dtype=np.int64))
            end = pos + 8 * count
            if end > len(blob):
                raise DomainError(f"checkpoint payload truncated at tensor {name!r}")
            params[name] = np.frombuffer(blob[pos:end], dtype="<f8").astype(float).reshape(shape)
            pos = end
        if pos != len(blob):
            raise DomainError("trailing bytes after checkpoint payload")
        return cls(
            kind=man["kind"],
            network=man["network"],
            params=params,
            preprocessing=man["preprocessing"],
            optimizer=man["optimizer"],
            seed=int(man["seed"]),
            loss_history=list(man["loss_history"]),
            train_fingerprint=man["train_fingerprint"],
        )

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> "Checkpoint":
        return cls.from_bytes(Path(path).read_bytes())

    def network_model(self):
        """The network object matching this checkpoint (built once, inference only)."""
        if self._net is None:
            from .models import build_network

            self._net = build_network(self.kind, self.network)
        return self._net
