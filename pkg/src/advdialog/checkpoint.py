"""``advdialog-ckpt v1`` container: named networks and demo buffers as little-endian float64 blocks.

Layout after the header line, one record per entry::

    meta <n_bytes>\\n<json bytes>
    net <name> <input> <hidden> <output>\\n<W1><b1><W2><b2>
    demo <name> <n_pairs> <state_dim> <n_episodes>\\n<states f8><actions i8><episode ids i8>
    end\\n
"""

from __future__ import annotations

import io
import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .adversarial import DemoBuffer
from .nn import PARAM_NAMES, DenseNet

CKPT_HEADER = b"advdialog-ckpt v1\n"
_F8 = np.dtype("<f8")
_I8 = np.dtype("<i8")


class CheckpointError(ValueError):
    pass


def dumps(nets: Mapping[str, DenseNet] | None = None, demos: Mapping[str, DemoBuffer] | None = None,
          meta: Mapping | None = None) -> bytes:
    buf = io.BytesIO()
    buf.write(CKPT_HEADER)
    if meta:
        blob = json.dumps(meta, sort_keys=True).encode("utf-8")
        buf.write(f"meta {len(blob)}\n".encode())
        buf.write(blob)
    for name, net in sorted((nets or {}).items()):
        if " " in name:
            raise CheckpointError(f"entry names may not contain spaces: {name!r}")
        i, h, o = net.shape
        buf.write(f"net {name} {i} {h} {o}\n".encode())
        for k in PARAM_NAMES:
            buf.write(np.ascontiguousarray(net.params[k], dtype=_F8).tobytes())
    for name, demo in sorted((demos or {}).items()):
        n, d = demo.states.shape
        buf.write(f"demo {name} {n} {d} {demo.n_episodes}\n".encode())
        buf.write(np.ascontiguousarray(demo.states, dtype=_F8).tobytes())
        buf.write(np.ascontiguousarray(demo.actions, dtype=_I8).tobytes())
        buf.write(np.ascontiguousarray(demo.episode_ids, dtype=_I8).tobytes())
    buf.write(b"end\n")
    return buf.getvalue()


def _take(data: bytes, pos: int, n_bytes: int) -> tuple[bytes, int]:
    if pos + n_bytes > len(data):
        raise CheckpointError("truncated checkpoint")
    return data[pos:pos + n_bytes], pos + n_bytes


def loads(data: bytes) -> tuple[dict[str, DenseNet], dict[str, DemoBuffer], dict]:
    if not data.startswith(CKPT_HEADER):
        raise CheckpointError("not an advdialog-ckpt v1 file")
    pos = len(CKPT_HEADER)
    nets: dict[str, DenseNet] = {}
    demos: dict[str, DemoBuffer] = {}
    meta: dict = {}
    while True:
        nl = data.find(b"\n", pos)
        if nl < 0:
            raise CheckpointError("truncated checkpoint (missing end marker)")
        fields = data[pos:nl].decode("ascii").split()
        pos = nl + 1
        if not fields:
            raise CheckpointError("empty record line")
        kind = fields[0]
        if kind == "end":
            break
        if kind == "meta":
            blob, pos = _take(data, pos, int(fields[1]))
            meta = json.loads(blob.decode("utf-8"))
        elif kind == "net":
            name, i, h, o = fields[1], *map(int, fields[2:5])
            net = DenseNet(i, o, h, zero=True)
            for k in PARAM_NAMES:
                shape = net.params[k].shape
                raw, pos = _take(data, pos, int(np.prod(shape)) * 8)
                net.params[k] = np.frombuffer(raw, dtype=_F8).reshape(shape).astype(np.float64)
            nets[name] = net
        elif kind == "demo":
            name, n, d, n_eps = fields[1], *map(int, fields[2:5])
            raw, pos = _take(data, pos, n * d * 8)
            states = np.frombuffer(raw, dtype=_F8).reshape(n, d).astype(np.float64)
            raw, pos = _take(data, pos, n * 8)
            actions = np.frombuffer(raw, dtype=_I8).astype(np.int64)
            raw, pos = _take(data, pos, n * 8)
            ids = np.frombuffer(raw, dtype=_I8).astype(np.int64)
            demos[name] = DemoBuffer(states, actions, ids, n_episodes=n_eps, capacity=n)
        else:
            raise CheckpointError(f"unknown record type {kind!r}")
    return nets, demos, meta


def save(path: str | Path, nets=None, demos=None, meta=None) -> None:
    Path(path).write_bytes(dumps(nets, demos, meta))


def load(path: str | Path):
    return loads(Path(path).read_bytes())
