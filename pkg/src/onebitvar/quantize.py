"""Binary measurement streams and the BITVAR1 record file format."""
from __future__ import annotations

import io
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, ZeroThreshold

MAGIC = "BITVAR1"


@dataclass(frozen=True)
class SensorGraph:
    """Undirected connected graph on sensors ``0..d-1``; edges stored as sorted ``(i, j)``, ``i < j``."""

    d: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        canon = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError(f"self-loop on vertex {i}")
            if not (0 <= i < self.d and 0 <= j < self.d):
                raise ValueError(f"edge ({i}, {j}) out of range for d={self.d}")
            canon.add((min(i, j), max(i, j)))
        object.__setattr__(self, "edges", tuple(sorted(canon)))
        if self.d > 1 and len(self._reachable(0)) != self.d:
            raise ValueError("sensor graph is not connected")

    @classmethod
    def complete(cls, d: int) -> "SensorGraph":
        return cls(d, tuple((i, j) for i in range(d) for j in range(i + 1, d)))

    @classmethod
    def star(cls, d: int, center: int = 0) -> "SensorGraph":
        return cls(d, tuple((center, j) for j in range(d) if j != center))

    @classmethod
    def path(cls, d: int) -> "SensorGraph":
        return cls(d, tuple((i, i + 1) for i in range(d - 1)))

    def neighbors(self, v: int) -> list[int]:
        out = [j for i, j in self.edges if i == v] + [i for i, j in self.edges if j == v]
        return sorted(out)

    def _reachable(self, start: int) -> set[int]:
        seen = {start}
        todo = [start]
        while todo:
            v = todo.pop()
            for w in self.neighbors(v):
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
        return seen

    def has_edge(self, i: int, j: int) -> bool:
        return (min(i, j), max(i, j)) in self.edges

    def edge_index(self, i: int, j: int) -> int:
        return self.edges.index((min(i, j), max(i, j)))

    def shortest_path(self, i: int, j: int) -> list[int]:
        """Vertices ``[i, ..., j]`` of a BFS shortest path; ties go to lower vertex ids."""
        prev = {i: None}
        queue = deque([i])
        while queue:
            v = queue.popleft()
            if v == j:
                break
            for w in self.neighbors(v):
                if w not in prev:
                    prev[w] = v
                    queue.append(w)
        path = [j]
        while path[-1] != i:
            path.append(prev[path[-1]])
        return path[::-1]


@dataclass(frozen=True)
class BinaryRecord:
    """Bit streams of one experiment.

    ``x_bits`` is ``(d, T)``; ``q_bits`` is ``(len(edges), T)`` in sorted edge order.
    ``thresholds`` is ``None`` for sign quantization.
    """

    x_bits: np.ndarray
    q_bits: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.uint8))
    edges: tuple[tuple[int, int], ...] = ()
    thresholds: np.ndarray | None = None

    def __post_init__(self):
        x = np.asarray(self.x_bits, dtype=np.uint8)
        if x.ndim != 2:
            raise ValueError("x_bits must be 2-D (d, T)")
        q = np.asarray(self.q_bits, dtype=np.uint8)
        if q.size == 0:
            q = np.zeros((0, x.shape[1]), dtype=np.uint8)
        if q.shape != (len(self.edges), x.shape[1]):
            raise ValueError(f"q_bits shape {q.shape} does not match {len(self.edges)} edges x T")
        if np.any(x > 1) or np.any(q > 1):
            raise ValueError("bits must be 0 or 1")
        c = None
        if self.thresholds is not None:
            c = np.array(self.thresholds, dtype=float)
            if c.shape != (x.shape[0],):
                raise ValueError("one threshold per series required")
            if np.any(c == 0.0):
                raise ZeroThreshold("thresholds must be nonzero")
        for arr in (x, q):
            arr.setflags(write=False)
        object.__setattr__(self, "x_bits", x)
        object.__setattr__(self, "q_bits", q)
        object.__setattr__(self, "edges", tuple((int(i), int(j)) for i, j in self.edges))
        object.__setattr__(self, "thresholds", c)

    @property
    def d(self) -> int:
        return self.x_bits.shape[0]

    @property
    def T(self) -> int:
        return self.x_bits.shape[1]

    @property
    def graph(self) -> SensorGraph | None:
        if not self.edges:
            return None
        return SensorGraph(self.d, self.edges)

    def q_row(self, i: int, j: int) -> np.ndarray:
        """Bits of ``[|z_i| >= |z_j|]``; the reverse pair is the complement."""
        k = self.edges.index((min(i, j), max(i, j)))
        row = self.q_bits[k]
        return row if i < j else 1 - row


def threshold_quantize(traj, c) -> BinaryRecord:
    traj = np.asarray(traj, dtype=float)
    c = np.asarray(c, dtype=float)
    if np.any(c == 0.0):
        raise ZeroThreshold("thresholds must be nonzero")
    return BinaryRecord(x_bits=(traj >= c[:, None]).astype(np.uint8), thresholds=c)


def sign_and_predominance(traj, graph: SensorGraph) -> BinaryRecord:
    traj = np.asarray(traj, dtype=float)
    mag = np.abs(traj)
    q = np.array([mag[i] >= mag[j] for i, j in graph.edges], dtype=np.uint8)
    if q.size == 0:
        q = np.zeros((0, traj.shape[1]), dtype=np.uint8)
    return BinaryRecord(x_bits=(traj >= 0.0).astype(np.uint8), q_bits=q, edges=graph.edges)


def write_record(rec: BinaryRecord, path) -> None:
    Path(path).write_bytes(dumps_record(rec))


def read_record(path) -> BinaryRecord:
    return loads_record(Path(path).read_bytes())


def dumps_record(rec: BinaryRecord) -> bytes:
    """Serialize: three ASCII lines (header, edges, thresholds) then packed bit rows."""
    has_c = rec.thresholds is not None
    buf = io.BytesIO()
    buf.write(f"{MAGIC} {rec.d} {rec.T} {len(rec.edges)} {int(has_c)}\n".encode())
    buf.write((" ".join(f"{i}-{j}" for i, j in rec.edges) + "\n").encode())
    buf.write(((" ".join(repr(float(v)) for v in rec.thresholds) if has_c else "") + "\n").encode())
    rows = np.concatenate([rec.x_bits, rec.q_bits], axis=0)
    buf.write(np.packbits(rows, axis=1, bitorder="little").tobytes())
    return buf.getvalue()


def loads_record(data: bytes) -> BinaryRecord:
    parts = data.split(b"\n", 3)
    if len(parts) < 4:
        raise FormatError("truncated BITVAR1 record")
    head = parts[0].decode("ascii", errors="replace").split()
    if len(head) != 5 or head[0] != MAGIC:
        raise FormatError(f"bad header {parts[0][:40]!r}")
    try:
        d, T, n_edges, has_c = (int(v) for v in head[1:])
        edges = tuple(tuple(int(v) for v in tok.split("-")) for tok in parts[1].decode().split())
        thresholds = [float(v) for v in parts[2].decode().split()] if has_c else None
    except ValueError as exc:
        raise FormatError(f"bad BITVAR1 preamble: {exc}") from exc
    if len(edges) != n_edges or (has_c and len(thresholds) != d):
        raise FormatError("edge or threshold count disagrees with header")
    row_bytes = (T + 7) // 8
    payload = np.frombuffer(parts[3], dtype=np.uint8)
    if payload.size != (d + n_edges) * row_bytes:
        raise FormatError(f"payload has {payload.size} bytes, expected {(d + n_edges) * row_bytes}")
    bits = np.unpackbits(payload.reshape(d + n_edges, row_bytes), axis=1, count=T, bitorder="little")
    return BinaryRecord(
        x_bits=bits[:d],
        q_bits=bits[d:] if n_edges else np.zeros((0, T), dtype=np.uint8),
        edges=edges,
        thresholds=None if thresholds is None else np.array(thresholds),
    )
