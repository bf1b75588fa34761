"""Store of previously trained networks keyed by their state fingerprints.

The most similar stored state seeds the next LSG's training; merging keeps
at most K entries while preserving diversity by evicting from the most
similar pair whichever member is better covered by the rest.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .encoding import MovingState, similarity
from .errors import ArgumentError
from .qnet import QNetwork

MAGIC = b"QPATHPRI"
FORMAT_VERSION = 1

DEFAULT_CAPACITY = 10


@dataclass(frozen=True)
class PriorEntry:
    state: MovingState
    params: QNetwork


class PriorStore:
    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ArgumentError("prior store capacity must be >= 1")
        self.capacity = capacity
        self.entries: list[PriorEntry] = []

    def __len__(self):
        return len(self.entries)

    def select(self, state: MovingState) -> QNetwork | None:
        """Copy of the stored network whose state is most similar, or None."""
        if not self.entries:
            return None
        scores = [similarity(state, e.state) for e in self.entries]
        best = int(np.argmax(scores))
        return self.entries[best].params.copy()

    def insert(self, entry: PriorEntry):
        """Append below capacity; otherwise evict per the diversity rule."""
        if len(self.entries) < self.capacity:
            self.entries.append(entry)
            return
        candidates = self.entries + [entry]
        k1 = len(candidates)
        rho = np.zeros((k1, k1))
        for i in range(k1):
            for j in range(i + 1, k1):
                rho[i, j] = rho[j, i] = similarity(candidates[i].state,
                                                   candidates[j].state)
        # Most similar pair; first maximum wins ties (insertion order, the
        # incoming entry last).
        a, b = 0, 1
        best = -np.inf
        for i in range(k1):
            for j in range(i + 1, k1):
                if rho[i, j] > best:
                    best = rho[i, j]
                    a, b = i, j
        others = [x for x in range(k1) if x not in (a, b)]
        rho_a = max((rho[a, x] for x in others), default=-np.inf)
        rho_b = max((rho[b, x] for x in others), default=-np.inf)
        evict = a if rho_a > rho_b else b
        self.entries = [candidates[x] for x in range(k1) if x != evict]

    # -- persistence -----------------------------------------------------------

    def save(self, path):
        if self.entries:
            m = self.entries[0].state.m
        else:
            m = 0
        with open(path, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<4I", FORMAT_VERSION, self.capacity,
                                 len(self.entries), m))
            for entry in self.entries:
                state_bytes = entry.state.channels.astype("<f8").tobytes()
                blob = entry.params.to_bytes()
                fh.write(struct.pack("<2Q", len(state_bytes), len(blob)))
                fh.write(state_bytes)
                fh.write(blob)

    @classmethod
    def load(cls, path) -> "PriorStore":
        with open(path, "rb") as fh:
            magic = fh.read(len(MAGIC))
            if magic != MAGIC:
                raise ArgumentError(f"{path}: not a prior-store file")
            version, capacity, count, m = struct.unpack("<4I", fh.read(16))
            if version != FORMAT_VERSION:
                raise ArgumentError(f"unsupported prior-store version {version}")
            store = cls(capacity)
            for _ in range(count):
                state_len, blob_len = struct.unpack("<2Q", fh.read(16))
                state = np.frombuffer(fh.read(state_len), dtype="<f8")
                state = state.astype(float).reshape(3, m, m)
                net = QNetwork.from_bytes(fh.read(blob_len))
                store.entries.append(PriorEntry(MovingState(state), net))
            return store


def select_prior(store: PriorStore | None, state: MovingState,
                 fresh_factory) -> QNetwork:
    """Stored best match, or a freshly initialized network."""
    if store is not None:
        found = store.select(state)
        if found is not None:
            return found
    return fresh_factory()
