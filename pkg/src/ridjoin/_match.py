"""Equi-key matching kernels shared by the executor and the cardinality
oracle.

Single int64 keys take a sorted-array path: build keys are argsorted once
and probes binary-search their group range, so matching stays inside numpy.
Composite and string keys fall back to a Python dict of position lists.
Both paths emit (probe_position, build_position) pairs probe-major with
build positions ascending inside a group, which keeps every downstream
result deterministic.
"""

from __future__ import annotations

import numpy as np


def expand_ranges(starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Concatenate [s, s+c) ranges: the CSR gather primitive."""
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    shifted = np.repeat(counts.cumsum() - counts, counts)
    return np.repeat(starts, counts) + np.arange(total, dtype=np.int64) - shifted


class KeyIndex:
    """Associative map from key values to the build rows holding them."""

    def __init__(self, keys):
        if isinstance(keys, np.ndarray) and keys.dtype != object:
            self._order = np.argsort(keys, kind="stable").astype(np.int64)
            self._sorted = keys[self._order]
            self._groups = None
        else:
            groups: dict = {}
            for pos, key in enumerate(keys):
                groups.setdefault(key, []).append(pos)
            self._groups = {k: np.asarray(v, dtype=np.int64) for k, v in groups.items()}
            self._order = None
            self._sorted = None

    def lookup(self, probe_keys) -> tuple[np.ndarray, np.ndarray]:
        """All matches as (probe positions, build positions)."""
        if self._groups is None:
            probe_keys = np.asarray(probe_keys)
            lo = np.searchsorted(self._sorted, probe_keys, side="left")
            hi = np.searchsorted(self._sorted, probe_keys, side="right")
            counts = hi - lo
            probe_idx = np.repeat(np.arange(len(probe_keys), dtype=np.int64), counts)
            build_idx = self._order[expand_ranges(lo, counts)]
            return probe_idx, build_idx
        probe_parts: list[np.ndarray] = []
        build_parts: list[np.ndarray] = []
        for i, key in enumerate(probe_keys):
            hit = self._groups.get(key)
            if hit is not None:
                probe_parts.append(np.full(len(hit), i, dtype=np.int64))
                build_parts.append(hit)
        if not probe_parts:
            empty = np.empty(0, dtype=np.int64)
            return empty, empty
        return np.concatenate(probe_parts), np.concatenate(build_parts)


def encode_keys(columns: list) -> object:
    """Key encoding for KeyIndex: raw array for one int64 column, tuples
    otherwise."""
    if len(columns) == 1:
        col = columns[0]
        if isinstance(col, np.ndarray) and col.dtype != object:
            return col
        return list(col)
    return list(zip(*columns))
