"""Enumeration of candidate Gram matrices by bordered extension.

A node is a leading principal minor M_r: symmetric, positive definite,
diagonal n, off-diagonal entries in the admissible set.  Children border
M_r with one more row and column.  Each node is kept only if it is the
lexicographic maximum of its permutation orbit, with the code being the
strict upper triangle read column by column; that makes the code of M_r a
prefix of the code of every child, so the canonical representatives form a
tree.  Nodes whose completion bound falls below d_min^2 are cut.

Floating point is used for pruning only, with a relative slack; leaves
are re-verified in exact integer arithmetic.
"""
from __future__ import annotations

import hashlib
import json
import logging
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import _search_kernel as K
from .bounds import partitions
from .exact import as_int_matrix, det_exact, is_perfect_square

log = logging.getLogger(__name__)

BOUND_POLICIES = {"km": K.POLICY_KM, "sharper": K.POLICY_SHARPER,
                  "partition": K.POLICY_PARTITION, "none": K.POLICY_NONE}


class NotPositiveDefinite(ValueError):
    """A bordered extension that is not positive definite (prune signal)."""


@dataclass(frozen=True)
class AdmissibleSet:
    n: int
    values: tuple  # increasing

    @property
    def descending(self) -> tuple:
        return tuple(reversed(self.values))

    def __contains__(self, k) -> bool:
        return k in self.values

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


def admissible_values(n: int) -> AdmissibleSet:
    """Off-diagonal values allowed in a candidate Gram matrix of odd order n.

    Entries are congruent to n mod 4; +-n would mean equal or opposite rows,
    and n-2 is impossible because k = n (mod 4) excludes it, leaving
    -(n-2) <= k <= n-4.
    """
    if n % 2 == 0:
        raise ValueError("n must be odd")
    if n < 3:
        raise ValueError("n must be at least 3")
    return AdmissibleSet(n, tuple(k for k in range(-(n - 2), n - 3) if (k - n) % 4 == 0))


@dataclass(frozen=True)
class CandidateMinor:
    m: np.ndarray
    det: int

    @property
    def r(self) -> int:
        return self.m.shape[0]

    @classmethod
    def of(cls, m) -> "CandidateMinor":
        m = as_int_matrix(m)
        return cls(m, det_exact(m))


def extend_minor(minor, f, n: int | None = None) -> CandidateMinor:
    """Border M_r with column f and corner n; rejects non-positive-definite results."""
    if not isinstance(minor, CandidateMinor):
        minor = CandidateMinor.of(minor)
    m = minor.m
    r = m.shape[0]
    n = int(m[0, 0]) if n is None else n
    f = [int(x) for x in f]
    if len(f) != r:
        raise ValueError("f must have one entry per row of M_r")
    out = np.zeros((r + 1, r + 1), dtype=np.int64)
    out[:r, :r] = m
    out[:r, r] = f
    out[r, :r] = f
    out[r, r] = n
    det = det_exact(out)
    # M_r is positive definite, so the bordered matrix is iff its det is positive
    if det <= 0 or minor.det <= 0:
        raise NotPositiveDefinite(f"bordered determinant {det} is not positive")
    return CandidateMinor(out, det)


def is_lex_canonical(m) -> bool:
    """Whether m is the lexicographic maximum of its permutation orbit."""
    m = np.ascontiguousarray(as_int_matrix(m), dtype=np.int64)
    return bool(K.is_canonical(m, m.shape[0]))


def is_candidate_minor(m, n: int) -> bool:
    """Symmetric, diagonal n, admissible off-diagonals, positive definite."""
    m = as_int_matrix(m)
    r = m.shape[0]
    if not np.array_equal(m, m.T) or not np.all(np.diagonal(m) == n):
        return False
    phi = set(admissible_values(n).values)
    if any(int(m[i, j]) not in phi for i in range(r) for j in range(i)):
        return False
    return all(det_exact(m[:k, :k]) > 0 for k in range(1, r + 1))


def is_candidate_gram(m, n: int, d_min: int = 1) -> bool:
    """Candidate minor of order n with square determinant >= d_min^2."""
    m = as_int_matrix(m)
    if m.shape[0] != n or not is_candidate_minor(m, n):
        return False
    det = det_exact(m)
    return is_perfect_square(det) and det >= d_min * d_min


@dataclass
class SearchConfig:
    n: int
    d_min: int
    bound: str = "auto"
    checkpoint: str | None = None
    subtree: tuple | None = None  # (i, k): unit i of k, 0-based
    split_depth: int | None = None
    canon_upto: int | None = None
    prefix: tuple | None = None  # start below a given canonical minor

    def __post_init__(self):
        if self.d_min < 1:
            raise ValueError("d_min must be >= 1")
        if self.n % 2 == 0 or self.n < 1:
            raise ValueError("n must be odd and positive")
        if self.bound not in ("auto",) + tuple(BOUND_POLICIES):
            raise ValueError(f"unknown bound policy {self.bound!r}")
        if self.subtree is not None:
            i, k = self.subtree
            if not (k >= 1 and 0 <= i < k):
                raise ValueError("subtree must be (i, k) with 0 <= i < k")

    @property
    def policy(self) -> int:
        if self.bound == "auto":
            # the partition bound with all -1 borders can cut real
            # candidates (see tests), so it is opt-in only
            return K.POLICY_SHARPER if self.n % 4 == 3 else K.POLICY_KM
        return BOUND_POLICIES[self.bound]

    def digest(self) -> str:
        key = json.dumps([self.n, self.d_min, self.bound, self.split_depth,
                          self.canon_upto, self.prefix], sort_keys=True)
        return hashlib.sha256(key.encode()).hexdigest()[:16]


@dataclass
class SearchResult:
    config: SearchConfig
    candidates: list = field(default_factory=list)
    nodes: int = 0
    leaves: int = 0
    per_level: np.ndarray | None = None
    elapsed: float = 0.0
    units: int = 0
    complete: bool = True


def _thresholds(n: int, dmin2: float) -> np.ndarray:
    """Least det(M_r) from which a completion can still reach dmin2.

    A node of order r < n extends to det <= (n-1)^(n-r-1) (2n-r-1) det(M_r)
    by the Kounias-Moyssiadis bound with d* <= det(M_r); this bound is used
    only to size the enumeration radius, the real cut comes from the bound
    policy.
    """
    th = np.zeros(n + 1)
    for r in range(1, n):
        th[r] = dmin2 / (float(n - 1) ** (n - r - 1) * (2 * n - r - 1))
    th[n] = dmin2
    return th


def _partition_tables(n: int):
    p, s = [], []
    start = np.zeros(n + 1, np.int64)
    length = np.zeros(n + 1, np.int64)
    for r in range(1, n):
        start[r] = len(p)
        total = n - r
        for b in partitions(total):
            k = len(b)
            p.append(float((n - 3) ** (total - k) * math.prod(n - 3 + 4 * x for x in b)))
            s.append(sum(x / (n - 3 + 4 * x) for x in b))
        length[r] = len(p) - start[r]
    return (np.array(p or [0.0]), np.array(s or [0.0]), start, length)


class _Runner:
    """Shared arrays for repeated kernel calls with one configuration."""

    def __init__(self, config: SearchConfig):
        self.config = config
        n = config.n
        self.n = n
        self.phi = np.array(admissible_values(n).descending, dtype=np.int64)
        self.dmin2 = float(config.d_min) ** 2
        self.th = _thresholds(n, self.dmin2)
        self.part = _partition_tables(n)
        up = config.canon_upto
        self.canon_upto = max(2, n - 3) if up is None else up
        self.child_cap = 1 << 14
        self.leaf_cap = 1 << 12
        self.per_level = np.zeros((n + 1, 4), np.int64)
        self.nodes = 0
        self.leaves = 0

    def run(self, prefix: np.ndarray, emit_order: int = 0) -> list[np.ndarray]:
        n = self.n
        while True:
            stats = np.zeros(4, np.int64)
            lvl = np.zeros((n + 1, 4), np.int64)
            out = np.zeros((self.leaf_cap, n * n), np.int64)
            cnt = K.search(n, self.phi, np.ascontiguousarray(prefix, dtype=np.int64),
                           self.th, self.dmin2, self.config.policy, True, self.canon_upto,
                           emit_order == 0, *self.part, self.child_cap, out, stats, lvl,
                           emit_order)
            if stats[3] == 1:
                self.child_cap *= 4
                continue
            if stats[3] == 2:
                self.leaf_cap *= 4
                continue
            break
        self.nodes += int(stats[0])
        self.leaves += int(stats[1])
        self.per_level += lvl
        mats = []
        for row in out[:cnt]:
            m = row.reshape(n, n)
            if emit_order:
                m = m[:emit_order, :emit_order]
            mats.append(m.copy())
        return mats


def _exact_leaf(m: np.ndarray, n: int, d_min: int) -> bool:
    det = det_exact(m)
    return det >= d_min * d_min and is_perfect_square(det)


def frontier(config: SearchConfig, depth: int) -> list[np.ndarray]:
    """Canonical nodes of order ``depth`` that survive pruning, in search order."""
    n = config.n
    if not 1 <= depth <= n:
        raise ValueError("depth must be between 1 and n")
    root = np.array([[n]], dtype=np.int64)
    if depth == 1:
        return [root]
    return _Runner(config).run(root, emit_order=depth)


def split_subtrees(config: SearchConfig, depth: int, count: int) -> list[SearchConfig]:
    """Work units covering the search: unit i takes frontier nodes i, i+k, i+2k, ...

    Units with no frontier node are not returned.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if count < 1:
        raise ValueError("count must be >= 1")
    nodes = len(frontier(config, depth)) if depth <= config.n else 0
    units = min(count, nodes)
    return [replace(config, split_depth=depth, subtree=(i, units)) for i in range(units)]


def _default_split(n: int) -> int:
    return min(n, 5)


def _load_checkpoint(path: Path, digest: str) -> dict:
    done = {}
    if not path.exists():
        return done
    with path.open() as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            if rec.get("config") != digest:
                raise ValueError(f"checkpoint {path} belongs to another configuration")
            done[rec["unit"]] = rec
    return done


def search_grams(config: SearchConfig) -> SearchResult:
    """One representative per Gram class of candidates with det >= d_min^2.

    The level-``split_depth`` frontier is searched node by node; with a
    checkpoint path, finished nodes are appended to a JSON-lines file and
    skipped on resume.  The output is sorted and checked for duplicate
    classes through the equivalence module.
    """
    from .equivalence import dedup

    n = config.n
    t0 = time.monotonic()
    res = SearchResult(config)
    if n == 1:
        if config.d_min <= 1:
            res.candidates = [np.array([[1]], dtype=np.int64)]
        return res
    runner = _Runner(config)
    if config.prefix is not None:
        roots = [as_int_matrix(config.prefix)]
    else:
        depth = config.split_depth or _default_split(n)
        depth = min(depth, n)
        roots = [np.array([[n]], dtype=np.int64)] if depth == 1 else \
            runner.run(np.array([[n]], dtype=np.int64), emit_order=depth)
    indices = list(range(len(roots)))
    if config.subtree is not None:
        i, k = config.subtree
        indices = indices[i::k]
    ckpt = Path(config.checkpoint) if config.checkpoint else None
    digest = config.digest()
    done = _load_checkpoint(ckpt, digest) if ckpt else {}
    found: list[np.ndarray] = []
    for idx in indices:
        if idx in done:
            rec = done[idx]
            found.extend(np.array(m, dtype=np.int64) for m in rec["candidates"])
            res.nodes += rec["nodes"]
            continue
        before = runner.nodes
        root = roots[idx]
        if root.shape[0] == n:
            leaves = [root] if _exact_leaf(root, n, config.d_min) else []
        else:
            leaves = runner.run(root)
        leaves = [m for m in leaves if _exact_leaf(m, n, config.d_min)]
        found.extend(leaves)
        if ckpt:
            rec = {"config": digest, "unit": idx, "nodes": runner.nodes - before,
                   "candidates": [m.tolist() for m in leaves]}
            with ckpt.open("a") as fh:
                fh.write(json.dumps(rec) + "\n")
        log.debug("unit %d: %d candidates", idx, len(leaves))
    res.nodes += runner.nodes
    res.leaves = runner.leaves
    res.per_level = runner.per_level
    res.units = len(indices)
    found.sort(key=lambda m: (-det_exact(m), m.tobytes()))
    reps, sizes = dedup(found, "gram")
    if any(s > 1 for s in sizes):
        log.warning("search emitted %d duplicate classes", sum(s - 1 for s in sizes))
    res.candidates = reps
    res.elapsed = time.monotonic() - t0
    return res
