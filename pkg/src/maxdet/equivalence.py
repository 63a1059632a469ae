"""Canonical forms for Gram equivalence (G ~ P G P^T) and Hadamard
equivalence (R ~ P R Q), P and Q signed permutation matrices.

Both relations are turned into isomorphism of edge-coloured complete
graphs in which every index i is split into a pair of vertices (i, +) and
(i, -).  A pair link colour forces automorphisms to move pairs as units,
and the colour s*t*a_ij between (i, s) and (j, t) makes swapping the two
vertices of a pair act as a sign change.  The graphs are labelled
canonically by partition refinement with individualization and
backtracking, pruned by the automorphisms discovered along the way.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exact import as_int_matrix, char_poly, gram


def _dense(values: np.ndarray) -> np.ndarray:
    """Relabel values by rank; invariant under permutations of positions."""
    _, inv = np.unique(values, return_inverse=True)
    return inv.reshape(values.shape)


def _dense_rows(rows: np.ndarray) -> np.ndarray:
    _, inv = np.unique(rows, axis=0, return_inverse=True)
    return inv.reshape(-1)


class _Labeler:
    """Canonical labelling of a complete graph with coloured edges.

    ``adj`` is an N x N symmetric array of small non-negative integer
    codes; its diagonal holds the vertex colours.
    """

    def __init__(self, adj: np.ndarray):
        self.adj = np.ascontiguousarray(adj, dtype=np.int64)
        self.n = adj.shape[0]
        self.ncodes = int(adj.max()) + 1 if adj.size else 1
        self.best_key = None
        self.best_order = None
        self.first_key = None
        self.first_order = None
        self.first_path: list[int] = []
        self.generators: list[np.ndarray] = []
        self.leaves = 0

    def refine(self, colors: np.ndarray) -> np.ndarray:
        ncells = int(colors.max()) + 1
        while True:
            # each vertex is described by its colour and the sorted multiset
            # of (edge code, neighbour colour) pairs
            mixed = self.adj * (self.n + 1) + colors[None, :]
            mixed.sort(axis=1)
            sig = np.concatenate([colors[:, None], mixed], axis=1)
            new = _dense_rows(sig)
            k = int(new.max()) + 1
            if k == ncells:
                return new
            colors, ncells = new, k

    def _orbit_reps(self, fixed: list[int], cell: np.ndarray) -> list[int]:
        """One vertex of ``cell`` per orbit of the automorphisms fixing ``fixed``."""
        gens = [g for g in self.generators if all(g[v] == v for v in fixed)]
        if not gens:
            return list(cell)
        parent = list(range(self.n))

        def find(a):
            while parent[a] != a:
                parent[a] = parent[parent[a]]
                a = parent[a]
            return a

        for g in gens:
            for v in range(self.n):
                a, b = find(v), find(int(g[v]))
                if a != b:
                    parent[max(a, b)] = min(a, b)
        seen, reps = set(), []
        for v in cell:
            r = find(int(v))
            if r not in seen:
                seen.add(r)
                reps.append(int(v))
        return reps

    def _leaf(self, colors: np.ndarray, fixed: list[int]):
        """Record a leaf; returns the depth to jump back to, if any."""
        self.leaves += 1
        order = np.argsort(colors, kind="stable")
        key = self.adj[np.ix_(order, order)].tobytes()
        if self.first_key is None:
            self.first_key, self.first_order, self.first_path = key, order, list(fixed)
            self.best_key, self.best_order = key, order
            return None
        for ref_key, ref_order in ((self.first_key, self.first_order),
                                   (self.best_key, self.best_order)):
            if key == ref_key:
                g = np.empty(self.n, dtype=np.int64)
                g[ref_order] = order
                if not np.array_equal(g, np.arange(self.n)):
                    self.generators.append(g)
                if ref_key is self.first_key:
                    # the automorphism carries the child where this path
                    # leaves the first path onto an explored subtree
                    common = 0
                    for a, b in zip(fixed, self.first_path):
                        if a != b:
                            break
                        common += 1
                    return common
                return None
        if key > self.best_key:
            self.best_key, self.best_order = key, order
        return None

    def _search(self, colors: np.ndarray, fixed: list[int]):
        counts = np.bincount(colors)
        if counts.max() == 1:
            return self._leaf(colors, fixed)
        depth = len(fixed)
        # target: first non-singleton cell of minimum size
        sizes = np.where(counts > 1, counts, self.n + 1)
        target = int(np.argmin(sizes))
        cell = np.flatnonzero(colors == target)
        explored: list[int] = []
        for v in cell:
            v = int(v)
            if explored:
                reps = self._orbit_reps(fixed, np.array(explored + [v]))
                if v not in reps:
                    continue
            explored.append(v)
            ind = colors * 2 + 1
            ind[v] -= 1
            child = self.refine(_dense(ind))
            jump = self._search(child, fixed + [v])
            if jump is not None and jump < depth:
                return jump
        return None

    def run(self):
        colors = self.refine(_dense(np.diagonal(self.adj).copy()))
        self._search(colors, [])
        return self.best_order


def _label(adj: np.ndarray) -> np.ndarray:
    return _Labeler(_dense(adj)).run()


def _pairs_from_order(order: np.ndarray, n: int, offset: int = 0):
    """Index order and signs read off a canonical vertex order of pair vertices."""
    idx, sgn, seen = [], [], set()
    for v in order:
        v = int(v) - offset
        if v < 0 or v >= 2 * n:
            continue
        i, s = divmod(v, 2)
        if i not in seen:
            seen.add(i)
            idx.append(i)
            sgn.append(1 if s == 0 else -1)
    return np.array(idx, dtype=np.int64), np.array(sgn, dtype=np.int64)


@dataclass(frozen=True)
class CanonicalCertificate:
    """Canonical matrix with the transformation that produces it.

    Gram forms satisfy ``canonical == P M P^T`` where
    ``P[a, perm[a]] = signs[a]``.  Hadamard forms additionally carry a
    column map so that ``canonical == P R Q^T``.
    """

    canonical: np.ndarray
    perm: tuple
    signs: tuple
    fingerprint: tuple
    col_perm: tuple | None = None
    col_signs: tuple | None = None

    @property
    def key(self) -> bytes:
        return np.ascontiguousarray(self.canonical, dtype=np.int64).tobytes()

    def __eq__(self, other):
        return isinstance(other, CanonicalCertificate) and self.key == other.key

    def __hash__(self):
        return hash(self.key)


def signed_permutation(perm, signs) -> np.ndarray:
    n = len(perm)
    p = np.zeros((n, n), dtype=np.int64)
    p[np.arange(n), np.asarray(perm)] = np.asarray(signs)
    return p


def gram_fingerprint(g) -> tuple:
    g = as_int_matrix(g)
    rows = tuple(sorted(tuple(sorted(np.abs(r).tolist())) for r in g))
    return (tuple(char_poly(g)), rows)


def hadamard_fingerprint(r) -> tuple:
    r = as_int_matrix(r)
    return (gram_fingerprint(gram(r)), gram_fingerprint(r.T @ r))


def _gram_graph(g: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    s = np.array([1, -1], dtype=np.int64)
    big = np.kron(g, np.outer(s, s))
    link = int(np.abs(g).max()) + 1 if n else 1
    for i in range(n):
        big[2 * i, 2 * i + 1] = big[2 * i + 1, 2 * i] = link
        big[2 * i, 2 * i] = big[2 * i + 1, 2 * i + 1] = g[i, i]
    return big


def gram_canonical(g) -> CanonicalCertificate:
    """Canonical representative of {P G P^T} over signed permutations."""
    g = as_int_matrix(g)
    n = g.shape[0]
    if n == 0:
        return CanonicalCertificate(g.copy(), (), (), ((), ()))
    order = _label(_gram_graph(g))
    idx, sgn = _pairs_from_order(order, n)
    canon = (sgn[:, None] * sgn[None, :]) * g[np.ix_(idx, idx)]
    return CanonicalCertificate(canon, tuple(idx.tolist()), tuple(sgn.tolist()),
                                gram_fingerprint(g))


def _hadamard_graph(r: np.ndarray) -> np.ndarray:
    n = r.shape[0]
    s = np.array([1, -1], dtype=np.int64)
    block = np.kron(r, np.outer(s, s)) + 1  # codes 0, 2
    adj = np.full((4 * n, 4 * n), 1, dtype=np.int64)  # 1 = no relation
    adj[: 2 * n, 2 * n:] = block
    adj[2 * n:, : 2 * n] = block.T
    for i in range(n):
        for base, code in ((0, 3), (2 * n, 4)):
            a, b = base + 2 * i, base + 2 * i + 1
            adj[a, b] = adj[b, a] = code
    d = np.arange(4 * n)
    adj[d, d] = np.where(d < 2 * n, 5, 6)
    return adj


def hadamard_canonical(r) -> CanonicalCertificate:
    """Canonical representative of {P R Q} over pairs of signed permutations."""
    r = as_int_matrix(r)
    n = r.shape[0]
    if r.shape != (n, n):
        raise ValueError("expected a square matrix")
    if n == 0:
        return CanonicalCertificate(r.copy(), (), (), (), (), ())
    if not np.all(np.abs(r) == 1):
        raise ValueError("entries must be +1 or -1")
    order = _label(_hadamard_graph(r))
    ri, rs = _pairs_from_order(order, n)
    ci, cs = _pairs_from_order(order, n, offset=2 * n)
    canon = (rs[:, None] * cs[None, :]) * r[np.ix_(ri, ci)]
    return CanonicalCertificate(canon, tuple(ri.tolist()), tuple(rs.tolist()),
                                hadamard_fingerprint(r), tuple(ci.tolist()),
                                tuple(cs.tolist()))


def _same_order(a, b):
    a, b = as_int_matrix(a), as_int_matrix(b)
    if a.shape != b.shape:
        raise ValueError("matrices have different orders")
    return a, b


def are_gram_equivalent(g1, g2) -> bool:
    g1, g2 = _same_order(g1, g2)
    if gram_fingerprint(g1) != gram_fingerprint(g2):
        return False
    return gram_canonical(g1) == gram_canonical(g2)


def are_hadamard_equivalent(r1, r2) -> bool:
    r1, r2 = _same_order(r1, r2)
    if hadamard_fingerprint(r1) != hadamard_fingerprint(r2):
        return False
    return hadamard_canonical(r1) == hadamard_canonical(r2)


def dedup(mats, kind: str = "gram"):
    """Class representatives (first occurrence kept) and class sizes.

    The fingerprint splits the input first, so canonical forms are only
    computed where two matrices share a fingerprint.
    """
    fp = gram_fingerprint if kind == "gram" else hadamard_fingerprint
    canon = gram_canonical if kind == "gram" else hadamard_canonical
    groups: dict = {}
    for i, m in enumerate(mats):
        groups.setdefault(fp(m), []).append(i)
    classes: dict = {}
    for members in groups.values():
        if len(members) == 1:
            classes[(members[0],)] = members
            continue
        local: dict = {}
        for i in members:
            local.setdefault(canon(mats[i]).key, []).append(i)
        for v in local.values():
            classes[(v[0],)] = v
    reps = sorted(classes)
    return [mats[k[0]] for k in reps], [len(classes[k]) for k in reps]
