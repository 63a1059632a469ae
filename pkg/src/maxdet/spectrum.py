"""Determinant spectra of {+1,-1} matrices of odd order.

Values are reported scaled, |det R| / 2^(n-1), which is always an integer.
Low values come from a seeded local search and are witness-only; values at
or above a threshold come from the exhaustive Gram search followed by
decomposition, and only those carry a completeness guarantee.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ._spectrum_kernel import cofactors
from .exact import det_exact

log = logging.getLogger(__name__)

_KERNEL_MAX_ORDER = 15


def scaled_det(r) -> int:
    r = np.asarray(r)
    n = r.shape[0]
    return abs(det_exact(r)) >> (n - 1)


def neighbour_dets(r: np.ndarray, c: np.ndarray | None = None):
    """Determinants after flipping each single entry, plus det(r).

    Flipping r_ij changes det by -2 r_ij C_ij, C the cofactor matrix.
    """
    if c is None:
        c = cofactors(r)
    det = int(np.dot(r[0], c[0]))
    return det, det - 2 * r * c


def hill_climb_values(n: int, targets=None, budget: int = 20000, seed: int = 0,
                      restart_after: int = 40) -> dict[int, np.ndarray]:
    """Search for witnesses of scaled determinant values.

    Each step evaluates all n^2 single-entry flips exactly, records every
    value seen, then moves towards a randomly chosen missing target (or
    upwards when no targets are given).  After ``restart_after`` steps
    without progress the matrix is perturbed.  Misses are never treated as
    absences.
    """
    if n % 2 == 0 or n < 1:
        raise ValueError("n must be odd and positive")
    if n > _KERNEL_MAX_ORDER:
        raise ValueError(f"local search supports n <= {_KERNEL_MAX_ORDER}")
    rng = np.random.default_rng(seed)
    want = None if targets is None else set(int(t) for t in targets)
    found: dict[int, np.ndarray] = {}
    scale = 1 << (n - 1)
    r = rng.choice(np.array([-1, 1], dtype=np.int64), size=(n, n))
    stale = 0
    for _ in range(budget):
        det, nb = neighbour_dets(r)
        vals = np.abs(nb) // scale
        cur = abs(det) // scale
        progress = False
        for v, (i, j) in [(cur, (-1, -1))] + [(int(vals[i, j]), (i, j))
                                             for i in range(n) for j in range(n)]:
            if v in found:
                continue
            if want is not None and v not in want:
                continue
            w = r.copy()
            if i >= 0:
                w[i, j] = -w[i, j]
            found[v] = w
            progress = True
        if want is not None and want <= set(found):
            break
        stale = 0 if progress else stale + 1
        if stale > restart_after:
            k = max(1, n * n // 8)
            idx = rng.choice(n * n, size=k, replace=False)
            r.flat[idx] *= -1
            stale = 0
            continue
        if want is not None:
            missing = sorted(want - set(found))
            t = missing[int(rng.integers(len(missing)))]
            score = np.abs(vals - t).astype(np.float64)
        else:
            score = -vals.astype(np.float64)
        score += rng.random(score.shape) * 0.5
        i, j = np.unravel_index(int(np.argmin(score)), score.shape)
        r[i, j] = -r[i, j]
    return dict(sorted(found.items()))


def compress(values) -> str:
    """Render a set of integers as comma-separated a..b runs."""
    vals = sorted(set(values))
    out, i = [], 0
    while i < len(vals):
        j = i
        while j + 1 < len(vals) and vals[j + 1] == vals[j] + 1:
            j += 1
        out.append(str(vals[i]) if i == j else f"{vals[i]}..{vals[j]}")
        i = j + 1
    return ", ".join(out)


@dataclass
class SpectrumResult:
    n: int
    values: dict = field(default_factory=dict)  # value -> witness
    provenance: dict = field(default_factory=dict)  # value -> "heuristic" | "decomposition"
    first_gap: int | None = None  # least missing value below the maximum
    d_min: int | None = None
    complete_above: bool = False

    def report(self) -> str:
        lines = [f"n={self.n}", f"values: {compress(self.values)}"]
        lines.append(f"count: {len(self.values)}")
        gap = "none below the maximum" if self.first_gap is None else self.first_gap
        lines.append(f"first gap: {gap}")
        if self.d_min is not None:
            flag = "complete" if self.complete_above else "INCOMPLETE"
            lines.append(f"exhaustive above {self.d_min}: {flag}")
        return "\n".join(lines)


def spectrum_above(n: int, d_min: int, **budgets):
    """Exact set of scaled values >= d_min with witnesses, plus a completeness flag.

    Runs the Gram search at threshold d_min * 2^(n-1) and decomposes every
    same-char-poly pair until each candidate's status is settled.
    """
    from .io import run_pipeline

    summary = run_pipeline(n, d_min << (n - 1), **budgets)
    vals = {}
    for g_det, r in summary.witnesses.items():
        vals[g_det] = r
    return vals, summary.complete


def full_spectrum(n: int, budget: int = 20000, seed: int = 0, d_min: int | None = None,
                  limit: int = 13, **budgets) -> SpectrumResult:
    """Heuristic values below the first gap merged with the exhaustive part.

    Without d_min the first gap of the heuristic range is used as the
    exhaustive threshold.
    """
    if n % 2 == 0:
        raise ValueError("only odd orders are supported")
    if n > limit:
        raise ValueError(f"order {n} exceeds the configured limit {limit}")
    res = SpectrumResult(n)
    if n == 1:
        res.values = {1: np.array([[1]])}
        res.provenance = {1: "decomposition"}
        res.d_min, res.complete_above, res.first_gap = 1, True, None
        return res
    heur = hill_climb_values(n, budget=budget, seed=seed)
    gap = 0
    while gap in heur:
        gap += 1
    threshold = gap if d_min is None else d_min
    exact, complete = spectrum_above(n, max(threshold, 1), **budgets)
    for v, w in heur.items():
        if v < threshold:
            res.values[v] = w
            res.provenance[v] = "heuristic"
    for v, w in exact.items():
        res.values[v] = w
        res.provenance[v] = "decomposition"
    res.values = dict(sorted(res.values.items()))
    res.d_min = threshold
    res.complete_above = complete
    top = max(res.values)
    missing = [v for v in range(top) if v not in res.values]
    res.first_gap = missing[0] if missing else None
    return res
