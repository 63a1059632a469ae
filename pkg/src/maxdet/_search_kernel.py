"""Numba kernels for the candidate Gram search.

Floating point is used only to decide pruning, always with a relative
safety margin (``SLACK``) so that a branch is cut only when its bound is
below the threshold by far more than the rounding error.  Every matrix that
leaves the kernel is re-checked in exact arithmetic by the caller.
"""
import numba
import numpy as np

SLACK = 1e-9

POLICY_KM = 0
POLICY_SHARPER = 1
POLICY_PARTITION = 2
POLICY_NONE = 3

STATUS_OK = 0
STATUS_CHILD_OVERFLOW = 1
STATUS_LEAF_OVERFLOW = 2


@numba.njit(cache=True)
def is_canonical(M, m):
    """True iff the leading m x m block of M is lexicographically maximal.

    The code of a symmetric matrix is its strict upper triangle read column
    by column, (0,1), (0,2), (1,2), (0,3), ...; a leading principal block's
    code is then a prefix of the whole code.  Relabellings are explored by
    backtracking; twins (indices whose transposition fixes M) are tried once
    per level because they give identical subtrees.
    """
    if m <= 2:
        return True
    twin = np.empty(m, np.int64)
    for i in range(m):
        twin[i] = i
    for i in range(m):
        if twin[i] != i:
            continue
        for j in range(i + 1, m):
            if twin[j] != j:
                continue
            same = True
            for k in range(m):
                if k != i and k != j and M[i, k] != M[j, k]:
                    same = False
                    break
            if same:
                twin[j] = i
    perm = np.empty(m, np.int64)
    nxt = np.empty(m, np.int64)
    used = np.zeros(m, np.bool_)
    depth = 0
    nxt[0] = 0
    while depth >= 0:
        if depth == m:
            # equal code: perm is an automorphism.  The identity is always
            # the first full path, so the subtree where perm leaves it is an
            # image of one already searched.
            l = 0
            while l < m and perm[l] == l:
                l += 1
            if l == m:
                depth -= 1
                used[perm[depth]] = False
                continue
            for d in range(l, m):
                used[perm[d]] = False
            depth = l
            continue
        found = False
        while nxt[depth] < m:
            c = nxt[depth]
            nxt[depth] += 1
            if used[c]:
                continue
            # skip c if an earlier unused twin exists (same subtree)
            dup = False
            for t in range(c):
                if not used[t] and twin[t] == twin[c]:
                    dup = True
                    break
            if dup:
                continue
            cmp = 0
            for i in range(depth):
                a = M[perm[i], c]
                b = M[i, depth]
                if a > b:
                    cmp = 1
                    break
                if a < b:
                    cmp = -1
                    break
            if cmp > 0:
                return False
            if cmp < 0:
                continue
            perm[depth] = c
            used[c] = True
            found = True
            break
        if found:
            depth += 1
            if depth < m:
                nxt[depth] = 0
        else:
            depth -= 1
            if depth >= 0:
                used[perm[depth]] = False
    return True


@numba.njit(cache=True)
def enumerate_extensions(n, r, M, L, phi, radius, lex_limited, out_f, out_q):
    """Fill out_f/out_q with all f in phi^r such that f^T M_r^{-1} f <= radius.

    Coordinates are fixed in index order; with M_r = L L^T the quadratic form
    splits as sum_i y_i^2 where L y = f, and y_i only depends on f_0..f_i, so
    partial sums prune monotonically.  When lex_limited, f[0..r-2] must be
    lexicographically <= the last column of M_r.  Results come out in
    decreasing lexicographic order.

    Returns (count, qmin); count == -1 signals buffer overflow.
    """
    k = phi.shape[0]
    cap = out_f.shape[0]
    idx = np.empty(r, np.int64)
    f = np.empty(r, np.int64)
    y = np.empty(r)
    partial = np.zeros(r + 1)
    tight = np.zeros(r + 1, np.bool_)
    tight[0] = lex_limited
    count = 0
    qmin = np.inf
    lim = radius * (1.0 + SLACK) + SLACK
    i = 0
    idx[0] = -1
    while i >= 0:
        idx[i] += 1
        if idx[i] >= k:
            i -= 1
            continue
        v = phi[idx[i]]
        bounded = tight[i] and i <= r - 2
        if bounded and v > M[i, r - 1]:
            continue
        c = 0.0
        for j in range(i):
            c += L[i, j] * y[j]
        yi = (v - c) / L[i, i]
        s = partial[i] + yi * yi
        if s > lim:
            if v < c:
                # phi is decreasing, so |y_i| only grows from here on
                i -= 1
            continue
        f[i] = v
        y[i] = yi
        partial[i + 1] = s
        if i == r - 1:
            if count >= cap:
                return -1, qmin
            for j in range(r):
                out_f[count, j] = f[j]
            out_q[count] = s
            if s < qmin:
                qmin = s
            count += 1
        else:
            tight[i + 1] = bounded and v == M[i, r - 1]
            i += 1
            idx[i] = -1
    return count, qmin


@numba.njit(cache=True)
def node_bound(n, r, det_r, qmin, policy, M, L, last_det, part_p, part_s, part_start, part_len):
    """Upper bound on det of any completion of M_r (order r < n)."""
    dstar = det_r * (1.0 - qmin)
    if dstar < 0.0:
        dstar = 0.0
    nm1 = float(n - 1)
    km = nm1 ** (n - r - 1) * (nm1 * det_r + (n - r) * dstar)
    if policy == POLICY_KM or n % 4 != 3:
        return km
    nm3 = float(n - 3)
    coef = nm1 ** (n - r) - nm3 ** (n - r) - (n - r) * nm3 ** (n - r - 1)
    sharp = nm1 ** (n - r) * det_r + coef * dstar
    best = min(km, sharp)
    if policy == POLICY_SHARPER:
        return best
    # partition bound: only when the last column is all -1 off the diagonal
    ok = det_r > nm3 * last_det * (1.0 + SLACK)
    for i in range(r - 1):
        if M[i, r - 1] != -1:
            ok = False
            break
    if not ok:
        return best
    # s = j^T M_r^{-1} j, t = -1 - s
    y = np.empty(r)
    s = 0.0
    for i in range(r):
        c = -1.0
        for j in range(i):
            c -= L[i, j] * y[j]
        y[i] = c / L[i, i]
        s += y[i] * y[i]
    t = -1.0 - s
    pb = -np.inf
    start = part_start[r]
    for q in range(start, start + part_len[r]):
        val = part_p[q] * (1.0 + t * part_s[q])
        if val > pb:
            pb = val
    pb *= det_r
    if pb < 0.0:
        pb = 0.0
    # tiny cushion: the partition value is the exact completion maximum
    pb = pb * (1.0 + 1e-7) + 1.0
    return min(best, pb)


@numba.njit(cache=True)
def search(n, phi, prefix, thresholds, dmin2, policy, canon, canon_upto, square_only,
           part_p, part_s, part_start, part_len, child_cap, leaf_out, stats, lvl,
           emit_order):
    """Depth-first search below ``prefix`` (an r0 x r0 candidate minor).

    thresholds[r] is the least det(M_r) a node of order r may have and still
    lead to a matrix of determinant >= dmin2.  Leaves (order n) that pass the
    float filters are written to leaf_out as flattened rows.

    Canonicity is tested on intermediate minors of order <= canon_upto and
    always on leaves; a canonical leaf has canonical leading minors, so
    skipping the deep tests only trades test time for extra nodes.

    With 0 < emit_order < n the search stops at that order and writes the
    canonical minors it reaches (zero padded to n x n) instead of leaves.

    stats: [nodes, leaves, max_children, status]
    """
    r0 = prefix.shape[0]
    M = np.zeros((n, n), np.int64)
    L = np.zeros((n, n))
    det = np.zeros(n + 1)
    det[0] = 1.0
    for i in range(r0):
        for j in range(r0):
            M[i, j] = prefix[i, j]
    # Cholesky of the prefix
    for i in range(r0):
        for j in range(i + 1):
            s = float(M[i, j])
            for k in range(j):
                s -= L[i, k] * L[j, k]
            if i == j:
                if s <= 0.0:
                    return 0
                L[i, i] = np.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
        det[i + 1] = det[i] * L[i, i] * L[i, i]
    ch_f = np.zeros((n, child_cap, n), np.int8)
    ch_q = np.zeros((n, child_cap))
    ch_count = np.zeros(n, np.int64)
    ch_pos = np.zeros(n, np.int64)
    nleaf = 0
    leaf_cap = leaf_out.shape[0]
    y = np.empty(n)

    r = r0
    expand = True
    while r >= r0:
        if expand:
            expand = False
            stats[0] += 1
            ch_pos[r] = 0
            ch_count[r] = 0
            if r == n:
                r -= 1
                continue
            radius = n - thresholds[r + 1] / det[r]
            if radius <= 0.0:
                r -= 1
                continue
            cnt, qmin = enumerate_extensions(n, r, M, L, phi, radius, canon,
                                             ch_f[r], ch_q[r])
            if cnt < 0:
                stats[3] = 1
                return nleaf
            if cnt > stats[2]:
                stats[2] = cnt
            lvl[r, 0] += 1
            lvl[r, 1] += cnt
            if cnt == 0:
                r -= 1
                continue
            if policy != POLICY_NONE:
                b = node_bound(n, r, det[r], qmin, policy, M, L, det[r - 1],
                               part_p, part_s, part_start, part_len)
                if b < dmin2 * (1.0 - SLACK):
                    lvl[r, 2] += 1
                    r -= 1
                    continue
            ch_count[r] = cnt
        if ch_pos[r] >= ch_count[r]:
            r -= 1
            continue
        c = ch_pos[r]
        ch_pos[r] += 1
        for i in range(r):
            v = ch_f[r, c, i]
            M[r, i] = v
            M[i, r] = v
        M[r, r] = n
        q = ch_q[r, c]
        newdet = det[r] * (n - q)
        if r + 1 == n:
            if newdet < dmin2 * (1.0 - SLACK):
                continue
            if square_only:
                rt = np.sqrt(newdet)
                frac = abs(rt - np.floor(rt + 0.5))
                if frac > 1e-4 * max(1.0, rt * 1e-12):
                    continue
            if canon and not is_canonical(M, n):
                continue
            if nleaf >= leaf_cap:
                stats[3] = 2
                return nleaf
            for i in range(n):
                for j in range(n):
                    leaf_out[nleaf, i * n + j] = M[i, j]
            nleaf += 1
            stats[1] += 1
            continue
        if r + 1 == emit_order:
            if canon and not is_canonical(M, r + 1):
                continue
            if nleaf >= leaf_cap:
                stats[3] = 2
                return nleaf
            for i in range(n):
                for j in range(n):
                    leaf_out[nleaf, i * n + j] = M[i, j] if (i <= r and j <= r) else 0
            nleaf += 1
            continue
        if canon and r + 1 <= canon_upto and not is_canonical(M, r + 1):
            continue
        lvl[r, 3] += 1
        # extend the Cholesky factor
        for i in range(r):
            cc = float(M[i, r])
            for j in range(i):
                cc -= L[i, j] * y[j]
            y[i] = cc / L[i, i]
            L[r, i] = y[i]
        L[r, r] = np.sqrt(n - q)
        det[r + 1] = newdet
        r += 1
        expand = True
    return nleaf
