"""Slow, loop-based reference implementations used as test oracles.

They follow textbook definitions directly and share no code with the package
apart from ``canonical_order`` (needed to reproduce index tie-breaks and seeded
draws on the same row order the detectors use).
"""

import heapq
import itertools
import math

import numpy as np

from lob_outliers.detectors._base import canonical_order


def dist_matrix(X):
    n = X.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            D[i, j] = math.sqrt(sum((a - b) ** 2 for a, b in zip(X[i], X[j])))
    return D


def sorted_others(D, i):
    """Other rows sorted by (distance, index)."""
    return sorted((j for j in range(D.shape[0]) if j != i), key=lambda j: (D[i, j], j))


def mahalanobis_naive(X, mu, cov):
    inv = np.linalg.inv(cov)
    return np.array([float((x - mu) @ inv @ (x - mu)) for x in X])


def ec_naive(X):
    n = X.shape[0]
    mu = X.sum(axis=0) / n
    cov = sum(np.outer(x - mu, x - mu) for x in X) / n
    return mahalanobis_naive(X, mu, cov)


def hbos_naive(X, n_bins, floor=1e-12):
    n, p = X.shape
    out = np.zeros(n)
    for j in range(p):
        col = X[:, j]
        lo, hi = min(col), max(col)
        if hi == lo:
            continue
        w = (hi - lo) / n_bins
        counts = [0] * n_bins
        idx = []
        for v in col:
            b = min(int((v - lo) / w), n_bins - 1)
            idx.append(b)
            counts[b] += 1
        for i, b in enumerate(idx):
            out[i] -= math.log(max(counts[b] / n / w, floor))
    return out


def knn_naive(X, k):
    D = dist_matrix(X)
    return np.array([D[i, sorted_others(D, i)[k - 1]] for i in range(X.shape[0])])


def lof_naive(X, k):
    D = dist_matrix(X)
    n = X.shape[0]
    nbrs = [sorted_others(D, i)[:k] for i in range(n)]
    kdist = [D[i, nbrs[i][-1]] for i in range(n)]
    lrd = []
    for i in range(n):
        reach = [max(D[i, o], kdist[o]) for o in nbrs[i]]
        lrd.append(1.0 / (sum(reach) / k))
    return np.array([sum(lrd[o] for o in nbrs[i]) / k / lrd[i] for i in range(n)])


def dbscan_naive(X, eps, min_pts):
    """Core points: at least ``min_pts`` rows (itself included) within ``eps``.
    Clusters: connected components of cores. Border rows join the cluster of the
    nearest core within ``eps``. Returns (labels, distance to nearest core)."""
    D = dist_matrix(X)
    n = X.shape[0]
    core = [sum(1 for j in range(n) if D[i, j] <= eps) >= min_pts for i in range(n)]
    labels = [-1] * n
    c = 0
    for i in range(n):
        if not core[i] or labels[i] != -1:
            continue
        labels[i] = c
        queue = [i]
        while queue:
            a = queue.pop()
            for b in range(n):
                if core[b] and labels[b] == -1 and D[a, b] <= eps:
                    labels[b] = c
                    queue.append(b)
        c += 1
    near = np.zeros(n)
    cores = [j for j in range(n) if core[j]]
    for i in range(n):
        if core[i]:
            continue
        j = min(cores, key=lambda j: (D[i, j], j))
        near[i] = D[i, j]
        if D[i, j] <= eps:
            labels[i] = labels[j]
    return np.array(labels), near


def relabel(labels):
    """Cluster ids renumbered by first appearance (noise stays -1)."""
    m = {}
    out = []
    for v in labels:
        if v == -1:
            out.append(-1)
        else:
            out.append(m.setdefault(v, len(m)))
    return np.array(out)


def optics_naive(X, min_pts):
    """Heap-based OPTICS with unbounded radius on the canonical row order.

    Returns (ordering, reachability) indexed in the original rows.
    """
    order = canonical_order(X)
    Xc = X[order]
    D = dist_matrix(Xc)
    n = Xc.shape[0]
    core = [D[i, sorted_others(D, i)[min_pts - 2]] if min_pts > 1 else 0.0 for i in range(n)]
    reach = [math.inf] * n
    done = [False] * n
    heap = []
    seq = []
    cur = 0
    while True:
        done[cur] = True
        seq.append(cur)
        if len(seq) == n:
            break
        for j in range(n):
            if done[j]:
                continue
            nr = max(core[cur], D[cur, j])
            if nr < reach[j]:
                reach[j] = nr
                heapq.heappush(heap, (nr, j))
        while True:
            r, j = heapq.heappop(heap)
            if not done[j] and r == reach[j]:
                break
        cur = j
    reach_orig = np.empty(n)
    reach_orig[order] = reach
    return order[np.array(seq)], reach_orig


def kmeans_naive(Xc, k, seed, tol=1e-6, max_iter=300):
    """Farthest-point seeding from a random first row, then Lloyd steps."""
    n = Xc.shape[0]
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(n))]
    while len(chosen) < k:
        best, best_d = None, -1.0
        for i in range(n):
            d = min(math.dist(Xc[i], Xc[c]) for c in chosen)
            if d > best_d:
                best, best_d = i, d
        chosen.append(best)
    C = [Xc[c].copy() for c in chosen]
    for _ in range(max_iter):
        lab = [min(range(k), key=lambda c: (float(((x - C[c]) ** 2).sum()), c)) for x in Xc]
        new = []
        for c in range(k):
            members = [Xc[i] for i in range(n) if lab[i] == c]
            new.append(sum(members) / len(members) if members else C[c])
        shift = max(math.dist(a, b) for a, b in zip(new, C))
        C = new
        if shift <= tol:
            break
    lab = [min(range(k), key=lambda c: (float(((x - C[c]) ** 2).sum()), c)) for x in Xc]
    return np.array(C), np.array(lab)


def cblof_naive(X, k, seed, alpha=0.9, beta=5.0):
    order = canonical_order(X)
    Xc = X[order]
    C, lab = kmeans_naive(Xc, k, seed)
    sizes = [int((lab == c).sum()) for c in range(k)]
    ranked = sorted(range(k), key=lambda c: (-sizes[c], c))
    total = sum(sizes)
    b = k
    cum = 0
    for pos, c in enumerate(ranked):
        cum += sizes[c]
        if cum >= alpha * total:
            b = pos + 1
            break
        if pos + 1 < k:
            nxt = sizes[ranked[pos + 1]]
            if nxt == 0 or sizes[c] / nxt >= beta:
                b = pos + 1
                break
    large = set(ranked[:b])
    sc = []
    for x, c in zip(Xc, lab):
        if c in large:
            sc.append(math.dist(x, C[c]))
        else:
            sc.append(min(math.dist(x, C[g]) for g in large))
    out = np.empty(len(sc))
    out[order] = sc
    return out


def sod_naive(X, ref_set=20, alpha=0.8):
    n, p = X.shape
    D = dist_matrix(X)
    nn = [set([i] + sorted_others(D, i)[:ref_set]) for i in range(n)]
    out = np.zeros(n)
    for i in range(n):
        cands = [(len(nn[i] & nn[j]), D[i, j], j) for j in range(n) if j != i]
        cands = [c for c in cands if c[0] > 0]
        cands.sort(key=lambda c: (-c[0], c[1], c[2]))
        R = np.array([X[c[2]] for c in cands[:ref_set]])
        mu = R.mean(axis=0)
        var = ((R - mu) ** 2).mean(axis=0)
        thr = alpha * var.mean()
        rel = [j for j in range(p) if var[j] < thr]
        if rel:
            out[i] = math.sqrt(sum((X[i, j] - mu[j]) ** 2 for j in rel) / len(rel))
    return out


def mcd_exhaustive(X, h):
    """Smallest covariance determinant over every h-subset (brute force)."""
    n = X.shape[0]
    best, arg = math.inf, None
    for drop in itertools.combinations(range(n), n - h):
        keep = np.setdiff1d(np.arange(n), drop)
        S = X[keep]
        d = np.linalg.det(np.cov(S, rowvar=False, bias=True))
        if d < best:
            best, arg = d, keep
    return best, arg


def ocsvm_dual_bruteforce(K, C):
    """min 1/2 a'Ka  s.t.  0 <= a <= C, sum a = 1, by enumerating active sets."""
    n = K.shape[0]
    best = math.inf
    for state in itertools.product((0, 1, 2), repeat=n):  # 0: at 0, 1: free, 2: at C
        free = [i for i in range(n) if state[i] == 1]
        a = np.array([C if s == 2 else 0.0 for s in state])
        rest = 1.0 - a.sum()
        if free:
            f = np.array(free)
            bnd = np.array([i for i in range(n) if state[i] == 2], dtype=int)
            m = len(free)
            # KKT for the free block: K_ff a_f + K_fb a_b - rho 1 = 0, 1'a_f = rest
            A = np.zeros((m + 1, m + 1))
            A[:m, :m] = K[np.ix_(f, f)]
            A[:m, m] = -1.0
            A[m, :m] = 1.0
            rhs = np.zeros(m + 1)
            rhs[:m] = -(K[np.ix_(f, bnd)] @ a[bnd]) if bnd.size else 0.0
            rhs[m] = rest
            try:
                sol = np.linalg.solve(A, rhs)
            except np.linalg.LinAlgError:
                continue
            a[f] = sol[:m]
        elif abs(rest) > 1e-12:
            continue
        if np.all(a >= -1e-12) and np.all(a <= C + 1e-12) and abs(a.sum() - 1) < 1e-12:
            best = min(best, 0.5 * float(a @ K @ a))
    return best
