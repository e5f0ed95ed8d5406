"""Hot numeric kernels: score scans, MMR selection, token-match maxima.

Two interchangeable lanes:

* numpy  - vectorized over BLAS, always available
* numba  - @njit-compiled explicit loops

Lane selection via the QF_KERNELS env var: "numpy", "numba" or "auto"
(default). "auto" resolves to numpy: benchmarks/bench_kernels.py shows
BLAS-backed matmuls win these workloads on this stack, so the compiled
lane is opt-in (useful where numpy lacks threaded BLAS). Both lanes
implement identical selection logic - first maximum wins on ties - so
orderings agree regardless of lane.
"""

from __future__ import annotations

import os

import numpy as np

_REQUESTED = os.environ.get("QF_KERNELS", "auto").strip().lower()
if _REQUESTED not in ("auto", "numba", "numpy"):
    raise ValueError(f"QF_KERNELS must be auto|numba|numpy, got {_REQUESTED!r}")

_NUMBA_OK = False
if _REQUESTED != "numpy":
    try:
        from numba import njit, prange
        _NUMBA_OK = True
    except ImportError:
        if _REQUESTED == "numba":
            raise
_BACKEND = "numba" if (_REQUESTED == "numba" and _NUMBA_OK) else "numpy"


def active_backend() -> str:
    """Which lane module-level dispatchers use ("numba" or "numpy")."""
    return _BACKEND


# --- numpy lane ---

def np_dot_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Dot product of every row against the query."""
    return matrix @ query


def np_mmr_select(cand: np.ndarray, qsims: np.ndarray, lam: float,
                  k: int) -> tuple[np.ndarray, np.ndarray]:
    """Greedy MMR over a candidate pool.

    The first pick maximizes query similarity alone; every pick's recorded
    score is lam*sim(d,q) - (1-lam)*max_sim(d, selected) at selection time.
    Ties resolve to the lowest candidate index.
    """
    n = cand.shape[0]
    chosen = np.zeros(n, dtype=bool)
    # true max similarity to the selected set; -inf until something is
    # selected (cosines can be negative, so 0 would overstate the penalty)
    maxsim = np.full(n, -np.inf, dtype=np.float64)
    sel = np.empty(k, dtype=np.int64)
    sel_scores = np.empty(k, dtype=np.float64)
    for step in range(k):
        crit = qsims.copy() if step == 0 else lam * qsims - (1.0 - lam) * maxsim
        crit[chosen] = -np.inf
        best = int(np.argmax(crit))
        sel[step] = best
        sel_scores[step] = (lam * qsims[best] if step == 0
                            else lam * qsims[best] - (1.0 - lam) * maxsim[best])
        chosen[best] = True
        sims_to_best = cand @ cand[best]
        np.maximum(maxsim, sims_to_best, out=maxsim)
    return sel, sel_scores


def np_pairwise_max(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise and column-wise maxima of the similarity matrix a @ b.T."""
    sims = a @ b.T
    return sims.max(axis=1), sims.max(axis=0)


# --- numba lane ---

if _NUMBA_OK:

    @njit(cache=True, parallel=True)
    def nb_dot_scores(matrix, query):
        n, d = matrix.shape
        out = np.empty(n, dtype=np.float64)
        for i in prange(n):
            s = 0.0
            for j in range(d):
                s += matrix[i, j] * query[j]
            out[i] = s
        return out

    @njit(cache=True)
    def nb_mmr_select(cand, qsims, lam, k):
        n, d = cand.shape
        chosen = np.zeros(n, dtype=np.bool_)
        # -inf until selected-set sims exist; 0 would overstate the penalty
        # for candidates anti-correlated with everything selected
        maxsim = np.full(n, -np.inf, dtype=np.float64)
        sel = np.empty(k, dtype=np.int64)
        sel_scores = np.empty(k, dtype=np.float64)
        for step in range(k):
            best = -1
            best_val = -np.inf
            for i in range(n):
                if chosen[i]:
                    continue
                if step == 0:
                    val = qsims[i]
                else:
                    val = lam * qsims[i] - (1.0 - lam) * maxsim[i]
                if val > best_val:
                    best_val = val
                    best = i
            sel[step] = best
            if step == 0:
                sel_scores[step] = lam * qsims[best]
            else:
                sel_scores[step] = lam * qsims[best] - (1.0 - lam) * maxsim[best]
            chosen[best] = True
            for i in range(n):
                if chosen[i]:
                    continue
                s = 0.0
                for j in range(d):
                    s += cand[i, j] * cand[best, j]
                if s > maxsim[i]:
                    maxsim[i] = s
        return sel, sel_scores

    @njit(cache=True)
    def nb_pairwise_max(a, b):
        # serial: a prange reduction over shared col_max would race
        n, d = a.shape
        m = b.shape[0]
        row_max = np.full(n, -np.inf, dtype=np.float64)
        col_max = np.full(m, -np.inf, dtype=np.float64)
        for i in range(n):
            for jj in range(m):
                s = 0.0
                for t in range(d):
                    s += a[i, t] * b[jj, t]
                if s > row_max[i]:
                    row_max[i] = s
                if s > col_max[jj]:
                    col_max[jj] = s
        return row_max, col_max


# --- dispatchers ---

def _as_f64(arr: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(arr, dtype=np.float64)


def dot_scores(matrix: np.ndarray, query: np.ndarray) -> np.ndarray:
    matrix, query = _as_f64(matrix), _as_f64(query)
    if matrix.shape[0] == 0:
        return np.empty(0, dtype=np.float64)
    if _BACKEND == "numba":
        return nb_dot_scores(matrix, query)
    return np_dot_scores(matrix, query)


def mmr_select(cand: np.ndarray, qsims: np.ndarray, lam: float,
               k: int) -> tuple[np.ndarray, np.ndarray]:
    cand, qsims = _as_f64(cand), _as_f64(qsims)
    k = min(k, cand.shape[0])
    if k == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    if _BACKEND == "numba":
        return nb_mmr_select(cand, qsims, float(lam), k)
    return np_mmr_select(cand, qsims, float(lam), k)


def pairwise_max(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = _as_f64(a), _as_f64(b)
    if _BACKEND == "numba":
        return nb_pairwise_max(a, b)
    return np_pairwise_max(a, b)


def warmup() -> str:
    """Trigger JIT compilation of all kernels; returns the active backend."""
    m = np.eye(3, dtype=np.float64)
    q = np.ones(3, dtype=np.float64)
    dot_scores(m, q)
    mmr_select(m, q, 0.5, 2)
    pairwise_max(m, m)
    return _BACKEND
