"""Hot numeric kernels: numba-compiled with a pure-NumPy fallback.

Three inner loops dominate runtime: extraction of forward time deltas
between two sorted timestamp arrays, evaluation of exponentially decayed
edge weights over a flat delta table (done once per point of a decay-rate
sweep), and the greedy local-move sweeps inside community detection.

Each kernel exists in two functionally equivalent forms:

* a loop form compiled with ``numba.njit`` (no fastmath, so IEEE semantics
  are preserved), used by default when numba is importable;
* a NumPy form (vectorised where the algorithm allows it), selected by
  setting ``COACTNET_NO_NUMBA=1`` in the environment or when numba is
  missing.

``benchmarks/bench_kernels.py`` times the two forms against each other.
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None
    _HAVE_NUMBA = False

_DISABLED = os.environ.get("COACTNET_NO_NUMBA", "").lower() in ("1", "true", "yes")
NUMBA_ENABLED = _HAVE_NUMBA and not _DISABLED


# ---------------------------------------------------------------------------
# Kernel bodies (numba-compatible Python)
# ---------------------------------------------------------------------------

def _directed_deltas_loop(tu, tv):
    """Forward deltas from each t in tu to the first tv >= t (two-pointer merge).

    Both inputs must be ascending float64 arrays; cost is linear in
    len(tu) + len(tv).
    """
    nu = tu.shape[0]
    nv = tv.shape[0]
    out = np.empty(nu, np.float64)
    j = 0
    m = 0
    for i in range(nu):
        t = tu[i]
        while j < nv and tv[j] < t:
            j += 1
        if j == nv:
            break
        out[m] = tv[j] - t
        m += 1
    return out[:m]


def _decayed_sums_loop(deltas, coefs, offsets, beta, dt_max):
    """Per-pair sum of coef * exp(-beta * dt) for dt <= dt_max.

    Deltas are grouped by pair (CSR-style offsets) and sorted ascending
    within each pair, so truncation is an early break. Returns the weight
    array and the per-pair count of truncated deltas.
    """
    n_pairs = offsets.shape[0] - 1
    w = np.zeros(n_pairs, np.float64)
    omitted = np.zeros(n_pairs, np.int64)
    for p in range(n_pairs):
        s = 0.0
        for e in range(offsets[p], offsets[p + 1]):
            dt = deltas[e]
            if dt > dt_max:
                omitted[p] = offsets[p + 1] - e
                break
            s += coefs[e] * np.exp(-beta * dt)
        w[p] = s
    return w, omitted


def _local_move_loop(indptr, indices, weights, kappa, labels,
                     comm_kappa, comm_size, order, constraint, gamma,
                     max_sweeps):
    """Greedy single-node relocation sweeps for (multi-layer) modularity.

    ``kappa[i, s]`` is node i's strength in layer s divided by sqrt(2 m_s);
    the gain of node i joining community d relative to standing alone is
    w(i->d) - gamma * <kappa_i, comm_kappa_d>. Nodes are visited in
    ``order``; a node moves only on a strict gain over staying, ties among
    equal-gain targets go to the smallest community id, and isolating into
    a fresh community requires a strict gain over every occupied candidate.
    ``constraint`` restricts candidate communities to those of neighbours
    with the same constraint value (pass zeros for unconstrained moving).

    Mutates labels / comm_kappa / comm_size in place; returns move count.
    """
    n = labels.shape[0]
    n_layers = kappa.shape[1]
    nbr_w = np.zeros(n, np.float64)
    cand = np.empty(n, np.int64)
    total_moves = 0
    for _sweep in range(max_sweeps):
        moves = 0
        for oi in range(n):
            i = order[oi]
            ci = labels[i]
            for s in range(n_layers):
                comm_kappa[ci, s] -= kappa[i, s]
            comm_size[ci] -= 1
            # candidate communities: current one plus neighbours'
            cand[0] = ci
            ncand = 1
            nbr_w[ci] = 0.0
            for e in range(indptr[i], indptr[i + 1]):
                j = indices[e]
                if j == i or constraint[j] != constraint[i]:
                    continue
                cj = labels[j]
                known = False
                for q in range(ncand):
                    if cand[q] == cj:
                        known = True
                        break
                if not known:
                    cand[ncand] = cj
                    nbr_w[cj] = 0.0
                    ncand += 1
                nbr_w[cj] += weights[e]
            stay_gain = nbr_w[ci]
            for s in range(n_layers):
                stay_gain -= gamma * kappa[i, s] * comm_kappa[ci, s]
            best_gain = stay_gain
            best_c = ci
            staying = True
            for q in range(1, ncand):
                d = cand[q]
                g = nbr_w[d]
                for s in range(n_layers):
                    g -= gamma * kappa[i, s] * comm_kappa[d, s]
                if g > best_gain or (not staying and g == best_gain and d < best_c):
                    best_gain = g
                    best_c = d
                    staying = False
            if 0.0 > best_gain:
                # strictly better off alone: first empty community id
                for d in range(n):
                    if comm_size[d] == 0:
                        best_c = d
                        break
                staying = False
            for s in range(n_layers):
                comm_kappa[best_c, s] += kappa[i, s]
            comm_size[best_c] += 1
            labels[i] = best_c
            if not staying and best_c != ci:
                moves += 1
        total_moves += moves
        if moves == 0:
            break
    return total_moves


# ---------------------------------------------------------------------------
# NumPy fallback forms
# ---------------------------------------------------------------------------

def _directed_deltas_numpy(tu, tv):
    """Vectorised form of :func:`_directed_deltas_loop` via searchsorted."""
    pos = np.searchsorted(tv, tu, side="left")
    valid = pos < tv.shape[0]
    return tv[pos[valid]] - tu[valid]


def _decayed_sums_numpy(deltas, coefs, offsets, beta, dt_max):
    """Vectorised form of :func:`_decayed_sums_loop` (same accumulation order)."""
    n_pairs = offsets.shape[0] - 1
    pair_ids = np.repeat(np.arange(n_pairs), np.diff(offsets))
    keep = deltas <= dt_max
    w = np.zeros(n_pairs, np.float64)
    np.add.at(w, pair_ids[keep], coefs[keep] * np.exp(-beta * deltas[keep]))
    omitted = np.zeros(n_pairs, np.int64)
    np.add.at(omitted, pair_ids[~keep], 1)
    return w, omitted


# The local-move sweep is inherently sequential (each decision depends on the
# previous one), so its fallback is the same array-based loop, uncompiled.

_NUMPY_IMPL = {
    "directed_deltas": _directed_deltas_numpy,
    "decayed_sums": _decayed_sums_numpy,
    "local_move": _local_move_loop,
}

_numba_cache: dict[str, object] = {}


def _numba_impl() -> dict:
    if not _HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    if not _numba_cache:
        opts = {"cache": True, "nogil": True}
        _numba_cache["directed_deltas"] = njit(**opts)(_directed_deltas_loop)
        _numba_cache["decayed_sums"] = njit(**opts)(_decayed_sums_loop)
        _numba_cache["local_move"] = njit(**opts)(_local_move_loop)
    return _numba_cache


def get_impl(name: str) -> dict:
    """Return the named kernel set ("numba" or "numpy"), for benchmarks/tests."""
    if name == "numpy":
        return _NUMPY_IMPL
    if name == "numba":
        return _numba_impl()
    raise ValueError(f"unknown implementation {name!r}")


if NUMBA_ENABLED:
    _active = _numba_impl()
else:
    _active = _NUMPY_IMPL

directed_deltas_kernel = _active["directed_deltas"]
decayed_sums_kernel = _active["decayed_sums"]
local_move_kernel = _active["local_move"]
