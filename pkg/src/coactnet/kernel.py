"""Time-difference multisets between users and the exponential decay kernel.

For two users acting on the same content, the forward delta multiset from u
to v collects, for every action of u, the lag to v's first action at the
same or a later time. The pair multiset is the additive union of the two
directed multisets; each direction encodes one hypothesis about who
reacted to whom, so a simultaneous action contributes a zero lag twice.
A max-multiplicity union is available as ``union="max"`` for sensitivity
analysis.

The kernel weight of a lag is exp(-beta * dt). Lags beyond
``truncation_bound(beta, eps)`` have kernel value below eps and may be
skipped; each skipped lag changes a content key's contribution by at most
eps / (n_k - 1).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ._accel import directed_deltas_kernel
from .errors import ContractViolationError


@dataclass(frozen=True)
class KernelParams:
    """Decay rate (1 / time unit) and truncation tolerance."""

    beta: float
    eps: float = 1e-6

    def __post_init__(self):
        if self.beta < 0:
            raise ContractViolationError(f"beta must be >= 0, got {self.beta}")
        if not (0.0 < self.eps <= 1.0):
            raise ContractViolationError(f"eps must be in (0, 1], got {self.eps}")


def _as_sorted_array(ts, name: str) -> np.ndarray:
    arr = np.asarray(ts, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractViolationError(f"{name} must be one-dimensional")
    if arr.size > 1 and not np.all(np.diff(arr) > 0):
        raise ContractViolationError(f"{name} must be strictly ascending")
    return arr


def directed_deltas(tu, tv) -> np.ndarray:
    """Forward lags from each timestamp in tu to the first tv' >= t.

    Timestamps in tu with no subsequent tv entry contribute nothing; a
    simultaneous action yields a zero lag. At most len(tu) values are
    returned, in ascending order of the source timestamp.
    """
    tu = _as_sorted_array(tu, "tu")
    tv = _as_sorted_array(tv, "tv")
    if tu.size == 0 or tv.size == 0:
        return np.empty(0, np.float64)
    return directed_deltas_kernel(tu, tv)


def pair_deltas(tu, tv, union: str = "sum") -> np.ndarray:
    """Combined lag multiset for an unordered user pair.

    ``union="sum"`` (default) concatenates the two directed multisets;
    ``union="max"`` keeps each distinct lag with the larger of its two
    directed multiplicities.
    """
    forward = directed_deltas(tu, tv)
    backward = directed_deltas(tv, tu)
    if union == "sum":
        return np.concatenate([forward, backward])
    if union == "max":
        counts = Counter(forward.tolist())
        for value, mult in Counter(backward.tolist()).items():
            if mult > counts[value]:
                counts[value] = mult
        out = [v for v, mult in counts.items() for _ in range(mult)]
        return np.asarray(sorted(out), dtype=np.float64)
    raise ContractViolationError(f"unknown union mode {union!r}")


def kernel_value(dt, beta: float):
    """exp(-beta * dt); equals 1 when beta == 0 or dt == 0. Accepts arrays."""
    dt_arr = np.asarray(dt, dtype=np.float64)
    if np.any(dt_arr < 0):
        raise ContractViolationError("dt must be >= 0")
    if beta < 0:
        raise ContractViolationError("beta must be >= 0")
    out = np.exp(-beta * dt_arr)
    return float(out) if np.isscalar(dt) or dt_arr.ndim == 0 else out


def truncation_bound(beta: float, eps: float) -> float:
    """Largest lag worth evaluating: -ln(eps) / beta; inf when beta == 0."""
    if not (0.0 < eps <= 1.0):
        raise ContractViolationError(f"eps must be in (0, 1], got {eps}")
    if beta < 0:
        raise ContractViolationError(f"beta must be >= 0, got {beta}")
    if beta == 0:
        return math.inf
    return -math.log(eps) / beta
