"""Observability and noise-stacking matrices, numerical rank, column selection.

For a horizon T the stacked output of the system obeys

    Y_T = O_T x0 + H_T V_T + W_T,

where O_T stacks C, CA, ..., CA^T (so the classical observability matrix
O_ob is the T = n-1 case), V_T stacks the process noises nu_0 .. nu_{T-1},
W_T stacks the measurement noises omega_0 .. omega_T, and H_T is the lower
block-triangular Toeplitz map with block (i, j) = C A^(i-j-1) for i > j.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ConditioningError, ValidationError
from .sysmodel import DisclosureSet, LinearSystem, TimeVaryingSystem

__all__ = [
    "ObservabilityBundle",
    "Selector",
    "build_bundle",
    "build_tv_observability",
    "numerical_rank",
    "rank_tolerance",
    "select_columns",
]

#: Magnitude guard for matrix powers; beyond this the horizon is declared
#: ill-conditioned rather than silently overflowing.
POWER_OVERFLOW_LIMIT = 1e150


def _output_power_blocks(A: np.ndarray, C: np.ndarray, count: int) -> list[np.ndarray]:
    """[C, CA, ..., CA^(count-1)] with an overflow guard on each step."""
    blocks = [C]
    for k in range(1, count):
        nxt = blocks[-1] @ A
        peak = float(np.abs(nxt).max(initial=0.0))
        if not np.isfinite(peak) or peak > POWER_OVERFLOW_LIMIT:
            raise ConditioningError(
                f"entries of C A^{k} exceed {POWER_OVERFLOW_LIMIT:g}; "
                "the horizon is too long for this spectral radius"
            )
        blocks.append(nxt)
    return blocks


def stacked_maps(A: np.ndarray, C: np.ndarray, T: int) -> tuple[np.ndarray, np.ndarray]:
    """(O_T, H_T) for any horizon T >= 0.

    O_T has shape (m*(T+1), n); H_T has shape (m*(T+1), n*T) with an all-zero
    first block row.
    """
    if T < 0:
        raise ValidationError(f"T: horizon must be >= 0, got {T}")
    n = A.shape[0]
    m = C.shape[0]
    blocks = _output_power_blocks(A, C, T + 1)
    O_T = np.vstack(blocks)
    H_T = np.zeros((m * (T + 1), n * T))
    for i in range(1, T + 1):
        for j in range(i):
            H_T[i * m:(i + 1) * m, j * n:(j + 1) * n] = blocks[i - j - 1]
    return O_T, H_T


@dataclass(frozen=True, eq=False)
class ObservabilityBundle:
    """O_ob, O_T and H_T for one system and horizon (T >= n-1)."""

    n: int
    m: int
    T: int
    O_ob: np.ndarray
    O_T: np.ndarray
    H_T: np.ndarray


def build_bundle(sys: LinearSystem, T: int | None = None) -> ObservabilityBundle:
    """Observability bundle at horizon ``T`` (default n-1, the minimum allowed)."""
    n = sys.n
    if T is None:
        T = n - 1
    if T < n - 1:
        raise ValidationError(f"T: horizon must be >= n-1 = {n - 1}, got {T}")
    O_T, H_T = stacked_maps(sys.A, sys.C, T)
    O_ob = O_T[: sys.m * n, :]
    for M in (O_ob, O_T, H_T):
        M.flags.writeable = False
    return ObservabilityBundle(n=n, m=sys.m, T=T, O_ob=O_ob, O_T=O_T, H_T=H_T)


def build_tv_observability(sys: TimeVaryingSystem, T: int | None = None) -> np.ndarray:
    """Stacked time-varying observability map.

    Block row t is C_t A_{t-1} ... A_0 (block row 0 is C_0).  For constant
    sequences this reproduces O_T of the time-invariant system exactly.
    """
    if T is None:
        T = sys.T
    if T < 0:
        raise ValidationError(f"T: horizon must be >= 0, got {T}")
    if T > sys.T:
        raise ValidationError(f"T: sequences cover horizon {sys.T}, got {T}")
    rows = [sys.C_seq[0]]
    prod = np.eye(sys.n)
    for t in range(1, T + 1):
        prod = sys.A_seq[t - 1] @ prod
        peak = float(np.abs(prod).max(initial=0.0))
        if not np.isfinite(peak) or peak > POWER_OVERFLOW_LIMIT:
            raise ConditioningError(
                f"entries of the transition product at step {t} exceed {POWER_OVERFLOW_LIMIT:g}"
            )
        rows.append(sys.C_seq[t] @ prod)
    out = np.vstack(rows)
    out.flags.writeable = False
    return out


def rank_tolerance(M: np.ndarray, sigma_max: float | None = None) -> float:
    """Default singular-value cutoff: sigma_max * max(shape) * machine eps."""
    if sigma_max is None:
        sigma_max = float(np.linalg.norm(M, 2)) if min(M.shape) > 0 else 0.0
    return sigma_max * max(M.shape) * np.finfo(float).eps


def numerical_rank(M, tol: float | None = None) -> int:
    """Number of singular values above ``tol``.

    When ``tol`` is None the default cutoff from :func:`rank_tolerance` is
    used.  Comparisons between related matrices should pass one shared ``tol``
    computed from the largest matrix involved.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValidationError(f"matrix: expected 2-D, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError("matrix: entries must be finite")
    if min(M.shape) == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if tol is None:
        tol = float(s[0]) * max(M.shape) * np.finfo(float).eps
    return int(np.count_nonzero(s > tol))


@dataclass(frozen=True, eq=False)
class Selector:
    """Column selectors for a disclosure set over n nodes.

    ``E_P`` stacks the unit columns of the published nodes (in set order);
    ``E_Pbar`` stacks the remaining columns in increasing index order.
    """

    n: int
    P: DisclosureSet
    E_P: np.ndarray
    E_Pbar: np.ndarray

    @classmethod
    def for_nodes(cls, n: int, P) -> "Selector":
        P = DisclosureSet.coerce(P)
        P.validate_range(n)
        eye = np.eye(n)
        E_P = eye[:, list(P.nodes)] if len(P) else np.zeros((n, 0))
        E_Pbar = eye[:, list(P.complement(n))]
        E_P.flags.writeable = False
        E_Pbar.flags.writeable = False
        return cls(n=n, P=P, E_P=E_P, E_Pbar=E_Pbar)


def select_columns(M, selector: Selector, which: str = "unpublic") -> np.ndarray:
    """Columns of ``M`` at the published ("public") or hidden ("unpublic") nodes."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[1] != selector.n:
        raise ValidationError(
            f"matrix: expected {selector.n} columns to match the selector, got shape {M.shape}"
        )
    if which == "public":
        return M @ selector.E_P
    if which == "unpublic":
        return M @ selector.E_Pbar
    raise ValidationError(f"which: expected 'public' or 'unpublic', got {which!r}")
