"""Exact (weight-specific) initial-value privacy tests and privacy indices.

A hidden node i is private with respect to a disclosure set P exactly when
its unit vector e_i is not a linear combination of the rows of the
observability matrix together with the published unit vectors: then two
initial states differing in x_i[0] can produce identical output statistics.
Three equivalent rank tests certify this:

  b:        rank(O_ob E_Pbar) == rank of the hidden columns excluding i
  c:        rank([O_ob; E_P^T; e_i^T]) == rank([O_ob; E_P^T]) + 1
  c_prime:  rank([O_ob; e_i^T] E_Pbar) == rank(O_ob E_Pbar) + 1

Whenever the node is private, an explicit non-identifiability direction eta
(zero on P, nonzero at i, annihilated by the observability map) is attached
to the verdict as a constructive certificate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from ._util import pmap, worker_count
from .errors import ConditioningError, ValidationError
from .obsv import Selector, build_bundle, numerical_rank
from .sysmodel import DisclosureSet, LinearSystem

__all__ = [
    "PrivacyVerdict",
    "IndexReport",
    "whole_vector_private",
    "node_private",
    "privacy_index",
    "privacy_index_bruteforce",
]

#: Relative residual bound for the constructive certificate eta.
ETA_RESIDUAL_RTOL = 1e-8

#: Hard cap for exhaustive disclosure-set enumeration.
BRUTEFORCE_MAX_NODES = 22

_CONDITIONS = ("b", "c", "c_prime", "all")


@dataclass(frozen=True, eq=False)
class PrivacyVerdict:
    """Outcome of one privacy test.

    ``node`` is a 0-based index, or the string "whole-vector" for the
    joint initial-value test.  ``ranks`` records the rank comparisons that
    produced the verdict; ``eta`` is the certifying direction when private.
    """

    node: Union[int, str]
    P: DisclosureSet
    private: bool
    ranks: dict
    certified_by: str
    eta: np.ndarray | None = None

    def to_dict(self, one_based: bool = False) -> dict:
        off = 1 if one_based else 0
        node = self.node if isinstance(self.node, str) else self.node + off
        out = {
            "node": node,
            "P": [p + off for p in self.P.nodes],
            "private": bool(self.private),
            "ranks": dict(self.ranks),
            "certified_by": self.certified_by,
        }
        if self.eta is not None:
            out["eta"] = [float(v) for v in self.eta]
        return out


@dataclass(frozen=True, eq=False)
class IndexReport:
    """Network privacy index: the largest disclosure size that still leaves
    some hidden node private for every disclosure set of that size."""

    index: int
    rank_Oob: int
    method: str
    note: str | None = None

    def to_dict(self) -> dict:
        out = {"index": self.index, "rank_Oob": self.rank_Oob, "method": self.method}
        if self.note is not None:
            out["note"] = self.note
        return out


def _svals(M: np.ndarray) -> np.ndarray:
    if min(M.shape) == 0:
        return np.zeros(0)
    return np.linalg.svd(M, compute_uv=False)


def _rank_at(M: np.ndarray, tol: float) -> int:
    s = _svals(M)
    return int(np.count_nonzero(s > tol))


def _build_eta(O_ob: np.ndarray, n: int, i: int, others: list[int]) -> np.ndarray:
    """Direction eta with eta_i = 1, eta = 0 on P, O_ob @ eta ~ 0.

    Writes column i as a combination of the other hidden columns (least
    squares) and folds the coefficients back with opposite sign.
    """
    K_minus = O_ob[:, others]
    K_i = O_ob[:, i]
    gamma = np.linalg.lstsq(K_minus, K_i, rcond=None)[0]
    eta = np.zeros(n)
    eta[i] = 1.0
    for idx, j in enumerate(others):
        eta[j] = -gamma[idx]
    scale = float(np.linalg.norm(O_ob, 2)) * max(1.0, float(np.linalg.norm(eta)))
    residual = float(np.linalg.norm(O_ob @ eta))
    if residual > ETA_RESIDUAL_RTOL * max(scale, np.finfo(float).tiny):
        raise ConditioningError(
            f"certificate residual {residual:.3e} exceeds tolerance; "
            "rank decision is too close to the cutoff"
        )
    return eta


def _evaluate_node(
    O_ob: np.ndarray,
    n: int,
    i: int,
    P: DisclosureSet,
    condition: str,
    rank_tol: float | None,
    want_eta: bool,
) -> PrivacyVerdict:
    sel = Selector.for_nodes(n, P)
    unpub = list(sel.P.complement(n))
    others = [j for j in unpub if j != i]
    e_i = np.zeros((1, n))
    e_i[0, i] = 1.0

    O_pbar = O_ob[:, unpub]
    K_minus = O_ob[:, others]
    M_cp = np.vstack([O_pbar, e_i[:, unpub]])

    need_c = condition in ("c", "all")
    if need_c:
        full = np.vstack([O_ob, sel.E_P.T, e_i])
        s_big = _svals(full)
        big_shape = full.shape
    else:
        s_big = _svals(M_cp)
        big_shape = M_cp.shape
    if rank_tol is None:
        smax = float(s_big[0]) if s_big.size else 0.0
        rank_tol = smax * max(big_shape) * np.finfo(float).eps

    rank_Opbar = _rank_at(O_pbar, rank_tol)
    rank_minus_i = _rank_at(K_minus, rank_tol)
    rank_with_ei = _rank_at(M_cp, rank_tol)

    b_private = rank_Opbar == rank_minus_i
    cp_private = rank_with_ei == rank_Opbar + 1
    verdicts = {"b": b_private, "c_prime": cp_private}
    if need_c:
        rank_full = int(np.count_nonzero(s_big > rank_tol))
        rank_base = _rank_at(np.vstack([O_ob, sel.E_P.T]), rank_tol)
        verdicts["c"] = rank_full == rank_base + 1

    if condition == "all":
        distinct = set(verdicts.values())
        if len(distinct) > 1:
            raise ConditioningError(
                f"rank conditions disagree at tolerance {rank_tol:.3e} "
                f"for node {i}, P={P.nodes}: {verdicts}"
            )
        private = b_private
        certified_by = "b"
    else:
        private = verdicts[condition]
        certified_by = condition

    eta = None
    if private and want_eta:
        eta = _build_eta(O_ob, n, i, others)
    return PrivacyVerdict(
        node=i,
        P=sel.P,
        private=private,
        ranks={
            "rank_Opbar": rank_Opbar,
            "rank_minus_i": rank_minus_i,
            "rank_with_ei": rank_with_ei,
        },
        certified_by=certified_by,
        eta=eta,
    )


def node_private(
    sys: LinearSystem,
    i: int,
    P: Union[DisclosureSet, Iterable[int], None] = None,
    condition: str = "all",
    rank_tol: float | None = None,
    want_eta: bool = True,
) -> PrivacyVerdict:
    """Privacy verdict for hidden node ``i`` under disclosure set ``P``.

    ``condition`` selects the deciding rank test ("b", "c", "c_prime"); the
    default "all" evaluates every test and raises if they disagree, which
    only happens when the numerical rank is ambiguous at the tolerance.
    """
    if condition not in _CONDITIONS:
        raise ValidationError(f"condition: expected one of {_CONDITIONS}, got {condition!r}")
    P = DisclosureSet.coerce(P)
    P.validate_range(sys.n)
    if not 0 <= i < sys.n:
        raise ValidationError(f"node: index {i} out of range [0, {sys.n - 1}]")
    if i in P:
        raise ValidationError(f"node: {i} is in the disclosure set; its value is already public")
    O_ob = build_bundle(sys).O_ob
    return _evaluate_node(O_ob, sys.n, i, P, condition, rank_tol, want_eta)


def whole_vector_private(sys: LinearSystem, rank_tol: float | None = None) -> PrivacyVerdict:
    """Joint test: the full initial state is non-identifiable iff O_ob drops rank."""
    bundle = build_bundle(sys)
    rank = numerical_rank(bundle.O_ob, tol=rank_tol)
    private = rank < sys.n
    eta = None
    if private:
        _, s, Vt = np.linalg.svd(bundle.O_ob)
        eta = Vt[-1, :].copy()
    return PrivacyVerdict(
        node="whole-vector",
        P=DisclosureSet(),
        private=private,
        ranks={"rank_Oob": rank, "n": sys.n},
        certified_by="prop1",
        eta=eta,
    )


def privacy_index(sys: LinearSystem, rank_tol: float | None = None) -> IndexReport:
    """Closed-form index n - rank(O_ob) - 1.

    A negative value means no hidden node stays private even with nothing
    published (fully observable network).
    """
    rank = numerical_rank(build_bundle(sys).O_ob, tol=rank_tol)
    index = sys.n - rank - 1
    note = "no level-0 privacy" if index < 0 else None
    return IndexReport(index=index, rank_Oob=rank, method="formula", note=note)


def _level_holds(O_ob: np.ndarray, n: int, level: int, rank_tol: float | None) -> bool:
    """True when every disclosure set of the given size leaves a private node."""

    def set_ok(P_nodes: tuple) -> bool:
        P = DisclosureSet(P_nodes)
        hidden = (j for j in range(n) if j not in P_nodes)
        return any(
            _evaluate_node(O_ob, n, j, P, "c_prime", rank_tol, want_eta=False).private
            for j in hidden
        )

    combos = itertools.combinations(range(n), level)
    if worker_count() > 1:
        return all(pmap(set_ok, combos))
    return all(set_ok(P_nodes) for P_nodes in combos)


def privacy_index_bruteforce(
    sys: LinearSystem, l_max: int | None = None, rank_tol: float | None = None
) -> IndexReport:
    """Exhaustive index: scan disclosure sizes upward, enumerating every set.

    Works only for small networks (n <= 22).  Losing privacy is monotone in
    the disclosure set, so the first failing size terminates the scan.
    """
    n = sys.n
    if n > BRUTEFORCE_MAX_NODES:
        raise ValidationError(
            f"n: brute-force enumeration capped at n <= {BRUTEFORCE_MAX_NODES}, got {n}"
        )
    if l_max is None:
        l_max = n - 1
    if l_max < 0:
        raise ValidationError(f"l_max: must be >= 0, got {l_max}")
    l_max = min(l_max, n - 1)
    O_ob = np.asarray(build_bundle(sys).O_ob)
    rank = numerical_rank(O_ob, tol=rank_tol)
    achieved = -1
    for level in range(l_max + 1):
        if not _level_holds(O_ob, n, level, rank_tol):
            break
        achieved = level
    note = "no level-0 privacy" if achieved < 0 else None
    return IndexReport(index=achieved, rank_Oob=rank, method="brute_force", note=note)
