"""(epsilon, delta) differential-privacy checks and noise calibration.

The mechanism under audit releases N independent output trajectories of
length T+1.  Adjacency is Euclidean: initial values closer than ``d``.  The
sufficient condition certified here bounds the smallest eigenvalue of the
effective output covariance

    Sigma = H_T Sigma_V H_T^T + Sigma_W     (iid case)
    Sigma = [H_T I] Sigma_T [H_T I]^T       (general case)

from below by d^2 N ||O_T||^2 kappa(epsilon, delta)^2, where ``kappa`` is
the Gaussian-mechanism factor built from the upper tail function Q.  A
failed check means "not certified by this condition", not a proof that
privacy is violated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, erfcinv

from .errors import ConditioningError, ValidationError
from .obsv import build_bundle
from .sysmodel import LinearSystem

__all__ = [
    "DpBudget",
    "DpVerdict",
    "q_function",
    "q_inverse",
    "kappa",
    "stacked_noise_covariance",
    "effective_covariance",
    "check_dp",
    "calibrate_sigma_omega",
    "delta_min",
]

_SQRT2 = float(np.sqrt(2.0))

# Relative slack on the certification inequality; absorbs the rounding-order
# difference between a calibrated noise floor and the threshold it must meet.
BOUNDARY_RTOL = 1e-12


def q_function(w: float) -> float:
    """Standard normal upper tail Q(w) = P(Z > w)."""
    w = float(w)
    if not np.isfinite(w):
        raise ValidationError(f"w: must be finite, got {w!r}")
    return float(0.5 * erfc(w / _SQRT2))


def q_inverse(p: float) -> float:
    """Inverse of the upper tail on its useful branch, p in (0, 0.5]."""
    p = float(p)
    if not 0.0 < p <= 0.5:
        raise ValidationError(f"p: q_inverse requires p in (0, 0.5], got {p!r}")
    return float(_SQRT2 * erfcinv(2.0 * p))


def kappa(epsilon: float, delta: float) -> float:
    """Gaussian mechanism factor (Q^-1(delta) + sqrt(Q^-1(delta)^2 + 2 eps)) / (2 eps)."""
    epsilon = float(epsilon)
    delta = float(delta)
    if epsilon <= 0 or not np.isfinite(epsilon):
        raise ValidationError(f"epsilon: must be > 0, got {epsilon!r}")
    if not 0.0 < delta < 0.5:
        raise ValidationError(f"delta: must lie in (0, 0.5), got {delta!r}")
    r = q_inverse(delta)
    return float((r + np.sqrt(r * r + 2.0 * epsilon)) / (2.0 * epsilon))


@dataclass(frozen=True, eq=False)
class DpBudget:
    """Privacy budget and mechanism shape.

    ``d`` is the adjacency radius, ``N`` the number of released trajectories,
    ``T`` the horizon (None selects the minimum n-1 at evaluation time).
    """

    epsilon: float
    delta: float
    d: float
    N: int
    T: int | None = None

    def __post_init__(self) -> None:
        if not np.isfinite(self.epsilon) or self.epsilon <= 0:
            raise ValidationError(f"epsilon: must be > 0, got {self.epsilon!r}")
        if not 0.0 < self.delta < 0.5:
            raise ValidationError(f"delta: must lie in (0, 0.5), got {self.delta!r}")
        if not np.isfinite(self.d) or self.d <= 0:
            raise ValidationError(f"d: adjacency radius must be > 0, got {self.d!r}")
        if not isinstance(self.N, (int, np.integer)) or self.N < 1:
            raise ValidationError(f"N: must be an integer >= 1, got {self.N!r}")
        if self.T is not None and (not isinstance(self.T, (int, np.integer)) or self.T < 0):
            raise ValidationError(f"T: must be an integer >= 0, got {self.T!r}")
        object.__setattr__(self, "epsilon", float(self.epsilon))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "N", int(self.N))
        if self.T is not None:
            object.__setattr__(self, "T", int(self.T))


@dataclass(frozen=True, eq=False)
class DpVerdict:
    """Outcome of a sufficient-condition check.

    Standard form: satisfied iff lhs >= rhs with lhs = min eig of Sigma and
    rhs = d^2 N ||O_T||^2 kappa^2.  Refined form (refined_used=True):
    satisfied iff lhs <= rhs with lhs = ||O_T^T Sigma^-1 O_T|| and
    rhs = 1 / (d^2 N kappa^2).
    """

    satisfied: bool
    lhs: float
    rhs: float
    kappa: float
    refined_used: bool

    def to_dict(self) -> dict:
        return {
            "satisfied": bool(self.satisfied),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "kappa": self.kappa,
            "refined_used": self.refined_used,
        }


def stacked_noise_covariance(noise, H: np.ndarray) -> np.ndarray:
    """Covariance of H_T V_T + W_T for a given stacking map H_T."""
    rows = H.shape[0]
    if noise.kind == "iid":
        sigma = noise.sigma_nu**2 * (H @ H.T) + noise.sigma_omega**2 * np.eye(rows)
    else:
        joint = noise.Sigma_T
        expect = H.shape[1] + rows
        if joint.shape[0] != expect:
            raise ValidationError(
                f"noise.SigmaT: expected side {expect} = n*T + m*(T+1) for this horizon, "
                f"got {joint.shape[0]}"
            )
        G = np.hstack([H, np.eye(rows)])
        sigma = G @ joint @ G.T
    return 0.5 * (sigma + sigma.T)


def effective_covariance(sys: LinearSystem, T: int | None = None) -> np.ndarray:
    """Covariance of the stacked noise contribution at horizon T (default n-1)."""
    return stacked_noise_covariance(sys.noise, build_bundle(sys, T).H_T)


def _norm_OT(sys: LinearSystem, T: int | None) -> float:
    return float(np.linalg.norm(build_bundle(sys, T).O_T, 2))


def check_dp(sys: LinearSystem, budget: DpBudget, refined: bool = False) -> DpVerdict:
    """Check the sufficient (epsilon, delta) condition for the release of N
    trajectories.

    The refined variant replaces the eigenvalue bound with the exact norm of
    the whitened observability Gram matrix; it is never harder to satisfy
    than the standard one, and requires an invertible covariance (iid model
    with sigma_omega > 0).
    """
    k = kappa(budget.epsilon, budget.delta)
    if refined:
        if sys.noise.kind != "iid":
            raise ValidationError("refined: requires the iid noise model")
        bundle = build_bundle(sys, budget.T)
        sigma = effective_covariance(sys, budget.T)
        eigs = np.linalg.eigvalsh(sigma)
        if eigs[0] <= 0:
            raise ConditioningError(
                "refined: effective covariance is singular (needs sigma_omega > 0)"
            )
        gram = bundle.O_T.T @ np.linalg.solve(sigma, bundle.O_T)
        lhs = float(np.linalg.norm(0.5 * (gram + gram.T), 2))
        rhs = 1.0 / (budget.d**2 * budget.N * k * k)
        ok = lhs <= rhs * (1.0 + BOUNDARY_RTOL)
        return DpVerdict(satisfied=ok, lhs=lhs, rhs=rhs, kappa=k, refined_used=True)
    sigma = effective_covariance(sys, budget.T)
    lhs = float(np.linalg.eigvalsh(sigma)[0])
    rhs = budget.d**2 * budget.N * _norm_OT(sys, budget.T) ** 2 * k * k
    ok = lhs >= rhs * (1.0 - BOUNDARY_RTOL)
    return DpVerdict(satisfied=ok, lhs=lhs, rhs=rhs, kappa=k, refined_used=False)


def calibrate_sigma_omega(sys: LinearSystem, budget: DpBudget) -> float:
    """Smallest measurement-noise level certifying the budget for any
    process-noise level: sigma_omega = d sqrt(N) ||O_T|| kappa."""
    if sys.noise.kind != "iid":
        raise ValidationError("calibrate_sigma_omega: requires the iid noise model")
    k = kappa(budget.epsilon, budget.delta)
    return float(budget.d * np.sqrt(budget.N) * _norm_OT(sys, budget.T) * k)


def delta_min(
    sys: LinearSystem, epsilon: float, d: float, N: int, T: int | None = None
) -> float:
    """Smallest delta for which the sufficient condition can certify
    (epsilon, delta) at the system's current noise level.

    Values >= 0.5 mean the condition certifies nothing in the admissible
    delta range.  Decreasing in epsilon and in the noise floor.
    """
    epsilon = float(epsilon)
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ValidationError(f"epsilon: must be > 0, got {epsilon!r}")
    if not np.isfinite(d) or d <= 0:
        raise ValidationError(f"d: must be > 0, got {d!r}")
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValidationError(f"N: must be an integer >= 1, got {N!r}")
    sigma = effective_covariance(sys, T)
    s_min = float(np.linalg.eigvalsh(sigma)[0])
    if s_min <= 0:
        raise ConditioningError("delta_min: effective covariance is singular")
    c = d * np.sqrt(N) * _norm_OT(sys, T)
    root = np.sqrt(s_min)
    return q_function(epsilon * root / c - c / (2.0 * root))
