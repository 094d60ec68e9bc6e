"""Constitutive interface laws: friction, cohesion and normal-compliance penalty.

Each law exists in a smooth variant (used for analysis-style property checks)
and a discrete variant (piecewise linear/constant, used by the solvers).
All functions are vectorised over numpy arrays and stateless.
"""

from dataclasses import dataclass

import numpy as np

from .errors import BoundViolated

__all__ = [
    "CohesiveParams",
    "PenaltyParams",
    "LawBoundsReport",
    "beta_smooth",
    "beta_smooth_prime",
    "beta_discrete",
    "beta_discrete_prime",
    "friction_smooth",
    "friction_smooth_prime",
    "friction_smooth_second",
    "cohesion_smooth",
    "cohesion_smooth_prime",
    "cohesion_smooth_second",
    "friction_discrete_prime",
    "cohesion_discrete_prime",
    "smooth_law_bounds_check",
]


@dataclass(frozen=True)
class CohesiveParams:
    """Friction/cohesion parameters.

    F_b     friction bound (stress)
    delta   friction smoothing length (> 0, only the smooth law uses it)
    K_c     fracture-toughness scale (stress * length)
    kappa   cohesion length scale (> 0)
    m       cohesion exponent (>= 1)
    """

    F_b: float = 1.0e-5
    delta: float = 1.0e-3
    K_c: float = 1.0e-3
    kappa: float = 1.0e-2
    m: float = 1.0

    def __post_init__(self):
        if self.F_b < 0.0 or self.K_c < 0.0:
            raise ValueError("F_b and K_c must be nonnegative")
        if self.delta <= 0.0 or self.kappa <= 0.0:
            raise ValueError("delta and kappa must be positive")
        if self.m < 1.0:
            raise ValueError("cohesion exponent m must be >= 1")


@dataclass(frozen=True)
class PenaltyParams:
    """Penalty regularisation parameter eps > 0."""

    eps: float = 1.0e-8

    def __post_init__(self):
        if self.eps <= 0.0:
            raise ValueError("eps must be positive")


# ----------------------------------------------------------------------
# Penalty law (normal compliance)
# ----------------------------------------------------------------------

def beta_smooth(s, eps):
    """C^1 mollified penalty: s/eps below -eps, -exp(2(s+eps)/(s-eps))
    on [-eps, eps), zero above. Concave, nondecreasing, <= 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    lo = s < -eps
    mid = (s >= -eps) & (s < eps)
    out[lo] = s[lo] / eps
    with np.errstate(under="ignore"):
        out[mid] = -np.exp(2.0 * (s[mid] + eps) / (s[mid] - eps))
    return out


def beta_smooth_prime(s, eps):
    """Derivative of beta_smooth; lies in [0, 1/eps]."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    lo = s < -eps
    mid = (s >= -eps) & (s < eps)
    out[lo] = 1.0 / eps
    d = s[mid] - eps
    with np.errstate(under="ignore"):
        out[mid] = 4.0 * eps * np.exp(2.0 * (s[mid] + eps) / d) / (d * d)
    return out


def beta_discrete(s, eps):
    """Discrete penalty min(0, s)/eps."""
    return np.minimum(0.0, np.asarray(s, dtype=float)) / eps


def beta_discrete_prime(s, eps):
    """Derivative of the discrete penalty: 1/eps on {s < 0}, else 0.

    The convention beta'(0) = 0 keeps the penalty inactive exactly on the
    contact-free set.
    """
    return np.where(np.asarray(s, dtype=float) < 0.0, 1.0 / eps, 0.0)


# ----------------------------------------------------------------------
# Friction law
# ----------------------------------------------------------------------

def friction_smooth(s, params):
    return params.F_b * np.sqrt(params.delta**2 + np.asarray(s, dtype=float) ** 2)


def friction_smooth_prime(s, params):
    s = np.asarray(s, dtype=float)
    return params.F_b * s / np.sqrt(params.delta**2 + s * s)


def friction_smooth_second(s, params):
    s = np.asarray(s, dtype=float)
    return params.F_b * params.delta**2 / (params.delta**2 + s * s) ** 1.5


def friction_discrete_prime(s, params):
    """Discrete friction traction F_b * sgn(s), with sgn(0) = 0."""
    return params.F_b * np.sign(np.asarray(s, dtype=float))


# ----------------------------------------------------------------------
# Cohesion law
# ----------------------------------------------------------------------

def cohesion_smooth(s, params):
    s = np.asarray(s, dtype=float)
    return params.K_c * s / (params.kappa + np.abs(s) ** params.m)


def cohesion_smooth_prime(s, params):
    s = np.asarray(s, dtype=float)
    m, kap = params.m, params.kappa
    a = np.abs(s) ** m
    return params.K_c * (kap + (1.0 - m) * a) / (kap + a) ** 2


def cohesion_smooth_second(s, params):
    s = np.asarray(s, dtype=float)
    m, kap = params.m, params.kappa
    a = np.abs(s) ** m
    w = kap + a
    with np.errstate(divide="ignore", invalid="ignore"):
        grade = np.where(s == 0.0, 0.0, np.abs(s) ** (m - 1.0) * np.sign(s))
    return params.K_c * m * grade * ((m - 1.0) * a - (m + 1.0) * kap) / w**3


def cohesion_discrete_prime(s, params):
    """Discrete cohesive traction (K_c/kappa) * ind{|s| < kappa}.

    Half-open at |s| = kappa, consistent with the a.e. derivative of
    (K_c/kappa) * min(kappa, |s|).
    """
    s = np.asarray(s, dtype=float)
    return (params.K_c / params.kappa) * (np.abs(s) < params.kappa)


# ----------------------------------------------------------------------
# Bounds check
# ----------------------------------------------------------------------

@dataclass
class LawBoundsReport:
    sample_count: int
    max_friction_prime: float
    max_friction_second: float
    max_beta_offset: float
    max_beta_prime: float
    min_beta_prime: float
    worst_complementarity: float
    worst_compliance: float
    passed: bool


def smooth_law_bounds_check(params, pen, sample_count=10_000,
                            beta_fn=None, beta_prime_fn=None):
    """Verify the analytic bounds of the smooth laws on a sampled grid.

    Checks, with K_f1 = F_b, K_f2 = F_b/delta and K_beta = K_beta1 = 1:
      |alpha_f'| <= K_f1,     |alpha_f''| <= K_f2,
      |beta(s) + [s]^-/eps| <= 1,    0 <= beta' <= 1/eps,
      beta(s)[s]^+ >= -eps,   beta(s)[s]^- <= -([s]^-)^2/eps + eps.

    ``beta_fn``/``beta_prime_fn`` may override the built-in penalty law
    (used by negative-control tests). Raises BoundViolated with the
    offending sample on the first failure.
    """
    if sample_count < 1000:
        raise ValueError("sample_count must be >= 1000")
    eps = pen.eps
    beta = beta_fn if beta_fn is not None else (lambda s: beta_smooth(s, eps))
    beta_p = (beta_prime_fn if beta_prime_fn is not None
              else (lambda s: beta_smooth_prime(s, eps)))

    tol = 1e-12  # roundoff slack on the closed-form bounds

    s_pen = np.linspace(-10.0 * eps, 10.0 * eps, sample_count)
    b = np.asarray(beta(s_pen), dtype=float)
    bp = np.asarray(beta_p(s_pen), dtype=float)
    s_neg = np.maximum(0.0, -s_pen)
    s_pos = np.maximum(0.0, s_pen)

    offset = np.abs(b + s_neg / eps)
    if np.any(offset > 1.0 + tol):
        i = int(np.argmax(offset))
        raise BoundViolated("|beta + [s]^-/eps| exceeds K_beta = 1", s_pen[i])
    if np.any(bp < -tol / eps) or np.any(bp > (1.0 + tol) / eps):
        i = int(np.argmax(np.maximum(-bp, bp - 1.0 / eps)))
        raise BoundViolated("beta' outside [0, 1/eps]", s_pen[i])
    comp_plus = b * s_pos
    if np.any(comp_plus < -eps * (1.0 + tol)):
        i = int(np.argmin(comp_plus))
        raise BoundViolated("beta(s)[s]^+ below -eps", s_pen[i])
    comp_minus = b * s_neg - (-(s_neg**2) / eps + eps)
    if np.any(comp_minus > eps * tol):
        i = int(np.argmax(comp_minus))
        raise BoundViolated("beta(s)[s]^- above -([s]^-)^2/eps + eps", s_pen[i])

    s_fric = np.linspace(-10.0 * params.delta, 10.0 * params.delta, sample_count)
    fp = np.abs(friction_smooth_prime(s_fric, params))
    fpp = np.abs(friction_smooth_second(s_fric, params))
    if np.any(fp > params.F_b * (1.0 + tol)):
        i = int(np.argmax(fp))
        raise BoundViolated("|alpha_f'| exceeds K_f1 = F_b", s_fric[i])
    if np.any(fpp > params.F_b / params.delta * (1.0 + tol)):
        i = int(np.argmax(fpp))
        raise BoundViolated("|alpha_f''| exceeds K_f2 = F_b/delta", s_fric[i])

    return LawBoundsReport(
        sample_count=sample_count,
        max_friction_prime=float(fp.max()),
        max_friction_second=float(fpp.max()),
        max_beta_offset=float(offset.max()),
        max_beta_prime=float(bp.max()),
        min_beta_prime=float(bp.min()),
        worst_complementarity=float(comp_plus.min()),
        worst_compliance=float(comp_minus.max()),
        passed=True,
    )
