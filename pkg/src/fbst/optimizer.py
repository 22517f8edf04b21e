"""Constrained maximization of the surprise function over a hypothesis set.

Closed-form paths cover the built-in families; the general path runs
multistart local ascent on a quadratic-penalty sequence seeded from the
best posterior draws, with a simulated-annealing fallback when restarts
disagree (multimodality flag).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from .model import (
    Hypothesis,
    InfeasibleHypothesisError,
    StatisticalModel,
    log_surprise,
)
from .sampler import SurpriseSample

EPS_OPT = 1e-8
REL_TOL = 1e-10


class UnboundedSurpriseError(RuntimeError):
    """Surprise diverges along a feasible sequence."""


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 32
    penalty_start: float = 1.0
    penalty_growth: float = 10.0
    outer_iterations: int = 8
    annealing_proposals: int = 50_000
    annealing_t0: float = 1.0
    annealing_t1: float = 1e-4
    multimodality_gap: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class Optimum:
    """Result of a surprise maximization over a hypothesis set."""

    log_s_star: float
    theta_star: np.ndarray
    method: str  # closed-form | multistart | annealing
    eq_residual: float
    ineq_residual: float
    restarts: int = 0
    boundary_flag: bool = False


def _surprise_at(model: StatisticalModel, theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)
    if not model.space.contains(theta):
        return -math.inf
    return float(log_surprise(model, theta))


def _finish(model, H, theta, method, restarts=0) -> Optimum:
    theta = np.asarray(theta, dtype=float)
    eq_res, ineq_res = H.residuals(theta)
    lo, hi = model.space.lower, model.space.upper
    at_boundary = bool(np.any(np.isclose(theta, lo) | np.isclose(theta, hi)))
    return Optimum(
        log_s_star=_surprise_at(model, theta),
        theta_star=theta,
        method=method,
        eq_residual=eq_res,
        ineq_residual=ineq_res,
        restarts=restarts,
        boundary_flag=at_boundary,
    )


# ---------------------------------------------------------------------------
# Closed-form paths
# ---------------------------------------------------------------------------


def closed_form_constrained_mode(model: StatisticalModel, a: np.ndarray) -> Optimum:
    """Constrained surprise maximizer of a polynomial-regression model
    under a single linear equality a . beta = 0.

    beta_tilde projects beta_hat onto the constraint in the X'X metric;
    sigma_tilde maximizes the profile of the posterior exponent.
    """
    if model.family != "polynomial-regression":
        raise ValueError("closed form requires the polynomial-regression family")
    ex = model.extra
    XtX_inv, beta_hat = ex["XtX_inv"], ex["beta_hat"]
    n, k, s2 = ex["n"], ex["k"], ex["s2"]
    a = np.asarray(a, dtype=float)
    denom = float(a @ XtX_inv @ a)
    if denom <= 0:
        raise ValueError("degenerate constraint direction")
    beta_tilde = beta_hat - XtX_inv @ a * (float(a @ beta_hat) / denom)
    diff = beta_tilde - beta_hat
    quad = float(diff @ ex["XtX"] @ diff)
    sigma2 = ((n - k) * s2 + quad) / (n + 1)
    theta = np.concatenate([beta_tilde, [0.5 * math.log(sigma2)]])
    eqs = (lambda th: np.asarray(th)[..., : k + 1] @ a,)
    H = Hypothesis(equalities=eqs, label="a.beta=0")
    return _finish(model, H, theta, "closed-form")


def _unconstrained_mode(model: StatisticalModel) -> Optional[np.ndarray]:
    """Exact surprise mode for built-in families (None when unknown)."""
    if model.family == "gaussian-mean":
        return np.array([model.extra["mean"]])
    if model.family == "polynomial-regression":
        ex = model.extra
        sigma2 = (ex["n"] - ex["k"]) * ex["s2"] / (ex["n"] + 1)
        return np.concatenate([ex["beta_hat"], [0.5 * math.log(sigma2)]])
    return None


def _try_closed_form(model: StatisticalModel, H: Hypothesis) -> Optional[Optimum]:
    d = model.space.dimension
    if H.negated_of is None and not H.equalities and not H.inequalities:
        mode = _unconstrained_mode(model)
        if mode is not None:
            return _finish(model, H, mode, "closed-form")
    if H.negated_of is not None and H.negated_of.is_sharp:
        # complement of a sharp set: the global mode is generically inside
        mode = _unconstrained_mode(model)
        if mode is not None and bool(H.contains(mode)):
            return _finish(model, H, mode, "closed-form")
    lins = H.linear_equalities
    if lins is None or H.negated_of is not None or H.inequalities:
        return None
    if len(lins) != len(H.equalities):
        return None
    A = np.array([le.coeffs for le in lins])
    b = -np.array([le.offset for le in lins])
    if len(lins) == d and abs(np.linalg.det(A)) > 1e-12:
        # constraints pin a unique point
        theta = np.linalg.solve(A, b)
        if not model.space.contains(theta):
            raise InfeasibleHypothesisError("pinned point outside parameter bounds")
        return _finish(model, H, theta, "closed-form")
    if (
        model.family == "polynomial-regression"
        and len(lins) == 1
        and lins[0].offset == 0.0
        and lins[0].coeffs[-1] == 0.0
    ):
        return closed_form_constrained_mode(model, lins[0].coeffs[:-1])
    if model.family == "gaussian-mean" and len(lins) == 1 and abs(lins[0].coeffs[0]) > 1e-12:
        theta = np.array([b[0] / A[0, 0]])
        return _finish(model, H, theta, "closed-form")
    return None


# ---------------------------------------------------------------------------
# Generic path
# ---------------------------------------------------------------------------


def _penalized(model, H, weight):
    inner = H.negated_of

    def objective(theta):
        val = _surprise_at(model, theta)
        if not np.isfinite(val):
            return 1e300
        pen = 0.0
        if inner is not None:
            # complement set: hard-wall on membership of the inner set
            if inner.contains(theta):
                return 1e300
        else:
            for h in H.equalities:
                pen += float(h(theta)) ** 2
            for g in H.inequalities:
                pen += max(0.0, float(g(theta))) ** 2
        return -val + weight * pen

    return objective


def _project_equalities(H: Hypothesis, theta: np.ndarray) -> np.ndarray:
    """One Gauss-Newton step toward h(theta) = 0 (numeric Jacobian)."""
    if not H.equalities or H.negated_of is not None:
        return theta
    h0 = np.array([float(h(theta)) for h in H.equalities])
    J = np.zeros((len(H.equalities), theta.size))
    eps = 1e-6
    for j in range(theta.size):
        step = np.zeros(theta.size)
        step[j] = eps
        hp = np.array([float(h(theta + step)) for h in H.equalities])
        J[:, j] = (hp - h0) / eps
    try:
        delta = np.linalg.lstsq(J, -h0, rcond=None)[0]
    except np.linalg.LinAlgError:
        return theta
    return theta + delta


def _refine_feasibility(H: Hypothesis, theta: np.ndarray, iters: int = 25) -> np.ndarray:
    """Polish residual constraint violations left by the finite penalty
    weights with Gauss-Newton steps on the active constraints."""
    if H.negated_of is not None:
        return theta
    theta = np.asarray(theta, dtype=float).copy()
    eps = 1e-7
    for _ in range(iters):
        funcs = list(H.equalities)
        funcs += [g for g in H.inequalities if float(g(theta)) > 0.0]
        if not funcs:
            return theta
        r0 = np.array([float(f(theta)) for f in funcs])
        if np.max(np.abs(r0)) <= EPS_OPT * 1e-2:
            return theta
        J = np.zeros((len(funcs), theta.size))
        for j in range(theta.size):
            step = np.zeros(theta.size)
            step[j] = eps
            J[:, j] = (np.array([float(f(theta + step)) for f in funcs]) - r0) / eps
        try:
            delta = np.linalg.lstsq(J, -r0, rcond=None)[0]
        except np.linalg.LinAlgError:
            return theta
        theta = theta + delta
    return theta


def _annealing(model, H, start, cfg: OptimizerConfig) -> np.ndarray:
    """Geometric-cooling Metropolis search on the penalized objective."""
    rng = np.random.default_rng(cfg.seed + 1)
    obj = _penalized(model, H, 1e6)
    theta = start.copy()
    cur = obj(theta)
    best, best_val = theta.copy(), cur
    n = cfg.annealing_proposals
    ratio = (cfg.annealing_t1 / cfg.annealing_t0) ** (1.0 / max(n - 1, 1))
    temp = cfg.annealing_t0
    scale = 0.1
    for _ in range(n):
        cand = theta + rng.standard_normal(theta.size) * scale
        val = obj(cand)
        if val < cur or rng.random() < math.exp(min(0.0, (cur - val) / temp)):
            theta, cur = cand, val
            if cur < best_val:
                best, best_val = theta.copy(), cur
        temp *= ratio
    return best


def maximize_surprise(
    model: StatisticalModel,
    H: Hypothesis,
    sample: Optional[SurpriseSample] = None,
    cfg: Optional[OptimizerConfig] = None,
) -> Optimum:
    """sup of the surprise function over H, with the tangential point.

    Tries the closed-form path first, then multistart penalized ascent
    seeded from the best posterior draws, then annealing if restarts
    disagree.  Raises InfeasibleHypothesisError when no feasible point
    can be produced.
    """
    cfg = cfg or OptimizerConfig()
    closed = _try_closed_form(model, H)
    if closed is not None:
        return closed

    # candidate starting points: best draws by log-surprise, projected
    starts = []
    if sample is not None and sample.size > 0:
        order = np.argsort(sample.log_surprise)[::-1]
        take = order[: cfg.restarts * 4]
        if H.negated_of is not None or H.equalities or H.inequalities:
            member = H.contains(sample.draws[take])
            preferred = sample.draws[take][member]
            others = sample.draws[take][~member]
            pool = np.concatenate([preferred, others]) if preferred.size else others
        else:
            pool = sample.draws[take]
        for theta in pool[: cfg.restarts]:
            starts.append(_project_equalities(H, theta.copy()))
    if model.mode is not None:
        starts.append(_project_equalities(H, np.asarray(model.mode, dtype=float)))
    if not starts:
        starts.append(_project_equalities(H, model.space.center()))

    results = []
    for theta0 in starts:
        theta = np.asarray(theta0, dtype=float)
        weight = cfg.penalty_start
        for _ in range(cfg.outer_iterations):
            res = minimize(
                _penalized(model, H, weight),
                theta,
                method="Nelder-Mead",
                options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000},
            )
            theta = res.x
            weight *= cfg.penalty_growth
        theta = _refine_feasibility(H, theta)
        eq_res, ineq_res = H.residuals(theta)
        feasible = eq_res <= EPS_OPT and ineq_res <= EPS_OPT
        if H.negated_of is not None:
            feasible = bool(H.contains(theta))
        if feasible:
            results.append((_surprise_at(model, theta), theta))

    method = "multistart"
    if not results:
        raise InfeasibleHypothesisError("no feasible point found for the hypothesis")
    values = sorted(v for v, _ in results)
    if len(values) > 1 and values[-1] - values[0] > cfg.multimodality_gap:
        # restarts disagree: run the annealing fallback from the best point
        best_theta = max(results, key=lambda r: r[0])[1]
        ann = _refine_feasibility(H, _annealing(model, H, best_theta, cfg))
        eq_res, ineq_res = H.residuals(ann)
        if eq_res <= EPS_OPT and ineq_res <= EPS_OPT:
            results.append((_surprise_at(model, ann), ann))
            method = "annealing"
    best_val, best_theta = max(results, key=lambda r: r[0])
    if np.linalg.norm(best_theta) > 1e8:
        raise UnboundedSurpriseError("surprise keeps improving along a feasible ray")
    if not np.isfinite(best_val):
        if best_val == math.inf:
            raise UnboundedSurpriseError("surprise diverges on the hypothesis set")
        raise InfeasibleHypothesisError("no feasible point with finite surprise")
    opt = _finish(model, H, best_theta, method, restarts=len(starts))
    return opt
