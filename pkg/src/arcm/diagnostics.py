"""Trace auditing and optimality diagnostics.

Audits recorded runs against the guarantees the adaptive cubic scheme is
supposed to satisfy (monotone objective, per-success sufficient decrease,
penalty floor and exact multiplier transitions, bounded failure runs, and
the aggregate cubic step budget), classifies momentum events, and fits
empirical convergence rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, InsufficientDataError
from .objective import ObjectiveModel
from .optimizers import HyperParams, Trace, sigma_update
from .subproblem import lanczos_lambda_min

AUDIT_SLACK = 1e-10


@dataclass(frozen=True)
class MeasureConfig:
    """Normalizing constants for the optimality measure; the theory's exact
    constants depend on unknown Lipschitz bounds, so c1 = c2 = 1 makes the
    measure a scale-free surrogate. Known estimates may be recorded here."""

    c1: float = 1.0
    c2: float = 1.0
    l_g: Optional[float] = None
    l_h: Optional[float] = None
    kappa_h: Optional[float] = None
    f_star: Optional[float] = None

    def __post_init__(self):
        if self.c1 <= 0 or self.c2 <= 0:
            raise ConfigurationError("c1 and c2 must be positive")


@dataclass
class MeasureResult:
    value: float
    grad_term: float
    curvature_term: float
    lambda_min: float
    low_confidence: bool = False


def optimality_measure(model: ObjectiveModel, x, cfg: MeasureConfig = MeasureConfig()) -> MeasureResult:
    """Second-order optimality measure max(sqrt(||grad||/c1), -lam_min/c2).

    The curvature term is clamped at zero for positive-semidefinite
    Hessians. lam_min is exact below the dense cap, otherwise a Lanczos
    estimate carrying a low-confidence flag when unconverged.
    """
    g = model.gradient(x)
    gnorm = float(np.linalg.norm(g))
    if model.dense_hessian is not None:
        lam_min = float(np.linalg.eigvalsh(model.dense_hessian(x))[0])
        low_confidence = False
    else:
        lam_min, _, converged = lanczos_lambda_min(
            lambda v: model.hessian_vec(x, v), model.dim)
        low_confidence = not converged
    grad_term = math.sqrt(gnorm / cfg.c1)
    curvature_term = max(0.0, -lam_min / cfg.c2)
    return MeasureResult(value=max(grad_term, curvature_term),
                         grad_term=grad_term, curvature_term=curvature_term,
                         lambda_min=lam_min, low_confidence=low_confidence)


@dataclass
class AuditReport:
    monotone_ok: bool
    prop1_min_margin: float
    sigma_max_observed: float
    lemma3_ok: bool
    lemma3_bound: int
    max_failure_run: int
    lemma4_budget_ratio: float
    condition1_max_ratio: float
    violations: list[tuple[int, str, str]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "monotone_ok": self.monotone_ok,
            "prop1_min_margin": self.prop1_min_margin,
            "sigma_max_observed": self.sigma_max_observed,
            "lemma3_ok": self.lemma3_ok,
            "lemma3_bound": self.lemma3_bound,
            "max_failure_run": self.max_failure_run,
            "lemma4_budget_ratio": self.lemma4_budget_ratio,
            "condition1_max_ratio": self.condition1_max_ratio,
            "violations": [list(v) for v in self.violations],
        }

    def to_text(self) -> str:
        lines = [f"{key}: {value}" for key, value in self.to_dict().items()
                 if key != "violations"]
        for k, rule, detail in self.violations:
            lines.append(f"violation: k={k} rule={rule} {detail}")
        return "\n".join(lines)


def _condition1_ratio(rec) -> Optional[float]:
    if rec.cert is not None:
        return rec.cert.ratio_to_cubic
    if rec.step_norm <= 0.0 or rec.model_decrease <= 0.0:
        return None
    cubic = rec.sigma * rec.step_norm**3
    delta1 = max(0.0, cubic / 12.0 - rec.model_decrease)
    return delta1 / cubic


def audit_trace(trace: Trace, p: HyperParams, solver_was_exact: bool) -> AuditReport:
    """Check a completed trace against the scheme's invariants.

    All comparisons carry a 1e-10 slack. Sufficient decrease is only
    enforceable when the subproblems were solved exactly, hence the
    ``solver_was_exact`` flag.
    """
    recs = trace.records
    if not recs:
        raise ConfigurationError("cannot audit an empty trace")
    violations: list[tuple[int, str, str]] = []
    fs = [r.f for r in recs] + [trace.final_f]

    monotone_ok = True
    for i in range(len(fs) - 1):
        if fs[i + 1] > fs[i] + AUDIT_SLACK:
            monotone_ok = False
            k = recs[i + 1].k if i + 1 < len(recs) else recs[-1].k + 1
            violations.append((k, "monotone",
                               f"f rose from {fs[i]:.17g} to {fs[i + 1]:.17g}"))

    prop1_min_margin = math.inf
    if solver_was_exact:
        for i, r in enumerate(recs):
            if r.accepted == "fail":
                continue
            bound = (p.eta1 / 12.0) * r.sigma * r.step_norm**3
            margin = (fs[i] - fs[i + 1]) - bound
            prop1_min_margin = min(prop1_min_margin, margin)
            if margin < -AUDIT_SLACK:
                violations.append((r.k, "prop1_decrease",
                                   f"decrease {fs[i] - fs[i + 1]:.3e} below "
                                   f"bound {bound:.3e}"))

    sigma_max = max(r.sigma for r in recs)
    for r in recs:
        if r.sigma < p.sigma_min - AUDIT_SLACK:
            violations.append((r.k, "sigma_floor",
                               f"sigma {r.sigma:.17g} below sigma_min"))
    for i in range(len(recs) - 1):
        r = recs[i]
        rho_proxy = {"fail": p.eta1, "success": 0.5 * (p.eta1 + p.eta2),
                     "very_success": 1.0}[r.accepted]
        expected = sigma_update(r.sigma, rho_proxy, p)
        if not math.isclose(recs[i + 1].sigma, expected, rel_tol=1e-10,
                            abs_tol=1e-300):
            violations.append((recs[i + 1].k, "sigma_transition",
                               f"sigma moved {r.sigma:.17g} -> "
                               f"{recs[i + 1].sigma:.17g}, expected {expected:.17g}"))

    # failure-run bound: completed runs of consecutive failures between
    # successes must fit the penalty growth window
    raw = math.log(sigma_max / p.sigma_min) / math.log(p.gamma1)
    lemma3_bound = max(0, math.ceil(raw - 1e-9))
    max_failure_run = 0
    run_len = 0
    lemma3_ok = True
    for r in recs:
        if r.accepted == "fail":
            run_len += 1
        else:
            if run_len > 0:
                max_failure_run = max(max_failure_run, run_len)
                if run_len > lemma3_bound:
                    lemma3_ok = False
                    violations.append((r.k, "lemma3_failure_run",
                                       f"{run_len} consecutive failures exceed "
                                       f"bound {lemma3_bound}"))
            run_len = 0

    budget_num = sum(r.step_norm**3 for r in recs if r.accepted != "fail")
    drop = fs[0] - fs[-1]
    if budget_num == 0.0:
        lemma4_budget_ratio = 0.0
    elif drop <= 0.0:
        lemma4_budget_ratio = math.inf
    else:
        lemma4_budget_ratio = budget_num * p.eta1 * p.sigma_min / (12.0 * drop)
    if lemma4_budget_ratio > 1.0 + AUDIT_SLACK:
        violations.append((recs[-1].k, "lemma4_budget",
                           f"cubic step budget ratio {lemma4_budget_ratio:.6g} "
                           f"exceeds 1"))

    ratios = [r for r in (_condition1_ratio(rec) for rec in recs
                          if rec.accepted != "fail") if r is not None]
    condition1_max_ratio = max(ratios) if ratios else 0.0

    return AuditReport(
        monotone_ok=monotone_ok,
        prop1_min_margin=prop1_min_margin,
        sigma_max_observed=sigma_max,
        lemma3_ok=lemma3_ok,
        lemma3_bound=lemma3_bound,
        max_failure_run=max_failure_run,
        lemma4_budget_ratio=lemma4_budget_ratio,
        condition1_max_ratio=condition1_max_ratio,
        violations=violations,
    )


@dataclass
class MomentumEvents:
    helped_pos: int
    helped_neg: int
    beta_zero: int
    events: list[tuple[int, int]] = field(default_factory=list)


def classify_momentum_events(trace: Trace) -> MomentumEvents:
    """Partition successful iterations by the momentum activity.

    Successes with beta > 0 split by the sign of s'v; sign 0 (momentum
    buffer still empty) joins the beta-zero bucket so the three counts sum
    to the number of successes.
    """
    helped_pos = helped_neg = beta_zero = 0
    events: list[tuple[int, int]] = []
    for r in trace.records:
        if r.accepted == "fail":
            continue
        if r.beta > 0.0:
            events.append((r.k, r.momentum_sign))
        if r.beta > 0.0 and r.momentum_sign > 0:
            helped_pos += 1
        elif r.beta > 0.0 and r.momentum_sign < 0:
            helped_neg += 1
        else:
            beta_zero += 1
    return MomentumEvents(helped_pos=helped_pos, helped_neg=helped_neg,
                          beta_zero=beta_zero, events=events)


GRAD_TAIL_CUT = 1e-6


def fit_rate(trace: Trace, quantity: str = "grad_norm") -> float:
    """Least-squares slope of the min-so-far quantity on log-log axes.

    The window stops at the first record below the superlinear-tail cut
    (gradient norm under 1e-6). ``quantity`` is ``grad_norm`` or
    ``measure``; the latter uses sqrt(grad_norm), the gradient term of the
    optimality measure (the curvature term is not recorded in traces).
    """
    if quantity not in ("grad_norm", "measure"):
        raise ConfigurationError(f"unknown quantity {quantity!r}")
    vals = []
    ks = []
    for r in trace.records:
        if r.grad_norm < GRAD_TAIL_CUT:
            break
        v = r.grad_norm if quantity == "grad_norm" else math.sqrt(r.grad_norm)
        vals.append(v)
        ks.append(r.k)
    if len(vals) < 10:
        raise InsufficientDataError(
            f"need at least 10 pre-tail records, found {len(vals)}")
    min_so_far = np.minimum.accumulate(np.array(vals))
    x = np.log1p(np.array(ks, dtype=np.float64))
    y = np.log(min_so_far)
    slope = float(np.polyfit(x, y, 1)[0])
    return slope
