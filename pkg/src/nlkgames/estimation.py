"""Model-to-data fitting: MSE comparisons, logit likelihoods, mixtures.

Choice models predict either a payoff vector per action (turned into
choice probabilities by a logit with precision eta) or a distribution
directly (the naive type).  Fitting is deterministic: grid passes
followed by golden-section refinement, and EM for mixture weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, NlkError, NonConvergenceError

GOLDEN_RATIO = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_max(fn, lo: float, hi: float, tol: float = 1e-6) -> float:
    """Argmax of a unimodal scalar function on [lo, hi]."""
    a, b = float(lo), float(hi)
    c = b - GOLDEN_RATIO * (b - a)
    d = a + GOLDEN_RATIO * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN_RATIO * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN_RATIO * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class ChoiceDataset:
    """Observation weight per action over a finite action set.

    CSV-loaded data carries integer counts; datasets reconstructed from
    published percentages may carry fractional weights (percent * n / 100),
    which the likelihood handles identically.
    """

    actions: tuple[str, ...]
    counts: tuple[float, ...]

    def __init__(self, actions, counts):
        acts = tuple(str(a) for a in actions)
        arr = np.asarray(counts, dtype=float)
        if arr.shape != (len(acts),):
            raise DataValidationError("one count per action required")
        if np.any(arr < 0):
            raise DataValidationError("counts must be nonnegative")
        if arr.sum() <= 0:
            raise DataValidationError("dataset is empty")
        object.__setattr__(self, "actions", acts)
        object.__setattr__(self, "counts", tuple(float(c) for c in arr))

    @property
    def n(self) -> float:
        return float(sum(self.counts))

    def frequencies(self) -> np.ndarray:
        arr = np.asarray(self.counts)
        return arr / arr.sum()

    def percentages(self) -> np.ndarray:
        return self.frequencies() * 100.0


@dataclass(frozen=True)
class PrecisionParam:
    """Logit sensitivity; eta = 0 collapses to uniform choice."""

    eta: float

    def __post_init__(self):
        if self.eta < 0:
            raise NlkError(f"precision must be nonnegative, got {self.eta}")


@dataclass(frozen=True)
class TypeSpec:
    """A behavioral type: payoff vector for the logit, or a direct distribution."""

    label: str
    payoffs: tuple[float, ...] | None = None
    distribution: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.payoffs is None) == (self.distribution is None):
            raise NlkError("exactly one of payoffs/distribution must be given")
        if self.payoffs is not None:
            arr = np.asarray(self.payoffs, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise NlkError(f"type {self.label!r} has non-finite payoffs")
            object.__setattr__(self, "payoffs", tuple(float(v) for v in arr))
        else:
            arr = np.asarray(self.distribution, dtype=float)
            if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-9:
                raise NlkError(f"type {self.label!r} distribution is not a probability vector")
            object.__setattr__(self, "distribution", tuple(float(v) for v in arr))

    def size(self) -> int:
        return len(self.payoffs if self.payoffs is not None else self.distribution)

    def choice_probs(self, eta: float) -> np.ndarray:
        if self.distribution is not None:
            return np.asarray(self.distribution)
        return logit_probs(self.payoffs, eta)


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters with objective value and information criteria."""

    parameters: dict
    objective: float
    objective_kind: str  # "mse" or "loglik"
    k: int
    n: float
    bic_value: float | None = None
    aic_value: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        weights = self.parameters.get("weights")
        if weights is not None:
            arr = np.asarray(weights, dtype=float)
            if np.any(arr < -1e-9) or abs(arr.sum() - 1.0) > 1e-6:
                raise NlkError("mixture weights must lie on the simplex")
        if self.objective_kind == "loglik":
            expected_bic = bic(self.k, self.n, self.objective)
            expected_aic = aic(self.k, self.objective)
            if self.bic_value is None:
                object.__setattr__(self, "bic_value", expected_bic)
            if self.aic_value is None:
                object.__setattr__(self, "aic_value", expected_aic)
            if abs(self.bic_value - expected_bic) > 1e-6 or abs(self.aic_value - expected_aic) > 1e-6:
                raise NlkError("BIC/AIC inconsistent with (k, n, LL)")

    def to_dict(self) -> dict:
        return {
            "parameters": dict(self.parameters),
            "objective": self.objective,
            "objective_kind": self.objective_kind,
            "k": self.k,
            "n": self.n,
            "bic": self.bic_value,
            "aic": self.aic_value,
        }


def bic(k: int, n: float, loglik_value: float) -> float:
    """k ln(n) - 2 LL."""
    if k < 0 or n < 1:
        raise NlkError("bic needs k >= 0 and n >= 1")
    return k * math.log(n) - 2.0 * loglik_value

def aic(k: int, loglik_value: float) -> float:
    """2k - 2 LL."""
    if k < 0:
        raise NlkError("aic needs k >= 0")
    return 2.0 * k - 2.0 * loglik_value


def mse_profile(pred_percent, data: ChoiceDataset | np.ndarray) -> float:
    """Mean squared gap between prediction and data, both in percent."""
    pred = np.asarray(pred_percent, dtype=float)
    data_pct = data.percentages() if isinstance(data, ChoiceDataset) else np.asarray(data, dtype=float)
    if pred.shape != data_pct.shape:
        raise DataValidationError(
            f"prediction has {pred.shape} entries but data has {data_pct.shape}"
        )
    return float(np.mean((pred - data_pct) ** 2))


def table_mse(pred_percent, data: ChoiceDataset | np.ndarray, decimals: int = 1) -> float:
    """MSE with the prediction rounded to reporting precision first.

    Published comparison tables round percentages before computing the
    error column; this reproduces them, while ``mse_profile`` stays exact.
    """
    return mse_profile(np.round(np.asarray(pred_percent, dtype=float), decimals), data)


def fit_lambda_mse(model, data: ChoiceDataset, grid=None, refine_tol: float = 1e-4) -> FitResult:
    """Best lam for a one-parameter percent-prediction family, by MSE.

    ``model`` maps lam to a predicted distribution in percent.  A grid
    pass brackets the optimum and golden-section refines it.
    """
    lambdas = np.asarray(grid if grid is not None else np.linspace(0.0, 1.0, 101))
    scores = np.array([mse_profile(model(l), data) for l in lambdas])
    best = int(np.argmin(scores))
    lo = lambdas[max(0, best - 1)]
    hi = lambdas[min(len(lambdas) - 1, best + 1)]
    lam = golden_section_max(lambda l: -mse_profile(model(l), data), lo, hi, tol=refine_tol)
    candidates = [lam, lambdas[best]]
    lam_star = min(candidates, key=lambda l: mse_profile(model(l), data))
    value = mse_profile(model(lam_star), data)
    return FitResult({"lam": float(lam_star)}, value, "mse", k=1, n=data.n)


def fit_lambda_rho_mse(model, data: ChoiceDataset, grid=None, refine_tol: float = 1e-4) -> FitResult:
    """Joint (lam, rho) MSE fit for a blended-population family.

    ``model`` maps (lam, rho) to percent predictions.  Coarse grid over
    both parameters, then coordinate-wise golden-section passes until the
    box shrinks below ``refine_tol``.
    """
    axis = np.asarray(grid if grid is not None else np.linspace(0.0, 1.0, 51))

    def objective(lam, rho):
        return mse_profile(model(lam, rho), data)

    best_pair = min(
        ((l, r) for l in axis for r in axis), key=lambda pair: objective(*pair)
    )
    lam, rho = best_pair
    step = float(axis[1] - axis[0]) if len(axis) > 1 else 0.5
    while step > refine_tol:
        lam = golden_section_max(
            lambda l: -objective(l, rho), max(0.0, lam - step), min(1.0, lam + step), refine_tol / 4
        )
        rho = golden_section_max(
            lambda r: -objective(lam, r), max(0.0, rho - step), min(1.0, rho + step), refine_tol / 4
        )
        step /= 2.0
    value = objective(lam, rho)
    return FitResult({"lam": float(lam), "rho": float(rho)}, value, "mse", k=2, n=data.n)


def logit_probs(payoffs, eta: float) -> np.ndarray:
    """Softmax of eta * payoffs with max-subtraction for overflow safety."""
    eta = float(getattr(eta, "eta", eta))
    if eta < 0:
        raise NlkError("precision must be nonnegative")
    scores = eta * np.asarray(payoffs, dtype=float)
    scores -= scores.max()
    weights = np.exp(scores)
    return weights / weights.sum()


def loglik(data: ChoiceDataset, spec: TypeSpec, eta: float) -> float:
    """Weighted log-likelihood of the data under one type at precision eta.

    Returns -inf explicitly when an observed action has zero probability.
    """
    probs = spec.choice_probs(eta)
    counts = np.asarray(data.counts)
    if probs.shape != counts.shape:
        raise DataValidationError("type and dataset action sets differ")
    observed = counts > 0
    if np.any(probs[observed] <= 0.0):
        return float("-inf")
    return float(np.sum(counts[observed] * np.log(probs[observed])))


def _expand_bracket(fn, hi: float = 1.0, max_hi: float = 2.0**16) -> float:
    """Grow the upper bound until the objective stops improving past it."""
    while hi < max_hi and fn(hi * 2.0) > fn(hi):
        hi *= 2.0
    return hi * 2.0


def fit_precision(data: ChoiceDataset, spec: TypeSpec, tol: float = 1e-6) -> FitResult:
    """Maximum-likelihood eta for a single type (golden-section search)."""
    if spec.distribution is not None:
        value = loglik(data, spec, 0.0)
        return FitResult({"eta": 0.0, "type": spec.label}, value, "loglik", k=0, n=data.n)

    def objective(eta):
        return loglik(data, spec, eta)

    hi = _expand_bracket(objective)
    eta = golden_section_max(objective, 0.0, hi, tol=tol)
    value = objective(eta)
    return FitResult({"eta": float(eta), "type": spec.label}, value, "loglik", k=1, n=data.n)


def mixture_loglik(data: ChoiceDataset, types: list[TypeSpec], weights, eta: float) -> float:
    weights = np.asarray(weights, dtype=float)
    probs = np.stack([t.choice_probs(eta) for t in types])
    mix = weights @ probs
    counts = np.asarray(data.counts)
    observed = counts > 0
    if np.any(mix[observed] <= 0.0):
        return float("-inf")
    return float(np.sum(counts[observed] * np.log(mix[observed])))


def fit_mixture(
    data: ChoiceDataset,
    types: list[TypeSpec],
    tol: float = 1e-8,
    max_iterations: int = 2_000,
) -> FitResult:
    """Mixture MLE: EM on the weights nested with scalar search on shared eta.

    Both half-steps are ascent steps, so the likelihood is monotone in the
    iteration; convergence is declared when it improves by less than
    ``tol``.  One type degenerates to ``fit_precision``.
    """
    if not types:
        raise NlkError("at least one type required")
    if len(types) == 1:
        single = fit_precision(data, types[0])
        params = dict(single.parameters)
        params["weights"] = (1.0,)
        params["types"] = (types[0].label,)
        return FitResult(params, single.objective, "loglik", k=single.k, n=data.n)

    counts = np.asarray(data.counts)
    m = len(types)
    weights = np.full(m, 1.0 / m)
    eta = 0.1
    current = mixture_loglik(data, types, weights, eta)
    for _ in range(max_iterations):
        # E/M step on weights at fixed eta.
        probs = np.stack([t.choice_probs(eta) for t in types])
        mix = weights @ probs
        with np.errstate(divide="ignore", invalid="ignore"):
            resp = (weights[:, None] * probs) / np.where(mix > 0, mix, 1.0)
        weights = (resp * counts).sum(axis=1)
        weights = weights / weights.sum()

        # Scalar ascent on eta at fixed weights.
        def objective(e):
            return mixture_loglik(data, types, weights, e)

        hi = _expand_bracket(objective)
        eta = golden_section_max(objective, 0.0, hi, tol=1e-8)

        updated = mixture_loglik(data, types, weights, eta)
        if updated < current - 1e-9:
            raise NonConvergenceError(
                "mixture likelihood decreased; EM step is inconsistent",
                last_iterate={"weights": weights.tolist(), "eta": eta},
                residual=current - updated,
            )
        if updated - current < tol:
            current = updated
            break
        current = updated
    else:
        raise NonConvergenceError(
            f"EM did not converge within {max_iterations} iterations",
            last_iterate={"weights": weights.tolist(), "eta": eta},
            residual=float("nan"),
        )

    k = (m - 1) + 1  # free weights plus the shared precision
    params = {
        "weights": tuple(float(w) for w in weights),
        "eta": float(eta),
        "types": tuple(t.label for t in types),
    }
    return FitResult(params, float(current), "loglik", k=k, n=data.n)
