"""Second-price common-value wallet auction: NLK bid lines and a grid solver.

Two bidders observe i.i.d. uniform signals on [1, 4]; the good is worth
the sum of the signals.  Value bidding 2x is the symmetric equilibrium,
x + 2.5 is the naive (expected-rival) bid, and the NLK family traces a
line between them.  The naive bidder randomizes uniformly over the value
range [2, 8], which is what makes a tie informative: conditional on a tie
at b, the rival is naive with probability (lam/6) / (lam/6 + (1-lam)/d),
where d is the NLK bid spread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DataValidationError,
    DimensionError,
    NlkError,
    NonConvergenceError,
    UnsupportedCaseError,
)
from .games import _as_lambda

SIGNAL_LOW = 1.0
SIGNAL_HIGH = 4.0
BID_LOW = 2.0
BID_HIGH = 8.0


@dataclass(frozen=True)
class WalletGame:
    """Constants of the AK wallet design (uniform signals, additive value)."""

    signal_low: float = SIGNAL_LOW
    signal_high: float = SIGNAL_HIGH

    def value(self, x1: float, x2: float) -> float:
        return x1 + x2


@dataclass(frozen=True)
class LinearBid:
    """Bid line b(x) = intercept + slope * x on the signal domain [1, 4]."""

    intercept: float
    slope: float

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        out = self.intercept + self.slope * x
        return float(out) if out.ndim == 0 else out

    @property
    def spread(self) -> float:
        return self.slope * (SIGNAL_HIGH - SIGNAL_LOW)


@dataclass(frozen=True)
class StepBid:
    """Two-level bid function (the level-2 boundary solution)."""

    threshold: float = 2.5
    low: float = 3.5
    high: float = 6.5

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        # The threshold itself resolves to the lower step (measure zero).
        out = np.where(x <= self.threshold, self.low, self.high)
        return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BidBounds:
    """Set-valued prediction: one-sided bid bounds instead of a point bid."""

    threshold: float = 2.5
    below_cap: float = 3.5
    above_floor: float = 6.5

    def interval(self, x: float) -> tuple[float | None, float | None]:
        """(lower bound, upper bound); None marks an unbounded side."""
        if x <= self.threshold:
            return (None, self.below_cap)
        return (self.above_floor, None)


@dataclass(frozen=True)
class AuctionRecord:
    subject: int
    period: int
    signal: float
    bid: float
    experienced: bool

    def __post_init__(self):
        if not SIGNAL_LOW <= self.signal <= SIGNAL_HIGH:
            raise DataValidationError(
                f"signal {self.signal} outside [{SIGNAL_LOW}, {SIGNAL_HIGH}]"
            )
        if not math.isfinite(self.bid) or self.bid < 0:
            raise DataValidationError(f"bid {self.bid} is not a nonnegative finite number")


def bnlk_bid(lam) -> LinearBid:
    """Symmetric linear NLK bid for naive weight ``lam``.

    The spread d solves lam d^2 + 3(2 - 3lam) d - 36(1 - lam) = 0 (positive
    root); the tie posterior is q = (6 - d)/3 and the endpoints follow from
    indifference at a tie: b(1) = 1.5q + 2, b(4) = 8 - 1.5q.  At lam = 0
    the quadratic degenerates and the limit is value bidding, d = 6.
    """
    lam = _as_lambda(lam)
    if lam < 1e-9:
        spread = 6.0
    else:
        spread = (3.0 / (2.0 * lam)) * (3.0 * lam - 2.0 + math.sqrt(4.0 + 4.0 * lam - 7.0 * lam**2))
    q = (6.0 - spread) / 3.0
    b_low = 1.5 * q + 2.0
    slope = spread / 3.0
    return LinearBid(intercept=b_low - slope, slope=slope)


def tie_posterior(lam) -> float:
    """Probability that the rival is naive conditional on a tied bid."""
    lam = _as_lambda(lam)
    return (6.0 - bnlk_bid(lam).spread) / 3.0


def levelk_bid(k: int):
    """Level-k bid predictions: a line (k=1), a step (k=2), or bounds (k=3)."""
    if k == 1:
        return LinearBid(intercept=2.5, slope=1.0)
    if k == 2:
        return StepBid()
    if k == 3:
        return BidBounds()
    raise UnsupportedCaseError(
        f"level-{k} bidding is not point-identified beyond k = 3"
    )


def mse_bids(records: list[AuctionRecord], bidfn) -> float:
    """Mean squared error of a point-valued bid function on bid data."""
    if isinstance(bidfn, BidBounds):
        raise NlkError("MSE undefined for set-valued bid predictions")
    if not records:
        raise DataValidationError("no auction records supplied")
    signals = np.array([r.signal for r in records])
    bids = np.array([r.bid for r in records])
    return float(np.mean((bids - np.asarray(bidfn(signals))) ** 2))


def mse_grid(records: list[AuctionRecord], lambdas) -> list[tuple[float, float]]:
    """MSE of the NLK bid line over a lam grid."""
    return [(float(lam), mse_bids(records, bnlk_bid(lam))) for lam in lambdas]


def second_price_payoff(own_bid, other_bid, own_signal, other_signal):
    """Winner pays the losing bid; exact ties split the surplus."""
    own_bid = np.asarray(own_bid, dtype=float)
    value = np.asarray(own_signal, dtype=float) + np.asarray(other_signal, dtype=float)
    surplus = value - np.asarray(other_bid, dtype=float)
    win = own_bid > other_bid
    tie = own_bid == other_bid
    return np.where(win, surplus, np.where(tie, 0.5 * surplus, 0.0))


def wallet_grids(n_signals: int = 31, n_actions: int = 121) -> tuple[np.ndarray, np.ndarray]:
    signals = np.linspace(SIGNAL_LOW, SIGNAL_HIGH, n_signals)
    actions = np.linspace(BID_LOW, BID_HIGH, n_actions)
    return signals, actions


def _anneal_iterate(
    blended_values,
    n_types: int,
    n_actions: int,
    lam: float,
    tolerance: float,
    max_iterations: int,
    anneal_steps: int,
) -> np.ndarray:
    """Damped inertial best-response iteration with a blend annealed from 1.

    ``blended_values(strategy_probs, blend)`` returns the (type, action)
    expected-payoff matrix against the blend of naive and strategic rivals.
    At blend 1 the best response is a single computation; stepping the
    blend down to the target keeps the iteration on the equilibrium branch,
    where the damped iteration is stable.
    """
    rows = np.arange(n_types)
    tie_eps = 1e-11

    def as_probs(pure: np.ndarray) -> np.ndarray:
        probs = np.zeros((n_types, n_actions))
        probs[rows, pure] = 1.0
        return probs

    def inertial_response(values: np.ndarray, current: np.ndarray) -> np.ndarray:
        # Argmax plateaus are common on grids; staying put whenever the
        # current action already attains the max makes grid equilibria
        # genuine fixed points of the iteration.
        br = values.argmax(axis=1)
        keep = values[rows, current] >= values[rows, br] - tie_eps
        return np.where(keep, current, br)

    def pure_regret(pure: np.ndarray, blend: float) -> float:
        values = blended_values(as_probs(pure), blend)
        return float(np.max(values.max(axis=1) - values[rows, pure]))

    schedule = np.linspace(1.0, lam, anneal_steps + 1)
    pure = blended_values(as_probs(np.zeros(n_types, dtype=int)), 1.0).argmax(axis=1)
    for blend in schedule:
        blend = float(blend)
        mixed = as_probs(pure)
        converged = False
        for _ in range(max_iterations):
            values = blended_values(mixed, blend)
            pure_next = inertial_response(values, pure)
            if np.array_equal(pure_next, pure) and pure_regret(pure, blend) <= max(tolerance, tie_eps):
                converged = True
                break
            pure = pure_next
            mixed = 0.5 * mixed + 0.5 * as_probs(pure)
        if not converged and blend == lam:
            raise NonConvergenceError(
                f"discrete solve did not converge at blend {blend:.3f}",
                last_iterate=pure.copy(),
                residual=pure_regret(pure, blend),
            )

    final_regret = pure_regret(pure, lam)
    if final_regret > max(tolerance, tie_eps):
        raise NonConvergenceError(
            "discrete solve ended with positive regret",
            last_iterate=pure.copy(),
            residual=final_regret,
        )
    return pure


def solve_bnlk_discrete(
    types: np.ndarray,
    actions: np.ndarray,
    prior: np.ndarray,
    payoff,
    lam,
    naive: np.ndarray | None = None,
    tolerance: float = 1e-9,
    max_iterations: int = 500,
    anneal_steps: int = 20,
) -> np.ndarray:
    """Type-contingent NLK best responses on finite type/action grids.

    ``prior[i, j]`` is the joint weight of (own type i, rival type j);
    ``payoff(a_own, a_other, t_own, t_other)`` must broadcast over numpy
    arrays.  ``naive`` is the naive rival's distribution over actions
    (uniform when omitted).

    Returns the action index per type of a certified fixed point: every
    type's action maximizes the lam-blend of payoff against the naive
    rival and against the returned strategy itself (regret <= tolerance),
    else NonConvergenceError.  The payoff tensor is materialized, so this
    generic entry point suits small grids; ``solve_wallet_discrete`` has a
    specialized fast path.
    """
    lam = _as_lambda(lam)
    types = np.asarray(types, dtype=float)
    actions = np.asarray(actions, dtype=float)
    prior = np.asarray(prior, dtype=float)
    if prior.shape != (types.size, types.size):
        raise DimensionError(
            f"prior has shape {prior.shape}, expected {(types.size, types.size)}"
        )
    if naive is None:
        naive = np.full(actions.size, 1.0 / actions.size)
    naive = np.asarray(naive, dtype=float)
    if naive.shape != (actions.size,):
        raise DataValidationError("naive distribution must live on the action grid")
    if (types.size * actions.size) ** 2 > 30_000_000:
        raise NlkError("type/action grids too large for the generic tensor path")

    cond = prior / prior.sum(axis=1, keepdims=True)  # rival type | own type

    # u[i, a, j, b]: own type i plays action a against rival type j playing b.
    u = payoff(
        actions[None, :, None, None],
        actions[None, None, None, :],
        types[:, None, None, None],
        types[None, None, :, None],
    )
    u_naive = np.einsum("iajb,b,ij->ia", u, naive, cond)

    def blended_values(strategy_probs: np.ndarray, blend: float) -> np.ndarray:
        u_strat = np.einsum("iajb,jb,ij->ia", u, strategy_probs, cond)
        return blend * u_naive + (1.0 - blend) * u_strat

    return _anneal_iterate(
        blended_values, types.size, actions.size, lam, tolerance, max_iterations, anneal_steps
    )


def solve_wallet_discrete(
    lam, n_signals: int = 31, n_actions: int = 121, tolerance: float = 1e-9
) -> tuple[np.ndarray, np.ndarray]:
    """Wallet-game specialization; returns (signals, bid per signal).

    Uses prefix sums over the rival's bid distribution instead of the full
    payoff tensor, so fine action grids stay cheap.
    """
    lam = _as_lambda(lam)
    signals, actions = wallet_grids(n_signals, n_actions)
    n = signals.size
    cond = np.full((n, n), 1.0 / n)  # iid signals: rival marginal is uniform
    naive = np.full(actions.size, 1.0 / actions.size)

    exp_rival_signal = cond @ signals

    def exclusive_cumsum(arr: np.ndarray, axis: int = -1) -> np.ndarray:
        out = np.cumsum(arr, axis=axis)
        return out - arr

    # Naive component: rival's bid is independent of her signal.
    cn = exclusive_cumsum(naive) + 0.5 * naive
    cbn = exclusive_cumsum(naive * actions) + 0.5 * naive * actions
    u_naive = (signals[:, None] + exp_rival_signal[:, None]) * cn[None, :] - cbn[None, :]

    def blended_values(strategy_probs: np.ndarray, blend: float) -> np.ndarray:
        # Aggregate the rival's (signal, bid) mass into per-bid weight and
        # per-bid signal mass, then win/tie terms are prefix sums.
        w = cond[0] @ strategy_probs  # rival bid distribution (same for all own types)
        m1 = (cond[0] * signals) @ strategy_probs
        g = m1 - actions * w
        cw = exclusive_cumsum(w) + 0.5 * w
        cg = exclusive_cumsum(g) + 0.5 * g
        u_strat = signals[:, None] * cw[None, :] + cg[None, :]
        return blend * u_naive + (1.0 - blend) * u_strat

    pure = _anneal_iterate(
        blended_values, n, actions.size, lam, tolerance, max_iterations=500, anneal_steps=20
    )
    return signals, actions[pure]
