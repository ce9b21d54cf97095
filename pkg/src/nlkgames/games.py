"""Core two-player normal-form game types and the belief-blended payoff.

Every solver in the package reduces to the same primitive: a player who
best responds to a mixture that puts weight ``lam`` on an exogenous naive
opponent and weight ``1 - lam`` on an equilibrium opponent.  This module
holds the game representation and that blended expected payoff.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BeliefRangeError, DimensionError

TIE_TOLERANCE = 1e-9
PROB_SUM_TOLERANCE = 1e-12


def _as_probs(strategy) -> np.ndarray:
    """Accept a MixedStrategy or any probability sequence."""
    probs = getattr(strategy, "probs", strategy)
    return np.asarray(probs, dtype=float)


@dataclass(frozen=True)
class MixedStrategy:
    """Probability vector over one player's pure strategies."""

    probs: tuple[float, ...]

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionError("mixed strategy must be a non-empty vector")
        if np.any(arr < -PROB_SUM_TOLERANCE) or np.any(arr > 1 + PROB_SUM_TOLERANCE):
            raise BeliefRangeError(f"probabilities outside [0, 1]: {arr}")
        if abs(arr.sum() - 1.0) > PROB_SUM_TOLERANCE:
            raise BeliefRangeError(f"probabilities sum to {arr.sum()!r}, not 1")
        object.__setattr__(self, "probs", tuple(float(p) for p in arr))

    @classmethod
    def pure(cls, index: int, size: int) -> "MixedStrategy":
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, size: int) -> "MixedStrategy":
        return cls(np.full(size, 1.0 / size))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > TIE_TOLERANCE)


@dataclass(frozen=True)
class BeliefParam:
    """Subjective probability ``lam`` that the opponent is naive."""

    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise BeliefRangeError(f"lambda must lie in [0, 1], got {self.lam}")


def _as_lambda(lam) -> float:
    value = float(getattr(lam, "lam", lam))
    if not 0.0 <= value <= 1.0:
        raise BeliefRangeError(f"lambda must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class NormalFormGame:
    """Finite two-player game.

    ``payoffs[i][s_i][s_j]`` is player ``i``'s utility when playing own
    strategy ``s_i`` against opponent strategy ``s_j`` (own index first
    for both players, so ``payoffs[1]`` has shape ``(n2, n1)``).
    """

    strategy_labels: tuple[tuple[str, ...], tuple[str, ...]]
    payoffs: tuple[np.ndarray, np.ndarray] = field(repr=False)

    def __init__(self, strategy_labels, payoffs):
        labels = tuple(tuple(str(s) for s in side) for side in strategy_labels)
        if len(labels) != 2:
            raise DimensionError("exactly two players are supported")
        mats = []
        for i, mat in enumerate(payoffs):
            arr = np.asarray(mat, dtype=float)
            n_own = len(labels[i])
            n_opp = len(labels[1 - i])
            if arr.shape != (n_own, n_opp):
                raise DimensionError(
                    f"player {i} payoff matrix has shape {arr.shape}, "
                    f"expected {(n_own, n_opp)}",
                    player=i,
                )
            if not np.all(np.isfinite(arr)):
                raise DimensionError(f"player {i} payoffs contain non-finite values", player=i)
            arr.setflags(write=False)
            mats.append(arr)
        object.__setattr__(self, "strategy_labels", labels)
        object.__setattr__(self, "payoffs", (mats[0], mats[1]))

    @property
    def player_count(self) -> int:
        return 2

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.strategy_labels[0]), len(self.strategy_labels[1]))

    def num_strategies(self, player: int) -> int:
        return len(self.strategy_labels[player])

    def payoff_matrix(self, player: int) -> np.ndarray:
        return self.payoffs[player]


@dataclass(frozen=True)
class NaiveProfile:
    """Exogenous naive strategy per player; defaults to uniform play."""

    strategies: tuple[MixedStrategy, MixedStrategy]

    def __init__(self, strategies):
        pair = tuple(s if isinstance(s, MixedStrategy) else MixedStrategy(s) for s in strategies)
        if len(pair) != 2:
            raise DimensionError("naive profile needs one strategy per player")
        object.__setattr__(self, "strategies", pair)

    @classmethod
    def uniform(cls, game: NormalFormGame) -> "NaiveProfile":
        return cls(
            (
                MixedStrategy.uniform(game.num_strategies(0)),
                MixedStrategy.uniform(game.num_strategies(1)),
            )
        )

    def __getitem__(self, player: int) -> MixedStrategy:
        return self.strategies[player]


def _check_dims(game: NormalFormGame, player: int, own, opp) -> tuple[np.ndarray, np.ndarray]:
    own = _as_probs(own)
    opp = _as_probs(opp)
    if own.shape != (game.num_strategies(player),):
        raise DimensionError(
            f"player {player} strategy has length {own.size}, "
            f"expected {game.num_strategies(player)}",
            player=player,
        )
    if opp.shape != (game.num_strategies(1 - player),):
        raise DimensionError(
            f"player {1 - player} strategy has length {opp.size}, "
            f"expected {game.num_strategies(1 - player)}",
            player=1 - player,
        )
    return own, opp


def expected_payoff(game: NormalFormGame, player: int, own, opp) -> float:
    """Bilinear expected utility of ``own`` against ``opp`` for ``player``."""
    own, opp = _check_dims(game, player, own, opp)
    return float(own @ game.payoffs[player] @ opp)


def pure_payoffs_against(game: NormalFormGame, player: int, opp) -> np.ndarray:
    """Expected payoff of each of the player's pure strategies vs ``opp``."""
    opp = _as_probs(opp)
    if opp.shape != (game.num_strategies(1 - player),):
        raise DimensionError(
            f"opponent strategy has length {opp.size}, "
            f"expected {game.num_strategies(1 - player)}",
            player=1 - player,
        )
    return game.payoffs[player] @ opp


def blended_payoff(game: NormalFormGame, player: int, own, naive: NaiveProfile, equilibrium, lam) -> float:
    """Expected utility against the lam-weighted naive/equilibrium mixture.

    Returns ``lam * u(own, naive_opp) + (1 - lam) * u(own, eq_opp)``.
    """
    lam = _as_lambda(lam)
    naive_opp = naive[1 - player]
    return lam * expected_payoff(game, player, own, naive_opp) + (1.0 - lam) * expected_payoff(
        game, player, own, equilibrium
    )


def blended_pure_payoffs(
    game: NormalFormGame, player: int, naive: NaiveProfile, equilibrium, lam
) -> np.ndarray:
    """Blended payoff of every pure strategy; the solver's workhorse."""
    lam = _as_lambda(lam)
    vs_naive = pure_payoffs_against(game, player, naive[1 - player])
    vs_eq = pure_payoffs_against(game, player, equilibrium)
    return lam * vs_naive + (1.0 - lam) * vs_eq


def pure_best_responses(
    game: NormalFormGame, player: int, naive: NaiveProfile, equilibrium, lam
) -> tuple[int, ...]:
    """Pure strategies within TIE_TOLERANCE of the best blended payoff.

    Returned in ascending index order so downstream tie-breaking is
    deterministic.
    """
    values = blended_pure_payoffs(game, player, naive, equilibrium, lam)
    best = values.max()
    return tuple(int(i) for i in np.flatnonzero(values >= best - TIE_TOLERANCE))


def blended_matrix(game: NormalFormGame, player: int, naive: NaiveProfile, lam) -> np.ndarray:
    """Payoff matrix of the equivalent game in which the naive term is folded in.

    The naive opponent contributes a fixed payoff per own pure strategy, so
    the blended game is again bilinear:
    ``B[s][t] = (1 - lam) * payoff[s][t] + lam * E_naive[payoff[s]]``.
    A profile is an NLK equilibrium of the original game exactly when it is
    a Nash equilibrium of the blended game.
    """
    lam = _as_lambda(lam)
    base = game.payoffs[player]
    shift = pure_payoffs_against(game, player, naive[1 - player])
    return (1.0 - lam) * base + lam * shift[:, None]
