"""Equilibrium solvers for finite two-player games with naive-blended beliefs.

A profile is an NLK equilibrium exactly when it is a Nash equilibrium of
the "blended" game in which each player's matrix is shifted by the fixed
expected payoff of facing the naive opponent (see ``games.blended_matrix``).
The primary method enumerates supports of that blended game; a damped
best-response iteration is available as a fallback for quick fixed points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import BeliefRangeError, NlkError, NonConvergenceError
from .games import (
    MixedStrategy,
    NaiveProfile,
    NormalFormGame,
    _as_lambda,
    blended_matrix,
    blended_pure_payoffs,
    expected_payoff,
)

SUPPORT_ENUMERATION = "support_enumeration"
DAMPED_ITERATION = "damped_iteration"

# Support enumeration is exact but combinatorial; this cap keeps requests
# honest about what the method can enumerate in reasonable time.
MAX_ENUMERABLE_STRATEGIES = 12


@dataclass(frozen=True)
class SolverOptions:
    method: str = SUPPORT_ENUMERATION
    damping: float = 0.5
    max_iterations: int = 10_000
    tolerance: float = 1e-10

    def __post_init__(self):
        if self.method not in (SUPPORT_ENUMERATION, DAMPED_ITERATION):
            raise NlkError(f"unknown solver method: {self.method!r}")
        if not 0.0 < self.damping <= 1.0:
            raise NlkError("damping must lie in (0, 1]")
        if self.max_iterations < 1:
            raise NlkError("max_iterations must be at least 1")
        if self.tolerance <= 0:
            raise NlkError("tolerance must be positive")


@dataclass(frozen=True)
class NlkEquilibrium:
    """A certified equilibrium profile with its regret certificate."""

    profile: tuple[MixedStrategy, MixedStrategy]
    lam: float
    epsilon: float

    @property
    def supports(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return (self.profile[0].support, self.profile[1].support)

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        a, b = self.profile
        if len(a.probs) != len(b.probs):
            return False
        return max(abs(x - y) for x, y in zip(a.probs, b.probs)) <= tol


def chicken_game() -> NormalFormGame:
    """Symmetric 2x2 hawk-dove game used throughout the test suite."""
    matrix = [[30.0, 20.0], [70.0, 0.0]]
    return NormalFormGame((("Dove", "Hawk"), ("Dove", "Hawk")), (matrix, matrix))


def verify_equilibrium(
    game: NormalFormGame, lam, naive: NaiveProfile, profile, epsilon: float
) -> tuple[bool, float]:
    """Check the no-profitable-pure-deviation condition up to ``epsilon``.

    Returns ``(ok, max_regret)`` where regret is measured against the
    blended payoff (naive with weight lam, the candidate profile itself
    with weight 1 - lam).
    """
    lam = _as_lambda(lam)
    strategies = [np.asarray(getattr(s, "probs", s), dtype=float) for s in profile]
    max_regret = 0.0
    for player in (0, 1):
        values = blended_pure_payoffs(game, player, naive, strategies[1 - player], lam)
        own_value = float(strategies[player] @ values)
        max_regret = max(max_regret, float(values.max() - own_value))
    return max_regret <= epsilon, max_regret


def _support_combinations(n: int, k: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(n), k)), dtype=int)


def _enumerate_equilibria(
    game: NormalFormGame, lam: float, naive: NaiveProfile, tolerance: float
) -> list[NlkEquilibrium]:
    n0, n1 = game.shape
    b0 = blended_matrix(game, 0, naive, lam)  # shape (n0, n1)
    b1 = blended_matrix(game, 1, naive, lam)  # shape (n1, n0)
    found: dict[tuple[tuple[int, ...], tuple[int, ...]], NlkEquilibrium] = {}

    # Equal-cardinality supports: standard for nondegenerate games.  Pure
    # profiles (k = 1) are always included, which also covers fully
    # degenerate blends such as lam = 1 where mixed systems are singular.
    for k in range(1, min(n0, n1) + 1):
        supports0 = _support_combinations(n0, k)
        supports1 = _support_combinations(n1, k)
        m0, m1 = len(supports0), len(supports1)
        pairs0 = np.repeat(np.arange(m0), m1)
        pairs1 = np.tile(np.arange(m1), m0)

        # System for player 0's mixture x on support I (given opponent
        # support J): rows of b1 restricted to (J, I) must be indifferent.
        #   [ b1[J, I]  -1 ] [x]   [0]
        #   [ 1 ... 1    0 ] [v] = [1]
        def build(mat: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
            m = len(rows)
            sub = mat[rows[:, :, None], cols[:, None, :]]
            out = np.zeros((m, k + 1, k + 1))
            out[:, :k, :k] = sub
            out[:, :k, k] = -1.0
            out[:, k, :k] = 1.0
            return out

        a_for_x = build(b1, supports1[pairs1], supports0[pairs0])
        a_for_y = build(b0, supports0[pairs0], supports1[pairs1])
        rhs = np.zeros(k + 1)
        rhs[k] = 1.0

        det_x = np.linalg.det(a_for_x)
        det_y = np.linalg.det(a_for_y)
        solvable = (np.abs(det_x) > 1e-12) & (np.abs(det_y) > 1e-12)
        if not solvable.any():
            continue
        idx = np.flatnonzero(solvable)
        sol_x = np.linalg.solve(a_for_x[idx], rhs)
        sol_y = np.linalg.solve(a_for_y[idx], rhs)

        neg_tol = 1e-10
        ok = (sol_x[:, :k] >= -neg_tol).all(axis=1) & (sol_y[:, :k] >= -neg_tol).all(axis=1)
        for j in np.flatnonzero(ok):
            pair = idx[j]
            sup0 = supports0[pairs0[pair]]
            sup1 = supports1[pairs1[pair]]
            x = np.zeros(n0)
            x[sup0] = np.clip(sol_x[j, :k], 0.0, None)
            x /= x.sum()
            y = np.zeros(n1)
            y[sup1] = np.clip(sol_y[j, :k], 0.0, None)
            y /= y.sum()
            ok_eq, regret = verify_equilibrium(game, lam, naive, (x, y), tolerance)
            if not ok_eq:
                continue
            key = (tuple(np.round(x, 9)), tuple(np.round(y, 9)))
            if key not in found:
                found[key] = NlkEquilibrium(
                    (MixedStrategy(x), MixedStrategy(y)), lam, float(max(regret, 0.0))
                )

    return sorted(found.values(), key=lambda eq: eq.supports)


def _damped_iteration(
    game: NormalFormGame, lam: float, naive: NaiveProfile, options: SolverOptions
) -> NlkEquilibrium:
    n0, n1 = game.shape
    current = [np.full(n0, 1.0 / n0), np.full(n1, 1.0 / n1)]
    for _ in range(options.max_iterations):
        ok, regret = verify_equilibrium(game, lam, naive, current, options.tolerance)
        if ok:
            return NlkEquilibrium(
                (MixedStrategy(current[0]), MixedStrategy(current[1])), lam, float(regret)
            )
        nxt = []
        for player in (0, 1):
            values = blended_pure_payoffs(game, player, naive, current[1 - player], lam)
            best = int(np.flatnonzero(values >= values.max() - 1e-12)[0])
            response = np.zeros_like(current[player])
            response[best] = 1.0
            nxt.append((1.0 - options.damping) * current[player] + options.damping * response)
        current = nxt
    _, regret = verify_equilibrium(game, lam, naive, current, options.tolerance)
    raise NonConvergenceError(
        f"damped iteration did not converge within {options.max_iterations} iterations "
        f"(last regret {regret:.3e})",
        last_iterate=(MixedStrategy(current[0]), MixedStrategy(current[1])),
        residual=regret,
    )


def solve_nlk(
    game: NormalFormGame,
    lam,
    naive: NaiveProfile | None = None,
    options: SolverOptions | None = None,
) -> list[NlkEquilibrium]:
    """Compute NLK equilibria of a finite two-player game.

    Support enumeration returns every equilibrium it can certify, in
    lexicographic support order; damped iteration returns the first
    certified fixed point of "best respond to lam*naive + (1-lam)*current".
    Raises NonConvergenceError rather than ever returning an uncertified
    answer.
    """
    lam = _as_lambda(lam)
    naive = naive if naive is not None else NaiveProfile.uniform(game)
    options = options or SolverOptions()

    if options.method == DAMPED_ITERATION:
        return [_damped_iteration(game, lam, naive, options)]

    if max(game.shape) > MAX_ENUMERABLE_STRATEGIES:
        raise NlkError(
            f"support enumeration handles at most {MAX_ENUMERABLE_STRATEGIES} "
            f"strategies per player; game has {game.shape}"
        )
    equilibria = _enumerate_equilibria(game, lam, naive, max(options.tolerance, 1e-9))
    if not equilibria:
        # Degenerate blends can defeat equal-support enumeration; fall back
        # to iteration before reporting failure.
        fallback = SolverOptions(
            method=DAMPED_ITERATION,
            damping=options.damping,
            max_iterations=options.max_iterations,
            tolerance=max(options.tolerance, 1e-9),
        )
        return [_damped_iteration(game, lam, naive, fallback)]
    return equilibria


def select_equilibrium(equilibria: list[NlkEquilibrium]) -> NlkEquilibrium:
    """Deterministic pick for downstream fitting.

    Symmetric profiles are preferred; among those, the largest total
    support; remaining ties resolve to the lexicographically first.
    """
    if not equilibria:
        raise NlkError("no equilibria to select from")

    def sort_key(eq: NlkEquilibrium):
        support_size = sum(len(s) for s in eq.supports)
        return (not eq.is_symmetric(), -support_size, eq.supports)

    return min(equilibria, key=sort_key)


def equilibrium_payoffs(game: NormalFormGame, eq: NlkEquilibrium) -> tuple[float, float]:
    """Expected payoffs of each player against the realized profile."""
    return (
        expected_payoff(game, 0, eq.profile[0], eq.profile[1]),
        expected_payoff(game, 1, eq.profile[1], eq.profile[0]),
    )
