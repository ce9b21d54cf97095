"""The 11-20 money request game: closed forms and population blends.

Two players each request an integer amount between 11 and 20 and receive
it, plus a bonus of 20 for undercutting the opponent by exactly one.
The NLK equilibrium has a closed piecewise form in the naive-opponent
weight lam; level-k play cycles through the pure requests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BeliefRangeError, NlkError
from .games import NormalFormGame, _as_lambda

ACTIONS = tuple(range(11, 21))
BONUS = 20.0
_N_ACTIONS = 10


@dataclass(frozen=True)
class RequestDistribution:
    """Probability of each request 11..20."""

    probs: tuple[float, ...]

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=float)
        if arr.shape != (_N_ACTIONS,):
            raise NlkError(f"request distribution needs {_N_ACTIONS} entries, got {arr.shape}")
        if np.any(arr < -1e-12):
            raise BeliefRangeError("negative request probability")
        if abs(arr.sum() - 1.0) > 1e-12:
            raise BeliefRangeError(f"request probabilities sum to {arr.sum()!r}")
        object.__setattr__(self, "probs", tuple(float(p) for p in arr))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.probs)

    def as_percent(self) -> np.ndarray:
        return self.as_array() * 100.0

    def prob(self, action: int) -> float:
        return self.probs[action - 11]


@dataclass(frozen=True)
class PopulationBlend:
    """Objective naive share rho alongside the subjective belief lam."""

    rho: float
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise BeliefRangeError(f"rho must lie in [0, 1], got {self.rho}")
        if not 0.0 <= self.lam <= 1.0:
            raise BeliefRangeError(f"lambda must lie in [0, 1], got {self.lam}")


def game_1120() -> NormalFormGame:
    """Symmetric 10x10 matrix form: u(s, t) = s + 20 if s = t - 1, else s."""
    n = _N_ACTIONS
    matrix = np.empty((n, n))
    for i, own in enumerate(ACTIONS):
        for j, other in enumerate(ACTIONS):
            matrix[i, j] = own + (BONUS if own == other - 1 else 0.0)
    labels = tuple(str(a) for a in ACTIONS)
    return NormalFormGame((labels, labels), (matrix, matrix))


# Breakpoints of the piecewise closed form, half-open on the right.
_BREAKS = (0.5, 0.7, 0.85, 0.95)


def nlk_1120(lam) -> RequestDistribution:
    """Unique NLK equilibrium of the 11-20 game for belief ``lam``.

    Probabilities (over requests 15..20; all lower requests get zero):

    * lam in [0, 1/2): (5-10L, 5-2L, 4-2L, 3-2L, 2-2L, 1-2L) / (20(1-L))
    * lam in [1/2, 7/10): 16..19 get (14-20L, 3, 2, 1) / (20(1-L))
    * lam in [7/10, 17/20): 17..19 get (17-20L, 2, 1) / (20(1-L))
    * lam in [17/20, 19/20): 18..19 get (19-20L, 1) / (20(1-L))
    * lam in [19/20, 1]: request 19 with certainty.

    Adjacent branches agree at the shared endpoints, so the half-open
    convention only fixes which formula is evaluated.
    """
    lam = _as_lambda(lam)
    probs = np.zeros(_N_ACTIONS)
    if lam >= _BREAKS[3]:
        probs[ACTIONS.index(19)] = 1.0
        return RequestDistribution(probs)

    denom = 20.0 * (1.0 - lam)
    if lam < _BREAKS[0]:
        masses = {
            15: 5 - 10 * lam,
            16: 5 - 2 * lam,
            17: 4 - 2 * lam,
            18: 3 - 2 * lam,
            19: 2 - 2 * lam,
            20: 1 - 2 * lam,
        }
    elif lam < _BREAKS[1]:
        masses = {16: 14 - 20 * lam, 17: 3.0, 18: 2.0, 19: 1.0}
    elif lam < _BREAKS[2]:
        masses = {17: 17 - 20 * lam, 18: 2.0, 19: 1.0}
    else:
        masses = {18: 19 - 20 * lam, 19: 1.0}
    for action, mass in masses.items():
        probs[ACTIONS.index(action)] = mass / denom
    return RequestDistribution(probs)


def levelk_1120(k: int) -> int:
    """Pure request of a level-k player; the hierarchy cycles with period 10."""
    if k < 1:
        raise NlkError("level must be at least 1; level-0 is a distribution, use NaiveProfile")
    r = k % 10
    return 20 - r if r != 0 else 20


def population_1120(blend: PopulationBlend) -> RequestDistribution:
    """Observable mix: rho naive players (uniform) plus 1-rho NLK players."""
    nlk = nlk_1120(blend.lam).as_array()
    uniform = np.full(_N_ACTIONS, 1.0 / _N_ACTIONS)
    return RequestDistribution(blend.rho * uniform + (1.0 - blend.rho) * nlk)


def expected_payoffs_1120(opponent: RequestDistribution | np.ndarray) -> np.ndarray:
    """Expected payoff of each own request against an opponent distribution.

    u(s) = s + 20 * P(opponent requests s + 1).
    """
    opp = opponent.as_array() if isinstance(opponent, RequestDistribution) else np.asarray(opponent, dtype=float)
    if opp.shape != (_N_ACTIONS,):
        raise NlkError(f"opponent distribution needs {_N_ACTIONS} entries")
    values = np.array(ACTIONS, dtype=float)
    values[:-1] += BONUS * opp[1:]
    return values


def blended_payoffs_1120(lam) -> np.ndarray:
    """Blended expected payoff per request for an NLK player with belief lam."""
    lam = _as_lambda(lam)
    uniform = np.full(_N_ACTIONS, 1.0 / _N_ACTIONS)
    eq = nlk_1120(lam).as_array()
    return lam * expected_payoffs_1120(uniform) + (1.0 - lam) * expected_payoffs_1120(eq)
