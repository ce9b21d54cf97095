"""Dynamic NLK assessments for the alternating take-or-pass game.

Two players face a pot that doubles on every pass; stopping takes 80% and
leaves 20%.  Player A moves at odd nodes, player B at even nodes, and a
final pass splits the doubled pot 80/20 in A's favour.  An NLK player
starts with prior ``lam`` that the opponent is naive (stops with 1/2
everywhere) and updates that belief by Bayes' rule after every observed
pass.

The equilibrium has a characteristic shape: a pure-passing prefix, a
window of interior mixing, and certain stopping at the end.  Inside the
window two facts pin everything down:

* a mover who is willing to mix must believe the next node stops with
  probability exactly 6/7 (one-step indifference between taking 0.8x now
  and the 0.2/0.8 continuation payoffs), and
* at the last mixing node before a certain stop, that condition becomes
  "posterior that the opponent is naive equals 2/7".

Each candidate window shape therefore reduces to two alternating forward
chains, one of which is closed by a single scalar root-find.  Every
candidate is certified node-by-node (Bayes consistency plus sequential
rationality) before being returned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import BeliefRangeError, DataValidationError, NlkError, NonConvergenceError
from .games import _as_lambda

NAIVE_STOP = 0.5
# One-step indifference constants (pot ratios 1:2:4 with an 80/20 split).
STOP_HAZARD = 6.0 / 7.0
BELIEF_THRESHOLD = 2.0 / 7.0


@dataclass(frozen=True)
class CentipedeGame:
    """Game constants; ``stages`` is the number of decision nodes (2N)."""

    stages: int
    initial_pot: float = 5.0
    take_share: float = 0.8
    growth: float = 2.0

    def __post_init__(self):
        if self.stages < 2 or self.stages % 2 != 0:
            raise NlkError("stages must be an even integer >= 2")

    @property
    def rounds(self) -> int:
        return self.stages // 2

    def pot(self, node: int) -> float:
        self._check_node(node)
        return self.initial_pot * self.growth ** (node - 1)

    def _check_node(self, node: int) -> None:
        if not 1 <= node <= self.stages:
            raise NlkError(f"node {node} outside 1..{self.stages}")

    def mover(self, node: int) -> str:
        self._check_node(node)
        return "A" if node % 2 == 1 else "B"


def node_payoffs(game: CentipedeGame, node: int, action: str) -> tuple[float, float]:
    """Terminal payoffs (A, B) for stopping at ``node`` or passing at the last node."""
    game._check_node(node)
    action = action.lower()
    pot = game.pot(node)
    if action in ("t", "stop", "take"):
        mover_share = game.take_share * pot
        other_share = pot - mover_share
        if node % 2 == 1:
            return (mover_share, other_share)
        return (other_share, mover_share)
    if action in ("p", "pass"):
        if node != game.stages:
            raise NlkError("passing is terminal only at the final node")
        final = game.growth * pot
        return (game.take_share * final, final - game.take_share * final)
    raise NlkError(f"unknown action {action!r}")


def posterior_naive(lam, n: int) -> float:
    """Posterior that the opponent is naive after n-1 observed passes.

    Under a candidate profile in which the NLK opponent passes for sure,
    each pass is evidence 1/2 versus 1, so the posterior after ``n - 1``
    of them is lam (1/2)^(n-1) / (lam (1/2)^(n-1) + 1 - lam).
    """
    lam = _as_lambda(lam)
    if n < 1:
        raise NlkError("pass-round index must be at least 1")
    if lam == 0.0:
        return 0.0
    if lam == 1.0:
        return 1.0
    weight = lam * 0.5 ** (n - 1)
    return weight / (weight + (1.0 - lam))


def _validated_unit_vector(values, name: str, tol: float = 1e-9) -> tuple[float, ...]:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise NlkError(f"{name} must be a non-empty vector")
    if np.any(arr < -tol) or np.any(arr > 1 + tol):
        raise BeliefRangeError(f"{name} entries outside [0, 1]: {arr}")
    return tuple(float(np.clip(v, 0.0, 1.0)) for v in arr)


@dataclass(frozen=True)
class StopProfile:
    """Per-node probability that the active NLK player stops."""

    stop: tuple[float, ...]

    def __init__(self, stop):
        object.__setattr__(self, "stop", _validated_unit_vector(stop, "stop profile"))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.stop)

    def __len__(self) -> int:
        return len(self.stop)

    def __getitem__(self, i: int) -> float:
        return self.stop[i]


@dataclass(frozen=True)
class BeliefTrajectory:
    """Per-node posterior (held by the mover) that the opponent is naive."""

    p: tuple[float, ...]

    def __init__(self, p):
        object.__setattr__(self, "p", _validated_unit_vector(p, "belief trajectory"))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p)


@dataclass(frozen=True)
class PBNLKAssessment:
    """Strategies plus consistent beliefs, with certification residuals."""

    profile: StopProfile
    beliefs: BeliefTrajectory
    lam: float
    bayes_residual: float
    rationality_residual: float


def levelk_stop_profile(k: int, rounds: int) -> StopProfile:
    """Combined stop profile of level-k players in both roles.

    Player A (odd nodes) stops from node 2(N - floor(k/2)) + 1 and player B
    (even nodes) from node 2(N - ceil(k/2)) + 2; a level-k player passes at
    every earlier node and never updates.
    """
    if k < 1:
        raise NlkError("level must be at least 1")
    if rounds < 1:
        raise NlkError("rounds must be at least 1")
    stages = 2 * rounds
    h_a = k // 2
    h_b = (k + 1) // 2
    thr_a = max(1, 2 * (rounds - h_a) + 1) if h_a >= 1 else None
    thr_b = max(2, 2 * (rounds - h_b) + 2)
    stop = np.zeros(stages)
    for node in range(1, stages + 1):
        if node % 2 == 1:
            stop[node - 1] = 1.0 if thr_a is not None and node >= thr_a else 0.0
        else:
            stop[node - 1] = 1.0 if node >= thr_b else 0.0
    return StopProfile(stop)


def _beliefs_from_profile(stages: int, lam: float, stop: np.ndarray) -> np.ndarray:
    """Bayes posteriors at every node given the prior and the profile.

    The posterior held by the mover at node t depends only on the
    opponent's observed passes; own moves cancel from the ratio.  When the
    NLK opponent's passing probability is zero, a reached node reveals a
    naive opponent (posterior 1); with a zero prior the posterior stays 0.
    """
    beliefs = np.zeros(stages)
    if lam == 0.0:
        return beliefs
    for node in range(1, stages + 1):
        opp_nodes = range(2, node, 2) if node % 2 == 1 else range(1, node, 2)
        naive_reach = 1.0
        nlk_reach = 1.0
        for tau in opp_nodes:
            naive_reach *= 1.0 - NAIVE_STOP
            nlk_reach *= 1.0 - stop[tau - 1]
        num = lam * naive_reach
        beliefs[node - 1] = num / (num + (1.0 - lam) * nlk_reach)
    return beliefs


def _sequential_values(
    game: CentipedeGame, stop: np.ndarray, beliefs: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Stop value and pass value for the mover at every node.

    Backward recursion through the mover's own future nodes, with the
    opponent's stop hazard mixing the naive 1/2 and the profile rate by
    the mover's current belief.
    """
    stages = game.stages
    take = game.take_share
    v_stop = np.empty(stages)
    v_pass = np.empty(stages)
    for node in range(stages, 0, -1):
        pot = game.pot(node)
        v_stop[node - 1] = take * pot
        if node == stages:
            v_pass[node - 1] = (1.0 - take) * game.growth * pot
            continue
        p = beliefs[node - 1]
        hazard = p * NAIVE_STOP + (1.0 - p) * stop[node]
        stopped_payoff = (1.0 - take) * game.pot(node + 1)
        if node + 1 == stages:
            passed_payoff = take * game.growth * game.pot(node + 1)
        else:
            s_next = stop[node + 1]
            passed_payoff = s_next * v_stop[node + 1] + (1.0 - s_next) * v_pass[node + 1]
        v_pass[node - 1] = hazard * stopped_payoff + (1.0 - hazard) * passed_payoff
    return v_stop, v_pass


def assessment_residuals(
    game: CentipedeGame, profile: StopProfile, beliefs: BeliefTrajectory, lam: float
) -> tuple[float, float]:
    """(Bayes residual, sequential-rationality residual) of an assessment.

    The rationality residual at a node is the payoff a deviation would
    gain: the indifference gap where the profile mixes, the forgone pass
    value where it stops, and vice versa.
    """
    stop = profile.as_array()
    p = beliefs.as_array()
    recomputed = _beliefs_from_profile(game.stages, lam, stop)
    bayes = float(np.max(np.abs(recomputed - p))) if game.stages else 0.0
    v_stop, v_pass = _sequential_values(game, stop, p)
    interior = 1e-12
    rationality = 0.0
    for node in range(1, game.stages + 1):
        s = stop[node - 1]
        gap_stop = v_pass[node - 1] - v_stop[node - 1]
        if s <= interior:
            gap = max(0.0, -gap_stop)
        elif s >= 1.0 - interior:
            gap = max(0.0, gap_stop)
        else:
            gap = abs(gap_stop)
        rationality = max(rationality, gap)
    return bayes, rationality


def _chain_step(p: float, s_next: float) -> float:
    """Posterior after one more observed pass with NLK pass rate 1 - s_next."""
    num = p * (1.0 - NAIVE_STOP)
    den = num + (1.0 - p) * max(0.0, 1.0 - s_next)
    return 1.0 if den == 0.0 else num / den


def _mix_to_hazard(p: float) -> float:
    """Stop probability making the opponent's hazard equal 6/7 given belief p."""
    if p >= 1.0:
        return float("inf")
    return (STOP_HAZARD - p * NAIVE_STOP) / (1.0 - p)


def _even_window_candidate(rounds: int, lam: float, start: int) -> np.ndarray | None:
    """Candidate profile mixing on nodes ``start .. 2N-1`` (start even)."""
    if lam >= 1.0:
        return None
    stages = 2 * rounds
    m = start // 2
    prior_weight = lam * 0.5**m
    p_start = prior_weight / (prior_weight + (1.0 - lam))

    stop = np.zeros(stages)
    stop[-1] = 1.0

    # Odd-node strategies follow from B's indifference conditions.
    p = p_start
    for node in range(start, stages - 1, 2):
        if p >= 1.0:
            return None
        s = _mix_to_hazard(p)
        stop[node] = s  # node + 1 is odd; array is 0-indexed
        p = _chain_step(p, s)

    # Even-node strategies close through A's conditions; the window-opening
    # probability is the single unknown.
    def terminal_posterior(theta: float) -> float:
        q = prior_weight / (prior_weight + (1.0 - lam) * (1.0 - theta))
        for _node in range(start + 1, stages - 2, 2):
            s = min(1.0, _mix_to_hazard(q))
            q = _chain_step(q, s)
        return q

    def gap(theta: float) -> float:
        return terminal_posterior(theta) - BELIEF_THRESHOLD

    if gap(0.0) > 0.0:
        return None
    try:
        theta = brentq(gap, 0.0, 1.0 - 1e-14, xtol=1e-15, rtol=8.9e-16)
    except ValueError:
        return None
    stop[start - 1] = theta
    q = prior_weight / (prior_weight + (1.0 - lam) * (1.0 - theta))
    for node in range(start + 1, stages - 2, 2):
        s = _mix_to_hazard(q)
        stop[node + 1 - 1] = s
        q = _chain_step(q, s)
    if np.any(stop < -1e-12) or np.any(stop > 1 + 1e-12):
        return None
    return np.clip(stop, 0.0, 1.0)


def _opening_mix_candidate(rounds: int, lam: float) -> np.ndarray | None:
    """Candidate mixing from node 1 through 2N-2, stopping at 2N-1 and 2N."""
    if lam >= 1.0:
        return None
    stages = 2 * rounds
    if rounds == 1:
        return np.ones(2)
    stop = np.zeros(stages)
    stop[-1] = 1.0
    stop[-2] = 1.0

    # Even-node strategies from A's indifference chain (no free parameter).
    p = lam
    for node in range(1, stages - 2, 2):
        if p >= 1.0:
            return None
        s = _mix_to_hazard(p)
        stop[node + 1 - 1] = s
        p = _chain_step(p, s)
    if np.any(stop > 1 + 1e-12):
        return None

    # Odd-node strategies: the opening probability is pinned by B's final
    # indifference, which requires posterior 2/7 at node 2N-2.
    def terminal_posterior(theta: float) -> float:
        q_num = lam * 0.5
        q = q_num / (q_num + (1.0 - lam) * (1.0 - theta))
        for _node in range(2, stages - 3, 2):
            s = min(1.0, _mix_to_hazard(q))
            q = _chain_step(q, s)
        return q

    def gap(theta: float) -> float:
        return terminal_posterior(theta) - BELIEF_THRESHOLD

    if gap(0.0) > 0.0:
        return None
    try:
        theta = brentq(gap, 0.0, 1.0 - 1e-14, xtol=1e-15, rtol=8.9e-16)
    except ValueError:
        return None
    stop[0] = theta
    q_num = lam * 0.5
    q = q_num / (q_num + (1.0 - lam) * (1.0 - theta))
    for node in range(2, stages - 3, 2):
        s = _mix_to_hazard(q)
        stop[node + 1 - 1] = s
        q = _chain_step(q, s)
    if np.any(stop < -1e-12) or np.any(stop > 1 + 1e-12):
        return None
    return np.clip(stop, 0.0, 1.0)


def solve_pbnlk(rounds: int, lam, tolerance: float = 1e-9) -> PBNLKAssessment:
    """Solve the 2N-node game for the NLK assessment at prior ``lam``.

    Candidate window shapes are tried from the latest (the level-1-like
    profile, valid for large lam) to the earliest (mixing from node 1,
    valid for tiny lam); the first candidate whose Bayes and rationality
    residuals are within ``tolerance`` is returned.  Regime boundaries
    admit more than one equilibrium; the scan order makes the choice
    deterministic.
    """
    lam = _as_lambda(lam)
    if rounds < 1:
        raise NlkError("rounds must be at least 1")
    if tolerance <= 0:
        raise NlkError("tolerance must be positive")
    game = CentipedeGame(stages=2 * rounds)
    stages = game.stages

    if lam == 0.0:
        profile = StopProfile(np.ones(stages))
        beliefs = BeliefTrajectory(np.zeros(stages))
        bayes, rationality = assessment_residuals(game, profile, beliefs, lam)
        return PBNLKAssessment(profile, beliefs, lam, bayes, rationality)

    def level1_candidate() -> np.ndarray:
        level1 = np.zeros(stages)
        level1[-1] = 1.0
        return level1

    builders = [level1_candidate]
    builders += [
        (lambda start=start: _even_window_candidate(rounds, lam, start))
        for start in range(stages - 2, 1, -2)
    ]
    builders.append(lambda: _opening_mix_candidate(rounds, lam))
    if rounds == 1:
        builders.append(lambda: np.ones(stages))

    best_residual = np.inf
    for build in builders:
        stop = build()
        if stop is None:
            continue
        beliefs_arr = _beliefs_from_profile(stages, lam, stop)
        profile = StopProfile(stop)
        beliefs = BeliefTrajectory(beliefs_arr)
        bayes, rationality = assessment_residuals(game, profile, beliefs, lam)
        residual = max(bayes, rationality)
        best_residual = min(best_residual, residual)
        if residual <= tolerance:
            return PBNLKAssessment(profile, beliefs, lam, bayes, rationality)

    raise NonConvergenceError(
        f"no candidate assessment certified at lam={lam} "
        f"(best residual {best_residual:.3e}, tolerance {tolerance:.1e})",
        residual=best_residual,
    )


@dataclass(frozen=True)
class NodeObservations:
    """Reach/stop counts per node, with optional published frequencies.

    ``freqs`` overrides the count ratio when a dataset's conditional stop
    rates are published at fixed precision; otherwise frequencies are
    derived as stopped/reached.
    """

    reached: tuple[int, ...]
    stopped: tuple[int, ...]
    freqs: tuple[float, ...] | None = None

    def __post_init__(self):
        reached = tuple(int(r) for r in self.reached)
        stopped = tuple(int(s) for s in self.stopped)
        if len(reached) != len(stopped):
            raise DataValidationError("reached and stopped lengths differ")
        if any(r < 0 for r in reached) or any(s < 0 for s in stopped):
            raise DataValidationError("counts must be nonnegative")
        if any(s > r for r, s in zip(reached, stopped)):
            raise DataValidationError("stopped count exceeds reached count")
        object.__setattr__(self, "reached", reached)
        object.__setattr__(self, "stopped", stopped)
        if self.freqs is not None:
            freqs = tuple(float(f) for f in self.freqs)
            if len(freqs) != len(reached):
                raise DataValidationError("freqs length differs from counts")
            if any(not 0.0 <= f <= 1.0 for f in freqs):
                raise DataValidationError("frequencies must lie in [0, 1]")
            object.__setattr__(self, "freqs", freqs)

    def __len__(self) -> int:
        return len(self.reached)

    def frequencies(self) -> np.ndarray:
        if self.freqs is not None:
            return np.asarray(self.freqs)
        reached = np.asarray(self.reached, dtype=float)
        stopped = np.asarray(self.stopped, dtype=float)
        with np.errstate(invalid="ignore", divide="ignore"):
            freq = np.where(reached > 0, stopped / np.maximum(reached, 1), 0.0)
        return freq


def deviation_d(data: NodeObservations, model: StopProfile | np.ndarray) -> float:
    """Observation-weighted mean absolute gap between data and model stop rates.

    Weights are the per-node reach counts normalized by their total; nodes
    never reached carry no weight.
    """
    model_arr = model.as_array() if isinstance(model, StopProfile) else np.asarray(model, dtype=float)
    if len(data) != model_arr.size:
        raise DataValidationError(
            f"data has {len(data)} nodes but model has {model_arr.size}"
        )
    reached = np.asarray(data.reached, dtype=float)
    total = reached.sum()
    if total <= 0:
        raise DataValidationError("no observations: total reached count is zero")
    weights = reached / total
    gaps = np.abs(data.frequencies() - model_arr)
    return float(np.sum(weights * gaps))


def deviation_grid(
    data: NodeObservations, lambdas, rounds: int, tolerance: float = 1e-9
) -> list[tuple[float, float]]:
    """Deviation of the solved assessment from ``data`` across a lam grid."""
    out = []
    for lam in lambdas:
        assessment = solve_pbnlk(rounds, lam, tolerance)
        out.append((float(lam), deviation_d(data, assessment.profile)))
    return out
