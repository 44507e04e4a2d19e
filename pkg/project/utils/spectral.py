"""Certified brackets and point estimates for log λ(φ), the stretching factor.

lower: log ρ of the abelianization, since abelianized lengths bound conjugacy lengths.
upper: translation length is at most displacement, so log λ(φ) ≤ dist(φ^k)/k on
       the unit rose; the same holds on a rose with any positive edge lengths,
       and the Perron vector of the transition matrix makes that bound sharp
       for positive train track maps on the rose.
point: ratio of conjugacy lengths of φ^{k+1}(c) and φ^k(c).

In rank 2 with a hyperbolic abelianization the point estimate is expected to
match the lower bound; rank_two_agreement measures how far apart they are.
"""
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Tuple
import logging
import math

import numpy as np

import config
from utils.errors import BitBudgetExceeded, WordBudgetExceeded
from utils.free_group import (
    Automorphism,
    CyclicWord,
    abelianization,
    apply_cyclic,
    compose,
    power,
    transition_matrix,
)
from utils.matrix_oracle import NO_BOUND, spectral_radius
from utils.outer_metric import candidates, dist, weighted_dist

logger = logging.getLogger(__name__)

_MIN_EDGE_LENGTH = 1e-6


@dataclass(frozen=True)
class StretchBracket:
    """Bracket on log λ(φ).

    Attributes:
        lower: log of the abelianization spectral radius (-inf when no bound).
        upper: Smallest certified upper bound found (inf when none was computable).
        point: Last Perron ratio estimate (nan when no ratio was computable).
        k_used: Largest power k for which the upper bound was computed.
        converged: Whether successive ratio logs agreed within the tolerance.
        unit_upper: dist(φ^k)/k on the unit rose, for k = 1..k_used.
    """
    lower: float
    upper: float
    point: float
    k_used: int
    converged: bool
    unit_upper: Tuple[float, ...] = field(default=())


def stretch_upper(phi: Automorphism, k: int, budget: Optional[int] = None) -> float:
    """(1/k)·dist(φ^k).

    Raises:
        WordBudgetExceeded: If φ^k outgrows the letter budget.
    """
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}")
    return dist(power(phi, k, budget), budget) / k


def perron_lengths(phi: Automorphism) -> np.ndarray:
    """Positive edge lengths from the Perron vector of φ's transition matrix."""
    matrix = transition_matrix(phi)
    try:
        values, vectors = np.linalg.eig(matrix)
        vector = np.abs(np.real(vectors[:, int(np.argmax(np.real(values)))]))
    except np.linalg.LinAlgError as e:
        logger.warning(f"Perron vector unavailable ({e}); using unit edge lengths")
        return np.ones(phi.rank)
    if not np.all(np.isfinite(vector)) or vector.max() <= 0:
        return np.ones(phi.rank)
    vector = vector / vector.max()
    return np.maximum(vector, _MIN_EDGE_LENGTH)


def stretch_upper_weighted(phi: Automorphism, k: int, budget: Optional[int] = None,
                           phi_k: Optional[Automorphism] = None) -> float:
    """(1/k)·Lipschitz displacement of φ^k on the rose with Perron edge lengths."""
    phi_k = phi_k or power(phi, k, budget)
    return weighted_dist(phi_k, perron_lengths(phi_k), budget) / k


def stretch_lower(phi: Automorphism) -> float:
    """log ρ(abelianization(φ)); exact for rank 2, a trace-based Gelfand bound above that."""
    try:
        return spectral_radius(abelianization(phi)).lower
    except BitBudgetExceeded as e:
        logger.warning(f"Abelianization powers exceeded the bit budget ({e}); no lower bound")
        return NO_BOUND


def stretch_ratio(phi: Automorphism, seed: CyclicWord, k_max: int,
                  budget: Optional[int] = None) -> Tuple[float, bool]:
    """Iterate φ on a conjugacy class and return (log of the last length ratio, converged).

    Stops early, unconverged, when the letter budget runs out.
    """
    if len(seed) == 0:
        raise ValueError("stretch_ratio needs a nontrivial seed")
    if k_max < 2:
        raise ValueError(f"k_max must be at least 2, got {k_max}")
    current = seed
    logs: List[float] = []
    exhausted = False
    for _ in range(k_max):
        try:
            image = apply_cyclic(phi, current, budget)
        except WordBudgetExceeded:
            exhausted = True
            break
        assert len(image) > 0, "an automorphism cannot kill a nontrivial conjugacy class"
        logs.append(math.log(len(image)) - math.log(len(current)))
        current = image
    if not logs:
        return math.nan, False
    converged = (not exhausted and len(logs) >= 2
                 and abs(logs[-1] - logs[-2]) < config.CONVERGENCE_TOL)
    return logs[-1], converged


def bracket(phi: Automorphism, k_max: Optional[int] = None, seeds: Optional[Iterable[CyclicWord]] = None,
            budget: Optional[int] = None) -> StretchBracket:
    """Assemble lower, upper and point estimates for log λ(φ).

    Each bound is computed as far as the letter budget admits; a bracket is
    always returned.

    Args:
        phi: The automorphism.
        k_max: Largest power tried for the upper bound and number of ratio steps.
        seeds: Conjugacy classes iterated for the point estimate; candidates by default.
        budget: Letter budget.
    """
    k_max = k_max or config.STANDALONE_K_MAX
    seeds = list(seeds) if seeds is not None else list(candidates(phi.rank).loops)
    lower = stretch_lower(phi)

    upper = math.inf
    unit_upper: List[float] = []
    phi_k = phi
    for k in range(1, k_max + 1):
        try:
            if k > 1:
                phi_k = compose(phi_k, phi, budget)
            unit = dist(phi_k, budget) / k
            weighted = stretch_upper_weighted(phi, k, budget, phi_k=phi_k)
        except WordBudgetExceeded as e:
            logger.warning(f"Upper bound stopped at k={k - 1}: {e}")
            break
        unit_upper.append(unit)
        upper = min(upper, unit, weighted)

    point, converged = math.nan, False
    for seed in seeds:
        estimate, seed_converged = stretch_ratio(phi, seed, max(k_max, 2), budget)
        if math.isnan(estimate):
            continue
        if math.isnan(point) or estimate > point:
            point, converged = estimate, seed_converged

    result = StretchBracket(lower, upper, point, len(unit_upper), converged, tuple(unit_upper))
    if lower > upper + config.LOG_TOL:
        logger.error(f"Bracket ordering violated for {phi}: lower={lower}, upper={upper}")
    logger.debug(f"bracket k_used={result.k_used} lower={lower:.6f} upper={upper:.6f} point={point:.6f}")
    return result


def rank_two_agreement(phi: Automorphism, result: StretchBracket) -> Optional[float]:
    """Relative gap |point − lower| / lower for a rank-2 bracket with hyperbolic abelianization.

    A gap beyond ``config.AGREEMENT_TOL`` is logged as a warning; it is a
    finding about the sample, not a failure.

    Args:
        phi: The automorphism the bracket was computed for.
        result: Its bracket.

    Returns:
        Optional[float]: The relative gap, or None when phi has rank other than 2,
            its abelianization has |trace| ≤ 2, or either estimate is missing.
    """
    if phi.rank != 2:
        return None
    if abs(abelianization(phi).trace()) <= 2:
        return None
    if not (math.isfinite(result.point) and math.isfinite(result.lower)) or result.lower <= 0.0:
        return None
    gap = abs(result.point - result.lower) / result.lower
    if gap > config.AGREEMENT_TOL:
        logger.warning(
            f"Rank-2 point estimate {result.point:.6f} disagrees with the abelianization "
            f"bound {result.lower:.6f} by {gap:.2%} for {phi}"
        )
    return gap
