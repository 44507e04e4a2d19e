"""Lipschitz metric on the orbit of the unit rose in outer space.

Every orbit distance is a value of one function:

    dist(Θ) = d(R, R·Θ) = log max over candidates c of ‖Θ(c)‖ / ‖c‖

where the candidates are the petals x_i and the figure-eights x_i x_j^{±1}.
The left action is Φ.y₀ = R·Φ⁻¹, so d(Φ.y₀, Ψ.y₀) = dist(Ψ⁻¹Φ).

Gromov products use the symmetrized metric d_sym(x, y) = d(x, y) + d(y, x),
without rescaling.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple
import csv
import logging
import math

import numpy as np

import config
from utils.errors import SampleError
from utils.free_group import (
    Automorphism,
    CyclicWord,
    apply,
    apply_cyclic,
    cyclic_reduce,
    image_length,
    invert,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateSet:
    """The N² candidate loops of the unit rose: N petals and N(N−1) figure-eights."""
    rank: int
    loops: Tuple[CyclicWord, ...]

    def __len__(self) -> int:
        return len(self.loops)


_CANDIDATE_CACHE = {}


def candidates(rank: int) -> CandidateSet:
    """Petals x_i, then x_i x_j and x_i x_j⁻¹ for i < j."""
    if rank < 2:
        raise ValueError(f"candidates need rank ≥ 2, got {rank}")
    if rank not in _CANDIDATE_CACHE:
        loops: List[CyclicWord] = [CyclicWord((i,), rank) for i in range(1, rank + 1)]
        for i in range(1, rank + 1):
            for j in range(i + 1, rank + 1):
                loops.append(CyclicWord((i, j), rank))
                loops.append(CyclicWord((i, -j), rank))
        _CANDIDATE_CACHE[rank] = CandidateSet(rank, tuple(loops))
    return _CANDIDATE_CACHE[rank]


def candidate_image_lengths(theta: Automorphism, budget: Optional[int] = None) -> List[Tuple[CyclicWord, CyclicWord]]:
    """Pairs (candidate, cyclically reduced image) for every candidate loop."""
    return [
        (loop, cyclic_reduce(apply(theta, loop.as_word(), budget)))
        for loop in candidates(theta.rank).loops
    ]


def dist(theta: Automorphism, budget: Optional[int] = None) -> float:
    """d(R, R·Θ): log of the largest stretch of a candidate loop.

    Raises:
        WordBudgetExceeded: If an image outgrows the letter budget.
    """
    best_num, best_den = 0, 1
    for loop, image in candidate_image_lengths(theta, budget):
        if len(image) * best_den > best_num * len(loop):
            best_num, best_den = len(image), len(loop)
    if best_num == best_den:
        return 0.0
    return math.log(best_num) - math.log(best_den)


def weighted_dist(theta: Automorphism, lengths: Sequence[float], budget: Optional[int] = None) -> float:
    """Lipschitz distance from the rose with edge lengths ``lengths`` to its Θ-remarking.

    The supremum is still attained on the petals and figure-eights, measured
    with the weighted lengths; total volume cancels in the ratio.
    """
    weights = np.asarray(lengths, dtype=float)
    if weights.shape != (theta.rank,) or np.any(weights <= 0):
        raise ValueError("edge lengths must be one positive value per generator")
    best = 0.0
    for loop, image in candidate_image_lengths(theta, budget):
        best = max(best, _weighted_length(image, weights) / _weighted_length(loop, weights))
    return math.log(best)


def _weighted_length(loop: CyclicWord, weights: np.ndarray) -> float:
    counts = np.bincount(np.abs(loop.letters.astype(np.int64)) - 1, minlength=len(weights))
    return float(counts @ weights)


def sym_dist(theta: Automorphism, budget: Optional[int] = None) -> float:
    """d_sym(R, R·Θ) = dist(Θ) + dist(Θ⁻¹)."""
    return dist(theta, budget) + dist(invert(theta), budget)


def chain_dist(thetas: Sequence[Automorphism], budget: Optional[int] = None) -> float:
    """dist(θ_1∘θ_2∘…∘θ_k) without composing the factors.

    Each candidate loop is carried through θ_k, …, θ_2 under the letter
    budget; only the length of its image under θ_1 is measured, so the
    outermost image never has to fit the budget.

    Args:
        thetas: Factors of the product, outermost first, all of one rank.
        budget: Letter budget for the inner images.

    Returns:
        float: log max over candidates c of ‖θ_1(…θ_k(c))‖ / ‖c‖.

    Raises:
        ValueError: If ``thetas`` is empty.
        WordBudgetExceeded: If an inner image outgrows the letter budget.
    """
    if not thetas:
        raise ValueError("chain_dist needs at least one factor")
    outer, inner = thetas[0], thetas[1:]
    best_num, best_den = 0, 1
    for loop in candidates(outer.rank).loops:
        image = loop
        for theta in reversed(inner):
            image = apply_cyclic(theta, image, budget)
        length = image_length(outer, image)
        if length * best_den > best_num * len(loop):
            best_num, best_den = length, len(loop)
    if best_num == best_den:
        return 0.0
    return math.log(best_num) - math.log(best_den)


def orbit_distance(phi: Automorphism, psi: Automorphism, budget: Optional[int] = None) -> float:
    """d(Φ.y₀, Ψ.y₀) = dist(Ψ⁻¹Φ)."""
    return chain_dist((invert(psi), phi), budget)


def gromov_product(phi: Automorphism, psi: Automorphism, budget: Optional[int] = None) -> float:
    """(Φ.y₀ | Ψ.y₀) based at y₀, in the symmetrized orbit metric.

    The distance between the two points is read off the factors, so Ψ⁻¹Φ is
    never built; for Ψ = Φ⁻¹ its images would be about twice as long as Φ's.

    Returns:
        float: ½(d_sym(y₀, Φ.y₀) + d_sym(y₀, Ψ.y₀) − d_sym(Φ.y₀, Ψ.y₀)).
    """
    between = chain_dist((invert(psi), phi), budget) + chain_dist((invert(phi), psi), budget)
    return 0.5 * (sym_dist(phi, budget) + sym_dist(psi, budget) - between)


def highness_ratio(theta: Automorphism, probes: Sequence[Automorphism], budget: Optional[int] = None) -> float:
    """Largest d_sym(y', y) / d(y', y) over probe points y' = P.y₀, at y = Θ.y₀.

    Probes at zero distance from y are skipped. The result is a lower bound
    on the highness constant of y; 1.0 when every probe is skipped.

    Raises:
        ValueError: If ``probes`` is empty.
    """
    if not probes:
        raise ValueError("highness_ratio needs at least one probe")
    theta_inverse = invert(theta)
    best = 1.0
    skipped = 0
    for probe in probes:
        forward = chain_dist((theta_inverse, probe), budget)
        if forward <= 0.0:
            skipped += 1
            continue
        backward = chain_dist((invert(probe), theta), budget)
        best = max(best, (forward + backward) / forward)
    if skipped:
        logger.debug(f"highness_ratio skipped {skipped} probes at zero distance")
    if skipped == len(probes):
        logger.warning("Every highness probe sat at zero distance; returning the trivial ratio 1")
    return best


@dataclass(frozen=True, eq=False)
class FiniteMetricSample:
    """Labelled points with a validated symmetric distance matrix.

    Raises:
        SampleError: If the matrix is not square, symmetric, zero on the
            diagonal, nonnegative, or breaks the triangle inequality.
    """
    labels: Tuple[str, ...]
    distances: np.ndarray

    def __post_init__(self) -> None:
        d = np.asarray(self.distances, dtype=float)
        object.__setattr__(self, "distances", d)
        n = len(self.labels)
        tol = config.LOG_TOL
        if d.shape != (n, n):
            raise SampleError(f"distance matrix shape {d.shape} does not match {n} labels")
        if not np.all(np.isfinite(d)):
            raise SampleError("distances must be finite")
        if np.any(np.abs(np.diag(d)) > tol) or np.any(d < -tol):
            raise SampleError("distances must be nonnegative with a zero diagonal")
        if np.any(np.abs(d - d.T) > tol):
            raise SampleError("distance matrix must be symmetric")
        for j in range(n):
            excess = d - (d[:, j][:, None] + d[j, :][None, :])
            if excess.max(initial=0.0) > tol:
                i, k = np.unravel_index(np.argmax(excess), excess.shape)
                raise SampleError(
                    f"triangle inequality fails for ({self.labels[i]}, {self.labels[j]}, {self.labels[k]})"
                )

    def __len__(self) -> int:
        return len(self.labels)

    def to_csv(self, path: str) -> None:
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow([""] + list(self.labels))
            for label, row in zip(self.labels, self.distances):
                writer.writerow([label] + [repr(float(value)) for value in row])
        logger.info(f"Wrote {len(self)}-point distance matrix to {path}")


def orbit_sample(markings: Sequence[Automorphism], labels: Sequence[str],
                 budget: Optional[int] = None) -> FiniteMetricSample:
    """Symmetrized distances between the orbit points Φ_i.y₀."""
    n = len(markings)
    distances = np.zeros((n, n))
    inverses = [invert(marking) for marking in markings]
    for i in range(n):
        for j in range(i + 1, n):
            forward = chain_dist((inverses[j], markings[i]), budget)
            backward = chain_dist((inverses[i], markings[j]), budget)
            distances[i, j] = distances[j, i] = forward + backward
    return FiniteMetricSample(tuple(labels), distances)


@dataclass(frozen=True)
class DeltaEstimate:
    """Four-point δ of a sample and how it was obtained.

    Attributes:
        delta: Largest four-point defect found.
        quadruples: Number of ordered quadruples checked.
        exhaustive: Whether every ordered quadruple was checked.
    """
    delta: float
    quadruples: int
    exhaustive: bool


def _gromov_matrix(d: np.ndarray, base: int) -> np.ndarray:
    return 0.5 * (d[base][:, None] + d[base][None, :] - d)


def delta_estimate(sample: FiniteMetricSample, exhaustive_limit: Optional[int] = None,
                   subsample: Optional[int] = None, seed: int = 0) -> DeltaEstimate:
    """Smallest δ with (x|y)_w ≥ min((x|z)_w, (y|z)_w) − δ over the sample's quadruples.

    All ordered quadruples are checked up to ``exhaustive_limit`` points;
    larger samples are checked on ``subsample`` random quadruples drawn from
    a Philox stream keyed by ``seed``.

    Raises:
        SampleError: If the sample has fewer than four points.
    """
    n = len(sample)
    if n < 4:
        raise SampleError(f"delta_estimate needs at least 4 points, got {n}")
    if exhaustive_limit is None:
        exhaustive_limit = config.DELTA_EXHAUSTIVE_LIMIT
    d = sample.distances
    if n <= exhaustive_limit:
        delta = 0.0
        for base in range(n):
            g = _gromov_matrix(d, base)
            overlap = np.minimum(g[:, None, :], g[None, :, :]).max(axis=2)
            delta = max(delta, float((overlap - g).max()))
        logger.debug(f"delta_estimate checked all {n ** 4} ordered quadruples")
        return DeltaEstimate(delta, n ** 4, True)
    if subsample is None:
        subsample = config.DELTA_SUBSAMPLE
    rng = np.random.Generator(np.random.Philox(seed))
    w, x, y, z = rng.integers(0, n, size=(4, subsample))

    def product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return 0.5 * (d[w, a] + d[w, b] - d[a, b])

    defect = np.minimum(product(x, z), product(y, z)) - product(x, y)
    logger.info(f"delta_estimate subsampled {subsample} quadruples from {n} points")
    return DeltaEstimate(max(0.0, float(defect.max())), subsample, False)


def four_point_delta(sample: FiniteMetricSample, exhaustive_limit: Optional[int] = None,
                     subsample: Optional[int] = None, seed: int = 0) -> float:
    """The δ of :func:`delta_estimate` alone."""
    return delta_estimate(sample, exhaustive_limit, subsample, seed).delta
