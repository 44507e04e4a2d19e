"""Random walks on Out(F_N) and on integer matrix groups, and the experiment suite.

Randomness: the increments of path ``path_id`` are drawn from a Philox4x64
counter-based generator keyed by ``(path_id << 64) | master_seed`` with the
counter starting at zero; step n uses the n-th double of that stream and picks
the first support index whose cumulative weight exceeds ``u · total``. A path
therefore depends only on (measure, master_seed, path_id), never on how paths
are scheduled across workers.

Automorphism walks multiply on the right, Φ_n = Φ_{n-1} s_n; matrix walks
multiply on the left, Π_n = A_n Π_{n-1}.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from functools import cached_property, partial
from typing import Callable, Container, Dict, Iterator, List, Optional, Sequence, Tuple, Union
import logging
import math

import numpy as np

import config
from utils import matrix_oracle
from utils.errors import BitBudgetExceeded, ConfigError, SampleError, WordBudgetExceeded
from utils.free_group import (
    Automorphism,
    CyclicWord,
    abelianization,
    apply_cyclic,
    compose,
    invert,
)
from utils.matrix_oracle import IntMatrix
from utils.outer_metric import delta_estimate, dist, gromov_product, highness_ratio, orbit_sample, sym_dist
from utils.results import AGGREGATE_PATH_ID, AggregateRow, ResultRow, summarize_rows
from utils.spectral import bracket, rank_two_agreement

logger = logging.getLogger(__name__)

Element = Union[Automorphism, IntMatrix]
WEIGHT_TOL = 1e-12
MAX_SEED = 2 ** 64


@dataclass(frozen=True)
class ProbMeasure:
    """Finitely supported probability measure on automorphisms or on integer matrices.

    Raises:
        ConfigError: If the support is empty or mixed, a weight is not positive,
            the weights do not sum to 1, or a matrix is not unimodular.
    """
    support: Tuple[Element, ...]
    weights: Tuple[float, ...]
    labels: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.support:
            raise ConfigError("measure support is empty", field="gen")
        if len(self.weights) != len(self.support):
            raise ConfigError("one weight is needed per support element", field="weight")
        if any(not weight > 0 for weight in self.weights):
            raise ConfigError("weights must be positive", field="weight")
        total = math.fsum(self.weights)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"weights sum to {total!r}, not 1", field="weight")
        kinds = {type(element) for element in self.support}
        if len(kinds) != 1:
            raise ConfigError("measure mixes automorphisms and matrices", field="gen")
        sizes = {self.size_of(element) for element in self.support}
        if len(sizes) != 1:
            raise ConfigError(f"support elements disagree on rank/dimension: {sorted(sizes)}", field="gen")
        if self.is_matrix:
            for index, element in enumerate(self.support, start=1):
                if not matrix_oracle.is_unimodular(element):
                    raise ConfigError("matrix increments need determinant ±1", field=f"gen.{index}.matrix")

    @staticmethod
    def size_of(element: Element) -> int:
        return element.rank if isinstance(element, Automorphism) else element.n

    @property
    def is_matrix(self) -> bool:
        return isinstance(self.support[0], IntMatrix)

    @property
    def size(self) -> int:
        return self.size_of(self.support[0])

    @cached_property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(np.asarray(self.weights, dtype=float))

    def describe(self) -> str:
        labels = self.labels or tuple(f"gen.{i}" for i in range(1, len(self.support) + 1))
        return ", ".join(f"{label}:{weight!r}" for label, weight in zip(labels, self.weights))

    @classmethod
    def uniform(cls, support: Sequence[Element], labels: Sequence[str] = ()) -> "ProbMeasure":
        weight = float(Fraction(1, len(support)))
        weights = [weight] * len(support)
        weights[-1] = 1.0 - math.fsum(weights[:-1])
        return cls(tuple(support), tuple(weights), tuple(labels))

    @classmethod
    def point_mass(cls, element: Element, label: str = "") -> "ProbMeasure":
        return cls((element,), (1.0,), (label,) if label else ())


@dataclass(frozen=True)
class WalkPath:
    """The walk at time n: Φ_n (matrix walks: Π_n), the increment index used at step n."""
    seed: int
    path_id: int
    n: int
    increment: int
    product: Optional[Element]
    truncated: bool = False

    @property
    def inverse(self) -> Automorphism:
        return invert(self.product)


@dataclass(frozen=True)
class EstimateRecord:
    path_id: int
    n: int
    estimator: str
    value: float
    status: str = "ok"


@dataclass
class EstimateSeries:
    """Records of one experiment plus run metadata.

    Raises:
        ValueError: On a duplicate (path_id, n, estimator) key.
    """
    experiment: str
    records: List[EstimateRecord] = field(default_factory=list)
    metadata: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        keys = set()
        for record in self.records:
            key = (record.path_id, record.n, record.estimator)
            if key in keys:
                raise ValueError(f"duplicate record key {key}")
            keys.add(key)

    def rows(self) -> List[ResultRow]:
        return [ResultRow(self.experiment, r.path_id, r.n, r.estimator, r.value, r.status) for r in self.records]

    def summary(self) -> List[AggregateRow]:
        return summarize_rows(self.rows())

    def values(self, estimator: str, n: Optional[int] = None) -> List[float]:
        return [r.value for r in self.records
                if r.estimator == estimator and r.status != "truncated" and (n is None or r.n == n)]

    def path_ids(self) -> List[int]:
        return sorted({r.path_id for r in self.records if r.path_id != AGGREGATE_PATH_ID})

    def truncated_paths(self) -> List[int]:
        return sorted({r.path_id for r in self.records if r.status == "truncated"})


def geometric_schedule(n_max: int) -> List[int]:
    """{1, 2, 4, …} ∪ {n_max}, capped at n_max."""
    schedule, n = set(), 1
    while n <= n_max:
        schedule.add(n)
        n *= 2
    schedule.add(n_max)
    return sorted(schedule)


def _check_seed(master_seed: int) -> None:
    if not 0 <= master_seed < MAX_SEED:
        raise ConfigError(f"master_seed must fit in 64 bits, got {master_seed}", field="master_seed")


def path_generator(master_seed: int, path_id: int) -> np.random.Generator:
    """Philox stream of one path.

    Args:
        master_seed: 64-bit seed shared by every path of a run.
        path_id: Index of the path.

    Returns:
        np.random.Generator: Generator keyed by ``(path_id << 64) | master_seed``.

    Raises:
        ConfigError: If master_seed does not fit in 64 bits.
    """
    _check_seed(master_seed)
    return np.random.Generator(np.random.Philox(key=(path_id << 64) | master_seed))


def sample_increments(measure: ProbMeasure, master_seed: int, path_id: int, n: int) -> np.ndarray:
    """Indices into the support for steps 1..n of a path."""
    uniforms = path_generator(master_seed, path_id).random(n)
    cumulative = measure.cumulative
    indices = np.searchsorted(cumulative, uniforms * cumulative[-1], side="right")
    return np.minimum(indices, len(measure.support) - 1)


def sample_path(measure: ProbMeasure, master_seed: int, path_id: int, n_max: int,
                budget: Optional[int] = None, bit_budget: Optional[int] = None) -> Iterator[WalkPath]:
    """Stream the walk Φ_1, …, Φ_{n_max} (or Π_1, …, Π_{n_max}).

    A budget overrun ends the stream with one truncated WalkPath whose product is None.
    """
    if n_max < 1:
        raise ValueError(f"n_max must be at least 1, got {n_max}")
    if bit_budget is None:
        bit_budget = config.BIT_BUDGET
    product: Optional[Element] = None
    for n, index in enumerate(sample_increments(measure, master_seed, path_id, n_max), start=1):
        increment = measure.support[int(index)]
        try:
            if measure.is_matrix:
                product = increment if product is None else matrix_oracle.mat_mul(increment, product)
                if product.max_bits() > bit_budget:
                    raise BitBudgetExceeded(product.max_bits(), bit_budget)
            else:
                product = increment if product is None else compose(product, increment, budget)
        except (WordBudgetExceeded, BitBudgetExceeded) as e:
            logger.warning(f"Path {path_id} truncated at n={n}: {e}")
            yield WalkPath(master_seed, path_id, n, int(index), None, truncated=True)
            return
        yield WalkPath(master_seed, path_id, n, int(index), product)


def segment_product(measure: ProbMeasure, indices: Sequence[int], budget: Optional[int] = None) -> Automorphism:
    """s_{i_1} … s_{i_k} for increment indices in time order."""
    product = Automorphism.identity(measure.size)
    for index in indices:
        product = compose(product, measure.support[int(index)], budget)
    return product


def first_moment(measure: ProbMeasure, budget: Optional[int] = None) -> float:
    """E[d(y₀, s.y₀)] = Σ μ(s)·dist(s⁻¹)."""
    return math.fsum(w * dist(invert(s), budget) for s, w in zip(measure.support, measure.weights))


def second_moment(measure: ProbMeasure, budget: Optional[int] = None) -> float:
    """E[d(y₀, s.y₀)²] = Σ μ(s)·dist(s⁻¹)².

    Args:
        measure: A measure on automorphisms.
        budget: Letter budget.

    Returns:
        float: The second moment; finite for every finitely supported measure.
    """
    return math.fsum(w * dist(invert(s), budget) ** 2 for s, w in zip(measure.support, measure.weights))


def run_paths(worker: Callable[[int], List[EstimateRecord]], paths: int, threads: int = 1) -> List[EstimateRecord]:
    """Run one worker per path and merge the records in (path_id, n) order.

    Workers are independent; the merge does not depend on the worker count.

    Args:
        worker: Maps a path_id to that path's records.
        paths: Number of paths, numbered from 0.
        threads: Worker processes; 1 runs the paths in this process.

    Returns:
        List[EstimateRecord]: Every record, sorted by (path_id, n).
    """
    if threads <= 1 or paths <= 1:
        results = [worker(path_id) for path_id in range(paths)]
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            results = list(executor.map(worker, range(paths)))
    merged = [record for records in results for record in records]
    merged.sort(key=lambda record: (record.path_id, record.n))
    return merged


def _truncated(path_id: int, n: int, estimators: Sequence[str]) -> List[EstimateRecord]:
    return [EstimateRecord(path_id, n, name, math.nan, "truncated") for name in estimators]


def _metadata(experiment: str, measure: ProbMeasure, master_seed: int, **extra) -> Dict[str, str]:
    metadata = {
        "experiment": experiment,
        "measure": measure.describe(),
        "master_seed": str(master_seed),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    metadata.update({key: str(value) for key, value in extra.items()})
    return metadata


def _require_automorphisms(measure: ProbMeasure) -> None:
    if measure.is_matrix:
        raise ConfigError("this experiment needs a measure on automorphisms", field="gen")


def _drift_path(measure: ProbMeasure, master_seed: int, n_max: int, budget: Optional[int],
                path_id: int) -> List[EstimateRecord]:
    records: List[EstimateRecord] = []
    distances: Dict[int, float] = {}
    increments: List[int] = []
    for step in sample_path(measure, master_seed, path_id, n_max, budget):
        if step.truncated:
            records.extend(_truncated(path_id, step.n, ["drift"]))
            break
        increments.append(step.increment)
        try:
            distances[step.n] = dist(step.inverse, budget)
        except WordBudgetExceeded:
            records.extend(_truncated(path_id, step.n, ["drift"]))
            break
        records.append(EstimateRecord(path_id, step.n, "drift", distances[step.n] / step.n))

    for n in geometric_schedule(n_max):
        if 2 * n not in distances:
            continue
        try:
            segment = segment_product(measure, increments[n:2 * n], budget)
            gap = distances[n] + dist(invert(segment), budget) - distances[2 * n]
        except WordBudgetExceeded:
            continue
        if gap < -config.LOG_TOL:
            logger.error(f"Subadditivity violated on path {path_id} at n={n}: gap={gap}")
        records.append(EstimateRecord(path_id, 2 * n, "subadditivity_gap", gap))
    return records


def drift_experiment(measure: ProbMeasure, master_seed: int, n_max: int, paths: int,
                     threads: int = 1, budget: Optional[int] = None) -> EstimateSeries:
    """(1/n)·d(y₀, Φ_n.y₀) = (1/n)·dist(Φ_n⁻¹) on every path at every n.

    Also records ``subadditivity_gap`` = dist(Φ_n⁻¹) + dist((Φ_n⁻¹Φ_2n)⁻¹) − dist(Φ_2n⁻¹)
    at 2n for n in the geometric schedule; it is never negative.
    """
    _require_automorphisms(measure)
    worker = partial(_drift_path, measure, master_seed, n_max, budget)
    records = run_paths(worker, paths, threads)
    series = EstimateSeries("drift", records, _metadata(
        "drift", measure, master_seed, n_max=n_max, paths=paths,
        first_moment=first_moment(measure, budget), second_moment=second_moment(measure, budget),
    ))
    logger.info(f"Drift experiment finished: {paths} paths, {len(series.truncated_paths())} truncated")
    return series


def _conjugacy_path(measure: ProbMeasure, words: Sequence[CyclicWord], master_seed: int, n_max: int,
                    budget: Optional[int], path_id: int) -> List[EstimateRecord]:
    names = [f"conjugacy:{word}" for word in words]
    records: List[EstimateRecord] = []
    for step in sample_path(measure, master_seed, path_id, n_max, budget):
        if step.truncated:
            records.extend(_truncated(path_id, step.n, names))
            break
        inverse = step.inverse
        try:
            lengths = [len(apply_cyclic(inverse, word, budget)) for word in words]
        except WordBudgetExceeded:
            records.extend(_truncated(path_id, step.n, names))
            break
        records.extend(EstimateRecord(path_id, step.n, name, math.log(length) / step.n)
                       for name, length in zip(names, lengths))
    return records


def conjugacy_growth_experiment(measure: ProbMeasure, words: Sequence[CyclicWord], master_seed: int,
                                n_max: int, paths: int, threads: int = 1,
                                budget: Optional[int] = None) -> EstimateSeries:
    """(1/n)·log‖Φ_n⁻¹(g)‖ for each conjugacy class g, estimator ``conjugacy:<g>``.

    Raises:
        ConfigError: If a word is trivial or has the wrong rank.
    """
    _require_automorphisms(measure)
    for word in words:
        if len(word) == 0 or word.rank != measure.size:
            raise ConfigError(f"conjugacy seed {word} must be nontrivial of rank {measure.size}", field="word")
    worker = partial(_conjugacy_path, measure, tuple(words), master_seed, n_max, budget)
    records = run_paths(worker, paths, threads)
    return EstimateSeries("conjugacy", records, _metadata(
        "conjugacy", measure, master_seed, n_max=n_max, paths=paths, words=" ".join(str(w) for w in words),
    ))


def _spectral_path(measure: ProbMeasure, k_max: int, master_seed: int, n_max: int,
                   budget: Optional[int], path_id: int) -> List[EstimateRecord]:
    schedule = set(geometric_schedule(n_max))
    estimators = ["lower", "upper", "point"]
    abelian = matrix_oracle.guivarch_series(
        abelianized_increments(measure, sample_increments(measure, master_seed, path_id, n_max)),
        schedule=schedule,
    )
    records: List[EstimateRecord] = []
    for step in sample_path(measure, master_seed, path_id, n_max, budget):
        if step.truncated:
            records.extend(_truncated(path_id, step.n, estimators))
            break
        try:
            growth = next(abelian)
        except BitBudgetExceeded as e:
            logger.warning(f"Path {path_id} truncated at n={step.n}: {e}")
            records.extend(_truncated(path_id, step.n, estimators))
            break
        if step.n not in schedule:
            continue
        n = step.n
        inverse = step.inverse
        result = bracket(inverse, k_max, budget=budget)
        if not result.unit_upper:
            records.extend(_truncated(path_id, n, estimators))
            break
        status = "ok" if result.k_used == k_max else "downgraded"
        if status == "downgraded":
            logger.warning(f"Path {path_id} at n={n}: bracket downgraded to k={result.k_used}")
        records.append(EstimateRecord(path_id, n, "lower", result.lower / n, status))
        records.extend(EstimateRecord(path_id, n, f"upper_k{k}", value / n, status)
                       for k, value in enumerate(result.unit_upper, start=1))
        records.append(EstimateRecord(path_id, n, "upper", result.upper / n, status))
        records.append(EstimateRecord(path_id, n, "point", result.point / n, status))
        records.append(EstimateRecord(path_id, n, "abelian_guivarch", growth.lower, status))
        if growth.lower > result.upper / n + config.LOG_TOL:
            logger.error(f"Abelianized Guivarc'h value {growth.lower} exceeds upper {result.upper / n} "
                         f"on path {path_id} at n={n}")
        agreement = rank_two_agreement(inverse, result)
        if agreement is not None:
            records.append(EstimateRecord(path_id, n, "agreement", agreement, status))
    return records


def spectral_experiment(measure: ProbMeasure, master_seed: int, n_max: int, paths: int,
                        k_max: Optional[int] = None, threads: int = 1,
                        budget: Optional[int] = None) -> EstimateSeries:
    """(1/n)·bracket(Φ_n⁻¹) at n in the geometric schedule.

    Estimators: ``lower``, ``upper_k1`` … ``upper_k<k_used>``, ``upper`` (best
    certified bound) and ``point``; status ``downgraded`` when fewer than k_max
    powers fit the letter budget. Alongside them, ``abelian_guivarch`` is the
    matrix-walk lower bound on (1/n)·log ρ of the abelianized increments, which
    never exceeds ``upper``. In rank 2, ``agreement`` is the relative gap
    between ``point`` and ``lower`` when the abelianization is hyperbolic.
    """
    _require_automorphisms(measure)
    k_max = k_max or config.WALK_K_MAX
    worker = partial(_spectral_path, measure, k_max, master_seed, n_max, budget)
    records = run_paths(worker, paths, threads)
    return EstimateSeries("spectral", records, _metadata(
        "spectral", measure, master_seed, n_max=n_max, paths=paths, k_max=k_max,
    ))


def _gromov_path(measure: ProbMeasure, master_seed: int, n_max: int, budget: Optional[int],
                 path_id: int) -> List[EstimateRecord]:
    schedule = set(geometric_schedule(n_max))
    records: List[EstimateRecord] = []
    for step in sample_path(measure, master_seed, path_id, n_max, budget):
        if step.truncated:
            records.extend(_truncated(path_id, step.n, ["gromov", "drift"]))
            break
        if step.n not in schedule:
            continue
        try:
            product = gromov_product(step.product, step.inverse, budget)
            drift = dist(step.inverse, budget)
        except WordBudgetExceeded:
            records.extend(_truncated(path_id, step.n, ["gromov", "drift"]))
            break
        records.append(EstimateRecord(path_id, step.n, "gromov", product / step.n))
        records.append(EstimateRecord(path_id, step.n, "drift", drift / step.n))
    return records


def gromov_decay_experiment(measure: ProbMeasure, master_seed: int, n_max: int, paths: int,
                            threads: int = 1, budget: Optional[int] = None) -> EstimateSeries:
    """(1/n)·(Φ_n.y₀ | Φ_n⁻¹.y₀)_{y₀} in the symmetrized metric, next to the drift at the same n."""
    _require_automorphisms(measure)
    worker = partial(_gromov_path, measure, master_seed, n_max, budget)
    records = run_paths(worker, paths, threads)
    return EstimateSeries("gromov", records, _metadata(
        "gromov", measure, master_seed, n_max=n_max, paths=paths,
    ))


def _endpoint(measure: ProbMeasure, master_seed: int, n_max: int, budget: Optional[int],
              path_id: int) -> Optional[Automorphism]:
    last = None
    for step in sample_path(measure, master_seed, path_id, n_max, budget):
        if step.truncated:
            return None
        last = step.product
    return last


def delta_experiment(measure: ProbMeasure, master_seed: int, n_max: int, paths: int,
                     threads: int = 1, budget: Optional[int] = None) -> EstimateSeries:
    """Four-point δ of the orbit sample {y₀} ∪ {Φ_{n_max}.y₀}, plus per-endpoint highness.

    Rows: ``delta``, ``sample_points`` and ``quadruples`` (ordered quadruples
    checked, fewer than sample_points⁴ when δ was subsampled) at path_id -1;
    ``highness`` per path, probing each endpoint with all the others.

    Raises:
        SampleError: If fewer than three paths reach n_max.
    """
    _require_automorphisms(measure)
    worker = partial(_endpoint, measure, master_seed, n_max, budget)
    if threads <= 1 or paths <= 1:
        endpoints = [worker(path_id) for path_id in range(paths)]
    else:
        with ProcessPoolExecutor(max_workers=threads) as executor:
            endpoints = list(executor.map(worker, range(paths)))
    records = [EstimateRecord(path_id, n_max, "highness", math.nan, "truncated")
               for path_id, endpoint in enumerate(endpoints) if endpoint is None]
    kept = [(path_id, endpoint) for path_id, endpoint in enumerate(endpoints) if endpoint is not None]
    if len(kept) < 3:
        raise SampleError(f"only {len(kept)} paths reached n={n_max}; δ needs at least 3 endpoints")
    markings = [Automorphism.identity(measure.size)] + [endpoint for _, endpoint in kept]
    labels = ["y0"] + [f"path{path_id}" for path_id, _ in kept]
    sample = orbit_sample(markings, labels, budget)
    estimate = delta_estimate(sample, seed=master_seed)
    records.append(EstimateRecord(AGGREGATE_PATH_ID, n_max, "delta", estimate.delta))
    records.append(EstimateRecord(AGGREGATE_PATH_ID, n_max, "sample_points", float(len(sample))))
    records.append(EstimateRecord(AGGREGATE_PATH_ID, n_max, "quadruples", float(estimate.quadruples)))
    for path_id, endpoint in kept:
        probes = [other for other_id, other in kept if other_id != path_id]
        records.append(EstimateRecord(path_id, n_max, "highness", highness_ratio(endpoint, probes, budget)))
    records.sort(key=lambda record: (record.path_id, record.n))
    return EstimateSeries("delta", records, _metadata(
        "delta", measure, master_seed, n_max=n_max, paths=paths,
    ))


def _matrix_path(measure: ProbMeasure, vector: Tuple[int, ...], mode: str, master_seed: int, n_max: int,
                 bit_budget: Optional[int], path_id: int) -> List[EstimateRecord]:
    indices = sample_increments(measure, master_seed, path_id, n_max)
    increments = [measure.support[int(index)] for index in indices]
    if mode == "furstenberg":
        schedule: Optional[Container[int]] = ()
    else:
        schedule = None if measure.size <= 2 else set(geometric_schedule(n_max))
    records: List[EstimateRecord] = []
    if mode == "furstenberg":
        records.extend(EstimateRecord(path_id, n, "vector", value)
                       for n, value in matrix_oracle.vector_growth(increments, vector))
    reached = 0
    try:
        for growth in matrix_oracle.guivarch_series(increments, bit_budget, schedule):
            reached = growth.n
            records.append(EstimateRecord(path_id, growth.n, "norm", growth.log_norm))
            if growth.lower is not None:
                records.append(EstimateRecord(path_id, growth.n, "rho_lower", growth.lower))
                records.append(EstimateRecord(path_id, growth.n, "rho_upper", growth.upper))
    except BitBudgetExceeded as e:
        truncated_at = reached + 1
        logger.warning(f"Matrix path {path_id} truncated at n={truncated_at}: {e}")
        records = [r for r in records if r.n < truncated_at]
        records.extend(_truncated(path_id, truncated_at, ["norm"]))
    return records


def matrix_experiments(measure: ProbMeasure, master_seed: int, n_max: int, paths: int,
                       mode: str = "guivarch", vector: Optional[Sequence[int]] = None, threads: int = 1,
                       bit_budget: Optional[int] = None) -> EstimateSeries:
    """Matrix-walk series in the common schema.

    ``guivarch``: ``norm`` = (1/n)·log‖Π_n‖ and ``rho_lower``/``rho_upper`` bracketing (1/n)·log ρ(Π_n).
    ``furstenberg``: ``norm`` and ``vector`` = (1/n)·log‖Π_n v‖.

    Raises:
        ConfigError: On a non-matrix measure, an unknown mode or a bad vector.
    """
    if not measure.is_matrix:
        raise ConfigError("matrix experiments need a measure on matrices", field="gen")
    if mode not in ("guivarch", "furstenberg"):
        raise ConfigError(f"unknown matrix experiment mode {mode!r}", field="kind")
    vector = tuple(vector) if vector is not None else tuple(int(i == 0) for i in range(measure.size))
    if len(vector) != measure.size or not any(vector):
        raise ConfigError(f"vector must be a nonzero vector of length {measure.size}", field="vector")
    worker = partial(_matrix_path, measure, vector, mode, master_seed, n_max, bit_budget)
    records = run_paths(worker, paths, threads)
    experiment = f"matrix-{mode}"
    return EstimateSeries(experiment, records, _metadata(
        experiment, measure, master_seed, n_max=n_max, paths=paths,
        vector=",".join(str(v) for v in vector),
    ))


def abelianized_increments(measure: ProbMeasure, indices: Sequence[int]) -> List[IntMatrix]:
    """Matrix increments whose left product Π_n has the spectrum of abelianization(Φ_n⁻¹).

    abelianization(Φ_n⁻¹) = M(s_1⁻¹) … M(s_n⁻¹), so transposes taken in time
    order multiply on the left to its transpose.
    """
    return [abelianization(invert(measure.support[int(index)])).transpose() for index in indices]


def distance_report(theta: Automorphism, budget: Optional[int] = None) -> EstimateSeries:
    """dist and sym_dist of a single automorphism."""
    records = [
        EstimateRecord(0, 0, "dist", dist(theta, budget)),
        EstimateRecord(0, 0, "sym_dist", sym_dist(theta, budget)),
    ]
    return EstimateSeries("distance", records, {"automorphism": str(theta)})


def stretch_report(phi: Automorphism, k_max: Optional[int] = None, budget: Optional[int] = None) -> EstimateSeries:
    """Standalone bracket of a single automorphism, with the rank-2 ``agreement`` row when it applies."""
    k_max = k_max or config.STANDALONE_K_MAX
    result = bracket(phi, k_max, budget=budget)
    status = "ok" if result.k_used == k_max else "downgraded"
    records = [
        EstimateRecord(0, k_max, "lower", result.lower, status),
        EstimateRecord(0, k_max, "upper", result.upper, status),
        EstimateRecord(0, k_max, "point", result.point, status),
        EstimateRecord(0, k_max, "converged", float(result.converged), status),
        EstimateRecord(0, k_max, "k_used", float(result.k_used), status),
    ]
    agreement = rank_two_agreement(phi, result)
    if agreement is not None:
        records.append(EstimateRecord(0, k_max, "agreement", agreement, status))
    return EstimateSeries("stretch", records, {"automorphism": str(phi), "k_max": str(k_max)})
