"""Experiment config files: parsing, validation, canonical printing and dispatch.

Grammar: one ``key = value`` per line, ``#`` starts a comment line, and a
section header ``[gen.1]`` prefixes every key below it with ``gen.1.`` until
the next header. The prefixed lines are parsed by python-dotenv without
interpolation, so values may be wrapped in quotes.

    kind = drift
    rank = 2
    n_max = 50
    paths = 20
    master_seed = 7

    [gen.1]
    map = a->ab; b->a
    inv = a->b; b->Ba
    weight = 1/2
"""
from dataclasses import dataclass, field, replace
from fractions import Fraction
from io import StringIO
from typing import Dict, List, Optional, Tuple
import logging
import re

from dotenv import dotenv_values

import config
from utils.errors import ConfigError, WordParseError
from utils.free_group import Automorphism, CyclicWord, cyclic_reduce, parse_automorphism, parse_word
from utils.matrix_oracle import IntMatrix, parse_matrix
from utils.walk_engine import (
    MAX_SEED,
    EstimateSeries,
    ProbMeasure,
    conjugacy_growth_experiment,
    delta_experiment,
    distance_report,
    drift_experiment,
    gromov_decay_experiment,
    matrix_experiments,
    spectral_experiment,
    stretch_report,
)

logger = logging.getLogger(__name__)

WALK_KINDS = ("drift", "conjugacy", "spectral", "gromov", "delta")
MATRIX_KINDS = ("matrix-guivarch", "matrix-furstenberg")
SINGLE_KINDS = ("distance", "stretch")
KINDS = WALK_KINDS + MATRIX_KINDS + SINGLE_KINDS

TOP_LEVEL_KEYS = ("kind", "rank", "dim", "n_max", "paths", "k_max", "master_seed",
                  "letter_budget", "bit_budget", "out", "vector")
GEN_FIELDS = ("map", "inv", "matrix", "weight")
WEIGHT_TOL = 1e-12

_GEN_KEY = re.compile(r"^gen\.(\d+)\.(\w+)$")
_WORD_KEY = re.compile(r"^word\.(\d+)$")
_SECTION = re.compile(r"^\[\s*([A-Za-z0-9_.]+)\s*\]$")


@dataclass(frozen=True)
class GeneratorSpec:
    """One support element of the measure, as written in the config."""
    map: Optional[str] = None
    inv: Optional[str] = None
    matrix: Optional[str] = None
    weight: Optional[Fraction] = None


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    rank: Optional[int] = None
    dim: Optional[int] = None
    n_max: Optional[int] = None
    paths: Optional[int] = None
    k_max: Optional[int] = None
    master_seed: int = 0
    letter_budget: int = config.LETTER_BUDGET
    bit_budget: int = config.BIT_BUDGET
    out: Optional[str] = None
    vector: Optional[Tuple[int, ...]] = None
    generators: Tuple[GeneratorSpec, ...] = field(default_factory=tuple)
    words: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def is_matrix(self) -> bool:
        return self.kind in MATRIX_KINDS


def flatten(text: str) -> Dict[str, str]:
    """Resolve section headers and return the flat key/value mapping.

    Each ``key = value`` line is prefixed with its section and handed to
    python-dotenv, which strips whitespace and quotes.

    Raises:
        ConfigError: On a line that is neither a comment, a header nor ``key = value``,
            or on a repeated key.
    """
    prefix = ""
    lines: List[str] = []
    seen = set()
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        section = _SECTION.match(line)
        if section:
            prefix = section.group(1) + "."
            continue
        if "=" not in line:
            raise ConfigError(f"line {number} is not 'key = value': {line!r}", field="syntax")
        key = prefix + line.split("=", 1)[0].strip()
        if key == prefix or any(char.isspace() or char in "'\"#" for char in key):
            raise ConfigError(f"line {number} has an invalid key {key!r}", field="syntax")
        if key in seen:
            raise ConfigError("key is given twice", field=key)
        seen.add(key)
        lines.append(prefix + line)
    values = dotenv_values(stream=StringIO("\n".join(lines)), interpolate=False)
    return {key: (value or "") for key, value in values.items()}


def _int(values: Dict[str, str], key: str, minimum: int = 1) -> Optional[int]:
    if key not in values:
        return None
    try:
        number = int(values[key])
    except ValueError as e:
        raise ConfigError(f"expected an integer, got {values[key]!r}", field=key) from e
    if number < minimum:
        raise ConfigError(f"must be at least {minimum}, got {number}", field=key)
    return number


def _fraction(text: str, key: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ConfigError(f"expected a decimal or a fraction, got {text!r}", field=key) from e


def _vector(text: str) -> Tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as e:
        raise ConfigError(f"expected comma-separated integers, got {text!r}", field="vector") from e


def _indexed(entries: Dict[int, object], name: str) -> List[object]:
    indices = sorted(entries)
    if indices != list(range(1, len(indices) + 1)):
        raise ConfigError(f"indices must run 1..{len(indices)}, got {indices}", field=name)
    return [entries[i] for i in indices]


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text.

    Raises:
        ConfigError: Naming the offending field when the config is malformed or invalid.
    """
    values = flatten(text)
    generators: Dict[int, Dict[str, str]] = {}
    words: Dict[int, str] = {}
    for key, value in values.items():
        gen = _GEN_KEY.match(key)
        word = _WORD_KEY.match(key)
        if gen:
            if gen.group(2) not in GEN_FIELDS:
                raise ConfigError(f"unknown generator field {gen.group(2)!r}", field=key)
            generators.setdefault(int(gen.group(1)), {})[gen.group(2)] = value
        elif word:
            words[int(word.group(1))] = value
        elif key not in TOP_LEVEL_KEYS:
            raise ConfigError("unknown key", field=key)

    if "kind" not in values:
        raise ConfigError("is required", field="kind")
    specs = [
        GeneratorSpec(
            map=entry.get("map"),
            inv=entry.get("inv"),
            matrix=entry.get("matrix"),
            weight=_fraction(entry["weight"], f"gen.{index}.weight") if "weight" in entry else None,
        )
        for index, entry in sorted(generators.items())
    ]
    _indexed(generators, "gen")
    experiment = ExperimentConfig(
        kind=values["kind"],
        rank=_int(values, "rank"),
        dim=_int(values, "dim"),
        n_max=_int(values, "n_max"),
        paths=_int(values, "paths"),
        k_max=_int(values, "k_max"),
        master_seed=_int(values, "master_seed", minimum=0) or 0,
        letter_budget=_int(values, "letter_budget") or config.LETTER_BUDGET,
        bit_budget=_int(values, "bit_budget") or config.BIT_BUDGET,
        out=values.get("out") or None,
        vector=_vector(values["vector"]) if "vector" in values else None,
        generators=tuple(specs),
        words=tuple(_indexed(words, "word")),
    )
    return validate_config(experiment)


def read_config(path: str) -> ExperimentConfig:
    """Read and validate a config file.

    Raises:
        ConfigError: If the file cannot be read or its contents are invalid.
    """
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read {path}: {e}", field="config") from e
    return parse_config(text)


def _require(experiment: ExperimentConfig, *names: str) -> None:
    for name in names:
        if getattr(experiment, name) is None:
            raise ConfigError(f"is required for kind={experiment.kind}", field=name)


def validate_config(experiment: ExperimentConfig) -> ExperimentConfig:
    """Check kind-specific requirements and resolve the k_max default.

    Returns:
        ExperimentConfig: The config with defaults resolved.

    Raises:
        ConfigError: On the first invalid field.
    """
    kind = experiment.kind
    if kind not in KINDS:
        raise ConfigError(f"must be one of {', '.join(KINDS)}, got {kind!r}", field="kind")
    for name in ("rank", "dim", "n_max", "paths", "k_max"):
        value = getattr(experiment, name)
        if value is not None and value < 1:
            raise ConfigError(f"must be at least 1, got {value}", field=name)
    if not 0 <= experiment.master_seed < MAX_SEED:
        raise ConfigError("must fit in 64 bits", field="master_seed")
    if experiment.letter_budget < 1 or experiment.bit_budget < 1:
        raise ConfigError("budgets must be positive", field="letter_budget")
    if not experiment.generators:
        raise ConfigError("at least one generator is required", field="gen")

    if kind in MATRIX_KINDS:
        _require(experiment, "dim", "n_max", "paths")
    else:
        _require(experiment, "rank")
    if kind in WALK_KINDS:
        _require(experiment, "n_max", "paths")
    if kind == "conjugacy" and not experiment.words:
        raise ConfigError("at least one conjugacy seed is required for kind=conjugacy", field="word")
    if kind == "delta" and experiment.paths < 3:
        raise ConfigError("kind=delta needs at least 3 paths", field="paths")
    if kind in SINGLE_KINDS and len(experiment.generators) != 1:
        raise ConfigError(f"kind={kind} takes exactly one automorphism", field="gen")
    if experiment.vector is not None and kind != "matrix-furstenberg":
        raise ConfigError("is only used by kind=matrix-furstenberg", field="vector")

    for index, spec in enumerate(experiment.generators, start=1):
        if experiment.is_matrix:
            if spec.matrix is None or spec.map is not None or spec.inv is not None:
                raise ConfigError("matrix kinds take gen.<i>.matrix only", field=f"gen.{index}.matrix")
        elif spec.map is None or spec.inv is None or spec.matrix is not None:
            raise ConfigError("automorphism kinds take gen.<i>.map and gen.<i>.inv", field=f"gen.{index}.map")
        if kind not in SINGLE_KINDS:
            if spec.weight is None:
                raise ConfigError("is required", field=f"gen.{index}.weight")
            if spec.weight <= 0:
                raise ConfigError(f"must be positive, got {spec.weight}", field=f"gen.{index}.weight")
    if kind not in SINGLE_KINDS:
        total = sum(spec.weight for spec in experiment.generators)
        if abs(float(total) - 1.0) > WEIGHT_TOL:
            raise ConfigError(f"weights sum to {float(total)!r}, not 1", field="weight")

    k_max = experiment.k_max
    if k_max is None and kind == "spectral":
        k_max = config.WALK_K_MAX
    elif k_max is None and kind == "stretch":
        k_max = config.STANDALONE_K_MAX
    resolved = replace(experiment, k_max=k_max)
    if kind in SINGLE_KINDS:
        single_automorphism(resolved)
    elif kind == "conjugacy":
        build_measure(resolved)
        conjugacy_seeds(resolved)
    else:
        build_measure(resolved)
    return resolved


def _automorphism(spec: GeneratorSpec, index: int, rank: int) -> Automorphism:
    try:
        return parse_automorphism(f"{spec.map} | {spec.inv}", rank)
    except WordParseError as e:
        raise ConfigError(str(e), field=f"gen.{index}.map") from e


def _matrix(spec: GeneratorSpec, index: int, dim: int) -> IntMatrix:
    try:
        matrix = parse_matrix(spec.matrix)
    except ValueError as e:
        raise ConfigError(str(e), field=f"gen.{index}.matrix") from e
    if matrix.n != dim:
        raise ConfigError(f"expected a {dim}x{dim} matrix", field=f"gen.{index}.matrix")
    return matrix


def build_measure(experiment: ExperimentConfig) -> ProbMeasure:
    """The probability measure described by the ``gen.<i>`` entries."""
    if experiment.is_matrix:
        support = [_matrix(spec, i, experiment.dim) for i, spec in enumerate(experiment.generators, start=1)]
    else:
        support = [_automorphism(spec, i, experiment.rank) for i, spec in enumerate(experiment.generators, start=1)]
    weights = [float(spec.weight) for spec in experiment.generators]
    labels = [f"gen.{i}" for i in range(1, len(support) + 1)]
    return ProbMeasure(tuple(support), tuple(weights), tuple(labels))


def single_automorphism(experiment: ExperimentConfig) -> Automorphism:
    """The one automorphism of a distance or stretch config."""
    return _automorphism(experiment.generators[0], 1, experiment.rank)


def conjugacy_seeds(experiment: ExperimentConfig) -> List[CyclicWord]:
    """Cyclically reduced conjugacy classes from the ``word.<i>`` entries.

    Raises:
        ConfigError: On an unparsable or trivial seed.
    """
    seeds = []
    for index, text in enumerate(experiment.words, start=1):
        try:
            seed = cyclic_reduce(parse_word(text, experiment.rank))
        except WordParseError as e:
            raise ConfigError(str(e), field=f"word.{index}") from e
        if len(seed) == 0:
            raise ConfigError("conjugacy seed must be nontrivial", field=f"word.{index}")
        seeds.append(seed)
    return seeds


def print_config(experiment: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config(print_config(c)) == c`` for a validated c."""
    lines = [f"kind = {experiment.kind}"]
    for name in ("rank", "dim", "n_max", "paths", "k_max", "master_seed", "letter_budget", "bit_budget", "out"):
        value = getattr(experiment, name)
        if value is not None:
            lines.append(f"{name} = {value}")
    if experiment.vector is not None:
        lines.append(f"vector = {','.join(str(v) for v in experiment.vector)}")
    for index, word in enumerate(experiment.words, start=1):
        lines.append(f"word.{index} = {word}")
    for index, spec in enumerate(experiment.generators, start=1):
        lines.append("")
        lines.append(f"[gen.{index}]")
        for name in GEN_FIELDS:
            value = getattr(spec, name)
            if value is not None:
                lines.append(f"{name} = {value}")
    return "\n".join(lines) + "\n"


def run_experiment(experiment: ExperimentConfig, threads: int = 1) -> EstimateSeries:
    """Dispatch a validated config to its experiment.

    Raises:
        SampleError: When too few delta paths survive the budget.
    """
    kind = experiment.kind
    budget = experiment.letter_budget
    logger.info(f"Running kind={kind} with master_seed={experiment.master_seed}, threads={threads}")
    if kind == "distance":
        return distance_report(single_automorphism(experiment), budget)
    if kind == "stretch":
        return stretch_report(single_automorphism(experiment), experiment.k_max, budget)
    measure = build_measure(experiment)
    common = dict(master_seed=experiment.master_seed, n_max=experiment.n_max,
                  paths=experiment.paths, threads=threads)
    if kind in MATRIX_KINDS:
        return matrix_experiments(measure, mode=kind.split("-", 1)[1], vector=experiment.vector,
                                  bit_budget=experiment.bit_budget, **common)
    if kind == "drift":
        return drift_experiment(measure, budget=budget, **common)
    if kind == "conjugacy":
        return conjugacy_growth_experiment(measure, conjugacy_seeds(experiment), budget=budget, **common)
    if kind == "spectral":
        return spectral_experiment(measure, k_max=experiment.k_max, budget=budget, **common)
    if kind == "gromov":
        return gromov_decay_experiment(measure, budget=budget, **common)
    return delta_experiment(measure, budget=budget, **common)
