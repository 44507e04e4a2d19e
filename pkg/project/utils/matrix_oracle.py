"""Exact integer matrix walks: Furstenberg vector growth and Guivarc'h spectral growth.

Products are kept as exact Python integers and logs are taken only when a
value is reported. A path product is Π_n = A_n … A_1: each new increment
multiplies on the LEFT. (The automorphism walk multiplies on the right,
Φ_n = s_1 … s_n; under abelianization the row convention turns that into
M(s_n) … M(s_1), the same left order.)
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Container, Iterable, Iterator, Optional, Sequence, Tuple
import json
import logging
import math

import config
from utils.errors import BitBudgetExceeded

logger = logging.getLogger(__name__)

NO_BOUND = float("-inf")
GELFAND_STEPS = 6
_FLOAT_SAFE_BITS = 400


@dataclass(frozen=True)
class IntMatrix:
    """Square matrix of arbitrary-precision integers, stored row-major."""
    rows: Tuple[Tuple[int, ...], ...]

    def __post_init__(self) -> None:
        n = len(self.rows)
        if n == 0 or any(len(row) != n for row in self.rows):
            raise ValueError("IntMatrix must be square and nonempty")

    @property
    def n(self) -> int:
        return len(self.rows)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        return mat_mul(self, other)

    def trace(self) -> int:
        return sum(self.rows[i][i] for i in range(self.n))

    def determinant(self) -> int:
        """Exact determinant by fraction-free (Bareiss) elimination."""
        a = [list(row) for row in self.rows]
        n = self.n
        sign, previous = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
                if swap is None:
                    return 0
                a[k], a[swap] = a[swap], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // previous
            previous = a[k][k]
        return sign * a[n - 1][n - 1]

    def max_bits(self) -> int:
        return max(abs(entry).bit_length() for row in self.rows for entry in row)

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.rows)))

    def apply(self, v: Sequence[int]) -> Tuple[int, ...]:
        return tuple(sum(a * b for a, b in zip(row, v)) for row in self.rows)

    def to_literal(self) -> str:
        return json.dumps([list(row) for row in self.rows], separators=(",", ":"))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @classmethod
    def from_rows(cls, rows: Iterable[Iterable[int]]) -> "IntMatrix":
        return cls(tuple(tuple(int(entry) for entry in row) for row in rows))


@dataclass(frozen=True)
class MatrixBracket:
    """Bracket on log ρ(A).

    Attributes:
        lower: Certified lower bound on log ρ(A), or -inf when no bound is available.
        upper: Certified upper bound on log ρ(A).
        exact: log ρ(A) in closed form when known (dimension 2).
    """
    lower: float
    upper: float
    exact: Optional[float] = None

    @property
    def rho(self) -> Optional[float]:
        return None if self.exact is None else math.exp(self.exact)


def parse_matrix(text: str) -> IntMatrix:
    """Parse a row-major literal such as ``[[1,1],[0,1]]``.

    Raises:
        ValueError: If the literal is not a square list of integer lists.
    """
    try:
        rows = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"invalid matrix literal {text!r}: {e}") from e
    if not isinstance(rows, list) or not all(isinstance(row, list) for row in rows):
        raise ValueError(f"matrix literal must be a list of rows: {text!r}")
    if not all(isinstance(entry, int) and not isinstance(entry, bool) for row in rows for entry in row):
        raise ValueError(f"matrix entries must be integers: {text!r}")
    return IntMatrix.from_rows(rows)


def mat_mul(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    """Exact product a·b."""
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} != {b.n}")
    columns = list(zip(*b.rows))
    return IntMatrix(tuple(
        tuple(sum(x * y for x, y in zip(row, column)) for column in columns)
        for row in a.rows
    ))


def log_int(value: int) -> float:
    """Natural log of a nonnegative integer of any size; -inf for zero."""
    return math.log(value) if value > 0 else NO_BOUND


def norm(a: IntMatrix) -> int:
    """Max absolute row sum (the ℓ∞ operator norm).

    Args:
        a: The matrix.

    Returns:
        int: ‖A‖∞, exactly.
    """
    return max(sum(abs(entry) for entry in row) for row in a.rows)


def log_norm(a: IntMatrix) -> float:
    """Natural log of the ℓ∞ operator norm.

    Args:
        a: The matrix.

    Returns:
        float: log‖A‖∞, -inf for the zero matrix.
    """
    return log_int(norm(a))


def _check_bits(a: IntMatrix, bit_budget: int) -> None:
    bits = a.max_bits()
    if bits > bit_budget:
        raise BitBudgetExceeded(bits, bit_budget)


def _log_rho_2x2(t: int, d: int) -> float:
    disc = t * t - 4 * d
    if disc < 0:
        return 0.5 * log_int(abs(d))
    if t == 0:
        return 0.5 * log_int(disc) - math.log(2)
    if abs(t).bit_length() < _FLOAT_SAFE_BITS:
        return math.log((abs(t) + math.sqrt(disc)) / 2)
    ratio = float(Fraction(4 * d, t * t))
    return log_int(abs(t)) + math.log((1 + math.sqrt(1 - ratio)) / 2)


def spectral_radius(a: IntMatrix, bit_budget: Optional[int] = None) -> MatrixBracket:
    """Bracket log ρ(A).

    Dimension 2 is exact through the characteristic polynomial. Larger
    dimensions use Gelfand's formula on exact powers A^(2^j), j ≤ 6:
    upper = min_j log‖A^(2^j)‖/2^j and lower = max_j log(|trace A^(2^j)|/n)/2^j.

    Raises:
        BitBudgetExceeded: If a power outgrows the bit budget.
    """
    if a.n == 1:
        value = log_int(abs(a.rows[0][0]))
        return MatrixBracket(value, value, value)
    if a.n == 2:
        value = _log_rho_2x2(a.trace(), a.determinant())
        return MatrixBracket(value, value, value)
    if bit_budget is None:
        bit_budget = config.BIT_BUDGET
    lower, upper = NO_BOUND, math.inf
    power = a
    for j in range(GELFAND_STEPS + 1):
        scale = 2 ** j
        upper = min(upper, log_norm(power) / scale)
        trace = abs(power.trace())
        if trace:
            lower = max(lower, (log_int(trace) - math.log(a.n)) / scale)
        if j < GELFAND_STEPS:
            power = mat_mul(power, power)
            _check_bits(power, bit_budget)
    return MatrixBracket(min(lower, upper), upper)


def vector_growth(increments: Iterable[IntMatrix], v: Sequence[int]) -> Iterator[Tuple[int, float]]:
    """Yield (n, (1/n)·log‖A_n…A_1 v‖∞) along a path.

    Raises:
        ValueError: If v is the zero vector.
    """
    vector = tuple(int(entry) for entry in v)
    if not any(vector):
        raise ValueError("vector_growth needs a nonzero start vector")
    for n, increment in enumerate(increments, start=1):
        vector = increment.apply(vector)
        yield n, log_int(max(abs(entry) for entry in vector)) / n


@dataclass(frozen=True)
class GuivarchRecord:
    """Normalized growth of Π_n; the spectral bracket is None off the schedule."""
    n: int
    log_norm: float
    lower: Optional[float] = None
    upper: Optional[float] = None


def guivarch_series(increments: Iterable[IntMatrix], bit_budget: Optional[int] = None,
                    schedule: Optional[Container[int]] = None) -> Iterator[GuivarchRecord]:
    """Yield per-n records of (1/n)·log‖Π_n‖ and the (1/n)·log ρ(Π_n) bracket.

    Args:
        increments: A_1, A_2, … in time order; each multiplies on the left.
        bit_budget: Largest entry size, in bits, that Π_n may reach.
        schedule: Values of n at which ρ is bracketed; every n when omitted.

    Raises:
        BitBudgetExceeded: If an entry of Π_n outgrows the bit budget.
    """
    if bit_budget is None:
        bit_budget = config.BIT_BUDGET
    product: Optional[IntMatrix] = None
    for n, increment in enumerate(increments, start=1):
        product = increment if product is None else mat_mul(increment, product)
        _check_bits(product, bit_budget)
        growth = log_norm(product) / n
        if schedule is not None and n not in schedule:
            yield GuivarchRecord(n, growth)
            continue
        bracket = spectral_radius(product, bit_budget)
        yield GuivarchRecord(n, growth, bracket.lower / n, bracket.upper / n)


def matrix_product(increments: Sequence[IntMatrix]) -> IntMatrix:
    """Π = A_n … A_1 for increments listed in time order."""
    product = IntMatrix.identity(increments[0].n)
    for increment in increments:
        product = mat_mul(increment, product)
    return product


def is_unimodular(a: IntMatrix) -> bool:
    """Whether A is invertible over the integers.

    Args:
        a: The matrix.

    Returns:
        bool: True when det A = ±1.
    """
    return abs(a.determinant()) == 1
