"""Exact arithmetic on words in the free group F_N and on its automorphisms.

A letter is a nonzero integer: ``i`` stands for the generator x_i and ``-i``
for its inverse. Words are printed with lowercase letters for generators and
uppercase letters for inverses (``a``=x_1, ``B``=x_2^-1); the empty word is
written ``1``.

Letters are stored one byte each, as read-only ``int8`` arrays. Products are
reduced in a byte buffer whose growth is checked against the letter budget
before it happens.

Composition convention: ``compose(phi, psi)`` is phi∘psi (psi is applied
first). A walk product Φ_n = s_1…s_n is built as ``compose(Φ_{n-1}, s_n)``.
"""
from array import array
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union
import logging

import numpy as np

import config
from utils.errors import InverseCheckError, WordBudgetExceeded, WordParseError
from utils.matrix_oracle import IntMatrix

logger = logging.getLogger(__name__)

MAX_RANK = 26

Letters = Union[np.ndarray, Sequence[int]]


def letter_to_char(letter: int) -> str:
    """Print one signed generator index.

    Args:
        letter: Signed index in 1..26.

    Returns:
        str: ``a``..``z`` for generators, ``A``..``Z`` for their inverses.
    """
    char = chr(ord("a") + abs(letter) - 1)
    return char if letter > 0 else char.upper()


def format_letters(letters: Letters) -> str:
    """Print a sequence of signed generator indices, ``1`` when it is empty.

    Args:
        letters: Signed generator indices.

    Returns:
        str: The word in letter notation.
    """
    values = letters.tolist() if isinstance(letters, np.ndarray) else list(letters)
    if not values:
        return "1"
    return "".join(letter_to_char(letter) for letter in values)


def _check_letters(raw: Iterable[int], rank: int) -> List[int]:
    if not 1 <= rank <= MAX_RANK:
        raise ValueError(f"rank must lie in 1..{MAX_RANK}, got {rank}")
    letters = [int(letter) for letter in raw]
    for letter in letters:
        if letter == 0 or abs(letter) > rank:
            raise ValueError(f"letter index {letter} out of range for rank {rank}")
    return letters


def _as_letters(raw: Letters) -> np.ndarray:
    if isinstance(raw, np.ndarray) and raw.dtype == np.int8 and not raw.flags.writeable:
        return raw
    letters = np.array(raw, dtype=np.int8).reshape(-1)
    letters.flags.writeable = False
    return letters


def _buffer(letters: np.ndarray) -> array:
    out = array("b")
    out.frombytes(letters.tobytes())
    return out


def _freeze(out: array) -> np.ndarray:
    if not out:
        return _as_letters(())
    letters = np.frombuffer(out, dtype=np.int8)
    letters.flags.writeable = False
    return letters


def _suffix_matches(out: array, inverse: array, k: int) -> bool:
    return out[len(out) - k:] == inverse[len(inverse) - k:]


def _cancellable(out: array, inverse: array) -> int:
    """Length of the longest common suffix of ``out`` and ``inverse``.

    out·piece cancels exactly where out ends like piece⁻¹. Gallops on the
    length, then bisects.
    """
    limit = min(len(out), len(inverse))
    if limit == 0 or out[-1] != inverse[-1]:
        return 0
    good, reach = 1, 8
    while reach < limit and _suffix_matches(out, inverse, reach):
        good, reach = reach, reach * 8
    bad = reach if reach < limit else limit + 1
    while bad - good > 1:
        mid = (good + bad) // 2
        if _suffix_matches(out, inverse, mid):
            good = mid
        else:
            bad = mid
    return good


def _append_reduced(out: array, piece: array, inverse: array, budget: int) -> None:
    # piece is itself reduced, so cancellation can only happen at the join
    k = _cancellable(out, inverse)
    projected = len(out) - k + len(piece) - k
    if projected > budget:
        raise WordBudgetExceeded(projected, budget)
    if k:
        del out[len(out) - k:]
        out.extend(piece[k:])
    else:
        out.extend(piece)


def _cancellation(tail: np.ndarray, head: np.ndarray) -> int:
    """Number of letters at the end of ``tail`` that cancel against the start of ``head``."""
    backwards = tail[::-1]
    n = len(head)
    checked, chunk = 0, 8
    while checked < n:
        stop = min(n, checked + chunk)
        mismatch = np.flatnonzero(backwards[checked:stop] != -head[checked:stop])
        if mismatch.size:
            return checked + int(mismatch[0])
        checked, chunk = stop, chunk * 4
    return n


class _SegmentStack:
    """Length of a freely reduced product kept as a stack of views into its reduced pieces.

    Nothing is copied, so the tracked length may exceed any letter budget.
    """

    def __init__(self) -> None:
        self.length = 0
        self._segments: List[np.ndarray] = []

    def push(self, piece: np.ndarray) -> None:
        start = 0
        while start < len(piece) and self._segments:
            top = self._segments[-1]
            if int(top[-1]) != -int(piece[start]):
                break
            span = min(len(top), len(piece) - start)
            matched = _cancellation(top[len(top) - span:], piece[start:start + span])
            start += matched
            self.length -= matched
            if matched == len(top):
                self._segments.pop()
            else:
                self._segments[-1] = top[:len(top) - matched]
            if matched < span:
                break
        if start < len(piece):
            self._segments.append(piece[start:] if start else piece)
            self.length += len(piece) - start


@dataclass(frozen=True, eq=False)
class _LetterSequence:
    letters: np.ndarray
    rank: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "letters", _as_letters(self.letters))

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return format_letters(self.letters)

    def __eq__(self, other: object) -> bool:
        if type(other) is not type(self):
            return NotImplemented
        return self.rank == other.rank and np.array_equal(self.letters, other.letters)

    def __hash__(self) -> int:
        return hash((type(self).__name__, self.rank, self.letters.tobytes()))

    def as_tuple(self) -> Tuple[int, ...]:
        return tuple(self.letters.tolist())


@dataclass(frozen=True, eq=False)
class Word(_LetterSequence):
    """A freely reduced word in F_N.

    Attributes:
        letters: Signed generator indices as a read-only ``int8`` array, no adjacent inverse pair.
        rank: The rank N of the ambient free group.
    """

    def __mul__(self, other: "Word") -> "Word":
        _check_same_rank(self.rank, other.rank)
        out = _buffer(self.letters)
        _append_reduced(out, _buffer(other.letters), _buffer(other.inverse().letters), config.LETTER_BUDGET)
        return Word(_freeze(out), self.rank)

    def inverse(self) -> "Word":
        return Word(-self.letters[::-1], self.rank)

    @classmethod
    def generator(cls, index: int, rank: int) -> "Word":
        return reduce([index], rank)

    @classmethod
    def empty(cls, rank: int) -> "Word":
        return cls((), rank)


@dataclass(frozen=True, eq=False)
class CyclicWord(_LetterSequence):
    """A cyclically reduced word; its length is the conjugacy length ‖g‖."""

    def as_word(self) -> Word:
        return Word(self.letters, self.rank)

    def canonical(self) -> Tuple[int, ...]:
        """Lexicographically least rotation; equal for conjugate cyclic words."""
        letters = self.as_tuple()
        if not letters:
            return ()
        n = len(letters)
        doubled = letters + letters
        return min(doubled[i:i + n] for i in range(n))


def _check_same_rank(left: int, right: int) -> None:
    if left != right:
        raise ValueError(f"rank mismatch: {left} != {right}")


def reduce(raw: Iterable[int], rank: int) -> Word:
    """Freely reduce a sequence of signed generator indices.

    Args:
        raw: Signed indices in 1..rank.
        rank: Rank of the free group.

    Returns:
        Word: The freely reduced word equal to ``raw`` in F_N.

    Raises:
        ValueError: If an index is zero or exceeds ``rank``.
    """
    out: List[int] = []
    for letter in _check_letters(raw, rank):
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return Word(out, rank)


def cyclic_reduce(w: Word) -> CyclicWord:
    """Peel matching ends off a reduced word to get its conjugacy representative."""
    letters = w.letters
    half = len(letters) // 2
    mismatch = np.flatnonzero(letters[:half] != -letters[::-1][:half])
    k = int(mismatch[0]) if mismatch.size else half
    return CyclicWord(letters[k:len(letters) - k], w.rank)


def conjugacy_length(w: Word) -> int:
    """Length of the shortest word conjugate to ``w``.

    Args:
        w: A reduced word.

    Returns:
        int: ‖w‖, the length of its cyclic reduction.
    """
    return len(cyclic_reduce(w))


@dataclass(frozen=True)
class Automorphism:
    """An automorphism of F_N given by generator images and certified inverse images.

    Attributes:
        images: Image of each generator x_1..x_N.
        inverse_images: Image of each generator under the inverse automorphism.
        rank: The rank N.
    """
    images: Tuple[Word, ...]
    inverse_images: Tuple[Word, ...]
    rank: int

    def __post_init__(self) -> None:
        if len(self.images) != self.rank or len(self.inverse_images) != self.rank:
            raise ValueError(f"an automorphism of F_{self.rank} needs {self.rank} images and inverse images")
        for word in self.images + self.inverse_images:
            _check_same_rank(word.rank, self.rank)
            if len(word) == 0:
                raise ValueError("automorphism images must be nonempty")

    @cached_property
    def _inverted_images(self) -> Tuple[np.ndarray, ...]:
        return tuple(Word(-image.letters[::-1], self.rank).letters for image in self.images)

    @cached_property
    def _pieces(self) -> Tuple[array, ...]:
        # indexed by letter + rank, so position rank itself is unused
        inverted = [_buffer(letters) for letters in reversed(self._inverted_images)]
        return tuple(inverted + [array("b")] + [_buffer(image.letters) for image in self.images])

    def image_of_letter(self, letter: int) -> np.ndarray:
        """Image of a signed letter as a read-only ``int8`` array."""
        return self.images[letter - 1].letters if letter > 0 else self._inverted_images[-letter - 1]

    def total_length(self) -> int:
        return sum(len(image) for image in self.images) + sum(len(image) for image in self.inverse_images)

    def is_identity(self) -> bool:
        return all(image.as_tuple() == (i + 1,) for i, image in enumerate(self.images))

    def check_inverse(self, budget: Optional[int] = None) -> bool:
        """Check that images and inverse_images invert each other on every generator."""
        inverse = invert(self)
        for i in range(self.rank):
            generator = (i + 1,)
            if apply(inverse, self.images[i], budget).as_tuple() != generator:
                return False
            if apply(self, self.inverse_images[i], budget).as_tuple() != generator:
                return False
        return True

    def __str__(self) -> str:
        return format_automorphism(self)

    @classmethod
    def identity(cls, rank: int) -> "Automorphism":
        generators = tuple(Word.generator(i + 1, rank) for i in range(rank))
        return cls(generators, generators, rank)


def apply(phi: Automorphism, w: Word, budget: Optional[int] = None) -> Word:
    """Apply an automorphism to a word and freely reduce the result.

    Args:
        phi: The automorphism.
        w: A reduced word of the same rank.
        budget: Letter budget; defaults to ``config.LETTER_BUDGET``.

    Returns:
        Word: The reduced image phi(w).

    Raises:
        WordBudgetExceeded: If the image would outgrow the letter budget.
    """
    _check_same_rank(phi.rank, w.rank)
    if budget is None:
        budget = config.LETTER_BUDGET
    pieces = phi._pieces
    offset = phi.rank
    out = array("b")
    for letter in w.letters.tolist():
        _append_reduced(out, pieces[offset + letter], pieces[offset - letter], budget)
    return Word(_freeze(out), w.rank)


def apply_cyclic(phi: Automorphism, g: CyclicWord, budget: Optional[int] = None) -> CyclicWord:
    """Image of a conjugacy class, cyclically reduced."""
    return cyclic_reduce(apply(phi, g.as_word(), budget))


def image_length(phi: Automorphism, g: CyclicWord) -> int:
    """Conjugacy length ‖φ(g)‖, measured without building φ(g).

    For a reduced w, |reduce(ww)| − |w| is the length of its cyclic reduction,
    so the image is pushed twice through a stack of views into φ's images.

    Args:
        phi: The automorphism.
        g: A cyclically reduced word of the same rank.

    Returns:
        int: The conjugacy length of φ(g); not bounded by the letter budget.
    """
    _check_same_rank(phi.rank, g.rank)
    letters = g.letters.tolist()
    product = _SegmentStack()
    for letter in letters:
        product.push(phi.image_of_letter(letter))
    single = product.length
    for letter in letters:
        product.push(phi.image_of_letter(letter))
    return product.length - single


def invert(phi: Automorphism) -> Automorphism:
    """Swap the certified images and inverse images.

    Args:
        phi: The automorphism.

    Returns:
        Automorphism: φ⁻¹, at no cost.
    """
    return Automorphism(phi.inverse_images, phi.images, phi.rank)


def compose(phi: Automorphism, psi: Automorphism, budget: Optional[int] = None) -> Automorphism:
    """Return phi∘psi: x ↦ phi(psi(x)), with inverse x ↦ psi⁻¹(phi⁻¹(x)).

    The letter budget bounds the total length of all 2N images of the result.

    Raises:
        WordBudgetExceeded: If the images would outgrow the letter budget.
        InverseCheckError: In debug mode, if the result fails the inverse check.
    """
    _check_same_rank(phi.rank, psi.rank)
    if budget is None:
        budget = config.LETTER_BUDGET
    psi_inverse = invert(psi)
    remaining = budget
    images: List[Word] = []
    inverse_images: List[Word] = []
    try:
        for outer, words, out in ((phi, psi.images, images), (psi_inverse, phi.inverse_images, inverse_images)):
            for word in words:
                image = apply(outer, word, remaining)
                remaining -= len(image)
                out.append(image)
    except WordBudgetExceeded as e:
        raise WordBudgetExceeded(budget - remaining + e.length, budget) from None
    result = Automorphism(tuple(images), tuple(inverse_images), phi.rank)
    if config.DEBUG_INVARIANTS and not result.check_inverse(budget):
        logger.error(f"Composition lost its certified inverse: {phi} ∘ {psi}")
        raise InverseCheckError("composition failed the inverse check")
    return result


def power(phi: Automorphism, k: int, budget: Optional[int] = None) -> Automorphism:
    """Return phi^k for k ≥ 0 by repeated squaring."""
    if k < 0:
        return power(invert(phi), -k, budget)
    result = Automorphism.identity(phi.rank)
    base = phi
    while k:
        if k & 1:
            result = compose(result, base, budget)
        k >>= 1
        if k:
            base = compose(base, base, budget)
    return result


def abelianization(phi: Automorphism) -> IntMatrix:
    """Signed letter counts: row i, column j counts x_j in phi(x_i).

    With this row convention abelianization(compose(phi, psi)) equals
    abelianization(psi) @ abelianization(phi).
    """
    rows = []
    for image in phi.images:
        counts = np.zeros(phi.rank, dtype=np.int64)
        letters = image.letters.astype(np.int64)
        np.add.at(counts, np.abs(letters) - 1, np.sign(letters))
        rows.append(tuple(int(c) for c in counts))
    return IntMatrix(tuple(rows))


def transition_matrix(phi: Automorphism) -> np.ndarray:
    """Unsigned letter counts of the generator images, as floats."""
    matrix = np.zeros((phi.rank, phi.rank), dtype=float)
    for i, image in enumerate(phi.images):
        letters = np.abs(image.letters.astype(np.int64)) - 1
        matrix[i] = np.bincount(letters, minlength=phi.rank)
    return matrix


def parse_word(text: str, rank: Optional[int] = None) -> Word:
    """Parse a word such as ``"aBc"``; ``"1"`` is the empty word.

    Args:
        text: Letters a, b, c, ... (generators) and A, B, C, ... (inverses); spaces ignored.
        rank: Rank of the free group; inferred from the largest letter when omitted.

    Raises:
        WordParseError: On a character that is not an ASCII letter or lies beyond ``rank``.
    """
    compact = "".join(text.split())
    if compact in ("", "1"):
        if rank is None:
            raise WordParseError("cannot infer the rank of the empty word")
        return Word.empty(rank)
    letters = []
    for char in compact:
        if not (char.isascii() and char.isalpha()):
            raise WordParseError(f"invalid character {char!r} in word {text!r}")
        index = ord(char.lower()) - ord("a") + 1
        letters.append(index if char.islower() else -index)
    inferred = max(abs(letter) for letter in letters)
    if rank is None:
        rank = inferred
    elif inferred > rank:
        raise WordParseError(f"letter {letter_to_char(inferred)!r} exceeds rank {rank} in {text!r}")
    return reduce(letters, rank)


def _parse_images(text: str, rank: Optional[int]) -> Tuple[Word, ...]:
    entries = [entry.strip() for entry in text.split(";") if entry.strip()]
    if rank is None:
        rank = len(entries)
    if len(entries) != rank:
        raise WordParseError(f"expected {rank} generator images, got {len(entries)} in {text!r}")
    images: Dict[int, Word] = {}
    for entry in entries:
        if "->" not in entry:
            raise WordParseError(f"missing '->' in {entry!r}")
        source, target = (part.strip() for part in entry.split("->", 1))
        if len(source) != 1 or not (source.isascii() and source.islower()):
            raise WordParseError(f"left side of {entry!r} must be a single lowercase generator")
        index = ord(source) - ord("a") + 1
        if index > rank or index in images:
            raise WordParseError(f"generator {source!r} is out of range or repeated")
        image = parse_word(target, rank)
        if len(image) == 0:
            raise WordParseError(f"image of {source!r} must be nonempty")
        images[index] = image
    return tuple(images[i + 1] for i in range(rank))


def parse_automorphism(text: str, rank: Optional[int] = None) -> Automorphism:
    """Parse ``"a->ab; b->a | a->b; b->Ba"`` into a certified automorphism.

    Raises:
        WordParseError: On malformed text.
        InverseCheckError: If the part after ``|`` is not the inverse of the part before it.
    """
    parts = text.split("|")
    if len(parts) != 2:
        raise WordParseError(f"automorphism needs images and inverse images separated by '|': {text!r}")
    images = _parse_images(parts[0], rank)
    rank = len(images)
    inverse_images = _parse_images(parts[1], rank)
    phi = Automorphism(images, inverse_images, rank)
    if not phi.check_inverse():
        logger.error(f"Inverse check failed for automorphism {text!r}")
        raise InverseCheckError(f"the inverse images do not invert {parts[0].strip()!r}")
    return phi


def format_automorphism(phi: Automorphism) -> str:
    """Print an automorphism in the notation read by parse_automorphism.

    Args:
        phi: The automorphism.

    Returns:
        str: Images and inverse images, e.g. ``"a->ab; b->a | a->b; b->Ba"``.
    """
    def side(words: Tuple[Word, ...]) -> str:
        return "; ".join(f"{letter_to_char(i + 1)}->{word}" for i, word in enumerate(words))
    return f"{side(phi.images)} | {side(phi.inverse_images)}"


def _elementary(rank: int, index: int, image: Sequence[int], inverse_image: Sequence[int]) -> Automorphism:
    images = [Word.generator(i + 1, rank) for i in range(rank)]
    inverse_images = list(images)
    images[index - 1] = reduce(image, rank)
    inverse_images[index - 1] = reduce(inverse_image, rank)
    return Automorphism(tuple(images), tuple(inverse_images), rank)


def nielsen_library(rank: int) -> Dict[str, Automorphism]:
    """Elementary Nielsen automorphisms of F_N with closed-form inverses.

    Names: ``Rij`` x_i→x_i x_j, ``rij`` x_i→x_i x_j⁻¹, ``Lij`` x_i→x_j x_i,
    ``lij`` x_i→x_j⁻¹ x_i, ``Ii`` x_i→x_i⁻¹, ``Pij`` swaps x_i and x_j.
    """
    if not 2 <= rank <= 9:
        raise ValueError(f"the Nielsen library is named for ranks 2..9, got {rank}")
    library: Dict[str, Automorphism] = {}
    for i in range(1, rank + 1):
        library[f"I{i}"] = _elementary(rank, i, [-i], [-i])
        for j in range(1, rank + 1):
            if i == j:
                continue
            library[f"R{i}{j}"] = _elementary(rank, i, [i, j], [i, -j])
            library[f"r{i}{j}"] = _elementary(rank, i, [i, -j], [i, j])
            library[f"L{i}{j}"] = _elementary(rank, i, [j, i], [-j, i])
            library[f"l{i}{j}"] = _elementary(rank, i, [-j, i], [j, i])
            if i < j:
                swapped = [Word.generator(k + 1, rank) for k in range(rank)]
                swapped[i - 1], swapped[j - 1] = swapped[j - 1], swapped[i - 1]
                library[f"P{i}{j}"] = Automorphism(tuple(swapped), tuple(swapped), rank)
    return library


def signed_permutation(permutation: Sequence[int], signs: Sequence[int]) -> Automorphism:
    """x_i ↦ x_{permutation[i]}^{signs[i]} (0-based permutation, signs ±1)."""
    rank = len(permutation)
    images = tuple(Word((signs[i] * (permutation[i] + 1),), rank) for i in range(rank))
    inverse_letters: List[int] = [0] * rank
    for i in range(rank):
        inverse_letters[permutation[i]] = signs[i] * (i + 1)
    inverse_images = tuple(Word((letter,), rank) for letter in inverse_letters)
    return Automorphism(images, inverse_images, rank)
