"""Reduced words in the free group F_n.

Generators are signed indices 1..n; the text encoding uses a-z for the
generators and A-Z for their inverses, with the empty string as identity.
"""

import random
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import RankMismatchError, WordParseError


def letter_key(letter: int) -> int:
    """Position of a signed letter in the order a < A < b < B < ..."""
    return 2 * (abs(letter) - 1) + (0 if letter > 0 else 1)


def letter_to_char(letter: int) -> str:
    base = chr(ord('a') + abs(letter) - 1)
    return base if letter > 0 else base.upper()


def letters_in_order(rank: int) -> List[int]:
    """All 2n signed letters sorted by ``letter_key``."""
    result = []
    for i in range(1, rank + 1):
        result.extend((i, -i))
    return result


class FreeWord:
    """An immutable reduced word of F_rank.

    Reduction happens at construction, so every instance is reduced.
    Comparison with ``<`` is shortlex, the canonical tie-breaker.
    """

    __slots__ = ("rank", "letters", "_hash")

    def __init__(self, rank: int, letters: Sequence[int] = ()):
        if rank < 1:
            raise ValueError(f"rank must be positive, got {rank}")
        stack: List[int] = []
        for letter in letters:
            if letter == 0 or abs(letter) > rank:
                raise ValueError(f"letter {letter} out of range for rank {rank}")
            if stack and stack[-1] == -letter:
                stack.pop()
            else:
                stack.append(letter)
        self._init(rank, tuple(stack))

    def _init(self, rank: int, letters: Tuple[int, ...]) -> None:
        object.__setattr__(self, "rank", rank)
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "_hash", hash((rank, letters)))

    @classmethod
    def _reduced(cls, rank: int, letters: Tuple[int, ...]) -> "FreeWord":
        word = cls.__new__(cls)
        word._init(rank, letters)
        return word

    def __setattr__(self, name, value):
        raise AttributeError("FreeWord is immutable")

    @classmethod
    def identity(cls, rank: int) -> "FreeWord":
        return cls._reduced(rank, ())

    @classmethod
    def generator(cls, rank: int, index: int) -> "FreeWord":
        """The word consisting of the single signed letter ``index``."""
        return cls(rank, (index,))

    # -- group operations -------------------------------------------------

    def _check_rank(self, other: "FreeWord") -> None:
        if self.rank != other.rank:
            raise RankMismatchError(self.rank, other.rank)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        if not isinstance(other, FreeWord):
            return NotImplemented
        self._check_rank(other)
        left, right = self.letters, other.letters
        k = 0
        limit = min(len(left), len(right))
        while k < limit and left[len(left) - 1 - k] == -right[k]:
            k += 1
        return FreeWord._reduced(self.rank, left[:len(left) - k] + right[k:])

    def __invert__(self) -> "FreeWord":
        return FreeWord._reduced(self.rank, tuple(-x for x in reversed(self.letters)))

    def inverse(self) -> "FreeWord":
        return ~self

    def __pow__(self, exponent: int) -> "FreeWord":
        base = self if exponent >= 0 else ~self
        core, conj = cyclic_reduce(base)
        # powers of a cyclically reduced word need no cancellation
        return conj * FreeWord._reduced(self.rank, core.letters * abs(exponent)) * ~conj

    def conjugate_by(self, g: "FreeWord") -> "FreeWord":
        """Return g·self·g⁻¹."""
        return g * self * ~g

    # -- value semantics --------------------------------------------------

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return FreeWord._reduced(self.rank, self.letters[item])
        return self.letters[item]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FreeWord):
            return NotImplemented
        return self.rank == other.rank and self.letters == other.letters

    def __hash__(self) -> int:
        return self._hash

    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return (len(self.letters), tuple(letter_key(x) for x in self.letters))

    def __lt__(self, other: "FreeWord") -> bool:
        return self.sort_key() < other.sort_key()

    def __le__(self, other: "FreeWord") -> bool:
        return self.sort_key() <= other.sort_key()

    def __str__(self) -> str:
        return "".join(letter_to_char(x) for x in self.letters)

    def __repr__(self) -> str:
        return f"FreeWord({self.rank}, {str(self)!r})"

    def is_identity(self) -> bool:
        return not self.letters

    def is_cyclically_reduced(self) -> bool:
        return len(self.letters) < 2 or self.letters[0] != -self.letters[-1]

    def exponent_sum(self, index: int) -> int:
        """Signed count of generator ``index`` in the word."""
        return sum(1 if x == index else -1 for x in self.letters if abs(x) == index)

    def count_occurrences(self, pattern: "FreeWord") -> int:
        """Number of (possibly overlapping) occurrences of ``pattern`` as a subword."""
        p = pattern.letters
        if not p or len(p) > len(self.letters):
            return 0
        text = self.letters
        return sum(1 for i in range(len(text) - len(p) + 1) if text[i:i + len(p)] == p)

    def rotations(self) -> List["FreeWord"]:
        """Cyclic rotations of a cyclically reduced word."""
        n = len(self.letters)
        if n == 0:
            return [self]
        return [FreeWord._reduced(self.rank, self.letters[k:] + self.letters[:k]) for k in range(n)]


def parse_word(text: str, rank: Optional[int] = None) -> FreeWord:
    """Parse the a-z/A-Z encoding.

    Args:
        text: Word text, empty for the identity
        rank: Ambient rank; inferred from the largest letter when omitted

    Returns:
        The reduced word

    Raises:
        WordParseError: on characters outside a-z/A-Z or letters beyond ``rank``
    """
    letters = []
    for pos, ch in enumerate(text):
        if 'a' <= ch <= 'z':
            letters.append(ord(ch) - ord('a') + 1)
        elif 'A' <= ch <= 'Z':
            letters.append(-(ord(ch) - ord('A') + 1))
        else:
            raise WordParseError(text, pos, f"unexpected character {ch!r}")
        if rank is not None and abs(letters[-1]) > rank:
            raise WordParseError(text, pos, f"letter {ch!r} exceeds rank {rank}")
    if rank is None:
        rank = max((abs(x) for x in letters), default=1)
    return FreeWord(rank, letters)


def multiply(u: FreeWord, v: FreeWord) -> FreeWord:
    return u * v


def distance(u: FreeWord, v: FreeWord) -> int:
    """Tree distance between two vertices of the Cayley graph."""
    return len(~u * v)


def cyclic_reduce(w: FreeWord) -> Tuple[FreeWord, FreeWord]:
    """Split ``w`` as conjugator · core · conjugator⁻¹ with a cyclically reduced core."""
    letters = w.letters
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == -letters[j]:
        i += 1
        j -= 1
    core = FreeWord._reduced(w.rank, letters[i:j + 1])
    conjugator = FreeWord._reduced(w.rank, letters[:i])
    return core, conjugator


def are_conjugate(u: FreeWord, v: FreeWord) -> Tuple[bool, Optional[FreeWord]]:
    """Decide conjugacy and return the shortlex-least witness g with g·u·g⁻¹ = v.

    Raises:
        RankMismatchError: when the ranks differ
    """
    if u.rank != v.rank:
        raise RankMismatchError(u.rank, v.rank)
    core_u, c1 = cyclic_reduce(u)
    core_v, c2 = cyclic_reduce(v)
    if len(core_u) != len(core_v):
        return False, None
    n = len(core_u)
    if n == 0:
        return True, c2 * ~c1
    best: Optional[FreeWord] = None
    letters = core_u.letters
    for k in range(n):
        if letters[k:] + letters[:k] != core_v.letters:
            continue
        x = FreeWord._reduced(u.rank, letters[:k])
        g = c2 * ~x * ~c1
        if best is None or g < best:
            best = g
    if best is None:
        return False, None
    assert best * u * ~best == v
    return True, best


def ball_size(rank: int, radius: int) -> int:
    """Closed formula for the number of reduced words of length ≤ radius."""
    total = 1
    for k in range(1, radius + 1):
        total += 2 * rank * (2 * rank - 1) ** (k - 1)
    return total


def sphere(rank: int, radius: int) -> List[FreeWord]:
    """Reduced words of length exactly ``radius`` in shortlex order."""
    level = [FreeWord.identity(rank)]
    alphabet = letters_in_order(rank)
    for _ in range(radius):
        nxt = []
        for word in level:
            last = word.letters[-1] if word.letters else 0
            for letter in alphabet:
                if letter != -last:
                    nxt.append(FreeWord._reduced(rank, word.letters + (letter,)))
        level = nxt
    return level


def ball(rank: int, radius: int) -> Iterator[FreeWord]:
    """Yield every reduced word of length ≤ radius exactly once, in shortlex order."""
    if radius < 0:
        return
    level = [FreeWord.identity(rank)]
    alphabet = letters_in_order(rank)
    yield level[0]
    for _ in range(radius):
        nxt = []
        for word in level:
            last = word.letters[-1] if word.letters else 0
            for letter in alphabet:
                if letter != -last:
                    child = FreeWord._reduced(rank, word.letters + (letter,))
                    nxt.append(child)
                    yield child
        level = nxt


def random_word(rank: int, length: int, rng: random.Random) -> FreeWord:
    """Uniformly random reduced word of exactly ``length`` letters."""
    alphabet = letters_in_order(rank)
    letters: List[int] = []
    while len(letters) < length:
        letter = rng.choice(alphabet)
        if letters and letter == -letters[-1]:
            continue
        letters.append(letter)
    return FreeWord._reduced(rank, tuple(letters))


def shortlex_min(words) -> FreeWord:
    return min(words, key=FreeWord.sort_key)
