"""Bit oracles and the dyadic staircase function built on top of them.

`FofFunction` turns an arbitrary bit sequence F (with F(1)=1) into a function
fof whose prefix counts of ones and zeros agree at powers of two, while F
itself stays recoverable from fof by an index shift.  The construction works
block-by-block over dyadic intervals:

  with k = kappa(n), so 2^(k+1) < n <= 2^(k+2):
    - on the first half-block, fof(n) copies F(n - 2^k);
    - then ones, until the count of ones can coast to 2^(k+1) exactly;
    - then zeros to the end of the block.

Seeds: the CLI accepts an integer seed (pseudo-random bits), or the literal
`0xF1G` for the fixed figure sequence, or the names `figure`, `alt`, `parity`.
"""
from __future__ import annotations

import random
import threading
from typing import Protocol

FIGURE_PREFIX = (1, 0, 0, 0, 0, 1, 0, 1)
FIGURE_SEED = "0xF1G"


class BitOracle(Protocol):
    name: str

    def __call__(self, n: int) -> int: ...


class FigureOracle:
    """The fixed reference sequence, extended cyclically past its prefix."""

    name = "figure"

    def __call__(self, n: int) -> int:
        if n < 1:
            raise ValueError("oracle index starts at 1")
        return FIGURE_PREFIX[(n - 1) % len(FIGURE_PREFIX)]


class ConstantThenAlternatingOracle:
    """Ones on a short initial stretch, then strictly alternating."""

    name = "alt"

    def __call__(self, n: int) -> int:
        if n < 1:
            raise ValueError("oracle index starts at 1")
        if n <= 4:
            return 1
        return (n - 4) % 2


class ParityOracle:
    name = "parity"

    def __call__(self, n: int) -> int:
        if n < 1:
            raise ValueError("oracle index starts at 1")
        return n % 2


class SeededOracle:
    """Pseudo-random bits from a fixed seed; F(1) is pinned to 1."""

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self.name = f"seed={seed}"
        self._rng = random.Random(seed)
        self._bits: list[int] = [1]

    def __call__(self, n: int) -> int:
        if n < 1:
            raise ValueError("oracle index starts at 1")
        while len(self._bits) < n:
            self._bits.append(self._rng.randint(0, 1))
        return self._bits[n - 1]


def oracle_from_seed(spec: str) -> BitOracle:
    """Resolve a CLI seed string to an oracle."""
    if spec == FIGURE_SEED or spec == "figure":
        return FigureOracle()
    if spec == "alt":
        return ConstantThenAlternatingOracle()
    if spec == "parity":
        return ParityOracle()
    try:
        seed = int(spec, 0)
    except ValueError:
        raise ValueError(
            f"seed must be an integer, 'figure' (alias {FIGURE_SEED}), 'alt', or 'parity': got {spec!r}"
        ) from None
    return SeededOracle(seed)


def kappa(n: int) -> int:
    """The unique k with 2^(k+1) < n <= 2^(k+2), defined for n >= 3."""
    if n < 3:
        raise ValueError("kappa is defined for n >= 3")
    return (n - 1).bit_length() - 2


class FofFunction:
    """Memoized fof over a bit oracle, with prefix counts and F-recovery."""

    def __init__(self, oracle: BitOracle) -> None:
        self.oracle = oracle
        self._bits: list[int] = [0]  # 1-indexed; slot 0 unused
        self._ones: list[int] = [0]  # prefix count of ones
        self._lock = threading.Lock()

    def _extend(self, n: int) -> None:
        with self._lock:
            while len(self._bits) <= n:
                i = len(self._bits)
                if i == 1:
                    bit = 1
                elif i == 2:
                    bit = 0
                else:
                    k = kappa(i)
                    half = 1 << k
                    copy_end = (1 << (k + 1)) + half
                    if i <= copy_end:
                        bit = self.oracle(i - half)
                    else:
                        ones_target = (1 << (k + 2)) + half - self._ones[copy_end]
                        bit = 1 if i <= ones_target else 0
                self._bits.append(bit)
                self._ones.append(self._ones[-1] + bit)

    def fof(self, n: int) -> int:
        if n < 1:
            raise ValueError("fof index starts at 1")
        self._extend(n)
        return self._bits[n]

    def f1(self, n: int) -> int:
        """How many of fof(1..n) are ones (the fixpoint budget at size n)."""
        if n < 0:
            raise ValueError("prefix length must be nonnegative")
        self._extend(n)
        return self._ones[n]

    def f0(self, n: int) -> int:
        return n - self.f1(n)

    def counts(self, n: int) -> tuple[int, int]:
        return self.f1(n), self.f0(n)

    def recover_F(self, m: int) -> int:
        """Read F(m) back out of fof: F(m) = fof(m + 2^j) for 2^j < m <= 2^(j+1)."""
        if m < 1:
            raise ValueError("F index starts at 1")
        if m == 1:
            return 1
        j = (m - 1).bit_length() - 1
        return self.fof(m + (1 << j))


def fof_bit(f: FofFunction, n: int) -> int:
    return f.fof(n)


def f_counts(f: FofFunction, n: int) -> tuple[int, int]:
    return f.counts(n)


def recover_F(f: FofFunction, m: int) -> int:
    return f.recover_F(m)
