"""Binary access patterns and codebooks.

A pattern marks the slots of one frame in which a user transmits replicas of
its packet.  Patterns are stored as integer bitmasks (bit i = slot i), which
keeps weight and intersection computations constant-time for the frame sizes
of interest (n <= 128).
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

MAX_FRAME_SIZE = 128


@dataclass(frozen=True, order=True)
class Pattern:
    """One user's slot-occupancy vector for a frame of n slots."""
    mask: int
    n: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_FRAME_SIZE:
            raise ValueError(f"frame size {self.n} out of range 1..{MAX_FRAME_SIZE}")
        if self.mask < 0 or self.mask >> self.n:
            raise ValueError(f"mask {self.mask:#x} does not fit in {self.n} slots")

    @property
    def weight(self) -> int:
        return self.mask.bit_count()

    def support(self) -> tuple[int, ...]:
        """Slot indices carrying a replica, ascending."""
        return tuple(i for i in range(self.n) if self.mask >> i & 1)

    def to_string(self) -> str:
        return "".join("1" if self.mask >> i & 1 else "0" for i in range(self.n))

    def __str__(self) -> str:
        return self.to_string()


def parse_pattern(text: str, n: int) -> Pattern:
    """Parse a '0'/'1' string into a Pattern; text[i] is slot i."""
    if len(text) != n:
        raise ValueError(f"pattern '{text}' has length {len(text)}, expected {n}")
    mask = 0
    for i, ch in enumerate(text):
        if ch == "1":
            mask |= 1 << i
        elif ch != "0":
            raise ValueError(f"illegal character {ch!r} in pattern '{text}'")
    return Pattern(mask, n)


def exactly_once_mask(masks: Iterable[int]) -> int:
    """Bitmask of slots covered by exactly one of the given masks."""
    ones = 0
    twos = 0
    for m in masks:
        twos |= ones & m
        ones ^= m
    return ones & ~twos


def has_singleton_row(patterns: Sequence[Pattern]) -> bool:
    """True iff some slot is covered by exactly one of the given patterns."""
    if not patterns:
        raise ValueError("empty pattern collection")
    n = patterns[0].n
    if any(p.n != n for p in patterns):
        raise ValueError("patterns have mixed frame sizes")
    return exactly_once_mask(p.mask for p in patterns) != 0


@dataclass(frozen=True)
class Codebook:
    """Ordered collection of distinct nonzero patterns sharing a frame size.

    Pattern order matters only for reproducibility of artifacts; all
    verification semantics are order-free.
    """
    n: int
    patterns: tuple[Pattern, ...]
    metadata: Optional[str] = None

    def __post_init__(self):
        if not self.patterns:
            raise ValueError("empty codebook")
        for p in self.patterns:
            if p.n != self.n:
                raise ValueError(f"pattern of length {p.n} in a frame-{self.n} codebook")
            if p.mask == 0:
                raise ValueError("zero pattern is not a valid access codeword")
        if len(set(p.mask for p in self.patterns)) != len(self.patterns):
            raise ValueError("codebook patterns must be distinct")

    @classmethod
    def from_masks(cls, n: int, masks: Iterable[int], metadata: Optional[str] = None) -> "Codebook":
        return cls(n, tuple(Pattern(m, n) for m in masks), metadata)

    @property
    def size(self) -> int:
        return len(self.patterns)

    def masks(self) -> tuple[int, ...]:
        return tuple(p.mask for p in self.patterns)

    def weights(self) -> tuple[int, ...]:
        return tuple(p.weight for p in self.patterns)

    def __len__(self) -> int:
        return len(self.patterns)

    def __iter__(self):
        return iter(self.patterns)


@dataclass(frozen=True)
class WeightProfile:
    """Column/row weight statistics of a codebook's incidence matrix."""
    column_weights: tuple[int, ...]      # one per pattern, codebook order
    row_weights: tuple[int, ...]         # one per slot
    max_pairwise_intersection: int       # v: largest shared support between two patterns


def weight_profile(code: Codebook) -> WeightProfile:
    """Column weights, per-slot row weights and max pairwise support intersection."""
    masks = code.masks()
    col = tuple(m.bit_count() for m in masks)
    row = tuple(sum(m >> i & 1 for m in masks) for i in range(code.n))
    v = 0
    for i in range(len(masks)):
        mi = masks[i]
        for j in range(i + 1, len(masks)):
            inter = (mi & masks[j]).bit_count()
            if inter > v:
                v = inter
    return WeightProfile(col, row, v)


def write_codebook(code: Codebook, path, header_lines: Sequence[str] = ()) -> None:
    """Write the codebook text format: 'n N' then one pattern string per line."""
    with open(path, "w") as f:
        f.write(format_codebook(code, header_lines))


def format_codebook(code: Codebook, header_lines: Sequence[str] = ()) -> str:
    buf = io.StringIO()
    for line in header_lines:
        buf.write(f"# {line}\n")
    if code.metadata:
        buf.write(f"# {code.metadata}\n")
    buf.write(f"{code.n} {code.size}\n")
    for p in code.patterns:
        buf.write(p.to_string() + "\n")
    return buf.getvalue()


def read_codebook(path) -> Codebook:
    """Parse the codebook text format; '#' lines are comments."""
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty codebook file")
    head = lines[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: expected header 'n N', got {lines[0]!r}")
    n, count = int(head[0]), int(head[1])
    body = lines[1:]
    if len(body) != count:
        raise ValueError(f"{path}: header promises {count} patterns, found {len(body)}")
    return Codebook(n, tuple(parse_pattern(t, n) for t in body))
