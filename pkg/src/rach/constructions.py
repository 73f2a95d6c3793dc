"""Code family generators: constant-weight codebooks, Steiner triple systems,
block-design loading, and the extended Busschbach lifting for 3-IC codes.

The S(3,5,26) and S(3,5,65) systems ship as data files (they are treated as
known objects and verified, not re-derived).
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from itertools import combinations
from math import comb
from typing import Optional, Sequence

from .patterns import Codebook, Pattern
from . import verify

ENUMERATION_CAP = 2**21


@dataclass(frozen=True)
class BlockDesign:
    """Set-system view of a code: k-element blocks over ground set {0..n-1}."""
    n: int
    t: int
    k: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if not (1 <= self.t <= self.k <= self.n):
            raise ValueError(f"bad design parameters t={self.t} k={self.k} n={self.n}")
        for b in self.blocks:
            if len(b) != self.k or len(set(b)) != self.k:
                raise ValueError(f"block {b} is not a {self.k}-element subset")
            if any(not 0 <= e < self.n for e in b):
                raise ValueError(f"block {b} has elements outside 0..{self.n - 1}")

    @property
    def size(self) -> int:
        return len(self.blocks)


def enumerate_constant_weight(n: int, k: int, cap: int = ENUMERATION_CAP) -> Codebook:
    """All C(n,k) weight-k patterns, ordered by ascending support tuple."""
    if not 1 <= k <= n:
        raise ValueError(f"weight k={k} out of range 1..{n}")
    count = comb(n, k)
    if count > cap:
        raise ValueError(f"C({n},{k}) = {count} exceeds enumeration cap {cap}")
    masks = []
    for support in combinations(range(n), k):
        m = 0
        for s in support:
            m |= 1 << s
        masks.append(m)
    return Codebook.from_masks(n, masks, metadata=f"constant-weight n={n} k={k}")


def steiner_triple(n: int) -> BlockDesign:
    """S(2,3,n) by the Bose (n = 3 mod 6) or Skolem (n = 1 mod 6) construction."""
    if n < 3 or n % 6 not in (1, 3):
        raise ValueError(f"no Steiner triple system on n={n} points (need n = 1,3 mod 6)")
    if n % 6 == 3:
        blocks = _bose(n)
    else:
        blocks = _skolem(n)
    return BlockDesign(n, 2, 3, tuple(sorted(tuple(sorted(b)) for b in blocks)))


def _bose(n: int) -> list[tuple[int, int, int]]:
    # points (x, i) in Z_{2t+1} x {0,1,2}, labeled x + (2t+1)*i
    t = (n - 3) // 6
    q = 2 * t + 1

    def pt(x, i):
        return x % q + q * (i % 3)

    half = (t + 1)  # inverse of 2 mod q: 2(t+1) = 2t+2 = 1 (mod q)
    blocks = []
    for x in range(q):
        blocks.append((pt(x, 0), pt(x, 1), pt(x, 2)))
    for x in range(q):
        for y in range(x + 1, q):
            s = (x + y) * half % q
            for i in range(3):
                blocks.append((pt(x, i), pt(y, i), pt(s, i + 1)))
    return blocks


def _skolem(n: int) -> list[tuple[int, int, int]]:
    # points (x, i) in Z_{2t} x {0,1,2} plus one extra point, labeled 6t
    t = (n - 1) // 6
    q = 2 * t
    inf = 6 * t

    def pt(x, i):
        return x % q + q * (i % 3)

    def halve(s):
        # half-idempotent commutative quasigroup on Z_{2t}: relabelled halving
        s %= q
        return s // 2 if s % 2 == 0 else (s - 1) // 2 + t

    blocks = []
    for x in range(t):
        blocks.append((pt(x, 0), pt(x, 1), pt(x, 2)))
    for x in range(t):
        for i in range(3):
            blocks.append((inf, pt(x + t, i), pt(x, i + 1)))
    for x in range(q):
        for y in range(x + 1, q):
            s = halve(x + y)
            for i in range(3):
                blocks.append((pt(x, i), pt(y, i), pt(s, i + 1)))
    return blocks


@dataclass(frozen=True)
class SteinerCheck:
    ok: bool
    violation: Optional[tuple[int, ...]] = None   # a t-subset covered 0 or >= 2 times
    cover_count: Optional[int] = None

    def __bool__(self) -> bool:
        return self.ok


def verify_steiner(design: BlockDesign) -> SteinerCheck:
    """Exhaustively check that every t-subset lies in exactly one block."""
    seen: dict[tuple[int, ...], int] = {}
    for b in design.blocks:
        for sub in combinations(sorted(b), design.t):
            c = seen.get(sub, 0) + 1
            seen[sub] = c
            if c > 1:
                return SteinerCheck(False, sub, c)
    for sub in combinations(range(design.n), design.t):
        if sub not in seen:
            return SteinerCheck(False, sub, 0)
    return SteinerCheck(True)


def load_block_design(path) -> BlockDesign:
    """Read the block-design format: 't k n B' then B lines of k indices.

    The Steiner property is not assumed; callers verify.
    """
    with open(path) as f:
        lines = [ln.strip() for ln in f if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise ValueError(f"{path}: empty design file")
    head = lines[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: expected header 't k n B', got {lines[0]!r}")
    t, k, n, b = map(int, head)
    body = lines[1:]
    if len(body) != b:
        raise ValueError(f"{path}: header promises {b} blocks, found {len(body)}")
    blocks = []
    for ln in body:
        elems = tuple(int(e) for e in ln.split())
        blocks.append(elems)
    return BlockDesign(n, t, k, tuple(blocks))


def save_block_design(design: BlockDesign, path, header_lines: Sequence[str] = ()) -> None:
    with open(path, "w") as f:
        for line in header_lines:
            f.write(f"# {line}\n")
        f.write(f"{design.t} {design.k} {design.n} {design.size}\n")
        for b in design.blocks:
            f.write(" ".join(map(str, b)) + "\n")


BUNDLED_DESIGNS = ("s_3_5_26", "s_3_5_65")


def bundled_design(name: str) -> BlockDesign:
    """Load one of the packaged Steiner system files."""
    if name not in BUNDLED_DESIGNS:
        raise ValueError(f"unknown bundled design {name!r}; have {BUNDLED_DESIGNS}")
    ref = resources.files("rach").joinpath(f"data/{name}.blocks")
    with resources.as_file(ref) as path:
        return load_block_design(path)


def design_to_codebook(design: BlockDesign) -> Codebook:
    """Incidence-vector codebook: one pattern per block."""
    masks = []
    for b in design.blocks:
        m = 0
        for e in b:
            m |= 1 << e
        masks.append(m)
    if len(set(masks)) != len(masks):
        raise ValueError("design has duplicate blocks; codebook patterns must be distinct")
    meta = f"S({design.t},{design.k},{design.n})-style design, {design.size} blocks"
    return Codebook.from_masks(design.n, masks, metadata=meta)


def busschbach_extend(code: Codebook, extension_budget: Optional[int] = None) -> Codebook:
    """Lift a 3-IC code from frame n to frame n+3.

    Each input pattern x yields 100x, 010x, 001x (new slots are 0..2, x is
    shifted up); the zero pattern contributes the three unit vectors; then
    patterns 111a are added greedily for a in ascending mask order (a = 0
    first), keeping the code 3-IC.  extension_budget caps the number of
    111a candidates examined.
    """
    report = verify.is_m_ic(code, min(3, code.size))
    if report.is_m_ic is not True:
        raise ValueError(f"input code is not 3-IC (witness {report.witness})")
    n = code.n
    new_n = n + 3
    masks: list[int] = []
    for prefix in (1, 2, 4):
        masks.append(prefix)                       # zero pattern lifted
        for x in code.masks():
            masks.append(prefix | (x << 3))
    base = len(masks)
    candidates = range(1 << n) if extension_budget is None else range(min(1 << n, extension_budget))
    accepted = 0
    for a in candidates:
        cand = 7 | (a << 3)
        if not _creates_forbidden(masks, cand):
            masks.append(cand)
            accepted += 1
    assert accepted >= 1  # a = 0 always survives
    meta = f"busschbach-extended to n={new_n}: 3*({code.size}+1) base + {accepted} tail patterns"
    out = Codebook.from_masks(new_n, masks, metadata=meta)
    assert out.size >= 3 * (code.size + 1) + 1
    assert base == 3 * (code.size + 1)
    return out


def _creates_forbidden(masks: Sequence[int], p: int) -> bool:
    # {p,q,r} is forbidden iff no slot is covered exactly once
    for i in range(len(masks)):
        q = masks[i]
        pq_x = p ^ q
        pq_a = p & q
        for j in range(i + 1, len(masks)):
            r = masks[j]
            if (pq_x ^ r) & ~(pq_a & r) == 0:
                return True
    return False
