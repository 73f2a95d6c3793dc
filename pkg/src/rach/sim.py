"""Monte Carlo simulation of framed slotted access with a perfect-SIC receiver.

Users activate per frame under Poisson arrivals and transmit replicas along
their access patterns; the receiver repeatedly decodes singleton slots and
cancels the decoded users' replicas.  Every frame derives its RNG stream
solely from (seed, frame index), so results do not depend on execution order
or batching.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from numba import njit

from .patterns import Codebook, Pattern

U64 = np.uint64
_PHI = U64(0x9E3779B97F4A7C15)
_M1 = U64(0xBF58476D1CE4E5B9)
_M2 = U64(0x94D049BB133111EB)


@njit(cache=True, inline="always")
def _mix(z):
    z = (z ^ (z >> U64(30))) * _M1
    z = (z ^ (z >> U64(27))) * _M2
    return z ^ (z >> U64(31))


@njit(cache=True, inline="always")
def _stream_init(seed, frame):
    # counter-based: the frame stream depends only on (seed, frame index)
    return _mix(seed * _M2 + _mix(frame + _PHI))


@njit(cache=True, inline="always")
def _next_u64(state):
    state = state + _PHI
    return state, _mix(state)


@njit(cache=True, inline="always")
def _next_unit(state):
    state, u = _next_u64(state)
    return state, (u >> U64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def _poisson(state, mean):
    limit = math.exp(-mean)
    k = 0
    p = 1.0
    while True:
        state, u = _next_unit(state)
        p *= u
        if p <= limit:
            return state, k
        k += 1


@njit(cache=True)
def _frame_det(seed, frame, lam_n, n_users, out_idx, flags):
    """Activation draw for one deterministic-mode frame.

    Poisson count truncated at the population size, then that many distinct
    user indices sampled uniformly (Floyd).  Returns (count, truncated).
    """
    state = _stream_init(seed, frame)
    state, a = _poisson(state, lam_n)
    truncated = a > n_users
    if truncated:
        a = n_users
    cnt = 0
    for j in range(n_users - a, n_users):
        state, r = _next_u64(state)
        t = np.int64(r % U64(j + 1))
        if flags[t]:
            t = np.int64(j)
        flags[t] = True
        out_idx[cnt] = t
        cnt += 1
    for i in range(cnt):
        flags[out_idx[i]] = False
    return a, truncated


@njit(cache=True)
def _frame_rand(seed, frame, lam_n, n, k, out_slots):
    """Activation draw for one random-mode (CRDSA) frame.

    Each active user independently picks a uniform weight-k pattern, i.e. k
    distinct slots out of n; duplicate patterns across users are possible.
    """
    state = _stream_init(seed, frame)
    state, a = _poisson(state, lam_n)
    if a > out_slots.shape[0]:
        a = out_slots.shape[0]  # astronomically unlikely; scratch is sized generously
    for u in range(a):
        cnt = 0
        for j in range(n - k, n):
            state, r = _next_u64(state)
            t = np.int64(r % U64(j + 1))
            dup = False
            for c in range(cnt):
                if out_slots[u, c] == t:
                    dup = True
                    break
            if dup:
                t = np.int64(j)
            out_slots[u, cnt] = t
            cnt += 1
    return a


@njit(cache=True)
def _peel(a, slot_of, weight_of, idx, slot_count, slot_sum, stack, done):
    """SIC peeling for one frame; returns the number of decoded users.

    slot_of[idx[u]] lists user u's slots.  Scratch arrays are zeroed on exit
    so they can be reused across frames.
    """
    for u in range(a):
        g = idx[u]
        for c in range(weight_of[g]):
            s = slot_of[g, c]
            slot_count[s] += 1
            slot_sum[s] += u
    top = 0
    for u in range(a):
        g = idx[u]
        for c in range(weight_of[g]):
            s = slot_of[g, c]
            if slot_count[s] == 1:
                stack[top] = s
                top += 1
    decoded = 0
    while top > 0:
        top -= 1
        s = stack[top]
        if slot_count[s] != 1:
            continue
        u = slot_sum[s]
        if done[u]:
            continue
        done[u] = 1
        decoded += 1
        g = idx[u]
        for c in range(weight_of[g]):
            s2 = slot_of[g, c]
            slot_count[s2] -= 1
            slot_sum[s2] -= u
            if slot_count[s2] == 1:
                stack[top] = s2
                top += 1
    for u in range(a):
        g = idx[u]
        done[u] = 0
        for c in range(weight_of[g]):
            s = slot_of[g, c]
            slot_count[s] = 0
            slot_sum[s] = 0
    return decoded


@njit(cache=True)
def _run_det(seed, trials, lam_n, slot_of, weight_of, n):
    n_users = slot_of.shape[0]
    idx = np.empty(n_users, np.int64)
    flags = np.zeros(n_users, np.uint8)
    done = np.zeros(n_users, np.uint8)
    slot_count = np.zeros(n, np.int64)
    slot_sum = np.zeros(n, np.int64)
    stack = np.empty(2 * n_users * slot_of.shape[1] + n, np.int64)
    frames_at = np.zeros(n_users + 1, np.int64)
    lost_at = np.zeros(n_users + 1, np.int64)
    lost_sq = 0
    truncated = 0
    for f in range(trials):
        a, trunc = _frame_det(seed, U64(f), lam_n, n_users, idx, flags)
        if trunc:
            truncated += 1
        frames_at[a] += 1
        if a == 0:
            continue
        decoded = _peel(a, slot_of, weight_of, idx, slot_count, slot_sum, stack, done)
        lost = a - decoded
        lost_at[a] += lost
        lost_sq += lost * lost
    return frames_at, lost_at, lost_sq, truncated


@njit(cache=True)
def _run_rand(seed, trials, lam_n, n, k, max_a):
    slots = np.empty((max_a, k), np.int64)
    weight_of = np.full(max_a, k, np.int64)
    idx = np.arange(max_a)
    done = np.zeros(max_a, np.uint8)
    slot_count = np.zeros(n, np.int64)
    slot_sum = np.zeros(n, np.int64)
    stack = np.empty(2 * max_a * k + n, np.int64)
    frames_at = np.zeros(max_a + 1, np.int64)
    lost_at = np.zeros(max_a + 1, np.int64)
    lost_sq = 0
    for f in range(trials):
        a = _frame_rand(seed, U64(f), lam_n, n, k, slots)
        frames_at[a] += 1
        if a == 0:
            continue
        decoded = _peel(a, slots, weight_of, idx, slot_count, slot_sum, stack, done)
        lost = a - decoded
        lost_at[a] += lost
        lost_sq += lost * lost
    return frames_at, lost_at, lost_sq


@dataclass(frozen=True)
class SimConfig:
    """One Monte Carlo experiment: a code (or weight profile), an access
    intensity, a trial count and a seed."""
    mode: str                            # "deterministic" | "random"
    lam: float                           # expected active users per slot
    trials: int
    seed: int
    code: Optional[Codebook] = None      # deterministic mode
    n: Optional[int] = None              # random mode frame size
    k: Optional[int] = None              # random mode repetition weight

    def __post_init__(self):
        if self.mode not in ("deterministic", "random"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.lam <= 0:
            raise ValueError("access intensity must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")
        if self.mode == "deterministic":
            if self.code is None:
                raise ValueError("deterministic mode needs a codebook")
        else:
            if self.n is None or self.k is None:
                raise ValueError("random mode needs n and k")
            if not 1 <= self.k <= self.n:
                raise ValueError(f"weight k={self.k} out of range 1..{self.n}")

    @property
    def frame_size(self) -> int:
        return self.code.n if self.mode == "deterministic" else self.n


@dataclass(frozen=True)
class SimResult:
    per: Optional[float]                 # None when no packet was ever transmitted
    ci95: Optional[tuple[float, float]]  # frame-clustered (ratio estimator) interval
    frames: int
    packets: int
    lost: int
    per_by_activation: dict[int, float]  # conditional PER per observed activation count
    truncated_frames: int = 0


def wilson_interval(losses: int, total: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if total == 0:
        raise ValueError("no observations")
    p = losses / total
    denom = 1 + z * z / total
    centre = (p + z * z / (2 * total)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / total + z * z / (4 * total * total))
    lo, hi = centre - half, centre + half
    if losses == 0:
        lo = 0.0  # exact at the boundary; the formula leaves rounding dust
    if losses == total:
        hi = 1.0
    return max(0.0, lo), min(1.0, hi)


def ratio_interval(
    lost: int,
    packets: int,
    lost_sq: int,
    cross: int,
    packets_sq: int,
    z: float = 1.959963984540054,
) -> tuple[float, float]:
    """Frame-clustered 95% CI for the PER via the ratio estimator.

    Packets within a frame fail together, so a binomial interval over pooled
    packets is too narrow.  With per-frame losses l_i and packet counts k_i,
    PER = sum l_i / sum k_i and Var ~= sum (l_i - PER k_i)^2 / (sum k_i)^2.
    The arguments are the sufficient sums: sum l_i, sum k_i, sum l_i^2,
    sum l_i k_i and sum k_i^2.  Falls back to Wilson at the boundaries, where
    the empirical variance vanishes.
    """
    if packets == 0:
        raise ValueError("no observations")
    if lost == 0 or lost == packets:
        return wilson_interval(lost, packets, z)
    r = lost / packets
    var = max(0.0, lost_sq - 2.0 * r * cross + r * r * packets_sq) / (packets * packets)
    half = z * math.sqrt(var)
    return max(0.0, r - half), min(1.0, r + half)


def _codebook_slot_arrays(code: Codebook) -> tuple[np.ndarray, np.ndarray]:
    kmax = max(p.weight for p in code.patterns)
    slot_of = np.zeros((code.size, kmax), np.int64)
    weight_of = np.zeros(code.size, np.int64)
    for i, p in enumerate(code.patterns):
        sup = p.support()
        weight_of[i] = len(sup)
        slot_of[i, : len(sup)] = sup
    return slot_of, weight_of


def _rand_max_a(lam_n: float) -> int:
    return int(lam_n + 12.0 * math.sqrt(lam_n) + 64.0)


def draw_activations(config: SimConfig, frame_index: int) -> list[Pattern]:
    """The multiset of patterns transmitted in one frame.

    Uses the same per-frame counter-based stream as simulate_per, so frame f
    here reproduces frame f of the batch run exactly.
    """
    seed = U64(config.seed)
    lam_n = config.lam * config.frame_size
    if config.mode == "deterministic":
        code = config.code
        idx = np.empty(code.size, np.int64)
        flags = np.zeros(code.size, np.uint8)
        a, _ = _frame_det(seed, U64(frame_index), lam_n, code.size, idx, flags)
        return [code.patterns[i] for i in idx[:a]]
    max_a = _rand_max_a(lam_n)
    slots = np.empty((max_a, config.k), np.int64)
    a = _frame_rand(seed, U64(frame_index), lam_n, config.n, config.k, slots)
    out = []
    for u in range(a):
        m = 0
        for c in range(config.k):
            m |= 1 << int(slots[u, c])
        out.append(Pattern(m, config.n))
    return out


def sic_decode(patterns: Sequence[Pattern], slot_order: Optional[Sequence[int]] = None) -> set[int]:
    """Reference SIC decoder: returns the indices of decoded patterns.

    slot_order fixes the order in which singleton slots are looked for; the
    decoded set is the same for every order (peeling confluence).
    """
    if not patterns:
        return set()
    n = patterns[0].n
    if any(p.n != n for p in patterns):
        raise ValueError("patterns have mixed frame sizes")
    order = list(slot_order) if slot_order is not None else list(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError("slot_order must be a permutation of all slots")
    active = {i: p.mask for i, p in enumerate(patterns)}
    decoded: set[int] = set()
    progress = True
    while progress:
        progress = False
        for s in order:
            bit = 1 << s
            owners = [i for i, m in active.items() if m & bit]
            if len(owners) == 1:
                i = owners[0]
                decoded.add(i)
                del active[i]
                progress = True
    return decoded


def simulate_per(config: SimConfig) -> SimResult:
    """Run the configured number of independent frames and estimate the PER."""
    lam_n = config.lam * config.frame_size
    truncated = 0
    if config.mode == "deterministic":
        slot_of, weight_of = _codebook_slot_arrays(config.code)
        frames_at, lost_at, lost_sq, truncated = _run_det(
            U64(config.seed), config.trials, lam_n, slot_of, weight_of, config.frame_size
        )
    else:
        max_a = _rand_max_a(lam_n)
        frames_at, lost_at, lost_sq = _run_rand(
            U64(config.seed), config.trials, lam_n, config.n, config.k, max_a
        )
    counts = np.arange(len(frames_at))
    packets = int(np.sum(counts * frames_at))
    packets_sq = int(np.sum(counts * counts * frames_at))
    cross = int(np.sum(counts * lost_at))
    lost = int(np.sum(lost_at))
    per_by_a = {
        int(a): float(lost_at[a]) / (int(a) * int(frames_at[a]))
        for a in range(1, len(frames_at))
        if frames_at[a] > 0
    }
    if packets == 0:
        return SimResult(None, None, config.trials, 0, 0, {}, truncated)
    per = lost / packets
    ci = ratio_interval(lost, packets, int(lost_sq), cross, packets_sq)
    return SimResult(per, ci, config.trials, packets, lost, per_by_a, truncated)
