"""Exact clock-valuation algebra: regions, equivalences and representatives.

Clock valuations are plain tuples of numbers indexed by the automaton's
clock order.  All region logic is exact when the entries are
`fractions.Fraction`; the same functions also accept floats (used by the
Monte Carlo sampler, where boundary events have probability zero).

A region is an equivalence class of valuations that agree, per clock, on
whether the value exceeds its ceiling, on the integral part and on whether
the fractional part is zero, and globally on the ordering of the
fractional parts of all clocks at or below their ceilings.  Regions are
encoded canonically by :class:`RegionCode` so that code equality coincides
with the equivalence.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence, Tuple

ClockValuation = Tuple[Fraction, ...]

HALF = Fraction(1, 2)


class UnknownClockError(ValueError):
    """A guard references a clock index outside the valuation."""


def int_part(value):
    return math.floor(value)


def frac_part(value):
    return value - math.floor(value)


# ---------------------------------------------------------------------------
# Valuation operations


def delay(eta: Sequence, t) -> tuple:
    """Advance every clock by ``t`` (t >= 0)."""
    if t < 0:
        raise ValueError(f"negative delay {t}")
    return tuple(v + t for v in eta)


def backtrack(eta: Sequence, t) -> tuple:
    """Rewind every clock by ``t``; defined only when all entries are >= t."""
    if any(v < t for v in eta):
        raise ValueError(f"cannot backtrack {t}: some clock is smaller")
    return tuple(v - t for v in eta)


def reset(eta: Sequence, clocks: Iterable[int]) -> tuple:
    """Set the given clock indices to zero, keep the rest."""
    zeroed = set(clocks)
    return tuple(0 * v if i in zeroed else v for i, v in enumerate(eta))


def clamp_delay(eta: Sequence, t, ceilings: Sequence[int]) -> tuple:
    """Delay by ``t`` but saturate each clock at its ceiling.

    The saturated delay keeps grid valuations inside the box spanned by the
    ceilings; acceptance probabilities are unchanged because values above a
    ceiling are indistinguishable to every guard.
    """
    if t < 0:
        raise ValueError(f"negative delay {t}")
    return tuple(min(c, v + t) for v, c in zip(eta, ceilings))


def guard_sat(eta: Sequence, guard) -> bool:
    """Exact satisfaction of a conjunctive guard at ``eta``."""
    for term in guard.terms:
        if term.clock >= len(eta):
            raise UnknownClockError(
                f"guard constrains clock #{term.clock} but the valuation has "
                f"{len(eta)} clocks"
            )
        v = eta[term.clock]
        op = term.op
        if op == "<":
            ok = v < term.bound
        elif op == "<=":
            ok = v <= term.bound
        elif op == ">":
            ok = v > term.bound
        elif op == ">=":
            ok = v >= term.bound
        else:
            raise ValueError(f"unknown relation {op!r}")
        if not ok:
            return False
    return True


# ---------------------------------------------------------------------------
# Region encoding


class RegionCode(NamedTuple):
    """Canonical region encoding.

    ``clocks`` holds one entry per clock: ``None`` when the clock exceeds
    its ceiling, otherwise ``(integral_part, frac_is_zero)``.  ``frac_order``
    is the ordered partition (by increasing fractional part, ties grouped,
    members sorted) of the clocks at or below their ceilings; when some of
    them have fractional part zero they form the first block.
    """

    clocks: tuple
    frac_order: tuple

    def is_marginal(self) -> bool:
        return any(c is not None and c[1] for c in self.clocks)


def region_of(eta: Sequence, ceilings: Sequence[int]) -> RegionCode:
    """Canonical code of the region containing ``eta``."""
    per_clock = []
    below = []
    for i, v in enumerate(eta):
        if v > ceilings[i]:
            per_clock.append(None)
        else:
            f = frac_part(v)
            per_clock.append((int_part(v), f == 0))
            below.append((f, i))
    below.sort(key=lambda p: p[0])
    blocks = []
    for _, group in itertools.groupby(below, key=lambda p: p[0]):
        blocks.append(tuple(sorted(i for _, i in group)))
    return RegionCode(tuple(per_clock), tuple(blocks))


def is_marginal(code: RegionCode) -> bool:
    """True iff some clock at or below its ceiling has fractional part zero."""
    return code.is_marginal()


def equiv_g(a: Sequence, b: Sequence, ceilings: Sequence[int]) -> bool:
    """Guard equivalence: same above-ceiling clocks, and matching integral
    parts and zero-fraction flags on the clocks at or below the ceiling."""
    for i, c in enumerate(ceilings):
        above_a, above_b = a[i] > c, b[i] > c
        if above_a != above_b:
            return False
        if not above_a:
            if int_part(a[i]) != int_part(b[i]):
                return False
            if (frac_part(a[i]) > 0) != (frac_part(b[i]) > 0):
                return False
    return True


def equivalent(a: Sequence, b: Sequence, ceilings: Sequence[int]) -> bool:
    """The definitional region predicate: guard equivalence plus agreement
    of the pairwise fractional-part order on clocks at or below ceilings.

    Kept separate from :func:`region_of` so that tests can confront the
    canonical encoding with the definition it is supposed to capture.
    """
    if not equiv_g(a, b, ceilings):
        return False
    below = [i for i, c in enumerate(ceilings) if a[i] <= c and b[i] <= c]
    for x, y in itertools.combinations(below, 2):
        fax, fay = frac_part(a[x]), frac_part(a[y])
        fbx, fby = frac_part(b[x]), frac_part(b[y])
        if (fax < fay) != (fbx < fby) or (fax == fay) != (fbx == fby):
            return False
    return True


def equiv_b(a: Sequence, b: Sequence, ceilings: Sequence[int]) -> bool:
    """Bound equivalence: per clock, equal values or both above the ceiling."""
    return all(
        (a[i] > c and b[i] > c) or a[i] == b[i] for i, c in enumerate(ceilings)
    )


# ---------------------------------------------------------------------------
# Representatives


def frac_set(eta: Sequence, ceilings: Sequence[int]) -> tuple:
    """The fractional landmark set of ``eta``: {0, 1} together with the
    fractional parts of all clocks at or below their ceiling, sorted."""
    values = {Fraction(0), Fraction(1)}
    for v, c in zip(eta, ceilings):
        if v <= c:
            values.add(frac_part(v))
    return tuple(sorted(values))


def plus_representative(eta: Sequence, ceilings: Sequence[int]) -> tuple:
    """A representative of the region entered immediately after ``eta``.

    Any delay inside ``(0, t1)`` with ``t1 = 1 - max fractional part`` lands
    in the same region; the midpoint ``t1/2`` is used so the function is
    deterministic.  When every clock is above its ceiling any positive delay
    works and ``1/2`` is used.
    """
    fracs = [frac_part(v) for v, c in zip(eta, ceilings) if v <= c]
    t1 = 1 - max(fracs) if fracs else 1
    return delay(eta, Fraction(t1) * HALF)


def minus_representative(eta: Sequence, ceilings: Sequence[int]) -> tuple:
    """A representative of the region left immediately before ``eta``.

    Requires every clock to be positive.  The admissible window ``(0, t2)``
    follows the case analysis on the smallest fractional part: the distance
    to the previous landmark, also capped by how far each above-ceiling
    clock can fall before meeting its ceiling.
    """
    if any(v <= 0 for v in eta):
        raise ValueError("minus representative requires every clock > 0")
    over = [v - c for v, c in zip(eta, ceilings) if v > c]
    fracs = sorted({frac_part(v) for v, c in zip(eta, ceilings) if v <= c})
    if not fracs:
        t2 = min(over)
    elif fracs[0] > 0:
        t2 = min([fracs[0]] + over)
    elif len(fracs) == 1:
        t2 = min([Fraction(1)] + over)
    else:
        t2 = min([fracs[1]] + over)
    return backtrack(eta, Fraction(t2) * HALF)


# ---------------------------------------------------------------------------
# Delay intervals and region enumeration


def delay_intervals(
    eta: Sequence, ceilings: Sequence[int], t_max: int
) -> list:
    """Open delay intervals on which the region of ``eta + t`` is constant.

    Returns ``(lo, hi)`` pairs partitioning ``(0, t_max)`` up to finitely
    many boundary points, followed by ``(t_max, None)`` for the unbounded
    tail where every clock sits above its ceiling.
    """
    offsets = sorted({1 - w for w in frac_set(eta, ceilings)})
    intervals = []
    for n in range(t_max):
        for lo, hi in zip(offsets, offsets[1:]):
            intervals.append((n + lo, n + hi))
    intervals.append((Fraction(t_max), None))
    return intervals


def delay_representatives(
    eta: Sequence, ceilings: Sequence[int], t_max: int
) -> list:
    """One positive delay per interval of :func:`delay_intervals`.

    Midpoints for the bounded intervals; the unbounded tail is represented
    half a unit past its left end.
    """
    reps = []
    for lo, hi in delay_intervals(eta, ceilings, t_max):
        reps.append(lo + HALF if hi is None else (lo + hi) * HALF)
    return reps


def _ordered_set_partitions(items: tuple) -> Iterator[tuple]:
    """All ordered partitions (sequences of disjoint non-empty blocks)."""
    if not items:
        yield ()
        return
    n = len(items)
    for first_size in range(1, n + 1):
        for combo in itertools.combinations(items, first_size):
            rest = tuple(i for i in items if i not in combo)
            for tail in _ordered_set_partitions(rest):
                yield (tuple(sorted(combo)),) + tail


def enumerate_region_codes(ceilings: Sequence[int]) -> list:
    """Every region over the given ceilings, in a stable order.

    The count is finite: per clock either "above ceiling" or an integral
    part with a zero-fraction flag, combined with every ordered partition
    of the non-integer clocks by fractional part.
    """
    per_clock_options = []
    for c in ceilings:
        options = [None]
        for k in range(c + 1):
            options.append((k, True))
            if k < c:
                options.append((k, False))
        per_clock_options.append(options)
    codes = []
    for assignment in itertools.product(*per_clock_options):
        zero_block = tuple(
            sorted(i for i, o in enumerate(assignment) if o is not None and o[1])
        )
        fractional = tuple(
            i for i, o in enumerate(assignment) if o is not None and not o[1]
        )
        for blocks in _ordered_set_partitions(fractional):
            order = ((zero_block,) if zero_block else ()) + blocks
            codes.append(RegionCode(tuple(assignment), order))
    return codes


def region_representative(
    code: RegionCode, ceilings: Sequence[int]
) -> ClockValuation:
    """A canonical exact valuation whose region is ``code``.

    Above-ceiling clocks sit half a unit past the ceiling; fractional
    blocks receive equally spaced fractions below one.
    """
    blocks = code.frac_order
    block_fracs = {}
    nonzero_blocks = [b for b in blocks if any(not code.clocks[i][1] for i in b)]
    denominator = len(nonzero_blocks) + 1
    rank = 1
    for block in blocks:
        if all(code.clocks[i][1] for i in block):
            for i in block:
                block_fracs[i] = Fraction(0)
        else:
            for i in block:
                block_fracs[i] = Fraction(rank, denominator)
            rank += 1
    values = []
    for i, opt in enumerate(code.clocks):
        if opt is None:
            values.append(Fraction(ceilings[i]) + HALF)
        else:
            values.append(Fraction(opt[0]) + block_fracs[i])
    return tuple(values)


def sample_in_region(
    code: RegionCode, ceilings: Sequence[int], rng
) -> ClockValuation:
    """A random exact valuation inside the region ``code``.

    Fraction blocks get strictly increasing random rationals in (0, 1);
    above-ceiling clocks get a random positive offset past the ceiling.
    """
    blocks = code.frac_order
    nonzero_blocks = [b for b in blocks if any(not code.clocks[i][1] for i in b)]
    k = len(nonzero_blocks)
    draws = sorted(
        {Fraction(int(rng.integers(1, 997)), 997) for _ in range(k)}
    )
    while len(draws) < k:
        draws = sorted(set(draws) | {Fraction(int(rng.integers(1, 997)), 997)})
    block_fracs = {}
    rank = 0
    for block in blocks:
        zero = all(code.clocks[i][1] for i in block)
        for i in block:
            block_fracs[i] = Fraction(0) if zero else draws[rank]
        if not zero:
            rank += 1
    values = []
    for i, opt in enumerate(code.clocks):
        if opt is None:
            values.append(
                Fraction(ceilings[i])
                + Fraction(int(rng.integers(1, 5000)), 1000)
            )
        else:
            values.append(Fraction(opt[0]) + block_fracs[i])
    return tuple(values)
