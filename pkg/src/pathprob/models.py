"""Model types: labelled CTMCs, deterministic timed automata, validation.

All probabilities, rates and guard data are exact rationals
(`fractions.Fraction`); floating point enters only in the numerical solver
and in error-bound reporting.  Validation never repairs a model silently:
it returns itemized diagnostics and leaves repair to explicit calls.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

from . import regions

Rational = Fraction


def rational(value) -> Fraction:
    """Parse an exact rational from a string ("1/3", "0.25"), int or Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot interpret {value!r} as an exact rational")


class ModelIntegrityError(RuntimeError):
    """An operation hit a state that a validated model cannot produce."""


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "valid"
        return "\n".join(self.violations)


# ---------------------------------------------------------------------------
# CTMC


@dataclass(frozen=True)
class Ctmc:
    """Finite labelled continuous-time Markov chain.

    ``transition[i][j]`` is the jump probability from state i to state j,
    ``exit_rates[i]`` the exponential sojourn rate and ``labeling[i]`` the
    observable label of state i.  Rows must sum to one and rates must be
    positive for the chain to validate; construction itself only checks
    shapes so that repairable inputs (for example deadlock states with rate
    zero) can be represented.
    """

    states: Tuple[str, ...]
    transition: Tuple[Tuple[Fraction, ...], ...]
    exit_rates: Tuple[Fraction, ...]
    labeling: Tuple[str, ...]

    def __post_init__(self):
        n = len(self.states)
        if len(set(self.states)) != n:
            raise ValueError("duplicate state names")
        if len(self.transition) != n or any(len(r) != n for r in self.transition):
            raise ValueError("transition matrix shape does not match states")
        if len(self.exit_rates) != n or len(self.labeling) != n:
            raise ValueError("rates/labeling length does not match states")

    @property
    def labels(self) -> FrozenSet[str]:
        return frozenset(self.labeling)

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise KeyError(f"unknown state {name!r}") from None


def validate_ctmc(chain: Ctmc) -> ValidationReport:
    """Check stochasticity of every row and positivity of every rate."""
    problems: List[str] = []
    for i, name in enumerate(chain.states):
        row = chain.transition[i]
        for j, p in enumerate(row):
            if p < 0 or p > 1:
                problems.append(
                    f"P({name},{chain.states[j]}) = {p} is outside [0,1]"
                )
        total = sum(row)
        if total != 1:
            problems.append(f"row {name} sums to {total}")
        if chain.exit_rates[i] <= 0:
            problems.append(f"state {name}: rate must be positive")
    return ValidationReport(tuple(problems))


def deadlock_repair(chain: Ctmc, rate: Fraction = Fraction(1)) -> Ctmc:
    """Give every zero-rate state the configured rate and a self-loop.

    States with positive rates are untouched; if nothing needs repair the
    input is returned as is.
    """
    if rate <= 0:
        raise ValueError("repair rate must be positive")
    if all(r != 0 for r in chain.exit_rates):
        return chain
    n = len(chain.states)
    rates = list(chain.exit_rates)
    rows = [list(r) for r in chain.transition]
    for i in range(n):
        if rates[i] == 0:
            rates[i] = rate
            rows[i] = [Fraction(0)] * n
            rows[i][i] = Fraction(1)
    return Ctmc(
        states=chain.states,
        transition=tuple(tuple(r) for r in rows),
        exit_rates=tuple(rates),
        labeling=chain.labeling,
    )


# ---------------------------------------------------------------------------
# Guards and DTA


class Constraint(NamedTuple):
    clock: int
    op: str  # one of < <= > >=
    bound: int


@dataclass(frozen=True)
class Guard:
    """Conjunction of single-clock bounds against natural-number constants."""

    terms: Tuple[Constraint, ...] = ()

    def __post_init__(self):
        for t in self.terms:
            if t.op not in ("<", "<=", ">", ">="):
                raise ValueError(f"unknown relation {t.op!r}")
            if t.bound < 0 or t.bound != int(t.bound):
                raise ValueError(f"guard constant {t.bound!r} must be a natural")

    def render(self, clock_names: Sequence[str]) -> str:
        if not self.terms:
            return "true"
        return " & ".join(
            f"{clock_names[t.clock]}{t.op}{t.bound}" for t in self.terms
        )


class Rule(NamedTuple):
    source: str
    signature: str
    guard: Guard
    resets: FrozenSet[int]
    target: str


@dataclass(frozen=True)
class Dta:
    """Deterministic timed automaton over single-clock conjunctive guards.

    ``ceilings[i]`` is the largest constant any guard puts on clock i (zero
    when the clock is unconstrained); values above it are interchangeable
    for every guard.  Determinism and totality are not enforced here, they
    are decided exactly by :func:`validate_dta`.
    """

    locations: Tuple[str, ...]
    final: FrozenSet[str]
    clocks: Tuple[str, ...]
    rules: Tuple[Rule, ...]
    alphabet: FrozenSet[str]
    ceilings: Tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if len(set(self.locations)) != len(self.locations):
            raise ValueError("duplicate location names")
        if len(set(self.clocks)) != len(self.clocks):
            raise ValueError("duplicate clock names")
        unknown = self.final - set(self.locations)
        if unknown:
            raise ValueError(f"final locations {sorted(unknown)} not declared")
        ceilings = [0] * len(self.clocks)
        for rule in self.rules:
            for term in rule.guard.terms:
                if not 0 <= term.clock < len(self.clocks):
                    raise ValueError(
                        f"rule {rule.source}--{rule.signature}--> references "
                        f"clock #{term.clock}"
                    )
                ceilings[term.clock] = max(ceilings[term.clock], term.bound)
            for c in rule.resets:
                if not 0 <= c < len(self.clocks):
                    raise ValueError(f"reset of unknown clock #{c}")
        object.__setattr__(self, "ceilings", tuple(ceilings))

    @property
    def t_max(self) -> int:
        return max(self.ceilings, default=0)

    def clock_index(self, name: str) -> int:
        try:
            return self.clocks.index(name)
        except ValueError:
            raise KeyError(f"unknown clock {name!r}") from None

    def rules_from(self, location: str, signature: str) -> Tuple[Rule, ...]:
        return tuple(
            r
            for r in self.rules
            if r.source == location and r.signature == signature
        )

    def zero_valuation(self) -> regions.ClockValuation:
        return tuple(Fraction(0) for _ in self.clocks)


# interval with rational endpoints; upper is None for +infinity
class _Interval(NamedTuple):
    lo: Fraction
    lo_open: bool
    hi: Optional[Fraction]
    hi_open: bool

    def empty(self) -> bool:
        if self.hi is None:
            return False
        if self.lo < self.hi:
            return False
        return self.lo > self.hi or self.lo_open or self.hi_open

    def pick(self) -> Fraction:
        if self.hi is None:
            return self.lo + 1 if self.lo_open else self.lo
        if self.lo == self.hi:
            return self.lo
        return (self.lo + self.hi) / 2


def _guard_box(guard: Guard, n_clocks: int) -> List[_Interval]:
    box = [_Interval(Fraction(0), False, None, False) for _ in range(n_clocks)]
    for term in guard.terms:
        iv = box[term.clock]
        b = Fraction(term.bound)
        if term.op == "<":
            if iv.hi is None or b < iv.hi or (b == iv.hi and not iv.hi_open):
                iv = iv._replace(hi=b, hi_open=True)
        elif term.op == "<=":
            if iv.hi is None or b < iv.hi:
                iv = iv._replace(hi=b, hi_open=False)
        elif term.op == ">":
            if b > iv.lo or (b == iv.lo and not iv.lo_open):
                iv = iv._replace(lo=b, lo_open=True)
        else:  # >=
            if b > iv.lo:
                iv = iv._replace(lo=b, lo_open=False)
        box[term.clock] = iv
    return box


def guard_overlap_witness(
    g1: Guard, g2: Guard, n_clocks: int
) -> Optional[regions.ClockValuation]:
    """Exact witness valuation in the intersection of two guards, or None.

    Guards are conjunctions of single-clock bounds, so each feasible set is
    a box and the intersection test reduces to per-clock interval
    intersection.
    """
    witness = []
    for iv1, iv2 in zip(_guard_box(g1, n_clocks), _guard_box(g2, n_clocks)):
        lo, lo_open = max(
            (iv1.lo, iv1.lo_open), (iv2.lo, iv2.lo_open)
        )
        if iv1.hi is None:
            hi, hi_open = iv2.hi, iv2.hi_open
        elif iv2.hi is None:
            hi, hi_open = iv1.hi, iv1.hi_open
        else:
            hi, hi_open = min((iv1.hi, not iv1.hi_open), (iv2.hi, not iv2.hi_open))
            hi_open = not hi_open
        merged = _Interval(lo, lo_open, hi, hi_open)
        if merged.empty():
            return None
        witness.append(merged.pick())
    return tuple(witness)


def validate_dta(dta: Dta) -> ValidationReport:
    """Decide determinism and totality exactly.

    Determinism: distinct rules sharing (location, signature) must have
    disjoint guards; overlaps are reported with a witness valuation.
    Totality: for every (location, signature) the guards must cover every
    region; guard satisfaction is region-invariant, so checking one
    representative per region (including the above-ceiling faces) is a
    complete cover test.
    """
    problems: List[str] = []
    pairs = {(r.source, r.signature) for r in dta.rules}
    for rule in dta.rules:
        if rule.source not in dta.locations:
            problems.append(f"rule from unknown location {rule.source!r}")
        if rule.target not in dta.locations:
            problems.append(f"rule to unknown location {rule.target!r}")
        if rule.signature not in dta.alphabet:
            problems.append(f"rule signature {rule.signature!r} not in alphabet")
    if problems:
        return ValidationReport(tuple(problems))

    for q, a in sorted(pairs):
        group = dta.rules_from(q, a)
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                r1, r2 = group[i], group[j]
                if (r1.guard, r1.resets, r1.target) == (
                    r2.guard,
                    r2.resets,
                    r2.target,
                ):
                    continue
                w = guard_overlap_witness(r1.guard, r2.guard, len(dta.clocks))
                if w is not None:
                    rendered = ", ".join(
                        f"{n}={v}" for n, v in zip(dta.clocks, w)
                    )
                    problems.append(
                        f"rules ({q},{a},{r1.guard.render(dta.clocks)}) and "
                        f"({q},{a},{r2.guard.render(dta.clocks)}) overlap, "
                        f"witness {rendered}"
                    )

    codes = regions.enumerate_region_codes(dta.ceilings)
    representatives = [
        regions.region_representative(c, dta.ceilings) for c in codes
    ]
    for q in dta.locations:
        for a in sorted(dta.alphabet):
            group = dta.rules_from(q, a)
            for rep in representatives:
                if not any(regions.guard_sat(rep, r.guard) for r in group):
                    rendered = ", ".join(
                        f"{n}={v}" for n, v in zip(dta.clocks, rep)
                    )
                    problems.append(
                        f"no rule enabled for ({q},{a}) at {rendered}"
                    )
    return ValidationReport(tuple(problems))


# ---------------------------------------------------------------------------
# Paired model constants


@dataclass(frozen=True)
class ModelConstants:
    lambda_max: Fraction
    lambda_min: Fraction
    p_min: Fraction
    t_max: int
    clock_count: int

    def __post_init__(self):
        if self.lambda_min <= 0:
            raise ValueError("rates must be positive")
        if not 0 < self.p_min <= 1:
            raise ValueError("p_min must lie in (0,1]")
        if self.t_max < 0:
            raise ValueError("t_max must be non-negative")


def pairing_report(chain: Ctmc, dta: Dta) -> ValidationReport:
    """The alphabet of the automaton must equal the label set of the chain."""
    if dta.alphabet != chain.labels:
        return ValidationReport(
            (
                f"alphabet {sorted(dta.alphabet)} differs from CTMC labels "
                f"{sorted(chain.labels)}",
            )
        )
    return ValidationReport()


def model_constants(chain: Ctmc, dta: Dta) -> ModelConstants:
    """Exact extremal rates, minimum positive jump probability and ceilings."""
    positive = [p for row in chain.transition for p in row if p > 0]
    if not positive:
        raise ModelIntegrityError("transition matrix has no positive entry")
    return ModelConstants(
        lambda_max=max(chain.exit_rates),
        lambda_min=min(chain.exit_rates),
        p_min=min(positive),
        t_max=dta.t_max,
        clock_count=len(dta.clocks),
    )
