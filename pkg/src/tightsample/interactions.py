"""Engagement-pattern algebra and the frequency-to-weight calibration pipeline.

An interaction pattern is the presence/absence bit vector of the engagement
types (like, retweet, reply, quote) one user showed toward one tweet. The
calibration pipeline counts patterns under a scheme, normalizes frequencies
three ways (globally, per source, per target), balances the three views by
least squares, and inverts the balanced frequencies into importance weights.
"""

from __future__ import annotations

import csv
import enum
import warnings
from collections import Counter
from dataclasses import dataclass
from importlib import resources

from .util import ConfigError, DataError, round_half_up

TYPES = ("like", "retweet", "reply", "quote")

# Bit layout renders patterns as (like, retweet, reply, quote), so
# "retweet and quote" prints as 0101.
_TYPE_BIT = {"like": 0b1000, "retweet": 0b0100, "reply": 0b0010, "quote": 0b0001}

_AF_LIKE, _AF_REPLY, _AF_RTQ = 0b100, 0b010, 0b001

#: Pseudo-pattern for edges of unlabeled graphs; every weight table maps it to 1.
PLAIN_EDGE = 0

FULL_PATTERNS = tuple(range(1, 16))
AF_PATTERNS = tuple(range(1, 8))


class Scheme(enum.Enum):
    """Pattern-counting scheme.

    DISTINCT attributes an event to exactly its observed pattern; NESTED to
    every bitwise sub-pattern of it; AF first merges retweet and quote into
    one audience-facing type (3-bit patterns) and then counts nested.
    AF_DISTINCT is the exact-pattern variant on the collapsed space.
    """

    DISTINCT = "distinct"
    NESTED = "nested"
    AF = "af"
    AF_DISTINCT = "af-distinct"

    @property
    def collapsed(self) -> bool:
        return self in (Scheme.AF, Scheme.AF_DISTINCT)

    @property
    def width(self) -> int:
        return 3 if self.collapsed else 4

    @property
    def patterns(self) -> tuple[int, ...]:
        return AF_PATTERNS if self.collapsed else FULL_PATTERNS

    @classmethod
    def parse(cls, tag: str) -> "Scheme":
        normalized = tag.strip().lower().replace("_", "-")
        for scheme in cls:
            if scheme.value == normalized:
                return scheme
        raise ConfigError(f"unknown counting scheme {tag!r}; "
                          f"expected one of {[s.value for s in cls]}")


def pattern_of(events) -> int:
    """Bit pattern of an event set for one (tweet, interactor) pair.

    Duplicate instances of a type collapse to one bit; only presence counts.
    """
    bits = 0
    empty = True
    for ev in events:
        empty = False
        try:
            bits |= _TYPE_BIT[ev]
        except KeyError:
            raise DataError(f"unknown interaction type {ev!r}") from None
    if empty:
        raise DataError("no engagement: empty event set has no pattern")
    return bits


def pattern_str(pattern: int, width: int = 4) -> str:
    return format(pattern, f"0{width}b")


def parse_pattern(text: str) -> int:
    text = text.strip()
    if len(text) not in (3, 4) or set(text) - {"0", "1"}:
        raise DataError(f"malformed pattern {text!r}")
    value = int(text, 2)
    if value == 0:
        raise DataError("pattern 0 is unrepresentable (no engagement)")
    return value


def collapse_af(pattern: int) -> int:
    """Collapse a 4-bit pattern to 3 bits: (like, reply, retweet-or-quote)."""
    out = 0
    if pattern & _TYPE_BIT["like"]:
        out |= _AF_LIKE
    if pattern & _TYPE_BIT["reply"]:
        out |= _AF_REPLY
    if pattern & (_TYPE_BIT["retweet"] | _TYPE_BIT["quote"]):
        out |= _AF_RTQ
    return out


def subpatterns(pattern: int):
    """All non-zero bitwise subsets of ``pattern``, ascending."""
    subs = []
    s = pattern
    while s:
        subs.append(s)
        s = (s - 1) & pattern
    return sorted(subs)


@dataclass
class PatternCounts:
    """Per-source, per-target, and global pattern counts for one corpus.

    ``raw_events`` and the ``raw_by_*`` denominators count each
    (tweet, interactor) event exactly once regardless of scheme; only the
    numerator counters depend on the counting scheme.
    """

    scheme: Scheme
    global_: Counter
    by_source: dict
    by_target: dict
    raw_events: int
    raw_by_source: dict
    raw_by_target: dict


def count_events(records, scheme: Scheme) -> PatternCounts:
    """Count (author, interactor, pattern) records under a scheme.

    Records must already be deduplicated per (tweet, interactor); each record
    is one raw event.
    """
    global_: Counter = Counter()
    by_source: dict = {}
    by_target: dict = {}
    raw_by_source: dict = {}
    raw_by_target: dict = {}
    raw_events = 0

    for author, interactor, pattern in records:
        if scheme.collapsed:
            pattern = collapse_af(pattern)
        counted = [pattern] if scheme in (Scheme.DISTINCT, Scheme.AF_DISTINCT) \
            else subpatterns(pattern)
        src = by_source.setdefault(author, Counter())
        tgt = by_target.setdefault(interactor, Counter())
        for x in counted:
            global_[x] += 1
            src[x] += 1
            tgt[x] += 1
        raw_events += 1
        raw_by_source[author] = raw_by_source.get(author, 0) + 1
        raw_by_target[interactor] = raw_by_target.get(interactor, 0) + 1

    return PatternCounts(scheme, global_, by_source, by_target,
                         raw_events, raw_by_source, raw_by_target)


@dataclass
class FrequencyTable:
    """Relative pattern frequencies in percent units."""

    scheme: Scheme
    kind: str  # "global" | "source" | "target" | "balanced"
    values: dict[int, float]

    def get(self, pattern: int, default: float = 0.0) -> float:
        return self.values.get(pattern, default)


def normalize_global(counts: PatternCounts) -> FrequencyTable:
    """Overall frequency of each pattern, in percent of raw events."""
    if counts.raw_events == 0:
        raise DataError("empty corpus")
    values = {x: 100.0 * n / counts.raw_events for x, n in counts.global_.items()}
    return FrequencyTable(counts.scheme, "global", values)


def normalize_source(counts: PatternCounts) -> FrequencyTable:
    """Average per-author engagement shares (sources of information).

    Authors with zero received engagement never appear in the counts, so the
    average runs over engaged sources only.
    """
    sources = list(counts.by_source)
    if not sources:
        raise DataError("empty corpus: no engaged sources")
    values: dict[int, float] = {}
    for i in sources:
        denom = counts.raw_by_source[i]
        for x, n in counts.by_source[i].items():
            values[x] = values.get(x, 0.0) + n / denom
    n_sources = len(sources)
    return FrequencyTable(counts.scheme, "source",
                          {x: 100.0 * v / n_sources for x, v in values.items()})


def normalize_target(counts: PatternCounts) -> FrequencyTable:
    """Average per-interactor engagement shares (consumers of information)."""
    targets = list(counts.by_target)
    if not targets:
        raise DataError("empty corpus: no engaged targets")
    values: dict[int, float] = {}
    for j in targets:
        denom = counts.raw_by_target[j]
        for x, n in counts.by_target[j].items():
            values[x] = values.get(x, 0.0) + n / denom
    n_targets = len(targets)
    return FrequencyTable(counts.scheme, "target",
                          {x: 100.0 * v / n_targets for x, v in values.items()})


def balance(global_t: FrequencyTable, source_t: FrequencyTable,
            target_t: FrequencyTable) -> FrequencyTable:
    """Least-squares compromise of the three normalizations.

    The sum of squared errors against the three tables is minimized by the
    per-pattern mean, which is non-negative whenever the inputs are.
    Patterns absent from all three inputs are excluded from the domain.
    """
    if not (global_t.scheme == source_t.scheme == target_t.scheme):
        raise ConfigError("cannot balance tables with mismatched schemes")
    support = set(global_t.values) | set(source_t.values) | set(target_t.values)
    values = {x: (global_t.get(x) + source_t.get(x) + target_t.get(x)) / 3.0
              for x in support}
    return FrequencyTable(global_t.scheme, "balanced", values)


class WeightTable:
    """Importance weights per pattern: omega = 1/eta_star (percent units).

    ``omega_star`` is omega rounded half-away-from-zero to two decimals and is
    what samplers use as the per-event edge weight. The pseudo-pattern
    ``PLAIN_EDGE`` always weighs 1. Patterns outside the calibrated domain
    fall back to the largest calibrated weight, with a one-time warning.
    """

    def __init__(self, scheme: Scheme, omega: dict[int, float],
                 omega_star: dict[int, float] | None = None, label: str = ""):
        self.scheme = scheme
        self.omega = dict(omega)
        if omega_star is None:
            omega_star = {x: round_half_up(w, 2) for x, w in self.omega.items()}
        self.omega_star = dict(omega_star)
        self.label = label or scheme.value
        self._max_weight = max(self.omega_star.values()) if self.omega_star else 1.0
        self._warned: set[int] = set()

    def of(self, pattern: int) -> float:
        """Edge-event weight for a raw 4-bit event pattern.

        Tables over the collapsed audience-facing space fold the pattern
        into 3 bits before lookup. Uses the rounded omega_star column.
        """
        if pattern == PLAIN_EDGE:
            return 1.0
        if self.scheme.collapsed:
            pattern = collapse_af(pattern)
        w = self.omega_star.get(pattern)
        if w is None:
            if pattern not in self._warned:
                warnings.warn(
                    f"pattern {pattern_str(pattern, self.scheme.width)} was never "
                    f"calibrated; using the largest calibrated weight "
                    f"{self._max_weight}", stacklevel=2)
                self._warned.add(pattern)
            return self._max_weight
        return w

    def event_weight(self, events) -> float:
        """Total weight of an event multiset ((tweet_id, pattern), ...)."""
        return sum(self.of(p) for _tid, p in events)

    def scaled(self, c: float) -> "WeightTable":
        """A copy with every weight multiplied by ``c`` (scale-invariance runs)."""
        return WeightTable(self.scheme,
                           {x: w * c for x, w in self.omega.items()},
                           {x: w * c for x, w in self.omega_star.items()},
                           label=f"{self.label}*{c}")


class UnitWeights:
    """Weight table assigning the same weight (default 1) to every pattern."""

    def __init__(self, value: float = 1.0):
        self.value = value
        self.label = "unit" if value == 1.0 else f"unit*{value}"
        self.scheme = None

    def of(self, pattern: int) -> float:
        return self.value

    def event_weight(self, events) -> float:
        return self.value * len(events)

    def scaled(self, c: float) -> "UnitWeights":
        return UnitWeights(self.value * c)


def weights_from(balanced: FrequencyTable, label: str = "") -> WeightTable:
    """Invert balanced frequencies into a weight table."""
    omega: dict[int, float] = {}
    for x, eta in balanced.values.items():
        if eta <= 0.0:
            raise DataError(
                f"unobserved pattern {pattern_str(x, balanced.scheme.width)}; "
                f"exclude it or supply a prior frequency")
        omega[x] = 1.0 / eta
    return WeightTable(balanced.scheme, omega, label=label)


@dataclass
class Calibration:
    """The full output of one calibration run over one corpus and scheme."""

    scheme: Scheme
    eta_global: FrequencyTable
    eta_source: FrequencyTable
    eta_target: FrequencyTable
    eta_star: FrequencyTable
    weights: WeightTable


def calibrate_counts(counts: PatternCounts) -> Calibration:
    g = normalize_global(counts)
    s = normalize_source(counts)
    t = normalize_target(counts)
    star = balance(g, s, t)
    return Calibration(counts.scheme, g, s, t, star, weights_from(star))


def calibrate_records(records, scheme: Scheme) -> Calibration:
    return calibrate_counts(count_events(records, scheme))


# ---------------------------------------------------------------------------
# weight-table files


WEIGHT_CSV_HEADER = ["scheme", "pattern", "eta_global", "eta_source",
                     "eta_target", "eta_star", "omega", "omega_star"]


def write_weight_csv(path, calibrations) -> None:
    """Write one or more calibrations to the standard weight-table CSV."""
    if isinstance(calibrations, Calibration):
        calibrations = [calibrations]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(WEIGHT_CSV_HEADER)
        for cal in calibrations:
            width = cal.scheme.width
            for x in sorted(cal.eta_star.values):
                writer.writerow([
                    cal.scheme.value, pattern_str(x, width),
                    f"{cal.eta_global.get(x):.6g}", f"{cal.eta_source.get(x):.6g}",
                    f"{cal.eta_target.get(x):.6g}", f"{cal.eta_star.get(x):.6g}",
                    f"{cal.weights.omega[x]:.6g}", f"{cal.weights.omega_star[x]:.6g}",
                ])


def read_weight_csv(path) -> dict[str, Calibration]:
    """Read a weight-table CSV; returns one Calibration per scheme section.

    Loaded omega_star values are authoritative: no re-rounding is applied, so
    hand-curated tables survive a round trip unchanged.
    """
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"cannot read weight table: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != WEIGHT_CSV_HEADER:
            raise DataError(f"{path}: unexpected weight-table header {header!r}")
        sections: dict[str, dict[str, dict[int, float]]] = {}
        for row in reader:
            if not row:
                continue
            if len(row) != len(WEIGHT_CSV_HEADER):
                raise DataError(f"{path}: short row {row!r}")
            tag = row[0]
            x = parse_pattern(row[1])
            cols = sections.setdefault(tag, {name: {} for name in WEIGHT_CSV_HEADER[2:]})
            for name, cell in zip(WEIGHT_CSV_HEADER[2:], row[2:]):
                cols[name][x] = float(cell)

    out: dict[str, Calibration] = {}
    for tag, cols in sections.items():
        scheme = Scheme.parse(tag)
        star = FrequencyTable(scheme, "balanced", cols["eta_star"])
        wt = WeightTable(scheme, cols["omega"], cols["omega_star"], label=tag)
        out[tag] = Calibration(
            scheme,
            FrequencyTable(scheme, "global", cols["eta_global"]),
            FrequencyTable(scheme, "source", cols["eta_source"]),
            FrequencyTable(scheme, "target", cols["eta_target"]),
            star, wt)
    return out


def load_reference_tables() -> dict[str, Calibration]:
    """The calibrated weight tables shipped with the package.

    Calibrated on a large Twitter engagement corpus; carries distinct,
    nested, and audience-facing sections. Printed values are authoritative
    even where re-derivation from the frequency columns differs slightly.
    """
    ref = resources.files("tightsample.data").joinpath("calibrated_weights.csv")
    with resources.as_file(ref) as path:
        return read_weight_csv(path)
