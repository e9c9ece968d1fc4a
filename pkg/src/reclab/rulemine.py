"""Frequent itemsets and single-consequent association rules.

Each user of a :class:`~reclab.ratings.BinaryRatingMatrix` is a transaction
holding the items set to 1.  Frequent itemsets are mined level-wise
(Apriori); every transaction set is kept as a Python ``int`` bitmask so
support counting is a chain of ``&`` and ``bit_count``.

Thresholds are strict: an itemset is frequent iff ``support > min_support``
and a rule is kept iff ``confidence > min_confidence``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyInput, InvalidArgument, ParseError
from .ratings import BinaryRatingMatrix

__all__ = [
    "TransactionDB",
    "FrequentItemsets",
    "Rule",
    "RuleSet",
    "mine_frequent",
    "induce_rules",
    "mine_rules",
    "recommend_from_rules",
    "write_rules_csv",
    "read_rules_csv",
]


@dataclass(frozen=True)
class TransactionDB:
    transactions: tuple
    n_items: int
    item_labels: tuple | None = None

    @classmethod
    def from_matrix(cls, m: BinaryRatingMatrix):
        rows = tuple(tuple(int(i) for i in m.row_items(u)) for u in range(m.n_users))
        return cls(rows, m.n_items, tuple(m.item_labels))

    @classmethod
    def from_sets(cls, sets, n_items=None):
        rows = tuple(tuple(sorted(set(int(i) for i in s))) for s in sets)
        if n_items is None:
            n_items = 1 + max((max(r) for r in rows if r), default=-1)
        return cls(rows, int(n_items))

    def __len__(self):
        return len(self.transactions)

    def item_bits(self):
        bits = [0] * self.n_items
        for t, row in enumerate(self.transactions):
            for i in row:
                bits[i] |= 1 << t
        return bits


@dataclass(frozen=True)
class FrequentItemsets:
    """Itemset (sorted tuple) -> transaction count, plus the database size."""

    counts: dict
    n_transactions: int

    def support(self, itemset):
        return self.counts[tuple(sorted(itemset))] / self.n_transactions

    @property
    def supports(self):
        return {s: c / self.n_transactions for s, c in self.counts.items()}

    def __len__(self):
        return len(self.counts)

    def __contains__(self, itemset):
        return tuple(sorted(itemset)) in self.counts


def mine_frequent(db: TransactionDB, min_support: float, max_len: int) -> FrequentItemsets:
    """All itemsets with ``support > min_support`` and at most ``max_len`` items."""
    n = len(db)
    if n == 0:
        raise EmptyInput("transaction database is empty")
    if not 0 < min_support <= 1:
        raise InvalidArgument("min_support must be in (0, 1]")
    if max_len < 1:
        raise InvalidArgument("max_len must be >= 1")

    item_bits = db.item_bits()
    counts = {}
    level = {}
    for i, b in enumerate(item_bits):
        c = b.bit_count()
        if c / n > min_support:
            level[(i,)] = b
            counts[(i,)] = c

    size = 1
    while level and size < max_len:
        size += 1
        keys = sorted(level)
        nxt = {}
        # join itemsets sharing their first size-2 items
        for a_pos, a in enumerate(keys):
            for b in keys[a_pos + 1:]:
                if a[:-1] != b[:-1]:
                    break
                cand = a + (b[-1],)
                if any(cand[:j] + cand[j + 1:] not in level for j in range(size - 2)):
                    continue
                bits = level[a] & item_bits[b[-1]]
                c = bits.bit_count()
                if c / n > min_support:
                    nxt[cand] = bits
                    counts[cand] = c
        level = nxt
    return FrequentItemsets(counts, n)


@dataclass(frozen=True)
class Rule:
    lhs: tuple
    rhs: int
    support: float
    confidence: float

    @property
    def length(self):
        return len(self.lhs) + 1


@dataclass(frozen=True)
class RuleSet:
    rules: tuple
    min_support: float
    min_confidence: float
    max_len: int
    item_labels: tuple | None = field(default=None, compare=False)

    def __len__(self):
        return len(self.rules)

    def __iter__(self):
        return iter(self.rules)


def induce_rules(frequent: FrequentItemsets, min_confidence: float,
                 min_support=None, max_len=None, item_labels=None) -> RuleSet:
    """Rules ``X -> y`` with ``X | {y}`` frequent and ``confidence > min_confidence``.

    Only non-empty left-hand sides are generated.  ``confidence`` is
    ``count(X | {y}) / count(X)``; ``support`` is ``count(X | {y}) / |D|``.
    """
    n = frequent.n_transactions
    rules = []
    for itemset in sorted(frequent.counts, key=lambda s: (len(s), s)):
        if len(itemset) < 2:
            continue
        c_all = frequent.counts[itemset]
        for j, rhs in enumerate(itemset):
            lhs = itemset[:j] + itemset[j + 1:]
            conf = c_all / frequent.counts[lhs]
            if conf > min_confidence:
                rules.append(Rule(lhs, rhs, c_all / n, conf))
    if max_len is None:
        max_len = max((len(s) for s in frequent.counts), default=0)
    return RuleSet(tuple(rules), min_support, min_confidence, max_len, item_labels)


def mine_rules(db: TransactionDB, min_support=0.1, min_confidence=0.8, max_len=3) -> RuleSet:
    freq = mine_frequent(db, min_support, max_len)
    return induce_rules(freq, min_confidence, min_support, max_len, db.item_labels)


def _best_per_item(rules, basket):
    basket = set(basket)
    best = {}
    for r in rules:
        if r.rhs in basket or not basket.issuperset(r.lhs):
            continue
        cur = best.get(r.rhs)
        if cur is None or (r.confidence, r.support) > cur:
            best[r.rhs] = (r.confidence, r.support)
    return best


def recommend_from_rules(rs, basket, n):
    """Top ``n`` ``(item, confidence)`` pairs from rules whose LHS is in ``basket``.

    An item backed by several matching rules scores the highest confidence
    among them; ties go to higher support, then to the lower item index.
    """
    best = _best_per_item(rs.rules if isinstance(rs, RuleSet) else rs, basket)
    order = sorted(best, key=lambda i: (-best[i][0], -best[i][1], i))
    return [(i, best[i][0]) for i in order[: max(int(n), 0)]]


def write_rules_csv(rs: RuleSet, path, item_labels=None):
    """Semicolon-separated ``lhs;rhs;support;confidence``, LHS items ``|``-joined."""
    labels = item_labels or rs.item_labels
    name = (lambda i: labels[i]) if labels else str
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, delimiter=";", lineterminator="\n")
        w.writerow(["lhs", "rhs", "support", "confidence"])
        for r in rs.rules:
            w.writerow(["|".join(name(i) for i in r.lhs), name(r.rhs),
                        repr(r.support), repr(r.confidence)])


def read_rules_csv(path, item_labels=None):
    """Read rules written by :func:`write_rules_csv` back into a list of :class:`Rule`."""
    lookup = {lab: i for i, lab in enumerate(item_labels)} if item_labels else None
    idx = (lambda s: lookup[s]) if lookup else int
    rules = []
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh, delimiter=";"))
    if not rows or rows[0] != ["lhs", "rhs", "support", "confidence"]:
        raise ParseError("header must be 'lhs;rhs;support;confidence'", 1)
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
        try:
            lhs = tuple(sorted(idx(s) for s in row[0].split("|") if s))
            rules.append(Rule(lhs, idx(row[1]), float(row[2]), float(row[3])))
        except (KeyError, ValueError) as e:
            raise ParseError(f"bad rule: {e}", lineno) from None
    return rules

