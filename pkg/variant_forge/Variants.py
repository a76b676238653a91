import logging
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import CodecError, VariantError

logger = logging.getLogger(__name__)

# Reserved token ids
PAD = 0
EOS = 1
FIRST_EVENT_ID = 2


class Variant(tuple):
    """
    A variant: an ordered, non-empty sequence of event labels.

    Variants are plain tuples of strings underneath, so they hash, compare and
    sort (lexicographically) like tuples.
    """

    def __new__(cls, events: Iterable[str] = ()):
        events = tuple(events)
        if not events:
            raise VariantError("a variant needs at least one event")
        for label in events:
            if not isinstance(label, str) or not label:
                raise VariantError(f"invalid event label {label!r}")
            if any(ch.isspace() for ch in label):
                raise VariantError(f"event label {label!r} contains whitespace")
        return super().__new__(cls, events)

    @property
    def events(self):
        return tuple(self)

    @property
    def length(self):
        return len(self)

    def __repr__(self):
        return "<" + ",".join(self) + ">"


def as_variant(events):
    return events if isinstance(events, Variant) else Variant(events)


def _variant_set(items):
    if isinstance(items, (UniqueVariantLog, SystemVariantSet)):
        return items.variants
    return frozenset(as_variant(v) for v in items)


@dataclass(frozen=True)
class UniqueVariantLog:
    """
    A set of distinct variants (L+, V_u, or a deduplicated sample set).
    """

    variants: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "variants", _variant_set(self.variants))

    def __len__(self):
        return len(self.variants)

    def __iter__(self):
        return iter(self.sorted())

    def __contains__(self, item):
        return item in self.variants

    def sorted(self):
        """Canonical (lexicographic) order"""
        return sorted(self.variants)

    @property
    def alphabet(self):
        return frozenset(label for v in self.variants for label in v)

    @property
    def max_length(self):
        return max((len(v) for v in self.variants), default=0)

    def mean_length(self):
        if not self.variants:
            raise VariantError("mean length of an empty variant set")
        return float(np.mean([len(v) for v in self.variants]))


@dataclass(frozen=True)
class SystemVariantSet:
    """
    The complete variant language V_S of a system, together with its alphabet.
    """

    variants: frozenset = frozenset()
    alphabet: frozenset = field(default=None)

    def __post_init__(self):
        variants = _variant_set(self.variants)
        object.__setattr__(self, "variants", variants)
        observed = frozenset(label for v in variants for label in v)
        if self.alphabet is None:
            object.__setattr__(self, "alphabet", observed)
        else:
            alphabet = frozenset(self.alphabet)
            missing = observed - alphabet
            if missing:
                raise VariantError(f"events outside the alphabet: {sorted(missing)}")
            object.__setattr__(self, "alphabet", alphabet)

    def __len__(self):
        return len(self.variants)

    def __iter__(self):
        return iter(self.sorted())

    def __contains__(self, item):
        return item in self.variants

    def sorted(self):
        return sorted(self.variants)

    @property
    def max_length(self):
        return max((len(v) for v in self.variants), default=0)


def variant_stats(vs):
    """
    Returns (count, alphabet size, max length, mean length) of a variant set.

    The alphabet size counts the labels that actually occur in the variants.
    """

    variants = _variant_set(vs)
    if not variants:
        raise VariantError("statistics of an empty variant set")
    lengths = np.array([len(v) for v in variants])
    alphabet = {label for v in variants for label in v}
    return len(variants), len(alphabet), int(lengths.max()), float(lengths.mean())


def set_ops(xs, ys):
    """Returns (|xs & ys|, |xs - ys|, |ys - xs|)"""

    xs, ys = _variant_set(xs), _variant_set(ys)
    return len(xs & ys), len(xs - ys), len(ys - xs)


class TokenCodec:
    """
    Bijection between event labels and integer ids, plus the fixed encoding width.

    Ids 0 and 1 are PAD and EOS; event ids start at 2 in sorted label order.
    An encoded variant is max_len + 1 ids wide: the events, EOS, then PAD.
    """

    def __init__(self, labels, max_len):
        labels = sorted(set(labels))
        if not labels:
            raise CodecError("codec needs a non-empty alphabet")
        if max_len < 1:
            raise CodecError(f"max_len must be positive, got {max_len}")
        self.labels   = tuple(labels)
        self.max_len  = int(max_len)
        self.label_to_id = {label: FIRST_EVENT_ID + i for i, label in enumerate(self.labels)}
        self.id_to_label = {i: label for label, i in self.label_to_id.items()}

    @classmethod
    def from_variants(cls, variants, alphabet=None):
        variants = _variant_set(variants)
        labels = alphabet if alphabet is not None else {lab for v in variants for lab in v}
        return cls(labels, max((len(v) for v in variants), default=0))

    @property
    def vocab_size(self):
        return len(self.labels) + FIRST_EVENT_ID

    @property
    def width(self):
        return self.max_len + 1

    def encode(self, v):
        if len(v) > self.max_len:
            raise CodecError(f"variant of length {len(v)} exceeds max_len {self.max_len}")
        tokens = np.full(self.width, PAD, dtype=np.int64)
        for i, label in enumerate(v):
            try:
                tokens[i] = self.label_to_id[label]
            except KeyError:
                raise CodecError(f"unknown label {label}") from None
        tokens[len(v)] = EOS
        return tokens

    def encode_many(self, variants):
        variants = list(variants)
        if not variants:
            return np.zeros((0, self.width), dtype=np.int64)
        return np.stack([self.encode(v) for v in variants])

    def decode(self, tokens) -> Optional[Variant]:
        """
        Decodes up to the first EOS; returns None (a rejection) when the sequence
        is empty, has no EOS, holds PAD before EOS, or holds an unknown id.
        """

        events = []
        for token in tokens:
            token = int(token)
            if token == EOS:
                return Variant(events) if events else None
            if token == PAD:
                return None
            label = self.id_to_label.get(token)
            if label is None:
                return None
            events.append(label)
        return None

    def decode_many(self, token_matrix):
        return [self.decode(row) for row in np.asarray(token_matrix)]

    def to_dict(self):
        return {"labels": list(self.labels), "max_len": self.max_len}

    @classmethod
    def from_dict(cls, d):
        return cls(d["labels"], d["max_len"])

    def __eq__(self, other):
        return (isinstance(other, TokenCodec)
                and self.labels == other.labels and self.max_len == other.max_len)

    def __hash__(self):
        return hash((self.labels, self.max_len))
