import logging
from dataclasses import dataclass
from typing import Mapping, Optional

from .Variants import SystemVariantSet, Variant, variant_stats
from .errors import FiringError, NetParseError, PlayoutLimitError

logger = logging.getLogger(__name__)

# Playout caps
DEFAULT_MAX_VARIANT_LENGTH = 64
DEFAULT_MAX_STATES = 10_000_000
DEFAULT_SILENT_CHAIN_CAP = 50

__all__ = [
    "Marking", "Transition", "Arc", "PetriNet", "PlayoutConfig", "SystemVariantSet",
    "enabled", "fire", "enumerate_variants", "variant_stats",
]


class Marking:
    """
    Token counts per place. Places with zero tokens are not stored, so two
    markings compare equal exactly when every place holds the same count.
    """

    __slots__ = ("_items", "_hash")

    def __init__(self, tokens: Optional[Mapping[str, int]] = None):
        tokens = dict(tokens or {})
        for place, count in tokens.items():
            if not isinstance(count, int) or count < 0:
                raise FiringError(f"invalid token count {count!r} on place {place}")
        self._items = tuple(sorted((p, c) for p, c in tokens.items() if c > 0))
        self._hash  = hash(self._items)

    def __getitem__(self, place):
        for p, c in self._items:
            if p == place:
                return c
        return 0

    def __eq__(self, other):
        return isinstance(other, Marking) and self._items == other._items

    def __hash__(self):
        return self._hash

    def __bool__(self):
        return bool(self._items)

    def __repr__(self):
        return "{" + ", ".join(f"{p}:{c}" for p, c in self._items) + "}"

    def places(self):
        return [p for p, _ in self._items]

    def as_dict(self):
        return dict(self._items)


@dataclass(frozen=True)
class Transition:
    id: str
    label: Optional[str] = None  # None marks a silent transition

    @property
    def silent(self):
        return self.label is None


@dataclass(frozen=True)
class Arc:
    source: str
    target: str
    weight: int = 1


class PetriNet:
    """
    A bounded labeled Petri net with an initial marking and a set of final markings.

    When no final marking is given, every dead marking (no enabled transition)
    counts as final.
    """

    def __init__(self, places, transitions, arcs, initial_marking, final_markings=None, name=None):
        self.name           = name
        self.places         = tuple(places)
        self.transitions    = tuple(sorted(transitions, key=lambda t: t.id))
        self.arcs           = tuple(arcs)
        self.initial_marking = initial_marking if isinstance(initial_marking, Marking) \
            else Marking(initial_marking)
        finals = [m if isinstance(m, Marking) else Marking(m) for m in (final_markings or [])]
        self.final_markings = frozenset(finals)
        self.dead_markings_final = not self.final_markings

        self._validate()

        self.by_id = {t.id: t for t in self.transitions}
        self.pre   = {t.id: {} for t in self.transitions}
        self.post  = {t.id: {} for t in self.transitions}
        for arc in self.arcs:
            if arc.source in self.by_id:
                self.post[arc.source][arc.target] = self.post[arc.source].get(arc.target, 0) + arc.weight
            else:
                self.pre[arc.target][arc.source] = self.pre[arc.target].get(arc.source, 0) + arc.weight

    def _validate(self):
        place_set = set(self.places)
        trans_ids = [t.id for t in self.transitions]
        if len(place_set) != len(self.places):
            raise NetParseError("duplicate place identifier")
        if len(set(trans_ids)) != len(trans_ids):
            raise NetParseError("duplicate transition identifier")
        if place_set & set(trans_ids):
            raise NetParseError("identifier used for both a place and a transition")

        has_input = set()
        for arc in self.arcs:
            if arc.source not in place_set and arc.source not in trans_ids:
                raise NetParseError(f"dangling arc: unknown source {arc.source}",
                                    location=f"arc {arc.source}->{arc.target}")
            if arc.target not in place_set and arc.target not in trans_ids:
                raise NetParseError(f"dangling arc: unknown target {arc.target}",
                                    location=f"arc {arc.source}->{arc.target}")
            if (arc.source in place_set) == (arc.target in place_set):
                raise NetParseError("arc must connect a place and a transition",
                                    location=f"arc {arc.source}->{arc.target}")
            if not isinstance(arc.weight, int) or arc.weight < 1:
                raise NetParseError(f"arc multiplicity must be a positive integer, got {arc.weight!r}",
                                    location=f"arc {arc.source}->{arc.target}")
            if arc.target in trans_ids:
                has_input.add(arc.target)

        for t in trans_ids:
            if t not in has_input:
                raise NetParseError("transition without input arc", location=f"transition {t}")
        if not self.initial_marking:
            raise NetParseError("missing initial marking")
        for m in (self.initial_marking, *self.final_markings):
            unknown = set(m.places()) - place_set
            if unknown:
                raise NetParseError(f"marking refers to unknown places {sorted(unknown)}")

    @property
    def visible_labels(self):
        return frozenset(t.label for t in self.transitions if not t.silent)

    def is_final(self, m):
        if self.dead_markings_final:
            return not enabled(self, m)
        return m in self.final_markings

    def __repr__(self):
        return (f"PetriNet({self.name or ''}: {len(self.places)} places, "
                f"{len(self.transitions)} transitions, {len(self.arcs)} arcs)")


@dataclass(frozen=True)
class PlayoutConfig:
    max_variant_length: int = DEFAULT_MAX_VARIANT_LENGTH
    max_states: int = DEFAULT_MAX_STATES
    silent_chain_cap: int = DEFAULT_SILENT_CHAIN_CAP

    def __post_init__(self):
        for name in ("max_variant_length", "max_states", "silent_chain_cap"):
            if getattr(self, name) < 1:
                raise PlayoutLimitError(f"{name} must be at least 1")


def enabled(net, m):
    """Transitions whose every input place holds at least the arc multiplicity"""

    return frozenset(
        t_id for t_id, inputs in net.pre.items()
        if all(m[p] >= w for p, w in inputs.items())
    )


def fire(net, m, t):
    """Consumes input tokens and produces output tokens of transition t"""

    t_id = t.id if isinstance(t, Transition) else t
    if t_id not in net.pre:
        raise FiringError(f"unknown transition {t_id}")
    tokens = m.as_dict()
    for p, w in net.pre[t_id].items():
        if tokens.get(p, 0) < w:
            raise FiringError(f"transition {t_id} is not enabled in {m}")
        tokens[p] -= w
    for p, w in net.post[t_id].items():
        tokens[p] = tokens.get(p, 0) + w
    return Marking(tokens)


def enumerate_variants(net, cfg=None):
    """
    Collects the visible-label sequences of every firing sequence leading from
    the initial marking to a final marking.

    The search is a depth-first walk over (marking, emitted prefix) nodes. A node
    is expanded once: from the same marking with the same prefix the reachable
    completions are identical. This also prunes silent cycles, which return to a
    marking without emitting an event.
    """

    cfg = cfg or PlayoutConfig()
    start = (net.initial_marking, ())
    visited = {start}
    stack = [(net.initial_marking, (), 0)]
    variants = set()
    empty_completion = False

    while stack:
        marking, prefix, silent_run = stack.pop()
        enabled_now = enabled(net, marking)

        final = (not enabled_now) if net.dead_markings_final else marking in net.final_markings
        if final:
            if prefix:
                variants.add(Variant(prefix))
            else:
                empty_completion = True

        for t_id in sorted(enabled_now, reverse=True):
            transition = net.by_id[t_id]
            successor = fire(net, marking, t_id)
            if transition.silent:
                next_prefix, next_run = prefix, silent_run + 1
                if next_run > cfg.silent_chain_cap:
                    raise PlayoutLimitError(
                        f"more than {cfg.silent_chain_cap} consecutive silent firings "
                        f"after prefix {list(prefix)}; the net may livelock")
            else:
                next_prefix, next_run = prefix + (transition.label,), 0
                if len(next_prefix) > cfg.max_variant_length:
                    raise PlayoutLimitError(
                        f"variant prefix longer than {cfg.max_variant_length} events; "
                        f"the language may be infinite")
            node = (successor, next_prefix)
            if node in visited:
                continue
            visited.add(node)
            if len(visited) > cfg.max_states:
                raise PlayoutLimitError(f"explored more than {cfg.max_states} states")
            stack.append((successor, next_prefix, next_run))

    if empty_completion:
        logger.warning("%s: the empty sequence reaches a final marking; it is not a variant",
                       net.name or "net")
    logger.info("%s: %d variants, %d explored states", net.name or "net", len(variants), len(visited))
    return SystemVariantSet(frozenset(variants), net.visible_labels)
