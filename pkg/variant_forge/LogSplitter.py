import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from .Variants import UniqueVariantLog
from .errors import SplitError
from .utils.seeding import make_rng

logger = logging.getLogger(__name__)

BIAS_FRACTION = 0.7
SWAP_FRACTION = 0.2
BIAS_SETUPS = ("b1", "b2", "b3", "b4")


@dataclass(frozen=True)
class RandomRatio:
    """
    Uniform random split with |L+| = round-half-up(ratio * |V_S|).
    observed_size, when given, replaces the rounding rule.
    """

    ratio: float
    observed_size: Optional[int] = None

    def __post_init__(self):
        if not 0.0 < self.ratio < 1.0:
            raise SplitError(f"split ratio must lie in (0, 1), got {self.ratio}")

    @property
    def label(self):
        observed = round(self.ratio * 100)
        return f"{observed}/{100 - observed}"


@dataclass(frozen=True)
class Bias:
    """
    Length-biased split. observed_size, when given, replaces
    round-half-up(bias_fraction * |V_S|) as the size of L+ before the
    maximum-length move.
    """

    setup: str
    observed_size: Optional[int] = None

    def __post_init__(self):
        if self.setup not in BIAS_SETUPS:
            raise SplitError(f"unknown bias setup {self.setup!r}; expected one of {BIAS_SETUPS}")

    @property
    def label(self):
        return self.setup


@dataclass(frozen=True)
class SplitSpec:
    kind: Union[RandomRatio, Bias]
    seed: int
    enforce_mu: bool = True
    bias_fraction: float = BIAS_FRACTION
    swap_fraction: float = SWAP_FRACTION

    def __post_init__(self):
        if self.seed is None:
            raise SplitError("a split needs a seed")
        if not 0.0 < self.bias_fraction < 1.0:
            raise SplitError(f"bias fraction must lie in (0, 1), got {self.bias_fraction}")
        if not 0.0 <= self.swap_fraction <= 1.0:
            raise SplitError(f"swap fraction must lie in [0, 1], got {self.swap_fraction}")

    @property
    def label(self):
        return self.kind.label

    def to_dict(self):
        d = {"seed": self.seed, "enforce_mu": self.enforce_mu}
        if isinstance(self.kind, RandomRatio):
            d.update(kind="ratio", ratio=self.kind.ratio, observed_size=self.kind.observed_size)
        else:
            d.update(kind="bias", setup=self.kind.setup, observed_size=self.kind.observed_size,
                     bias_fraction=self.bias_fraction, swap_fraction=self.swap_fraction)
        return d


@dataclass(frozen=True)
class SplitResult:
    observed: UniqueVariantLog
    heldout: UniqueVariantLog
    spec: SplitSpec
    system: Optional[str] = None
    forced: tuple = field(default=(), compare=False)

    def stats(self):
        return {
            "system": self.system,
            "setup": self.spec.label,
            "observed_size": len(self.observed),
            "observed_mean": round(self.observed.mean_length(), 2),
            "heldout_size": len(self.heldout),
            "heldout_mean": round(self.heldout.mean_length(), 2),
        }


def round_half_up(ratio, n):
    """round-half-up(ratio * n), computed exactly from the decimal ratio"""
    return math.floor(Fraction(str(ratio)) * n + Fraction(1, 2))


def _check_sizes(n_observed, total):
    if n_observed <= 0 or n_observed >= total:
        raise SplitError(f"degenerate split: {n_observed} of {total} variants observed")


def _pick(rng, candidates):
    return candidates[int(rng.integers(len(candidates)))]


def random_ratio_split(vs, ratio, seed, enforce_mu=True, observed_size=None, system=None):
    """
    Uniform random split of V_S.

    When no maximum-length variant lands in L+ (and enforce_mu is set), a random
    maximum-length variant of V_u is swapped with a random shorter variant of L+.
    """

    kind = RandomRatio(ratio, observed_size)
    spec = SplitSpec(kind, seed, enforce_mu=enforce_mu)
    ordered = sorted(vs.variants if hasattr(vs, "variants") else vs)
    if len(ordered) < 2:
        raise SplitError("need at least two variants to split")

    n_observed = observed_size if observed_size is not None else round_half_up(ratio, len(ordered))
    _check_sizes(n_observed, len(ordered))

    rng = make_rng(seed)
    order = rng.permutation(len(ordered))
    observed = {ordered[i] for i in order[:n_observed]}
    heldout = set(ordered) - observed

    mu = max(len(v) for v in ordered)
    forced = ()
    if enforce_mu and max(len(v) for v in observed) < mu:
        incoming = _pick(rng, sorted(v for v in heldout if len(v) == mu))
        outgoing = _pick(rng, sorted(observed))
        observed.remove(outgoing)
        heldout.add(outgoing)
        heldout.remove(incoming)
        observed.add(incoming)
        forced = (incoming,)
        logger.debug("moved max-length variant %r into the observed set", incoming)

    return SplitResult(UniqueVariantLog(frozenset(observed)), UniqueVariantLog(frozenset(heldout)),
                       spec, system, forced)


def _length_ordered(variants, rng, longest_first, cut):
    """
    Variants ordered by length (ties lexicographic); the tie class that straddles
    position `cut` is shuffled with rng.
    """

    if longest_first:
        ordered = sorted(variants, key=lambda v: (-len(v), v))
    else:
        ordered = sorted(variants, key=lambda v: (len(v), v))
    if 0 < cut < len(ordered) and len(ordered[cut - 1]) == len(ordered[cut]):
        boundary = len(ordered[cut])
        lo = min(i for i, v in enumerate(ordered) if len(v) == boundary)
        hi = max(i for i, v in enumerate(ordered) if len(v) == boundary) + 1
        tie_class = ordered[lo:hi]
        ordered[lo:hi] = [tie_class[i] for i in rng.permutation(len(tie_class))]
    return ordered


def bias_split(vs, setup, seed, bias_fraction=BIAS_FRACTION, swap_fraction=SWAP_FRACTION, observed_size=None,
               system=None):
    """
    Length-biased split.

    b1: L+ holds the shortest variants, plus one maximum-length variant moved in from V_u.
    b2: L+ holds the longest variants.
    b3/b4: b1/b2 followed by floor(swap_fraction * |V_u|) random exchanges between
    V_u and L+; exchanged variants and the kept maximum-length variant are not
    selected again.
    """

    kind = Bias(setup, observed_size)
    spec = SplitSpec(kind, seed, enforce_mu=True, bias_fraction=bias_fraction, swap_fraction=swap_fraction)
    variants = list(vs.variants if hasattr(vs, "variants") else vs)
    if len(variants) < 2:
        raise SplitError("need at least two variants to split")

    n_observed = observed_size if observed_size is not None else round_half_up(bias_fraction, len(variants))
    _check_sizes(n_observed, len(variants))

    rng = make_rng(seed)
    longest_first = setup in ("b2", "b4")
    ordered = _length_ordered(variants, rng, longest_first, n_observed)
    observed = set(ordered[:n_observed])
    heldout = set(ordered[n_observed:])
    mu = max(len(v) for v in variants)

    # b2/b4 already observe a maximum-length variant; it is only kept out of the exchanges
    kept = _pick(rng, sorted(v for v in (observed if longest_first else heldout) if len(v) == mu))
    if not longest_first:
        heldout.remove(kept)
        observed.add(kept)
        if not heldout:
            raise SplitError("degenerate split: nothing left to hold out")

    if setup in ("b3", "b4"):
        n_swaps = math.floor(swap_fraction * len(heldout))
        heldout_pool = sorted(heldout)
        observed_pool = sorted(observed - {kept})
        for _ in range(n_swaps):
            if not heldout_pool or not observed_pool:
                logger.warning("%s: swap pools exhausted", setup)
                break
            incoming = heldout_pool.pop(int(rng.integers(len(heldout_pool))))
            outgoing = observed_pool.pop(int(rng.integers(len(observed_pool))))
            heldout.remove(incoming)
            observed.add(incoming)
            observed.remove(outgoing)
            heldout.add(outgoing)
        logger.debug("%s: %d exchanges", setup, n_swaps)

    return SplitResult(UniqueVariantLog(frozenset(observed)), UniqueVariantLog(frozenset(heldout)),
                       spec, system, () if longest_first else (kept,))


def split(vs, spec, system=None):
    """Applies a SplitSpec to a variant set"""

    if isinstance(spec.kind, RandomRatio):
        return random_ratio_split(vs, spec.kind.ratio, spec.seed, enforce_mu=spec.enforce_mu,
                                  observed_size=spec.kind.observed_size, system=system)
    return bias_split(vs, spec.kind.setup, spec.seed, bias_fraction=spec.bias_fraction,
                      swap_fraction=spec.swap_fraction, observed_size=spec.kind.observed_size, system=system)
