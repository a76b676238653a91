import logging
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

from .Variants import UniqueVariantLog
from .errors import MetricError

logger = logging.getLogger(__name__)

MAX_SCORE = math.sqrt(2.0)


@dataclass(frozen=True)
class EvalResult:
    """
    tp and tp_u are the recovered fractions of V_S and V_u; score combines them.
    sizes is (|V_S|, |V_u|, |L+|, k).
    """

    tp: float
    tp_u: float
    unique_count: int
    score: float
    sizes: tuple
    false_positives: int = 0
    rejected: int = 0

    def to_dict(self):
        d = asdict(self)
        d["sizes"] = list(self.sizes)
        return d


def score(tp, tp_u):
    """(tp + tp_u) / sqrt(2), bounded by sqrt(2)"""

    for name, value in (("tp", tp), ("tp_u", tp_u)):
        if not 0.0 <= value <= 1.0:
            raise MetricError(f"{name} must lie in [0, 1], got {value}")
    return (tp + tp_u) / MAX_SCORE


def evaluate(sampled, vs, heldout):
    """
    Compares a sample set against the system language and the held-out variants.

    The ratios are exact fractions of set cardinalities, converted to float once.
    """

    system = frozenset(vs.variants if hasattr(vs, "variants") else vs)
    heldout = frozenset(heldout.variants if hasattr(heldout, "variants") else heldout)
    if not system:
        raise MetricError("the system variant set is empty")
    if not heldout:
        raise MetricError("the held-out variant set is empty")
    if not heldout <= system:
        raise MetricError(f"{len(heldout - system)} held-out variants are not in the system language")

    unique = sampled.unique if hasattr(sampled, "unique") else UniqueVariantLog(sampled)
    unique = unique.variants
    tp = Fraction(len(unique & system), len(system))
    tp_u = Fraction(len(unique & heldout), len(heldout))
    false_positives = len(unique - system)
    k = getattr(sampled, "draws", len(unique))

    result = EvalResult(
        tp=float(tp),
        tp_u=float(tp_u),
        unique_count=len(unique),
        score=score(float(tp), float(tp_u)),
        sizes=(len(system), len(heldout), len(system) - len(heldout), k),
        false_positives=false_positives,
        rejected=getattr(sampled, "rejected", 0),
    )
    logger.debug("tp=%.6f tp_u=%.6f score=%.6f (%d unique, %d outside V_S)",
                 result.tp, result.tp_u, result.score, result.unique_count, false_positives)
    return result
