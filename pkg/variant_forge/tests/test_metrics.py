import math

import pytest

from ..MCMC import SampleSet
from ..errors import MetricError
from ..metrics import MAX_SCORE, evaluate, score
from .conftest import GRAMMAR_VARIANTS, V

SYSTEM = {V("a"), V("b"), V("c"), V("d")}
HELDOUT = {V("c"), V("d")}


class TestScore:
    @pytest.mark.parametrize("tp, tp_u, expected", [
        (1.0, 1.0, math.sqrt(2)),
        (0.0, 0.0, 0.0),
        (0.6, 0.8, 0.989949),
        (0.75, 0.5, 0.883883),
    ])
    def test_values(self, tp, tp_u, expected):
        assert score(tp, tp_u) == pytest.approx(expected, abs=1e-6)

    def test_symmetric(self):
        assert score(0.2, 0.9) == score(0.9, 0.2)

    def test_bounded(self):
        assert score(1, 1) == pytest.approx(MAX_SCORE)
        assert score(1, 0.999) < MAX_SCORE

    @pytest.mark.parametrize("tp, tp_u", [(-0.1, 0.5), (0.5, 1.01)])
    def test_out_of_range(self, tp, tp_u):
        with pytest.raises(MetricError):
            score(tp, tp_u)


class TestEvaluate:
    def test_partial_recovery(self):
        sampled = SampleSet.from_draws([V("a"), V("b"), V("c"), V("a"), V("z"), None])
        result = evaluate(sampled, SYSTEM, HELDOUT)
        assert (result.tp, result.tp_u) == (0.75, 0.5)
        assert result.score == pytest.approx(0.883883, abs=1e-6)
        assert result.unique_count == 4
        assert result.false_positives == 1
        assert result.rejected == 1
        assert result.sizes == (4, 2, 2, 6)

    def test_oracle_sample(self):
        result = evaluate(SampleSet.from_draws(sorted(GRAMMAR_VARIANTS)), GRAMMAR_VARIANTS, {V("a"), V("bx")})
        assert (result.tp, result.tp_u, result.unique_count) == (1.0, 1.0, 9)
        assert result.score == pytest.approx(MAX_SCORE)

    def test_disjoint(self):
        result = evaluate(SampleSet.from_draws([V("q")]), SYSTEM, HELDOUT)
        assert (result.tp, result.tp_u, result.score) == (0.0, 0.0, 0.0)

    def test_monotone_in_hits(self):
        fewer = evaluate(SampleSet.from_draws([V("a"), V("c")]), SYSTEM, HELDOUT)
        more = evaluate(SampleSet.from_draws([V("a"), V("b"), V("c")]), SYSTEM, HELDOUT)
        assert more.tp > fewer.tp
        assert more.tp_u == fewer.tp_u
        assert more.score > fewer.score

    def test_plain_variant_collection(self):
        assert evaluate({V("a"), V("c")}, SYSTEM, HELDOUT).tp == 0.5

    @pytest.mark.parametrize("system, heldout", [(set(), set()), (SYSTEM, set()), (SYSTEM, {V("e")})])
    def test_errors(self, system, heldout):
        with pytest.raises(MetricError):
            evaluate(SampleSet.from_draws([V("a")]), system, heldout)

    def test_to_dict(self):
        d = evaluate(SampleSet.from_draws([V("a")]), SYSTEM, HELDOUT).to_dict()
        assert d["sizes"] == [4, 2, 2, 1]
        assert d["tp"] == 0.25
