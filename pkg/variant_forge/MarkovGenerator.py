import logging
from collections import defaultdict

import numpy as np

from .Variants import EOS, PAD, TokenCodec, UniqueVariantLog
from .errors import TrainingError
from .generators import chunked_draws

logger = logging.getLogger(__name__)


class MarkovGenerator:
    """
    n-gram baseline with the same interface as the adversarial generator.

    The next id (an event or EOS) is drawn conditioned on the previous `order`
    ids; the start of a variant is padded with PAD as the start state. With
    smoothing 0 every sampled variant is a chain of context/next-id pairs seen
    in the training log; with smoothing > 0 every event and EOS get
    `smoothing` extra counts, and unseen contexts draw uniformly.

    The discriminator stand-in compares the model probability p(v) with a
    uniform reference q(v) = (|A| + 1) ** -(|v| + 1): D(v) = p / (p + q).
    """

    kind = "markov"

    def __init__(self, codec, order, smoothing, counts, training_log=()):
        self.codec        = codec
        self.order        = order
        self.smoothing    = smoothing
        self.counts       = counts  # context tuple -> counts over [EOS, events...]
        self.config       = {"order": order, "smoothing": smoothing}
        self.training_log = list(training_log)
        self.n_outcomes   = codec.vocab_size - EOS
        self._cdf_cache   = {}

    def _distribution(self, context):
        counts = self.counts.get(context)
        if counts is None:
            if self.smoothing > 0:
                return np.full(self.n_outcomes, 1.0 / self.n_outcomes)
            return None
        weights = counts + self.smoothing
        return weights / weights.sum()

    def _cdf(self, context):
        if context not in self._cdf_cache:
            probs = self._distribution(context)
            self._cdf_cache[context] = None if probs is None else np.cumsum(probs)
        return self._cdf_cache[context]

    def _draw(self, rng):
        width = self.codec.width
        tokens = np.full(width, PAD, dtype=np.int64)
        context = (PAD,) * self.order
        for t in range(width):
            cdf = self._cdf(context)
            if cdf is None:
                return tokens  # no EOS: decodes as a rejection
            index = min(int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right")), self.n_outcomes - 1)
            token = EOS + index
            tokens[t] = token
            if token == EOS:
                return tokens
            context = context[1:] + (token,)
        return tokens

    def sample_tokens(self, n, seed):
        def draw_chunk(chunk_seed, size):
            rng = np.random.default_rng(chunk_seed)
            return np.stack([self._draw(rng) for _ in range(size)])

        return chunked_draws(n, seed, draw_chunk)

    def log_probability(self, tokens):
        context = (PAD,) * self.order
        total = 0.0
        for token in tokens:
            probs = self._distribution(context)
            token = int(token)
            if probs is None or token < EOS or probs[token - EOS] == 0:
                return -np.inf
            total += np.log(probs[token - EOS])
            if token == EOS:
                return total
            context = context[1:] + (token,)
        return -np.inf

    def discriminator_probability(self, token_matrix):
        scores = []
        for tokens in np.atleast_2d(token_matrix):
            length = int(np.argmax(tokens == EOS)) if EOS in tokens else len(tokens)
            log_p = self.log_probability(tokens)
            log_q = -(length + 1) * np.log(self.n_outcomes)
            # p / (p + q) computed as a logistic of the log ratio
            scores.append(1.0 / (1.0 + np.exp(np.clip(log_q - log_p, -700, 700))))
        return np.clip(np.array(scores), 1e-6, 1 - 1e-6)

    def to_checkpoint(self):
        return {
            "kind": self.kind,
            "config": self.config,
            "codec": self.codec.to_dict(),
            "parameters": {
                "contexts": np.array(list(self.counts.keys()), dtype=np.int64).reshape(-1, self.order),
                "counts": np.array(list(self.counts.values()), dtype=np.float64).reshape(-1, self.n_outcomes),
            },
            "training_log": self.training_log,
        }

    @classmethod
    def from_checkpoint(cls, payload):
        codec = TokenCodec.from_dict(payload["codec"])
        contexts = payload["parameters"]["contexts"]
        counts = payload["parameters"]["counts"]
        table = {tuple(int(c) for c in ctx): np.asarray(row, dtype=np.float64)
                 for ctx, row in zip(contexts, counts)}
        return cls(codec, payload["config"]["order"], payload["config"]["smoothing"], table,
                   payload.get("training_log", ()))


def markov_train(log, order, smoothing=0.0):
    """
    Counts context -> next-id transitions over the training log.

    :param order:       context length (previous ids conditioned on)
    :param smoothing:   additive smoothing, 0 for a pure memorizing chain
    """

    log = log if isinstance(log, UniqueVariantLog) else UniqueVariantLog(log)
    if len(log) == 0:
        raise TrainingError("cannot train on an empty log")
    if order < 1:
        raise TrainingError(f"order must be at least 1, got {order}")
    if order > log.max_length:
        raise TrainingError(f"order {order} exceeds the longest variant ({log.max_length} events)")
    if smoothing < 0:
        raise TrainingError(f"smoothing must not be negative, got {smoothing}")

    codec = TokenCodec.from_variants(log)
    n_outcomes = codec.vocab_size - EOS
    counts = defaultdict(lambda: np.zeros(n_outcomes))
    for variant in log.sorted():
        context = (PAD,) * order
        for token in list(codec.encode(variant)[:len(variant)]) + [EOS]:
            counts[context][int(token) - EOS] += 1
            context = context[1:] + (int(token),)

    logger.info("markov order %d: %d contexts over %d variants", order, len(counts), len(log))
    training_log = [{"phase": "count", "contexts": len(counts), "variants": len(log)}]
    return MarkovGenerator(codec, order, float(smoothing), dict(counts), training_log)

