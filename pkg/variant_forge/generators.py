"""
Operations shared by every sequence generator (the adversarial one and the
Markov baseline): sampling, discriminator scoring and checkpoints.

A generator exposes `codec`, `config`, `training_log`,
`sample_tokens(n, seed)` and `discriminator_probability(token_matrix)`.
"""

import logging
import math

import numpy as np

from .Variants import as_variant
from .errors import CheckpointError
from .utils.json_save_load import load_object, save_object
from .utils.seeding import derive_seed

logger = logging.getLogger(__name__)

SAMPLE_CHUNK = 512
CHECKPOINT_FORMAT = "variant-forge-checkpoint"
CHECKPOINT_VERSION = 1


def chunked_draws(n, seed, draw_chunk, chunk=SAMPLE_CHUNK):
    """
    Draws n rows as a prefix of a chunked stream.

    Chunk i always has the full chunk size and its own seed derived from
    (seed, i), so the first n rows of a larger request equal a request for n.
    """

    if n < 1:
        raise ValueError(f"number of draws must be positive, got {n}")
    n_chunks = math.ceil(n / chunk)
    rows = [draw_chunk(derive_seed(seed, "draws", i), chunk) for i in range(n_chunks)]
    return np.concatenate(rows, axis=0)[:n]


def sample(gen, n, seed):
    """
    n independent draws, decoded; rejected draws stay in place as None.
    """

    tokens = gen.sample_tokens(n, seed)
    return gen.codec.decode_many(tokens)


def discriminator_score(gen, v):
    """Probability in (0, 1) that v is a real training-distribution variant"""

    tokens = gen.codec.encode(as_variant(v))
    return float(gen.discriminator_probability(tokens[np.newaxis, :])[0])


def save_generator(gen, path):
    payload = {"format": CHECKPOINT_FORMAT, "version": CHECKPOINT_VERSION}
    payload.update(gen.to_checkpoint())
    save_object(payload, path)
    logger.info("saved %s checkpoint to %s", gen.kind, path)
    return path


def load_generator(path):
    from .MarkovGenerator import MarkovGenerator
    from .gan.utils import TrainedGenerator

    payload = load_object(path)
    if not isinstance(payload, dict) or payload.get("format") != CHECKPOINT_FORMAT:
        raise CheckpointError(f"{path} is not a generator checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {payload.get('version')}")
    kinds = {"gan": TrainedGenerator, "markov": MarkovGenerator}
    if payload.get("kind") not in kinds:
        raise CheckpointError(f"unknown generator kind {payload.get('kind')!r}")
    return kinds[payload["kind"]].from_checkpoint(payload)
