import logging
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .sequence_gan import SequenceGAN
from ..Variants import TokenCodec, UniqueVariantLog
from ..errors import TrainingError
from ..generators import chunked_draws
from ..utils.seeding import derive_seed

logger = logging.getLogger(__name__)

MAX_TRAINING_LENGTH = 64
PUBLISHED_BETAS = (100, 1000)


@dataclass(frozen=True)
class GeneratorConfig:
    beta: float = 100.0
    seed: int = 0
    epochs: int = 150
    embedding_dim: int = 32
    hidden_dim: int = 64
    pretrain_epochs: int = 50
    learning_rate: float = 1e-3
    adversarial_learning_rate: float = 1e-4
    batch_size: int = 32
    temperature_schedule: str = "exponential"
    grad_clip: float = 5.0

    def __post_init__(self):
        if not self.beta > 0:
            raise TrainingError(f"beta must be positive, got {self.beta}")
        for name in ("embedding_dim", "hidden_dim", "batch_size"):
            if getattr(self, name) < 1:
                raise TrainingError(f"{name} must be a positive integer")
        for name in ("epochs", "pretrain_epochs"):
            if getattr(self, name) < 0:
                raise TrainingError(f"{name} must not be negative")
        for name in ("learning_rate", "adversarial_learning_rate", "grad_clip"):
            if not getattr(self, name) > 0:
                raise TrainingError(f"{name} must be positive")
        if self.temperature_schedule not in ("exponential", "linear"):
            raise TrainingError(f"unknown temperature schedule {self.temperature_schedule!r}")

    def to_dict(self):
        return asdict(self)


class TrainedGenerator:
    """
    A trained adversarial generator GAN_beta with its codec.

    Parameters are not touched after training; every sampling call builds its
    own torch.Generator from (seed, chunk index).
    """

    kind = "gan"

    def __init__(self, model, codec, config, training_log=()):
        self.model        = model.eval()
        self.codec        = codec
        self.config       = config
        self.training_log = list(training_log)

    def sample_tokens(self, n, seed):
        width = self.codec.width

        def draw_chunk(chunk_seed, size):
            rng = torch.Generator().manual_seed(chunk_seed)
            return self.model.generator.sample(size, width, rng).numpy()

        return chunked_draws(n, seed, draw_chunk)

    @torch.no_grad()
    def discriminator_probability(self, token_matrix):
        tokens = torch.as_tensor(np.asarray(token_matrix), dtype=torch.long)
        onehots = F.one_hot(tokens, self.codec.vocab_size).to(self.model.generator.linear.weight.dtype)
        return self.model.discriminator.probability(onehots).double().numpy()

    def to_checkpoint(self):
        return {
            "kind": self.kind,
            "config": self.config.to_dict(),
            "codec": self.codec.to_dict(),
            "parameters": self.model.state_arrays(),
            "training_log": self.training_log,
        }

    @classmethod
    def from_checkpoint(cls, payload):
        config = GeneratorConfig(**payload["config"])
        codec = TokenCodec.from_dict(payload["codec"])
        model = SequenceGAN(codec.vocab_size, config.embedding_dim, config.hidden_dim)
        model.load_state_arrays(payload["parameters"])
        return cls(model, codec, config, payload.get("training_log", ()))


def build_training_tensors(log, codec):
    """Encodes the training log in canonical order"""
    return torch.from_numpy(codec.encode_many(log.sorted()))


def train(log, cfg, verbose=False):
    """
    Trains GAN_beta on a unique variant log.

    The codec width is fixed by the longest training variant.
    """

    log = log if isinstance(log, UniqueVariantLog) else UniqueVariantLog(log)
    if len(log) == 0:
        raise TrainingError("cannot train on an empty log")
    if log.max_length > MAX_TRAINING_LENGTH:
        raise TrainingError(f"training variants longer than {MAX_TRAINING_LENGTH} events")
    if cfg.beta not in PUBLISHED_BETAS:
        logger.info("beta=%s is outside the published grid %s", cfg.beta, PUBLISHED_BETAS)

    codec = TokenCodec.from_variants(log)
    tokens = build_training_tensors(log, codec)

    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(derive_seed(cfg.seed, "init"))
        model = SequenceGAN(codec.vocab_size, cfg.embedding_dim, cfg.hidden_dim)

    rng = torch.Generator().manual_seed(derive_seed(cfg.seed, "training"))
    logger.info("training on %d variants, vocabulary %d, width %d, beta=%s",
                len(log), codec.vocab_size, codec.width, cfg.beta)
    training_log = model.train_model(tokens, cfg, rng, verbose=verbose)
    return TrainedGenerator(model, codec, cfg, training_log)
