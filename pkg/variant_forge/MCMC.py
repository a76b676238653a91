import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .Variants import UniqueVariantLog
from .generators import sample
from .utils.seeding import make_rng

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 50
DEFAULT_THINNING = 5
ODDS_CLAMP = 1e-6


@dataclass(frozen=True)
class SampleSet:
    """
    Outcome of k draws: the frequency of every decoded variant plus the
    number of draws that did not decode.
    """

    draws: int
    rejected: int
    frequency: dict
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if sum(self.frequency.values()) + self.rejected != self.draws:
            raise ValueError("sample accounting broken: frequencies + rejected != draws")

    @property
    def unique(self):
        return UniqueVariantLog(frozenset(self.frequency))

    @classmethod
    def from_draws(cls, draws, metadata=None):
        counts = Counter(v for v in draws if v is not None)
        rejected = sum(1 for v in draws if v is None)
        return cls(len(draws), rejected, dict(counts), dict(metadata or {}))


def naive_sample(gen, k, seed):
    """
    Exactly k draws from the generator, deduplicated into a frequency map.
    """

    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    draws = sample(gen, k, seed)
    result = SampleSet.from_draws(draws, {"mode": "naive", "k": k, "seed": seed})
    result.metadata["rejection_rate"] = result.rejected / k
    logger.info("naive sampling: %d draws, %d unique, %d rejected", k, len(result.frequency), result.rejected)
    return result


def log_odds(d):
    d = np.clip(np.asarray(d, dtype=np.float64), ODDS_CLAMP, 1.0 - ODDS_CLAMP)
    return np.log(d) - np.log1p(-d)


def log_acceptance(d_current, d_proposed):
    # clipped at 0, i.e. probability 1
    return np.clip(log_odds(d_proposed) - log_odds(d_current), -np.inf, 0)


def acceptance_probability(d_current, d_proposed):
    """
    min(1, odds(D(x')) / odds(D(x))) for the independence proposal.
    """

    return float(np.exp(log_acceptance(d_current, d_proposed)))


class MCMC:
    """
    Metropolis-Hastings refinement of generator samples.

    Proposals are naive generator draws (independent of the current state);
    a proposal x' replaces the state x with probability
    min(1, [D(x')/(1-D(x'))] / [D(x)/(1-D(x))]) where D is the discriminator.
    Undecodable proposals are rejected outright.
    """

    def __init__(
        self,
        gen,
        nsamples,
        burn_in=DEFAULT_BURN_IN,
        thinning=DEFAULT_THINNING,
        seed=0,
    ):

        if nsamples < 1:
            raise ValueError(f"k must be positive, got {nsamples}")
        if burn_in < 0 or thinning < 1:
            raise ValueError("burn_in must be >= 0 and thinning >= 1")

        self.gen      = gen
        self.nsamples = nsamples  # number of states to record
        self.burn_in  = burn_in   # number of steps discarded before recording
        self.thinning = thinning  # record every thinning-th state
        self.seed     = seed

    @property
    def n_steps(self):
        return self.burn_in + self.nsamples * self.thinning

    def acceptreject(self, d_current, d_proposed, u):
        """
        Accept when log(u) falls below the clipped log acceptance ratio.
        """

        return bool(log_acceptance(d_current, d_proposed) > np.log(u))

    def run(self):
        """
        Runs the chain; returns the recorded states (in order) and metadata.
        """

        # the first decodable proposal seeds the chain; its step count starts there
        tokens = self.gen.sample_tokens(self.n_steps + 1, self.seed)
        valid = np.array([v is not None for v in self.gen.codec.decode_many(tokens)])
        start = int(np.argmax(valid)) if valid.any() else None
        if start:
            # draws are seeded streams, so the longer draw extends the shorter one
            tokens = self.gen.sample_tokens(start + self.n_steps + 1, self.seed)
        proposals = self.gen.codec.decode_many(tokens)
        valid = np.array([v is not None for v in proposals])
        scores = np.full(len(proposals), 0.5)
        if valid.any():
            scores[valid] = self.gen.discriminator_probability(tokens[valid])
        uniforms = make_rng(self.seed, "mh-accept").random(len(proposals))

        metadata = {
            "mode": "mh", "k": self.nsamples, "seed": self.seed,
            "burn_in": self.burn_in, "thinning": self.thinning,
            "proposals": self.n_steps, "skipped_proposals": start or 0,
            "undecodable_proposals": int((~valid[(start or 0) + 1:]).sum()),
            "degenerate": start is None,
        }
        if start is None:
            logger.warning("no decodable proposal; the chain is degenerate")
            metadata.update(accepted=0, acceptance_rate=0.0)
            return [None] * self.nsamples, metadata

        state, d_state = proposals[start], scores[start]
        iaccept = 0  # counter for accepted proposals
        recorded = []
        for step in range(1, self.n_steps + 1):
            index = start + step
            if valid[index] and self.acceptreject(d_state, scores[index], uniforms[index]):
                state, d_state = proposals[index], scores[index]
                iaccept += 1
            if step > self.burn_in and (step - self.burn_in) % self.thinning == 0:
                recorded.append(state)

        metadata.update(accepted=iaccept, acceptance_rate=iaccept / self.n_steps,
                        degenerate=iaccept == 0 and len(set(recorded)) == 1)
        logger.info("acceptance ratio: %.4f", iaccept / self.n_steps)
        return recorded, metadata

    def sample(self):
        recorded, metadata = self.run()
        return SampleSet.from_draws(recorded, metadata)


def mh_sample(gen, k, burn_in=DEFAULT_BURN_IN, thinning=DEFAULT_THINNING, seed=0):
    """k recorded states of an independence Metropolis-Hastings chain"""
    return MCMC(gen, k, burn_in=burn_in, thinning=thinning, seed=seed).sample()
