import logging
import math

import numpy as np
from tqdm import trange

import torch
import torch.nn as nn
from torch import optim
import torch.nn.functional as F

from ..Variants import EOS, PAD
from ..errors import TrainingError

logger = logging.getLogger(__name__)

# Discriminator outputs are clamped to [CLAMP, 1 - CLAMP] before any log
CLAMP = 1e-6
GUMBEL_EPS = 1e-20


def clamp_probability(p):
    return p.clamp(CLAMP, 1.0 - CLAMP)


def inverse_temperature(epoch, n_epochs, beta, schedule="exponential"):
    '''
    Inverse temperature of the softmax relaxation at an adversarial epoch,
    ramped from 1 (first epoch) to beta (last epoch)
    '''

    progress = epoch / max(1, n_epochs - 1)
    if schedule == "exponential":
        return float(beta) ** progress
    if schedule == "linear":
        return 1.0 + (float(beta) - 1.0) * progress
    raise TrainingError(f"unknown temperature schedule {schedule!r}")


class GRUGenerator(nn.Module):
    ''' Emits token sequences one id at a time from a gated recurrent cell '''
    def __init__(self, vocab_size, embedding_dim, hidden_dim):
        '''
        : param vocab_size:     number of output ids (PAD, EOS and the events)
        : param embedding_dim:  size of the token embedding
        : param hidden_dim:     number of features in the hidden state h
        '''

        super(GRUGenerator, self).__init__()
        self.vocab_size = vocab_size
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.bos = vocab_size  # input-only start symbol, never emitted

        self.embedding = nn.Embedding(vocab_size + 1, embedding_dim)
        self.cell = nn.GRUCell(embedding_dim, hidden_dim)
        self.linear = nn.Linear(hidden_dim, vocab_size)

    def init_hidden(self, batch_size):
        return torch.zeros(batch_size, self.hidden_dim, dtype=self.linear.weight.dtype)

    def forward(self, tokens):
        '''
        Teacher-forced pass.

        : param tokens:         (batch, width) target ids
        : return logits:        (batch, width, vocab_size); position t predicts tokens[:, t]
        '''

        batch_size, width = tokens.shape
        bos = torch.full((batch_size, 1), self.bos, dtype=torch.long)
        inputs = torch.cat([bos, tokens[:, :-1]], dim=1)
        embedded = self.embedding(inputs)
        hidden = self.init_hidden(batch_size)
        logits = []
        for t in range(width):
            hidden = self.cell(embedded[:, t, :], hidden)
            logits.append(self.linear(hidden))
        return torch.stack(logits, dim=1)

    @torch.no_grad()
    def sample(self, n, width, generator):
        '''
        Ancestral sampling; positions after the first EOS are filled with PAD.

        : param n:              number of sequences
        : param width:          sequence width (max_len + 1)
        : param generator:      torch.Generator owning the random stream
        : return tokens:        (n, width) LongTensor with ids in [0, vocab_size)
        '''

        tokens = torch.full((n, width), PAD, dtype=torch.long)
        finished = torch.zeros(n, dtype=torch.bool)
        inputs = torch.full((n,), self.bos, dtype=torch.long)
        hidden = self.init_hidden(n)
        for t in range(width):
            hidden = self.cell(self.embedding(inputs), hidden)
            probs = F.softmax(self.linear(hidden), dim=-1)
            drawn = torch.multinomial(probs, 1, generator=generator).squeeze(1)
            drawn = torch.where(finished, torch.full_like(drawn, PAD), drawn)
            tokens[:, t] = drawn
            finished = finished | (drawn == EOS)
            inputs = drawn
        return tokens

    def relaxed(self, n, width, inv_temp, uniform_noise):
        '''
        Differentiable rollout with Gumbel-softmax relaxed one-hot outputs.

        Probability mass that has already passed EOS is moved to PAD, so relaxed
        sequences share the layout of encoded real variants.

        : param inv_temp:       inverse temperature of the relaxation
        : param uniform_noise:  (n, width, vocab_size) uniform(0, 1) draws
        : return outputs:       (n, width, vocab_size) rows summing to 1
        '''

        dtype = self.linear.weight.dtype
        pad = F.one_hot(torch.tensor(PAD), self.vocab_size).to(dtype)
        gumbel = -torch.log(-torch.log(uniform_noise + GUMBEL_EPS) + GUMBEL_EPS)

        hidden = self.init_hidden(n)
        inputs = self.embedding(torch.full((n,), self.bos, dtype=torch.long))
        alive = torch.ones(n, 1, dtype=dtype)
        outputs = []
        for t in range(width):
            hidden = self.cell(inputs, hidden)
            y = F.softmax((self.linear(hidden) + gumbel[:, t, :]) * inv_temp, dim=-1)
            outputs.append(alive * y + (1.0 - alive) * pad)
            alive = alive * (1.0 - y[:, EOS:EOS + 1])
            inputs = y @ self.embedding.weight[:self.vocab_size]
        return torch.stack(outputs, dim=1)


class GRUDiscriminator(nn.Module):
    ''' Scores (relaxed) one-hot sequences as real or generated '''
    def __init__(self, vocab_size, embedding_dim, hidden_dim):

        super(GRUDiscriminator, self).__init__()
        self.vocab_size = vocab_size
        self.projection = nn.Linear(vocab_size, embedding_dim, bias=False)
        self.gru = nn.GRU(
            input_size = embedding_dim,
            hidden_size = hidden_dim,
            num_layers = 1,
            batch_first = True)
        self.linear = nn.Linear(hidden_dim, 1)

    def forward(self, onehots):
        '''
        : param onehots:        (batch, width, vocab_size)
        : return logits:        (batch,) real-vs-generated logits
        '''

        _, hidden = self.gru(self.projection(onehots))
        return self.linear(hidden[-1]).squeeze(-1)

    def probability(self, onehots):
        return clamp_probability(torch.sigmoid(self.forward(onehots)))


def mle_loss(logits, tokens):
    ''' Cross entropy over every position up to and including the first EOS '''

    width = tokens.shape[1]
    positions = torch.arange(width).unsqueeze(0)
    eos_at = (tokens == EOS).float().argmax(dim=1, keepdim=True)
    mask = (positions <= eos_at).to(logits.dtype)
    ce = F.cross_entropy(logits.reshape(-1, logits.shape[-1]), tokens.reshape(-1), reduction="none")
    return (ce * mask.reshape(-1)).sum() / mask.sum()


def discriminator_loss(d_real, d_fake):
    return -(torch.log(clamp_probability(d_real)) + torch.log(1.0 - clamp_probability(d_fake))).mean()


def generator_loss(d_fake):
    return -torch.log(clamp_probability(d_fake)).mean()


class SequenceGAN(nn.Module):
    ''' Generator and discriminator trained together on encoded variants '''
    def __init__(self, vocab_size, embedding_dim, hidden_dim):

        super(SequenceGAN, self).__init__()
        self.vocab_size = vocab_size
        self.generator = GRUGenerator(vocab_size, embedding_dim, hidden_dim)
        self.discriminator = GRUDiscriminator(vocab_size, embedding_dim, hidden_dim)

    def _batches(self, n, batch_size, rng):
        order = torch.randperm(n, generator=rng)
        n_batches = max(1, math.ceil(n / batch_size))
        return [order[b * batch_size:(b + 1) * batch_size] for b in range(n_batches)]

    @staticmethod
    def _check(loss, phase, epoch):
        if not math.isfinite(loss):
            raise TrainingError(f"non-finite {phase} loss {loss}", epoch=epoch)

    def train_model(self, tokens, cfg, rng, verbose=True):
        '''
        Maximum-likelihood pretraining followed by the adversarial phase.

        : param tokens:         (n, width) LongTensor of encoded training variants
        : param cfg:            GeneratorConfig
        : param rng:            torch.Generator for batching and Gumbel noise
        : param verbose:        show progress bars
        : return training_log:  list of per-epoch loss records
        '''

        training_log = []
        n, width = tokens.shape

        g_pre_optimizer = optim.Adam(self.generator.parameters(), lr=cfg.learning_rate)

        with trange(cfg.pretrain_epochs, desc="pretrain", disable=not verbose) as tr:
            for it in tr:
                epoch_loss = 0.
                batches = self._batches(n, cfg.batch_size, rng)
                for batch in batches:
                    g_pre_optimizer.zero_grad()
                    loss = mle_loss(self.generator(tokens[batch]), tokens[batch])
                    loss.backward()
                    nn.utils.clip_grad_norm_(self.generator.parameters(), cfg.grad_clip)
                    g_pre_optimizer.step()
                    epoch_loss += loss.item()

                epoch_loss /= len(batches)
                self._check(epoch_loss, "pretraining", it)
                training_log.append({"phase": "pretrain", "epoch": it, "mle_loss": epoch_loss})
                tr.set_postfix(loss="{0:.6f}".format(epoch_loss))

        g_optimizer = optim.Adam(self.generator.parameters(), lr=cfg.adversarial_learning_rate)
        d_optimizer = optim.Adam(self.discriminator.parameters(), lr=cfg.adversarial_learning_rate)
        real_onehots = F.one_hot(tokens, self.vocab_size).to(self.generator.linear.weight.dtype)

        with trange(cfg.epochs, desc="adversarial", disable=not verbose) as tr:
            for it in tr:
                inv_temp = inverse_temperature(it, cfg.epochs, cfg.beta, cfg.temperature_schedule)
                g_epoch, d_epoch = 0., 0.
                batches = self._batches(n, cfg.batch_size, rng)
                for batch in batches:
                    size = len(batch)
                    noise = torch.rand((size, width, self.vocab_size), generator=rng,
                                       dtype=real_onehots.dtype)
                    fake = self.generator.relaxed(size, width, inv_temp, noise)

                    # discriminator step
                    d_optimizer.zero_grad()
                    d_loss = discriminator_loss(
                        torch.sigmoid(self.discriminator(real_onehots[batch])),
                        torch.sigmoid(self.discriminator(fake.detach())))
                    d_loss.backward()
                    nn.utils.clip_grad_norm_(self.discriminator.parameters(), cfg.grad_clip)
                    d_optimizer.step()

                    # generator step
                    g_optimizer.zero_grad()
                    g_loss = generator_loss(torch.sigmoid(self.discriminator(fake)))
                    g_loss.backward()
                    nn.utils.clip_grad_norm_(self.generator.parameters(), cfg.grad_clip)
                    g_optimizer.step()

                    g_epoch += g_loss.item()
                    d_epoch += d_loss.item()

                g_epoch /= len(batches)
                d_epoch /= len(batches)
                self._check(g_epoch, "generator", it)
                self._check(d_epoch, "discriminator", it)
                training_log.append({"phase": "adversarial", "epoch": it, "g_loss": g_epoch,
                                     "d_loss": d_epoch, "inv_temp": inv_temp})
                tr.set_postfix(g_loss="{0:.4f}".format(g_epoch), d_loss="{0:.4f}".format(d_epoch))

        if training_log:
            logger.info("training finished: %s", training_log[-1])
        return training_log

    def state_arrays(self):
        return {name: tensor.detach().cpu().numpy() for name, tensor in self.state_dict().items()}

    def load_state_arrays(self, arrays):
        state = {name: torch.from_numpy(np.asarray(value)) for name, value in arrays.items()}
        self.load_state_dict(state)
