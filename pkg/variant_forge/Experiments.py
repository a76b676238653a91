import hashlib
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from tqdm import tqdm

from .LogSplitter import BIAS_SETUPS, Bias, RandomRatio, SplitSpec, split
from .MCMC import DEFAULT_BURN_IN, DEFAULT_THINNING, MCMC, SampleSet
from .MarkovGenerator import markov_train
from .PetriNet import PlayoutConfig, enumerate_variants
from .errors import PlanError, VariantForgeError
from .generators import sample
from .metrics import EvalResult, evaluate
from .utils.net_loader import load_net
from .utils.seeding import derive_seed

logger = logging.getLogger(__name__)

RESEARCH_QUESTIONS = ("RQ1", "RQ2", "RQ3")
GENERATORS = ("gan", "markov")
MODES = ("naive", "mh")

# Published grids
DEFAULT_SYSTEMS = ("pb_system_1_5", "pb_system_2_4", "pb_system_3_6", "pb_system_4_1", "pb_system_5_3")
DEFAULT_K_GRID = (1000,) + tuple(range(2000, 20001, 2000))
DEFAULT_RATIO_GRID = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7)
DEFAULT_BIAS_GRID = ("baseline",) + BIAS_SETUPS
DEFAULT_BETA_GRID = (100.0, 1000.0)
DEFAULT_EVAL_K = 10_000
BASELINE_RATIO = 0.7
DEFAULT_MARKOV_ORDER = 2

# |L+| per published system and split ratio; four rows differ from round-half-up
PUBLISHED_OBSERVED_SIZES = {
    "pb_system_1_5": {0.1: 68, 0.2: 136, 0.3: 204, 0.4: 272, 0.5: 340, 0.6: 408, 0.7: 476},
    "pb_system_2_4": {0.1: 51, 0.2: 102, 0.3: 152, 0.4: 203, 0.5: 254, 0.6: 304, 0.7: 355},
    "pb_system_3_6": {0.1: 78, 0.2: 156, 0.3: 234, 0.4: 312, 0.5: 390, 0.6: 468, 0.7: 546},
    "pb_system_4_1": {0.1: 69, 0.2: 138, 0.3: 207, 0.4: 275, 0.5: 344, 0.6: 413, 0.7: 481},
    "pb_system_5_3": {0.1: 42, 0.2: 83, 0.3: 125, 0.4: 166, 0.5: 208, 0.6: 249, 0.7: 290},
}


def measure_execution_time(func):
    """
    Decorator returning (result, elapsed milliseconds) instead of the result.
    """

    def wrapper(*args, **kwargs):
        start_time = time.perf_counter()
        result = func(*args, **kwargs)
        return result, (time.perf_counter() - start_time) * 1000.0
    return wrapper


def _normalize_sizes(sizes):
    """
    {system: {ratio: |L+|}} with float ratios and int sizes; JSON plans give
    the ratios as strings.
    """

    if not isinstance(sizes, dict) or not all(isinstance(v, dict) for v in sizes.values()):
        raise PlanError("observed_sizes must map systems to {ratio: size} objects")
    normalized = {}
    for system, by_ratio in sizes.items():
        normalized[system] = {}
        for ratio, size in by_ratio.items():
            try:
                ratio = float(ratio)
            except (TypeError, ValueError):
                raise PlanError(f"observed_sizes[{system!r}]: {ratio!r} is not a ratio") from None
            if isinstance(size, bool) or not isinstance(size, int) or size < 1:
                raise PlanError(f"observed_sizes[{system!r}][{ratio}] must be a positive integer, got {size!r}")
            normalized[system][ratio] = size
    return normalized


def _check_markov_settings(settings):
    order = settings.get("order", DEFAULT_MARKOV_ORDER)
    if isinstance(order, bool) or not isinstance(order, int) or order < 1:
        raise PlanError(f"markov order must be a positive integer, got {order!r}")
    smoothing = settings.get("smoothing", 0.0)
    if isinstance(smoothing, bool) or not isinstance(smoothing, (int, float)) or not smoothing >= 0.0:
        raise PlanError(f"markov smoothing must be a non-negative number, got {smoothing!r}")


@dataclass(frozen=True)
class ExperimentPlan:
    """
    One research-question sweep: systems x setups x betas x replicates, each
    evaluated at every k of the plan.

    RQ1 varies k on the 70/30 baseline split, RQ2 varies the split ratio and
    RQ3 the bias setup; RQ2 and RQ3 evaluate at eval_k only.
    """

    rq: str = "RQ1"
    systems: tuple = DEFAULT_SYSTEMS
    k_grid: tuple = DEFAULT_K_GRID
    ratio_grid: tuple = DEFAULT_RATIO_GRID
    bias_grid: tuple = DEFAULT_BIAS_GRID
    beta_grid: tuple = DEFAULT_BETA_GRID
    eval_k: int = DEFAULT_EVAL_K
    base_seed: int = 0
    replicates: int = 1
    generator: str = "gan"
    generator_settings: dict = field(default_factory=dict)
    mode: str = "naive"
    burn_in: int = DEFAULT_BURN_IN
    thinning: int = DEFAULT_THINNING
    nested_draws: bool = True
    record_timing: bool = False
    enforce_mu: bool = True
    squares_only: bool = False
    max_variant_length: int = PlayoutConfig().max_variant_length
    observed_sizes: dict = field(default_factory=lambda: _normalize_sizes(PUBLISHED_OBSERVED_SIZES))

    def __post_init__(self):
        for name in ("systems", "k_grid", "ratio_grid", "bias_grid", "beta_grid"):
            value = getattr(self, name)
            if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
                raise PlanError(f"{name} must be a list")
            object.__setattr__(self, name, tuple(value))
            if not getattr(self, name):
                raise PlanError(f"{name} must not be empty")
        object.__setattr__(self, "generator_settings", dict(self.generator_settings))
        object.__setattr__(self, "observed_sizes", _normalize_sizes(self.observed_sizes))

        if self.rq not in RESEARCH_QUESTIONS:
            raise PlanError(f"unknown research question {self.rq!r}; expected one of {RESEARCH_QUESTIONS}")
        if self.generator not in GENERATORS:
            raise PlanError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        if self.mode not in MODES:
            raise PlanError(f"unknown sampling mode {self.mode!r}; expected one of {MODES}")
        if any(int(k) != k or k < 1 for k in self.k_grid + (self.eval_k,)):
            raise PlanError("k values must be positive integers")
        if any(not 0.0 < r < 1.0 for r in self.ratio_grid):
            raise PlanError("split ratios must lie in (0, 1)")
        if any(setup not in DEFAULT_BIAS_GRID for setup in self.bias_grid):
            raise PlanError(f"bias setups must be among {DEFAULT_BIAS_GRID}")
        if any(not beta > 0 for beta in self.beta_grid):
            raise PlanError("betas must be positive")
        if self.replicates < 1:
            raise PlanError("replicates must be at least 1")
        if self.burn_in < 0 or self.thinning < 1:
            raise PlanError("burn_in must be >= 0 and thinning >= 1")
        allowed = self.allowed_settings()
        unknown = sorted(set(self.generator_settings) - allowed)
        if unknown:
            raise PlanError(f"unknown {self.generator} settings {unknown}; expected some of {sorted(allowed)}")
        if self.generator == "markov":
            _check_markov_settings(self.generator_settings)

    def allowed_settings(self):
        if self.generator == "markov":
            return {"order", "smoothing"}
        from .gan.utils import GeneratorConfig
        # beta and seed come from the grid and the job
        return {f.name for f in fields(GeneratorConfig)} - {"beta", "seed"}

    @classmethod
    def default(cls, rq):
        return cls(rq=rq)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise PlanError(f"unknown plan keys: {unknown}")
        if "rq" not in d:
            raise PlanError("a plan needs an 'rq' entry")
        try:
            return cls(**d)
        except TypeError as ex:
            raise PlanError(f"malformed plan: {ex}") from None

    @classmethod
    def from_json(cls, path):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as ex:
            raise PlanError(f"{path} is not valid JSON: {ex}") from None
        if not isinstance(d, dict):
            raise PlanError(f"{path} must hold a JSON object")
        return cls.from_dict(d)

    def to_dict(self):
        d = asdict(self)
        return {key: list(value) if isinstance(value, tuple) else value for key, value in d.items()}

    def plan_hash(self):
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    @property
    def k_values(self):
        return tuple(sorted(set(int(k) for k in self.k_grid))) if self.rq == "RQ1" else (int(self.eval_k),)

    def setups(self):
        """(setup name, split kind) pairs of this research question"""

        if self.rq == "RQ1":
            kind = RandomRatio(BASELINE_RATIO)
            return [(kind.label, kind)]
        if self.rq == "RQ2":
            return [(RandomRatio(r).label, RandomRatio(r)) for r in self.ratio_grid]
        return [(name, RandomRatio(BASELINE_RATIO) if name == "baseline" else Bias(name))
                for name in self.bias_grid]

    def sized(self, system, kind):
        """
        The split kind with the |L+| listed in observed_sizes for this system,
        if any. Bias setups take the size listed for the 70/30 ratio.
        """

        sizes = self.observed_sizes.get(system, {})
        if isinstance(kind, RandomRatio):
            size = sizes.get(float(kind.ratio))
            return kind if size is None else RandomRatio(kind.ratio, size)
        size = sizes.get(BASELINE_RATIO)
        return kind if size is None else Bias(kind.setup, size)

    def jobs(self):
        """One job per trained generator, in report order"""

        return [
            Job(system, setup, self.sized(system, kind), float(beta), replicate)
            for system in self.systems
            for setup, kind in self.setups()
            for beta in self.beta_grid
            for replicate in range(self.replicates)
        ]


@dataclass(frozen=True)
class Job:
    system: str
    setup: str
    kind: object
    beta: float
    replicate: int

    def split_seed(self, base_seed):
        # the split does not depend on beta, so both betas see the same L+
        return derive_seed(base_seed, "split", self.system, self.kind.label, self.replicate)

    def train_seed(self, base_seed):
        return derive_seed(base_seed, "train", self.system, self.setup, self.beta, self.replicate)

    def sample_seed(self, base_seed, k=None):
        labels = ("sample", self.system, self.setup, self.beta, self.replicate)
        return derive_seed(base_seed, *labels) if k is None else derive_seed(base_seed, *labels, k)


@dataclass(frozen=True)
class RunRecord:
    """
    One evaluated grid point with the seeds that reproduce it.
    A failed grid point has result None and an error message.
    """

    system: str
    rq: str
    setup: str
    beta: float
    replicate: int
    k: Optional[int]
    mode: str
    generator: str
    seed: Optional[int]
    split_seed: Optional[int] = None
    train_seed: Optional[int] = None
    system_size: Optional[int] = None
    system_max_length: Optional[int] = None
    result: Optional[EvalResult] = None
    wall_ms: Optional[float] = None
    sample_metadata: dict = field(default_factory=dict, compare=False)
    error: Optional[str] = None

    @property
    def failed(self):
        return self.error is not None

    def to_dict(self):
        d = asdict(self)
        d["result"] = self.result.to_dict() if self.result is not None else None
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("result") is not None:
            result = dict(d["result"])
            result["sizes"] = tuple(result["sizes"])
            d["result"] = EvalResult(**result)
        return cls(**d)


def train_generator(log, generator, beta, seed, settings=None, verbose=False):
    """
    Trains a generator of the given kind on L+.

    Markov settings are order and smoothing; the order is capped at the
    longest training variant. GAN settings are GeneratorConfig fields.
    """

    settings = dict(settings or {})
    if generator == "markov":
        try:
            order = min(int(settings.get("order", DEFAULT_MARKOV_ORDER)), log.max_length)
            smoothing = float(settings.get("smoothing", 0.0))
        except (TypeError, ValueError) as ex:
            raise PlanError(f"malformed markov settings {settings}: {ex}") from None
        return markov_train(log, order, smoothing)

    from .gan.utils import GeneratorConfig, train
    try:
        cfg = GeneratorConfig(beta=beta, seed=seed, **settings)
    except TypeError as ex:
        raise PlanError(f"unknown generator settings: {ex}") from None
    return train(log, cfg, verbose=verbose)


def draw_samples(gen, plan, job):
    """
    SampleSets for every k of the plan.

    With nested draws one stream (or one chain) of max(k) draws is taken and
    every k reads its prefix; otherwise each k has its own seed.
    """

    def one_stream(n, seed):
        if plan.mode == "naive":
            return sample(gen, n, seed), {"mode": "naive"}
        return MCMC(gen, n, burn_in=plan.burn_in, thinning=plan.thinning, seed=seed).run()

    samples = {}
    if plan.nested_draws:
        seed = job.sample_seed(plan.base_seed)
        draws, metadata = one_stream(max(plan.k_values), seed)
        for k in plan.k_values:
            samples[k] = (seed, SampleSet.from_draws(draws[:k], metadata))
    else:
        for k in plan.k_values:
            seed = job.sample_seed(plan.base_seed, k)
            draws, metadata = one_stream(k, seed)
            samples[k] = (seed, SampleSet.from_draws(draws, metadata))
    return samples


def run_job(job, vs, plan):
    """
    Split, train once, sample and evaluate every k of the plan for one job.
    Any error is returned as a single failed record; domain errors carry
    their module, others are tagged as experiments errors.
    """

    common = dict(system=job.system, rq=plan.rq, setup=job.setup, beta=job.beta,
                  replicate=job.replicate, mode=plan.mode, generator=plan.generator,
                  split_seed=job.split_seed(plan.base_seed),
                  train_seed=job.train_seed(plan.base_seed))
    try:
        spec = SplitSpec(job.kind, common["split_seed"], enforce_mu=plan.enforce_mu)
        result = split(vs, spec, system=job.system)
        gen, train_ms = measure_execution_time(train_generator)(
            result.observed, plan.generator, job.beta, common["train_seed"], plan.generator_settings)
        samples, sample_ms = measure_execution_time(draw_samples)(gen, plan, job)
        records = []
        for k, (seed, sample_set) in samples.items():
            evaluation = evaluate(sample_set, vs, result.heldout)
            records.append(RunRecord(
                k=k, seed=seed, system_size=len(vs), system_max_length=vs.max_length,
                result=evaluation, wall_ms=train_ms + sample_ms,
                sample_metadata=dict(sample_set.metadata), **common))
        return records
    except VariantForgeError as ex:
        logger.error("%s %s beta=%g replicate %d failed: %s",
                     job.system, job.setup, job.beta, job.replicate, ex.qualified())
        return [RunRecord(k=None, seed=None, error=ex.qualified(), **common)]
    except (ArithmeticError, LookupError, RuntimeError, TypeError, ValueError) as ex:
        message = f"[experiments] {type(ex).__name__}: {ex}"
        logger.exception("%s %s beta=%g replicate %d failed: %s",
                         job.system, job.setup, job.beta, job.replicate, message)
        return [RunRecord(k=None, seed=None, error=message, **common)]


def playout_systems(plan, data_dir=None):
    """
    Enumerates V_S once per system; systems that fail map to their error.
    """

    cfg = PlayoutConfig(max_variant_length=plan.max_variant_length)
    languages = {}
    for system in plan.systems:
        try:
            languages[system] = enumerate_variants(load_net(system, data_dir=data_dir), cfg)
        except VariantForgeError as ex:
            logger.error("playout of %s failed: %s", system, ex.qualified())
            languages[system] = ex
    return languages


def run_plan(plan, jobs=1, data_dir=None, verbose=False):
    """
    Runs every job of the plan and returns the RunRecords in plan order
    (system, setup, beta, replicate, k), whatever order the jobs finished in.

    :param jobs:    worker processes; 1 runs in-process
    """

    languages = playout_systems(plan, data_dir)
    work = plan.jobs()
    logger.info("%s: %d generators over %d systems, k in %s",
                plan.rq, len(work), len(plan.systems), list(plan.k_values))

    results = {}
    pending = []
    for index, job in enumerate(work):
        vs = languages[job.system]
        if isinstance(vs, VariantForgeError):
            results[index] = [RunRecord(
                system=job.system, rq=plan.rq, setup=job.setup, beta=job.beta,
                replicate=job.replicate, k=None, mode=plan.mode, generator=plan.generator,
                seed=None, error=vs.qualified())]
        else:
            pending.append((index, job, vs))

    if jobs > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as executor:
            futures = {executor.submit(run_job, job, vs, plan): index for index, job, vs in pending}
            for future in tqdm(as_completed(futures), total=len(futures), desc=plan.rq, disable=not verbose):
                results[futures[future]] = future.result()
    else:
        for index, job, vs in tqdm(pending, desc=plan.rq, disable=not verbose):
            results[index] = run_job(job, vs, plan)

    records = [record for index in sorted(results) for record in sorted(
        results[index], key=lambda r: -1 if r.k is None else r.k)]
    if not plan.record_timing:
        records = [replace(r, wall_ms=None) for r in records]
    failed = sum(1 for r in records if r.failed)
    if failed:
        logger.warning("%d of %d grid points failed", failed, len(records))
    return records
