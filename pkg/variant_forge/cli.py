"""
Command line entry point: python3 -m variant_forge <subcommand> ...

All randomness flows from --seed: every stage derives its own seed from it
under a fixed label, so running the stages one by one with the same --seed
reproduces `pipeline`.
"""

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .Experiments import (DEFAULT_MARKOV_ORDER, RESEARCH_QUESTIONS, ExperimentPlan, RunRecord, run_plan,
                          train_generator)
from .LogSplitter import BIAS_SETUPS, Bias, RandomRatio, SplitSpec, split
from .MCMC import DEFAULT_BURN_IN, DEFAULT_THINNING, MCMC, SampleSet, naive_sample
from .PetriNet import PlayoutConfig, enumerate_variants
from .Variants import variant_stats
from .errors import PlanError, VariantForgeError
from .generators import load_generator, save_generator
from .metrics import evaluate
from .report import fmt, read_records, runs_csv, write_report
from .utils.json_save_load import save_object
from .utils.net_loader import FORMATS, load_net
from .utils.seeding import derive_seed
from .utils.variant_files import read_sample_file, read_variants, write_sample_file, write_variants

logger = logging.getLogger(__name__)

# Exit codes
EXIT_OK = 0
EXIT_DOMAIN_ERROR = 1
EXIT_USAGE = 2


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """
    Provenance of one command: written with status "running" before the
    outputs are finalized and rewritten with status "complete" afterwards.
    """

    command: list
    base_seed: int
    config_hash: str = ""
    inputs: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    tool_version: str = __version__
    started: str = field(default_factory=now)
    finished: str = ""
    wall_ms: float = 0.0
    status: str = "running"

    def write(self, path):
        save_object(asdict(self), path)
        return path

    @classmethod
    def begin(cls, args, path, config=None, inputs=()):
        manifest = cls(command=list(args.argv), base_seed=args.seed)
        if config is not None:
            manifest.config_hash = hashlib.sha256(
                json.dumps(config, sort_keys=True, default=str).encode("utf-8")).hexdigest()
        manifest.inputs = {str(p): sha256_file(p) for p in inputs if p is not None and Path(p).is_file()}
        manifest._clock = time.perf_counter()
        manifest._path = path
        manifest.write(path)
        return manifest

    def complete(self, outputs=()):
        self.outputs = [str(p) for p in outputs]
        self.finished = now()
        self.wall_ms = round((time.perf_counter() - self._clock) * 1000.0, 1)
        self.status = "complete"
        return self.write(self._path)


def manifest_for_file(path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    return Path(f"{path}.manifest.json")


def manifest_for_dir(path):
    Path(path).mkdir(parents=True, exist_ok=True)
    return Path(path) / "manifest.json"


def split_kind(ratio=None, bias=None, observed_size=None):
    if (ratio is None) == (bias is None):
        raise PlanError("give exactly one of a split ratio or a bias setup")
    if bias is not None:
        return Bias(bias, observed_size)
    return RandomRatio(ratio, observed_size)


def generator_settings(args):
    """Training options given on the command line; unset GAN options keep their defaults"""
    if args.generator == "markov":
        return {"order": args.order, "smoothing": args.smoothing}
    names = ("epochs", "pretrain_epochs", "embedding_dim", "hidden_dim", "learning_rate",
             "adversarial_learning_rate", "batch_size", "temperature_schedule")
    return {name: getattr(args, name) for name in names if getattr(args, name, None) is not None}


def draw(gen, mode, k, seed, burn_in=DEFAULT_BURN_IN, thinning=DEFAULT_THINNING):
    if mode == "naive":
        return naive_sample(gen, k, seed)
    return MCMC(gen, k, burn_in=burn_in, thinning=thinning, seed=seed).sample()


def eval_row(sample_set, vs, heldout):
    result = evaluate(sample_set, vs, heldout)
    header = ("unique", "tp", "tp_u", "score", "rejected", "false_positives", "system", "heldout", "observed", "k")
    values = (result.unique_count, fmt(result.tp), fmt(result.tp_u), fmt(result.score),
              result.rejected, result.false_positives) + tuple(result.sizes)
    return result, ",".join(header) + "\n" + ",".join(str(v) for v in values) + "\n"


# Subcommands

def cmd_playout(args):
    manifest = RunManifest.begin(args, manifest_for_file(args.out), vars_config(args), [args.net])
    net = load_net(args.net, format=args.format)
    vs = enumerate_variants(net, PlayoutConfig(max_variant_length=args.max_length))
    write_variants(vs, args.out)
    count, alphabet, mu, mean = variant_stats(vs)
    logger.info("%s: |V_S|=%d |A|=%d mu=%d mean=%.2f", net.name, count, alphabet, mu, mean)
    manifest.complete([args.out])


def cmd_split(args):
    out = Path(args.out)
    manifest = RunManifest.begin(args, manifest_for_dir(out), vars_config(args), [args.variants])
    vs = read_variants(args.variants)
    spec = SplitSpec(split_kind(args.ratio, args.bias, args.observed_size),
                     derive_seed(args.seed, "split"), enforce_mu=not args.no_mu)
    result = split(vs, spec, system=Path(args.variants).stem)
    paths = [write_variants(result.observed, out / "observed.txt"),
             write_variants(result.heldout, out / "heldout.txt")]
    sidecar = dict(result.stats(), spec=spec.to_dict(), forced=[list(v) for v in result.forced])
    paths.append(save_object(sidecar, out / "split.json"))
    manifest.complete(paths)


def cmd_train(args):
    manifest = RunManifest.begin(args, manifest_for_file(args.out), vars_config(args), [args.log])
    log = read_variants(args.log)
    gen = train_generator(log, args.generator, args.beta, derive_seed(args.seed, "train"),
                          generator_settings(args), verbose=args.verbose > 0)
    save_generator(gen, args.out)
    manifest.complete([args.out])


def cmd_sample(args):
    manifest = RunManifest.begin(args, manifest_for_file(args.out), vars_config(args), [args.checkpoint])
    gen = load_generator(args.checkpoint)
    sample_set = draw(gen, args.mode, args.k, derive_seed(args.seed, "sample"), args.burn_in, args.thin)
    write_sample_file(sample_set.frequency, sample_set.rejected, args.out)
    metadata = dict(sample_set.metadata, draws=sample_set.draws, rejected=sample_set.rejected,
                    unique=len(sample_set.frequency))
    sidecar = save_object(metadata, f"{args.out}.json")
    manifest.complete([args.out, sidecar])


def cmd_eval(args):
    inputs = [args.sampled, args.system, args.heldout]
    frequency, rejected = read_sample_file(args.sampled)
    sample_set = SampleSet(sum(frequency.values()) + rejected, rejected, dict(frequency))
    _, text = eval_row(sample_set, read_variants(args.system), read_variants(args.heldout))
    if args.out is None:
        sys.stdout.write(text)
        return
    manifest = RunManifest.begin(args, manifest_for_file(args.out), vars_config(args), inputs)
    Path(args.out).write_text(text, encoding="utf-8")
    manifest.complete([args.out])


def cmd_sweep(args):
    if args.plan is not None:
        plan = ExperimentPlan.from_json(args.plan)
    else:
        plan = ExperimentPlan.default(args.rq)
    overrides = {}
    if args.generator is not None:
        overrides["generator"] = args.generator
    if args.seed_given:
        overrides["base_seed"] = args.seed
    if overrides:
        plan = ExperimentPlan.from_dict(dict(plan.to_dict(), **overrides))

    manifest = RunManifest.begin(args, manifest_for_dir(args.out), plan.to_dict(), [args.plan])
    manifest.base_seed = plan.base_seed
    records = run_plan(plan, jobs=args.jobs, verbose=args.verbose > 0)
    paths = write_report(records, args.out, squares_only=plan.squares_only)
    paths.append(save_object(plan.to_dict(), Path(args.out) / "plan.json"))
    manifest.complete(paths)


def cmd_report(args):
    source = Path(args.input) / "records.json" if Path(args.input).is_dir() else Path(args.input)
    manifest = RunManifest.begin(args, manifest_for_dir(args.out), vars_config(args), [source])
    paths = write_report(read_records(source), args.out, squares_only=args.squares_only)
    manifest.complete(paths)


def cmd_stats(args):
    if args.net is not None:
        vs = enumerate_variants(load_net(args.net, format=args.format),
                                PlayoutConfig(max_variant_length=args.max_length))
    else:
        vs = read_variants(args.variants)
    count, alphabet, mu, mean = variant_stats(vs)
    row = {"alphabet": alphabet, "variants": count, "max_length": mu, "mean_length": round(mean, 2)}
    if args.observed is not None and args.heldout is not None:
        observed, heldout = read_variants(args.observed), read_variants(args.heldout)
        row.update(observed_size=len(observed), observed_mean=round(observed.mean_length(), 2),
                   heldout_size=len(heldout), heldout_mean=round(heldout.mean_length(), 2))
    sys.stdout.write(",".join(row) + "\n" + ",".join(str(v) for v in row.values()) + "\n")


NoneType = type(None)
PIPELINE_TYPES = {
    "net": str, "format": (str, NoneType), "ratio": (int, float, NoneType), "bias": (str, NoneType),
    "observed_size": (int, NoneType), "enforce_mu": bool, "generator": str, "beta": (int, float),
    "generator_settings": dict, "k": int, "mode": str, "burn_in": int, "thinning": int, "seed": int,
    "max_variant_length": int,
}


@dataclass(frozen=True)
class PipelineConfig:
    """
    One end-to-end run: playout -> split -> train -> sample -> evaluate.
    Exactly one of ratio and bias selects the split.
    """

    net: str
    format: str = None
    ratio: float = None
    bias: str = None
    observed_size: int = None
    enforce_mu: bool = True
    generator: str = "gan"
    beta: float = 100.0
    generator_settings: dict = field(default_factory=dict)
    k: int = 10_000
    mode: str = "naive"
    burn_in: int = DEFAULT_BURN_IN
    thinning: int = DEFAULT_THINNING
    seed: int = 0
    max_variant_length: int = PlayoutConfig().max_variant_length

    def __post_init__(self):
        for name, kinds in PIPELINE_TYPES.items():
            value = getattr(self, name)
            if kinds is not bool and isinstance(value, bool) or not isinstance(value, kinds):
                raise PlanError(f"pipeline entry {name!r} has the wrong type: {value!r}")
        if self.generator not in ("gan", "markov"):
            raise PlanError(f"unknown generator {self.generator!r}")
        if self.mode not in ("naive", "mh"):
            raise PlanError(f"unknown sampling mode {self.mode!r}")
        if self.k < 1:
            raise PlanError(f"k must be positive, got {self.k}")
        if self.burn_in < 0 or self.thinning < 1:
            raise PlanError("burn_in must be >= 0 and thinning >= 1")
        if self.ratio is None and self.bias is None:
            object.__setattr__(self, "ratio", 0.7)

    @classmethod
    def from_json(cls, path):
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as ex:
            raise PlanError(f"{path} is not valid JSON: {ex}") from None
        if not isinstance(d, dict):
            raise PlanError(f"{path} must hold a JSON object")
        unknown = sorted(set(d) - {f.name for f in fields(cls)})
        if unknown:
            raise PlanError(f"unknown pipeline keys: {unknown}")
        if "net" not in d:
            raise PlanError("a pipeline config needs a 'net' entry")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


def pipeline(config, out_dir, verbose=False):
    """
    Runs the five stages with the seeds the single subcommands derive from
    config.seed and writes their artifacts plus runs.csv. A failing stage
    aborts the run; its name is attached to the error as `stage`.
    """

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stage = "playout"
    try:
        net = load_net(config.net, format=config.format)
        vs = enumerate_variants(net, PlayoutConfig(max_variant_length=config.max_variant_length))
        write_variants(vs, out_dir / "variants.txt")

        stage = "split"
        spec = SplitSpec(split_kind(config.ratio, config.bias, config.observed_size),
                         derive_seed(config.seed, "split"), enforce_mu=config.enforce_mu)
        result = split(vs, spec, system=net.name)
        write_variants(result.observed, out_dir / "observed.txt")
        write_variants(result.heldout, out_dir / "heldout.txt")

        stage = "train"
        train_seed = derive_seed(config.seed, "train")
        gen = train_generator(result.observed, config.generator, config.beta, train_seed,
                              config.generator_settings, verbose=verbose)
        save_generator(gen, out_dir / "generator.json")

        stage = "sample"
        sample_seed = derive_seed(config.seed, "sample")
        sample_set = draw(gen, config.mode, config.k, sample_seed, config.burn_in, config.thinning)
        write_sample_file(sample_set.frequency, sample_set.rejected, out_dir / "samples.txt")

        stage = "eval"
        evaluation = evaluate(sample_set, vs, result.heldout)
    except VariantForgeError as ex:
        ex.stage = stage
        logger.error("pipeline stage %s failed: %s", stage, ex.qualified())
        raise

    record = RunRecord(
        system=net.name, rq="pipeline", setup=spec.label, beta=float(config.beta), replicate=0,
        k=config.k, mode=config.mode, generator=config.generator, seed=sample_seed,
        split_seed=spec.seed, train_seed=train_seed, system_size=len(vs),
        system_max_length=vs.max_length, result=evaluation,
        sample_metadata=dict(sample_set.metadata))
    (out_dir / "runs.csv").write_text(runs_csv([record]), encoding="utf-8")
    return [record]


def cmd_pipeline(args):
    config = PipelineConfig.from_json(args.config)
    if args.seed_given:
        config = PipelineConfig(**dict(config.to_dict(), seed=args.seed))
    manifest = RunManifest.begin(args, manifest_for_dir(args.out), config.to_dict(), [args.config])
    manifest.base_seed = config.seed
    pipeline(config, args.out, verbose=args.verbose > 0)
    out = Path(args.out)
    manifest.complete([out / name for name in (
        "variants.txt", "observed.txt", "heldout.txt", "generator.json", "samples.txt", "runs.csv")])


def positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {text}")
    return value


def vars_config(args):
    return {key: value for key, value in vars(args).items() if key not in ("func", "argv", "verbose", "jobs")}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="variant_forge",
        description="Petri net variant languages, generator training and generalization sweeps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    common.add_argument("--jobs", type=positive_int, default=os.cpu_count() or 1, help="worker processes")
    common.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")

    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, summary, out_required=True):
        p = sub.add_parser(name, help=summary, parents=[common])
        p.add_argument("--out", required=out_required, default=None)
        p.set_defaults(func=func)
        return p

    p = add("playout", cmd_playout, "enumerate the variant language of a net")
    p.add_argument("--net", required=True, help="net file, or a name resolved in $VF_DATA_DIR")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--max-length", type=int, default=PlayoutConfig().max_variant_length)

    p = add("split", cmd_split, "split a variant file into observed and held-out sets")
    p.add_argument("--variants", required=True)
    p.add_argument("--ratio", type=float)
    p.add_argument("--bias", choices=BIAS_SETUPS)
    p.add_argument("--observed-size", type=int)
    p.add_argument("--no-mu-constraint", dest="no_mu", action="store_true",
                   help="do not force a maximum-length variant into L+")

    p = add("train", cmd_train, "train a generator on an observed variant file")
    p.add_argument("--log", required=True)
    p.add_argument("--generator", choices=("gan", "markov"), default="gan")
    p.add_argument("--beta", type=float, default=100.0)
    p.add_argument("--epochs", type=int)
    p.add_argument("--pretrain-epochs", type=int)
    p.add_argument("--embedding-dim", type=int)
    p.add_argument("--hidden-dim", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--adversarial-learning-rate", type=float)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--temperature-schedule", choices=("exponential", "linear"))
    p.add_argument("--order", type=int, default=DEFAULT_MARKOV_ORDER)
    p.add_argument("--smoothing", type=float, default=0.0)

    p = add("sample", cmd_sample, "draw k samples from a generator checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--mode", choices=("naive", "mh"), default="naive")
    p.add_argument("--k", type=positive_int, required=True)
    p.add_argument("--burn-in", type=non_negative_int, default=DEFAULT_BURN_IN)
    p.add_argument("--thin", type=positive_int, default=DEFAULT_THINNING)

    p = add("eval", cmd_eval, "score a sample file against V_S and V_u", out_required=False)
    p.add_argument("--sampled", required=True)
    p.add_argument("--system", required=True)
    p.add_argument("--heldout", required=True)

    p = add("sweep", cmd_sweep, "run a research-question sweep")
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--plan")
    source.add_argument("--rq", choices=RESEARCH_QUESTIONS)
    p.add_argument("--generator", choices=("gan", "markov"))

    p = add("report", cmd_report, "rebuild the result files from records.json")
    p.add_argument("--in", dest="input", required=True, help="sweep directory or records.json")
    p.add_argument("--squares-only", action="store_true")

    p = add("pipeline", cmd_pipeline, "playout, split, train, sample and evaluate in one go")
    p.add_argument("--config", required=True)

    p = add("stats", cmd_stats, "variant-set statistics", out_required=False)
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument("--net")
    source.add_argument("--variants")
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--max-length", type=int, default=PlayoutConfig().max_variant_length)
    p.add_argument("--observed")
    p.add_argument("--heldout")

    return parser


def main(argv=None):
    """
    Parses argv and runs one subcommand; returns the exit code.
    """

    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as ex:
        return EXIT_OK if ex.code in (0, None) else EXIT_USAGE

    args.argv = argv
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s")

    try:
        args.func(args)
    except VariantForgeError as ex:
        stage = getattr(ex, "stage", None)
        prefix = f"{stage} stage: " if stage else ""
        sys.stderr.write(f"error: {prefix}{ex.qualified()}\n")
        return EXIT_DOMAIN_ERROR
    except OSError as ex:
        sys.stderr.write(f"error: {ex}\n")
        return EXIT_DOMAIN_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
