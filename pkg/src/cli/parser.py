import argparse
from typing import Any, Dict

from ..errors import UsageError

COMMANDS = ("gen-data", "pretrain", "finetune", "rollout", "ensemble", "evaluate", "theory", "spectrum", "ablate")

# dests of the form `<section>.<name>` are configuration overrides; `stage.` is the
# section of the training stage the command runs.
STAGE_SECTION = "stage"


class ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so `main` decides the exit code."""

    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _data_dir(parser: argparse.ArgumentParser, required: bool = True) -> None:
    parser.add_argument("--data", required=required, metavar="DIR", help="dataset directory written by gen-data")


def _models(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--ckpt", action="append", required=True, metavar="DIR",
        help="fine-tuned checkpoint directory; repeat once per lead time",
    )


def _report(parser: argparse.ArgumentParser, what: str) -> None:
    parser.add_argument("--report", metavar="CSV", help=f"write {what} to this CSV file")


def _stage_flags(parser: argparse.ArgumentParser) -> None:
    _data_dir(parser)
    parser.add_argument("--ckpt-in", metavar="DIR", help="checkpoint to resume or start from")
    parser.add_argument("--ckpt-out", required=True, metavar="DIR", help="checkpoint directory to write")
    parser.add_argument("--lead-hours", dest="stage.lead_hours", type=int, metavar="HOURS",
                        help="lead time of one model application, in hours")
    parser.add_argument("--steps", dest="stage.steps", type=int, metavar="INT", help="optimizer steps")
    parser.add_argument("--peak-lr", dest="stage.peak_lr", type=float, metavar="REAL",
                        help="peak learning rate (1/step)")
    parser.add_argument("--batch-size", dest="stage.batch_size", type=int, metavar="INT", help="pairs per step")
    parser.add_argument("--seed", dest="stage.seed", type=int, metavar="INT", help="stage seed")
    _report(parser, "the step,split,loss rows")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="baguan",
        description="Desk-scale Siamese masked pre-training, lead-time fine-tuning and forecast evaluation "
                    "on synthetic atmospheric fields, plus the ridge-regression theory lab.",
    )
    parser.add_argument("--config", metavar="FILE", help="UTF-8 key=value settings (dotted keys, e.g. model.dim=16)")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                        help="console log level (default: INFO)")
    commands = parser.add_subparsers(dest="command", metavar="COMMAND", title="commands", required=True)

    gen = commands.add_parser("gen-data", help="generate a synthetic advection-diffusion dataset")
    gen.add_argument("--out", required=True, metavar="DIR", help="output directory")
    gen.add_argument("--h", dest="data.h", type=int, metavar="INT", help="grid rows (latitudes)")
    gen.add_argument("--w", dest="data.w", type=int, metavar="INT", help="grid columns (longitudes)")
    gen.add_argument("--vars", dest="data.vars", type=int, metavar="INT", help="number of variables")
    gen.add_argument("--steps", dest="data.steps", type=int, metavar="INT", help="number of snapshots")
    gen.add_argument("--step-hours", dest="data.step_hours", type=int, metavar="HOURS",
                     help="time between snapshots, in hours")
    gen.add_argument("--seed", dest="data.seed", type=int, metavar="INT", help="generator seed")
    gen.add_argument("--noise", dest="data.noise_std", type=float, metavar="REAL",
                     help="std of the per-step Gaussian noise, in field units")
    gen.add_argument("--diffusion", dest="data.diffusion", type=float, metavar="REAL",
                     help="smoothing coefficient per step, in [0, 0.5]")

    pretrain = commands.add_parser("pretrain", help="stage 1: Siamese masked pre-training")
    _stage_flags(pretrain)
    pretrain.add_argument("--stage", type=int, choices=[1], default=1,
                          help="pre-training is stage 1 (default: 1); use finetune for stages 2 and 3")
    pretrain.add_argument("--mask-ratio", dest="stage.mask_ratio", type=float, metavar="REAL",
                          help="fraction of frame-2 tokens replaced by noise, in [0, 1]")
    pretrain.add_argument("--objective", dest="stage.objective", choices=["siamese", "mae"],
                          help="siamese keeps frame 1 visible; mae masks it fully")
    pretrain.add_argument("--loss-cells", dest="stage.loss_cells", choices=["masked", "all"],
                          help="grid cells scored by the reconstruction loss")

    finetune = commands.add_parser("finetune", help="stage 2 (fixed lead time) or stage 3 (rolling) fine-tuning")
    _stage_flags(finetune)
    finetune.add_argument("--stage", type=int, choices=[2, 3], default=2, help="fine-tuning stage (default: 2)")
    finetune.add_argument("--freeze-steps", dest="stage.freeze_steps", type=int, metavar="STEPS",
                          help="stage 2 from a pre-trained checkpoint: steps that update only the decoder and head")
    finetune.add_argument("--n-max", dest="stage.n_max", type=int, metavar="INT",
                          help="stage 3: longest rollout, in model applications")
    finetune.add_argument("--cadence", dest="stage.cadence", type=int, metavar="STEPS",
                          help="stage 3: steps between rollout-length increments")

    roll = commands.add_parser("rollout", help="autoregressive forecast along one composition")
    _data_dir(roll)
    _models(roll)
    roll.add_argument("--comp", required=True, metavar="HOURS,...", help="lead-time steps in hours, e.g. 6,6,6,6")
    roll.add_argument("--start", type=int, default=0, metavar="INDEX", help="test-split snapshot to start from")
    roll.add_argument("--seed", dest="forecast.seed", type=int, metavar="INT", help="frame-2 noise seed")
    roll.add_argument("--out", metavar="DIR", help="write each predicted field (physical units) as BGN1")
    _report(roll, "per-step, per-variable RMSE")

    ens = commands.add_parser("ensemble", help="mean of every composition reaching a target horizon")
    _data_dir(ens)
    _models(ens)
    ens.add_argument("--target-hours", type=int, required=True, metavar="HOURS", help="forecast horizon, in hours")
    ens.add_argument("--max-iters", dest="forecast.max_iterations", type=int, metavar="INT",
                     help="longest composition kept, in model applications")
    ens.add_argument("--start", type=int, default=0, metavar="INDEX", help="test-split snapshot to start from")
    ens.add_argument("--seed", dest="forecast.seed", type=int, metavar="INT", help="frame-2 noise seed")
    ens.add_argument("--workers", dest="forecast.workers", type=int, metavar="INT", help="member rollouts in parallel")
    ens.add_argument("--out", metavar="DIR", help="write the ensemble-mean field (physical units) as BGN1")
    _report(ens, "per-member and ensemble RMSE")

    ev = commands.add_parser("evaluate", help="RMSE and ACC per variable and lead time on the test split")
    _data_dir(ev)
    _models(ev)
    ev.add_argument("--horizons", type=int, default=1, metavar="INT",
                    help="score lead times dt, 2dt, ... N*dt of the shortest-lead model")
    ev.add_argument("--seed", dest="forecast.seed", type=int, metavar="INT", help="frame-2 noise seed")
    _report(ev, "the variable,lead_hours,rmse,acc rows")

    theory = commands.add_parser("theory", help="ridge regression with and without the denoising operator")
    theory.add_argument("--d", dest="theory.d", type=int, metavar="INT", help="input dimension")
    theory.add_argument("--k", dest="theory.k", type=int, metavar="INT", help="target subspace dimension (<= d/4)")
    theory.add_argument("--n", dest="theory.n", type=int, metavar="INT", help="fine-tuning samples per trial")
    theory.add_argument("--trials", dest="theory.trials", type=int, metavar="INT", help="Monte-Carlo trials")
    theory.add_argument("--seed", dest="theory.seed", type=int, metavar="INT", help="lab seed")
    theory.add_argument("--sigma", dest="theory.sigma", type=float, metavar="REAL", help="label noise std")
    theory.add_argument("--gamma", dest="theory.gamma", type=float, metavar="REAL",
                        help="denoising noise variance (default: median eigenvalue)")
    theory.add_argument("--lam", dest="theory.lam", type=float, metavar="REAL",
                        help="ridge penalty (default: 1/sqrt(n))")
    _report(theory, "one row per trial")
    theory.add_argument("--rate-report", metavar="CSV", help="write median errors per sample size to this CSV file")
    theory.add_argument("--no-slope", action="store_true", help="skip the error-rate fit over sample sizes")

    spectrum = commands.add_parser("spectrum", help="attention energy of one token in one encoder block")
    _data_dir(spectrum)
    spectrum.add_argument("--ckpt", required=True, metavar="DIR", help="checkpoint directory")
    spectrum.add_argument("--layer", type=int, metavar="INT", help="encoder block index (default: the last)")
    spectrum.add_argument("--token", default="center", metavar="center|INT", help="query token (default: center)")
    spectrum.add_argument("--start", type=int, default=0, metavar="INDEX", help="test-split snapshot to encode")
    _report(spectrum, "one row per top-k%% threshold")

    ablate = commands.add_parser("ablate", help="masking-ratio ablation against a from-scratch baseline")
    _data_dir(ablate)
    ablate.add_argument("--ratios", default="0.5,0.75,0.95,0.99", metavar="REAL,...",
                        help="masking ratios to pre-train at (default: 0.5,0.75,0.95,0.99)")
    ablate.add_argument("--objective", dest="pretrain.objective", choices=["siamese", "mae"],
                        help="pre-training objective")
    _report(ablate, "one row per ratio plus the scratch baseline")
    return parser


def overrides(args: argparse.Namespace, stage_section: str = "") -> Dict[str, Any]:
    """Configuration overrides given on the command line, keyed `section.name`."""
    found: Dict[str, Any] = {}
    for dest, value in sorted(vars(args).items()):
        if "." not in dest or value is None:
            continue
        section, _, name = dest.partition(".")
        if section == STAGE_SECTION:
            section = stage_section
        found[f"{section}.{name}"] = value
    return found


def parse_int_list(text: str, flag: str) -> list:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated integers, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag} is empty")
    return values


def parse_float_list(text: str, flag: str) -> list:
    try:
        values = [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None
    if not values:
        raise UsageError(f"{flag} is empty")
    return values
