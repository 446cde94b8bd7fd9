import argparse
import os
from typing import Dict, List, Optional, Tuple

import pandas as pd
from loguru import logger

from ..config import RunConfig, provenance
from ..errors import ConfigurationError, ContractError
from ..forecast import (
    Composition,
    enumerate_compositions,
    ensemble_forecast,
    evaluate,
    member_forecasts,
    prune,
    rollout,
)
from ..grid import rmse
from ..model import BaguanModel, Checkpoint, ModelConfig, attention_row, init_params, load_checkpoint, load_models
from ..model import save_checkpoint
from ..synthdata import DatasetManifest, FieldState, generate, read_dataset, write_dataset, write_tensor
from ..synthdata.storage import snapshot_file
from ..theory import attention_energy, run_experiment
from ..training import (
    StageConfig,
    TrainingData,
    finetune_stage2,
    finetune_stage3,
    pretrain_stage1,
    resume_state,
    run_mask_ratio_ablation,
)
from ..utils import DirectoryValidator, FileHandler
from .parser import parse_float_list, parse_int_list


def _save_report(frame: pd.DataFrame, path: Optional[str], run: RunConfig, command: str) -> None:
    if not path:
        return
    FileHandler.save_csv(
        frame,
        DirectoryValidator.ensure_parent_directory(path),
        f"Report written to {path}",
        f"Error writing report {path}:",
        provenance(run, command),
    )


def _load_data(data_dir: str, run: RunConfig) -> TrainingData:
    manifest, states = read_dataset(data_dir)
    return TrainingData.from_dataset(manifest, states, run.data.train_frac, run.data.val_frac)


def _check_geometry(model_cfg: ModelConfig, data: TrainingData, source: str) -> None:
    expected = (data.variables.V, data.grid.H, data.grid.W)
    found = (model_cfg.n_vars, model_cfg.height, model_cfg.width)
    if found != expected:
        raise ConfigurationError(f"{source} was built for V,H,W={found} but the dataset has {expected}")


def _test_state(data: TrainingData, index: int) -> FieldState:
    if not 0 <= index < len(data.test):
        raise ContractError(f"start index {index} outside the {len(data.test)}-snapshot test split")
    return data.test[index]


def _truth(data: TrainingData, start: int, hours: int) -> Optional[FieldState]:
    if hours % data.step_hours:
        return None
    index = start + hours // data.step_hours
    return data.test[index] if index < len(data.test) else None


def gen_data(args: argparse.Namespace, run: RunConfig) -> None:
    cfg = run.data
    manifest = DatasetManifest.build(
        h=cfg.h,
        w=cfg.w,
        n_vars=cfg.vars,
        count=cfg.steps,
        seed=cfg.seed,
        step_hours=cfg.step_hours,
        noise_std=cfg.noise_std,
        diffusion=cfg.diffusion,
        speeds=cfg.speeds,
        pressure_profile=cfg.pressure_profile,
    )
    write_dataset(args.out, manifest, generate(manifest))


def _finish_stage(args, run: RunConfig, command: str, result, model_cfg: ModelConfig, cfg: StageConfig) -> None:
    save_checkpoint(args.ckpt_out, result.checkpoint(model_cfg, cfg))
    _save_report(result.report.to_frame(), args.report, run, command)


def pretrain(args: argparse.Namespace, run: RunConfig) -> None:
    cfg = run.pretrain
    data = _load_data(args.data, run)
    model_cfg = data.model_config(run.model)
    params, state, start = None, None, 0
    if args.ckpt_in:
        checkpoint = load_checkpoint(args.ckpt_in)
        if checkpoint.stage != 1:
            raise ConfigurationError(f"pre-training cannot continue a stage-{checkpoint.stage} checkpoint")
        _check_geometry(checkpoint.config, data, args.ckpt_in)
        model_cfg = checkpoint.config
        params, state, start = resume_state(checkpoint)
        logger.info(f"Resuming pre-training at step {start}")
    result = pretrain_stage1(data, model_cfg, cfg, params=params, state=state, start_step=start)
    _finish_stage(args, run, "pretrain", result, model_cfg, cfg)


def _start_from(checkpoint: Checkpoint, cfg: StageConfig) -> Tuple[bool, Optional[object], int]:
    """(resuming, optimizer state, start step): same stage resumes, the previous stage starts fresh."""
    if checkpoint.stage == cfg.stage:
        _, state, start = resume_state(checkpoint)
        return True, state, start
    if checkpoint.stage == cfg.stage - 1:
        return False, None, 0
    raise ConfigurationError(f"stage {cfg.stage} cannot start from a stage-{checkpoint.stage} checkpoint")


def finetune(args: argparse.Namespace, run: RunConfig) -> None:
    cfg = run.finetune if args.stage == 2 else run.rolling
    data = _load_data(args.data, run)
    command = f"finetune --stage {args.stage}"

    if not args.ckpt_in:
        if args.stage == 3:
            raise ConfigurationError("stage 3 needs --ckpt-in with a stage-2 checkpoint")
        model_cfg = data.model_config(run.model)
        logger.info("Fine-tuning from scratch")
        result = finetune_stage2(init_params(model_cfg), data, model_cfg, cfg, freeze_encoder=False)
        _finish_stage(args, run, command, result, model_cfg, cfg)
        return

    checkpoint = load_checkpoint(args.ckpt_in)
    _check_geometry(checkpoint.config, data, args.ckpt_in)
    model_cfg = checkpoint.config
    if checkpoint.stage >= 2 and checkpoint.lead_hours != cfg.lead_hours:
        raise ConfigurationError(
            f"{args.ckpt_in} was fine-tuned for {checkpoint.lead_hours}h, not {cfg.lead_hours}h"
        )
    resuming, state, start = _start_from(checkpoint, cfg)
    if resuming:
        logger.info(f"Resuming stage {cfg.stage} at step {start}")
    if args.stage == 2:
        result = finetune_stage2(
            checkpoint.params, data, model_cfg, cfg, fresh_decoder=not resuming, state=state, start_step=start
        )
    else:
        result = finetune_stage3(checkpoint.params, data, model_cfg, cfg, state=state, start_step=start)
    _finish_stage(args, run, command, result, model_cfg, cfg)


def _load_forecasters(args, data: TrainingData) -> Dict[int, BaguanModel]:
    models = load_models(args.ckpt)
    for lead, model in models.items():
        _check_geometry(model.config, data, f"the {lead}h checkpoint")
    return models


def _write_fields(out_dir: Optional[str], data: TrainingData, states: List[FieldState]) -> None:
    if not out_dir:
        return
    DirectoryValidator.create_directory_if_not_exists(out_dir)
    for state in states:
        write_tensor(os.path.join(out_dir, snapshot_file(state.time)), data.norm.invert(state).values)
    logger.info(f"Wrote {len(states)} predicted fields to {out_dir}")


def _score_rows(data: TrainingData, label: str, steps: int, state: FieldState, truth: FieldState) -> List[dict]:
    predicted, observed = data.norm.invert(state), data.norm.invert(truth)
    return [
        {
            "member": label,
            "steps": steps,
            "valid_hours": state.time,
            "variable": name,
            "rmse": rmse(predicted, observed, data.grid, v),
        }
        for v, name in enumerate(data.variables.names)
    ]


def rollout_command(args: argparse.Namespace, run: RunConfig) -> None:
    data = _load_data(args.data, run)
    models = _load_forecasters(args, data)
    composition = Composition(tuple(parse_int_list(args.comp, "--comp")))
    x0 = _test_state(data, args.start)
    states = rollout(models, x0, composition, run.forecast.seed)
    logger.info(f"Rolled out {composition} from t={x0.time}h")
    _write_fields(args.out, data, states)

    rows = []
    for n, (state, hours) in enumerate(zip(states, composition.timestamps()), start=1):
        truth = _truth(data, args.start, hours)
        if truth is None:
            logger.warning(f"No test snapshot at +{hours}h; step {n} is not scored")
            continue
        rows.extend(_score_rows(data, str(composition), n, state, truth))
    _save_report(pd.DataFrame(rows), args.report, run, "rollout")


def ensemble_command(args: argparse.Namespace, run: RunConfig) -> None:
    data = _load_data(args.data, run)
    models = _load_forecasters(args, data)
    plan = prune(enumerate_compositions(args.target_hours, models), run.forecast.max_iterations)
    if not plan.members:
        raise ConfigurationError(
            f"no composition of {sorted(models)}h reaches {args.target_hours}h "
            f"within {run.forecast.max_iterations} applications"
        )
    logger.info(f"Ensemble of {len(plan)} members: {', '.join(str(m) for m in plan.members)}")
    x0 = _test_state(data, args.start)
    members = member_forecasts(models, x0, plan, run.forecast.seed, run.forecast.workers)
    mean = ensemble_forecast(models, x0, plan, members=members)
    _write_fields(args.out, data, [mean])

    truth = _truth(data, args.start, args.target_hours)
    if truth is None:
        logger.warning(f"No test snapshot at +{args.target_hours}h; the ensemble is not scored")
        return
    rows = []
    for member, state in zip(plan.members, members):
        rows.extend(_score_rows(data, str(member), len(member), state, truth))
    rows.extend(_score_rows(data, "ensemble", 0, mean, truth))
    _save_report(pd.DataFrame(rows), args.report, run, "ensemble")


def evaluate_command(args: argparse.Namespace, run: RunConfig) -> None:
    data = _load_data(args.data, run)
    models = _load_forecasters(args, data)
    scores = evaluate(models, data, args.horizons, run.forecast.seed)
    for row in scores.itertuples():
        logger.info(f"{row.variable} +{row.lead_hours}h: rmse {row.rmse:.4f}, acc {row.acc:.4f}")
    _save_report(scores, args.report, run, "evaluate")


def theory_command(args: argparse.Namespace, run: RunConfig) -> None:
    report = run_experiment(run.theory, fit_slope=not args.no_slope)
    for which in ("without", "power_law", "with_sigma", "with_gamma"):
        share = report.coverage(which)
        logger.info(f"Bound {which}: " + ("out of regime" if share is None else f"holds in {share:.3f} of trials"))
    _save_report(report.to_frame(), args.report, run, "theory")
    if report.rate_table:
        rate = pd.DataFrame(report.rate_table)
        rate["slope"] = report.slope
        _save_report(rate, args.rate_report, run, "theory")


def spectrum_command(args: argparse.Namespace, run: RunConfig) -> None:
    data = _load_data(args.data, run)
    checkpoint = load_checkpoint(args.ckpt)
    model_cfg = checkpoint.config
    _check_geometry(model_cfg, data, args.ckpt)
    layer = model_cfg.enc_depth - 1 if args.layer is None else args.layer
    if args.token == "center":
        token = model_cfg.center_token
    else:
        try:
            token = int(args.token)
        except ValueError:
            raise ConfigurationError(f"--token expects 'center' or an integer, got {args.token!r}") from None
    x = _test_state(data, args.start).values
    row = attention_row(checkpoint.params, model_cfg, layer, token, x, checkpoint.lead_hours)
    energy = attention_energy(row)
    logger.info(f"Top-1% attention energy of token {token} in block {layer}: {energy.at(1.0):.4f}")
    frame = energy.to_frame()
    frame.insert(0, "token", token)
    frame.insert(0, "layer", layer)
    _save_report(frame, args.report, run, "spectrum")


def ablate_command(args: argparse.Namespace, run: RunConfig) -> None:
    data = _load_data(args.data, run)
    model_cfg = data.model_config(run.model)
    ratios = parse_float_list(args.ratios, "--ratios")
    table = run_mask_ratio_ablation(data, model_cfg, run.pretrain, run.finetune, ratios)
    _save_report(table, args.report, run, "ablate")


HANDLERS = {
    "gen-data": gen_data,
    "pretrain": pretrain,
    "finetune": finetune,
    "rollout": rollout_command,
    "ensemble": ensemble_command,
    "evaluate": evaluate_command,
    "theory": theory_command,
    "spectrum": spectrum_command,
    "ablate": ablate_command,
}
