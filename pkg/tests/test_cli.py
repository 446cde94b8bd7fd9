import os

import numpy as np
import pytest

from src.cli import build_parser, main
from src.cli.main import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE
from src.cli.parser import overrides, parse_int_list
from src.config import VERSION
from src.errors import UsageError
from src.model import load_checkpoint
from src.synthdata import read_dataset, read_tensor

DESK_SETTINGS = """\
data.steps=40
model.dim=8
model.enc_depth=1
model.lead_hidden=4
pretrain.steps=2
pretrain.warmup_steps=1
pretrain.eval_every=2
pretrain.val_batches=1
pretrain.batch_size=2
finetune.steps=2
finetune.warmup_steps=1
finetune.eval_every=2
finetune.val_batches=1
finetune.batch_size=2
rolling.steps=1
rolling.eval_every=1
rolling.val_batches=1
rolling.n_max=2
forecast.workers=2
"""


class TestUsage:
    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK
        assert "gen-data" in capsys.readouterr().out

    def test_subcommand_help_lists_units(self, capsys):
        assert main(["finetune", "--help"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "--lead-hours" in out and "hours" in out

    def test_pretrain_help_lists_stage(self, capsys):
        assert main(["pretrain", "--help"]) == EXIT_OK
        assert "--stage" in capsys.readouterr().out

    def test_pretrain_is_stage_one(self, capsys):
        assert main(["pretrain", "--stage", "2", "--data", "d", "--ckpt-out", "o"]) == EXIT_USAGE
        assert "--stage" in capsys.readouterr().err
        assert build_parser().parse_args(["pretrain", "--data", "d", "--ckpt-out", "o"]).stage == 1

    def test_unknown_flag(self, capsys):
        assert main(["theory", "--bogus"]) == EXIT_USAGE
        assert "--bogus" in capsys.readouterr().err

    def test_unknown_command(self):
        assert main(["forecast"]) == EXIT_USAGE

    def test_missing_command(self):
        assert main([]) == EXIT_USAGE

    def test_bad_list(self, tmp_path):
        with pytest.raises(UsageError):
            parse_int_list("6,x", "--comp")

    def test_overrides_map_stage_flags(self):
        args = build_parser().parse_args(["finetune", "--stage", "3", "--data", "d", "--ckpt-out", "o", "--steps", "5"])
        assert overrides(args, "rolling") == {"rolling.steps": 5}

    def test_freeze_steps_flag(self):
        args = build_parser().parse_args(["finetune", "--data", "d", "--ckpt-out", "o", "--freeze-steps", "7"])
        assert overrides(args, "finetune") == {"finetune.freeze_steps": 7}

    def test_missing_dataset_is_runtime_error(self, tmp_path):
        code = main(["pretrain", "--data", str(tmp_path / "absent"), "--ckpt-out", str(tmp_path / "p")])
        assert code == EXIT_RUNTIME

    def test_bad_config_is_runtime_error(self, tmp_path):
        path = tmp_path / "bad.kv"
        path.write_text("model.nope=1\n", encoding="utf-8")
        assert main(["--config", str(path), "theory", "--no-slope"]) == EXIT_RUNTIME


def test_theory_command(tmp_path, read_report):
    report = str(tmp_path / "reports" / "theory.csv")
    rates = str(tmp_path / "reports" / "rates.csv")
    code = main([
        "--log-level", "WARNING", "theory", "--d", "16", "--k", "4", "--n", "32", "--trials", "3", "--seed", "2",
        "--report", report, "--rate-report", rates,
    ])
    assert code == EXIT_OK
    header, rows = read_report(report)
    assert header["version"] == VERSION and header["command"] == "theory" and header["theory.d"] == "16"
    assert len(rows) == 3
    assert "slope" in read_report(rates)[1].columns


class TestPipeline:
    @pytest.fixture
    def workspace(self, tmp_path):
        settings = tmp_path / "desk.kv"
        settings.write_text(DESK_SETTINGS, encoding="utf-8")
        paths = {name: str(tmp_path / name) for name in ("data", "pre", "f6", "f24", "r6", "reports", "fields")}
        paths["config"] = str(settings)
        return paths

    def _run(self, workspace, *argv):
        return main(["--config", workspace["config"], "--log-level", "WARNING", *argv])

    def _report(self, workspace, name):
        return os.path.join(workspace["reports"], name)

    def test_end_to_end(self, workspace, read_report):
        w = workspace
        assert self._run(w, "gen-data", "--out", w["data"], "--seed", "3") == EXIT_OK
        manifest, states = read_dataset(w["data"])
        assert manifest.count == 40 and manifest.seed == 3

        assert self._run(w, "pretrain", "--data", w["data"], "--ckpt-out", w["pre"],
                         "--report", self._report(w, "pretrain.csv")) == EXIT_OK
        pre = load_checkpoint(w["pre"])
        assert (pre.stage, pre.step, pre.config.dim) == (1, 2, 8)
        header, _ = read_report(self._report(w, "pretrain.csv"))
        assert header["version"] == VERSION and header["pretrain.steps"] == "2"

        assert self._run(w, "finetune", "--data", w["data"], "--ckpt-in", w["pre"], "--ckpt-out", w["f6"]) == EXIT_OK
        assert self._run(w, "finetune", "--data", w["data"], "--ckpt-in", w["pre"], "--ckpt-out", w["f24"],
                         "--lead-hours", "24") == EXIT_OK
        assert load_checkpoint(w["f24"]).lead_hours == 24
        assert self._run(w, "finetune", "--stage", "3", "--data", w["data"], "--ckpt-in", w["f6"],
                         "--ckpt-out", w["r6"]) == EXIT_OK
        assert load_checkpoint(w["r6"]).stage == 3

        assert self._run(w, "evaluate", "--data", w["data"], "--ckpt", w["r6"], "--horizons", "2",
                         "--report", self._report(w, "eval.csv")) == EXIT_OK
        scores = read_report(self._report(w, "eval.csv"))[1]
        assert list(scores.columns) == ["variable", "lead_hours", "rmse", "acc"]
        assert list(scores["lead_hours"]) == [6, 6, 12, 12]

        assert self._run(w, "rollout", "--data", w["data"], "--ckpt", w["f6"], "--comp", "6,6",
                         "--out", w["fields"], "--report", self._report(w, "rollout.csv")) == EXIT_OK
        start = states[34].time
        for hours in (6, 12):
            field = read_tensor(os.path.join(w["fields"], f"t{start + hours}.bgn"))
            assert field.shape == (2, 8, 16) and np.all(np.isfinite(field))
        assert len(read_report(self._report(w, "rollout.csv"))[1]) == 4

        assert self._run(w, "ensemble", "--data", w["data"], "--ckpt", w["f6"], "--ckpt", w["f24"],
                         "--target-hours", "24", "--report", self._report(w, "ensemble.csv")) == EXIT_OK
        ensemble = read_report(self._report(w, "ensemble.csv"))[1]
        assert sorted(set(ensemble["member"])) == ["24", "6+6+6+6", "ensemble"]

        assert self._run(w, "spectrum", "--data", w["data"], "--ckpt", w["pre"],
                         "--report", self._report(w, "spectrum.csv")) == EXIT_OK
        spectrum = read_report(self._report(w, "spectrum.csv"))[1]
        assert list(spectrum["top_percent"]) == [0.1, 0.2, 1.0, 5.0, 100.0]
        assert spectrum["energy"].iloc[-1] == pytest.approx(1.0)

    def test_wrong_stage_order(self, workspace):
        w = workspace
        assert self._run(w, "gen-data", "--out", w["data"]) == EXIT_OK
        assert self._run(w, "pretrain", "--data", w["data"], "--ckpt-out", w["pre"]) == EXIT_OK
        assert self._run(w, "finetune", "--stage", "3", "--data", w["data"], "--ckpt-in", w["pre"],
                         "--ckpt-out", w["r6"]) == EXIT_RUNTIME
        assert self._run(w, "finetune", "--stage", "3", "--data", w["data"], "--ckpt-out", w["r6"]) == EXIT_RUNTIME

    def test_unreachable_ensemble(self, workspace):
        w = workspace
        assert self._run(w, "gen-data", "--out", w["data"]) == EXIT_OK
        assert self._run(w, "finetune", "--data", w["data"], "--ckpt-out", w["f24"], "--lead-hours", "24") == EXIT_OK
        assert self._run(w, "ensemble", "--data", w["data"], "--ckpt", w["f24"], "--target-hours", "30") == EXIT_RUNTIME

    @pytest.mark.slow
    def test_reports_are_reproducible(self, workspace):
        w = workspace
        assert self._run(w, "gen-data", "--out", w["data"]) == EXIT_OK
        for name in ("a.csv", "b.csv"):
            assert self._run(w, "pretrain", "--data", w["data"], "--ckpt-out", w["pre"],
                             "--report", self._report(w, name)) == EXIT_OK
        with open(self._report(w, "a.csv"), "rb") as a, open(self._report(w, "b.csv"), "rb") as b:
            assert a.read() == b.read()
