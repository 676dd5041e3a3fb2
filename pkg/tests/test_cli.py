"""Tests for the command line."""

import json

import pytest


class TestParser:
    """Tests for argument parsing."""

    def test_subcommands(self):
        from fieldgen.cli import COMMANDS, build_parser

        parser = build_parser()
        for command in COMMANDS:
            extra = {"fit": ["--model", "standard"], "recover": ["--model", "standard"], "compare": ["a.json"]}
            args = parser.parse_args([command, *extra.get(command, [])])
            assert args.command == command

    def test_analyze_arguments(self):
        from fieldgen.cli import build_parser

        args = build_parser().parse_args(["analyze", "runs/a", "runs/b", "--phase", "baseline", "--sign", "-1"])
        assert args.inputs == ["runs/a", "runs/b"]
        assert args.phase == "baseline" and args.sign == -1

    def test_simulate_arguments(self):
        from fieldgen.cli import build_parser

        args = build_parser().parse_args(["simulate", "--group", "90", "--baselines", "paths.csv", "--check-step"])
        assert args.baselines == "paths.csv" and args.check_step is True
        assert build_parser().parse_args(["simulate"]).check_step is False
        args = build_parser().parse_args(["fit", "--model", "impedance", "--baselines", "paths.csv"])
        assert args.baselines == "paths.csv"

    def test_fit_requires_model(self):
        from fieldgen.cli import build_parser

        with pytest.raises(SystemExit):
            build_parser().parse_args(["fit"])

    def test_unknown_phase_rejected(self):
        from fieldgen.cli import build_parser

        with pytest.raises(SystemExit):
            build_parser().parse_args(["analyze", "--phase", "pre"])


class TestExitCodes:
    """Tests for the error-code to exit-status mapping."""

    @pytest.mark.parametrize(
        "error, status",
        [
            (None, 0),
            ("config_error", 2),
            ("data_format", 3),
            ("audit_failed", 3),
            ("protocol_error", 3),
            ("not_found", 3),
            ("divergence", 4),
            ("numerical_error", 4),
            ("unexpected_error", 1),
        ],
    )
    def test_exit_code(self, error, status):
        from fieldgen.cli import exit_code
        from fieldgen.tools._core.base import ToolResult

        assert exit_code(ToolResult(success=error is None, error=error)) == status


class TestMain:
    """Tests for end-to-end invocations."""

    def test_audit_passes(self, capsys):
        from fieldgen.cli import main

        assert main(["audit", "--group", "45"]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["reports"][0]["trials"] == 548

    def test_bad_config_exits_with_two(self, capsys, tmp_path):
        from fieldgen.cli import main

        path = tmp_path / "config.json"
        path.write_text('{"field": {"alpha": -1}}')
        assert main(["audit", "--config", str(path)]) == 2
        line = json.loads(capsys.readouterr().err)
        assert line["error"] == "config_error"
        assert "field.alpha" in line["message"]

    def test_off_grid_group_exits_with_three(self, capsys):
        from fieldgen.cli import main

        assert main(["audit", "--group", "30"]) == 3
        assert json.loads(capsys.readouterr().err)["error"] == "invalid_input"

    def test_unschedulable_protocol_exits_with_three(self, capsys):
        from unittest.mock import patch

        from fieldgen.cli import main
        from fieldgen.core.exceptions import ProtocolError

        with patch("fieldgen.core.protocol._no_adjacent_repeats", side_effect=ProtocolError("no arrangement")):
            assert main(["audit", "--group", "45"]) == 3
        line = json.loads(capsys.readouterr().err)
        assert line == {"error": "protocol_error", "message": "no arrangement"}


class TestParallelMap:
    """Tests for order-preserving worker pools."""

    def test_serial(self):
        from fieldgen.utils.workers import parallel_map

        assert parallel_map(str, [3, 1, 2]) == ["3", "1", "2"]

    def test_processes_keep_input_order(self):
        from fieldgen.utils.workers import mapper

        items = list(range(20, 0, -1))
        assert mapper(2)(str, items) == [str(i) for i in items]
