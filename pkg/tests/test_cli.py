"""
End-to-end tests for the command line: outputs, manifests and exit codes.
"""

from __future__ import annotations

import csv
import math

import pytest

from robinkit.artifacts import read_field_binary
from robinkit.main import build_parser


def _without_manifest(payload):
    return {k: v for k, v in payload.items() if k != "manifest"}


def test_ball_green_value(run_cli):
    code, payload, stdout = run_cli(
        "kernel", "--type", "ball-green", "--n", "3", "--center", "0,0,0", "--radius", "1",
        "--x", "0.5,0,0", "--y", "0,0,0",
    )

    assert code == 0
    assert payload["value"] == pytest.approx(1.0 / (4.0 * math.pi), rel=1e-12)
    assert payload["type"] == "ball-green"
    assert stdout.startswith("ball-green = ")


def test_kernel_without_points_is_invalid_input(run_cli):
    code, payload, _ = run_cli("kernel", "--type", "fundamental")

    assert code == 2
    assert payload is None


@pytest.mark.parametrize("raw", ["1/0,0,0", "0,0/0,0"])
def test_zero_denominator_in_a_vector(run_cli, raw):
    code, payload, _ = run_cli("kernel", "--type", "fundamental", "--x", raw, "--y", "0,0,0")

    assert code == 2
    assert payload is None


def test_tangent_balls_slack(run_cli, config_path):
    code, payload, stdout = run_cli("verify", "--case", "cor2.5", "--config", str(config_path("two_tangent_balls.json")))

    assert code == 0
    assert payload["slack"] == pytest.approx(2.0, rel=1e-12)
    assert payload["holds"] is True
    assert "holds" in stdout


def test_manifest_is_attached(run_cli, config_path):
    config = str(config_path("two_tangent_balls.json"))
    code, payload, _ = run_cli("verify", "--case", "disjoint-balls", "--config", config, "--seed", "5")
    manifest = payload["manifest"]

    assert code == 0
    assert manifest["subcommand"] == "verify"
    assert manifest["parameters"]["seed"] == 5
    assert manifest["parameters"]["tol"] == 1e-8
    assert set(manifest["input_digests"]) == {config}
    assert manifest["wall_time_s"] >= 0.0


def test_outputs_are_deterministic(run_cli):
    argv = ("verify", "--case", "random-balls", "--count", "5", "--seed", "11")
    first = run_cli(*argv)
    second = run_cli(*argv)

    assert first[0] == second[0] == 0
    assert _without_manifest(first[1]) == _without_manifest(second[1])
    assert len(first[1]["reports"]) == 5


def test_mismatched_weights_exit_with_invalid_input(run_cli, config_path):
    code, payload, _ = run_cli("modulus", "--config", str(config_path("bad.json")))

    assert code == 2
    assert payload is None


def test_missing_config_file(run_cli, tmp_path):
    code, _, _ = run_cli("modulus", "--config", str(tmp_path / "missing.json"))

    assert code == 2


def test_unknown_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["kernel", "--type", "fundamental", "--bogus"])

    assert exc.value.code == 2


def test_grid_spacing_accepts_fractions(run_cli):
    code, payload, _ = run_cli(
        "kernel", "--type", "fundamental", "--x", "1,0,0", "--y", "0,0,0", "--grid-h", "1/32",
    )

    assert code == 0
    assert payload["manifest"]["parameters"]["grid_h"] == 0.03125


@pytest.mark.parametrize("raw", ["0", "-0.125", "one", "1/0"])
def test_bad_grid_spacing(run_cli, raw):
    code, payload, _ = run_cli("kernel", "--type", "fundamental", "--x", "1,0,0", "--y", "0,0,0", "--grid-h", raw)

    assert code == 2
    assert payload is None


def test_radius_of_the_center(run_cli):
    code, payload, _ = run_cli("radius", "--center", "0,0,0", "--radius", "2", "--point", "0,0,0")

    assert code == 0
    assert payload["radius"] == pytest.approx(2.0, rel=1e-12)
    assert payload["backend"] == "closed_form"


@pytest.mark.slow
def test_modulus_with_trace(run_cli, config_path, tmp_path):
    csv_path = tmp_path / "modulus.csv"
    code, payload, _ = run_cli("modulus", "--config", str(config_path("modulus_ball.json")), "--csv", str(csv_path))

    assert code == 0
    assert payload["M"] == pytest.approx(sum(sum(row) for row in payload["pair_terms"]))
    assert payload["trace"]["radii"] == [0.05, 0.025]
    with csv_path.open() as fh:
        assert next(csv.reader(fh)) == ["quantity", "value", "error"]


def test_search_writes_the_trace(run_cli, config_path, tmp_path):
    csv_path = tmp_path / "trace.csv"
    code, payload, _ = run_cli(
        "search", "--config", str(config_path("symmetric_pair_search.json")), "--iters", "50",
        "--csv", str(csv_path),
    )

    assert code == 0
    assert payload["seed"] == 42
    with csv_path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iteration", "objective", "value", "feasible"]
    assert len(rows) == len(payload["trace"]) + 1


def test_grid_solve_writes_the_field(run_cli, config_path, tmp_path):
    field_path = tmp_path / "field.bin"
    code, payload, _ = run_cli(
        "grid-solve", "--config", str(config_path("ball_domain.json")), "--point", "0,0,0",
        "--h", "1/8", "--field-out", str(field_path),
    )
    dims, _, h, _ = read_field_binary(field_path)

    assert code == 0
    assert payload["report"]["converged"] is True
    assert payload["h"] == 0.125
    assert dims == tuple(payload["shape"])
    assert h == 0.125
    assert payload["robin_radius"] == pytest.approx(1.0, rel=0.2)
