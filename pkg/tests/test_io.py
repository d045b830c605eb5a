import copy
import json

import pytest

from miopt import Game, MIOProblem, eval_expr
from miopt.cli import main
from miopt.io import (SchemaError, game_from_dict, load, problem_from_dict,
                      save, serialize)
from .conftest import ABS_PROBLEM_JSON, QUAD_GAME_JSON


def test_load_problem_file(abs_problem_file):
    prob = load(abs_problem_file)
    assert isinstance(prob, MIOProblem)
    assert prob.dim == 1
    assert prob.name == "abs-pair"
    assert prob.n_objectives == 2
    assert len(prob.constraints) == 2
    assert prob.metadata["points_per_dim"] == 401
    assert eval_expr(prob.objectives[0].upper, [0.5]) == 1.5


def test_load_game_file(quad_game_file):
    game = load(quad_game_file)
    assert isinstance(game, Game)
    assert game.n_players == 2
    assert game.profile_dim == 2
    assert game.players[0].points_per_dim == 101


def test_unknown_field_named():
    d = copy.deepcopy(ABS_PROBLEM_JSON)
    d["extra_thing"] = 1
    with pytest.raises(SchemaError, match="extra_thing"):
        problem_from_dict(d)


def test_unknown_nested_field_named():
    d = copy.deepcopy(ABS_PROBLEM_JSON)
    d["objectives"][0]["midpoint"] = "u0"
    with pytest.raises(SchemaError, match="midpoint"):
        problem_from_dict(d)


def test_unknown_player_field_named():
    d = copy.deepcopy(QUAD_GAME_JSON)
    d["players"][1]["color"] = "blue"
    with pytest.raises(SchemaError, match="color"):
        game_from_dict(d)


def test_bad_expression_reports_path():
    d = copy.deepcopy(ABS_PROBLEM_JSON)
    d["objectives"][1]["lower"] = "abs(u0"
    with pytest.raises(SchemaError, match=r"objectives\[1\].lower"):
        problem_from_dict(d)


def test_invalid_interval_rejected_with_witness():
    d = copy.deepcopy(ABS_PROBLEM_JSON)
    d["objectives"][0] = {"lower": "u0", "upper": "0"}
    with pytest.raises(SchemaError, match="lower") as exc_info:
        problem_from_dict(d)
    # the message carries a concrete grid point where lower > upper
    assert "grid point" in str(exc_info.value)


def test_missing_required_field():
    d = copy.deepcopy(ABS_PROBLEM_JSON)
    del d["box"]
    with pytest.raises(SchemaError, match="box"):
        problem_from_dict(d)


def test_problem_round_trip_bit_exact(tmp_path, abs_problem_file):
    prob = load(abs_problem_file)
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    save(prob, str(out1))
    reloaded = load(str(out1))
    save(reloaded, str(out2))
    assert out1.read_text() == out2.read_text()
    # the original expression strings survive verbatim
    d = json.loads(out1.read_text())
    assert d["objectives"] == ABS_PROBLEM_JSON["objectives"]
    assert d["constraints"] == ABS_PROBLEM_JSON["constraints"]


def test_game_round_trip_bit_exact(tmp_path, quad_game_file):
    game = load(quad_game_file)
    out1 = tmp_path / "g1.json"
    out2 = tmp_path / "g2.json"
    save(game, str(out1))
    save(load(str(out1)), str(out2))
    assert out1.read_text() == out2.read_text()
    d = json.loads(out1.read_text())
    assert d["players"][0]["objectives"] == \
        QUAD_GAME_JSON["players"][0]["objectives"]


def test_serialize_without_sources():
    from .conftest import make_problem

    prob = make_problem(1, [("u0^2", "3*u0^2")], ["-u0"], [-1], [1])
    d = serialize(prob)
    reparsed = problem_from_dict(d)
    assert eval_expr(reparsed.objectives[0].upper, [0.5]) == 0.75


def test_tolerance_echo_and_override():
    d = copy.deepcopy(ABS_PROBLEM_JSON)
    d["tolerances"] = {"tau_act": 1e-4}
    prob = problem_from_dict(d)
    assert prob.tolerances.tau_act == 1e-4
    assert prob.tolerances.tau_feas == 1e-9
    assert serialize(prob)["tolerances"]["tau_act"] == 1e-4


def test_bad_tolerance_field():
    d = copy.deepcopy(ABS_PROBLEM_JSON)
    d["tolerances"] = {"tau_typo": 1e-4}
    with pytest.raises(SchemaError, match="tau_typo"):
        problem_from_dict(d)


def test_not_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(SchemaError):
        load(str(p))


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def test_cli_verify_holds(abs_problem_file, capsys):
    code = main(["verify", "--problem", abs_problem_file,
                 "--point", "0", "--concept", "weak-min"])
    assert code == 0
    assert "verify: holds" in capsys.readouterr().out


@pytest.fixture
def quad_problem_file(tmp_path):
    d = {"dim": 1, "name": "quad",
         "objectives": [{"lower": "u0^2", "upper": "3*u0^2"}],
         "box": {"lo": [-1], "hi": [1]}, "grid": {"points_per_dim": 401}}
    path = tmp_path / "quad.json"
    path.write_text(json.dumps(d))
    return str(path)


def test_cli_verify_fails(quad_problem_file, capsys):
    code = main(["verify", "--problem", quad_problem_file,
                 "--point", "1", "--concept", "weak-min"])
    assert code == 1
    assert "verify: fails" in capsys.readouterr().out


def test_cli_kkt_holds_at_minimum(abs_problem_file, tmp_path, capsys):
    report_path = tmp_path / "kkt.json"
    code = main(["kkt", "--problem", abs_problem_file, "--point", "0",
                 "--json", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["command"] == "kkt"
    assert report["verdict"] == "holds"
    assert report["residual"] <= 1e-9
    assert abs(sum(report["lambda"]) - 1.0) <= 1e-12
    assert set(report["config"]) == {"tolerances", "points_per_dim"}
    assert report["config"]["tolerances"]["tau_solver"] == 1e-8


def test_cli_kkt_fails_off_minimum(quad_problem_file, capsys):
    code = main(["kkt", "--problem", quad_problem_file, "--point", "0.5"])
    assert code == 1


def test_cli_bcq(abs_problem_file, capsys):
    assert main(["bcq", "--problem", abs_problem_file, "--point", "0"]) == 0
    out = capsys.readouterr().out
    assert "distance" in out


def test_cli_infeasible_point_is_usage_error(abs_problem_file, capsys):
    code = main(["bcq", "--problem", abs_problem_file, "--point", "-1.5"])
    assert code == 3
    assert "error:" in capsys.readouterr().err


def test_cli_missing_file(capsys):
    assert main(["bcq", "--problem", "/nope/missing.json", "--point", "0"]) == 3


def test_cli_wrong_model_kind(quad_game_file, capsys):
    assert main(["kkt", "--problem", quad_game_file, "--point", "0,0"]) == 3


def test_cli_modkkt_not_found_is_inconclusive(quad_problem_file, capsys):
    # far from any stationary point with a tiny ball: nothing to find
    code = main(["modkkt", "--problem", quad_problem_file,
                 "--point", "1.0", "--eps", "0.0001"])
    assert code == 2
    assert "not-found-at-resolution" in capsys.readouterr().out


def test_cli_exist_descends(abs_problem_file, capsys):
    code = main(["exist", "--problem", abs_problem_file,
                 "--eps", "0.25,0.25", "--start", "2"])
    assert code == 0


def test_cli_prop21(abs_problem_file):
    assert main(["prop21", "--problem", abs_problem_file, "--eps0", "0.25"]) == 0


def test_cli_thm33(abs_problem_file):
    assert main(["thm33", "--problem", abs_problem_file,
                 "--point", "0", "--eps", "0.25,0.25"]) == 0


def test_cli_grid_override(abs_problem_file, tmp_path):
    report_path = tmp_path / "v.json"
    code = main(["verify", "--problem", abs_problem_file, "--point", "0",
                 "--concept", "weak-min", "--grid", "41",
                 "--json", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert report["config"]["points_per_dim"] == 41


def test_cli_tolerance_override(abs_problem_file, tmp_path):
    report_path = tmp_path / "k.json"
    main(["kkt", "--problem", abs_problem_file, "--point", "0",
          "--mu-max", "50", "--json", str(report_path)])
    report = json.loads(report_path.read_text())
    assert report["config"]["tolerances"]["mu_max"] == 50.0


def test_cli_game_verify_holds(quad_game_file, capsys):
    code = main(["game-verify", "--game", quad_game_file, "--point", "0.5,0.5",
                 "--concept", "ne", "--eps", "0.1"])
    assert code == 0


def test_cli_game_verify_reports_deviation(quad_game_file, capsys):
    code = main(["game-verify", "--game", quad_game_file, "--point", "0,1",
                 "--concept", "ne", "--eps", "0.01"])
    assert code == 1
    assert "improving deviation: player 0" in capsys.readouterr().out


def test_cli_game_kkt(quad_game_file, tmp_path):
    report_path = tmp_path / "gk.json"
    code = main(["game-kkt", "--game", quad_game_file, "--point", "0.5,0.5",
                 "--eps", "0.1", "--json", str(report_path)])
    assert code == 0
    report = json.loads(report_path.read_text())
    assert len(report["players"]) == 2
    assert all(p["residual"] <= 1e-8 for p in report["players"])


def test_cli_game_sufficiency(quad_game_file):
    assert main(["game-sufficiency", "--game", quad_game_file,
                 "--point", "0.5,0.5", "--eps", "0.1"]) == 0


def test_cli_seqkkt(abs_problem_file):
    xs = ";".join(str(1.0 / i) for i in range(1, 120))
    eps = ",".join(str(1.0 / i ** 2) for i in range(1, 4))
    assert main(["seqkkt", "--problem", abs_problem_file, "--point", "0",
                 "--xs", xs, "--eps-seq", eps]) == 0
