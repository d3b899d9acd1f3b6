import json

import numpy as np
import pandas as pd
import pytest

from cli.commands import UsageError, cmd_generate, cmd_pipeline
from main import main
from rdpg.schemas import Embedding, InnerProductDistribution
from rdpg.spectral import ase, lse
from tools.io import read_edge_list, read_embedding, write_distribution, write_embedding

TWO_ATOMS = InnerProductDistribution(dim=2, atoms=[[0.2, 0.7], [0.65, 0.3]], weights=[0.4, 0.6])
K4_EDGES = "n 4\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n"


@pytest.fixture
def two_atom_file(tmp_path):
    path = tmp_path / "dist.json"
    write_distribution(TWO_ATOMS, path)
    return path


def _json(path):
    return json.loads(path.read_text())


def _oos_file(path, a):
    path.write_text(json.dumps({"a": a}))
    return path


def _config_file(path, **overrides):
    payload = {
        "distribution": TWO_ATOMS.model_dump(),
        "n_values": [40, 80],
        "trials": 2,
        "methods": ["lls-ase", "lls-lse"],
        "master_seed": 5,
    }
    payload.update(overrides)
    path.write_text(json.dumps(payload))
    return path


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def test_generate_complete_graph(tmp_path):
    dist = tmp_path / "one.json"
    write_distribution(InnerProductDistribution(dim=1, atoms=[[1.0]], weights=[1.0]), dist)
    code = main(["generate", "--dist", str(dist), "--n", "4",
                 "--out-graph", str(tmp_path / "g.txt"), "--out-latent", str(tmp_path / "x.json")])
    assert code == 0
    assert read_edge_list(tmp_path / "g.txt").edge_count == 6


def test_generate_is_byte_reproducible(tmp_path, two_atom_file):
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        out.mkdir()
        cmd_generate(two_atom_file, 80, out / "g.txt", out / "x.json", out_oos=out / "o.json", seed=9)
        outputs.append([(out / name).read_bytes() for name in ("g.txt", "x.json", "o.json")])
    assert outputs[0] == outputs[1]


def test_seed_flag_before_or_after_subcommand(tmp_path, two_atom_file):
    def generate(prefix, suffix, name):
        args = prefix + ["generate", "--dist", str(two_atom_file), "--n", "30",
                         "--out-graph", str(tmp_path / name), "--out-latent", str(tmp_path / f"{name}.json")]
        assert main(args + suffix) == 0
        return (tmp_path / name).read_bytes()

    assert generate(["--seed", "3"], [], "before.txt") == generate([], ["--seed", "3"], "after.txt")


def test_generate_edge_density(tmp_path, two_atom_file):
    written = cmd_generate(two_atom_file, 500, tmp_path / "g.txt", tmp_path / "x.json", seed=1)
    pairs = 500 * 499 / 2
    # 4 sd of edge noise plus block-size noise
    assert abs(written["edges"] - pairs * 0.43258) <= 1000


def test_generate_usage_errors(tmp_path, two_atom_file):
    with pytest.raises(UsageError):
        cmd_generate(two_atom_file, 0, tmp_path / "g.txt", tmp_path / "x.json")
    with pytest.raises(UsageError):
        cmd_generate(two_atom_file, 10, tmp_path / "g.txt", tmp_path / "x.json", atom=1)
    with pytest.raises(UsageError):
        cmd_generate(two_atom_file, 10, tmp_path / "g.txt", tmp_path / "x.json", out_oos=tmp_path / "o.json", atom=2)
    assert not (tmp_path / "g.txt").exists()


# ---------------------------------------------------------------------------
# embed / oos
# ---------------------------------------------------------------------------

def test_embed_k4(tmp_path):
    graph = tmp_path / "k4.txt"
    graph.write_text(K4_EDGES)
    assert main(["embed", "--graph", str(graph), "--method", "ase", "--d", "1", "--out", str(tmp_path / "e.json")]) == 0
    np.testing.assert_allclose(_json(tmp_path / "e.json")["positions"], [[0.8660254037844386]] * 4, atol=1e-12)


def test_embed_path_graph_matches_in_process(tmp_path):
    graph = tmp_path / "path.txt"
    graph.write_text("n 5\n0 1\n1 2\n2 3\n3 4\n")
    assert main(["embed", "--graph", str(graph), "--method", "lse", "--d", "1", "--out", str(tmp_path / "e.json")]) == 0
    expected = lse(read_edge_list(graph), 1)
    stored = read_embedding(tmp_path / "e.json")
    np.testing.assert_array_equal(stored.positions, expected.positions)
    np.testing.assert_array_equal(stored.degrees, expected.degrees)


def test_embed_dimension_exceeds_vertices(tmp_path, capsys):
    graph = tmp_path / "k4.txt"
    graph.write_text(K4_EDGES)
    code = main(["embed", "--graph", str(graph), "--method", "ase", "--d", "5", "--out", str(tmp_path / "e.json")])
    assert code == 2
    assert "exceeds" in capsys.readouterr().err
    assert not (tmp_path / "e.json").exists()


def test_embed_malformed_graph(tmp_path, capsys):
    graph = tmp_path / "bad.txt"
    graph.write_text("n 3\n0 1\n2 2\n")
    code = main(["embed", "--graph", str(graph), "--method", "ase", "--d", "1", "--out", str(tmp_path / "e.json")])
    assert code == 1
    err = capsys.readouterr().err
    assert "ParseError" in err and f"{graph}:3" in err


def test_oos_identity(tmp_path):
    write_embedding(Embedding(positions=np.eye(3), eigenvalues=[1.0, 1.0, 1.0], kind="ase"), tmp_path / "e.json")
    oos = _oos_file(tmp_path / "o.json", [1, 0, 0])
    assert main(["oos", "--embedding", str(tmp_path / "e.json"), "--oos", str(oos),
                 "--method", "lls-ase", "--out", str(tmp_path / "r.json")]) == 0
    result = _json(tmp_path / "r.json")
    assert result["method"] == "lls-ase"
    np.testing.assert_allclose(result["w"], [1.0, 0.0, 0.0], atol=1e-15)


def test_oos_domain_failures_exit_one(tmp_path, capsys):
    write_embedding(Embedding(positions=[[0.9], [0.1]], eigenvalues=[0.82], kind="ase"), tmp_path / "tight.json")
    oos = _oos_file(tmp_path / "o2.json", [1, 0])
    code = main(["oos", "--embedding", str(tmp_path / "tight.json"), "--oos", str(oos),
                 "--method", "ml-ase", "--epsilon", "0.4", "--out", str(tmp_path / "r.json")])
    assert code == 1
    assert "InfeasibleConstraintSet" in capsys.readouterr().err

    K4 = np.ones((4, 4)) - np.eye(4)
    write_embedding(lse(K4, 1), tmp_path / "lse.json")
    zero = _oos_file(tmp_path / "zero.json", [0, 0, 0, 0])
    code = main(["oos", "--embedding", str(tmp_path / "lse.json"), "--oos", str(zero),
                 "--method", "lls-lse", "--out", str(tmp_path / "r.json")])
    assert code == 1
    assert "IsolatedOOSVertex" in capsys.readouterr().err

    write_embedding(ase(K4, 1), tmp_path / "ase.json")
    ones = _oos_file(tmp_path / "ones.json", [1, 1, 1, 1])
    code = main(["oos", "--embedding", str(tmp_path / "ase.json"), "--oos", str(ones),
                 "--method", "lls-lse", "--out", str(tmp_path / "r.json")])
    assert code == 1
    assert "MethodMismatch" in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()


def test_oos_bad_epsilon_is_usage_error(tmp_path):
    write_embedding(Embedding(positions=np.eye(2), eigenvalues=[1.0, 1.0], kind="ase"), tmp_path / "e.json")
    oos = _oos_file(tmp_path / "o.json", [1, 0])
    code = main(["oos", "--embedding", str(tmp_path / "e.json"), "--oos", str(oos),
                 "--method", "ml-ase", "--epsilon", "0.7", "--out", str(tmp_path / "r.json")])
    assert code == 2


def test_argparse_errors_exit_two(tmp_path):
    assert main(["embed", "--graph", "g.txt"]) == 2
    assert main(["embed", "--graph", "g.txt", "--method", "svd", "--d", "1", "--out", "e.json"]) == 2
    assert main(["tradeoff", "--lambda", "0.4", "--p", "0.6", "--q", "0.61", "--n", "10,x", "--m", "1",
                 "--out", str(tmp_path / "t.csv")]) == 2


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def test_tradeoff_command(tmp_path):
    out = tmp_path / "t.csv"
    assert main(["tradeoff", "--lambda", "0.4", "--p", "0.6", "--q", "0.61",
                 "--n", "1000", "--m", "1,2,5,10,100,1000", "--out", str(out)]) == 0
    table = pd.read_csv(out)
    assert table["ratio"].iloc[0] == 1.0
    assert all(b <= a + 1e-12 for a, b in zip(table["ratio"], table["ratio"].iloc[1:]))

    assert main(["tradeoff", "--lambda", "0.4", "--p", "0.7", "--q", "0.6",
                 "--n", "1000", "--m", "1", "--out", str(out)]) == 2


def test_clt_command_is_reproducible(tmp_path):
    config = _config_file(tmp_path / "cfg.json")
    csvs = []
    for run, workers in (("a", "1"), ("b", "3")):
        records, summary = tmp_path / f"{run}.csv", tmp_path / f"{run}.json"
        assert main(["clt", "--config", str(config), "--out-records", str(records),
                     "--out-summary", str(summary), "--workers", workers]) == 0
        csvs.append(records.read_bytes())
    assert csvs[0] == csvs[1]

    table = pd.read_csv(tmp_path / "a.csv")
    assert list(table.columns[:4]) == ["trial", "n", "method", "atom"]
    assert len(table) == 2 * 2 * 2
    assert _json(tmp_path / "a.json")["total_records"] == 8


def test_clt_seed_flag_overrides_config(tmp_path):
    config = _config_file(tmp_path / "cfg.json")
    for seed in ("5", "6"):
        assert main(["--seed", seed, "clt", "--config", str(config), "--out-records", str(tmp_path / f"{seed}.csv"),
                     "--out-summary", str(tmp_path / f"{seed}.json")]) == 0
    assert (tmp_path / "5.csv").read_bytes() != (tmp_path / "6.csv").read_bytes()


@pytest.mark.parametrize(
    "flags",
    [
        ["clt", "{config}", "--workers", "0"],
        ["--workers", "0", "clt", "{config}"],
        ["--seed", "-1", "clt", "{config}"],
        ["clt", "{config}", "--seed", "-3"],
    ],
)
def test_bad_global_flags_exit_two_before_any_output(tmp_path, capsys, flags):
    config = _config_file(tmp_path / "cfg.json")
    records, summary = tmp_path / "r.csv", tmp_path / "s.json"
    argv = []
    for flag in flags:
        if flag == "{config}":
            argv += ["--config", str(config), "--out-records", str(records), "--out-summary", str(summary)]
        else:
            argv.append(flag)
    assert main(argv) == 2
    assert ">=" in capsys.readouterr().err
    assert not records.exists() and not summary.exists()


def test_bad_seed_in_environment_is_usage_error(tmp_path, monkeypatch):
    monkeypatch.setenv("RDPG_OOS_SEED", "-2")
    out = tmp_path / "t.csv"
    assert main(["tradeoff", "--lambda", "0.4", "--p", "0.6", "--q", "0.61",
                 "--n", "1000", "--m", "1", "--out", str(out)]) == 2
    assert not out.exists()


def test_rates_command(tmp_path):
    config = _config_file(tmp_path / "cfg.json", trials=3, methods=["lls-ase"])
    assert main(["rates", "--config", str(config), "--out", str(tmp_path / "r.csv")]) == 0
    table = pd.read_csv(tmp_path / "r.csv")
    assert table["n"].tolist() == [40, 80]
    assert table["trials"].tolist() == [3, 3]

    single = _config_file(tmp_path / "one.json", n_values=[40])
    assert main(["rates", "--config", str(single), "--out", str(tmp_path / "r1.csv")]) == 1


def test_classify_command(tmp_path):
    out = tmp_path / "c.json"
    assert main(["classify", "--lambda", "0.4", "--p", "0.3", "--q", "0.7", "--n", "60", "--m", "3",
                 "--trials", "2", "--out", str(out), "--workers", "1"]) == 0
    payload = _json(out)
    assert payload["lambda"] == 0.4
    assert payload["trials"] == 2


def test_pipeline(tmp_path, two_atom_file):
    state = cmd_pipeline(two_atom_file, 120, 2, tmp_path / "run", seed=4)
    assert state["edge_count"] > 0
    assert len(state["w"]) == 2
    for name in ("graph.txt", "latent.json", "oos.json", "embedding.json", "oos_result.json"):
        assert (tmp_path / "run" / name).exists()

    with pytest.raises(UsageError):
        cmd_pipeline(two_atom_file, 3, 4, tmp_path / "bad")
