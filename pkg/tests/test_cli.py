import json
import subprocess
import sys

import pytest

from nibblematch.cli import VERBS, main


def run_cli(args, capsys=None):
    code = main([str(a) for a in args])
    out = capsys.readouterr().out if capsys is not None else None
    return code, out


@pytest.fixture(scope="module")
def inputs(tmp_path_factory):
    root = tmp_path_factory.mktemp("inputs")
    assert main(["generate", "--family", "STS", "--n", "31", "--seed", "1",
                 "--out", str(root / "sts")]) == 0
    assert main(["generate", "--family", "RandomRegularSimple", "--n", "120", "--k", "4",
                 "--D", "8", "--seed", "0", "--out", str(root / "reg4")]) == 0
    (root / "exp.json").write_text(json.dumps(
        {"kind": "nibble", "instance": {"family": "STS", "n": 13}, "seeds": [0, 1]}))
    (root / "multi.txt").write_text("6 3 3\n0 1 2\n0 1 3\n3 4 5\n")
    return root


def verb_args(verb, root):
    sts = root / "sts" / "instance.txt"
    reg4 = root / "reg4" / "instance.txt"
    return {
        "generate": ["--family", "RandomRegularSimple", "--n", "60", "--k", "3", "--D", "10"],
        "nibble": ["--input", sts],
        "augment": ["--input", reg4],
        "simplify": ["--input", root / "multi.txt"],
        "color": ["--input", sts],
        "experiment": ["--config", root / "exp.json"],
        "verify": ["--input", sts],
    }[verb]


def snapshot(path):
    return {p.relative_to(path).as_posix(): p.read_bytes()
            for p in sorted(path.rglob("*")) if p.is_file()}


@pytest.mark.parametrize("fmt", ["json", "csv"])
@pytest.mark.parametrize("verb", VERBS)
def test_verb_is_byte_deterministic(verb, fmt, inputs, tmp_path):
    outs = []
    for rep in range(2):
        out = tmp_path / f"run{rep}"
        code = main([verb, *map(str, verb_args(verb, inputs)), "--seed", "7",
                     "--format", fmt, "--out", str(out)])
        assert code == 0
        outs.append(snapshot(out))
    assert outs[0] and outs[0] == outs[1]


def test_stdout_is_deterministic(inputs, capsys):
    args = ["nibble", "--input", str(inputs / "sts" / "instance.txt"), "--seed", "3"]
    _, a = run_cli(args, capsys)
    _, b = run_cli(args, capsys)
    assert a == b
    doc = json.loads(a)
    assert doc["valid"] and doc["log"]["status"] in ("threshold", "degenerate", "no_edges")


def test_generate_text_format(capsys):
    code, out = run_cli(["generate", "--family", "STS", "--n", "7", "--format", "csv"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "7 7 3"


def test_config_file_supplies_options(inputs, tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"instance": {"family": "STS", "n": 13}, "gamma": 0.6}))
    code, out = run_cli(["nibble", "--config", cfg], capsys)
    assert code == 0
    assert json.loads(out)["log"]["gamma"] == 0.6


def test_verify_exit_codes(inputs, tmp_path, capsys):
    sts = inputs / "sts" / "instance.txt"
    bad = tmp_path / "m.txt"
    bad.write_text("0,1\n")
    assert run_cli(["verify", "--input", sts, "--matching", bad], capsys)[0] == 1
    good = tmp_path / "g.txt"
    good.write_text("# matching\nedge_id\n0\n")
    assert run_cli(["verify", "--input", sts, "--matching", good], capsys)[0] == 0
    out_of_range = tmp_path / "o.txt"
    out_of_range.write_text("9999\n")
    assert run_cli(["verify", "--input", sts, "--matching", out_of_range], capsys)[0] == 1


def test_verify_coloring_round_trip(inputs, tmp_path, capsys):
    from nibblematch import read_hypergraph
    sts = inputs / "sts" / "instance.txt"
    assert run_cli(["color", "--input", sts, "--format", "csv", "--out", tmp_path], capsys)[0] == 0
    col = tmp_path / "coloring.csv"
    assert run_cli(["verify", "--input", sts, "--coloring", col], capsys)[0] == 0
    # give an edge meeting edge 0 the colour of edge 0
    H = read_hypergraph(sts)
    other = [e for e in H.incident_edges(int(H.edge(0)[0])).tolist() if e != 0][0]
    lines = col.read_text().splitlines()
    colour0 = lines[2].split(",")[1]
    lines[2 + other] = f"{other},{colour0}"
    col.write_text("\n".join(lines) + "\n")
    code, out = run_cli(["verify", "--input", sts, "--coloring", col], capsys)
    assert code == 1
    assert json.loads(out)["coloring"]["proper"] is False


def test_execution_error_exit_code(tmp_path, capsys):
    assert run_cli(["nibble", "--input", tmp_path / "missing.txt"], capsys)[0] == 2
    assert run_cli(["nibble"], capsys)[0] == 2


def test_augment_exports_star_hypergraph(inputs, tmp_path, capsys):
    assert run_cli(["augment", "--input", inputs / "reg4" / "instance.txt",
                    "--out", tmp_path], capsys)[0] == 0
    head = (tmp_path / "star_hypergraph.txt").read_text().splitlines()[0].split()
    rows = (tmp_path / "star_backmap.csv").read_text().splitlines()
    assert int(head[1]) == len(rows) - 2
    assert head[2] == "13"
    assert rows[1] == "edge_id,copy,matched_edge,star_0,star_1,star_2,star_3"


def test_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nibblematch.cli", "generate", "--family",
                           "STS", "--n", "9"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["num_edges"] == 12
