import json
import subprocess
import sys

import pytest

from twoweight.cli import RunConfig, builtin_pair, main
from twoweight.errors import ConfigInvalid
from twoweight.measure import Weight


def _load(out, name):
    return json.loads((out / f"{name}.json").read_text())


def test_cantor_depth_one_central_zero(tmp_path):
    assert main(["cantor", "--depth", "1", "--out", str(tmp_path)]) == 0
    rep = _load(tmp_path, "cantor")
    assert abs(rep["results"]["central_gap"]["z"] - 0.5) < 1e-10
    assert rep["inputs"]["depth"] == 1


def test_hardy_random(tmp_path):
    assert main(["hardy", "--random", "100", "--seed", "7", "--out", str(tmp_path), "--csv"]) == 0
    rep = _load(tmp_path, "hardy")
    assert rep["results"]["passing"] == 100
    assert (tmp_path / "hardy.csv").exists()


def test_cantor_a2_reports_ratio_four_and_exits_2(tmp_path):
    assert main(["a2", "--pair", "cantor", "--depth", "4", "--out", str(tmp_path)]) == 2
    rep = _load(tmp_path, "a2")
    ratios = [g["ratio"] for g in rep["results"]["gap_simple_ratios"]]
    assert min(ratios) == pytest.approx(4.0) and max(ratios) == pytest.approx(4.0)
    assert rep["verdicts"]["gap_simple_ratio_is_2"] is False


def test_reports_reproducible(tmp_path):
    for d in ("a", "b"):
        main(["dyadic-norm", "--random", "5", "--seed", "3", "--out", str(tmp_path / d)])
    a, b = _load(tmp_path / "a", "dyadic-norm"), _load(tmp_path / "b", "dyadic-norm")
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b


def test_config_file_and_errors(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("pair: lebesgue\ndepth: 3\n")
    assert main(["a2", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert _load(tmp_path, "a2")["inputs"]["pair"] == "lebesgue"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"depth": 3, "nonsense": 1}))
    assert main(["a2", "--config", str(bad), "--out", str(tmp_path)]) == 64
    assert main(["a2", "--pair", "nope", "--out", str(tmp_path)]) == 64
    assert main(["a2", "--tol", "2", "--out", str(tmp_path)]) == 64


def test_weight_files(tmp_path):
    s, w = tmp_path / "s.json", tmp_path / "w.json"
    s.write_text(Weight.from_atoms([0.2, 0.6], [1, 2]).dumps())
    w.write_text(Weight.from_atoms([0.4], [1]).dumps())
    assert main(["testing", "--sigma", str(s), "--w", str(w), "--depth", "3",
                 "--out", str(tmp_path)]) == 0
    assert main(["testing", "--sigma", str(s), "--out", str(tmp_path)]) == 64


@pytest.mark.parametrize("argv", [
    ["pivotal", "--pair", "cantor", "--depth", "3"],
    ["energy", "--pair", "lebesgue", "--depth", "2", "--partitions", "3"],
    ["poisson-test", "--pair", "lebesgue", "--depth", "3"],
    ["grid-stats", "--trials", "500"],
    ["compactness", "--pair", "compact-half-line"],
    ["verify-all", "--only", "6", "9"],
])
def test_other_commands(tmp_path, argv):
    assert main(argv + ["--out", str(tmp_path)]) == 0


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "twoweight", "cantor", "--depth", "2", "--out",
                        str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0, r.stderr


def test_validation():
    with pytest.raises(ConfigInvalid):
        RunConfig(depth=99).validate()
    with pytest.raises(ConfigInvalid):
        RunConfig(family={"kind": "weird"}).validate()
    sigma, w, fam = builtin_pair("point-masses", 3)
    assert sigma.n_atoms == w.n_atoms == 1
