import json

import numpy as np
import pytest

from supernorm import cli, generate as gen
from supernorm.io import InputError, dumps, load_instance
from supernorm.norms import L1PlusL2, LpNorm, TopkNorm


@pytest.fixture
def files(tmp_path):
    def put(name, obj):
        path = tmp_path / name
        path.write_text(obj if isinstance(obj, str) else json.dumps(obj))
        return str(path)
    return put


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_certify_lp2_passes(files, capsys):
    code, out, err = run(["certify", "--norm", files("lp2.json", LpNorm(3, 2).to_dict()), "--p", "2",
                          "--samples", "500"], capsys)
    assert code == 0
    assert json.loads(out)["result"]["passed"] is True
    assert "PASS four_point" in err


def test_certify_l1l2_fails_with_witness(files, capsys):
    path = files("l1l2.json", L1PlusL2(16).to_dict())
    code, out, err = run(["certify", "--norm", path, "--p", "1.3", "--samples", "500"], capsys)
    assert code == 1
    reps = {r["property"]: r for r in json.loads(out)["result"]["reports"]}
    np.testing.assert_allclose(reps["hessian"]["witness"]["x"], [4, 4] + [1] * 14)
    assert "FAIL hessian" in err and "witness=" in err


def test_approx_topk(files, capsys):
    code, out, _ = run(["approx", "--norm", files("top.json", TopkNorm(4, 2).to_dict())], capsys)
    assert code == 0
    stage = json.loads(out)["result"]["stages"][0]
    assert stage["stage"] == "orlicz"
    assert 0.5 <= stage["ratio_lo"] <= stage["ratio_hi"] <= 1.0


def test_malformed_json_reports_position(files, capsys):
    path = files("bad.json", '{"kind": "lp",\n "dim": 3 "x"}')
    code, _, err = run(["certify", "--norm", path, "--p", "2"], capsys)
    assert code == 2
    assert f"{path}:2:11" in err


def test_dimension_mismatch_is_input_error(files, capsys):
    inst = {"type": "loadbalance", "objective": LpNorm(3, 2).to_dict(), "data": {"sizes": [[1, 2]]}}
    code, _, err = run(["loadbalance", "--instance", files("lb.json", inst)], capsys)
    assert code == 2 and "input error" in err


def test_missing_flag(capsys):
    code, _, err = run(["certify"], capsys)
    assert code == 2 and "--norm" in err


def test_config_precedence(files, capsys):
    cfg = files("cfg.json", {"seed": 3, "p": 2, "samples": 50})
    norm = files("lp2.json", LpNorm(3, 2).to_dict())
    _, out, _ = run(["certify", "--norm", norm, "--config", cfg, "--seed", "9"], capsys)
    conf = json.loads(out)["config"]
    assert conf["seed"] == 9 and conf["p"] == 2 and conf["samples"] == 50


def test_csv_output_is_stamped_and_stable(files, capsys, tmp_path):
    inst = files("lb.json", gen.generate("loadbalance", 0, T=4, n=2))
    outs = []
    for k in range(2):
        target = tmp_path / f"out{k}.csv"
        code, _, _ = run(["loadbalance", "--instance", inst, "--format", "csv", "--out", str(target)], capsys)
        assert code == 0
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    lines = outs[0].decode().splitlines()
    assert lines[0] == "# supernorm-csv v1"
    assert lines[1].startswith("# config: {")
    assert lines[2] == "seed,step,decision,objective_value,feasible,cumulative_time"


def test_csv_17_digits(files, capsys):
    inst = files("cov.json", gen.generate("cover", 2, n=2, rows=2))
    _, out, _ = run(["cover", "--instance", inst, "--format", "csv"], capsys)
    row = out.splitlines()[3].split(",")
    value = row[3]
    assert float(value) == float(format(float(value), ".17g"))
    assert len(value.replace(".", "").lstrip("0")) >= 15


def test_pack_threads_do_not_change_bytes(files, capsys, monkeypatch):
    inst = files("pk.json", gen.generate("pack", 4, n=2, T=3))
    argv = ["pack", "--instance", inst, "--samples", "6", "--format", "csv"]
    monkeypatch.setenv("SUPERNORM_THREADS", "1")
    _, one, _ = run(argv, capsys)
    monkeypatch.setenv("SUPERNORM_THREADS", "4")
    _, four, _ = run(argv, capsys)
    assert one == four
    seeds = [int(line.split(",")[0]) for line in one.splitlines()[3:]]
    assert seeds == sorted(seeds)


@pytest.mark.parametrize("kind", ["loadbalance", "cover", "facility-location-cover", "pack", "probe", "olo-experts"])
def test_generated_instances_run(kind, files, capsys):
    doc = gen.generate(kind, 1)
    cmd = {"facility-location-cover": "cover", "olo-experts": "olo"}.get(kind, kind)
    code, out, _ = run([cmd, "--instance", files("g.json", doc)], capsys)
    assert code == 0, out
    assert json.loads(out)["result"]["passed"] is True


def test_demo_counterexamples(capsys):
    code, out, err = run(["demo-counterexamples"], capsys)
    assert code == 0
    demos = {d["demo"]: d for d in json.loads(out)["result"]["demos"]}
    assert demos["block_counterexample"]["refuted"]
    assert demos["l1_plus_l2"]["refuted_at_1.3"] and demos["l1_plus_l2"]["witness_passes_at_3"]
    assert demos["budget_norm"]["max_abs_error"] <= 1e-6


def test_generate_cli_bytes(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for target in (a, b):
        assert cli.main(["generate", "loadbalance", "--param", "T=4", "--param", "n=2", "--seed", "0",
                         "--out", str(target)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    assert cli.main(["generate", "loadbalance", "--param", "T=99"]) == 2


def test_generate_loadbalance_frozen():
    doc = gen.generate("loadbalance", 0, T=4, n=2)
    assert doc["data"]["sizes"][0] == [0.636962, 0.269787]


def test_facility_location_structure():
    doc = gen.generate("facility-location-cover", 0, facilities=2, demands=3)
    data = doc["data"]
    assert doc["objective"]["kind"] == "lp" and doc["objective"]["params"]["p"] == 1
    kinds = [f["kind"] for f in data["inners"]]
    assert kinds[:2] == ["linear_compose", "linear_compose"]
    assert kinds[2:] == ["weighted_linear"] * 6
    assert data["partitions"][0] == [0, 2, 4]
    kind, inst, _ = load_instance(doc)
    assert kind == "cover" and inst.overlapping


def test_probe_generator_family():
    doc = gen.generate("probe", 0, n=3, card=2)
    _, inst, _ = load_instance(doc)
    sets = sorted(sorted(inst.members(m)) for m in inst.feasible_sets())
    assert sets == [[], [0], [0, 1], [0, 2], [1], [1, 2], [2]]


def test_generate_errors():
    with pytest.raises(gen.GenerateError):
        gen.generate("nope", 0)
    with pytest.raises(gen.GenerateError):
        gen.generate("probe", 0, n=9)
    with pytest.raises(gen.GenerateError):
        gen.generate("pack", 0, bogus=1)


def test_load_instance_errors():
    with pytest.raises(InputError):
        load_instance({"type": "teleport", "objective": LpNorm(2, 2).to_dict()})
    with pytest.raises(InputError):
        load_instance({"type": "pack", "objective": LpNorm(2, 2).to_dict(), "data": {}})
    with pytest.raises(InputError):
        load_instance([1, 2])


def test_dumps_is_canonical():
    assert dumps({"b": 1, "a": np.float64(0.5)}) == '{\n  "a": 0.5,\n  "b": 1\n}\n'
