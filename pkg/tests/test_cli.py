import json
import shutil
from pathlib import Path

import pytest
import yaml

from gbslab import __version__
from gbslab.cli import main
from gbslab.config import load_config
from gbslab.errors import DigestMismatchError, SampleFileError
from gbslab.pipeline import verify
from gbslab.samplers import read_samples

SAMPLERS = ["exact", "squashed", "thermal", "distinguishable", "ips", "greedy"]
MPS = ["mps_chi0", "mps_chi1", "mps_chi2", "mps_chiinf"]
METRICS = {"K", "delta_k", "wd", "delta_h", "sigma", "epsilon", "N_eff"}


def write_config(path: Path, data: dict) -> Path:
    path.write_text(yaml.safe_dump(data))
    return path


def files(root: Path) -> dict[str, bytes]:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def golden_run(tmp_path_factory):
    src = Path(__file__).parent / "data" / "golden.yaml"
    out = tmp_path_factory.mktemp("golden") / "out"
    assert main(["run", "--config", str(src), "--output", str(out)]) == 0
    return src, out


def test_empty_config_writes_manifest_only(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", {"schema_version": 1, "seed": 1})
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    visible = [p.name for p in out.iterdir() if not p.name.startswith(".")]
    assert visible == ["manifest.json"]
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["tool_version"] == __version__ and manifest["config_digest"]


def test_golden_outputs(golden_run):
    _, out = golden_run
    for name in SAMPLERS + MPS:
        assert (out / "samples" / f"{name}.txt").exists(), name
    for name in MPS[1:]:
        assert (out / "mps" / f"{name}.gbsmps").exists()
    assert (out / "correlations.csv").exists()
    summary = json.loads((out / "summary.json").read_text())
    assert set(summary["experiments"]) == set(SAMPLERS + MPS)
    for name, m in summary["experiments"].items():
        assert METRICS <= set(m), name
        assert m["provenance"] == "internal"
    for name in MPS:
        assert "normalized_delta_k" in summary["experiments"][name]
    assert summary["experiments"]["mps_chi0"]["normalized_delta_k"] == 1
    assert {"log10_years", "log10_speedup", "baseline"} <= set(summary["cost"])


def test_outputs_embed_digest(golden_run):
    src, out = golden_run
    digest = load_config(src).digest
    for rel, raw in files(out).items():
        if rel.startswith("."):
            continue
        assert digest.encode() in raw, rel
        assert __version__.encode() in raw, rel


def test_rerun_is_byte_identical(golden_run, tmp_path):
    src, out = golden_run
    again = tmp_path / "again"
    assert main(["run", "--config", str(src), "--output", str(again), "--threads", "4"]) == 0
    a, b = files(out), files(again)
    a.pop("manifest.json"), b.pop("manifest.json")
    assert a.keys() == b.keys()
    for k in a:
        assert a[k] == b[k], k


def test_stage_markers(golden_run):
    _, out = golden_run
    for stage in ("unroll", "state", "samplers", "mps", "validation", "cost"):
        assert (out / f".{stage}.done").exists()


def test_verify_reproduces_summary(golden_run, capsys):
    src, out = golden_run
    summary = json.loads((out / "summary.json").read_text())
    cfg = load_config(src)
    for name in ("exact", "ips", "mps_chi2"):
        rep = verify(out / "samples" / f"{name}.txt", cfg)
        want = summary["experiments"][name]
        for key in ("K", "delta_k", "wd", "delta_h", "sigma"):
            assert rep[key] == want[key], (name, key)
    capsys.readouterr()
    assert main(["verify", "--config", str(src), "--samples", str(out / "samples" / "exact.txt")]) == 0
    printed = json.loads(capsys.readouterr().out)
    assert printed["delta_k"] == summary["experiments"]["exact"]["delta_k"]


def test_verify_detects_config_drift(golden_run, tmp_path):
    src, out = golden_run
    data = yaml.safe_load(src.read_text())
    data["seed"] += 1
    other = write_config(tmp_path / "drift.yaml", data)
    with pytest.raises(DigestMismatchError):
        verify(out / "samples" / "exact.txt", load_config(other))
    assert main(["verify", "--config", str(other), "--samples", str(out / "samples" / "exact.txt")]) == 2


def test_verify_truncated_file(golden_run, tmp_path, capsys):
    src, out = golden_run
    lines = (out / "samples" / "exact.txt").read_text().splitlines()
    bad = tmp_path / "cut.txt"
    bad.write_text("\n".join(lines[:100]) + "\n")
    with pytest.raises(SampleFileError, match=r"line \d+"):
        verify(bad, load_config(src))
    assert main(["verify", "--config", str(src), "--samples", str(bad)]) == 2
    assert "line" in capsys.readouterr().err


def test_verify_foreign_file(golden_run, tmp_path):
    src, out = golden_run
    body = [l for l in (out / "samples" / "thermal.txt").read_text().splitlines() if not l.startswith("#")]
    foreign = tmp_path / "foreign.txt"
    foreign.write_text("# produced elsewhere\n" + "\n".join(body) + "\n")
    assert read_samples(foreign).provenance == "external"
    rep = verify(foreign, load_config(src))
    assert rep["provenance"] == "external"
    assert METRICS - {"epsilon", "N_eff"} <= set(rep)
    assert rep["count"] == len(body)


def test_validate_command(golden_run, tmp_path, capsys):
    src, out = golden_run
    dest = tmp_path / "val"
    argv = ["validate", "--config", str(src), "--output", str(dest)]
    for name in ("exact", "greedy"):
        argv += ["--samples", str(out / "samples" / f"{name}.txt")]
    assert main(argv) == 0
    rep = json.loads((dest / "validation.json").read_text())
    assert set(rep) == {"exact", "greedy"}


def test_report_command(golden_run, capsys):
    _, out = golden_run
    assert main(["report", "--output", str(out)]) == 0
    text = capsys.readouterr().out
    assert "mps_chiinf" in text and "log10 speedup" in text


def test_sample_subcommand_selects(tmp_path, golden_config):
    out = tmp_path / "s"
    assert main(["sample", "--config", str(golden_config), "--output", str(out), "--sampler", "greedy"]) == 0
    assert [p.name for p in (out / "samples").iterdir()] == ["greedy.txt"]


def test_cost_subcommand(tmp_path):
    cfg = write_config(
        tmp_path / "c.yaml",
        {"schema_version": 1, "seed": 0, "cost": {"M": 8176, "d": 10, "chi": 8e21, "N_eff": 113.5}},
    )
    out = tmp_path / "out"
    assert main(["cost", "--config", str(cfg), "--output", str(out)]) == 0
    cost = json.loads((out / "summary.json").read_text())["cost"]
    assert cost["log10_years"] >= 40


def test_exit_code_config_error(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.yaml", {"schema_version": 1, "seed": 1, "bogus": 3})
    assert main(["run", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 2
    cfg = write_config(tmp_path / "d.yaml", {"schema_version": 7})
    assert main(["run", "--config", str(cfg), "--output", str(tmp_path / "o")]) == 2


def test_exit_code_physicality(tmp_path):
    cfg = write_config(
        tmp_path / "c.yaml",
        {
            "schema_version": 1,
            "seed": 1,
            "instance": {"modes": 2, "seed": 1, "r_range": [20, 20]},
            "samplers": [{"kind": "exact", "count": 10}],
        },
    )
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 3
    err = json.loads((out / "error.json").read_text())
    assert err["exit_code"] == 3 and err["type"] == "PhysicalityError" and err["stage"] == "samplers"
    assert (out / ".state.done").exists() and not (out / ".samplers.done").exists()


def test_exit_code_scale(tmp_path):
    cfg = write_config(
        tmp_path / "c.yaml",
        {
            "schema_version": 1,
            "seed": 1,
            "instance": {"modes": 30, "seed": 1},
            "samplers": [{"kind": "exact", "count": 10}],
        },
    )
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 4
    assert json.loads((out / "error.json").read_text())["exit_code"] == 4


def test_config_with_circuit(tmp_path):
    cfg = write_config(
        tmp_path / "c.yaml",
        {
            "schema_version": 1,
            "seed": 5,
            "circuit": {"spatial_modes": 2, "input_time_bins": 2, "squeezing": 0.6},
            "samplers": [{"kind": "exact", "count": 100}],
            "validation": {"orders": [2]},
        },
    )
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg), "--output", str(out)]) == 0
    body = json.loads((out / "transfer.json").read_text())
    assert len(body["real"]) == body["shape"][0]
    assert (out / "geometry.json").exists()
