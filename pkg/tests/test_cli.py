import json
import subprocess
import sys
import textwrap

import numpy as np
import pytest

from cryptoherm.cli.config import parse_config
from cryptoherm.cli.emit import ResultRecord, Table, emit_results
from cryptoherm.cli.main import main
from cryptoherm.cli.runner import run_experiment
from cryptoherm.exceptions import ConfigError

METRIC = """\
kind: metric
id: pt2
model:
  label: pt-chain
  params: {n: 2, gamma: 0.5}
numerics:
  tol: 1.0e-10
output:
  format: json
"""


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(textwrap.dedent(text))
    return p


def strip_timestamp(text):
    return "\n".join(line for line in text.splitlines() if "timestamp" not in line)


def test_metric_record():
    rec = run_experiment(parse_config(METRIC))
    assert rec.passed
    cert = {c.name: c for c in rec.certificates}
    assert cert["quasi_residual"].value <= 1e-10 and cert["quasi_residual"].tol == 1e-10
    assert len(rec.tables["theta"].rows) == 4


@pytest.mark.parametrize(
    "text, field, line",
    [
        ("kind: sturm\nnumerics:\n  path: identity\n  potential: harmonic\n  box: [-8, 8]\n", "numerics.n", 2),
        ("kind: metric\nmodel: {label: pt-chain}\nextra: 1\n", "extra", 3),
        ("kind: fig1-table\nnumerics:\n  gammas: [0, 1, 0.5]\n  k: 2\n  k: 3\n", "numerics.k", 5),
        ("kind: fig1-table\nnumerics:\n  gammas: [0, 1, 0.5]\n  n: many\n", "numerics.n", 4),
        ("kind: metric\nmodel:\n  label: nonexistent\n", "model.label", 3),
        ("kind: metric\nmodel:\n  label: pt-chain\n  params: {size: 3}\n", "model.params.size", 4),
        ("kind: warp\n", "kind", 1),
        ("kind: fig1-table\nnumerics: {gammas: [0, 1, 0.5]}\noutput: {format: xml}\n", "output.format", 3),
        ("kind: sturm\nnumerics: {path: spiral, potential: harmonic, box: [-1, 1], n: 50}\n", "numerics.path", 2),
    ],
)
def test_config_errors(text, field, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.field == field
    assert info.value.line == line
    assert field in str(info.value)


def test_malformed_yaml():
    with pytest.raises(ConfigError):
        parse_config("kind: [unclosed\n")


def test_fig1_table_csv(tmp_path):
    cfg = write(tmp_path, "fig1.yaml", "kind: fig1-table\nnumerics:\n  gammas: [-0.9, 2.0, 0.1]\n  k: 4\n")
    assert main(["run", str(cfg), "--out-dir", str(tmp_path), "--strict"]) == 0
    lines = (tmp_path / "fig1.csv").read_text().splitlines()
    header = [l for l in lines if not l.startswith("#")]
    assert header[0] == "gamma,level_index,energy"
    rows = [r.split(",") for r in header[1:]]
    assert len(rows) == 30 * 4
    gammas = sorted({float(r[0]) for r in rows})
    assert len(gammas) == 30 and gammas[0] == -0.9 and gammas[-1] == 2.0
    assert all(np.isfinite(float(r[2])) for r in rows)


def test_empty_sweep_header_only(tmp_path):
    cfg = write(
        tmp_path,
        "empty.yaml",
        "kind: scatter\nmodel: {label: pt-two-center}\nnumerics: {energies: [0.5, 1.0, 0]}\n",
    )
    assert main(["run", str(cfg), "--out-dir", str(tmp_path)]) == 0
    lines = (tmp_path / "empty.csv").read_text().splitlines()
    body = [l for l in lines if not l.startswith("#")]
    assert body == ["energy,R_re,R_im,T_re,T_im,deficit"]
    assert any(l.startswith("# config:") for l in lines)


def test_json_roundtrip_bit_exact(tmp_path):
    values = [0.1, 1 / 3, np.pi * 1e-300, -2.5e17, 5e-324, float(np.nextafter(1.0, 2.0))]
    rec = ResultRecord("rt", "T", {"kind": "metric"}, {"v": Table(["x"], [[v] for v in values])}, [])
    (path,) = emit_results(rec, "json", tmp_path / "rt.json")
    back = [row[0] for row in json.loads(path.read_text())["tables"]["v"]["rows"]]
    assert [float(v).hex() for v in back] == [float(v).hex() for v in values]


def test_csv_seventeen_digits_roundtrip(tmp_path):
    values = [0.1, 1 / 3, 2.0 / 7.0]
    rec = ResultRecord("rt", "T", {}, {"v": Table(["x"], [[v] for v in values])}, [])
    (path,) = emit_results(rec, "csv", tmp_path / "rt.csv")
    body = [l for l in path.read_text().splitlines() if not l.startswith("#")][1:]
    assert [float(v) for v in body] == values


def test_determinism(tmp_path):
    cfg = write(tmp_path, "m.yaml", METRIC.replace("  tol: 1.0e-10\n", "  tol: 1.0e-10\n  random_instances: 5\n") + "seed: 3\n")
    outs = []
    for d in ("a", "b"):
        assert main(["run", str(cfg), "--out-dir", str(tmp_path / d)]) == 0
        outs.append((tmp_path / d / "pt2.json").read_text())
    assert outs[0] != "" and strip_timestamp(outs[0]) == strip_timestamp(outs[1])
    assert sum("timestamp" in l for l in outs[0].splitlines()) == 1


def test_strict_exit_codes(tmp_path):
    failing = write(
        tmp_path,
        "tight.yaml",
        "kind: sturm\nnumerics: {path: identity, potential: harmonic, box: [-8, 8], n: 200, level_tol: 1.0e-9}\n",
    )
    assert main(["run", str(failing), "--out-dir", str(tmp_path)]) == 0
    assert main(["run", str(failing), "--out-dir", str(tmp_path), "--strict"]) == 1
    bad = write(tmp_path, "bad.yaml", "kind: sturm\n")
    assert main(["run", str(bad)]) == 2
    numeric = write(tmp_path, "ep.yaml", "kind: metric\nmodel:\n  label: pt-chain\n  params: {n: 2, gamma: 3.0}\n")
    assert main(["run", str(numeric), "--out-dir", str(tmp_path)]) == 3


def test_no_temp_files_left(tmp_path):
    cfg = write(tmp_path, "m.yaml", METRIC)
    main(["run", str(cfg), "--out-dir", str(tmp_path / "o")])
    assert sorted(p.name for p in (tmp_path / "o").iterdir()) == ["pt2.json"]


def test_format_override_and_jobs(tmp_path):
    a = write(tmp_path, "a.yaml", METRIC)
    b = write(tmp_path, "b.yaml", METRIC.replace("id: pt2", "id: pt2b"))
    rc = main(["run", str(a), str(b), "--out-dir", str(tmp_path), "--format", "csv", "--jobs", "2"])
    assert rc == 0
    assert (tmp_path / "pt2.eigenvalues.csv").exists() and (tmp_path / "pt2b.theta.csv").exists()


def test_console_flags():
    out = subprocess.run([sys.executable, "-m", "cryptoherm", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.startswith("cryptoherm ")
    out = subprocess.run([sys.executable, "-m", "cryptoherm", "--list-models"], capture_output=True, text=True)
    assert "pt-chain" in out.stdout.split()
