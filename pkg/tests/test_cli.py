import json
from pathlib import Path

import pytest

from hetnet_ia import cli
from hetnet_ia.errors import DegenerateChannel

SCEN = Path(__file__).resolve().parents[1] / "scenarios"
FAST = ["--frames", "1", "--snr-start", "0", "--snr-stop", "20", "--snr-step", "20"]


def read_table(p):
    lines = Path(p).read_text().splitlines()
    return [line.split("\t") for line in lines]


def test_dof_table(tmp_path):
    assert cli.main(["dof", "--out", str(tmp_path)]) == 0
    rows = read_table(tmp_path / "dof_scenario.tsv")
    by = {r[0]: r for r in rows[1:]}
    assert by["hybrid"][-1] == "8/2" and by["hybrid"][-2] == "4"
    assert by["blind_ia_L1"][-1] == "8/3"
    assert (tmp_path / "dof_grid.tsv").exists()
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert set(m["outputs"]) == {"dof_scenario.tsv", "dof_grid.tsv"}


def test_ber_smoke(tmp_path):
    assert cli.main(["ber", "--out", str(tmp_path)] + FAST) == 0
    rows = read_table(tmp_path / "ber_hybrid.tsv")
    assert rows[0] == ["scheme", "snr_db", "user", "metric", "value"]
    assert {r[1] for r in rows[1:]} == {"0.0", "20.0"}
    summary = read_table(tmp_path / "ber_hybrid_summary.tsv")
    assert summary[0][0] == "snr_db" and len(summary) == 3


def test_rate_csv(tmp_path):
    assert cli.main(["rate", "--scheme", "tdma", "--tdma-context", "blind", "--format", "csv", "--out", str(tmp_path)] + FAST) == 0
    assert (tmp_path / "rate_tdma_blind.csv").read_text().startswith("scheme,snr_db")


def test_compare_columns(tmp_path):
    assert cli.main(["compare", "--out", str(tmp_path), "--frames", "2", "--snr-start", "30", "--snr-stop", "40", "--snr-step", "10"]) == 0
    rows = read_table(tmp_path / "compare_sum_rate.tsv")
    assert rows[0] == ["snr_db", "sum_rate_hybrid", "sum_rate_blind_ia", "sum_rate_tdma_hybrid", "sum_rate_tdma_blind"]
    for r in rows[1:]:
        assert float(r[1]) >= float(r[3])
        assert float(r[2]) >= float(r[4])
    assert read_table(tmp_path / "compare_total_ber.tsv")[0][1:] == ["total_ber_hybrid", "total_ber_blind_ia", "total_ber_tdma_hybrid"]


def test_blind_l2_scenario(tmp_path):
    args = ["ber", "--scheme", "blind_ia", "--scenario", str(SCEN / "blind_l2.yaml"), "--out", str(tmp_path)] + FAST
    assert cli.main(args) == 0
    assert "f2_2" in (tmp_path / "ber_blind_ia.tsv").read_text()


def test_env_default_out(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["dof"]) == 0
    assert (tmp_path / "envout" / "manifest.json").exists()


def test_cwd_fallback(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.OUT_ENV, raising=False)
    monkeypatch.chdir(tmp_path)
    assert cli.main(["dof"]) == 0
    assert (tmp_path / "results" / "dof_scenario.tsv").exists()


def test_deterministic_and_replay(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert cli.main(["ber", "--scheme", "blind_ia", "--out", str(a)] + FAST) == 0
    assert cli.main(["ber", "--scheme", "blind_ia", "--out", str(b)] + FAST) == 0
    assert cli.main(["replay", str(a / "manifest.json"), "--out", str(c)]) == 0
    for f in sorted(p.name for p in a.iterdir()):
        assert (a / f).read_bytes() == (b / f).read_bytes() == (c / f).read_bytes(), f


def test_manifest_as_scenario(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["rate", "--seed", "3", "--out", str(a)] + FAST) == 0
    assert cli.main(["rate", "--scenario", str(a / "manifest.json"), "--out", str(b)]) == 0
    assert (a / "rate_hybrid.tsv").read_bytes() == (b / "rate_hybrid.tsv").read_bytes()


@pytest.mark.parametrize(
    "argv",
    [
        ["ber", "--snr-step", "0"],
        ["ber", "--scenario", "/nonexistent.yaml"],
        ["ber", "--scheme", "nope"],
        ["nope"],
        ["ber", "--frames", "0"],
        ["replay", "/nonexistent/manifest.json"],
    ],
)
def test_config_errors(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(cli.main(argv + ["--out", str(tmp_path)] if argv[0] != "nope" else argv))
    assert exc.value.code == cli.EXIT_CONFIG


def test_unsupported_scheme_for_topology(tmp_path):
    # Blind IA is defined for two macro users only
    scen = tmp_path / "k3.yaml"
    scen.write_text(
        "topology:\n  K: 3\n  L: 1\n  N: 2\n  distances:\n    macro: [0.5, 2.0, 4.5]\n"
        "    femto: [[0.2], [0.2], [0.2]]\n    macro_to_femto: [[5], [5], [5]]\n    femto_to_macro: [[5], [5], [5]]\n"
    )
    base = ["ber", "--scenario", str(scen), "--out", str(tmp_path / "o")] + FAST
    assert cli.main(base + ["--scheme", "blind_ia"]) == cli.EXIT_CONFIG
    assert cli.main(base + ["--scheme", "hybrid"]) == cli.EXIT_OK


def test_numeric_degeneracy(tmp_path, monkeypatch):
    def boom(cfg):
        raise DegenerateChannel("singular projection")

    monkeypatch.setattr(cli, "run_rate_sweep", boom)
    assert cli.main(["rate", "--out", str(tmp_path)] + FAST) == cli.EXIT_NUMERIC


def test_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["dof", "--out", str(blocker / "sub")]) == cli.EXIT_IO


def test_module_entry():
    import subprocess
    import sys

    r = subprocess.run([sys.executable, "-m", "hetnet_ia", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "hetnet-ia" in r.stdout
