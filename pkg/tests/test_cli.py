import numpy as np
import pytest

from chemcompass import cli
from chemcompass import scenario as scenario_io
from chemcompass.dynamics import Theory
from chemcompass.exceptions import ValidationError

BAD_HYPERFINE = """\
name = "bad"
theories = ["traditional"]

[space]
nuclear_spins = []

[hamiltonian]
omega1 = 1.0
omega2 = 0.5
hyperfine = [{electron = 1, nucleus = 0, a = 1.0}]

[integration]
t_max = 1.0
"""

FIELD_SCENARIO = """\
name = "field"
theories = ["traditional"]

[hamiltonian]
g1 = 4.0
g2 = 2.0
field = 1.0
gamma = 0.1

[reaction]
k_s = 1.0
k_t = 1.0

[integration]
t_max = 10.0
"""


def read_csv(path):
    header = path.read_text().splitlines()[0]
    return header, np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


@pytest.fixture(scope="module")
def fig2_runs(tmp_path_factory):
    out = tmp_path_factory.mktemp("fig2")
    assert cli.main(["simulate", "fig2a", "--out", str(out)]) == 0
    assert cli.main(["simulate", "fig2bc", "--out", str(out), "--jobs", "3"]) == 0
    return out


def test_fig2a_csv(fig2_runs):
    for kind in Theory:
        header, data = read_csv(fig2_runs / f"fig2a_{kind.value}.csv")
        assert header == cli.SIM_HEADER
        assert data.shape == (501, 5)
        t = data[:, 0]
        assert np.abs(data[:, 2] - np.cos(t / 2) ** 2).max() < 1e-6
        assert np.abs(data[:, 4] - 1).max() < 1e-8


def test_fig2bc_traditional_equals_fig2a(fig2_runs):
    _, a = read_csv(fig2_runs / "fig2a_traditional.csv")
    _, b = read_csv(fig2_runs / "fig2bc_traditional.csv")
    common, ia, ib = np.intersect1d(np.round(a[:, 0], 9), np.round(b[:, 0], 9), return_indices=True)
    assert len(common) > 100
    ok = np.isfinite(b[ib, 2])
    for col in (2, 3, 4):
        assert np.abs(a[ia, col][ok] - b[ib, col][ok]).max() < 1e-8


@pytest.mark.parametrize("kind", ["jones-hore", "kominis"])
def test_fig2bc_dephasing_kinds_lose_entanglement(fig2_runs, kind):
    _, data = read_csv(fig2_runs / f"fig2bc_{kind}.csv")
    eof = data[:, 4][np.isfinite(data[:, 4])]
    assert eof[0] == pytest.approx(1.0)
    assert eof[-1] < 0.01


def test_simulate_summary(tmp_path, capsys):
    assert cli.main(["simulate", "fig2bc", "--out", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    rows = {line.split()[0]: line.split() for line in lines[1:]}
    assert rows["traditional"][3] == "none"
    assert rows["jones-hore"][3] == "5.900e0"


def test_simulate_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["simulate", "fig2a", "--out", str(a)]) == 0
    assert cli.main(["simulate", "fig2a", "--out", str(b)]) == 0
    for kind in Theory:
        name = f"fig2a_{kind.value}.csv"
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUTPUT_ENV, str(tmp_path / "env"))
    assert cli.main(["yield", "yield-dg", "--grid", "1"]) == 0
    assert (tmp_path / "env" / "yield-dg_yield.csv").exists()
    assert cli.main(["yield", "yield-dg", "--grid", "1", "--out", str(tmp_path / "flag")]) == 0
    assert (tmp_path / "flag" / "yield-dg_yield.csv").exists()


def test_config_error_reports_line(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text(BAD_HYPERFINE)
    assert cli.main(["simulate", str(path)]) == 1
    err = capsys.readouterr().err
    assert "bad.toml:10" in err and "nucleus" in err


def test_toml_syntax_error_reports_line(tmp_path, capsys):
    path = tmp_path / "broken.toml"
    path.write_text('name = "x"\ntheories = [\n[space]\n')
    assert cli.main(["simulate", str(path)]) == 1
    assert "broken.toml:" in capsys.readouterr().err


@pytest.mark.parametrize(
    "mutation",
    [
        ('theories = ["traditional"]', "theories = []"),
        ('theories = ["traditional"]', 'theories = ["haberkorn"]'),
        ("t_max = 1.0", "t_max = -1.0"),
        ("t_max = 1.0", "t_max = 1.0\ndt = 0.0"),
        ("nuclear_spins = []", "nuclear_spins = [0.3]"),
    ],
)
def test_invalid_scenarios_rejected(mutation):
    text = BAD_HYPERFINE.replace("hyperfine = [{electron = 1, nucleus = 0, a = 1.0}]", "")
    scenario_io.loads(text)
    with pytest.raises(ValidationError):
        scenario_io.loads(text.replace(*mutation))


def test_missing_config_is_usage_error(tmp_path):
    assert cli.main(["simulate", str(tmp_path / "nope.toml")]) == 1


@pytest.mark.parametrize("preset", scenario_io.PRESETS)
def test_dump_config_round_trip(preset, capsys):
    assert cli.main(["simulate", preset, "--dump-config"]) == 0
    dumped = capsys.readouterr().out
    assert scenario_io.loads(dumped) == scenario_io.load(preset)


def test_field_scenario_round_trip():
    scen = scenario_io.loads(FIELD_SCENARIO)
    assert scenario_io.loads(scenario_io.dumps(scen)) == scen


def test_yield_dg_grid(tmp_path, capsys):
    assert cli.main(["yield", "yield-dg", "--grid", "0.5,1,2", "--out", str(tmp_path)]) == 0
    header, data = read_csv(tmp_path / "yield-dg_yield.csv")
    assert header == cli.YIELD_HEADER
    assert np.allclose(data[:, 1], [0.6, 0.75, 0.9], atol=1e-10)
    assert data[:, 3].max() < 1e-4


def test_yield_single_point(tmp_path):
    assert cli.main(["yield", "yield-dg", "--grid", "1", "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "yield-dg_yield.csv")
    assert data.shape == (1, 4)


def test_yield_large_rate_slope(tmp_path):
    grid = ",".join(f"{k:.6g}" for k in np.geomspace(10, 1000, 7))
    assert cli.main(["yield", "yield-dg", "--grid", grid, "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "yield-dg_yield.csv")
    slope = np.polyfit(np.log(data[:, 0]), np.log(1 - data[:, 1]), 1)[0]
    assert slope == pytest.approx(-2, abs=0.1)


def test_yield_field_axis(tmp_path):
    path = tmp_path / "field.toml"
    path.write_text(FIELD_SCENARIO)
    assert cli.main(["yield", str(path), "--axis", "field", "--grid", "0.5,1", "--out", str(tmp_path)]) == 0
    _, data = read_csv(tmp_path / "field_yield.csv")
    assert data[:, 3].max() < 1e-4
    assert data[0, 1] > data[1, 1]


@pytest.mark.parametrize("grid", ["2,1", "1,1", "a,b", ""])
def test_yield_bad_grid(grid, tmp_path):
    assert cli.main(["yield", "yield-dg", "--grid", grid, "--out", str(tmp_path)]) == 1


def test_yield_oracle_disagreement_exit(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "YIELD_TOL", 0.0)
    assert cli.main(["yield", "yield-dg", "--grid", "1", "--out", str(tmp_path)]) == 2


def test_unstable_step_exit(tmp_path):
    path = tmp_path / "fast.toml"
    path.write_text(
        'name = "fast"\ntheories = ["jones-hore"]\n[hamiltonian]\nomega1 = 1.5\nomega2 = 0.5\n'
        "[reaction]\nk_s = 50.0\nk_t = 50.0\n[integration]\nt_max = 5.0\ndt = 0.5\npoints = 10\n"
    )
    assert cli.main(["simulate", str(path), "--out", str(tmp_path)]) == 2


def sensitivity_output(capsys, *flags):
    assert cli.main(["sensitivity", *flags]) == 0
    return dict(
        (line[:24].strip(), line[24:].strip()) for line in capsys.readouterr().out.splitlines()
    )


def test_sensitivity_shot_noise(capsys):
    rows = sensitivity_output(capsys, "--n0", "1e16", "--tr", "1e-5", "--tau", "1")
    assert rows == {"shot-noise limit": "1.129e-12 G"}


def test_sensitivity_snr(capsys):
    rows = sensitivity_output(capsys, "--snr", "100", "--tr", "1e-5")
    assert rows["S/N-limited"] == "3.571e-4 G"


def test_sensitivity_lifetime(capsys):
    rows = sensitivity_output(capsys, "--te", "1e-6", "--dte-db", "1e-3", "--snr", "1", "--tr", "1e-5")
    assert rows["entanglement-lifetime"] == "1.000e-4 G"
    assert rows["lifetime precision"] == "1.000e-7 s"
    assert rows["lifetime bound"] == "VIOLATED (ratio 3.571e2)"


def test_sensitivity_observable(capsys):
    rows = sensitivity_output(capsys, "--delta-o", "0.01", "--do-db", "2")
    assert rows["observable-mediated"] == "5.000e-3 G"


@pytest.mark.parametrize(
    "flags",
    [[], ["--te", "1e-6"], ["--delta-o", "0.1"], ["--n0", "-1", "--tr", "1", "--tau", "1"], ["--n0", "x"]],
)
def test_sensitivity_usage_errors(flags):
    with pytest.raises(SystemExit) if "x" in flags else _nullcontext():
        assert cli.main(["sensitivity", *flags]) == 1


class _nullcontext:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def test_argparse_errors_exit_one():
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate"])
    assert exc.value.code == 1


def test_sci_formatting():
    assert cli.sci(1.12938e-12) == "1.129e-12"
    assert cli.sci(357.142857) == "3.571e2"
    assert cli.sci(float("inf")) == "inf"


def test_check_subcommand(capsys):
    assert cli.main(["check"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 8 and "FAIL" not in out
