"""Run configurations, check suites, report rendering, CLI entry points."""

import io
import json
import re

import numpy as np
import pytest

from latsum.cli import main
from latsum.crystal import preset
from latsum.errors import ArgumentError, ConfigError
from latsum.harness import (
    CHECK_SUITES,
    RunConfig,
    check_suite,
    config_from_dict,
    load_config,
    random_cell,
    render_report,
    resolve_grid,
    run,
)
from latsum.trunc import CSV_HEADER
from latsum.wolf import shell_avoiding_radii


def test_runconfig_validation():
    cell = preset("cscl")
    RunConfig(cell=cell)  # ewald point run is the default
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="montecarlo")
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="sphere", alpha=0.4, grid=(2.0, 3.0))
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="wolf_damped", grid=(2.0, 3.0))
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="ewald", grid=(2.0, 3.0))
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="sphere")
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="wolf", s=1.5, grid=(2.0, 3.0))
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="ewald", s=2.0)
    with pytest.raises(ConfigError):
        RunConfig(cell=cell, method="wolf_damped", alpha=-1.0, grid=(2.0, 3.0))


def test_config_documents():
    doc = {"preset": "cscl", "method": "wolf", "grid": {"min": 5, "max": 9, "count": 4}}
    config = config_from_dict(doc)
    assert config.method == "wolf"
    assert config.grid == (5.0, 9.0, 4)
    assert config.cell.nsites == 2
    # round trip through the serialized form
    again = config_from_dict(config.to_dict())
    assert again.method == config.method
    assert again.grid == config.grid

    explicit = config_from_dict(
        {
            "lattice": {"e1": [1, 0, 0], "e2": [0, 1, 0], "e3": [0, 0, 1]},
            "sites": [{"q": 1.0, "frac": [0, 0, 0]}, {"q": -1.0, "frac": [0.5, 0.5, 0.5]}],
            "method": "zeta",
            "s": 2.0,
        }
    )
    assert explicit.s == 2.0
    roundtrip = config_from_dict(explicit.to_dict())
    assert np.allclose(roundtrip.cell.fractions, explicit.cell.fractions)

    with pytest.raises(ConfigError):
        config_from_dict({"preset": "cscl", "method": "wolf", "grid": (5.0, 9.0, 4), "mode": "x"})
    with pytest.raises(ConfigError):
        config_from_dict({"preset": "unknownium"})
    with pytest.raises(ConfigError):
        config_from_dict({"method": "ewald"})
    with pytest.raises(ConfigError):
        config_from_dict({"preset": "cscl", "method": "sphere", "grid": {"min": 2}})
    with pytest.raises(ConfigError):
        config_from_dict({"preset": "cscl", "method": "sphere", "grid": "2:3"})
    with pytest.raises(ConfigError):
        config_from_dict({"preset": "cscl", "s": "one"})


def test_load_config(tmp_path):
    path = tmp_path / "run.json"
    RunConfig(cell=preset("cscl"), method="sphere", grid=(2.0, 4.0, 3)).save(path)
    loaded = load_config(path)
    assert loaded.method == "sphere"
    assert loaded.grid == (2.0, 4.0, 3)
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_resolve_grid():
    cell = preset("cscl")
    radii = resolve_grid(cell, (5.0, 9.0, 6), "sphere")
    assert radii == shell_avoiding_radii(cell, 5.0, 9.0, 6)
    cubes = resolve_grid(cell, (2.0, 6.0, 5), "cube")
    assert cubes == [2.0, 3.0, 4.0, 5.0, 6.0]
    passthrough = resolve_grid(cell, (2.5, 3.5), "sphere")
    assert passthrough == [2.5, 3.5]


def test_run_point_output():
    buf = io.StringIO()
    assert run(RunConfig(cell=preset("cscl")), stream=buf) == 0
    assert buf.getvalue() == "method=ewald s=1 value=-2.0353615094525956\n"
    buf = io.StringIO()
    run(RunConfig(cell=preset("rocksalt"), method="zeta", s=2.0), stream=buf)
    assert re.fullmatch(r"method=zeta s=2 value=-10\.0774246083577\d+\n", buf.getvalue())


def test_run_sweep_deterministic():
    config = RunConfig(cell=preset("cscl"), method="sphere", grid=(2.1, 3.0))
    outputs = []
    for _ in range(2):
        buf = io.StringIO()
        assert run(config, stream=buf) == 0
        outputs.append(buf.getvalue())
    assert outputs[0] == outputs[1]
    lines = outputs[0].splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 3


def test_run_sweep_to_file(tmp_path):
    out = tmp_path / "series.csv"
    config = RunConfig(cell=preset("cscl"), method="cube", grid=(2.0, 4.0, 3), out=str(out))
    assert run(config) == 0
    assert out.read_text().splitlines()[0] == ",".join(CSV_HEADER)


def test_random_cell_reproducible():
    a = random_cell(np.random.default_rng(123))
    b = random_cell(np.random.default_rng(123))
    assert np.array_equal(a.charges, b.charges)
    assert np.array_equal(a.fractions, b.fractions)
    assert abs(a.charges.sum()) < 1e-12


def test_check_suite_names():
    with pytest.raises(ArgumentError):
        check_suite("everything")
    assert set(CHECK_SUITES) == {"residue", "functional", "theorem", "ewald_invariance", "oracle"}


@pytest.mark.parametrize("suite", ["residue", "functional", "oracle"])
def test_fast_check_suites_pass(suite):
    report = check_suite(suite)
    assert report.overall
    assert len(report.checks) >= 2


def test_render_report_format():
    report = check_suite("residue")
    text = render_report(report)
    lines = text.splitlines()
    assert lines[-1] in ("PASS", "FAIL")
    pattern = re.compile(
        r"^residue:[a-z0-9_]+ measured=[-0-9.e+]+ reference=[-0-9.e+]+ tol=[0-9.einf+-]+ (pass|FAIL)$"
    )
    for line in lines[:-1]:
        assert pattern.match(line), line


def test_cli_energy(capsys):
    assert main(["energy", "--preset", "cscl"]) == 0
    out = capsys.readouterr().out
    assert out == "method=ewald s=1 value=-2.0353615094525956\n"


def test_cli_zeta(capsys):
    assert main(["zeta", "--preset", "cscl", "--s", "4"]) == 0
    assert capsys.readouterr().out.startswith("method=zeta s=4 value=-7.18198433610")


def test_cli_converge(tmp_path, capsys):
    out = tmp_path / "wolf.csv"
    code = main(
        ["converge", "--preset", "cscl", "--method", "wolf", "--r", "5:9:4", "--out", str(out)]
    )
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 5
    assert all(line.split(",")[0] == "wolf" for line in lines[1:])


def test_cli_converge_comma_grid(capsys):
    assert main(["converge", "--preset", "cscl", "--method", "cube", "--r", "2,3,4"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4


def test_cli_config_file(tmp_path, capsys):
    path = tmp_path / "cell.json"
    path.write_text(
        json.dumps(
            {
                "lattice": {"e1": [1, 0, 0], "e2": [0, 1, 0], "e3": [0, 0, 1]},
                "sites": [
                    {"q": 1.0, "frac": [0, 0, 0]},
                    {"q": -1.0, "frac": [0.5, 0.5, 0.5]},
                ],
            }
        )
    )
    assert main(["energy", "--config", str(path)]) == 0
    out = capsys.readouterr().out
    # same geometry as the cscl preset
    assert out == "method=ewald s=1 value=-2.0353615094525956\n"


def test_cli_error_exit_codes(tmp_path, capsys):
    assert main(["energy", "--preset", "kryptonite"]) == 2
    assert "error:" in capsys.readouterr().err
    assert main(["converge", "--preset", "cscl", "--method", "wolf_damped", "--r", "5:9:4"]) == 2
    capsys.readouterr()
    assert main(["converge", "--preset", "cscl", "--method", "wolf", "--r", "bogus"]) == 2
    capsys.readouterr()
    missing = tmp_path / "nope" / "out.csv"
    code = main(
        [
            "converge",
            "--preset",
            "cscl",
            "--method",
            "cube",
            "--r",
            "2,3",
            "--out",
            str(missing),
        ]
    )
    assert code == 3
    capsys.readouterr()


def test_cli_check_single_suite(capsys):
    assert main(["check", "--suite", "residue"]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[-1] == "PASS"
    assert "residue:" in out
