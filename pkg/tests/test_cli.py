"""CLI subcommands: files, exit codes, determinism and XML validity."""

import json
import os
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from crackid import cli

CONFIG_SMALL = """
[material]
young = 73000
poisson = 0.34
rho = auto

[laws]
friction_bound = 1e-5
friction_delta = 1e-3
toughness = 1e-3
cohesion_length = 1e-2
cohesion_exponent = 1

[penalty]
eps = 1e-8

[geometry]
h_measure = 0.05
h_identify = auto
coarse_spacing = 0.1
true_interface = kinked
psi0 = 0.25

[algorithm]
load_case = contact
n_max = {n_max}
snapshot_every = 10
"""


@pytest.fixture
def config_path(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text(CONFIG_SMALL.format(n_max=3))
    return str(path)


def run(args):
    return cli.main(args)


class TestMeasure:
    def test_outputs_exist(self, config_path, tmp_path):
        out = str(tmp_path / "m")
        assert run(["measure", "--config", config_path, "--out", out]) == 0
        assert os.path.isfile(os.path.join(out, "measurement.txt"))
        assert os.path.isfile(os.path.join(out, "deformed.svg"))
        ET.parse(os.path.join(out, "deformed.svg"))
        manifest = json.load(open(os.path.join(out, "manifest.json")))
        assert manifest["subcommand"] == "measure"
        assert manifest["parameters"]["E_Y"] == 73000.0
        assert "total" in manifest["timings_s"]

    def test_missing_config_exit_2(self, tmp_path, capsys):
        out = str(tmp_path / "m")
        rc = run(["measure", "--config", str(tmp_path / "nope.cfg"), "--out", out])
        assert rc == 2
        assert "nope.cfg" in capsys.readouterr().err

    def test_stretch_case_interface_fully_open(self, config_path, tmp_path):
        out = str(tmp_path / "ms")
        assert run(["measure", "--config", config_path, "--out", out,
                    "--load-case", "stretch"]) == 0
        svg = open(os.path.join(out, "deformed.svg")).read()
        # no contact-coloured interface segments in the separated band;
        # the legend (swatch + label) accounts for exactly two occurrences
        from crackid.svgplot import STATUS_COLORS
        assert svg.count(STATUS_COLORS["contact"]) == 2
        assert svg.count(STATUS_COLORS["open"]) > 2


class TestIdentify:
    def _measure(self, config_path, tmp_path):
        mout = str(tmp_path / "m")
        assert run(["measure", "--config", config_path, "--out", mout]) == 0
        return os.path.join(mout, "measurement.txt")

    def test_n_max_zero_single_row(self, tmp_path):
        cfg = tmp_path / "exp0.cfg"
        cfg.write_text(CONFIG_SMALL.format(n_max=0))
        mpath = self._measure(str(cfg), tmp_path)
        out = str(tmp_path / "i0")
        assert run(["identify", "--config", str(cfg), "--measurement", mpath,
                    "--out", out]) == 0
        lines = open(os.path.join(out, "iterations.csv")).read().strip().split("\n")
        assert len(lines) == 2  # header + single data row

    def test_outputs_and_determinism(self, config_path, tmp_path):
        mpath = self._measure(config_path, tmp_path)
        out1 = str(tmp_path / "i1")
        out2 = str(tmp_path / "i2")
        for out in (out1, out2):
            assert run(["identify", "--config", config_path, "--measurement",
                        mpath, "--out", out, "--dump-gradients"]) == 0
        csv1 = open(os.path.join(out1, "iterations.csv"), "rb").read()
        csv2 = open(os.path.join(out2, "iterations.csv"), "rb").read()
        assert csv1 == csv2
        g1 = open(os.path.join(out1, "gradients.csv"), "rb").read()
        assert g1 == open(os.path.join(out2, "gradients.csv"), "rb").read()
        assert g1.decode().startswith("n,s_H,D3,Lambda2")
        for name in ("ratios.svg", "interfaces.svg", "interface_n000.txt"):
            assert os.path.isfile(os.path.join(out1, name))
            if name.endswith(".svg"):
                ET.parse(os.path.join(out1, name))

    def test_interface_overlay_curve_count(self, tmp_path):
        # with snapshots at 0,10,20,40,100,200 the overlay holds 6 curves
        from crackid import driver, svgplot
        from crackid.geometry import uniform_graph
        snaps = {n: uniform_graph(np.full(11, 0.25 - 1e-4 * n))
                 for n in (0, 10, 20, 40, 100, 200)}
        path = str(tmp_path / "o.svg")
        shown = svgplot.interface_overlay(
            path, snaps, driver.ExperimentConfig().true_graph())
        assert shown == 6
        ET.parse(path)

    def test_missing_measurement_exit_2(self, config_path, tmp_path):
        out = str(tmp_path / "ix")
        rc = run(["identify", "--config", config_path, "--measurement",
                  str(tmp_path / "missing.txt"), "--out", out])
        assert rc == 2


class TestGradientCheck:
    def test_pass_and_negative_control(self, tmp_path):
        cfg = tmp_path / "exp.cfg"
        cfg.write_text(CONFIG_SMALL.format(n_max=0))
        out = str(tmp_path / "g")
        rc = run(["gradient-check", "--config", str(cfg), "--out", out])
        assert rc == 0
        table = open(os.path.join(out, "gradient_check.csv")).read().strip().split("\n")
        assert table[0] == "s_H,analytic,fd_coarse,fd_fine,rel_err"
        assert len(table) == 10  # 9 interior nodes
        rels = [float(l.split(",")[-1]) for l in table[1:]]
        assert max(rels) <= 0.05
        # corrupted analytic sign must fail with exit code 4
        rc = run(["gradient-check", "--config", str(cfg), "--out",
                  str(tmp_path / "gc"), "--corrupt-sign"])
        assert rc == 4


class TestLawsCheck:
    def test_pass(self, config_path, tmp_path):
        assert run(["laws-check", "--config", config_path,
                    "--out", str(tmp_path / "l")]) == 0

    def test_eps_override_in_manifest(self, config_path, tmp_path):
        out = str(tmp_path / "l2")
        assert run(["laws-check", "--config", config_path, "--out", out,
                    "--eps", "1e-6"]) == 0
        manifest = json.load(open(os.path.join(out, "manifest.json")))
        assert manifest["parameters"]["eps"] == 1e-6
