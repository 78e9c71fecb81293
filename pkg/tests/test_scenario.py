"""Scenario parsing, validation messages, unit handling, round trip."""

import copy

import numpy as np
import pytest

from pointbudget.errors import ScenarioError
from pointbudget.metrics import PointingIndex
from pointbudget.scenario import (
    normalized_dict,
    parse_scenario,
    resolve_source_channels,
)
from pointbudget.units import parse_quantity


class TestUnits:
    def test_torque_suffixes(self):
        assert parse_quantity("0.03 Nm", "torque_Nm", "f") == pytest.approx(0.03)
        assert parse_quantity("30 mNm", "torque_Nm", "f") == pytest.approx(0.03)
        assert parse_quantity("0.03 N·m", "torque_Nm", "f") == pytest.approx(0.03)

    def test_angle_suffixes(self):
        assert parse_quantity("0.1745 mrad", "angle_rad", "f") == pytest.approx(1.745e-4)
        assert parse_quantity("0.06 urad", "angle_rad", "f") == pytest.approx(6e-8)
        assert parse_quantity("0.06 µrad", "angle_rad", "f") == pytest.approx(6e-8)

    def test_frequency_conversion(self):
        assert parse_quantity("3.8 Hz", "frequency_Hz", "f") == pytest.approx(3.8)
        assert parse_quantity("5.6 rad/s", "angular_rate_rad_s", "f") == pytest.approx(5.6)
        two_pi = 2.0 * np.pi
        assert parse_quantity("1 Hz", "angular_rate_rad_s", "f") == pytest.approx(two_pi)

    def test_time_suffix(self):
        assert parse_quantity("3 ms", "time_s", "f") == pytest.approx(3e-3)

    def test_bad_unit_names_field(self):
        with pytest.raises(ScenarioError) as err:
            parse_quantity("3 parsec", "length_m", "plant.builtin.body.cg[0]")
        assert "plant.builtin.body.cg[0]" in str(err.value)

    def test_bare_number_passthrough(self):
        assert parse_quantity(5.0, "angle_rad", "f") == 5.0


class TestParsing:
    def test_shipped_ape_scenario(self, ape_config):
        assert ape_config.metric.index is PointingIndex.APE
        assert ape_config.metric.confidence == pytest.approx(0.997)
        assert ape_config.metric.requirement == pytest.approx((1.745e-4, 1.745e-4, 8.73e-4))
        assert len(ape_config.sources) == 5
        assert not ape_config.uncertainty_enabled
        assert ape_config.combination.method == "advanced"
        assert ape_config.combination.samples == 1_000_000

    def test_shipped_rpe_scenario(self, rpe_wc_config):
        cfg = rpe_wc_config
        assert cfg.metric.index is PointingIndex.RPE
        assert cfg.metric.window_s == pytest.approx(3e-3)
        assert cfg.metric.requirement == pytest.approx((6e-8, 6e-8, 6e-8))
        assert cfg.uncertainty_enabled
        assert len(cfg.parameters) == 8
        assert cfg.worstcase is not None
        assert cfg.worstcase.criteria == ("gain", "variance", "dc_gain")
        assert cfg.worstcase.gain.at_source_frequency

    def test_missing_requirement_names_field(self, ape_config):
        raw = copy.deepcopy(ape_config.normalized)
        del raw["metric"]["requirement"]
        with pytest.raises(ScenarioError) as err:
            parse_scenario(raw)
        assert err.value.field == "metric.requirement"

    def test_unknown_channel_rejected(self, ape_config):
        raw = copy.deepcopy(ape_config.normalized)
        raw["sources"][0]["input"] = "ghost_channel"
        with pytest.raises(ScenarioError) as err:
            parse_scenario(raw)
        assert "ghost_channel" in str(err.value)

    def test_worstcase_requires_uncertainty(self, rpe_wc_config):
        raw = copy.deepcopy(rpe_wc_config.normalized)
        raw["uncertainty"]["enabled"] = False
        with pytest.raises(ScenarioError) as err:
            parse_scenario(raw)
        assert err.value.field == "worstcase"

    def test_unknown_correlation_source(self, ape_config):
        raw = copy.deepcopy(ape_config.normalized)
        raw["combination"]["correlations"] = [["Gyro noise", "ghost"]]
        with pytest.raises(ScenarioError):
            parse_scenario(raw)

    def test_nonphysical_nominal_inertia_rejected(self, ape_config):
        raw = copy.deepcopy(ape_config.normalized)
        raw["plant"]["builtin"]["body"]["inertia"] = [
            [60.0, 0.0, 0.0], [0.0, 32.0, 0.0], [0.0, 0.0, 96.0]]
        with pytest.raises(ScenarioError):
            parse_scenario(raw)

    def test_drift_requires_windowed_index(self, ape_config):
        raw = copy.deepcopy(ape_config.normalized)
        raw["sources"].append({
            "name": "Thermal drift", "kind": "drift", "distribution": "delta",
            "units": "rad", "input": "sst_noise", "rate": {"x": 1e-9},
        })
        with pytest.raises(ScenarioError):
            parse_scenario(raw)


class TestRoundTrip:
    def test_parse_emit_parse_identity(self, ape_config, rpe_wc_config):
        for cfg in (ape_config, rpe_wc_config):
            again = parse_scenario(cfg.normalized)
            assert normalized_dict(again) == cfg.normalized


class TestChannelResolution:
    def test_three_axis_binding(self, ape_config):
        src = ape_config.source("Orbital disturbances")
        chans = resolve_source_channels(ape_config, src)
        assert chans == {"x": "orbital_torque_x", "y": "orbital_torque_y",
                         "z": "orbital_torque_z"}

    def test_scalar_binding(self, ape_config):
        src = ape_config.source("SADM1 disturbance")
        chans = resolve_source_channels(ape_config, src)
        assert chans == {"z": "sadm1_torque"}


class TestExternalPlant:
    def test_inline_matrices(self):
        raw = {
            "metric": {"index": "APE", "confidence": 0.997,
                       "requirement": [1.0, 1.0, 1.0]},
            "plant": {"external": {
                "a": [[-1.0, 0.0, 0.0], [0.0, -2.0, 0.0], [0.0, 0.0, -3.0]],
                "b": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                "c": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
                "d": [[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
                "inputs": ["torque_x", "torque_y", "torque_z"],
                "outputs": ["err_x", "err_y", "err_z"],
            }},
            "sources": [{
                "name": "bias", "kind": "time_constant", "distribution": "delta",
                "units": "Nm", "input": "torque", "values": {"x": 0.5, "y": 0.5, "z": 0.5},
            }],
        }
        cfg = parse_scenario(raw)
        assert cfg.external is not None
        assert cfg.external.model.n_states == 3

    def test_matrix_file(self, tmp_path):
        matfile = tmp_path / "plant.mat.txt"
        matfile.write_text(
            "# simple lag\n"
            "inputs: torque_x\n"
            "outputs: err_x\n"
            "a:\n-1.0\n"
            "b:\n1.0\n"
            "c:\n2.0\n"
            "d:\n0.0\n"
        )
        scn = tmp_path / "ext.scn"
        scn.write_text(
            "metric: {index: APE, confidence: 0.997, requirement: [1.0, 1.0, 1.0]}\n"
            "plant: {external: {matrix_file: plant.mat.txt}}\n"
            "sources:\n"
            "  - {name: bias, kind: time_constant, distribution: delta, units: Nm,\n"
            "     input: torque_x, values: {x: 0.5}}\n"
        )
        cfg = parse_scenario(scn)
        assert cfg.external.model.input_names == ("torque_x",)
        assert cfg.external.model.c[0, 0] == 2.0

    def test_uncertainty_needs_builtin(self):
        raw = {
            "metric": {"index": "APE", "confidence": 0.997,
                       "requirement": [1.0, 1.0, 1.0]},
            "plant": {"external": {
                "a": [[-1.0]], "b": [[1.0]], "c": [[1.0]], "d": [[0.0]],
                "inputs": ["torque_x"], "outputs": ["err_x"],
            }},
            "sources": [{
                "name": "bias", "kind": "time_constant", "distribution": "delta",
                "units": "Nm", "input": "torque_x", "values": {"x": 0.5},
            }],
            "uncertainty": {"enabled": True, "parameters": [
                {"name": "k", "nominal": 1.0, "lower": 0.5, "upper": 1.5}]},
        }
        with pytest.raises(ScenarioError):
            parse_scenario(raw)
