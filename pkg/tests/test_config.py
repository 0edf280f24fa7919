import numpy as np
import pytest

from darkfluor.atom import EightLevelParams, FourLevelParams, field_for_larmor
from darkfluor.config import ConfigError, RunConfig, load_config, parse_config


def test_defaults():
    cfg = RunConfig()
    assert cfg.model == "eight"
    assert cfg.field_mg == 39.0
    assert isinstance(cfg.params(), EightLevelParams)
    assert cfg.detuning_grid_mhz().size == 201


def test_parse_full_example():
    cfg = parse_config(
        """
        # four-level power scan
        model = four-level
        rabi_ir_mhz = 1.5
        larmor_khz = 30   # D-state splitting
        detuning_ir_mhz = 0
        power_points = 50
        larmor_list_khz = 5, 10, 20
        fit_free = b_field_mg, scale
        show_populations = yes
        """
    )
    assert cfg.model == "four"
    assert cfg.larmor_list_khz == (5.0, 10.0, 20.0)
    assert cfg.fit_free == ("b_field_mg", "scale")
    assert cfg.show_populations is True
    p = cfg.params()
    assert isinstance(p, FourLevelParams)
    assert p.delta_zeeman == pytest.approx(2 * np.pi * 30e3)
    assert p.gamma_t == pytest.approx(2 * np.pi * 23.1e6)
    assert cfg.field_mg == pytest.approx(field_for_larmor(30e3))


@pytest.mark.parametrize(
    "text,match",
    [
        ("\nrabi_ir_mhzz = 1", "2: unknown key"),
        ("model = four\nmodel = eight", "2: duplicate key"),
        ("rabi_ir_mhz 1", "1: expected"),
        ("rabi_ir_mhz = fast", "1: bad value"),
        ("model = nine", "model must be"),
        ("b_field_mg = 3\nlarmor_khz = 4", "not both"),
        ("b_field_mg = -3", ">= 0"),
        ("power_spacing = cubic", "linear or log"),
        ("fit_free = b_field", "unknown fit parameters"),
        ("polarization_ir = circular", "polarization_ir"),
        ("detuning_start_mhz = 5\ndetuning_stop_mhz = 1", None),
        ("show_populations = maybe", "bad value"),
    ],
)
def test_parse_errors(text, match):
    with pytest.raises(ConfigError, match=match):
        cfg = parse_config(text)
        cfg.detuning_grid_mhz()


def test_load_config_missing(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.cfg")


def test_load_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("b_field_mg = 20\n")
    cfg = load_config(path)
    assert cfg.eight_level().b_field.magnitude_mG == 20.0
    assert cfg.fit_initial()["b_field_mg"] == 20.0
    t = cfg.template()
    assert t.rabi_ir == 0.0 and t.gamma_dp > 0


def test_power_grid():
    cfg = RunConfig(power_points=5)
    g = cfg.power_grid_mhz2(3.0)
    assert g[0] == pytest.approx(0.1) and g[-1] == pytest.approx(90.0)
    with pytest.raises(ConfigError):
        RunConfig(power_start_mhz2=-1.0, power_stop_mhz2=5.0).power_grid_mhz2(1.0)


def test_boolean_values():
    assert parse_config("show_populations = false").show_populations is False
    assert parse_config("show_populations = On").show_populations is True
