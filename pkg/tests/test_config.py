import glob
import math
import os

import pytest
from hypothesis import given, strategies as st

from ghostfringe.config import config_hash, emit_config, load_config, parse_config, parse_length
from ghostfringe.errors import ConfigError
from ghostfringe.scenario import ScenarioConfig

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


@pytest.mark.parametrize("text,value", [("85 µm", 85e-6), ("85um", 85e-6), ("632.8 nm", 632.8e-9),
                                        ("2 cm", 0.02), ("0.4 m", 0.4), ("1e-3 m", 1e-3),
                                        ("4 μm", 4e-6), ("2.5mm", 2.5e-3)])
def test_parse_length_units(text, value):
    assert parse_length(text) == pytest.approx(value, rel=1e-15)


@pytest.mark.parametrize("text", ["85", "85 ft", "µm", "", "1,5 mm"])
def test_bare_or_unknown_lengths_rejected(text):
    with pytest.raises(ValueError):
        parse_length(text)


configs = st.builds(
    ScenarioConfig,
    scheme=st.just("B"),
    n=st.integers(128, 4096),
    dx=st.floats(1e-6, 4e-6),
    coherence_length=st.floats(4e-6, 50e-6),
    envelope_width=st.one_of(st.just(math.inf), st.floats(1e-3, 1e-2)),
    w0=st.floats(0.1, 10.0),
    ensemble_size=st.integers(2, 10 ** 6),
    master_seed=st.integers(0, 2 ** 63 - 1),
    block_size=st.integers(1, 1000),
    fixed_arm=st.sampled_from([1, 2]),
    test_aperture=st.just("double"),
    ref_aperture=st.sampled_from(["double", "single", "incomplete"]),
    retained_fraction=st.floats(0.1, 1.0),
)


@given(configs)
def test_round_trip(cfg):
    again = parse_config(emit_config(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)


def test_shipped_configs_load():
    paths = sorted(glob.glob(os.path.join(CONFIG_DIR, "*.ini")))
    assert len(paths) == 4
    for p in paths:
        cfg = load_config(p)
        assert parse_config(emit_config(cfg)) == cfg


def test_defaults_filled_in():
    cfg = parse_config("[scheme]\nscheme = B\n")
    assert cfg.n == 2048 and cfg.dx == pytest.approx(4e-6)
    assert cfg.ensemble_size == 5000 and cfg.geo["test_detector_distance"] == pytest.approx(0.42)
    assert parse_config("[scheme]\nscheme = a\n").ensemble_size == 10_000


def test_aliases_and_duplicates():
    cfg = parse_config("[scheme]\nscheme = B\n[aperture]\ntest_aperture = double\n"
                       "ref_aperture = incomplete\n")
    assert cfg.ref_aperture == "incomplete"
    with pytest.raises(ConfigError) as info:
        parse_config("[scheme]\nscheme = B\n[aperture]\nreference = single\nref_aperture = double\n")
    assert info.value.lineno == 5 and "twice" in str(info.value)


@pytest.mark.parametrize("text,line", [
    ("[scheme]\nscheme = B\n[grid]\ndx = 4\n", 4),
    ("[scheme]\nscheme = B\n\n[optics]\nfoo = 1\n", 4),
    ("[scheme]\nscheme = B\n[grid]\nn = 2048\nspacing = 4 um\n", 5),
    ("[scheme]\nscheme = B\n[geometry]\nslit_distance = 2 cm\n", None),
    ("[scheme]\nscheme = B\n[geometry]\nfocal = 2 cm\n", 4),
    ("[grid]\nn = 16\n", None),
    ("n = 16\n", 1),
    ("[scheme]\nscheme = B\n[grid]\nn = many\n", 4),
])
def test_errors_carry_line_numbers(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.lineno == line
    if line is not None:
        assert f"line {line}" in str(info.value)


@pytest.mark.parametrize("body", [
    "[aperture]\nslit_width = 400 um\nslit_separation = 330 um\n",
    "[aperture]\nretained_fraction = 0\n",
    "[aperture]\ntest = triangle\n",
    "[ensemble]\nsize = 1\n",
    "[ensemble]\nfixed_arm = 3\n",
    "[spectrum]\nkind = lorentzian\n",
    "[geometry]\ntest_detector_distance = 1 cm\n",
])
def test_inconsistent_values_rejected(body):
    with pytest.raises(ConfigError):
        parse_config("[scheme]\nscheme = B\n" + body)


def test_scheme_a_requires_double_object():
    with pytest.raises(ConfigError):
        parse_config("[scheme]\nscheme = A\n[aperture]\ntest = single\n")
