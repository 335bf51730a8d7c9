import pytest
from hypothesis import given, strategies as st

from neuroloop.agents.navigation import NavigationParams
from neuroloop.chip import ChipConfig
from neuroloop.cli import resolve_seed
from neuroloop.config import (
    builtin_names,
    deep_merge,
    dump_config,
    from_dict,
    load_config,
    to_dict,
)
from neuroloop.errors import ConfigError
from neuroloop.fields import FieldParams, KernelParams


def test_shipped_configs_load():
    names = builtin_names()
    for expected in ("dpi", "dnf_selfsustain", "dnf_decay", "wta", "navigate", "sequence", "energy"):
        assert expected in names
    for name in names:
        assert isinstance(load_config(name), dict)


def test_include_and_override(tmp_path):
    (tmp_path / "base.yaml").write_text("a: 1\nnested: {x: 1, y: 2}\n")
    (tmp_path / "top.yaml").write_text("include: base.yaml\nnested: {y: 5}\nb: 3\n")
    assert load_config(tmp_path / "top.yaml") == {"a": 1, "nested": {"x": 1, "y": 5}, "b": 3}


def test_include_builtin_by_name(tmp_path):
    (tmp_path / "mine.yaml").write_text("include: dnf_selfsustain\ndnf: {run_tau: 3}\n")
    cfg = load_config(tmp_path / "mine.yaml")
    assert cfg["dnf"]["run_tau"] == 3 and cfg["dnf"]["field"]["h"] == -5


def test_include_cycle(tmp_path):
    (tmp_path / "a.yaml").write_text("include: b.yaml\n")
    (tmp_path / "b.yaml").write_text("include: a.yaml\n")
    with pytest.raises(ConfigError, match="cycle"):
        load_config(tmp_path / "a.yaml")


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("no_such_config_anywhere")


def test_bad_top_level(tmp_path):
    (tmp_path / "x.yaml").write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "x.yaml")


def test_unknown_key_names_path():
    with pytest.raises(ConfigError) as info:
        from_dict(NavigationParams, {"network": {"dvs_gain": 3}}, "navigate.params")
    assert "navigate.params.network.dvs_gain" in str(info.value)


def test_nested_tuples():
    p = from_dict(NavigationParams, {"network": {"obstacle_bands": [[4, 2], [9, 1]]}})
    assert p.network.obstacle_bands == ((4, 2), (9, 1))


def test_dataclass_round_trip():
    p = FieldParams(tau=0.02, h=-3.0, n=32)
    assert from_dict(FieldParams, to_dict(p)) == p
    k = KernelParams(4.0, 1.0, 2.0, 5.0)
    assert from_dict(KernelParams, to_dict(k)) == k


def test_chip_config_round_trip():
    cfg = ChipConfig(seed=5, mismatch_cv=0.2)
    assert from_dict(ChipConfig, to_dict(cfg)) == cfg


def test_dump_is_stable():
    data = {"b": [1, 2], "a": {"z": 0.1, "y": None}}
    assert dump_config(data) == dump_config(data)
    assert dump_config(data).splitlines()[0] == "b:"


@given(st.dictionaries(st.text("abc", min_size=1, max_size=2), st.integers(), max_size=4),
       st.dictionaries(st.text("abc", min_size=1, max_size=2), st.integers(), max_size=4))
def test_merge_is_right_biased(a, b):
    m = deep_merge(a, b)
    assert set(m) == set(a) | set(b)
    assert all(m[k] == b[k] for k in b)


class TestSeed:
    def test_flag_wins(self, monkeypatch):
        monkeypatch.setenv("NEUROLOOP_SEED", "7")
        assert resolve_seed(3, {"seed": 9}) == 3

    def test_env_fallback(self, monkeypatch):
        monkeypatch.setenv("NEUROLOOP_SEED", "7")
        assert resolve_seed(None, {"seed": 9}) == 7

    def test_config_then_zero(self, monkeypatch):
        monkeypatch.delenv("NEUROLOOP_SEED", raising=False)
        assert resolve_seed(None, {"seed": 9}) == 9
        assert resolve_seed(None, {}) == 0

    def test_bad_env(self, monkeypatch):
        monkeypatch.setenv("NEUROLOOP_SEED", "seven")
        with pytest.raises(ConfigError):
            resolve_seed(None, {})
