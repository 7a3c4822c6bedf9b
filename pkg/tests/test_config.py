import copy

import pytest

from symwick.config import ReorderSpec, RunConfig, load_config, parse_config
from symwick.errors import ConfigError

BASE = {
    "model": {"n_sites": 2, "omega0": 0.0, "kappa": 0.1, "hop_J": 1.0,
              "cutoff": 8},
    "initial": {"sites": [{"kind": "coherent", "alpha": [1.2, 0.0]},
                          {"kind": "vacuum"}]},
    "ensemble": {"n_traj": 100, "master_seed": 7, "dt": 0.001},
    "grid": {"t_stop": 2.0, "n_points": 21},
}


def cfg_data(**overrides):
    data = copy.deepcopy(BASE)
    data.update(copy.deepcopy(overrides))
    return data


def test_happy_path():
    cfg = parse_config(cfg_data())
    assert cfg.params.n_sites == 2 and cfg.params.cutoff == 8
    assert cfg.init.sites[0].alpha == 1.2 + 0j
    assert cfg.init.sites[1].kind == "vacuum"
    assert cfg.n_traj == 100 and cfg.master_seed == 7
    assert cfg.n_workers == 1          # default
    assert cfg.t_grid[0] == 0.0 and cfg.t_grid[-1] == 2.0
    assert len(cfg.t_grid) == 21
    assert cfg.kicks == () and cfg.requests == ()
    assert not cfg.oracle_enabled
    assert cfg.reorder is None and cfg.epsilon is None


def test_requests_and_reorder():
    data = cfg_data(
        requests=[{"ordering": "time_symmetric",
                   "factors": [{"site": 0, "dagger": True, "time": 0.5},
                               {"site": 0, "dagger": False, "time": 0.5}]},
                  {"ordering": "time_normal_two_point",
                   "factors": [{"site": 1, "dagger": True, "time": 0.3},
                               {"site": 1, "dagger": False, "time": 0.8}]}],
        reorder={"dag_site": 0, "dag_time": 0.4, "ann_site": 0,
                 "ann_time": 0.9, "epsilon": 0.002},
        epsilon=0.01,
    )
    cfg = parse_config(data)
    assert len(cfg.requests) == 2
    assert cfg.requests[0].factors[0].dagger
    assert cfg.reorder == ReorderSpec(0, 0.4, 0, 0.9, 0.002)
    assert cfg.epsilon == 0.01


def test_echo_reparses_to_same_config():
    data = cfg_data(
        kicks=[{"site": 1, "time": 0.5, "amplitude": [0.0, 0.1]}],
        requests=[{"ordering": "time_symmetric",
                   "factors": [{"site": 0, "dagger": False, "time": 1.0}]}],
        oracle={"enabled": True},
    )
    cfg = parse_config(data)
    again = parse_config(cfg.echo())
    assert again == cfg
    assert again.echo() == cfg.echo()


def test_with_seed():
    cfg = parse_config(cfg_data())
    assert cfg.with_seed(99).master_seed == 99
    assert cfg.master_seed == 7


def test_ensemble_spec_bridge():
    cfg = parse_config(cfg_data())
    spec = cfg.ensemble_spec()
    assert spec.ring.n_sites == 2 and spec.ring.hop_J == 1.0
    assert spec.n_traj == 100 and len(spec.t_grid) == 21


def test_load_config_roundtrip(tmp_path):
    import yaml
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(cfg_data()))
    assert load_config(str(path)) == parse_config(cfg_data())


def test_load_config_bad_yaml(tmp_path):
    path = tmp_path / "broken.yaml"
    path.write_text("model: [unclosed\n")
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_load_config_empty(tmp_path):
    path = tmp_path / "empty.yaml"
    path.write_text("")
    with pytest.raises(ConfigError):
        load_config(str(path))


@pytest.mark.parametrize("mutate, fragment", [
    (lambda d: d.pop("model"), "model"),
    (lambda d: d["model"].pop("cutoff"), "cutoff"),
    (lambda d: d["model"].update(n_sites=0), "n_sites"),
    (lambda d: d["model"].update(n_sites=True), "n_sites"),
    (lambda d: d["ensemble"].update(dt=0.0), "dt"),
    (lambda d: d["ensemble"].update(n_traj="many"), "n_traj"),
    (lambda d: d["initial"].update(sites=[{"kind": "vacuum"}]), "sites"),
    (lambda d: d["initial"]["sites"].__setitem__(
        0, {"kind": "squeezed"}), "kind"),
    (lambda d: d["initial"]["sites"].__setitem__(
        0, {"kind": "thermal", "nbar": -1.0}), "nbar"),
    (lambda d: d["initial"]["sites"].__setitem__(
        0, {"kind": "coherent", "alpha": [1.0]}), "alpha"),
    (lambda d: d["grid"].update(t_stop=-1.0), "t_stop"),
    (lambda d: d.update(requests=[{"ordering": "lexicographic",
                                   "factors": []}]), "ordering"),
    (lambda d: d.update(requests=[{
        "ordering": "time_normal_two_point",
        "factors": [{"site": 0, "dagger": True, "time": 0.1}]}]), "factors"),
    (lambda d: d.update(requests=[{
        "ordering": "time_symmetric",
        "factors": [{"site": 5, "dagger": False, "time": 0.1}]}]), "site"),
    (lambda d: d.update(kicks=[{"site": 0, "time": 0.5,
                                "amplitude": "big"}]), "amplitude"),
    (lambda d: d.update(reorder={"dag_site": 4, "dag_time": 0.1,
                                 "ann_site": 0, "ann_time": 0.5}), "dag_site"),
    (lambda d: d.update(extra_section=1), "extra_section"),
])
def test_validation_errors(mutate, fragment):
    data = cfg_data()
    mutate(data)
    with pytest.raises(ConfigError) as exc:
        parse_config(data)
    assert fragment in str(exc.value)


def test_not_a_mapping():
    with pytest.raises(ConfigError):
        parse_config([1, 2, 3])
