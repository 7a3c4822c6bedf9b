"""Run-configuration file: YAML schema, validation, typed access.

Errors carry the dotted field path that failed, so a bad file points
straight at the offending key.  ``RunConfig.echo()`` returns the fully
normalized configuration (defaults filled in) as plain JSON-serializable
data for provenance stamping of every output.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .fock_oracle import BHParams
from .sources import Kick
from .states import SiteState, coherent, thermal, vacuum
from .wigner_engine import (TIME_NORMAL_TWO_POINT, TIME_SYMMETRIC,
                            CorrelatorRequest, EnsembleSpec, InitialStateSpec)
from .operator_algebra import LadderFactor


def _expect_map(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: expected a mapping")
    return obj


def _expect_list(obj, path: str) -> list:
    if not isinstance(obj, list):
        raise ConfigError(f"{path}: expected a list")
    return obj


def _get(d: dict, key: str, path: str, required: bool = True, default=None):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}: missing required field")
        return default
    return d[key]


def _as_int(v, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}: expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"{path}: must be >= {minimum}, got {v}")
    return v


def _as_float(v, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {v!r}")
    return float(v)


def _as_bool(v, path: str) -> bool:
    if not isinstance(v, bool):
        raise ConfigError(f"{path}: expected true/false, got {v!r}")
    return v


def _as_complex(v, path: str) -> complex:
    """A complex value: either a plain number or a [re, im] pair."""
    if isinstance(v, bool):
        raise ConfigError(f"{path}: expected a number or [re, im] pair, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2:
        return complex(_as_float(v[0], f"{path}[0]"), _as_float(v[1], f"{path}[1]"))
    raise ConfigError(f"{path}: expected a number or [re, im] pair, got {v!r}")


def _c_pair(z: complex) -> list:
    return [z.real, z.imag]


@dataclass(frozen=True)
class ReorderSpec:
    """The (creation, annihilation) pair for the reordering pipeline."""

    dag_site: int
    dag_time: float
    ann_site: int
    ann_time: float
    epsilon: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    """Validated, normalized run configuration."""

    params: BHParams
    init: InitialStateSpec
    n_traj: int
    master_seed: int
    dt: float
    n_workers: int
    t_grid: tuple
    kicks: tuple
    requests: tuple
    oracle_enabled: bool
    oracle_substep_dt: float
    reorder: Optional[ReorderSpec]
    epsilon: Optional[float]

    def with_seed(self, seed: int) -> "RunConfig":
        return RunConfig(self.params, self.init, self.n_traj, seed, self.dt,
                         self.n_workers, self.t_grid, self.kicks, self.requests,
                         self.oracle_enabled, self.oracle_substep_dt,
                         self.reorder, self.epsilon)

    def ensemble_spec(self) -> EnsembleSpec:
        return EnsembleSpec(ring=self.params.ring(), init=self.init,
                            n_traj=self.n_traj, master_seed=self.master_seed,
                            dt=self.dt, t_grid=self.t_grid, kicks=self.kicks,
                            n_workers=self.n_workers)

    def echo(self) -> dict:
        """Normalized config as plain data, defaults included."""
        sites = []
        for s in self.init.sites:
            if s.kind == "coherent":
                sites.append({"kind": s.kind, "alpha": _c_pair(s.alpha)})
            elif s.kind == "thermal":
                sites.append({"kind": s.kind, "nbar": s.nbar})
            else:
                sites.append({"kind": s.kind})
        out = {
            "model": {"n_sites": self.params.n_sites, "omega0": self.params.omega0,
                      "kappa": self.params.kappa, "hop_J": self.params.hop_J,
                      "cutoff": self.params.cutoff},
            "initial": {"sites": sites},
            "ensemble": {"n_traj": self.n_traj, "master_seed": self.master_seed,
                         "dt": self.dt, "n_workers": self.n_workers},
            "grid": {"t_start": self.t_grid[0], "t_stop": self.t_grid[-1],
                     "n_points": len(self.t_grid)},
            "kicks": [{"site": k.site, "time": k.time,
                       "amplitude": _c_pair(k.amplitude)} for k in self.kicks],
            "requests": [
                {"ordering": r.ordering,
                 "factors": [{"site": f.mode, "dagger": f.dagger, "time": f.time}
                             for f in r.factors]}
                for r in self.requests],
            "oracle": {"enabled": self.oracle_enabled,
                       "substep_dt": self.oracle_substep_dt},
        }
        if self.reorder is not None:
            out["reorder"] = {
                "dag_site": self.reorder.dag_site, "dag_time": self.reorder.dag_time,
                "ann_site": self.reorder.ann_site, "ann_time": self.reorder.ann_time,
            }
            if self.reorder.epsilon is not None:
                out["reorder"]["epsilon"] = self.reorder.epsilon
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        return out


def _parse_site(entry, path: str) -> SiteState:
    d = _expect_map(entry, path)
    kind = _get(d, "kind", path)
    if kind == "coherent":
        return coherent(_as_complex(_get(d, "alpha", path), f"{path}.alpha"))
    if kind == "thermal":
        nbar = _as_float(_get(d, "nbar", path), f"{path}.nbar")
        if nbar < 0:
            raise ConfigError(f"{path}.nbar: must be >= 0")
        return thermal(nbar)
    if kind == "vacuum":
        return vacuum()
    raise ConfigError(f"{path}.kind: unknown state kind {kind!r}")


def _parse_factor(entry, path: str) -> LadderFactor:
    d = _expect_map(entry, path)
    return LadderFactor(
        mode=_as_int(_get(d, "site", path), f"{path}.site", minimum=0),
        dagger=_as_bool(_get(d, "dagger", path), f"{path}.dagger"),
        time=_as_float(_get(d, "time", path), f"{path}.time"),
    )


def parse_config(data: dict) -> RunConfig:
    """Validate a parsed mapping and build the typed configuration."""
    root = _expect_map(data, "config")

    m = _expect_map(_get(root, "model", "config"), "model")
    params = BHParams(
        n_sites=_as_int(_get(m, "n_sites", "model"), "model.n_sites", minimum=1),
        omega0=_as_float(_get(m, "omega0", "model"), "model.omega0"),
        kappa=_as_float(_get(m, "kappa", "model"), "model.kappa"),
        hop_J=_as_float(_get(m, "hop_J", "model"), "model.hop_J"),
        cutoff=_as_int(_get(m, "cutoff", "model"), "model.cutoff", minimum=1),
    )

    ini = _expect_map(_get(root, "initial", "config"), "initial")
    site_entries = _expect_list(_get(ini, "sites", "initial"), "initial.sites")
    if len(site_entries) != params.n_sites:
        raise ConfigError(
            f"initial.sites: need {params.n_sites} entries, got {len(site_entries)}")
    sites = [_parse_site(e, f"initial.sites[{i}]") for i, e in enumerate(site_entries)]
    init = InitialStateSpec(sites=tuple(sites))

    ens = _expect_map(_get(root, "ensemble", "config"), "ensemble")
    n_traj = _as_int(_get(ens, "n_traj", "ensemble"), "ensemble.n_traj", minimum=1)
    master_seed = _as_int(_get(ens, "master_seed", "ensemble"), "ensemble.master_seed",
                          minimum=0)
    dt = _as_float(_get(ens, "dt", "ensemble"), "ensemble.dt")
    if dt <= 0:
        raise ConfigError("ensemble.dt: must be > 0")
    n_workers = _as_int(_get(ens, "n_workers", "ensemble", required=False, default=1),
                        "ensemble.n_workers", minimum=1)

    g = _expect_map(_get(root, "grid", "config"), "grid")
    t_start = _as_float(_get(g, "t_start", "grid", required=False, default=0.0),
                        "grid.t_start")
    t_stop = _as_float(_get(g, "t_stop", "grid"), "grid.t_stop")
    n_points = _as_int(_get(g, "n_points", "grid"), "grid.n_points", minimum=1)
    if n_points > 1 and t_stop <= t_start:
        raise ConfigError("grid.t_stop: must exceed grid.t_start")
    t_grid = tuple(np.linspace(t_start, t_stop, n_points).tolist())

    kicks = []
    for i, entry in enumerate(_expect_list(
            _get(root, "kicks", "config", required=False, default=[]), "kicks")):
        d = _expect_map(entry, f"kicks[{i}]")
        kicks.append(Kick(
            site=_as_int(_get(d, "site", f"kicks[{i}]"), f"kicks[{i}].site", minimum=0),
            time=_as_float(_get(d, "time", f"kicks[{i}]"), f"kicks[{i}].time"),
            amplitude=_as_complex(_get(d, "amplitude", f"kicks[{i}]"),
                                  f"kicks[{i}].amplitude"),
        ))

    requests = []
    for i, entry in enumerate(_expect_list(
            _get(root, "requests", "config", required=False, default=[]), "requests")):
        d = _expect_map(entry, f"requests[{i}]")
        ordering = _get(d, "ordering", f"requests[{i}]")
        if ordering not in (TIME_SYMMETRIC, TIME_NORMAL_TWO_POINT):
            raise ConfigError(f"requests[{i}].ordering: unknown ordering {ordering!r}")
        raw = _expect_list(_get(d, "factors", f"requests[{i}]"),
                           f"requests[{i}].factors")
        factors = tuple(_parse_factor(e, f"requests[{i}].factors[{j}]")
                        for j, e in enumerate(raw))
        if ordering == TIME_NORMAL_TWO_POINT:
            dags = [f for f in factors if f.dagger]
            anns = [f for f in factors if not f.dagger]
            if len(dags) != 1 or len(anns) != 1:
                raise ConfigError(
                    f"requests[{i}].factors: two-point reordering needs exactly one "
                    "creation and one annihilation factor")
        for f in factors:
            if f.mode >= params.n_sites:
                raise ConfigError(f"requests[{i}].factors: site {f.mode} out of range")
        requests.append(CorrelatorRequest(factors=factors, ordering=ordering))

    o = _expect_map(_get(root, "oracle", "config", required=False, default={}),
                    "oracle")
    oracle_enabled = _as_bool(_get(o, "enabled", "oracle", required=False,
                                   default=False), "oracle.enabled")
    oracle_substep_dt = _as_float(_get(o, "substep_dt", "oracle", required=False,
                                       default=1e-3), "oracle.substep_dt")

    reorder = None
    if "reorder" in root:
        r = _expect_map(root["reorder"], "reorder")
        eps = _get(r, "epsilon", "reorder", required=False)
        reorder = ReorderSpec(
            dag_site=_as_int(_get(r, "dag_site", "reorder"), "reorder.dag_site",
                             minimum=0),
            dag_time=_as_float(_get(r, "dag_time", "reorder"), "reorder.dag_time"),
            ann_site=_as_int(_get(r, "ann_site", "reorder"), "reorder.ann_site",
                             minimum=0),
            ann_time=_as_float(_get(r, "ann_time", "reorder"), "reorder.ann_time"),
            epsilon=None if eps is None else _as_float(eps, "reorder.epsilon"),
        )
        for site, key in ((reorder.dag_site, "dag_site"), (reorder.ann_site, "ann_site")):
            if site >= params.n_sites:
                raise ConfigError(f"reorder.{key}: site {site} out of range")

    eps_raw = _get(root, "epsilon", "config", required=False)
    epsilon = None if eps_raw is None else _as_float(eps_raw, "epsilon")

    known = {"model", "initial", "ensemble", "grid", "kicks", "requests",
             "oracle", "reorder", "epsilon"}
    for key in root:
        if key not in known:
            raise ConfigError(f"{key}: unknown top-level field")

    return RunConfig(params=params, init=init, n_traj=n_traj,
                     master_seed=master_seed, dt=dt, n_workers=n_workers,
                     t_grid=t_grid, kicks=tuple(kicks), requests=tuple(requests),
                     oracle_enabled=oracle_enabled,
                     oracle_substep_dt=oracle_substep_dt,
                     reorder=reorder, epsilon=epsilon)


def load_config(path: str) -> RunConfig:
    """Read and validate a YAML run configuration."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path} ({exc})") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from exc
    if data is None:
        raise ConfigError("config: file is empty")
    return parse_config(data)
