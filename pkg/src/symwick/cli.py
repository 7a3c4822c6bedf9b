"""Command-line front end.

Five subcommands: two self-contained verification suites (``verify-wick``,
``verify-contractions``), the trajectory simulator (``simulate``), the
two-point reordering pipeline (``reorder``) and exact-only evaluation
(``oracle``).  Every output — table (csv) or structured records (JSON) —
echoes the effective configuration and seed, so a result file is enough to
reproduce the run.  Exit code 0 means every check the command ran passed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from . import fock_oracle
from .config import RunConfig, load_config
from .contractions import (PP, RETARDED, ContractionKernel, Regularization,
                           conjugation_check, decompose_check, retarded_green,
                           symmetric_contraction, KernelSet)
from .errors import ConfigError, SymwickError
from .fock_oracle import InitialDensity, OracleSession, SourceProfile
from .operator_algebra import (FreeFieldConvention, LadderFactor,
                               branch_ordered_product, factor_to_text,
                               max_coeff_deviation, to_text, wick_expand)
from .wigner_engine import (TIME_NORMAL_TWO_POINT, TIME_SYMMETRIC,
                            CorrelatorRequest, build_ensemble,
                            estimate_time_symmetric, time_normal_two_point)

WICK_TOL = 1e-12
KERNEL_TOL = 1e-14


# -- output plumbing ---------------------------------------------------------


def _render_records(command: str, config_echo: dict, seed: int,
                    records: list) -> str:
    doc = {"command": command, "seed": seed, "config": config_echo,
           "records": records}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def _render_csv(command: str, config_echo: dict, seed: int,
                records: list) -> str:
    buf = io.StringIO()
    buf.write(f"# command: {command}\n")
    buf.write(f"# seed: {seed}\n")
    buf.write(f"# config: {json.dumps(config_echo, sort_keys=False)}\n")
    if records:
        fields = list(records[0].keys())
        writer = csv.DictWriter(buf, fieldnames=fields)
        writer.writeheader()
        for row in records:
            writer.writerow(row)
    return buf.getvalue()


def _emit(args, command: str, config_echo: dict, seed: int,
          records: list) -> None:
    render = _render_csv if args.format == "csv" else _render_records
    text = render(command, config_echo, seed, records)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _finite(records: list) -> bool:
    for row in records:
        for v in row.values():
            if isinstance(v, float) and not math.isfinite(v):
                return False
    return True


# -- verify-wick ---------------------------------------------------------------


def _random_branch_product(rng: np.random.Generator, max_factors: int):
    n = int(rng.integers(1, max_factors + 1))
    while True:
        times = rng.uniform(0.0, 5.0, size=n)
        if len(set(times.tolist())) == n:
            break
    minus, plus = [], []
    for t in times:
        f = LadderFactor(0, bool(rng.integers(2)), float(t),
                         branch="-" if rng.integers(2) else "+")
        (minus if f.branch == "-" else plus).append(f)
    return minus, plus


def cmd_verify_wick(args) -> int:
    rng = np.random.default_rng(args.seed)
    omegas = [0.0, 1.0, 2.7]
    records = []
    worst = 0.0
    worst_expr = ""
    for case in range(args.cases):
        omega0 = omegas[case % len(omegas)]
        minus, plus = _random_branch_product(rng, args.max_factors)
        expanded = wick_expand(minus, plus, KernelSet(omega0))
        literal = branch_ordered_product(minus, plus)
        dev = max_coeff_deviation(expanded, literal, FreeFieldConvention(omega0))
        if dev > worst:
            worst, worst_expr = dev, to_text(literal)
        records.append({"case": case, "omega0": omega0,
                        "n_minus": len(minus), "n_plus": len(plus),
                        "deviation": dev,
                        "product": to_text(literal)})
    passed = worst < WICK_TOL and _finite(records)
    config_echo = {"cases": args.cases, "max_factors": args.max_factors,
                   "tolerance": WICK_TOL}
    _emit(args, "verify-wick", config_echo, args.seed, records)
    print(f"verify-wick: {args.cases} cases, max deviation {worst:.3e} "
          f"(tolerance {WICK_TOL:.0e}) -> {'PASS' if passed else 'FAIL'}",
          file=sys.stderr)
    if not passed:
        print(f"verify-wick: worst case {worst_expr}", file=sys.stderr)
    return 0 if passed else 1


# -- verify-contractions ---------------------------------------------------------


def cmd_verify_contractions(args) -> int:
    ts = np.linspace(-args.t_max, args.t_max, args.grid_points)
    dev_split = decompose_check(ts, args.omega0)
    dev_conj = conjugation_check(ts, args.omega0)

    gammas = [10.0, 100.0, 1000.0]
    ts_pos = ts[ts > 0]
    sharp = np.asarray(retarded_green(ts_pos, ContractionKernel(RETARDED, args.omega0)))
    sharp_pp = np.asarray(symmetric_contraction(
        ts_pos, ContractionKernel(PP, args.omega0)))
    reg_errs = []
    reg_zero_ok = True
    for gamma in gammas:
        reg = Regularization(gamma=gamma, m=2)
        kr = ContractionKernel(RETARDED, args.omega0, reg)
        kp = ContractionKernel(PP, args.omega0, reg)
        err_r = float(np.abs(np.asarray(retarded_green(ts_pos, kr)) - sharp).max())
        err_p = float(np.abs(np.asarray(symmetric_contraction(ts_pos, kp))
                             - sharp_pp).max())
        reg_errs.append(max(err_r, err_p))
        if retarded_green(0.0, kr) != 0:
            reg_zero_ok = False
    decreasing = all(b < a for a, b in zip(reg_errs, reg_errs[1:]))

    records = [{"check": "retarded_split", "deviation": dev_split,
                "tolerance": KERNEL_TOL},
               {"check": "conjugation", "deviation": dev_conj,
                "tolerance": KERNEL_TOL},
               {"check": "regularized_zero_at_origin",
                "deviation": 0.0 if reg_zero_ok else 1.0, "tolerance": 0.0}]
    for gamma, err in zip(gammas, reg_errs):
        records.append({"check": f"regularized_error_gamma_{gamma:g}",
                        "deviation": err, "tolerance": float("inf")})

    passed = (dev_split < KERNEL_TOL and dev_conj < KERNEL_TOL
              and reg_zero_ok and decreasing)
    config_echo = {"grid_points": args.grid_points, "omega0": args.omega0,
                   "t_max": args.t_max, "gammas": gammas,
                   "tolerance": KERNEL_TOL}
    _emit(args, "verify-contractions", config_echo, args.seed, records)
    print(f"verify-contractions: split dev {dev_split:.3e}, conj dev "
          f"{dev_conj:.3e}, ramp errors {['%.3e' % e for e in reg_errs]} "
          f"-> {'PASS' if passed else 'FAIL'}", file=sys.stderr)
    return 0 if passed else 1


# -- config-driven commands --------------------------------------------------------


def _load(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _oracle_session(cfg: RunConfig) -> OracleSession:
    rho0 = InitialDensity.from_sites(cfg.init.sites, cfg.params)
    src = SourceProfile(kicks=cfg.kicks)
    return OracleSession(cfg.params, rho0, src, substep_dt=cfg.oracle_substep_dt)


def _factors_text(factors) -> str:
    return " ".join(factor_to_text(f) for f in factors)


_ARRANGEMENT_OF = {TIME_SYMMETRIC: fock_oracle.TIME_SYMMETRIC,
                   TIME_NORMAL_TWO_POINT: fock_oracle.TIME_NORMAL}


def cmd_simulate(args) -> int:
    cfg = _load(args)
    spec = cfg.ensemble_spec()
    ens = build_ensemble(spec)
    session = _oracle_session(cfg) if cfg.oracle_enabled else None
    records = []
    for i, req in enumerate(cfg.requests):
        if req.ordering == TIME_SYMMETRIC:
            est = estimate_time_symmetric(ens, req)
            mean, se = est.mean, est.std_error
        else:
            dag = next(f for f in req.factors if f.dagger)
            ann = next(f for f in req.factors if not f.dagger)
            res = time_normal_two_point(spec, dag.mode, dag.time,
                                        ann.mode, ann.time,
                                        epsilon=cfg.epsilon, ens=ens)
            mean, se = res.value, res.std_error
        row = {"request": i, "ordering": req.ordering,
               "factors": _factors_text(req.factors),
               "mean_re": mean.real, "mean_im": mean.imag,
               "se_re": se.real, "se_im": se.imag, "n_traj": cfg.n_traj}
        if session is not None:
            exact = session.average(req.factors, _ARRANGEMENT_OF[req.ordering])
            row["oracle_re"], row["oracle_im"] = exact.real, exact.imag
        records.append(row)
    passed = _finite(records)
    _emit(args, "simulate", cfg.echo(), cfg.master_seed, records)
    print(f"simulate: {len(records)} request(s), {cfg.n_traj} trajectories "
          f"-> {'PASS' if passed else 'FAIL'}", file=sys.stderr)
    return 0 if passed else 1


def cmd_reorder(args) -> int:
    cfg = _load(args)
    if cfg.reorder is None:
        raise ConfigError("reorder: section required for the reorder command")
    spec = cfg.ensemble_spec()
    r = cfg.reorder
    res = time_normal_two_point(spec, r.dag_site, r.dag_time,
                                r.ann_site, r.ann_time,
                                epsilon=r.epsilon or cfg.epsilon)
    session = _oracle_session(cfg)
    exact = session.average(
        (LadderFactor(r.dag_site, True, r.dag_time),
         LadderFactor(r.ann_site, False, r.ann_time)),
        fock_oracle.TIME_NORMAL)
    diff = res.value - exact
    bias = res.response.bias_estimate
    ok_re = abs(diff.real) <= 3.0 * res.std_error.real + bias + 1e-12
    ok_im = abs(diff.imag) <= 3.0 * res.std_error.imag + bias + 1e-12
    passed = ok_re and ok_im and _finite([{"v": res.value.real}])
    records = [{
        "dag_site": r.dag_site, "dag_time": r.dag_time,
        "ann_site": r.ann_site, "ann_time": r.ann_time,
        "symmetric_re": res.symmetric.mean.real,
        "symmetric_im": res.symmetric.mean.imag,
        "correction_re": res.correction.real, "correction_im": res.correction.imag,
        "assembled_re": res.value.real, "assembled_im": res.value.imag,
        "se_re": res.std_error.real, "se_im": res.std_error.imag,
        "oracle_re": exact.real, "oracle_im": exact.imag,
        "bias_estimate": bias, "epsilon": res.response.epsilon,
        "n_traj": cfg.n_traj, "within_3se": passed,
    }]
    _emit(args, "reorder", cfg.echo(), cfg.master_seed, records)
    print(f"reorder: assembled {res.value:.6f} vs exact {exact:.6f} "
          f"(|diff| {abs(diff):.3e}) -> {'PASS' if passed else 'FAIL'}",
          file=sys.stderr)
    return 0 if passed else 1


def cmd_oracle(args) -> int:
    cfg = _load(args)
    session = _oracle_session(cfg)
    records = []
    for i, req in enumerate(cfg.requests):
        exact = session.average(req.factors, _ARRANGEMENT_OF[req.ordering])
        records.append({"request": i, "ordering": req.ordering,
                        "factors": _factors_text(req.factors),
                        "oracle_re": exact.real, "oracle_im": exact.imag})
    passed = _finite(records)
    _emit(args, "oracle", cfg.echo(), cfg.master_seed, records)
    print(f"oracle: {len(records)} request(s) evaluated exactly "
          f"-> {'PASS' if passed else 'FAIL'}", file=sys.stderr)
    return 0 if passed else 1


# -- argument parsing -------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symwick",
        description="Symmetric-ordering verification and truncated-Wigner "
                    "simulation for small anharmonic rings.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config: bool):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None,
                       help="override the seed")
        p.add_argument("--out", default=None, help="write output to this file")
        p.add_argument("--format", choices=("csv", "records"), default="csv",
                       help="output format (default csv)")

    p = sub.add_parser("verify-wick",
                       help="random products: expansion over contractions "
                            "vs the literal branch-ordered product")
    p.add_argument("--cases", type=int, default=500)
    p.add_argument("--max-factors", type=int, default=6)
    common(p, needs_config=False)
    p.set_defaults(func=cmd_verify_wick, seed_default=20260819)

    p = sub.add_parser("verify-contractions",
                       help="kernel identities on a dense grid + ramp limit")
    p.add_argument("--grid-points", type=int, default=1000)
    p.add_argument("--omega0", type=float, default=1.3)
    p.add_argument("--t-max", type=float, default=5.0)
    common(p, needs_config=False)
    p.set_defaults(func=cmd_verify_contractions, seed_default=0)

    p = sub.add_parser("simulate", help="trajectory-ensemble correlators")
    common(p, needs_config=True)
    p.set_defaults(func=cmd_simulate, seed_default=None)

    p = sub.add_parser("reorder",
                       help="assemble the normally-ordered two-point value "
                            "and compare against the exact oracle")
    common(p, needs_config=True)
    p.set_defaults(func=cmd_reorder, seed_default=None)

    p = sub.add_parser("oracle", help="exact values for the config's requests")
    common(p, needs_config=True)
    p.set_defaults(func=cmd_oracle, seed_default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = args.seed_default
    try:
        return args.func(args)
    except SymwickError as exc:
        print(f"symwick {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
