"""Command line entry point: ``plurigauss <subcommand> ...``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import io
from .coding import CodingError, truncate
from .fitting import InsufficientDataError, fit_unit_sill_model
from .forward import averaged_indicator_variogram
from .lags import LagSpec, LagSpecError, build_pair_groups
from .pl import empirical_underlying_variogram
from .random_fields import SiteSet, simulate_independent_grfs
from .study import STUDY_KINDS, StudyConfig, StudyConfigError, run_study
from .variography import EmpiricalVariogram, empirical_indicator_variograms


class CLIError(Exception):
    pass


def _lag_spec(path) -> LagSpec:
    try:
        return LagSpec.from_dict(io.read_json(path))
    except LagSpecError as exc:
        raise CLIError(f"lags: {exc}") from exc


def cmd_simulate(args):
    sites = io.read_sites(args.sites)
    models = [io.parse_model(m) for m in args.model]
    y = simulate_independent_grfs(sites, models, args.seed)
    io.write_grf(args.out, y)


def cmd_truncate(args):
    y = io.read_grf(args.grf)
    coding = io.read_coding(args.coding)
    try:
        field = truncate(y, coding)
    except CodingError as exc:
        raise CLIError(f"coding: {exc}") from exc
    io.write_categories(args.out, field)


def cmd_vario_indicator(args):
    coding = io.read_coding(args.coding) if args.coding else None
    field = io.read_categories(args.categories, K=coding.K if coding else args.K)
    groups = build_pair_groups(field.sites, _lag_spec(args.lags))
    io.write_matrix(args.out, empirical_indicator_variograms(field, groups))


def cmd_vario_pgs(args):
    coding = io.read_coding(args.coding)
    field = io.read_categories(args.categories, K=coding.K)
    groups = build_pair_groups(field.sites, _lag_spec(args.lags))
    try:
        res = empirical_underlying_variogram(field, coding, groups)
    except CodingError as exc:
        raise CLIError(f"coding: {exc}") from exc
    io.write_pl(args.out, res)


def cmd_vario_model(args):
    sites = io.read_sites(args.sites)
    coding = io.read_coding(args.coding)
    models = [io.parse_model(m) for m in args.model]
    if len(models) != coding.q:
        raise CLIError(f"model: coding has q={coding.q} GRFs but {len(models)} model(s) were given")
    groups = build_pair_groups(sites, _lag_spec(args.lags))
    rho = np.column_stack([m.correlation(groups.centers) for m in models])
    try:
        vm = averaged_indicator_variogram(coding, rho, groups, n_sites=sites.n)
    except CodingError as exc:
        raise CLIError(f"coding: {exc}") from exc
    io.write_matrix(args.out, vm)


def cmd_fit(args):
    if args.pl:
        lags, gamma, neff = io.read_pl(args.pl)
        r = args.grf - 1
        if not 0 <= r < gamma.shape[1]:
            raise CLIError(f"grf: must be in 1..{gamma.shape[1]}, got {args.grf}")
        v = EmpiricalVariogram(f"grf_{args.grf}", lags, gamma[:, r], neff[:, r])
    elif args.track:
        v = io.read_track(args.track)
    else:
        raise CLIError("pl: give --pl or --track")
    try:
        fit = fit_unit_sill_model(v, args.kind)
    except InsufficientDataError as exc:
        raise CLIError(f"pl: {exc}") from exc
    io.write_fit(args.out, fit)


def cmd_mc_study(args):
    cfg = io.read_json(args.config) if args.config else {}
    for key, val in (("kind", args.kind), ("n_sims", args.sims), ("seed", args.seed), ("out_dir", args.out)):
        if val is not None:
            cfg[key] = val
    cfg.setdefault("out_dir", "study_out")
    try:
        summary = run_study(StudyConfig.from_dict(cfg), threads=args.threads)
    except (StudyConfigError, LagSpecError, TypeError) as exc:
        raise CLIError(str(exc)) from exc
    print(f"wrote {Path(summary.config.out_dir) / 'summary.csv'}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="plurigauss", description="Plurigaussian variography tools.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulate independent standard GRFs at given sites")
    s.add_argument("--sites", required=True, help="CSV with columns x1..xd")
    s.add_argument("--model", required=True, action="append", help="kind:range[:sill] or model JSON; repeat per GRF")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("truncate", help="map GRF values to categories")
    s.add_argument("--grf", required=True, help="CSV with columns x1..xd, y1..yq")
    s.add_argument("--coding", required=True, help="coding JSON")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_truncate)

    s = sub.add_parser("vario-indicator", help="empirical indicator (cross-)variograms")
    s.add_argument("--categories", required=True)
    s.add_argument("--lags", required=True, help="lag JSON")
    s.add_argument("--coding", help="coding JSON (sets K)")
    s.add_argument("--K", type=int, help="number of categories when no coding is given")
    s.add_argument("--out", required=True, help="output directory, one CSV per track")
    s.set_defaults(func=cmd_vario_indicator)

    s = sub.add_parser("vario-pgs", help="pairwise-likelihood variograms of the hidden GRFs")
    s.add_argument("--categories", required=True)
    s.add_argument("--coding", required=True)
    s.add_argument("--lags", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_vario_pgs)

    s = sub.add_parser("vario-model", help="indicator variograms implied by fitted GRF models")
    s.add_argument("--sites", required=True)
    s.add_argument("--coding", required=True)
    s.add_argument("--lags", required=True)
    s.add_argument("--model", required=True, action="append", help="kind:range or model JSON; one per GRF")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_vario_model)

    s = sub.add_parser("fit", help="fit a unit-sill model to a variogram track")
    s.add_argument("--pl", help="CSV written by vario-pgs")
    s.add_argument("--grf", type=int, default=1, help="GRF column of the PL file (1-based)")
    s.add_argument("--track", help="track CSV with columns lag, estimate, npairs")
    s.add_argument("--kind", required=True, choices=["exponential", "gaussian", "spherical"])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("mc-study", help="Monte-Carlo study with summary statistics")
    s.add_argument("--kind", choices=STUDY_KINDS)
    s.add_argument("--sims", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--config", help="study config JSON; flags override it")
    s.add_argument("--threads", type=int, help="worker threads (default: $PLURIGAUSS_THREADS or 1)")
    s.set_defaults(func=cmd_mc_study)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (CLIError, io.FormatError, StudyConfigError) as exc:
        print(f"plurigauss {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except np.linalg.LinAlgError as exc:
        print(f"plurigauss {args.command}: error: model: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
