"""CSV and JSON formats used by the command line tools.

Category labels and GRF indices are 1-based in files and 0-based in Python.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .coding import CategoricalField, CodingError, CodingFunction, thresholds_from_proportions
from .fitting import FitResult
from .pl import PLResult
from .random_fields import CovarianceModel, GRFRealization, SiteSet
from .variography import EmpiricalVariogram, VariogramMatrix


class FormatError(ValueError):
    """Malformed input file or configuration; the message names the culprit."""


def _read_table(path):
    path = Path(path)
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FormatError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise FormatError(f"{path}: row {lineno}: expected {len(header)} columns, got {len(row)}")
            vals = []
            for name, cell in zip(header, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise FormatError(f"{path}: row {lineno}: non-numeric value {cell!r} in column {name!r}") from None
            rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: no data rows")
    return header, np.array(rows)


def _coord_columns(path, header):
    xs = [c for c in header if c.startswith("x") and c[1:].isdigit()]
    if not xs or xs != [f"x{i + 1}" for i in range(len(xs))] or header[: len(xs)] != xs:
        raise FormatError(f"{path}: expected leading coordinate columns x1..xd, got {header}")
    return len(xs)


def read_sites(path) -> SiteSet:
    """Sites from the ``x1..xd`` columns of any of the CSV formats below."""
    header, data = _read_table(path)
    d = _coord_columns(path, header)
    return SiteSet(data[:, :d])


def _write(path, header, columns):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in zip(*columns):
            w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    return repr(float(v))


def write_sites(path, sites: SiteSet):
    _write(path, [f"x{i + 1}" for i in range(sites.dim)], list(sites.coords.T))


def read_grf(path) -> GRFRealization:
    header, data = _read_table(path)
    d = _coord_columns(path, header)
    ys = header[d:]
    if not ys or ys != [f"y{i + 1}" for i in range(len(ys))]:
        raise FormatError(f"{path}: expected GRF columns y1..yq after the coordinates, got {ys}")
    return GRFRealization(SiteSet(data[:, :d]), data[:, d:])


def write_grf(path, y: GRFRealization):
    header = [f"x{i + 1}" for i in range(y.sites.dim)] + [f"y{r + 1}" for r in range(y.q)]
    _write(path, header, list(y.sites.coords.T) + list(y.values.T))


def read_categories(path, K: int | None = None) -> CategoricalField:
    header, data = _read_table(path)
    d = _coord_columns(path, header)
    if header[d:] != ["category"]:
        raise FormatError(f"{path}: expected a single 'category' column after the coordinates")
    lab = data[:, d]
    if np.any(lab != np.round(lab)) or np.any(lab < 1):
        raise FormatError(f"{path}: categories must be integers starting at 1")
    lab = lab.astype(np.int64) - 1
    K = int(lab.max()) + 1 if K is None else K
    if lab.max() >= K:
        raise FormatError(f"{path}: category {int(lab.max()) + 1} exceeds K={K}")
    return CategoricalField(SiteSet(data[:, :d]), lab, K)


def write_categories(path, field: CategoricalField):
    header = [f"x{i + 1}" for i in range(field.sites.dim)] + ["category"]
    _write(path, header, list(field.sites.coords.T) + [field.labels + 1])


def _bound(v, where):
    if v is None:
        raise FormatError(f"{where}: use '-inf'/'inf' for unbounded ends, not null")
    try:
        return float(v)
    except (TypeError, ValueError):
        raise FormatError(f"{where}: not a number: {v!r}") from None


def coding_from_dict(cfg: dict, base_dir=".") -> CodingFunction:
    """Coding configuration::

        {"K": 3, "q": 1, "rule": "sequential", "thresholds": [-0.43, 0.43]}
        {"K": 3, "q": 2, "rule": "flag2", "proportions": [0.5, 0.25, 0.25]}
        {"K": 2, "q": 1, "rule": "explicit",
         "intervals": [[["-inf", 0]], [[0, "inf"]]]}

    ``sequential`` and ``flag2`` accept ``thresholds`` or ``proportions``, or
    ``threshold_csv``: a CSV with a 0-based ``site`` column then one column
    per threshold (``s1..s{K-1}``, or ``s1, t1`` for ``flag2``).
    """
    for key in ("K", "q", "rule"):
        if key not in cfg:
            raise FormatError(f"{key}: missing from coding configuration")
    try:
        K, q = int(cfg["K"]), int(cfg["q"])
    except (TypeError, ValueError):
        raise FormatError("K/q: must be integers") from None
    rule = cfg["rule"]
    sources = [k for k in ("thresholds", "proportions", "threshold_csv", "intervals") if k in cfg]
    try:
        if rule == "sequential":
            if q != 1:
                raise FormatError(f"q: sequential rule has q=1, got {q}")
            coding = _threshold_rule(cfg, sources, K, base_dir, CodingFunction.sequential, "sequential", K - 1)
        elif rule == "flag2":
            if (K, q) != (3, 2):
                raise FormatError(f"K/q: flag2 rule has K=3, q=2, got K={K}, q={q}")
            coding = _threshold_rule(
                cfg, sources, K, base_dir, lambda t: CodingFunction.flag2(t[..., 0], t[..., 1]), "flag2", 2
            )
        elif rule == "explicit":
            if "intervals" not in cfg:
                raise FormatError("intervals: required for the explicit rule")
            iv = cfg["intervals"]
            if len(iv) != K or any(len(cat) != q for cat in iv):
                raise FormatError(f"intervals: expected {K} categories x {q} axes")
            lo = np.array([[_bound(ax[0], f"intervals[{k}][{r}]") for r, ax in enumerate(cat)] for k, cat in enumerate(iv)])
            hi = np.array([[_bound(ax[1], f"intervals[{k}][{r}]") for r, ax in enumerate(cat)] for k, cat in enumerate(iv)])
            coding = CodingFunction(lo, hi)
        else:
            raise FormatError(f"rule: unknown coding rule {rule!r}")
    except CodingError as exc:
        raise FormatError(f"{rule}: {exc}") from exc
    if coding.K != K or coding.q != q:
        raise FormatError(f"K/q: configuration says K={K}, q={q} but the rule gives K={coding.K}, q={coding.q}")
    return coding


def _threshold_rule(cfg, sources, K, base_dir, build, rule, n_thr):
    if len(sources) != 1:
        raise FormatError(f"thresholds: give exactly one of thresholds, proportions or threshold_csv (got {sources})")
    src = sources[0]
    if src == "proportions":
        p = cfg["proportions"]
        if len(p) != K:
            raise FormatError(f"proportions: expected {K} values, got {len(p)}")
        try:
            return thresholds_from_proportions(p, rule)
        except ValueError as exc:
            raise FormatError(f"proportions: {exc}") from exc
    if src == "thresholds":
        t = np.array([_bound(v, "thresholds") for v in cfg["thresholds"]])
        if t.size != n_thr:
            raise FormatError(f"thresholds: expected {n_thr} values, got {t.size}")
        return build(t)
    if src == "threshold_csv":
        path = Path(base_dir) / cfg["threshold_csv"]
        header, data = _read_table(path)
        if header[0] != "site" or len(header) != n_thr + 1:
            raise FormatError(f"{path}: expected columns site + {n_thr} thresholds, got {header}")
        site = data[:, 0].astype(np.int64)
        if sorted(site.tolist()) != list(range(site.size)):
            raise FormatError(f"{path}: site column must list 0..n-1 exactly once")
        t = np.empty((site.size, n_thr))
        t[site] = data[:, 1:]
        return build(t)
    raise FormatError(f"{src}: not valid for rule {rule!r}")


def read_coding(path) -> CodingFunction:
    return coding_from_dict(read_json(path), base_dir=Path(path).parent)


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FormatError(f"{path}: cannot open ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from exc


def write_json(path, obj):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def parse_model(spec) -> CovarianceModel:
    """``kind:range[:sill]`` or a JSON file with ``kind`` and ``range``."""
    text = str(spec)
    if Path(text).suffix == ".json":
        d = read_json(text)
        try:
            return CovarianceModel(d["kind"], float(d["range"]), float(d.get("sill", 1.0)))
        except KeyError as exc:
            raise FormatError(f"{text}: {exc.args[0]}: missing from model file") from None
        except ValueError as exc:
            raise FormatError(f"{text}: {exc}") from None
    parts = text.split(":")
    if len(parts) not in (2, 3):
        raise FormatError(f"model: expected kind:range[:sill], got {text!r}")
    try:
        return CovarianceModel(parts[0], *(float(p) for p in parts[1:]))
    except ValueError as exc:
        raise FormatError(f"model: {exc}") from None


def write_track(path, v: EmpiricalVariogram):
    _write(path, ["lag", "estimate", "npairs"], [v.lags, v.estimate, v.npairs])


def read_track(path, track: str = "track") -> EmpiricalVariogram:
    header, data = _read_table(path)
    if header != ["lag", "estimate", "npairs"]:
        raise FormatError(f"{path}: expected columns lag, estimate, npairs")
    return EmpiricalVariogram(track, data[:, 0], data[:, 1], data[:, 2].astype(np.int64))


def write_tracks(out_dir, tracks):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for v in tracks:
        p = out / f"{v.track}.csv"
        write_track(p, v)
        paths.append(p)
    return paths


def write_matrix(out_dir, m: VariogramMatrix):
    return write_tracks(out_dir, m.tracks())


PL_COLUMNS = ["lag", "grf", "gamma_hat", "rho_hat", "logpl", "n_effective_pairs", "converged", "boundary_flag"]


def write_pl(path, res: PLResult):
    rows = res.lag_results()
    _write(
        path,
        PL_COLUMNS,
        [
            [r.lag for r in rows],
            [r.grf + 1 for r in rows],
            [r.gamma_hat for r in rows],
            [r.rho_hat for r in rows],
            [r.logpl for r in rows],
            [r.n_effective for r in rows],
            [r.converged for r in rows],
            [r.boundary for r in rows],
        ],
    )


def read_pl(path):
    """PL output as ``(lags, gamma, n_effective)`` arrays of shape ``(n_lags, q)``."""
    header, data = _read_table(path)
    if header != PL_COLUMNS:
        raise FormatError(f"{path}: expected columns {', '.join(PL_COLUMNS)}")
    grf = data[:, 1].astype(np.int64)
    q = int(grf.max())
    lags = data[grf == 1, 0]
    gamma = np.column_stack([data[grf == r + 1, 2] for r in range(q)])
    neff = np.column_stack([data[grf == r + 1, 5] for r in range(q)]).astype(np.int64)
    return lags, gamma, neff


def write_fit(path, fit: FitResult):
    write_json(path, fit.to_dict())


def fmt_float(x) -> str:
    return "nan" if math.isnan(x) else f"{x:.6g}"
