"""Command-line front end.

    reclab inspect DATA            rating histograms as CSV
    reclab generate --out FILE     synthetic tuple CSV
    reclab recommend DATA ...      top-N lists or predicted ratings
    reclab evaluate --config CFG   run an experiment, write result tables
    reclab registry                list registered algorithms

Exit codes: 0 success, 2 I/O, 3 config/registry, 4 unknown user.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import tempfile
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import evaluate as ev
from .errors import ReclabError, UnknownAlgorithm
from .ratings import (
    BinaryRatingMatrix,
    RatingMatrix,
    binarize,
    col_stats,
    normalize,
    read_csv,
    sample_users,
    write_csv,
)
from .recommend import base as rb
from .synthetic import SyntheticSpec, generate

log = logging.getLogger("reclab")

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_USER = 0, 2, 3, 4


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


CONFIG_SCHEMA = {
    "type": "object",
    "required": ["dataset", "scheme", "algorithms"],
    "additionalProperties": False,
    "properties": {
        "dataset": {
            "type": "object",
            "required": ["path"],
            "additionalProperties": False,
            "properties": {
                "path": {"type": "string"},
                "format": {"enum": ["tuples", "dense"]},
                "kind": {"enum": ["real", "binary"]},
            },
        },
        "sample": {
            "type": "object",
            "required": ["k"],
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "seed": {"type": ["integer", "null"]},
            },
        },
        "binarize": {
            "type": "object",
            "required": ["min_rating"],
            "additionalProperties": False,
            "properties": {
                "min_rating": {"type": "number"},
                "min_items": {"type": "integer", "minimum": 0},
            },
        },
        "scheme": {
            "type": "object",
            "required": ["given"],
            "additionalProperties": False,
            "properties": {
                "method": {"enum": ["split", "cross", "bootstrap"]},
                "train": {"type": "number", "exclusiveMinimum": 0},
                "k": {"type": "integer", "minimum": 2},
                "runs": {"type": "integer", "minimum": 1},
                "given": {"type": "integer", "not": {"const": 0}},
                "good_rating": {"type": ["number", "null"]},
                "seed": {"type": ["integer", "null"]},
            },
        },
        "algorithms": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {
                "type": "object",
                "required": ["name"],
                "additionalProperties": False,
                "properties": {
                    "name": {"type": "string"},
                    "params": {"type": ["object", "null"]},
                },
            },
        },
        "mode": {"enum": ["topNList", "ratings"]},
        "n_values": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "integer", "minimum": 1},
        },
        "output": {"type": "string"},
    },
}

DEFAULT_N = [1, 3, 5, 10, 15, 20]


# --------------------------------------------------------------------------
# helpers


def _env_seed():
    raw = os.environ.get("RECLAB_SEED")
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise CliError(f"RECLAB_SEED must be an integer, got {raw!r}", EXIT_CONFIG) from None


def _load(path, fmt="tuples", binary=False):
    try:
        return read_csv(path, format=fmt, binary=binary)
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}", EXIT_IO) from None
    except ReclabError as e:
        raise CliError(f"{path}: {e}", EXIT_IO) from None


def _atomic_write(path: Path, text: str):
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_params(pairs):
    params = {}
    for p in pairs or []:
        if "=" not in p:
            raise CliError(f"parameter {p!r} must look like key=value", EXIT_CONFIG)
        k, v = p.split("=", 1)
        params[k.strip()] = _parse_value(v.strip())
    return params


# --------------------------------------------------------------------------
# inspect


def _hist_rows(name, values, bins):
    values = np.asarray(values, dtype=float)
    values = values[~np.isnan(values)]
    if values.size == 0:
        return []
    counts, edges = np.histogram(values, bins=bins)
    return [[name, ev._fmt(edges[i]), ev._fmt(edges[i + 1]), int(c)] for i, c in enumerate(counts)]


def inspect_rows(m, bins=20):
    """Histogram rows ``(histogram, bin_lo, bin_hi, count)`` for a dataset."""
    rows = []
    per_user = m.row_counts()
    if isinstance(m, RatingMatrix):
        rows += _hist_rows("rating", m.values, bins)
        rows += _hist_rows("rating_centered", normalize(m, "center")[0].values, bins)
        rows += _hist_rows("rating_zscore", normalize(m, "z-score")[0].values, bins)
        item_means = col_stats(m).mean
        rows += _hist_rows("item_mean_rating", item_means, bins)
    else:
        rows += _hist_rows("item_count", m.col_counts(), bins)
    rows += _hist_rows("ratings_per_user", per_user, bins)
    return rows


def cmd_inspect(args):
    m = _load(args.data, args.format, args.binary)
    kind = "0-1" if isinstance(m, BinaryRatingMatrix) else "rating"
    summary = f"{m.n_users} x {m.n_items} {kind} matrix with {m.nnz} ratings"
    if isinstance(m, RatingMatrix) and m.nnz:
        summary += f"; mean rating {ev._fmt(float(np.mean(m.values)))}"
    print(summary, file=sys.stderr)
    text = _csv_text(("histogram", "bin_lo", "bin_hi", "count"), inspect_rows(m, args.bins))
    if args.out:
        try:
            _atomic_write(Path(args.out), text)
        except OSError as e:
            raise CliError(f"cannot write {args.out}: {e.strerror or e}", EXIT_IO) from None
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --------------------------------------------------------------------------
# generate


def cmd_generate(args):
    fields = {}
    if args.spec:
        try:
            fields.update(json.loads(Path(args.spec).read_text(encoding="utf-8")))
        except OSError as e:
            raise CliError(f"cannot read {args.spec}: {e.strerror or e}", EXIT_IO) from None
        except json.JSONDecodeError as e:
            raise CliError(f"{args.spec}: invalid JSON: {e}", EXIT_CONFIG) from None
    for key in ("n_users", "n_items", "density", "user_bias_sd", "skew", "min_per_user"):
        val = getattr(args, key)
        if val is not None:
            fields[key] = val
    if args.scale is not None:
        fields["scale"] = tuple(args.scale)
    seed = args.seed if args.seed is not None else fields.get("seed", _env_seed())
    fields["seed"] = 0 if seed is None else seed
    if "scale" in fields:
        fields["scale"] = tuple(float(x) for x in fields["scale"])
    try:
        spec = SyntheticSpec(**fields)
        m = generate(spec)
    except TypeError as e:
        raise CliError(f"bad synthetic spec: {e}", EXIT_CONFIG) from None
    except ReclabError as e:
        raise CliError(str(e), EXIT_CONFIG) from None
    try:
        write_csv(m, args.out)
    except OSError as e:
        raise CliError(f"cannot write {args.out}: {e.strerror or e}", EXIT_IO) from None
    print(f"wrote {m.n_users} x {m.n_items} matrix with {m.nnz} ratings to {args.out}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# recommend


def _user_rows(m, labels):
    try:
        return np.array([m.user_index(u) for u in labels], dtype=np.int64)
    except KeyError as e:
        raise CliError(str(e.args[0]), EXIT_USER) from None


def cmd_recommend(args):
    data = _load(args.data, args.format, args.binary)
    users = [u for u in (args.users or "").split(",") if u]
    if args.newdata:
        train = data
        newdata = _load(args.newdata, args.format, args.binary)
        if users:
            newdata = newdata.subset_users(_user_rows(newdata, users))
    else:
        if not users:
            raise CliError("give --users or --newdata", EXIT_CONFIG)
        rows = _user_rows(data, users)
        rest = np.setdiff1d(np.arange(data.n_users), rows)
        if rest.size == 0:
            raise CliError("no users left to train on", EXIT_CONFIG)
        train, newdata = data.subset_users(rest), data.subset_users(rows)
    try:
        model = rb.fit(args.algorithm, train, _parse_params(args.param))
        out = rb.predict(model, newdata, args.type, n=args.n)
    except ReclabError as e:
        raise CliError(str(e), EXIT_CONFIG) from None
    print(repr(model), file=sys.stderr)
    if args.type == "topNList":
        lines = []
        for u, items, scores in zip(out.user_labels, out.items, out.scores):
            for rank, (i, s) in enumerate(zip(items, scores), start=1):
                lines.append([u, rank, out.item_labels[i], ev._fmt(s)])
        sys.stdout.write(_csv_text(("user", "rank", "item", "score"), lines))
    else:
        buf = io.StringIO()
        write_csv(out, buf, format="dense")
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# --------------------------------------------------------------------------
# evaluate


def load_config(path):
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise CliError(f"cannot read {path}: {e.strerror or e}", EXIT_IO) from None
    except json.JSONDecodeError as e:
        raise CliError(f"{path}: invalid JSON: {e}", EXIT_CONFIG) from None
    return cfg


def validate_config(cfg):
    """Schema check plus registry check of every algorithm and its parameters."""
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise CliError(f"invalid config at {where}: {e.message}", EXIT_CONFIG) from None
    kind = "binary" if cfg.get("binarize") or cfg["dataset"].get("kind") == "binary" else "real"
    names = sorted({s.name for s in rb.registry_entries()})
    for label, algo in cfg["algorithms"].items():
        if algo["name"] not in names:
            raise CliError(f"unknown algorithm {algo['name']!r} ({label}); registered: {', '.join(names)}",
                           EXIT_CONFIG)
        try:
            spec = rb.get_spec(algo["name"], kind)
        except UnknownAlgorithm:
            continue  # skipped at run time with a notice
        try:
            rb.resolve_params(spec, algo.get("params"))
        except ReclabError as e:
            raise CliError(str(e), EXIT_CONFIG) from None
    scheme = cfg["scheme"]
    mode = cfg.get("mode", "topNList")
    if mode == "ratings" and kind == "binary":
        raise CliError("mode 'ratings' needs real-valued data", EXIT_CONFIG)
    if mode == "topNList" and kind == "real" and scheme.get("good_rating") is None:
        raise CliError("top-N evaluation on real data needs scheme.good_rating", EXIT_CONFIG)
    return kind


def _svg_roc(results):
    """A small standalone SVG with one ROC polyline per algorithm."""
    W, H, pad = 480, 400, 50
    palette = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d", "#666666"]
    pts_all = {label: ev.curve_points(res, "roc") for label, res in results.items()}
    xmax = max([x for pts in pts_all.values() for x, _, _ in pts if x == x] + [1e-9])
    ymax = max([y for pts in pts_all.values() for _, y, _ in pts if y == y] + [1e-9])
    sx = lambda x: pad + (W - 2 * pad) * x / xmax
    sy = lambda y: H - pad - (H - 2 * pad) * y / ymax
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<line x1="{pad}" y1="{H - pad}" x2="{W - pad}" y2="{H - pad}" stroke="black"/>',
           f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{H - pad}" stroke="black"/>',
           f'<text x="{W / 2}" y="{H - 15}" text-anchor="middle">FPR (max {xmax:.3g})</text>',
           f'<text x="15" y="{H / 2}" transform="rotate(-90 15 {H / 2})" text-anchor="middle">TPR (max {ymax:.3g})</text>']
    for j, (label, pts) in enumerate(pts_all.items()):
        color = palette[j % len(palette)]
        xy = " ".join(f"{sx(x):.1f},{sy(y):.1f}" for x, y, _ in pts if x == x and y == y)
        out.append(f'<polyline points="{xy}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{pad + 10}" y="{pad + 14 * (j + 1)}" fill="{color}">{label}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _results_text(writer, results, *args):
    buf = io.StringIO()
    writer(results, buf, *args)
    return buf.getvalue()


def _errorbar_rows(results):
    rows = []
    for label, res in results.items():
        arr = np.array(res.runs, dtype=float)
        for j, metric in enumerate(("RMSE", "MSE", "MAE")):
            col = arr[:, j]
            rows.append([label, metric, ev._fmt(float(np.mean(col))),
                         ev._fmt(float(np.min(col))), ev._fmt(float(np.max(col)))])
    return rows


def run_experiment(cfg, base_dir=Path("."), out_dir=None, svg=False, timings=False):
    """Load data, build the scheme, evaluate and write every output file.

    Everything written is a function of the config alone, so reruns are
    byte-identical; wall-clock timings go to ``timings.csv`` only when
    ``timings`` is set.  Returns ``(results, manifest)``.
    """
    kind = validate_config(cfg)
    ds = cfg["dataset"]
    data_path = Path(ds["path"])
    if not data_path.is_absolute():
        data_path = base_dir / data_path
    data = _load(data_path, ds.get("format", "tuples"), ds.get("kind") == "binary")

    if cfg.get("sample"):
        smp = cfg["sample"]
        try:
            data = sample_users(data, smp["k"], smp.get("seed"))
        except ReclabError as e:
            raise CliError(f"sample: {e}", EXIT_CONFIG) from None
    if cfg.get("binarize"):
        if not isinstance(data, RatingMatrix):
            raise CliError("binarize needs real-valued data", EXIT_CONFIG)
        data = binarize(data, cfg["binarize"]["min_rating"])
        keep = np.flatnonzero(data.row_counts() >= cfg["binarize"].get("min_items", 0))
        data = data.subset_users(keep)

    sc = dict(cfg["scheme"])
    seed = sc.get("seed")
    if seed is None:
        seed = _env_seed()
    if seed is None:
        raise CliError("no seed: set scheme.seed, --seed or RECLAB_SEED", EXIT_CONFIG)
    sc["seed"] = seed
    mode = cfg.get("mode", "topNList")
    n_values = sorted(set(cfg.get("n_values", DEFAULT_N)))
    try:
        scheme = ev.make_scheme(
            data, method=sc.get("method", "split"), train=sc.get("train", 0.9), k=sc.get("k"),
            runs=sc.get("runs", 1), given=sc["given"],
            good_rating=sc.get("good_rating") if kind == "real" else None, seed=seed,
        )
        algorithms = {label: (a["name"], a.get("params") or {}) for label, a in cfg["algorithms"].items()}
        results = ev.evaluate(scheme, algorithms, type=mode, n_values=n_values)
    except ReclabError as e:
        raise CliError(str(e), EXIT_CONFIG) from None
    for label in results.skipped:
        print(f"{label}: {cfg['algorithms'][label]['name']} does not implement a method for {kind} data; skipped",
              file=sys.stderr)

    files = {}
    if mode == "topNList":
        files["results.csv"] = _results_text(ev.write_results_csv, results, mode)
        files["avg.csv"] = _results_text(ev.write_avg_csv, results, mode)
        files["roc.csv"] = _results_text(ev.write_curve_csv, results, "roc")
        files["prec_rec.csv"] = _results_text(ev.write_curve_csv, results, "prec_rec")
        auc = {label: ev.roc_auc(res) for label, res in results.items()}
        files["auc.csv"] = _csv_text(("algorithm", "AUC"), [[k, ev._fmt(v)] for k, v in auc.items()])
        if svg:
            files["roc.svg"] = _svg_roc(results)
    else:
        files["results.csv"] = _results_text(ev.write_results_csv, results, mode)
        files["avg.csv"] = _results_text(ev.write_avg_csv, results, mode)
        files["errorbars.csv"] = _csv_text(("algorithm", "metric", "mean", "min", "max"), _errorbar_rows(results))
    if timings:
        rows = [[label, run + 1, f"{m:.6f}", f"{p:.6f}"]
                for label, res in results.items() for run, (m, p) in enumerate(res.timings)]
        files["timings.csv"] = _csv_text(("algorithm", "run", "model_time", "prediction_time"), rows)

    resolved = json.loads(json.dumps(cfg))
    resolved["scheme"]["seed"] = seed
    resolved["mode"] = mode
    resolved["n_values"] = n_values
    for label, res in results.items():
        resolved["algorithms"][label]["params"] = res.params
    manifest = {
        "reclab_version": __version__,
        "config": resolved,
        "data": {"kind": kind, "n_users": data.n_users, "n_items": data.n_items, "n_ratings": data.nnz},
        "scheme": {"runs": scheme.runs, "eligible_users": int(scheme.eligible.size),
                   "excluded_users": scheme.n_excluded,
                   "test_users": [int(s.test.size) for s in scheme.splits]},
        "skipped": list(results.skipped),
        "files": sorted(list(files) + ["manifest.json"]),
    }
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"

    if out_dir is not None:
        out_dir = Path(out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            for name in sorted(files):
                _atomic_write(out_dir / name, files[name])
        except OSError as e:
            raise CliError(f"cannot write to {out_dir}: {e.strerror or e}", EXIT_IO) from None
    return results, manifest


def cmd_evaluate(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.setdefault("scheme", {})["seed"] = args.seed
    if args.mode is not None:
        cfg["mode"] = args.mode
    if args.n is not None:
        cfg["n_values"] = args.n
    if args.out is not None:
        out = Path(args.out)
    elif "output" in cfg:
        out = Path(cfg["output"])
        if not out.is_absolute():
            out = Path(args.config).parent / out
    else:
        raise CliError("no output directory: set 'output' in the config or pass --out", EXIT_CONFIG)
    results, _ = run_experiment(cfg, Path(args.config).parent, out, svg=args.svg, timings=args.timings)
    for label, res in results.items():
        for run, (m, p) in enumerate(res.timings, start=1):
            print(f"{res.algorithm} run {run} [{m:.3f}sec/{p:.3f}sec]", file=sys.stderr)
        if res.mode == "topNList":
            print(f"{label}: AUC {ev.roc_auc(res):.4f}", file=sys.stderr)
        else:
            rmse, mse, mae = res.avg()
            print(f"{label}: RMSE {rmse:.4f} MSE {mse:.4f} MAE {mae:.4f}", file=sys.stderr)
    print(f"results written to {out}", file=sys.stderr)
    return EXIT_OK


# --------------------------------------------------------------------------
# registry


def cmd_registry(args):
    rows = [[s.name, s.data_kind, s.description, json.dumps(s.default_params, sort_keys=True)]
            for s in sorted(rb.registry_entries(args.kind), key=lambda s: (s.data_kind, s.name))]
    sys.stdout.write(_csv_text(("name", "kind", "description", "default_params"), rows))
    return EXIT_OK


# --------------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="reclab", description="Collaborative filtering experiments.")
    p.add_argument("--version", action="version", version=f"reclab {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def data_opts(sp):
        sp.add_argument("--format", choices=("tuples", "dense"), default="tuples")
        sp.add_argument("--binary", action="store_true", help="read as 0-1 data")

    sp = sub.add_parser("inspect", help="rating distributions as histogram CSV")
    sp.add_argument("data")
    data_opts(sp)
    sp.add_argument("--bins", type=int, default=20)
    sp.add_argument("--out", help="write CSV here instead of stdout")
    sp.set_defaults(func=cmd_inspect)

    sp = sub.add_parser("generate", help="write a synthetic rating dataset")
    sp.add_argument("--out", required=True)
    sp.add_argument("--spec", help="JSON file with SyntheticSpec fields")
    sp.add_argument("--n-users", type=int)
    sp.add_argument("--n-items", type=int)
    sp.add_argument("--density", type=float)
    sp.add_argument("--user-bias-sd", type=float)
    sp.add_argument("--skew", type=float)
    sp.add_argument("--scale", type=float, nargs=2, metavar=("LO", "HI"))
    sp.add_argument("--min-per-user", type=int)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("recommend", help="top-N lists or rating predictions")
    sp.add_argument("data")
    data_opts(sp)
    sp.add_argument("--algorithm", "-a", required=True)
    sp.add_argument("--param", "-p", action="append", metavar="KEY=VALUE")
    sp.add_argument("--users", help="comma-separated user labels")
    sp.add_argument("--newdata", help="predict for the users in this file; train on all of DATA")
    sp.add_argument("-n", type=int, default=10)
    sp.add_argument("--type", choices=rb.PREDICT_TYPES, default="topNList")
    sp.set_defaults(func=cmd_recommend)

    sp = sub.add_parser("evaluate", help="run an experiment from a JSON config")
    sp.add_argument("--config", "-c", required=True)
    sp.add_argument("--out", help="output directory (overrides the config)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--mode", choices=("topNList", "ratings"))
    sp.add_argument("-n", type=int, nargs="+")
    sp.add_argument("--svg", action="store_true", help="also write roc.svg")
    sp.add_argument("--timings", action="store_true", help="also write timings.csv (not reproducible)")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("registry", help="list registered algorithms")
    sp.add_argument("--kind", choices=rb.DATA_KINDS)
    sp.set_defaults(func=cmd_registry)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except CliError as e:
        print(f"reclab: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
