"""Command-line interface.

Subcommands::

    pmime run --system henon --k 3 --coupling 0.3 --n 1024 --out results/
    pmime analyze --csv data.csv --method lm-pmime --downsample 4 --out results/
    pmime reproduce table4 --k 3 --realizations 20 --out results/

Settings are resolved as built-in defaults, then ``--config`` file entries
(``key=value`` lines), then explicit flags. Every artifact starts with the
fully resolved configuration. The worker count comes from ``PMIME_WORKERS``.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .embedding import MethodConfig, Variant, causality_matrix
from .evaluation import run_batches, summaries_to_csv, summary_row
from .exceptions import PMIMEError
from .series import read_csv
from .simulators import SystemSpec

logger = logging.getLogger("pmime")

FORMATS = ("json", "csv", "pgm")
SYSTEMS = {"var5": "VAR5", "nlvar3": "NLVAR3", "henon": "HENON", "lorenz3": "LORENZ3", "lorenz": "LORENZ3"}

DEFAULTS = {
    "system": None,
    "csv": None,
    "method": "pmime,m-pmime,lm-pmime",
    "L": 5,
    "A": 0.95,
    "m": 2,
    "k_nn": 5,
    "stop_rule": "chain",
    "n": 1024,
    "coupling": None,
    "k": 3,
    "realizations": 20,
    "seed": 0,
    "out": ".",
    "format": "json,csv",
    "downsample": 1,
}

_TYPES = {
    "L": int, "A": float, "m": int, "k_nn": int, "n": int, "coupling": float,
    "k": int, "realizations": int, "seed": int, "downsample": int,
}


# -- reproduction presets -----------------------------------------------------

@dataclass(frozen=True)
class Preset:
    system: str
    method: dict
    rows: tuple  # (row label, overrides of the system spec)
    heatmap: bool = False


def _rows(key, values, **fixed):
    return tuple((f"{key}={v}", {key: v, **fixed}) for v in values)


PRESETS = {
    "table1": Preset("VAR5", dict(L=6, A=0.97, m=2), _rows("n", (256, 512, 1024))),
    "table2": Preset("NLVAR3", dict(L=6, A=0.97, m=3), _rows("n", (256, 512, 1024))),
    "table3": Preset("HENON", dict(L=5, A=0.95, m=2), _rows("k", (3, 6, 9), n=1024, coupling=0.1)),
    "table4": Preset("HENON", dict(L=5, A=0.95, m=2), _rows("k", (3, 6, 9), n=1024, coupling=0.3)),
    "table5": Preset("LORENZ3", dict(L=5, A=0.95, m=3), _rows("n", (256, 512, 1024), coupling=3.0)),
    "table6": Preset("LORENZ3", dict(L=5, A=0.95, m=3), _rows("coupling", (1.0, 2.0, 3.0, 4.0, 5.0), n=512)),
    "fig2": Preset("VAR5", dict(L=6, A=0.97, m=2), (("n=512", {"n": 512}),), True),
    "fig3": Preset("NLVAR3", dict(L=6, A=0.97, m=3), (("n=512", {"n": 512}),), True),
    "fig4": Preset("HENON", dict(L=5, A=0.95, m=2), (("k=6", {"k": 6, "n": 1024, "coupling": 0.1}),), True),
    "fig5": Preset("HENON", dict(L=5, A=0.95, m=2), (("k=6", {"k": 6, "n": 1024, "coupling": 0.3}),), True),
    "fig6": Preset("LORENZ3", dict(L=5, A=0.95, m=3), (("C=3", {"n": 512, "coupling": 3.0}),), True),
    "fig7": Preset("LORENZ3", dict(L=5, A=0.95, m=3), (("C=5", {"n": 512, "coupling": 5.0}),), True),
}


# -- settings -------------------------------------------------------------------

def _normalize_key(key: str) -> str:
    key = key.strip().lstrip("-").replace("-", "_")
    return key if key in DEFAULTS else key.lower() if key.lower() in DEFAULTS else key


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    settings = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise PMIMEError(f"{path}, line {lineno}: expected key=value, got {raw.strip()!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = _normalize_key(key)
            if key not in DEFAULTS:
                raise PMIMEError(f"{path}, line {lineno}: unknown setting {key!r}")
            settings[key] = value
    return settings


def _coerce(settings: dict) -> dict:
    out = {}
    for key, value in settings.items():
        if value is not None and key in _TYPES and not isinstance(value, _TYPES[key]):
            try:
                value = _TYPES[key](value)
            except ValueError:
                raise PMIMEError(f"setting {key}: cannot parse {value!r} as {_TYPES[key].__name__}") from None
        out[key] = value
    return out


def resolve_settings(args, base: dict | None = None) -> dict:
    settings = dict(DEFAULTS)
    settings.update(base or {})
    if getattr(args, "config", None):
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    settings = _coerce(settings)
    settings["method"] = _split(settings["method"])
    settings["format"] = _split(settings["format"])
    for fmt in settings["format"]:
        if fmt not in FORMATS:
            raise PMIMEError(f"unknown output format {fmt!r}; choose from {FORMATS}")
    if not settings["method"]:
        raise PMIMEError("at least one method is required")
    return settings


def _split(value) -> list:
    if isinstance(value, (list, tuple)):
        items = [s for v in value for s in str(v).split(",")]
    else:
        items = str(value).split(",")
    return [s.strip().lower() for s in items if s.strip()]


def method_configs(settings: dict) -> list:
    return [
        MethodConfig(
            variant=Variant.parse(name),
            L=settings["L"],
            A=settings["A"],
            m=settings["m"],
            k_nn=settings["k_nn"],
            seed=settings["seed"],
            stop_rule=settings["stop_rule"],
        )
        for name in settings["method"]
    ]


def system_spec(settings: dict) -> SystemSpec:
    name = settings["system"]
    if name is None:
        raise PMIMEError("no input: give --system or --csv")
    kind = SYSTEMS.get(str(name).lower())
    if kind is None:
        raise PMIMEError(f"unknown system {name!r}; choose from {sorted(set(SYSTEMS))}")
    try:
        return SystemSpec(
            kind,
            settings["n"],
            K=settings["k"] if kind == "HENON" else None,
            C=settings["coupling"],
            seed=settings["seed"],
        )
    except ValueError as exc:
        raise PMIMEError(str(exc)) from None


def _header(settings: dict, **extra) -> dict:
    # the output directory is left out so reruns elsewhere stay byte-identical
    header = {"version": __version__}
    header.update({k: v for k, v in settings.items() if k != "out"})
    header.update(extra)
    return header


# -- writers --------------------------------------------------------------------

def write_pgm(matrix, path, cell: int = 16) -> None:
    """Binary graymap, each matrix entry a ``cell`` x ``cell`` block.

    Gray levels scale linearly from 0 (black) to the matrix maximum (white).
    """
    M = np.clip(np.asarray(matrix, dtype=np.float64), 0.0, None)
    peak = M.max() if M.size else 0.0
    levels = np.zeros(M.shape, dtype=np.uint8) if peak <= 0 else np.round(255.0 * M / peak).astype(np.uint8)
    image = np.kron(levels, np.ones((cell, cell), dtype=np.uint8))
    h, w = image.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(image.tobytes())


def _write_json(payload, path) -> None:
    with open(path, "w") as fh:
        fh.write(payload if isinstance(payload, str) else json.dumps(payload, indent=2))
        fh.write("\n")


def _slug(text) -> str:
    return "".join(c if c.isalnum() or c in "-." else "_" for c in str(text)).strip("_")


def _write_batch(summaries, out: Path, stem: str, settings: dict, header: dict) -> list:
    written = []
    for s in summaries:
        base = out / f"{stem}_{s.method.variant.value}"
        if "json" in settings["format"]:
            _write_json(s.to_json({**header, "method_config": s.method.to_dict()}), base.with_suffix(".json"))
            written.append(base.with_suffix(".json"))
        if "pgm" in settings["format"]:
            write_pgm(s.mean_R, base.with_suffix(".pgm"))
            written.append(base.with_suffix(".pgm"))
    return written


def _flat_header(header: dict) -> dict:
    flat = {}
    for k, v in header.items():
        if isinstance(v, list):
            v = ",".join(map(str, v))
        elif isinstance(v, dict):
            v = json.dumps(v, separators=(",", ":"))
        flat[k] = v
    return flat


# -- commands -------------------------------------------------------------------

def cmd_run(args) -> int:
    settings = resolve_settings(args)
    if settings["csv"]:
        return _analyze(settings)
    spec = system_spec(settings)
    cfgs = method_configs(settings)
    out = _outdir(settings)
    header = _header(settings, system_spec=spec.to_dict())
    summaries = run_batches(spec, cfgs, settings["realizations"])
    stem = _slug(spec.kind.value.lower())
    written = _write_batch(summaries, out, stem, settings, header)
    if "csv" in settings["format"]:
        path = out / f"{stem}_metrics.csv"
        summaries_to_csv([summary_row(s, "run") for s in summaries], path, _flat_header(header))
        written.append(path)
    for s in summaries:
        print(f"{s.method.variant.label:9s} sensitivity={s.sensitivity:.3f} "
              f"specificity={s.specificity:.3f} f1={s.f1:.3f}")
    _report(written)
    return 0


def cmd_analyze(args) -> int:
    settings = resolve_settings(args)
    if not settings["csv"]:
        raise PMIMEError("analyze needs --csv")
    return _analyze(settings)


def _analyze(settings: dict) -> int:
    series = read_csv(settings["csv"])
    if settings["downsample"] > 1:
        series = series.decimate(settings["downsample"])
    out = _outdir(settings)
    stem = _slug(Path(settings["csv"]).stem)
    n_jobs = _workers()
    written = []
    header = _header(settings, n_samples=series.n, labels=list(series.labels))
    for cfg in method_configs(settings):
        res = causality_matrix(series, cfg, n_jobs=n_jobs)
        base = out / f"{stem}_{cfg.variant.value}"
        if "json" in settings["format"]:
            payload = {
                "config": {**header, "method_config": cfg.to_dict()},
                "labels": list(res.labels),
                "R": res.R.tolist(),
                "embeddings": [e.to_dict() for e in res.embeddings],
            }
            _write_json(payload, base.with_suffix(".json"))
            written.append(base.with_suffix(".json"))
        if "csv" in settings["format"]:
            path = base.with_name(base.name + "_R.csv")
            with open(path, "w") as fh:
                for key, value in _flat_header({**header, "method": cfg.variant.value}).items():
                    fh.write(f"# {key}={value}\n")
                fh.write("driver," + ",".join(res.labels) + "\n")
                for label, row in zip(res.labels, res.R):
                    fh.write(label + "," + ",".join(repr(float(v)) for v in row) + "\n")
            written.append(path)
        if "pgm" in settings["format"]:
            write_pgm(res.R, base.with_suffix(".pgm"))
            written.append(base.with_suffix(".pgm"))
        print(f"{cfg.variant.label:9s} {int((res.R > 0).sum())} directed couplings among {series.K} variables")
    _report(written)
    return 0


def cmd_reproduce(args) -> int:
    preset = PRESETS[args.target]
    base = {"system": preset.system, **preset.method}
    if preset.heatmap:
        base["format"] = "json,pgm"
    settings = resolve_settings(args, base)
    out = _outdir(settings)
    rows = [(label, over) for label, over in preset.rows if _row_selected(args, over)]
    if not rows:
        raise PMIMEError(f"no {args.target} rows match the given --n/--k/--coupling")
    csv_rows, written = [], []
    for label, over in rows:
        row_settings = {**settings, **over}
        spec = system_spec(row_settings)
        header = _header(row_settings, target=args.target, row=label, system_spec=spec.to_dict())
        logger.info("%s %s: %d realizations", args.target, label, settings["realizations"])
        summaries = run_batches(spec, method_configs(row_settings), settings["realizations"])
        written += _write_batch(summaries, out, f"{args.target}_{_slug(label)}", settings, header)
        csv_rows += [summary_row(s, label) for s in summaries]
        for s in summaries:
            print(f"{args.target} {label:10s} {s.method.variant.label:9s} sensitivity={s.sensitivity:.3f} "
                  f"specificity={s.specificity:.3f} f1={s.f1:.3f}")
    if "csv" in settings["format"] or not preset.heatmap:
        path = out / f"{args.target}.csv"
        summaries_to_csv(csv_rows, path, _flat_header(_header(settings, target=args.target)))
        written.append(path)
    _report(written)
    return 0


def _row_selected(args, over: dict) -> bool:
    for key in ("n", "k", "coupling"):
        wanted = getattr(args, key, None)
        if wanted is not None and key in over and float(over[key]) != float(wanted):
            return False
    return True


def _outdir(settings: dict) -> Path:
    out = Path(settings["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PMIMEError(f"cannot create output directory {out}: {exc.strerror}") from None
    if not os.access(out, os.W_OK):
        raise PMIMEError(f"output directory {out} is not writable")
    return out


def _workers():
    try:
        return max(1, int(os.environ.get("PMIME_WORKERS", "1") or 1))
    except ValueError:
        raise PMIMEError("PMIME_WORKERS must be an integer") from None


def _report(paths) -> None:
    for p in paths:
        print(f"wrote {p}")


# -- parser ---------------------------------------------------------------------

def _add_common(p, with_input=True):
    if with_input:
        p.add_argument("--system", help="simulated system: var5, nlvar3, henon, lorenz3")
        p.add_argument("--csv", help="input CSV, one column per variable")
        p.add_argument("--downsample", type=int, metavar="Q", help="keep every Q-th sample of the CSV input")
    p.add_argument("--method", action="append",
                   help="pmime, m-pmime or lm-pmime; repeat or comma-separate (default: all three)")
    p.add_argument("--L", type=int, help="maximum lag (default 5)")
    p.add_argument("--A", type=float, help="stopping threshold in (0, 1) (default 0.95)")
    p.add_argument("--m", type=int, help="iterations using exhaustive traversal (default 2)")
    p.add_argument("--k-nn", dest="k_nn", type=int, help="neighbors of the MI estimator (default 5)")
    p.add_argument("--stop-rule", dest="stop_rule", choices=("chain", "joint"), help=argparse.SUPPRESS)
    p.add_argument("--n", type=int, help="samples per realization")
    p.add_argument("--coupling", type=float, help="coupling strength C")
    p.add_argument("--k", type=int, help="number of coupled Henon maps")
    p.add_argument("--realizations", type=int, help="Monte-Carlo realizations (default 20)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out", help="output directory (default: current directory)")
    p.add_argument("--format", action="append", help="json, csv, pgm; repeat or comma-separate")
    p.add_argument("--config", help="key=value settings file; flags take precedence")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmime", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="Monte-Carlo batch on a simulated system, or analyze a CSV")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="causality matrices of a CSV file")
    _add_common(p)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("reproduce", help="scaled-down reruns of the benchmark tables and matrix figures")
    p.add_argument("target", choices=sorted(PRESETS, key=lambda s: (s[:3], int(s.lstrip("tablefig")))))
    _add_common(p, with_input=False)
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return args.func(args)
    except PMIMEError as exc:
        print(f"pmime: error [{type(exc).__name__}]: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pmime: error [IOError]: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
