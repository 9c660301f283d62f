"""Command-line client.

Each subcommand builds a JSON request from ``--config`` plus flag
overrides, sends it to the service (in-process unless ``--server`` is
given) and writes the response as JSON or CSV.

Exit codes: 0 success, 1 invalid input, 2 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from .client import ServiceClient

EXIT_OK, EXIT_INPUT, EXIT_VERIFY = 0, 1, 2


class InputError(Exception):
    pass


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("config must be a JSON object")
    return data


def _read_text(path: str, what: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {what} {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# request builders: (args, config) -> payload


def _override(payload: dict, key: str, value) -> None:
    if value is not None:
        payload[key] = value


def _jitter(args) -> bool | None:
    return None if args.jitter is None else args.jitter == "on"


def build_coverage(args, cfg):
    _override(cfg, "master_seed", args.seed)
    _override(cfg, "trials", args.trials)
    _override(cfg, "jitter", _jitter(args))
    _override(cfg, "workers", args.workers)
    return cfg


def build_exact(args, cfg):
    _override(cfg, "jitter", _jitter(args))
    _override(cfg, "method", args.method)
    return cfg


def build_switch(args, cfg):
    return cfg


def build_bounds(args, cfg):
    return cfg


def build_figure1(args, cfg):
    _override(cfg, "seed", args.seed)
    _override(cfg, "trials", args.trials)
    _override(cfg, "estimator", args.estimator)
    _override(cfg, "workers", args.workers)
    return cfg


def build_thm2(args, cfg):
    _override(cfg, "seed", args.seed)
    _override(cfg, "trials", args.trials)
    _override(cfg, "jitter", _jitter(args))
    _override(cfg, "workers", args.workers)
    return cfg


def build_verify(args, cfg):
    _override(cfg, "seed", args.seed)
    _override(cfg, "scale", args.scale)
    _override(cfg, "criteria", args.criteria)
    _override(cfg, "workers", args.workers)
    return cfg


def build_predict(args, cfg):
    from .predict import read_beta_csv

    history = args.history or cfg.pop("history", None)
    if "csv" not in cfg:
        if history is None:
            raise InputError("predict needs a history CSV path")
        cfg["csv"] = _read_text(history, "history")
    cfg.pop("history", None)
    _override(cfg, "alpha", args.alpha)
    _override(cfg, "L", args.L)
    _override(cfg, "n0", args.n0)
    _override(cfg, "f", args.f)
    beta_path = args.beta or cfg.pop("beta_csv", None)
    if beta_path is not None:
        try:
            cfg["beta"] = read_beta_csv(_read_text(beta_path, "beta table"))
        except ValueError as exc:
            raise InputError(str(exc)) from None
    return cfg


# --------------------------------------------------------------------------
# CSV renderers: body -> list of (header, rows) tables


def _table(header, rows):
    return [(list(header), [list(r) for r in rows])]


def csv_coverage(body):
    header = ["coverage", "stderr", "trials", "wall_time"]
    row = [body["empirical_coverage"], body["standard_error"], body["trials"], body["wall_time"]]
    for b in body.get("bounds", []):
        header += [b["name"], f"{b['name']}_satisfied"]
        row += [b["value"], b["satisfied"]]
    return _table(header, [row])


def csv_exact(body):
    return _table(["coverage", "method", "sequences"], [[body["coverage"], body["method"], body["sequences"]]])


def csv_switch(body):
    psi = _table(["k", "tau", "psi"], [[r["k"], r["tau"], r["psi"]] for r in body["psi"]])
    lags = _table(["tau", "beta", "psi_bar"], [[r["tau"], _blank(r["beta"]), _blank(r["psi_bar"])] for r in body["lags"]])
    return psi + lags


def csv_bounds(body):
    cols = ["tau", "tau_star", "gap", "coefficient", "total"]
    summary = _table(
        ["name", "kind", "bound_value", "minimizing_tau", "minimizing_tau_star", "vacuous"],
        [[body[c] for c in ("name", "kind", "bound_value", "minimizing_tau", "minimizing_tau_star", "vacuous")]],
    )
    if not body.get("components"):
        return summary
    return summary + _table(cols, [[r[c] for c in cols] for r in body["components"]])


def csv_figure1(body):
    cols = ["t", "n", "coverage", "stderr", "lower_bound", "upper_bound"]
    return _table(cols, [[r[c] for c in cols] for r in body["rows"]])


def csv_verify(body):
    return _table(["name", "passed", "summary", "seconds"], [[c["name"], c["passed"], c["summary"], c["seconds"]] for c in body["checks"]])


def csv_predict(body):
    cols = ["lo", "hi", "unbounded", "empty", "threshold", "m_cal", "level", "alpha", "mode", "L", "n0", "x_next"]
    if body.get("coverage_lower_bound") is not None:
        cols += ["coverage_lower_bound", "bound_name"]
    return _table(cols, [[_blank(body[c]) for c in cols]])


def _blank(v):
    return "" if v is None else v


def render_csv(tables) -> str:
    buf = io.StringIO()
    for i, (header, rows) in enumerate(tables):
        if i:
            buf.write("\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return buf.getvalue()


COMMANDS = {
    "coverage-sim": ("/coverage-sim", build_coverage, csv_coverage),
    "exact-coverage": ("/exact-coverage", build_exact, csv_exact),
    "switch-exact": ("/switch-exact", build_switch, csv_switch),
    "bounds": ("/bounds", build_bounds, csv_bounds),
    "figure1": ("/figure1", build_figure1, csv_figure1),
    "thm2": ("/thm2", build_thm2, csv_coverage),
    "verify": ("/verify", build_verify, csv_verify),
    "predict": ("/predict", build_predict, csv_predict),
}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON request document; flags override its fields")
    common.add_argument("--seed", type=_u64, help="64-bit master seed")
    common.add_argument("--trials", type=_positive, help="number of Monte Carlo trials")
    common.add_argument("--out", help="write output here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), default="json")
    common.add_argument("--jitter", choices=("on", "off"), help="random tie-breaking of equal scores")
    common.add_argument("--workers", type=_positive, help="worker processes for Monte Carlo blocks")
    common.add_argument("--server", help="service base URL; default runs the service in-process")

    parser = argparse.ArgumentParser(prog="tsconformal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name == "exact-coverage":
            p.add_argument("--method", choices=("rank", "event"))
        if name == "figure1":
            p.add_argument("--estimator", choices=("indicator", "control"))
        if name == "verify":
            p.add_argument("--scale", choices=("quick", "full"))
            p.add_argument("--criteria", type=int, nargs="+", help="acceptance criteria to run (default all)")
        if name == "predict":
            p.add_argument("history", nargs="?", help="CSV with header x,y; last row's x is the query")
            p.add_argument("--alpha", type=float)
            p.add_argument("--L", type=int)
            p.add_argument("--n0", type=int)
            p.add_argument("--f", choices=("sin", "zero", "linear"), help="pretrained regression function")
            p.add_argument("--beta", help="CSV table with columns tau,beta")
    return parser


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; that code is reserved
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    path, build, to_csv = COMMANDS[args.command]
    try:
        payload = build(args, _load_config(args.config))
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    client = ServiceClient(args.server)
    try:
        reply = client.post(path, payload)
    except Exception as exc:  # connection problems with a remote server
        print(f"error: request failed: {exc}", file=sys.stderr)
        return EXIT_INPUT
    finally:
        client.close()
    if not reply.ok:
        print(f"error: {reply.error_message()}", file=sys.stderr)
        return EXIT_INPUT

    text = json.dumps(reply.body, indent=2) + "\n" if args.format == "json" else render_csv(to_csv(reply.body))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if args.command == "verify" and not reply.body.get("passed", False):
        return EXIT_VERIFY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
