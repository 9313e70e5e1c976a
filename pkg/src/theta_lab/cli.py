"""Command-line driver: ``theta-lab verify <suite>``, ``dump-gram`` and ``dump-theta``.

Configuration comes from an optional JSON file (``--config``) overlaid by
flags. Exit status is 0 when every requested check passes, 1 when a check
fails (the report is still written) and 2 for usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

from .l2 import METRIC_TAGS, gram_field
from .suites import SUITES, ConfigError, RunConfig, dumps, run
from .theta import theta_frame
from .torus import fundamental_grid

log = logging.getLogger("theta_lab")


def _pair(kind):
    def parse(text: str):
        parts = text.split(",")
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected two comma-separated values, got {text!r}")
        try:
            return tuple(kind(p) for p in parts)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with RunConfig fields; flags override it")
    p.add_argument("--delta", type=int)
    p.add_argument("--tau", type=_pair(float), metavar="RE,IM")
    p.add_argument("--eps", type=float)
    p.add_argument("--quad", type=_pair(int), metavar="N1,N2")
    p.add_argument("--fd-step", dest="fd_step", type=float)
    p.add_argument("--grid", type=int, help="side of the mu grid")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="theta-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run verification suites and write a JSON report")
    verify.add_argument("suite", choices=("all",) + SUITES)
    verify.add_argument("--parallel", action="store_true", help="run suites in worker processes")
    _common(verify)

    dg = sub.add_parser("dump-gram", help="Gram matrices over the mu grid")
    dg.add_argument("--metric", choices=METRIC_TAGS, default="K_metric")
    dg.add_argument("--format", choices=("csv", "json"), default="csv")
    _common(dg)

    dt = sub.add_parser("dump-theta", help="theta_m sampled on a grid of the fundamental cell (CSV)")
    _common(dt)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"config: cannot read {args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config: top level must be a JSON object")
    for key in ("delta", "tau", "eps", "quad", "fd_step", "grid", "out"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if getattr(args, "suite", None) is not None:
        data["suites"] = [args.suite]
    return RunConfig.from_dict(data).validate()


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def dump_theta_csv(cfg: RunConfig) -> str:
    m = cfg.modulus
    z = fundamental_grid(m, cfg.grid)
    values = theta_frame(z, m, cfg.eps)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = ["z1", "z2"]
    for k in range(m.delta):
        header += [f"theta{k}_re", f"theta{k}_im"]
    writer.writerow(header)
    for j, zj in enumerate(z):
        row = [repr(float(zj.real)), repr(float(zj.imag))]
        for k in range(m.delta):
            row += [repr(float(values[k, j].real)), repr(float(values[k, j].imag))]
        writer.writerow(row)
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (ConfigError, TypeError) as exc:
        parser.error(str(exc))

    if args.command == "verify":
        report = run(cfg, parallel=args.parallel)
        _emit(dumps(report), cfg.out)
        summary = report["summary"]
        log.info("%d/%d checks passed", summary["records_passed"], summary["records"])
        if not summary["pass"]:
            for name, suite in report["suites"].items():
                for rec in suite["records"]:
                    if not rec["pass"]:
                        print(f"FAIL [{name}] {rec['name']}", file=sys.stderr)
        return 0 if summary["pass"] else 1

    if args.command == "dump-gram":
        m = cfg.modulus
        field = gram_field(fundamental_grid(m, cfg.grid), args.metric, m, cfg.eps, cfg.quadrature)
        _emit(field.to_csv() if args.format == "csv" else field.dumps() + "\n", cfg.out)
        return 0

    _emit(dump_theta_csv(cfg), cfg.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
