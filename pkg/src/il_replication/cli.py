"""Command-line interface: ``il``, ``table1``, ``figure1`` and ``hedge``.

Exit codes: 0 success, 1 validation error, 2 unhedgeable interval or empty data.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import sys
from typing import Optional, Sequence

from . import csvio
from .config import ExperimentConfig, build_config, read_config_file
from .errors import ConfigError, DomainError, UnhedgeableIntervalError
from .experiments import expected_uil_reference, figure1_rows, il_rows, table1_rows
from .replication import build_hedge_portfolio, validate_chain

EXIT_OK, EXIT_INVALID, EXIT_NO_DATA = 0, 1, 2

COMMANDS = ("il", "table1", "figure1", "hedge")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--out", help="output CSV path (default: stdout)")
    common.add_argument("--seed", type=int, help="Monte Carlo seed (mc.seed)")
    common.add_argument("--paths", type=int, help="Monte Carlo paths (mc.paths)")
    common.add_argument("--strikes", type=int, help="strike grid size (quadrature.strikes)")
    common.add_argument("--workers", type=int, help="simulation threads; results do not depend on it")
    common.add_argument("--timings", action="store_true", help="add a wall-time column to table1 output")

    parser = argparse.ArgumentParser(
        prog="il-replication",
        description="Impermanent loss of concentrated liquidity and its static replication with options.",
        epilog="Any config key can be overridden as a flag, e.g. --heston.kappa 0.5.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("il", parents=[common], help="IL, holdings and average sell price at exit prices")
    sub.add_parser("table1", parents=[common], help="Heston replication accuracy sweep over kappa, theta, xi")
    sub.add_parser("figure1", parents=[common], help="closed-form expected loss along sigma and t sweeps")
    hedge = sub.add_parser("hedge", parents=[common], help="long option strip hedging each position")
    hedge.add_argument("chain", help="option chain CSV: kind,strike,maturity_years,price")
    return parser


def _dotted_overrides(extra: Sequence[str]) -> dict[str, str]:
    out: dict[str, str] = {}
    i = 0
    while i < len(extra):
        token = extra[i]
        if not token.startswith("--") or len(token) == 2:
            raise ConfigError(f"unrecognized argument {token!r}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"flag --{key} needs a value")
            value = extra[i + 1]
            i += 2
        out[key] = value
    return out


def _load(args, extra) -> ExperimentConfig:
    overrides = _dotted_overrides(extra)
    for flag, key in (("seed", "mc.seed"), ("paths", "mc.paths"), ("strikes", "quadrature.strikes"),
                      ("workers", "mc.workers")):
        value = getattr(args, flag)
        if value is not None:
            overrides[key] = str(value)
    entries = read_config_file(args.config) if args.config else {}
    return build_config(args.command, entries, overrides)


@contextlib.contextmanager
def _output(path: Optional[str]):
    """Buffer output so a failed run never leaves a partial file behind."""
    buf = io.StringIO()
    yield buf
    if path is None:
        sys.stdout.write(buf.getvalue())
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())


def cmd_il(cfg: ExperimentConfig, out) -> None:
    csvio.write_records(il_rows(cfg), out)


def cmd_table1(cfg: ExperimentConfig, out, timings: bool = False) -> None:
    if cfg.model != "heston":
        raise ConfigError("model: table1 needs model = heston")
    csvio.write_result_rows(table1_rows(cfg), out, timings=timings)


def cmd_figure1(cfg: ExperimentConfig, out) -> None:
    if cfg.model != "gbm":
        raise ConfigError("model: figure1 needs model = gbm")
    csvio.write_figure1(figure1_rows(cfg), [p.name for p in cfg.positions], out)


def cmd_hedge(cfg: ExperimentConfig, chain_path: str, out, report) -> None:
    try:
        with open(chain_path, encoding="utf-8", newline="") as fh:
            quotes, notes = csvio.read_chain(fh, chain_path)
    except OSError as exc:
        raise ConfigError(f"cannot read chain {chain_path}: {exc.strerror}") from None
    _, hygiene = validate_chain(quotes, spot=cfg.spot)
    for note in notes + hygiene:
        print(f"warning: {note}", file=sys.stderr)

    legs, summary = [], []
    for named in cfg.positions:
        pos = named.position
        portfolio = build_hedge_portfolio(pos.side, pos.interval, quotes, cfg.horizon,
                                          cfg.maturity_tolerance, liquidity=pos.liquidity)
        for leg in portfolio.legs:
            q = leg.quote
            legs.append([named.name, q.kind, q.strike, q.maturity, q.price, leg.quantity, leg.cost])
        ref, ref_se = expected_uil_reference(cfg, named)
        target = -ref * pos.liquidity
        gap = (portfolio.cost - target) / target if target else float("nan")
        summary.append([named.name, len(portfolio.legs), portfolio.cost, portfolio.residual_bound, target,
                        None if ref_se is None else ref_se * pos.liquidity, gap])

    w = csvio.writer(out)
    w.writerow(["position", "kind", "strike", "maturity_years", "price", "quantity", "cost"])
    for row in legs:
        w.writerow([csvio.fmt(c) for c in row])
    w = csvio.writer(report)
    w.writerow(["position", "legs", "total_cost", "residual_bound", "target_cost", "target_se", "relative_gap"])
    for row in summary:
        w.writerow([csvio.fmt(c) for c in row])


def main(argv: Optional[Sequence[str]] = None) -> int:
    args, extra = _parser().parse_known_args(argv)
    try:
        cfg = _load(args, extra)
        with _output(args.out) as out:
            if args.command == "il":
                cmd_il(cfg, out)
            elif args.command == "table1":
                cmd_table1(cfg, out, timings=args.timings)
            elif args.command == "figure1":
                cmd_figure1(cfg, out)
            else:
                report = sys.stdout if args.out else sys.stderr
                cmd_hedge(cfg, args.chain, out, report)
    except UnhedgeableIntervalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_DATA
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
