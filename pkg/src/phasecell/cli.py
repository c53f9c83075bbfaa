"""``phasecell`` command line.

Exit codes: 0 success, 2 input/format error, 3 precondition violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .calibration import build_table
from .errors import InputFormatError, PreconditionError
from .harness import ScenarioConfig, evaluate, fig6_rows, freq_study, load_config, simulate_sweep
from .tableio import (decode_table, dumps_sweep_csv, dumps_table_json, encode_table,
                      read_sweep_csv, read_table_json, write_atomic)

EXIT_OK, EXIT_INPUT, EXIT_PRECONDITION = 0, 2, 3


def _config(args) -> ScenarioConfig:
    cfg = ScenarioConfig()
    if getattr(args, "config", None):
        cfg = load_config(Path(args.config).read_text(encoding="utf-8"))
    if getattr(args, "seed", None) is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def cmd_simulate_sweep(args) -> int:
    records = simulate_sweep(_config(args))
    write_atomic(args.out, dumps_sweep_csv(records))
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    table = build_table(read_sweep_csv(args.sweep), smooth=args.smooth)
    out = Path(args.out) if args.out else Path(args.sweep).with_suffix(".json")
    json_path = out if out.suffix == ".json" else out.with_suffix(".json")
    write_atomic(json_path, dumps_table_json(table))
    image = encode_table(table)
    write_atomic(json_path.with_suffix(".pdt"), image)
    print(f"delta_hat {table.delta_hat:+.3f} deg")
    for s in table.sections:
        print(f"  {str(s.id):<18} max_err {s.fit.max_err:.3f} deg  "
              f"domain [{s.domain[0]:.2f}, {s.domain[1]:.2f}]")
    print(f"wrote {json_path} and {json_path.with_suffix('.pdt')} ({len(image)} bytes)")
    return EXIT_OK


def _read_table(path):
    path = Path(path)
    if path.suffix == ".pdt":
        return decode_table(path.read_bytes())
    return read_table_json(path)


def cmd_evaluate(args) -> int:
    cfg = _config(args)
    report = evaluate(_read_table(args.table), cfg, fixed=args.fixed)
    body = dict(report.summary(), fixed=args.fixed, per_phase_csv=None)
    if args.out:
        out = Path(args.out)
        csv_path = out.with_suffix(".csv")
        body["per_phase_csv"] = str(csv_path)
        write_atomic(csv_path, report.per_phase_csv())
        write_atomic(out, json.dumps(body, indent=2) + "\n")
    print(json.dumps(report.summary()))
    return EXIT_OK


def cmd_fig6(args) -> int:
    lines = ["lr_deg,max_err_deg,deviation_deg"]
    lines += [f"{lr!r},{err!r},{dev!r}" for lr, err, dev in fig6_rows(args.lr_min, args.lr_max, args.step)]
    text = "\n".join(lines) + "\n"
    if args.out:
        write_atomic(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_freq_study(args) -> int:
    rows = freq_study(_config(args), args.freq)
    text = json.dumps(rows, indent=2) + "\n"
    if args.out:
        write_atomic(args.out, text)
    for r in rows:
        print(f"{r['frequency_ghz']:6.3f} GHz  delta {r['delta_q']:+7.3f}  "
              f"delta_hat {r['delta_hat']:+7.3f}  max_err {r['max_abs_err']:.3f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="phasecell",
                                description="Dual-multiplier 360 degree phase detector toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate-sweep", help="simulate a 0-360 calibration sweep to CSV")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate_sweep)

    s = sub.add_parser("calibrate", help="build table JSON and .pdt image from a sweep CSV")
    s.add_argument("sweep")
    s.add_argument("--out", help="table JSON path; the .pdt image goes alongside")
    s.add_argument("--smooth", action="store_true", help="5-point smoothing for noisy sweeps")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("evaluate", help="full-circle error of a table against a scenario")
    s.add_argument("--table", required=True, help="table JSON or .pdt image")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--fixed", action="store_true", help="use the integer-only estimator")
    s.add_argument("--out", help="report JSON; per-phase CSV written alongside")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("fig6", help="max minimax error versus linearized range")
    s.add_argument("--lr-min", type=float, default=60.0)
    s.add_argument("--lr-max", type=float, default=170.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_fig6)

    s = sub.add_parser("freq-study", help="per-frequency calibration and evaluation")
    s.add_argument("--config", required=True, help="scenario JSON with a 'profile'")
    s.add_argument("--freq", type=float, nargs="+", required=True, help="frequencies in GHz")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_freq_study)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputFormatError as exc:
        print(f"phasecell: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PreconditionError as exc:
        print(f"phasecell: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"phasecell: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
