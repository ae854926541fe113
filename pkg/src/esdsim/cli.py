"""Command line entry point: ``esdsim run | list | verify``.

Exit codes: 0 success, 1 verification failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import scenarios
from .scenarios import FIELDS, REGISTRY, ConfigError, ReportRow, ScenarioConfig

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_USAGE = 0, 1, 2

_CONFIG_KEYS = {
    "scenario": str,
    "molecules": int,
    "epsilon": float,
    "rounds": int,
    "seed": int,
    "observable": str,
    "format": str,
    "out": str,
    "workers": int,
}


def read_config_file(path: str | Path) -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip().replace("-", "_"), value.strip()
        if not sep or key not in _CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: cannot parse {raw!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    return out


def format_number(x) -> str:
    if x is None:
        return ""
    if isinstance(x, int) or (isinstance(x, float) and x.is_integer() and abs(x) < 1e15):
        return str(int(x))
    return f"{x:.12g}"


def _json_value(x):
    if x is None or isinstance(x, str):
        return x
    s = format_number(x)
    return int(s) if s.lstrip("-").isdigit() else float(s)


def render(rows: list[ReportRow], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(FIELDS)
        for r in rows:
            w.writerow([v if isinstance(v, str) else format_number(v) for v in (getattr(r, f) for f in FIELDS)])
    else:
        for r in rows:
            buf.write(json.dumps({f: _json_value(getattr(r, f)) for f in FIELDS}) + "\n")
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="esdsim", description="Ensembles with the same density matrix, told apart by fluctuations.")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named scenario and print a report")
    run.add_argument("--config", help="flat key=value config file; flags override it")
    run.add_argument("--scenario")
    run.add_argument("--molecules", type=int)
    run.add_argument("--epsilon", type=float)
    run.add_argument("--rounds", type=int, help="Monte Carlo rounds; 0 = exact values only")
    run.add_argument("--seed", type=int)
    run.add_argument("--observable", help="Pauli string such as Z, ZZ or 'XX+ZZ' replacing the default observable")
    run.add_argument("--format", choices=scenarios.OUTPUT_FORMATS)
    run.add_argument("--out", help="write the report here instead of stdout")
    run.add_argument("--workers", type=int, help="threads for Monte Carlo rounds (output does not depend on it)")

    sub.add_parser("list", help="list scenarios")
    sub.add_parser("verify", help="run the invariant self-checks")
    return p


def _config_from_args(args) -> tuple[ScenarioConfig, str | None]:
    values = read_config_file(args.config) if args.config else {}
    for key in _CONFIG_KEYS:
        v = getattr(args, key)
        if v is not None:
            values[key] = v
    if "scenario" not in values:
        raise ConfigError("no scenario given (use --scenario or a config file)")
    out = values.pop("out", None)
    values["output_format"] = values.pop("format", "csv")
    return ScenarioConfig(**values), out


def cmd_run(args) -> int:
    try:
        cfg, out = _config_from_args(args)
        result = scenarios.run_scenario(cfg)
    except (ConfigError, OSError) as exc:
        print(f"esdsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    text = render(result.rows, cfg.output_format)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for note in result.notes:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def cmd_list(args) -> int:
    for s in REGISTRY.values():
        print(f"{s.name}\n    {s.summary}\n    formulas: {s.formulas}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks()
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.detail}")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return {"run": cmd_run, "list": cmd_list, "verify": cmd_verify}[args.command](args)


if __name__ == "__main__":
    raise SystemExit(main())
