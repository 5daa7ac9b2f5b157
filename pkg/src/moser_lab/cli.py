"""moser-lab command line: list the catalog or certify a scenario."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .report import SpecError, load_spec, run, scenario_spec
from .scenarios import list_scenarios


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="moser-lab", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("list", help="list the built-in scenarios")

    r = sub.add_parser("run", help="certify a scenario")
    r.add_argument("spec", nargs="?", help="scenario spec JSON file")
    r.add_argument("--scenario", help="catalog scenario id (instead of a spec file)")
    r.add_argument("--eps-max", type=float)
    r.add_argument("--eps-steps", type=int)
    r.add_argument("--resolution", type=int)
    r.add_argument("--seed", type=int)
    r.add_argument("--out", help="write report JSON here (default: stdout)")
    r.add_argument("--residuals", help="write residual curves CSV here")
    return p


def _cmd_list() -> int:
    rows = list_scenarios()
    w = max(len(r["id"]) for r in rows)
    for r in rows:
        print(f"{r['id']:<{w}}  {r['kind']:<14}  {r['expected']:<18}  {r['exercises']}")
    return 0


def _cmd_run(args) -> int:
    if (args.spec is None) == (args.scenario is None):
        raise SpecError("give exactly one of a spec file or --scenario")
    overrides = {k: v for k, v in (("eps_max", args.eps_max), ("eps_steps", args.eps_steps),
                                   ("resolution", args.resolution), ("seed", args.seed)) if v is not None}
    if args.spec is not None:
        spec = load_spec(args.spec)
        if overrides:
            try:
                spec = type(spec)(spec.scenario_id, spec.kind, spec.config.with_(**overrides), spec.expected,
                                  spec.factory)
            except ValueError as exc:
                raise SpecError(str(exc)) from exc
    else:
        try:
            spec = scenario_spec(args.scenario, **overrides)
        except KeyError as exc:
            raise SpecError(str(exc.args[0])) from exc
        except ValueError as exc:
            raise SpecError(str(exc)) from exc

    report = run(spec)
    if args.out:
        report.write_json(args.out)
    else:
        print(report.to_json())
    if args.residuals:
        report.write_csv(args.residuals)
    status = "matches" if report.matches else "does NOT match"
    print(f"{spec.scenario_id}: {report.verdict} ({status} expected {report.expected})", file=sys.stderr)
    return 0 if report.matches else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "list":
            return _cmd_list()
        return _cmd_run(args)
    except (SpecError, OSError) as exc:
        print(f"moser-lab: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"moser-lab: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
