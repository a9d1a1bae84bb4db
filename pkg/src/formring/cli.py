"""Command line interface: verify scenarios, enumerate subgroups, list ideals.

Exit codes: 0 all checks pass, 1 at least one check failed, 2 configuration
or budget error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checks import Runtime, emit_report, exit_code, replay_witness, run_check, run_scenario
from .engine import closure_enumerate
from .ideals import enumerate_form_ideals
from .rings import BudgetExceededError, mask_elements
from .scenario import ScenarioError, load_scenario
from .unitary import eu_generator_set, fu_generators


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, help="scenario JSON path")
    p.add_argument("--budget", type=int, default=None, help="override store budget")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="formring",
        description="construct unitary groups over finite form rings and "
        "verify their commutator-subgroup identities",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="run the configured checks")
    _add_common(p_verify)
    p_verify.add_argument("--report", default=None, help="write the report here")
    p_verify.add_argument("--format", choices=("json", "text"), default="json")
    p_verify.add_argument("--replay", default=None, help="re-run a failure witness (JSON file)")

    p_enum = sub.add_parser("enumerate", help="print the store size of one subgroup")
    _add_common(p_enum)
    p_enum.add_argument("--group", choices=("E", "G", "F"), required=True)
    p_enum.add_argument("--ideal", required=True, help="ideal name from the scenario")

    p_ideals = sub.add_parser("ideals", help="list the form-ideal lattice")
    _add_common(p_ideals)
    return parser


def _load(args) -> tuple:
    cfg = load_scenario(args.config)
    if args.budget is not None:
        if args.budget < 1:
            raise ScenarioError("budget must be positive")
        cfg.budget = args.budget
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_verify(args) -> int:
    cfg = _load(args)
    if args.replay:
        rt = Runtime(cfg)
        witness = json.loads(Path(args.replay).read_text())
        reproduced = replay_witness(rt, witness)
        print("witness reproduces failure" if reproduced else "witness no longer fails")
        return 1 if reproduced else 0
    reports = run_scenario(cfg)
    text = emit_report(reports, fmt=args.format, path=args.report)
    print(text)
    return exit_code(reports)


def cmd_enumerate(args) -> int:
    cfg = _load(args)
    rt = Runtime(cfg)
    name = args.ideal
    try:
        if args.group == "F":
            st = closure_enumerate(
                rt.ops, [g.a for g in fu_generators(rt.fr, rt.ideal(name), rt.n)], rt.budget
            )
            size = st.size
        elif args.group == "E":
            if rt.is_full(name):
                size = rt.ambient_handle().ensure_store().size
            else:
                st = closure_enumerate(
                    rt.ops,
                    [g.a for g in eu_generator_set(rt.fr, rt.ideal(name), rt.n)],
                    rt.budget,
                )
                size = st.size
        else:
            h = rt.g_handle(name)
            size = h.known_order if h.known_order is not None else h.ensure_store().size
    except BudgetExceededError as e:
        print(f"budget exceeded: {e}", file=sys.stderr)
        return 2
    print(size)
    return 0


def cmd_ideals(args) -> int:
    cfg = _load(args)
    rt = Runtime(cfg)
    named = {fi.key(): name for name, fi in rt.ideals.items()}
    for fi in enumerate_form_ideals(rt.fr):
        name = named.get(fi.key(), "-")
        print(
            f"|I|={fi.ideal.size():>3}  I={fi.ideal.elements()}  "
            f"gamma={mask_elements(fi.gamma)}  name={name}"
        )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "verify":
            return cmd_verify(args)
        if args.command == "enumerate":
            return cmd_enumerate(args)
        if args.command == "ideals":
            return cmd_ideals(args)
    except ScenarioError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except BudgetExceededError as e:
        print(f"budget error: {e}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
