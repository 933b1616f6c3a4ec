"""Command-line front end.

Exit status is 0 on success or when an audited property holds, 2 when it is
violated (the witness is printed) and 1 on any error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import audit
from .core import allocation_matrix, compute_opt
from .errors import ContractError, QuotamechError
from .fileio import parse_instance, write_instance
from .flows import integral_opt_laminar
from .generate import STYLES, gen_instance
from .gps import run_gps
from .lottery import decompose
from .rational import fmt
from .results import (audit_document, dumps, gps_document, load_result, lottery_table,
                      sd_document)
from .sdm import random_order, run_sdm

EXIT_OK, EXIT_ERROR, EXIT_VIOLATED = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _order(inst, args) -> tuple:
    if args.order and args.seed is not None:
        raise UsageError("give either --order or --seed, not both")
    if args.order:
        return tuple(s.strip() for s in args.order.split(",") if s.strip()), None
    seed = 0 if args.seed is None else args.seed
    return tuple(random_order(inst, seed)), seed


def _emit(doc, out) -> None:
    text = dumps(doc)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_opt(args) -> int:
    inst = parse_instance(args.file)
    _emit({"opt": fmt(compute_opt(inst))}, args.output)
    return EXIT_OK


def cmd_sd(args) -> int:
    inst = parse_instance(args.file)
    order, seed = _order(inst, args)
    result = run_sdm(inst, order)
    _emit(sd_document(inst, result, seed, trace=args.trace), args.output)
    return EXIT_OK


def cmd_gps(args) -> int:
    inst = parse_instance(args.file)
    result = run_gps(inst)
    lot = decompose(result.x, inst, result.opt) if args.lottery else None
    _emit(gps_document(inst, result, trace=args.trace, lottery=lot), args.output)
    return EXIT_OK


def cmd_lottery(args) -> int:
    inst = parse_instance(args.file)
    source = load_result(args.source)
    if "assignment" in source:
        x = source["assignment"]
    elif "allocation" in source:
        x = allocation_matrix(source["allocation"])
    else:
        raise ContractError("result holds neither an assignment nor an allocation")
    opt = compute_opt(inst)
    lot = decompose(x, inst, opt)
    _emit({"mechanism": "lottery", "source": source["mechanism"], "opt": fmt(opt),
           "lottery": lottery_table(inst, lot)}, args.output)
    return EXIT_OK


def cmd_laminar(args) -> int:
    inst = parse_instance(args.file)
    alloc = integral_opt_laminar(inst)
    count = sum(1 for s in alloc.values() if s != inst.outside)
    _emit({"mechanism": "laminar", "opt": fmt(compute_opt(inst)), "allocation": alloc,
           "regular_count": count}, args.output)
    return EXIT_OK


def _run_audit(inst, args) -> audit.AuditReport:
    mech, check = args.mechanism, args.check
    if mech == "sd":
        order, _ = _order(inst, args)
    else:
        order = None
    if check == "symmetry":
        if mech != "sd":
            raise ContractError("the symmetry check applies to the dictatorship over random orders")
        return audit.check_rsd_symmetry(inst, args.seeds)
    if check == "sp":
        if mech != "sd":
            raise ContractError("use --check wsp for the eating mechanism")
        return audit.check_strategyproof(inst, order)
    if check == "wsp":
        return audit.check_weak_sp(inst, mech, order)
    if mech == "sd":
        result = run_sdm(inst, order)
        x = allocation_matrix(result.allocation)
        if check == "feasibility":
            return audit.check_sd_feasibility(result, inst)
        if check == "pareto":
            lower, upper = result.adjusted_quotas(inst)
            return audit.check_pareto(result.allocation, inst, lower, upper)
    else:
        result = run_gps(inst)
        x = result.x
        if check == "feasibility":
            return audit.check_gps_feasibility(x, inst, result.opt)
        if check == "pareto":
            raise ContractError("the Pareto check applies to integral allocations; audit --mechanism sd")
    if check == "envy":
        return audit.check_envy_free(x, inst)
    return audit.check_ordinal_efficiency(x, inst)


def cmd_audit(args) -> int:
    inst = parse_instance(args.file)
    report = _run_audit(inst, args)
    _emit(audit_document(report, inst), args.output)
    return EXIT_OK if report.holds else EXIT_VIOLATED


def cmd_gen(args) -> int:
    inst = gen_instance(args.seed, args.students, args.schools, args.types, args.style, args.tightness)
    write_instance(inst, args.output)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quotamech", description="School choice mechanisms under distributional quotas.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, handler, help_text, output=True):
        c = sub.add_parser(name, help=help_text)
        c.set_defaults(handler=handler)
        if output:
            c.add_argument("-o", "--output", help="write the result here instead of stdout")
        return c

    c = command("opt", cmd_opt, "fractional optimum of the instance")
    c.add_argument("file")

    c = command("sd", cmd_sd, "serial dictatorship with dynamic menus")
    c.add_argument("file")
    c.add_argument("--order", help="comma-separated student ids")
    c.add_argument("--seed", type=int, help="shuffle seed when no order is given (default 0)")
    c.add_argument("--trace", action="store_true")

    c = command("gps", cmd_gps, "generalized probabilistic serial")
    c.add_argument("file")
    c.add_argument("--lottery", action="store_true", help="also decompose the outcome into a lottery")
    c.add_argument("--trace", action="store_true")

    c = command("lottery", cmd_lottery, "decompose a stored result into a lottery")
    c.add_argument("file")
    c.add_argument("--from", dest="source", required=True, metavar="RESULT")

    c = command("laminar", cmd_laminar, "exact integral optimum of a laminar instance")
    c.add_argument("file")

    c = command("audit", cmd_audit, "check a property of a mechanism's outcome")
    c.add_argument("file")
    c.add_argument("--mechanism", choices=("sd", "gps"), required=True)
    c.add_argument("--check", required=True,
                   choices=("feasibility", "pareto", "sp", "wsp", "envy", "ordinal", "symmetry"))
    c.add_argument("--order")
    c.add_argument("--seed", type=int)
    c.add_argument("--seeds", type=int, default=1000, help="orders sampled by the symmetry check")

    c = command("gen", cmd_gen, "write a random instance", output=False)
    c.add_argument("-o", "--output", required=True)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--students", type=int, default=5)
    c.add_argument("--schools", type=int, default=3)
    c.add_argument("--types", type=int, default=3)
    c.add_argument("--style", choices=STYLES, default="pairs")
    c.add_argument("--tightness", type=float, default=0.5)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except QuotamechError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
