"""Command-line entry point.

Exit codes: 0 all checks as expected, 1 a check failed, 2 usage or parse
error, 3 internal numeric failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import convex, decoherence, diagram, nogo
from .errors import BudgetError, DiagramError, GPTError
from .report import VerificationReport, fmt, jsonable
from .theory import QUANTUM, check_purification_principle, check_theory, resolve

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _csv_floats(text: str) -> list:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_ints(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _positive(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("tolerance must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gptverify", description="Operational-theory toolkit and no-hyperdecoherence checks.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    e = sub.add_parser("eval", help="parse, typecheck and evaluate a .gpt diagram")
    e.add_argument("-f", "--file", required=True)
    e.add_argument("--json", action="store_true")

    c = sub.add_parser("check", help="theory or candidate checks")
    csub = c.add_subparsers(dest="target", parser_class=_Parser)
    ct = csub.add_parser("theory")
    ct.add_argument("name")
    ct.add_argument("--samples", type=int, default=50)
    ct.add_argument("--seed", type=int, default=42)
    ct.add_argument("--tol", type=_positive, default=1e-9)
    ct.add_argument("--purification", action="store_true", help="also test the purification principle")
    ct.add_argument("--json", action="store_true")
    cc = csub.add_parser("candidate")
    cc.add_argument("spec")
    cc.add_argument("--theory", required=True)
    cc.add_argument("--budget", type=int, default=20)
    cc.add_argument("--seed", type=int, default=42)
    cc.add_argument("--json", action="store_true")

    i = sub.add_parser("infodim", help="information dimension of a system")
    i.add_argument("--theory", required=True)
    i.add_argument("--budget", type=int, default=20)
    i.add_argument("--seed", type=int, default=42)
    i.add_argument("--json", action="store_true")

    x = sub.add_parser("counterexample", help="check a built-in counterexample candidate")
    x.add_argument("kind", choices=["postclassical", "postquantum"])
    x.add_argument("--n", type=int)
    x.add_argument("--d", type=int)
    x.add_argument("--q", required=True, help="CSV: probabilities, a diagonal, or a row-major matrix")
    x.add_argument("--seed", type=int, default=42)
    x.add_argument("--json", action="store_true")

    v = sub.add_parser("verify", help="run the no-go suite")
    vsub = v.add_subparsers(dest="target", parser_class=_Parser)
    vn = vsub.add_parser("nogo")
    vn.add_argument("--dims", required=True)
    vn.add_argument("--seed", type=int, default=42)
    vn.add_argument("--samples", type=int, default=20)
    vn.add_argument("--json", action="store_true")
    return p


def _emit_report(rep: VerificationReport, as_json: bool, out, strict: bool = True) -> int:
    good = rep.passed if strict else rep.ok
    if as_json:
        print(rep.to_json_lines(), file=out)
        summary = {"summary": {"checks": len(rep), "ok": rep.ok, "passed": rep.passed,
                               "seed": rep.seed, "dims": jsonable(rep.dims)}}
        print(json.dumps(summary, sort_keys=True), file=out)
    else:
        print(rep.table(), file=out)
        n_fail = sum(not (c.passed if strict else c.ok) for c in rep)
        print(f"\nRESULT: {'PASS' if good else 'FAIL'} ({len(rep)} checks, {n_fail} unexpected)", file=out)
    return EXIT_OK if good else EXIT_FAIL


def _matrix_text(m) -> str:
    m = np.asarray(m)
    if np.iscomplexobj(m) and np.abs(m.imag).max() == 0:
        m = m.real

    def cell(z):
        if np.iscomplexobj(z):
            return f"{fmt(z.real)}{'+' if z.imag >= 0 else '-'}{fmt(abs(z.imag))}j"
        return fmt(z)

    rows = [[cell(z) for z in row] for row in m]
    w = max(len(c) for r in rows for c in r)
    return "\n".join("  ".join(c.rjust(w) for c in r) for r in rows)


def cmd_eval(args, out) -> int:
    d = diagram.parse_file(args.file)
    p = diagram.evaluate(d)
    res = diagram.result_json(p)
    op = None
    if p.theory_id == QUANTUM.id and p.is_state:
        op = QUANTUM.operator(p)
        res["operator"] = op
    if args.json:
        print(json.dumps(jsonable(res), sort_keys=True), file=out)
        return EXIT_OK
    print(f"{' '.join(res['inputs']) or '-'} -> {' '.join(res['outputs']) or '-'}  [{p.theory_id}]", file=out)
    if p.is_scalar:
        print(f"probability = {fmt(res['probability'])}", file=out)
    elif op is not None:
        print(_matrix_text(op), file=out)
    else:
        print(_matrix_text(p.matrix), file=out)
    return EXIT_OK


def cmd_check(args, out) -> int:
    if args.target == "theory":
        theory, t = resolve(args.name)
        rep = check_theory(theory, t, args.samples, args.seed, args.tol)
        if args.purification:
            rep.extend(check_purification_principle(theory, t, args.samples, args.seed))
        return _emit_report(rep, args.json, out)
    if args.target == "candidate":
        theory, _ = resolve(args.theory)
        text = Path(args.spec).read_text(encoding="utf-8")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as e:
            raise UsageError(f"{args.spec}:{e.lineno}:{e.colno}: {e.msg}") from None
        cand = decoherence.DecoherenceCandidate.from_json(data, theory)
        return _emit_report(decoherence.check_candidate(cand, args.budget, args.seed), args.json, out)
    raise UsageError("check needs 'theory' or 'candidate'")


def cmd_infodim(args, out) -> int:
    theory, t = resolve(args.theory)
    res = convex.info_dimension(theory, t, budget=args.budget, seed=args.seed)
    if args.json:
        print(json.dumps(jsonable({"system": t.label, **res.to_json()}), sort_keys=True), file=out)
    else:
        line = f"{t.label}: information dimension {res.value}"
        if res.joint_value is not None and res.joint_value != res.value:
            line += f" (largest jointly distinguishable set: {res.joint_value})"
        print(line, file=out)
    return EXIT_OK


def cmd_counterexample(args, out) -> int:
    q = _csv_floats(args.q)
    if args.kind == "postclassical":
        if args.n is None:
            raise UsageError("postclassical needs --n")
        cand = decoherence.postclassical_counterexample(args.n, q)
    else:
        if args.d is None:
            raise UsageError("postquantum needs --d")
        d = args.d
        if len(q) == d:
            mat = np.diag(q)
        elif len(q) == d * d:
            mat = np.array(q).reshape(d, d)
        else:
            raise UsageError(f"--q needs {d} diagonal entries or {d * d} matrix entries")
        cand = decoherence.postquantum_counterexample(d, mat)
    return _emit_report(decoherence.check_candidate(cand, seed=args.seed), args.json, out)


def cmd_verify(args, out) -> int:
    if args.target != "nogo":
        raise UsageError("verify needs 'nogo'")
    dims = _csv_ints(args.dims)
    if not dims:
        raise UsageError("--dims must list at least one dimension")
    if min(dims) < 2:
        raise UsageError("every dimension must be at least 2")
    rep = nogo.run_nogo_suite(dims, args.seed, args.samples)
    return _emit_report(rep, args.json, out, strict=False)


COMMANDS = {"eval": cmd_eval, "check": cmd_check, "infodim": cmd_infodim,
            "counterexample": cmd_counterexample, "verify": cmd_verify}


def run(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required")
        return COMMANDS[args.command](args, out)
    except UsageError as e:
        print(f"gptverify: error: {e}", file=err)
        return EXIT_USAGE
    except DiagramError as e:
        print(e.format(), file=err)
        return EXIT_USAGE
    except OSError as e:
        print(f"gptverify: error: {e}", file=err)
        return EXIT_USAGE
    except (BudgetError, GPTError, ValueError, KeyError) as e:
        print(f"gptverify: error: {e}", file=err)
        return EXIT_USAGE
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as e:
        print(f"gptverify: numeric failure: {e}", file=err)
        return EXIT_NUMERIC
    except Exception as e:  # noqa: BLE001
        print(f"gptverify: internal failure: {type(e).__name__}: {e}", file=err)
        return EXIT_NUMERIC


def main(argv=None) -> None:
    sys.exit(run(argv))
