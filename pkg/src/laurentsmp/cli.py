"""Command-line front end.

Exit status: 0 on success, 1 when the model is invalid or a check fails,
2 on usage errors (bad flags, unreadable files, malformed or out-of-range
arguments).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import Callable, Sequence, TextIO

from .expansion import ExpansionError, LaurentExpansion, as_rational, format_rational
from .model import (
    ModelError,
    SemiMarkovModel,
    complete_remainders,
    needs_completion,
    parse_model,
    positivity_thresholds,
    validate_conditions,
)
from .oracle import (
    OracleError,
    certify,
    instantiate,
    numeric_hitting,
    numeric_stationary,
)
from .reduction import hitting_time, pairwise_hitting, reduce_sequence, trace_to_dict
from .stationary import stationary_all

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


class CheckFailed(Exception):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def _rational(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (ExpansionError, TypeError) as exc:
        raise argparse.ArgumentTypeError(f"malformed rational {text!r}") from exc


def _state_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of states, got {text!r}") from exc


def _load(path: str) -> SemiMarkovModel:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc
    return parse_model(data)


def _prepared(path: str) -> SemiMarkovModel:
    """Load, complete missing designated bounds when possible, and validate."""
    m = _load(path)
    if needs_completion(m):
        try:
            m = complete_remainders(m)
        except ModelError:
            pass  # proceed with coefficients only where bounds are missing
    report = validate_conditions(m)
    if not report.ok:
        raise ModelError("model fails validation; run `validate` for details")
    return m


def _check_state(m: SemiMarkovModel, s: int) -> None:
    if s not in m.states:
        raise UsageError(f"unknown state {s}")


def _check_order(m: SemiMarkovModel, target: int, order: list[int] | None) -> None:
    if order is not None and sorted(order) != [s for s in m.states if s != target]:
        raise UsageError(f"--order must list every state except {target} exactly once")


# ---------------------------------------------------------------------------
# text rendering


def _bound_text(x: LaurentExpansion) -> str:
    if x.bound is None:
        return "no bound"
    b = x.bound
    return f"delta={format_rational(b.delta)} G={b.G!r} epsBar={b.eps_bar!r}"


def _exp_text(x: LaurentExpansion) -> str:
    coeffs = " ".join(format_rational(c) for c in x.coeffs)
    return f"[{coeffs}] h={x.h} k={x.k} {_bound_text(x)}   ({x})"


def _model_text(m: SemiMarkovModel) -> list[str]:
    lines = [f"states {list(m.states)} eps0={m.eps0!r}"]
    for i in m.states:
        for j in m.transition_set(i):
            lines.append(f"  p[{i},{j}] = {_exp_text(m.p(i, j))}")
            lines.append(f"  e[{i},{j}] = {_exp_text(m.e(i, j))}")
    return lines


# ---------------------------------------------------------------------------
# subcommands; each returns (json payload, text lines)


def cmd_validate(args) -> tuple[dict, list[str]]:
    m = _load(args.file)
    report = validate_conditions(m)
    lines = [f"valid: {report.ok}", f"strongly connected: {report.strongly_connected}"]
    for i, j in report.unreachable:
        lines.append(f"  state {j} unreachable from {i}")
    for i, l, total in report.stochasticity_failures:
        lines.append(f"  row {i}: coefficient sum at eps^{l} is {format_rational(total)}")
    for i, low in report.lowest_power_failures:
        lines.append(f"  row {i}: lowest probability power is {low}, expected 0")
    for i, j, kind in report.nonpivotal:
        lines.append(f"  entry ({i},{j}) {kind}: zero leading coefficient")
    for i in report.missing_exits:
        lines.append(f"  state {i} has no exit transition")
    if report.floors is not None:
        lines.append(
            f"deltaCirc={format_rational(report.floors.delta_circ)} "
            f"deltaStar={format_rational(report.floors.delta_star)}"
        )
    if not report.ok:
        raise CheckFailed((report.to_dict(), lines))
    return report.to_dict(), lines


def cmd_complete(args) -> tuple[dict, list[str]]:
    m = complete_remainders(_load(args.file))
    text = m.to_json()
    try:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    except OSError as exc:
        raise UsageError(f"cannot write {args.output}: {exc.strerror}") from exc
    return {"output": args.output, "model": m.to_dict()}, [f"wrote {args.output}"] + _model_text(m)


def cmd_thresholds(args) -> tuple[dict, list[str]]:
    m = _prepared(args.file)
    if not 0 < args.alpha < Fraction(1, 2):
        raise UsageError("alpha must lie in (0, 1/2)")
    t = positivity_thresholds(m, args.alpha)
    lines = [
        f"epsPrime0={t.eps_prime0!r}",
        f"epsDoublePrime0={t.eps_double_prime0!r}",
        f"epsTilde0={t.eps_tilde0!r}",
    ]
    for pair in sorted(t.p_prime):
        lines.append(f"  ({pair[0]},{pair[1]}) p: {t.p_prime[pair]!r}  e: {t.e_prime[pair]!r}")
    return t.to_dict(), lines


def cmd_reduce(args) -> tuple[dict, list[str]]:
    m = _prepared(args.file)
    for r in args.exclude:
        _check_state(m, r)
    if len(set(args.exclude)) != len(args.exclude) or len(args.exclude) >= m.N:
        raise UsageError("exclusion list must name distinct states and leave at least one")
    steps = reduce_sequence(m, args.exclude)
    final = steps[-1].model
    payload: dict = {"excluded": args.exclude, "model": final.to_dict()}
    lines = []
    if args.trace:
        payload["trace"] = trace_to_dict(steps)
        for step in steps:
            lines.append(f"exclude {step.excluded}: barP = {_exp_text(step.bar_p)}")
    lines += _model_text(final)
    return payload, lines


def cmd_hitting(args) -> tuple[dict, list[str]]:
    m = _prepared(args.file)
    _check_state(m, args.target)
    _check_order(m, args.target, args.order)
    result = hitting_time(m, args.target, args.order)
    lines = [
        f"E[{args.target},{args.target}] order={list(result.order)}",
        f"  {_exp_text(result.expansion)}",
    ]
    if result.rebased is not None:
        lines.append(f"  rebased: {_bound_text(result.rebased)}")
    return result.to_dict(), lines


def cmd_pairwise(args) -> tuple[dict, list[str]]:
    m = _prepared(args.file)
    if len(args.pair) != 2:
        raise UsageError("--pair needs exactly two states")
    i, j = args.pair
    for s in (i, j):
        _check_state(m, s)
    if i == j:
        raise UsageError("--pair needs two distinct states")
    out = pairwise_hitting(m, i, j)
    payload = {f"{a},{b}": x.to_dict() for (a, b), x in sorted(out.items())}
    lines = [f"E[{a},{b}] = {_exp_text(x)}" for (a, b), x in sorted(out.items())]
    return payload, lines


def cmd_stationary(args) -> tuple[dict, list[str]]:
    m = _prepared(args.file)
    if args.state is not None:
        _check_state(m, args.state)
        _check_order(m, args.state, args.order)
        orders = {args.state: args.order} if args.order is not None else None
        result = stationary_all(m, orders)
        pi = result.per_state[args.state]
        chosen = result.rebased[args.state] if args.rebase_delta_star else pi
        if chosen is None:
            raise UsageError("rebasing needs remainder bounds on every entry")
        payload = {
            "state": args.state,
            "expansion": chosen.to_dict(),
            "exclusionOrder": list(result.orders[args.state]),
        }
        return payload, [f"pi[{args.state}] = {_exp_text(chosen)}"]
    if args.order is not None:
        raise UsageError("--order needs --state")
    result = stationary_all(m)
    payload = result.to_dict()
    if args.rebase_delta_star:
        if any(r is None for r in result.rebased.values()):
            raise UsageError("rebasing needs remainder bounds on every entry")
        payload["perState"] = payload["rebased"]
    shown = result.rebased if args.rebase_delta_star else result.per_state
    lines = [f"pi[{i}] = {_exp_text(x)}" for i, x in shown.items()]
    c = result.consistency
    lines.append(f"sum of eps^0 coefficients: {format_rational(c.zero_order_sum)}")
    for l, v in c.sums.items():
        if l > 0:
            lines.append(f"sum of eps^{l} coefficients: {format_rational(v)}")
    lines.append(f"complement check on state {c.complement_state}: {'ok' if c.complement_ok else 'MISMATCH'}")
    return payload, lines


def cmd_eval(args) -> tuple[dict, list[str]]:
    m = _prepared(args.file)
    eps = args.epsilon
    if not 0 < eps <= Fraction(m.eps0):
        raise UsageError(f"epsilon must lie in (0, eps0={m.eps0}]")
    nm = instantiate(m, eps)
    pi = numeric_stationary(nm)
    result = stationary_all(m)
    rows = []
    for a, s in enumerate(nm.states):
        rows.append(
            {
                "state": s,
                "numericPi": format_rational(pi[a]),
                "expansionPi": format_rational(result.per_state[s].evaluate(eps)),
                "numericReturnTime": format_rational(numeric_hitting(nm, s)),
                "expansionReturnTime": format_rational(result.hitting[s].expansion.evaluate(eps)),
            }
        )
    payload = {"instance": nm.to_dict(), "states": rows}
    lines = [f"epsilon={format_rational(eps)} approximate={nm.approximate}"]
    for row in rows:
        lines.append(
            f"  state {row['state']}: pi numeric={row['numericPi']} expansion={row['expansionPi']}; "
            f"return time numeric={row['numericReturnTime']} expansion={row['expansionReturnTime']}"
        )
    return payload, lines


def cmd_certify(args) -> tuple[dict, list[str]]:
    m = _prepared(args.file)
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    if not 0 < args.eps_max <= Fraction(m.eps0):
        raise UsageError(f"--eps-max must lie in (0, eps0={m.eps0}]")
    result = stationary_all(m)
    if any(pi.bound is None for pi in result.per_state.values()):
        raise UsageError("certification needs remainder bounds on every entry")
    reports = {}
    approximate = False
    for s, pi in result.per_state.items():
        # Round the bound's radius down to a short rational to keep samples small.
        top = min(args.eps_max, Fraction(math.floor(pi.bound.eps_bar * 10**6), 10**6))
        samples = []
        for n in range(1, args.samples + 1):
            eps = top * n / args.samples
            nm = instantiate(m, eps)
            approximate |= nm.approximate
            samples.append((eps, numeric_stationary(nm)[nm.index(s)]))
        reports[s] = certify(pi, samples)
    payload = {
        "approximateGroundTruth": approximate,
        "passed": all(r.passed for r in reports.values()),
        "states": {str(s): r.to_dict() for s, r in reports.items()},
    }
    lines = [
        f"pi[{s}]: max ratio {r.max_ratio!r} vs G {r.G!r} -> {'pass' if r.passed else 'FAIL'}"
        for s, r in reports.items()
    ]
    if approximate:
        lines.append("note: some remainders were ignored, ground truth is the polynomial part only")
    if not payload["passed"]:
        raise CheckFailed((payload, lines))
    return payload, lines


COMMANDS: dict[str, Callable] = {
    "validate": cmd_validate,
    "complete": cmd_complete,
    "thresholds": cmd_thresholds,
    "reduce": cmd_reduce,
    "hitting": cmd_hitting,
    "pairwise": cmd_pairwise,
    "stationary": cmd_stationary,
    "eval": cmd_eval,
    "certify": cmd_certify,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # route through our exit-code policy
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("file", help="model JSON file")
    common.add_argument("--format", choices=("json", "text"), default="text")

    parser = _Parser(prog="laurentsmp", description="Asymptotic expansions for perturbed semi-Markov models.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("validate", parents=[common], help="check model conditions")
    p = sub.add_parser("complete", parents=[common], help="fill in designated remainder bounds")
    p.add_argument("-o", "--output", required=True)
    p = sub.add_parser("thresholds", parents=[common], help="positivity thresholds")
    p.add_argument("--alpha", type=_rational, required=True)
    p = sub.add_parser("reduce", parents=[common], help="exclude states")
    p.add_argument("--exclude", type=_state_list, required=True)
    p.add_argument("--trace", action="store_true")
    p = sub.add_parser("hitting", parents=[common], help="expected return time")
    p.add_argument("--target", type=int, required=True)
    p.add_argument("--order", type=_state_list)
    p = sub.add_parser("pairwise", parents=[common], help="two-state hitting times")
    p.add_argument("--pair", type=_state_list, required=True)
    p = sub.add_parser("stationary", parents=[common], help="stationary distribution")
    p.add_argument("--state", type=int)
    p.add_argument("--order", type=_state_list)
    p.add_argument("--rebase-delta-star", action="store_true")
    p = sub.add_parser("eval", parents=[common], help="numeric instance at one epsilon")
    p.add_argument("--epsilon", type=_rational, required=True)
    p = sub.add_parser("certify", parents=[common], help="check stationary bounds against the oracle")
    p.add_argument("--samples", type=int, default=10)
    p.add_argument("--eps-max", type=_rational, required=True)
    return parser


def _emit(fmt: str, payload: dict, lines: list[str], out: TextIO) -> None:
    if fmt == "json":
        out.write(json.dumps(payload, indent=2) + "\n")
    else:
        out.write("\n".join(lines) + "\n")


def run(argv: Sequence[str] | None = None, out: TextIO | None = None, err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    fmt = getattr(args, "format", "text")
    try:
        payload, lines = COMMANDS[args.command](args)
    except UsageError as exc:
        err.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except CheckFailed as exc:
        payload, lines = exc.args[0]
        _emit(fmt, payload, lines, out)
        return EXIT_FAIL
    except (ModelError, ExpansionError, OracleError) as exc:
        err.write(f"error: {exc}\n")
        return EXIT_FAIL
    _emit(fmt, payload, lines, out)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
