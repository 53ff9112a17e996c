"""Batch front-end: load scenarios, protocols and channels from JSON, run
the verifications and experiments, emit machine-readable reports.

Reports are canonical JSON (sorted keys) or CSV projections; the same
config and seed always produce byte-identical files. Wall-clock timings go
to stderr only. Exit codes: 0 success, 1 runtime failure, 2 bad input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction

from . import __version__
from .coding import (
    Codebook,
    exact_rate,
    fixed_capacity,
    fixed_two_group_run,
    indep_capacity,
    ml_decode,
    run_indep_experiment,
    window_channel,
)
from .embedding import InnocentChannel, compose_run, equivalence_audit
from .game import best_upper_bound, succ_of_protocol
from .probability import fraction_to_jsonable, label_to_jsonable
from .protocols import (
    BudgetExceededError,
    LeakScenario,
    ProtocolTree,
    enumerate_joint,
    non_revealing,
    safety_report,
    validate,
)
from .suspicion import check_general_upper_bound, check_round_decomposition, check_transcript_bound


def _parse_fraction(text: str) -> Fraction:
    return Fraction(text)


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=True) + "\n"


def _config_hash(command: str, config: dict) -> str:
    """Hash of the semantic inputs: file arguments contribute their content,
    not their path, and commands without randomness omit the seed."""
    payload = {"command": command}
    for key, value in config.items():
        payload[key] = repr(value)
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


def _emit(args, command: str, config: dict, payload: dict, csv_text: str = None) -> None:
    payload = {
        "version": __version__,
        "config_hash": _config_hash(command, config),
        **payload,
    }
    if getattr(args, "format", "json") == "csv" and csv_text is not None:
        text = csv_text
    else:
        text = _canonical_json(payload)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _file_digest(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()[:16]


def _load_json(path: str) -> dict:
    with open(path) as fh:
        return json.load(fh)


def cmd_capacity(args) -> int:
    cs = [_parse_fraction(c) for c in args.c.split(",")]
    bs = [_parse_fraction(b) for b in args.b.split(",")] if args.b else [None]
    rows = []
    for c in cs:
        if not 0 < c < 1:
            raise ValueError("c must be in (0, 1), got %s" % c)
        for b in bs:
            row = {"c": str(c), "fixed_capacity": fixed_capacity(c)}
            if b is not None:
                if not 0 < b <= c:
                    raise ValueError("b must be in (0, c], got %s" % b)
                row["b"] = str(b)
                row["indep_capacity"] = indep_capacity(b, c)
            rows.append(row)
    csv_lines = ["b,c,indep_capacity,fixed_capacity"]
    for row in rows:
        csv_lines.append(
            "%s,%s,%s,%s"
            % (row.get("b", ""), row["c"], row.get("indep_capacity", ""), row["fixed_capacity"])
        )
    _emit(
        args,
        "capacity",
        {"b": args.b, "c": args.c},
        {"command": "capacity", "rows": rows},
        "\n".join(csv_lines) + "\n",
    )
    return 0


def cmd_verify(args) -> int:
    tree = ProtocolTree.from_jsonable(_load_json(args.protocol))
    scenario = LeakScenario.from_jsonable(_load_json(args.scenario))
    report = validate(tree, scenario)
    if not report.ok:
        raise ValueError("invalid protocol: %s" % "; ".join(report.issues))
    transcript_cert = check_transcript_bound(tree, scenario, budget=args.budget)
    rounds = check_round_decomposition(tree, scenario, budget=args.budget)
    payload = {
        "command": "verify",
        "non_revealing": non_revealing(tree, scenario),
        "transcript_bound": transcript_cert.to_jsonable(),
        "rounds": [
            {
                "prefix": label_to_jsonable(r.prefix),
                "speaker": r.speaker,
                "speaker_cert": r.speaker_cert.to_jsonable(),
                "listener_certs": {
                    str(j): cert.to_jsonable() for j, cert in r.listener_certs.items()
                },
                "holds": r.holds,
            }
            for r in rounds
        ],
        "all_rounds_hold": all(r.holds for r in rounds),
    }
    try:
        payload["general_upper_bound"] = check_general_upper_bound(
            tree, scenario, budget=args.budget
        ).to_jsonable()
    except ValueError as exc:
        payload["general_upper_bound"] = {"skipped": str(exc)}
    if args.c is not None:
        c = _parse_fraction(args.c)
        safety = safety_report(tree, scenario, c)
        payload["safety"] = {
            "c": str(c),
            "safe": safety.ok,
            "max_posterior": fraction_to_jsonable(safety.max_posterior),
        }
    config = {
        "protocol": _file_digest(args.protocol),
        "scenario": _file_digest(args.scenario),
        "c": args.c,
        "budget": args.budget,
    }
    _emit(args, "verify", config, payload)
    return 0


def cmd_leak(args) -> int:
    started = time.perf_counter()
    if args.mode == "indep":
        report = run_indep_experiment(
            _parse_fraction(args.b),
            _parse_fraction(args.c),
            exact_rate(args.rate),
            args.n,
            args.trials,
            args.seed,
        )
    else:
        report = fixed_two_group_run(
            args.l,
            args.n,
            _parse_fraction(args.c),
            exact_rate(args.rate),
            args.trials,
            args.seed,
            c_prime=_parse_fraction(args.c_prime) if args.c_prime else None,
        )
    payload = {
        "command": "leak",
        "mode": args.mode,
        "report": report.to_jsonable(),
    }
    config = {
        "mode": args.mode,
        "b": args.b,
        "c": args.c,
        "c_prime": args.c_prime,
        "rate": args.rate,
        "n": args.n,
        "l": args.l,
        "trials": args.trials,
        "seed": args.seed,
    }
    print("wall_time_s=%.3f" % (time.perf_counter() - started), file=sys.stderr)
    _emit(args, "leak", config, payload)
    return 0


def cmd_game(args) -> int:
    tree = ProtocolTree.from_jsonable(_load_json(args.protocol))
    scenario = LeakScenario.from_jsonable(_load_json(args.scenario))
    value = succ_of_protocol(tree, scenario, budget=args.budget)
    import math

    h = math.log2(len(scenario.x_support))
    l = float(
        sum(
            scenario.joint.prob_event({"L%d" % i: 1})
            for i in range(1, scenario.n_players + 1)
        )
    )
    best_c, bound = best_upper_bound(h, l)
    protocol_id = hashlib.sha256(
        _canonical_json(tree.to_jsonable()).encode()
    ).hexdigest()[:12]
    payload = {
        "command": "game",
        "h": h,
        "l": l,
        "n": scenario.n_players,
        "protocol_id": protocol_id,
        "succ": fraction_to_jsonable(value.succ),
        "succ_float": float(value.succ),
        "best_bound_c": str(best_c),
        "bound": bound,
        "decisions": value.to_jsonable()["decisions"],
    }
    csv_lines = [
        "h,l,n,protocol_id,succ,best_bound_c,bound",
        "%s,%s,%d,%s,%s,%s,%s"
        % (h, l, scenario.n_players, protocol_id, float(value.succ), best_c, bound),
    ]
    config = {
        "protocol": _file_digest(args.protocol),
        "scenario": _file_digest(args.scenario),
        "budget": args.budget,
    }
    _emit(args, "game", config, payload, "\n".join(csv_lines) + "\n")
    return 0


def cmd_embed(args) -> int:
    tree = ProtocolTree.from_jsonable(_load_json(args.protocol))
    scenario = LeakScenario.from_jsonable(_load_json(args.scenario))
    channel = InnocentChannel.from_jsonable(_load_json(args.channel))
    run = compose_run(tree, channel, scenario, args.seed, args.max_rounds)
    payload = {
        "command": "embed",
        "run": {
            "x": label_to_jsonable(run.x),
            "lvec": list(run.lvec),
            "decoded": None if run.decoded is None else label_to_jsonable(run.decoded),
            "rounds_used": run.rounds_used,
            "innocent_transcript": [list(map(label_to_jsonable, row)) for row in run.innocent_transcript],
        },
    }
    if args.audit_depth:
        audit = equivalence_audit(tree, channel, scenario, args.audit_depth)
        payload["audit"] = audit.to_jsonable()
    config = {
        "protocol": _file_digest(args.protocol),
        "scenario": _file_digest(args.scenario),
        "channel": _file_digest(args.channel),
        "seed": args.seed,
        "max_rounds": args.max_rounds,
        "audit_depth": args.audit_depth,
    }
    _emit(args, "embed", config, payload)
    return 0


def cmd_decode(args) -> int:
    book = Codebook.from_jsonable(_load_json(args.codebook))
    transcript = _load_json(args.transcript)["messages"]
    ch = window_channel(_parse_fraction(args.b), _parse_fraction(args.c))
    guess = ml_decode(book, transcript, ch)
    config = {
        "codebook": _file_digest(args.codebook),
        "transcript": _file_digest(args.transcript),
        "b": args.b,
        "c": args.c,
    }
    _emit(
        args,
        "decode",
        config,
        {
            "command": "decode",
            "x_hat": guess,
            "tie": guess is None,
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cryptogeno",
        description="capacities, certificates and experiments for deniable leaking",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", default=None, help="write the report here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--budget", type=int, default=10**6)

    p = sub.add_parser("capacity", help="capacity formulas over a parameter grid")
    common(p)
    p.add_argument("--c", required=True, help="comma-separated posteriors in (0,1)")
    p.add_argument("--b", default=None, help="comma-separated leak priors")
    p.set_defaults(func=cmd_capacity)

    p = sub.add_parser("verify", help="suspicion certificates for a protocol")
    common(p)
    p.add_argument("--protocol", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--c", default=None, help="also check the safety predicate at this cap")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("leak", help="reliable-leakage Monte Carlo experiments")
    common(p)
    p.add_argument("--mode", choices=("indep", "fixed"), default="indep")
    p.add_argument("--b", default="1/2")
    p.add_argument("--c", default="2/3")
    p.add_argument("--c-prime", dest="c_prime", default=None)
    p.add_argument("--rate", default="1/10")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--l", type=int, default=0)
    p.add_argument("--trials", type=int, default=100)
    p.set_defaults(func=cmd_leak)

    p = sub.add_parser("game", help="evaluate the leaker-hunting game exactly")
    common(p)
    p.add_argument("--protocol", required=True)
    p.add_argument("--scenario", required=True)
    p.set_defaults(func=cmd_game)

    p = sub.add_parser("embed", help="run a protocol inside innocent chatter")
    common(p)
    p.add_argument("--protocol", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--max-rounds", dest="max_rounds", type=int, default=200)
    p.add_argument("--audit-depth", dest="audit_depth", type=int, default=0)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("decode", help="regenerate a codebook and ML-decode a transcript")
    common(p)
    p.add_argument("--codebook", required=True, help="JSON with seed, h, n, d")
    p.add_argument("--transcript", required=True, help='JSON with "messages": [..]')
    p.add_argument("--b", default="1/2")
    p.add_argument("--c", default="2/3")
    p.set_defaults(func=cmd_decode)

    return parser


def _error_record(args, kind: str, exc: BaseException) -> None:
    # runtime failures leave an explicit record; validation failures do not
    # produce output files at all
    record = _canonical_json(
        {"version": __version__, "error": {"kind": kind, "message": str(exc)}}
    )
    if getattr(args, "out", None):
        with open(args.out, "w") as fh:
            fh.write(record)
    else:
        sys.stdout.write(record)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError, ZeroDivisionError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except BudgetExceededError as exc:
        print("budget error: %s" % exc, file=sys.stderr)
        _error_record(args, "budget", exc)
        return 1
    except MemoryError as exc:
        print("memory budget error: %s" % exc, file=sys.stderr)
        _error_record(args, "memory", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
