"""Command-line client for the lab service.

Subcommands: run, sweep, oracle-efht, oracle-brute, drift, verify.  By
default requests are handled in-process by the same handler layer the
FastAPI app uses; ``--server URL`` sends them to a running service
instead.  Results go to stdout in the declared machine-parseable format;
diagnostics go to stderr.  Exit codes: 0 success, 1 usage or input error,
2 failed verification.

EALAB_WORKERS sets the default worker count for parallel trials.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .instance_files import InstanceFormatError, load_instance
from .oracle import EnumerationCapError, SingularChainError
from .problems import UnknownOptimumError
from .service import schemas


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1; 2 is reserved for verify
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_workers() -> int:
    try:
        return max(1, int(os.environ.get("EALAB_WORKERS", "1")))
    except ValueError:
        return 1


def _build_parser() -> _Parser:
    parser = _Parser(prog="ealab", description=__doc__.split("\n\n")[0])
    parser.add_argument("--server", metavar="URL", default=None,
                        help="send requests to a running service instead of in-process")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run (1+1)-EA trials on an instance")
    source = run.add_mutually_exclusive_group(required=True)
    source.add_argument("--instance", metavar="FILE", help="instance file (JSON)")
    source.add_argument("--family", choices=["onemax", "binval", "plateau", "worst_k1",
                                             "worst_midk", "worst_highk"],
                        help="builder shorthand; expands to the same schema")
    run.add_argument("--n", type=int)
    run.add_argument("--k", type=int)
    run.add_argument("--d", type=int)
    run.add_argument("--m", type=int)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--max-evals", type=int, default=10**9)
    run.add_argument("--trials", type=int, default=1)
    run.add_argument("--no-stop", action="store_true",
                     help="ignore the optimum and always run the full budget")
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--csv", action="store_true", help="emit a CSV row instead of a record line")

    swp = sub.add_parser("sweep", help="run a parameter sweep to CSV")
    swp.add_argument("--spec", metavar="FILE", required=True, help="sweep spec (JSON)")
    swp.add_argument("--out", metavar="CSV", default="-", help="output file, - for stdout")
    swp.add_argument("--workers", type=int, default=None)

    efht = sub.add_parser("oracle-efht",
                          help="exact expected-hitting-time chain solve")
    efht.add_argument("--kind", choices=["deletion-onemax", "accept-all"], required=True)
    efht.add_argument("--n", type=int, required=True)
    efht.add_argument("--k", type=int)
    efht.add_argument("--d", type=int, default=0)
    efht.add_argument("--init", default="uniform", help='"uniform" or a ones count')
    efht.add_argument("--full", action="store_true", help="solve over all 2^n states")
    efht.add_argument("--mode", choices=["auto", "exact", "mp", "float"], default="auto")
    efht.add_argument("--table", action="store_true", help="emit the per-state EFHT table")

    brute = sub.add_parser("oracle-brute",
                           help="brute-force optimum or objective cross-check")
    brute.add_argument("--instance", metavar="FILE", required=True)
    mode = brute.add_mutually_exclusive_group(required=True)
    mode.add_argument("--optimum", action="store_true", help="enumerate the feasible optimum")
    mode.add_argument("--check-F", action="store_true", dest="check_f",
                      help="compare closed-form objective against enumeration")
    brute.add_argument("--samples", type=int, default=512)
    brute.add_argument("--seed", type=int, default=0)

    drf = sub.add_parser("drift", help="check drift lower bounds per state")
    drf.add_argument("--family", required=True,
                     choices=["walk-piecewise", "walk-linear", "ones-gap",
                              "leading-block", "leading-ones-gap", "objective-gap"])
    drf.add_argument("--params", default="",
                     help="comma-separated name=value pairs, e.g. n=50,k=30,d=10")
    drf.add_argument("--instance", metavar="FILE", help="instance for objective-gap")
    drf.add_argument("--states", required=True,
                     help="ones:A..B | ones:j1,j2,... | exhaustive:A..B")
    drf.add_argument("--samples", type=int, required=True)
    drf.add_argument("--kind", choices=["additive", "multiplicative"], default="additive")
    drf.add_argument("--c", default="0", help="bound constant, float or p/q")
    drf.add_argument("--seed", type=int, default=0)

    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--quick", action="store_true", help="reduced smoke profile")
    ver.add_argument("--criteria", default=None, help="comma-separated criterion numbers")

    return parser


def _instance_model_from_args(args) -> schemas.InstanceModel:
    if args.instance:
        return schemas.InstanceModel(**_load_instance_doc(args.instance))
    fields = {}
    for name in ("n", "k", "d", "m"):
        value = getattr(args, name)
        if value is not None:
            fields[name] = value
    return schemas.InstanceModel(family=args.family, **fields)


def _load_instance_doc(path: str) -> dict:
    from .instance_files import instance_to_dict

    return instance_to_dict(load_instance(path))


def _parse_params(text: str) -> dict:
    params = {}
    for chunk in filter(None, (part.strip() for part in text.split(","))):
        name, _, value = chunk.partition("=")
        if not _ or not value:
            raise ValueError(f"malformed parameter {chunk!r}; expected name=value")
        params[name.strip()] = int(value)
    return params


class _Client:
    """Dispatches requests in-process or to a remote service."""

    def __init__(self, server: str | None):
        self.server = server.rstrip("/") if server else None

    def call(self, path: str, request, response_model):
        if self.server is None:
            from .service import handlers

            handler = {
                "/run": handlers.run_handler,
                "/sweep": handlers.sweep_handler,
                "/oracle/efht": handlers.efht_handler,
                "/oracle/brute": handlers.brute_handler,
                "/drift": handlers.drift_handler,
            }[path]
            return handler(request)
        import httpx

        response = httpx.post(
            self.server + path, json=request.model_dump(mode="json"), timeout=None
        )
        if response.status_code != 200:
            raise ValueError(f"server returned {response.status_code}: {response.text}")
        return response_model.model_validate(response.json())


def _cmd_run(args, client: _Client) -> int:
    request = schemas.RunRequest(
        instance=_instance_model_from_args(args),
        seed=args.seed,
        trials=args.trials,
        max_evaluations=args.max_evals,
        stop_on_optimum=not args.no_stop,
        workers=args.workers or _default_workers(),
    )
    response = client.call("/run", request, schemas.RunResponse)
    sys.stdout.write(response.csv if args.csv else response.record + "\n")
    return 0


def _cmd_sweep(args, client: _Client) -> int:
    doc = json.loads(Path(args.spec).read_text())
    request = schemas.SweepRequest(
        spec=schemas.SweepSpecModel(**doc), workers=args.workers or _default_workers()
    )
    response = client.call("/sweep", request, schemas.SweepResponse)
    for skip in response.skipped:
        sys.stderr.write(f"skipped {skip.cell}: {skip.reason}\n")
    if args.out == "-":
        sys.stdout.write(response.csv)
    else:
        Path(args.out).write_text(response.csv)
        sys.stderr.write(f"wrote {len(response.rows)} rows to {args.out}\n")
    return 0


def _cmd_oracle_efht(args, client: _Client) -> int:
    init = args.init if args.init == "uniform" else int(args.init)
    request = schemas.EfhtRequest(
        kind=args.kind,
        n=args.n,
        k=args.k,
        d=args.d,
        init=init,
        full=args.full,
        mode=args.mode,
        include_table=args.table,
    )
    response = client.call("/oracle/efht", request, schemas.EfhtResponse)
    if args.table:
        sys.stdout.write(response.table_csv or "")
    else:
        residual = "" if response.residual is None else repr(response.residual)
        sys.stdout.write(
            f"kind={response.kind} n={args.n} k={args.k if args.k is not None else ''} "
            f"d={args.d} init={response.init} mode={response.mode} "
            f"mean_evaluations={response.mean_evaluations} residual={residual}\n"
        )
    return 0


def _cmd_oracle_brute(args, client: _Client) -> int:
    request = schemas.BruteRequest(
        instance=schemas.InstanceModel(**_load_instance_doc(args.instance)),
        mode="optimum" if args.optimum else "check-F",
        samples=args.samples,
        seed=args.seed,
    )
    response = client.call("/oracle/brute", request, schemas.BruteResponse)
    if response.mode == "optimum":
        stored = response.stored_optimum if response.stored_optimum is not None else ""
        match = "" if response.matches_stored is None else int(response.matches_stored)
        sys.stdout.write(f"optimum={response.optimum} stored={stored} match={match}\n")
    else:
        sys.stdout.write(f"checked={response.checked} agree={int(bool(response.agree))}\n")
    return 0


def _cmd_drift(args, client: _Client) -> int:
    params = _parse_params(args.params)
    instance = None
    if args.instance:
        instance = schemas.InstanceModel(**_load_instance_doc(args.instance))
    request = schemas.DriftRequest(
        family=args.family,
        instance=instance,
        states=args.states,
        samples=args.samples,
        kind=args.kind,
        c=args.c,
        seed=args.seed,
        **{key: params[key] for key in ("n", "k", "d", "r") if key in params},
    )
    response = client.call("/drift", request, schemas.DriftResponse)
    sys.stdout.write(response.csv)
    bound = (
        f" implied_bound={response.implied_evaluations_bound!r}"
        if response.implied_evaluations_bound is not None
        else ""
    )
    sys.stderr.write(
        f"family={response.family} kind={response.kind} c={response.c!r} "
        f"all_pass={int(response.all_pass)}{bound}\n"
    )
    return 0


def _cmd_verify(args, client: _Client) -> int:
    criteria = None
    if args.criteria:
        criteria = [int(part) for part in args.criteria.split(",") if part]
    request = schemas.VerifyRequest(quick=args.quick, criteria=criteria)
    if client.server is None:
        from .service.handlers import verify_handler

        response = verify_handler(request, echo=lambda line: print(line, flush=True))
    else:
        import httpx

        raw = httpx.post(
            client.server + "/verify", json=request.model_dump(mode="json"), timeout=None
        )
        if raw.status_code != 200:
            raise ValueError(f"server returned {raw.status_code}: {raw.text}")
        response = schemas.VerifyResponse.model_validate(raw.json())
        for result in response.results:
            verdict = "PASS" if result.passed else "FAIL"
            print(
                f"{verdict} criterion {result.number} [{result.name}] "
                f"{result.detail} ({result.seconds:.1f}s)"
            )
    return 0 if response.passed else 2


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    client = _Client(args.server)
    commands = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "oracle-efht": _cmd_oracle_efht,
        "oracle-brute": _cmd_oracle_brute,
        "drift": _cmd_drift,
        "verify": _cmd_verify,
    }
    try:
        return commands[args.command](args, client)
    except (
        ValueError,
        InstanceFormatError,
        UnknownOptimumError,
        EnumerationCapError,
        SingularChainError,
        OSError,
    ) as exc:
        sys.stderr.write(f"ealab {args.command}: {exc}\n")
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
