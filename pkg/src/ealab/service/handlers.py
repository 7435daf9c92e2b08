"""Shared request handlers: the FastAPI routes and the CLI both call these."""

from __future__ import annotations

from fractions import Fraction

from .. import acceptance, drift, experiments, oracle
from ..bitvec import BitString, RandomSource
from ..experiments import SweepSpec, format_value
from ..problems import build_binval, build_onemax
from . import schemas


def run_handler(req: schemas.RunRequest) -> schemas.RunResponse:
    inst = req.instance.to_instance()
    stats = experiments.run_trials(
        inst,
        req.trials,
        master_seed=req.seed,
        max_evaluations=req.max_evaluations,
        stop_on_optimum=req.stop_on_optimum,
        workers=req.workers,
    )
    return schemas.RunResponse(
        stats=schemas.TrialStatsModel.from_stats(stats),
        record=stats.record(),
        csv=experiments.write_csv([stats]),
    )


def sweep_handler(req: schemas.SweepRequest) -> schemas.SweepResponse:
    spec = SweepSpec.from_dict(req.spec.model_dump(exclude_none=True))
    result = experiments.sweep(spec, workers=req.workers)
    return schemas.SweepResponse(
        rows=[schemas.TrialStatsModel.from_stats(s) for s in result.stats],
        skipped=[schemas.SkippedCell(cell=c, reason=r) for c, r in result.skipped],
        csv=result.to_csv(),
    )


def efht_handler(req: schemas.EfhtRequest) -> schemas.EfhtResponse:
    if req.full:
        if req.kind != "deletion-onemax":
            raise ValueError("the full-state chain is available for deletion-onemax only")
        if req.k is None:
            raise ValueError("deletion-onemax needs k")
        solution = oracle.full_chain_efht(build_onemax(req.n, req.k, req.d))
    elif req.kind == "deletion-onemax":
        if req.k is None:
            raise ValueError("deletion-onemax needs k")
        solution = oracle.lumped_chain_efht(
            "deletion_onemax", req.n, k=req.k, d=req.d, init=req.init, mode=req.mode
        )
    else:
        solution = oracle.lumped_chain_efht(
            "accept_all_walk", req.n, d=req.d, init=req.init, mode=req.mode
        )
    mean = solution.mean_evaluations
    mean_text = format_value(mean if isinstance(mean, Fraction) else float(mean))
    return schemas.EfhtResponse(
        kind=req.kind,
        states=solution.states,
        mode=solution.mode,
        init=solution.init,
        mean_evaluations=mean_text,
        residual=solution.residual,
        table_csv=solution.to_csv() if req.include_table else None,
    )


def brute_handler(req: schemas.BruteRequest) -> schemas.BruteResponse:
    inst = req.instance.to_instance()
    if req.mode == "optimum":
        optimum = oracle.brute_force_optimum(inst)
        stored = inst.optimum_value
        return schemas.BruteResponse(
            mode=req.mode,
            optimum=format_value(optimum),
            stored_optimum=None if stored is None else format_value(stored),
            matches_stored=None if stored is None else optimum == stored,
        )
    if not hasattr(inst, "objective"):
        raise ValueError("check-F applies to deletion-robust instances only")
    if inst.n <= 12:
        masks = range(1 << inst.n)
    else:
        rng = RandomSource(req.seed)
        masks = [rng.bits(inst.n) for _ in range(req.samples)]
    checked = 0
    agree = True
    for mask in masks:
        x = BitString(inst.n, mask)
        checked += 1
        if oracle.brute_force_F(inst, x) != inst.objective_value(x):
            agree = False
            break
    return schemas.BruteResponse(mode=req.mode, checked=checked, agree=agree)


def drift_handler(req: schemas.DriftRequest) -> schemas.DriftResponse:
    inst = req.instance.to_instance() if req.instance is not None else None
    params = {
        key: value
        for key, value in (("n", req.n), ("k", req.k), ("d", req.d), ("r", req.r))
        if value is not None
    }
    if req.family == "objective-gap":
        if inst is None:
            raise ValueError("objective-gap needs an instance")
        dist = drift.make_distance(req.family, inst=inst)
        n = inst.n
    else:
        if "n" not in params:
            raise ValueError(f"family {req.family} needs n")
        dist = drift.make_distance(req.family, **params)
        n = params["n"]
        if dist.step_kind == "ea" and inst is None:
            # canonical stepping instance: the problem each distance was built for
            missing = {"n", "k", "d"} - set(params)
            if missing:
                raise ValueError(
                    f"family {req.family} steps the elitist rule; give {sorted(missing)} "
                    "or an explicit instance"
                )
            if req.family == "ones-gap":
                inst = build_onemax(params["n"], params["k"], params["d"])
            else:
                inst = build_binval(params["n"], params["k"], params["d"])
    states = drift.parse_states_spec(req.states, n)
    c_value = float(Fraction(req.c)) if isinstance(req.c, str) else float(req.c)
    report = drift.check_bound(
        inst, dist, states, req.kind, c_value, req.samples, master_seed=req.seed
    )
    rows = [
        schemas.DriftRow(
            state=row.state.to01(),
            ones=row.state.ones,
            distance=format_value(row.distance),
            drift=row.drift,
            stderr=row.stderr,
            required=row.required,
            margin=row.margin,
            flagged=row.flagged,
        )
        for row in report.rows
    ]
    return schemas.DriftResponse(
        family=req.family,
        kind=report.kind,
        c=report.c,
        all_pass=report.all_pass,
        v_min=None if report.v_min is None else format_value(report.v_min),
        implied_evaluations_bound=report.implied_evaluations_bound,
        rows=rows,
        csv=report.to_csv(),
    )


def verify_handler(req: schemas.VerifyRequest, echo=None) -> schemas.VerifyResponse:
    profile = "quick" if req.quick else "full"
    results = acceptance.run_criteria(numbers=req.criteria, profile=profile, echo=echo)
    return schemas.VerifyResponse(
        passed=all(r.passed for r in results),
        profile=profile,
        results=[
            schemas.CriterionModel(
                number=r.number,
                name=r.name,
                passed=r.passed,
                detail=r.detail,
                seconds=r.seconds,
            )
            for r in results
        ],
    )
