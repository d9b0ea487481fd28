"""Command-line entry point.

Subcommands wire scenarios to simulation, dataset generation, optimization,
training, prediction, and evaluation. Reports are machine-readable JSON on
stdout. Exit codes: 0 success, 2 configuration/usage error, 3 data error,
4 no feasible configuration.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import datasetgen, evaluation
from .cost import CostWeights, build_report
from .engine import AzConfig, run_interval, write_trace
from .errors import FcazError, InfeasibleError, ValidationError
from .features import (
    export_dataset,
    features_from_trace,
    import_dataset,
    sidecar_path,
)
from .ml import (
    MODEL_KINDS,
    load_model,
    save_model,
)
from .mobility import spawn_trips
from .optimizer import brute_force, greedy, trivial_bounds
from .scenario import load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_INFEASIBLE = 4


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def _load(args):
    scenario, net = load_scenario(args.scenario)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["rng_seed"] = args.seed
    if getattr(args, "s_des", None) is not None:
        overrides["s_des"] = args.s_des
    if getattr(args, "k_weight", None) is not None:
        overrides["k_weight"] = args.k_weight
    if getattr(args, "interval", None) is not None:
        overrides["interval"] = args.interval
    if overrides:
        scenario = scenario.replace(**overrides)
    return scenario, net


def cmd_simulate(args) -> int:
    scenario, net = _load(args)
    try:
        az = AzConfig.from_string(args.az)
    except ValidationError as exc:
        raise ValidationError(f"bad az bit-string: {exc}") from exc
    if len(az) != net.n:
        raise ValidationError(
            f"az has {len(az)} bits but the network has {net.n} links"
        )
    schedule = spawn_trips(net, scenario.arrival_rate, scenario.interval, scenario.rng_seed)
    trace = run_interval(net, az, schedule, scenario)
    p_mob, p_com = features_from_trace(trace)
    from .features import combine

    weights = CostWeights(k=scenario.k_weight, s_des=scenario.s_des)
    report = build_report(az, combine(p_mob, p_com), net.zoi, weights)
    if args.trace_out:
        write_trace(trace, args.trace_out)
    _emit({"az": az.to_string(), "report": report.to_dict()})
    return EXIT_OK


def cmd_gen_dataset(args) -> int:
    scenario, net = _load(args)
    triples, meta = datasetgen.generate_dataset(
        net,
        scenario,
        n_strategies=args.strategies,
        fraction_range=(args.fraction_min, args.fraction_max),
        label_policy=args.label_policy,
        max_n_brute=args.max_n,
    )
    export_dataset(triples, args.out, meta)
    _emit(
        {
            "out": args.out,
            "sidecar": sidecar_path(args.out),
            "n_triples": len(triples),
            "n_links": net.n,
            "label_policy": meta.label_policy,
        }
    )
    return EXIT_OK


def cmd_optimize(args) -> int:
    scenario, net = _load(args)
    weights = CostWeights(k=scenario.k_weight, s_des=scenario.s_des)
    schedules = [
        spawn_trips(net, scenario.arrival_rate, scenario.interval, scenario.rng_seed)
    ]
    if args.replications > 1:
        seeds = [
            int(np.random.SeedSequence((scenario.rng_seed, r)).generate_state(1)[0])
            for r in range(args.replications)
        ]
        schedules = [
            spawn_trips(net, scenario.arrival_rate, scenario.interval, s) for s in seeds
        ]
    sched_arg = schedules if len(schedules) > 1 else schedules[0]
    if args.method == "brute":
        result = brute_force(net, sched_arg, scenario, weights,
                             rng_seed=scenario.rng_seed, max_n=args.max_n)
    else:
        result = greedy(net, sched_arg, scenario, weights, rng_seed=scenario.rng_seed)
    if result is None:
        raise InfeasibleError(
            "no feasible configuration: even all-ON misses the availability target"
        )
    a_all, a_zoi = trivial_bounds(net)
    _emit(
        {
            "method": result.method,
            "az": result.config.to_string(),
            "n_enabled": result.config.count,
            "n_evaluated": result.n_evaluated,
            "report": result.report.to_dict(),
            "bounds": {"all_on": a_all.to_string(), "zoi_only": a_zoi.to_string()},
        }
    )
    return EXIT_OK


def _fit_model(args, x, y):
    kind = args.model
    if kind == "knn":
        est = MODEL_KINDS["knn"](n_neighbors=args.k)
    elif kind == "tree":
        est = MODEL_KINDS["tree"](random_state=args.seed or 0)
    else:
        est = MODEL_KINDS["forest"](
            n_estimators=args.trees, random_state=args.seed or 0
        )
    return est.fit(x, y)


def cmd_train(args) -> int:
    triples, meta = import_dataset(args.dataset)
    if meta is None:
        raise ValidationError("dataset sidecar metadata is required for training")
    scenario_zoi = meta.scenario.get("network", {}).get("grid", {}).get("zoi")
    zoi = args.zoi if args.zoi else scenario_zoi
    if not zoi:
        raise ValidationError("no zoi: pass --zoi or use a dataset with one recorded")
    s_des = args.s_des if args.s_des is not None else meta.s_des
    examples = evaluation.preprocess(triples, zoi, s_des)
    x, y = evaluation.to_matrices(examples)
    model = _fit_model(args, x, y)
    doc = {"model": args.model, "n_examples": len(x), "out": args.out}
    if args.folds:
        cv = evaluation.cross_validate(x, y, model, folds=args.folds,
                                       rng_seed=args.seed or 0)
        doc["cross_validation"] = cv.to_dict()
    save_model(model, args.out)
    _emit(doc)
    return EXIT_OK


def cmd_predict(args) -> int:
    triples, meta = import_dataset(args.dataset)
    model = load_model(args.model_file)
    x = np.array([t.p_mob.matrix().ravel() for t in triples])
    probs = model.predict_proba(x)
    bits = model.predict(x)
    evaluation.write_predictions(args.out, probs, bits)
    _emit({"out": args.out, "n_predictions": len(bits)})
    return EXIT_OK


def cmd_evaluate(args) -> int:
    triples, meta = import_dataset(args.dataset)
    if meta is None:
        raise ValidationError("dataset sidecar metadata is required for evaluation")
    from .scenario import Scenario, build_network

    scenario = Scenario.from_dict(meta.scenario)
    net = build_network(scenario)
    if args.s_des is not None:
        scenario = scenario.replace(s_des=args.s_des)
    if args.k_weight is not None:
        scenario = scenario.replace(k_weight=args.k_weight)
    weights = CostWeights(k=scenario.k_weight, s_des=scenario.s_des)

    examples = evaluation.preprocess(triples, sorted(net.zoi), scenario.s_des)
    x, y = evaluation.to_matrices(examples)

    if args.predictions:
        ids, probs, bits = evaluation.read_predictions(args.predictions, net.n)
        if len(bits) != len(triples):
            raise ValidationError(
                f"prediction file has {len(bits)} rows, dataset has {len(triples)}"
            )
        raw = bits
    else:
        model = load_model(args.model_file)
        raw = model.predict(x)

    report = evaluation.evaluate_rejection(
        raw, meta.triples, net, scenario, weights, truth=y
    )
    doc = {"report": report.to_dict()}
    if args.online:
        from .features import DatasetMeta
        from .scenario import scenario_hash

        growth = evaluation.collect_online_triples(raw, meta.triples, net, scenario)
        records = []
        existing = []
        if os.path.exists(args.online):
            existing, old_meta = import_dataset(args.online)
            if old_meta is not None:
                records = list(old_meta.triples)
        for case, triple in zip(meta.triples, growth):
            records.append(
                {
                    "id": len(records),
                    "interval": case["interval"],
                    "seed": case["seed"],
                    "predicted": triple.label.to_string(),
                }
            )
        growth_meta = DatasetMeta(
            n_links=net.n,
            interval=scenario.interval,
            scenario_hash=scenario_hash(scenario),
            s_des=scenario.s_des,
            dt=scenario.dt,
            label_policy="online",
            scenario=scenario.to_dict(),
            triples=records,
        )
        export_dataset(existing + growth, args.online, growth_meta)
        doc["online_growth"] = {"path": args.online, "added": len(growth),
                                "total": len(existing) + len(growth)}
    if args.learning_curve:
        if args.predictions:
            raise ValidationError("--learning-curve requires --model-file")
        sizes = [int(s) for s in args.sizes.split(",")] if args.sizes else [
            100, 300, 1000, 3000, 10000,
        ]
        rows = evaluation.learning_curve(
            x, y, load_model(args.model_file), sizes, rng_seed=scenario.rng_seed
        )
        with open(args.learning_curve, "w") as fh:
            fh.write("train_size,fscore\n")
            for size, score in rows:
                fh.write(f"{size},{format(score, '.9g')}\n")
        doc["learning_curve"] = args.learning_curve
    _emit(doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="fcaz",
        description="Floating-content anchor-zone simulation and dimensioning",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scenario=True):
        if scenario:
            sp.add_argument("--scenario", required=True, help="scenario JSON file")
        sp.add_argument("--seed", type=int, default=None, help="override rng seed")
        sp.add_argument("--s-des", dest="s_des", type=float, default=None,
                        help="override availability target")
        sp.add_argument("--k-weight", dest="k_weight", type=float, default=None,
                        help="override application-cost weight")
        sp.add_argument("--interval", type=float, default=None,
                        help="override interval length (seconds)")

    sp = sub.add_parser("simulate", help="run one interval under one configuration")
    common(sp)
    sp.add_argument("--az", required=True, help="bit-string, one bit per link")
    sp.add_argument("--trace-out", default=None, help="optional trace dump path")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("gen-dataset", help="sample strategies and export triples")
    common(sp)
    sp.add_argument("--strategies", type=int, required=True)
    sp.add_argument("--fraction-min", type=float, default=0.05)
    sp.add_argument("--fraction-max", type=float, default=1.0)
    sp.add_argument("--label-policy", choices=datasetgen.LABEL_POLICIES,
                    default="applied")
    sp.add_argument("--max-n", type=int, default=20,
                    help="largest link count for exhaustive labeling")
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen_dataset)

    sp = sub.add_parser("optimize", help="search for the cheapest feasible zone")
    common(sp)
    sp.add_argument("--method", choices=["brute", "greedy"], default="greedy")
    sp.add_argument("--max-n", type=int, default=20,
                    help="brute-force refusal cap on the link count")
    sp.add_argument("--replications", type=int, default=1,
                    help="average availability over this many seeds")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("train", help="train a baseline model on a dataset")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--model", choices=sorted(MODEL_KINDS), required=True)
    sp.add_argument("--k", type=int, default=10, help="neighbors for knn")
    sp.add_argument("--trees", type=int, default=100, help="trees for forest")
    sp.add_argument("--folds", type=int, default=0,
                    help="also report k-fold cross-validation")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--s-des", dest="s_des", type=float, default=None)
    sp.add_argument("--zoi", type=int, nargs="*", default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("predict", help="write a prediction exchange file")
    sp.add_argument("--dataset", required=True)
    sp.add_argument("--model-file", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_predict)

    sp = sub.add_parser("evaluate", help="re-simulate predictions, report metrics")
    sp.add_argument("--dataset", required=True)
    group = sp.add_mutually_exclusive_group(required=True)
    group.add_argument("--model-file", help="trained model (.npz)")
    group.add_argument("--predictions", help="prediction exchange CSV")
    sp.add_argument("--s-des", dest="s_des", type=float, default=None)
    sp.add_argument("--k-weight", dest="k_weight", type=float, default=None)
    sp.add_argument("--learning-curve", default=None,
                    help="write F-score vs training size CSV here")
    sp.add_argument("--sizes", default=None, help="comma-separated curve sizes")
    sp.add_argument("--online", default=None,
                    help="append re-simulated prediction triples to this "
                         "growth dataset (retraining stays batched)")
    sp.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FcazError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
