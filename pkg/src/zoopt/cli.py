"""Command-line harness.

Subcommands: ``run <config>``, ``sweep <config>``, ``prop1``,
``validate <suite>``, ``attack ...``.  Configs are flat ``key = value`` text
with dotted section keys; unknown keys are hard errors.  Exit codes: 0 pass,
1 property/check failure, 2 configuration error, 3 numeric abort.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericError
from .geometry import vi_violation
from .metrics import first_success, serialize_csv, write_envelope
from .optimizers import default_config, run_optimizer
from .problems import (load_victim, make_attack_problem, make_counterexample_lp,
                       make_logistic, make_nonconvex, make_quadratic)
from .validate import SUITES, run_suites

_BOOL = {"true": True, "false": False}

SCHEMA = {
    "problem.kind": str,
    "problem.d": int,
    "problem.condition": float,
    "problem.seed": int,
    "problem.samples": int,       # quadratic: 0 means deterministic
    "problem.noise": float,
    "problem.n": int,             # logistic sample count
    "problem.radius": float,
    "problem.eps": float,
    "problem.omega": float,
    "problem.box": float,         # nonconvex box halfwidth, 0 means unconstrained
    "problem.mode": str,          # attack formulation
    "problem.m": int,
    "problem.image": int,
    "problem.lambda": float,
    "problem.kappa": float,
    "optimizer.algorithm": str,
    "optimizer.beta1": float,
    "optimizer.beta2": float,
    "optimizer.alpha": float,
    "optimizer.alpha_schedule": str,
    "optimizer.mu": float,
    "optimizer.mu_schedule": str,
    "optimizer.v0": float,
    "optimizer.vhat0": float,
    "optimizer.use_vhat_max": bool,
    "optimizer.b": int,
    "optimizer.q": int,
    "optimizer.kind": str,
    "optimizer.directions": str,
    "optimizer.beta1_decay": bool,
    "optimizer.euclidean_projection_override": bool,
    "run.query_budget": int,
    "run.max_iters": int,         # 0 means unlimited (budget-bound)
    "run.repeat": int,
    "run.base_seed": int,
    "run.outdir": str,
    "run.stride": int,            # 0 means auto
    "run.record_measure": str,
    "run.workers": int,
    "run.tag": str,
    "sweep.param": str,
    "sweep.grid": str,
    "sweep.param2": str,
    "sweep.grid2": str,
}

DEFAULTS = {
    "problem.d": 20, "problem.condition": 1.0, "problem.seed": 0,
    "problem.samples": 0, "problem.noise": 1.0, "problem.n": 100,
    "problem.radius": 5.0, "problem.eps": 0.1, "problem.omega": 3.0,
    "problem.box": 0.0, "problem.mode": "constrained", "problem.m": 1,
    "problem.image": 0, "problem.lambda": 10.0, "problem.kappa": 0.0,
    "run.max_iters": 0, "run.repeat": 1, "run.base_seed": 0,
    "run.stride": 0, "run.record_measure": "auto", "run.workers": 1,
    "run.tag": "run",
    "sweep.param": "", "sweep.grid": "", "sweep.param2": "", "sweep.grid2": "",
}


def _coerce(key, raw):
    typ = SCHEMA[key]
    try:
        if typ is bool:
            return _BOOL[raw.lower()]
        return typ(raw)
    except (KeyError, ValueError):
        raise ConfigError(f"{key}: cannot parse {raw!r} as {typ.__name__}")


def parse_config_file(path):
    """Flat `key = value` config; '#' starts a comment; unknown keys are errors."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown config key: {key}")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate config key: {key}")
        values[key] = _coerce(key, raw)
    return values


def _require(values, key):
    if key not in values:
        raise ConfigError(f"missing required config key: {key}")
    return values[key]


def build_problem(values):
    kind = _require(values, "problem.kind")
    get = lambda k: values.get(k, DEFAULTS[k])
    if kind == "quadratic":
        samples = get("problem.samples")
        return make_quadratic(get("problem.d"), get("problem.condition"),
                              get("problem.seed"),
                              n_samples=samples if samples > 0 else None,
                              noise=get("problem.noise"))
    if kind == "logistic":
        return make_logistic(get("problem.n"), get("problem.d"),
                             get("problem.seed"), get("problem.radius"))
    if kind == "nonconvex":
        box = get("problem.box")
        return make_nonconvex(get("problem.d"), get("problem.seed"),
                              get("problem.eps"), get("problem.omega"),
                              box_halfwidth=box if box > 0 else None)
    if kind == "counterexample":
        return make_counterexample_lp()
    if kind == "attack":
        model, inputs, labels = load_victim()
        first, m = get("problem.image"), get("problem.m")
        if not 0 <= first < len(inputs) or first + m > len(inputs):
            raise ConfigError("problem.image/problem.m: pinned input range "
                              f"exceeds the {len(inputs)} available inputs")
        return make_attack_problem(model, inputs[first:first + m],
                                   labels[first:first + m],
                                   lam=get("problem.lambda"),
                                   kappa=get("problem.kappa"),
                                   mode=get("problem.mode"))
    raise ConfigError(f"problem.kind: unknown problem {kind!r}")


def build_optimizer_config(values, seed):
    algorithm = values.get("optimizer.algorithm", "zo-adamm")
    overrides = {"seed": seed}
    mapping = {
        "optimizer.beta1": "beta1", "optimizer.beta2": "beta2",
        "optimizer.alpha": "alpha", "optimizer.alpha_schedule": "alpha_schedule",
        "optimizer.mu": "mu", "optimizer.mu_schedule": "mu_schedule",
        "optimizer.v0": "v0", "optimizer.vhat0": "vhat0",
        "optimizer.use_vhat_max": "use_vhat_max", "optimizer.b": "b",
        "optimizer.q": "q", "optimizer.kind": "kind",
        "optimizer.directions": "directions",
        "optimizer.beta1_decay": "beta1_decay",
        "optimizer.euclidean_projection_override": "euclidean_projection_override",
    }
    for key, attr in mapping.items():
        if key in values:
            overrides[attr] = values[key]
    return default_config(algorithm, **overrides)


def worker_count(values):
    env = os.environ.get("ZOOPT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"ZOOPT_THREADS: cannot parse {env!r} as int")
    return max(1, values.get("run.workers", DEFAULTS["run.workers"]))


def _execute_one(values, seed, outdir, tag):
    problem = build_problem(values)
    cfg = build_optimizer_config(values, seed)
    budget = _require(values, "run.query_budget")
    max_iters = values.get("run.max_iters", 0) or None
    stride = values.get("run.stride", 0) or None
    result = run_optimizer(problem, cfg, budget, max_iters=max_iters,
                           stride=stride,
                           record_measure=values.get("run.record_measure", "auto"))
    # echo the file config alongside the resolved optimizer so the envelope
    # suffices for exact re-execution
    result.config = {"file": {k: values[k] for k in sorted(values)},
                     "optimizer": result.config}
    csv_path = outdir / f"{tag}_seed{seed}.csv"
    serialize_csv(result.trace, csv_path)
    write_envelope(result, csv_path.name, outdir / f"{tag}_seed{seed}.json")
    return result


def cmd_run(config_path):
    values = parse_config_file(config_path)
    outdir = Path(_require(values, "run.outdir"))
    outdir.mkdir(parents=True, exist_ok=True)
    base = values.get("run.base_seed", 0)
    tag = values.get("run.tag", "run")
    exit_code = 0
    for r in range(values.get("run.repeat", 1)):
        result = _execute_one(values, base + r, outdir, tag)
        status = "aborted" if result.trace.aborted else "ok"
        print(f"{tag} seed={base + r}: {status}, "
              f"final_loss={result.trace.records[-1].loss:.6g}, "
              f"queries={result.trace.total_queries}, "
              f"seconds={result.seconds:.3f}")
        if result.trace.aborted:
            print(f"  numeric abort: {result.trace.aborted}", file=sys.stderr)
            exit_code = 3
    return exit_code


def cmd_sweep(config_path):
    values = parse_config_file(config_path)
    outdir = Path(_require(values, "run.outdir"))
    outdir.mkdir(parents=True, exist_ok=True)
    base = values.get("run.base_seed", 0)
    tag = values.get("run.tag", "run")

    def axis(param_key, grid_key):
        param = values.get(param_key, "")
        if not param:
            return [None]
        if param not in SCHEMA:
            raise ConfigError(f"{param_key}: unknown swept key {param!r}")
        grid = [v.strip() for v in values.get(grid_key, "").split(",") if v.strip()]
        if not grid:
            raise ConfigError(f"{grid_key}: empty grid for swept key {param!r}")
        return [(param, _coerce(param, v), v) for v in grid]

    jobs = []
    for p1 in axis("sweep.param", "sweep.grid"):
        for p2 in axis("sweep.param2", "sweep.grid2"):
            combo = dict(values)
            label = tag
            for p in (p1, p2):
                if p is not None:
                    key, val, raw = p
                    combo[key] = val
                    label += f"_{key.split('.')[-1]}{raw}"
            for r in range(values.get("run.repeat", 1)):
                jobs.append((combo, base + r, label))

    results = [None] * len(jobs)
    with ThreadPoolExecutor(max_workers=worker_count(values)) as pool:
        futures = [pool.submit(_execute_one, combo, seed, outdir, label)
                   for combo, seed, label in jobs]
        for i, fut in enumerate(futures):
            results[i] = fut.result()

    summary = []
    for (combo, seed, label), res in zip(jobs, results):
        summary.append({"label": label, "seed": seed,
                        "final_loss": res.trace.records[-1].loss,
                        "total_queries": res.trace.total_queries,
                        "aborted": res.trace.aborted})
    with open(outdir / f"{tag}_sweep_summary.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"sweep complete: {len(jobs)} runs -> {outdir}")
    return 3 if any(r.trace.aborted for r in results) else 0


def cmd_prop1():
    """Reproduce the projection counterexample: the Euclidean-projection variant
    pins at [0.5, 0.5] while the weighted variant makes strict progress."""
    problem = make_counterexample_lp()
    shared = dict(beta1=0.0, beta2=0.0, use_vhat_max=False, alpha=0.1,
                  alpha_schedule="inverse-sqrt", kind="analytic", seed=0)
    euclid = default_config("zo-adamm", euclidean_projection_override=True,
                            **shared)
    weighted = default_config("zo-adamm", **shared)
    res_e = run_optimizer(problem, euclid, 0, max_iters=1000,
                          keep_iterates=True, record_measure="off")
    res_m = run_optimizer(problem, weighted, 0, max_iters=1000,
                          keep_iterates=True, record_measure="off")

    fixed = all(np.array_equal(xt, problem.x0) for xt in res_e.trace.iterates)
    witness = vi_violation(problem.metadata.gradient(problem.x0), problem.x0,
                           np.array([0.6, 0.4]))
    witness_ok = abs(witness - (-0.1)) <= 1e-12

    losses = [problem.objective.peek(xt, 0) for xt in res_m.trace.iterates]
    x1_path = [float(xt[0]) for xt in res_m.trace.iterates]
    feasible = all(problem.constraint.member(xt, tol=1e-12)
                   for xt in res_m.trace.iterates)
    decreasing = all(b < a for a, b in zip(losses, losses[1:]))
    increasing = all(b > a for a, b in zip(x1_path, x1_path[1:]))
    weighted_ok = feasible and decreasing and increasing

    print(f"euclidean variant:  final iterate = {res_e.final_x}")
    print(f"weighted variant:   final iterate = {res_m.final_x}")
    print(f"VI witness <grad, [0.6,0.4]-[0.5,0.5]> = {witness!r}")
    print(f"{'PASS' if fixed and witness_ok else 'FAIL'}  euclidean projection "
          f"fixed at [0.5, 0.5] for 1000 iterations while the VI fails")
    print(f"{'PASS' if weighted_ok else 'FAIL'}  weighted projection leaves the "
          f"fixed point, stays feasible, and strictly decreases the objective")
    return 0 if (fixed and witness_ok and weighted_ok) else 1


def cmd_validate(suite, seed=0):
    names = list(SUITES) if suite == "all" else [suite]
    for name in names:
        if name not in SUITES:
            print(f"unknown validation suite: {name} "
                  f"(choose from {', '.join(SUITES)}, all)", file=sys.stderr)
            return 2
    results = run_suites(names, seed=seed)
    for r in results:
        print(r.line())
    failures = [r for r in results if not r.passed]
    if failures:
        print(f"first failing property: {failures[0].name}", file=sys.stderr)
        return 1
    return 0


# per-method step sizes for the desk-scale attack problems, chosen by a small
# grid search for the best converged objective with a successful attack
ATTACK_ALPHA = {
    "zo-adamm": 0.025,
    "zo-psgd": 0.05,
    "zo-smd": 0.02,
    "zo-nes": 0.02,
    "zo-sgd": 0.05,
    "zo-signsgd": 0.05,
    "zo-scd": 0.3,
}
_CONSTRAINED_OPTS = ("zo-adamm", "zo-psgd", "zo-smd", "zo-nes")


def _attack_formulation(opt, requested):
    if requested != "auto":
        return requested
    return "constrained" if opt in _CONSTRAINED_OPTS else "unconstrained"


def _attack_config(opt, seed, alpha=None):
    return default_config(opt, alpha=alpha if alpha is not None
                          else ATTACK_ALPHA[opt], seed=seed, b=1, q=10)


def run_attack_suite(mode, m, opts, budget, seed, outdir, formulation="auto",
                     repeat=1, workers=1, lam=10.0, kappa=0.0):
    """Run the pinned-victim attack protocol; returns the summary dict."""
    model, inputs, labels = load_victim()
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    if mode not in ("per-image", "universal"):
        raise ConfigError(f"attack mode must be per-image or universal, got {mode}")
    if not 1 <= m <= len(inputs):
        raise ConfigError(f"--m must be in [1, {len(inputs)}]")
    for opt in opts:
        if opt not in ATTACK_ALPHA:
            raise ConfigError(f"--opt: unknown optimizer {opt!r}")

    jobs = []
    for opt in opts:
        form = _attack_formulation(opt, formulation)
        for r in range(repeat):
            run_seed = seed + r
            if mode == "per-image":
                for i in range(m):
                    problem = make_attack_problem(model, [inputs[i]], [labels[i]],
                                                  lam=lam, kappa=kappa, mode=form)
                    name = f"{opt}_img{i:02d}_seed{run_seed}"
                    jobs.append((opt, run_seed, i, problem, name))
            else:
                problem = make_attack_problem(model, inputs[:m], labels[:m],
                                              lam=lam, kappa=kappa, mode=form)
                name = f"{opt}_universal_seed{run_seed}"
                jobs.append((opt, run_seed, None, problem, name))

    def execute(job):
        opt, run_seed, img, problem, name = job
        cfg = _attack_config(opt, run_seed)
        res = run_optimizer(problem, cfg, budget)
        csv_path = outdir / f"{name}.csv"
        serialize_csv(res.trace, csv_path)
        write_envelope(res, csv_path.name, outdir / f"{name}.json")
        return res

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(execute, jobs))

    summary = {"mode": mode, "m": m, "budget": budget, "seeds":
               list(range(seed, seed + repeat)), "optimizers": {}}
    for opt in opts:
        rows = []
        for job, res in zip(jobs, results):
            if job[0] != opt:
                continue
            fs = first_success(res.trace.records)
            final = res.trace.records[-1]
            rows.append({
                "seed": job[1], "image": job[2],
                "success": bool(final.success),
                "ever_success": fs is not None,
                "first_success_queries": None if fs is None else fs[1],
                "final_distortion": final.distortion,
                "final_loss": final.loss,
                "images_fooled": problem_success_count(job[3], res.final_x),
            })
        succ = [r for r in rows if r["ever_success"]]
        summary["optimizers"][opt] = {
            "runs": rows,
            "success_rate": len(succ) / len(rows) if rows else 0.0,
            "median_first_success_queries":
                _median([r["first_success_queries"] for r in succ]),
            "median_final_distortion_successful":
                _median([r["final_distortion"] for r in succ]),
        }
    return summary


def problem_success_count(problem, x):
    return problem.success_count_fn(x) if problem.success_count_fn else 0


def _median(vals):
    vals = sorted(v for v in vals if v is not None)
    if not vals:
        return None
    mid = len(vals) // 2
    return vals[mid] if len(vals) % 2 else 0.5 * (vals[mid - 1] + vals[mid])


def _attack_text_table(summary):
    lines = [f"{'optimizer':<12} {'succ rate':>9} {'med 1st-succ q':>15} "
             f"{'med final dist':>15}"]
    for opt, stats in summary["optimizers"].items():
        q = stats["median_first_success_queries"]
        d = stats["median_final_distortion_successful"]
        lines.append(f"{opt:<12} {stats['success_rate']:>9.2f} "
                     f"{'-' if q is None else q:>15} "
                     f"{'-' if d is None else format(d, '.4f'):>15}")
    return "\n".join(lines) + "\n"


def cmd_attack(args):
    opts = [o.strip() for o in args.opt.split(",") if o.strip()]
    summary = run_attack_suite(args.mode, args.m, opts, args.budget, args.seed,
                               args.out, formulation=args.formulation,
                               repeat=args.repeat,
                               workers=worker_count({}))
    outdir = Path(args.out)
    with open(outdir / "attack_summary.json", "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(summary, fh, indent=1, sort_keys=True)
        fh.write("\n")
    table = _attack_text_table(summary)
    (outdir / "attack_summary.txt").write_text(table, encoding="utf-8")
    print(table, end="")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="zoopt",
                                     description="zeroth-order optimization "
                                                 "benchmark harness")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="execute runs from a config file")
    p_run.add_argument("config")
    p_sweep = sub.add_parser("sweep", help="execute a parameter sweep")
    p_sweep.add_argument("config")
    sub.add_parser("prop1", help="reproduce the projection counterexample")
    p_val = sub.add_parser("validate", help="run property suites")
    p_val.add_argument("suite")
    p_val.add_argument("--seed", type=int, default=0)
    p_att = sub.add_parser("attack", help="run the pinned-victim attack protocol")
    p_att.add_argument("--mode", choices=("per-image", "universal"),
                       default="per-image")
    p_att.add_argument("--m", type=int, default=10)
    p_att.add_argument("--opt", default="zo-adamm,zo-psgd")
    p_att.add_argument("--budget", type=int, default=11000)
    p_att.add_argument("--seed", type=int, default=0)
    p_att.add_argument("--out", required=True)
    p_att.add_argument("--formulation", choices=("auto", "constrained",
                                                 "unconstrained"), default="auto")
    p_att.add_argument("--repeat", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        if args.command == "run":
            return cmd_run(args.config)
        if args.command == "sweep":
            return cmd_sweep(args.config)
        if args.command == "prop1":
            return cmd_prop1()
        if args.command == "validate":
            return cmd_validate(args.suite, seed=args.seed)
        if args.command == "attack":
            return cmd_attack(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except NumericError as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return 3
    raise AssertionError("unreachable")


def console_main():
    sys.exit(main())


if __name__ == "__main__":
    console_main()
