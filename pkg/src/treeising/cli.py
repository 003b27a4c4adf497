"""Command-line entry point.

Exit codes: 0 on success, 1 when a checked property fails, 2 on usage or
input errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys

from . import harness
from .estimation import ThresholdSpec, hoeffding_epsilon
from .evaluation import conditional_prediction_error, kl_to_projection, sstv2, sstv_k, symmetrized_kl
from .learners import fit
from .model import path_between, random_tree_model, read_model, write_model
from .sampling import SeedSpec, make_rng, read_samples, sample, write_samples
from .verification import (
    LemmaCounterexample,
    cascade_event_bound,
    check_events,
    corr_event_bound,
    product_concentration_check,
    two_trees_sweep,
    zy_statistics,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows, header=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _need_out(args):
    if not args.out:
        raise UsageError(f"{args.command} needs --out")
    return args.out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_gen_model(args) -> int:
    out = _need_out(args)
    params = {"p": args.p, "alpha": args.alpha, "beta": args.beta, "eta": args.eta,
              "seed": args.seed, "weak": args.weak, "strong": args.strong}
    if args.thetas:
        params["thetas"] = _floats(args.thetas)
    if args.mus:
        params["thetas"] = [math.atanh(m) for m in _floats(args.mus)]
    params = {k: v for k, v in params.items() if v is not None}
    try:
        models = harness.gen_model(args.kind, **params)
    except KeyError as exc:
        raise UsageError(f"{args.kind} needs --{exc.args[0]}") from None
    paths = harness.write_models(models, out, f"generated kind={args.kind} seed={args.seed}")
    for path in paths:
        print(path)
    return EXIT_OK


def cmd_sample(args) -> int:
    out = _need_out(args)
    m = read_model(args.model)
    s = sample(m, args.n, SeedSpec(args.seed, args.trial))
    write_samples(s, out, binary=args.binary)
    return EXIT_OK


def cmd_learn(args) -> int:
    out = _need_out(args)
    s = read_samples(args.samples)
    th = None
    if args.method == "truncate":
        if args.beta is None and args.tau is None:
            raise UsageError("truncate needs --beta or --tau")
        eps = args.epsilon if args.epsilon is not None else hoeffding_epsilon(s.n, max(s.p, 2), args.delta)
        beta = args.beta if args.beta is not None else 0.0
        th = ThresholdSpec.from_problem(s.n, max(s.p, 2), args.delta, beta, epsilon=eps, tau=args.tau)
    learned = fit(s, args.method, th, delta=args.delta, beta=args.beta)
    comments = [f"learned method={learned.method} n={s.n} seed={s.seed}"]
    if th is not None:
        comments.append(f"epsilon={th.epsilon!r} tau={th.tau!r}")
    write_model(learned.model, out, comments)
    return EXIT_OK


def cmd_eval(args) -> int:
    a, b = read_model(args.model_a), read_model(args.model_b)
    arg = ""
    if args.loss == "sstv2":
        r = sstv2(a, b)
        value, arg = r.value, r.argmax_subset
    elif args.loss == "sstv-k":
        if args.k is None:
            raise UsageError("sstv-k needs --k")
        r = sstv_k(a, b, args.k)
        value, arg = r.value, r.argmax_subset
    elif args.loss == "kl-proj":
        value = kl_to_projection(a, b.structure)
    elif args.loss == "symkl":
        value = symmetrized_kl(a, b)
    else:
        if args.target is None or args.given is None:
            raise UsageError("cond needs --target and --given")
        given = _ints(args.given)
        value = conditional_prediction_error(a, b, args.target, given)
        arg = (args.target, *given)
    arg_text = " ".join(str(v) for v in arg) if arg else ""
    _emit(_csv([[args.loss, repr(float(value)), arg_text]], ["loss", "value", "argmax_subset"]), args.out)
    return EXIT_OK


def _sweep_model(args):
    if args.model:
        return read_model(args.model), args.model
    if not args.kind:
        raise UsageError("sweep needs --model or --kind")
    params = {"p": args.p, "alpha": args.alpha, "beta": args.beta, "eta": args.eta,
              "seed": args.seed, "weak": args.weak, "strong": args.strong}
    params = {k: v for k, v in params.items() if v is not None}
    models = harness.gen_model(args.kind, **params)
    return models[args.member], f"{args.kind}[{args.member}]"


def cmd_sweep(args) -> int:
    out = _need_out(args)
    m, name = _sweep_model(args)
    if args.n_grid:
        grid = _ints(args.n_grid)
    else:
        if args.alpha is None or args.beta is None:
            raise UsageError("without --n-grid, --alpha and --beta set the sufficient sample size")
        grid = [harness.sufficient_samples(m.p, args.alpha, args.beta, args.delta, args.C)]
    methods = tuple("chow_liu" if v == "chow-liu" else "truncation" for v in args.methods.split(","))
    cfg = harness.SweepConfig(
        model=m, n_grid=tuple(grid), trials=args.trials, delta=args.delta,
        beta=args.coupling_bound, gamma=args.gamma, methods=methods,
        master_seed=args.seed, workers=args.workers, record_timing=args.timing, model_name=name,
    )
    rows = harness.sweep(cfg)
    harness.write_sweep_csv(cfg, rows, out)
    for (method, n), st in sorted(harness.summarize(rows).items(), key=lambda kv: (kv[0][1], kv[0][0])):
        print(f"{method} n={n} recovery={st['recovery_rate']:.3f} "
              f"mean_sstv2={st['mean_sstv2']:.4f} sstv2<=0.1={st['sstv2_le_0.1']:.3f}")
    return EXIT_OK


def _verify_two_trees(args):
    rows, ok = [], True
    sizes = [args.p] if args.p else [3, 4, 5, 6]
    for p in sizes:
        try:
            res = two_trees_sweep(p, workers=args.workers, allow_p7=args.allow_p7)
        except LemmaCounterexample as exc:
            rows.append(["two-trees", f"p={p}", "fail", str(exc)])
            ok = False
            continue
        for k, (t1, t2, pair) in enumerate(res.counterexamples):
            rows.append(["two-trees", f"p={p}:cx{k}:{t1}|{t2}|{pair}", "fail", -1])
        rows.append(["two-trees", f"p={p}", "pass" if res.passed else "fail", -len(res.counterexamples)])
        ok &= res.passed
    return rows, ok


def _random_model(args):
    rng = make_rng(SeedSpec(args.seed, 2**32 - 1))
    return random_tree_model(args.p or 6, args.alpha or 0.3, args.beta or 1.0, rng)


def _verify_events(args):
    m = _random_model(args)
    n = args.n or 500
    p = m.p
    eps = hoeffding_epsilon(n, p, args.delta)
    gamma = args.gamma or eps
    rows, ok = [], True
    hits = {"corr": 0, "cascade": 0}
    for t in range(args.trials):
        ev = check_events(m, sample(m, n, SeedSpec(args.seed, t)), eps, gamma, trial=t)
        hits["corr"] += ev.e_corr
        hits["cascade"] += ev.e_cascade
        implied = (not ev.zy_event or ev.missing_weak_ok) and ev.corr_close_ok is not False
        ok &= implied
        rows.append(["events", t, "pass" if implied else "fail", eps - ev.max_corr_dev])
    for name, bound in (("corr", corr_event_bound(p, n, eps)), ("cascade", cascade_event_bound(p, n, gamma))):
        freq = hits[name] / args.trials
        status = "pass" if freq >= bound else "fail"
        if bound <= 0:
            status = "vacuous"
        ok &= status != "fail"
        rows.append(["events", f"{name}-frequency", status, freq - bound])
    return rows, ok


def _verify_zy(args):
    m = _random_model(args)
    n = args.n or 2000
    eps = hoeffding_epsilon(n, m.p, args.delta)
    rows, held = [], 0
    for t in range(args.trials):
        s = sample(m, n, SeedSpec(args.seed, t))
        worst = 0.0
        for u in range(m.p):
            for ut in range(u + 1, m.p):
                for e in path_between(m.structure, u, ut):
                    st = zy_statistics(s, m, e, u, ut)
                    worst = max(worst, st.z_deviation / st.z_bound(eps), st.y_deviation / st.y_bound(eps))
        held += worst <= 1.0
        rows.append(["zy", t, "pass" if worst <= 1.0 else "fail", 1.0 - worst])
    target = 1.0 - args.delta / 2
    freq = held / args.trials
    rows.append(["zy", "frequency", "pass" if freq >= target else "fail", freq - target])
    return rows, freq >= target


def _verify_product(args):
    rows, ok = [], True
    n = args.n or 1000
    gamma = args.gamma or 0.5
    for d in range(1, (args.p or 4) + 1):
        for mu in (0.0, 0.5, 0.9):
            res = product_concentration_check(d, [mu] * d, n, gamma, args.trials, SeedSpec(args.seed, d))
            ok &= res.passed
            rows.append(["product", f"d={d}:mu={mu}", "pass" if res.passed else "fail", res.bound - res.rate])
    return rows, ok


_SUITES = {"two-trees": _verify_two_trees, "events": _verify_events, "zy": _verify_zy, "product": _verify_product}


def cmd_verify(args) -> int:
    rows, ok = _SUITES[args.suite](args)
    _emit(_csv(rows, ["suite", "instance", "status", "margin"]), args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_repro_chain(args) -> int:
    r = harness.repro_chain(args.epsilon)
    rows = [[k, repr(r.losses[k]), repr(r.closed_form[k]), repr(r.printed[k])] for k in ("T1", "T2", "T3")]
    _emit(_csv(rows, ["structure", "loss", "closed_form", "printed_2x"]), args.out)
    close = all(abs(r.losses[k] - r.closed_form[k]) <= 1e-12 for k in r.losses)
    ordered = r.losses["T1"] < r.losses["T3"] < r.losses["T2"]
    return EXIT_OK if close and (ordered or args.epsilon >= 0.5) else EXIT_FAIL


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (default 0)")
    common.add_argument("--workers", type=int, default=argparse.SUPPRESS, help="worker processes (default 1)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output path")

    parser = argparse.ArgumentParser(prog="treeising", description="Tree Ising structure learning lab.",
                                     parents=[common])
    sub = parser.add_subparsers(dest="command", required=True)

    def model_params(sp):
        sp.add_argument("--p", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--eta", type=float)
        sp.add_argument("--weak", type=float)
        sp.add_argument("--strong", type=float)

    sp = sub.add_parser("gen-model", parents=[common], help="write model file(s)")
    sp.add_argument("--kind", required=True,
                    choices=["random-tree", "chain", "star", "hard-family", "chain-family", "weak-chain"])
    model_params(sp)
    sp.add_argument("--thetas", help="comma-separated couplings (chain, star)")
    sp.add_argument("--mus", help="comma-separated edge correlations (chain, star)")
    sp.set_defaults(func=cmd_gen_model)

    sp = sub.add_parser("sample", parents=[common], help="draw samples from a model file")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--trial", type=int, default=0, help="trial index of the seed stream")
    sp.add_argument("--binary", action="store_true", help="compact 1-bit-per-spin format")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("learn", parents=[common], help="fit a model to a sample file")
    sp.add_argument("--method", choices=["chow-liu", "truncate"], default="chow-liu")
    sp.add_argument("--samples", required=True)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--tau", type=float)
    sp.add_argument("--epsilon", type=float)
    sp.set_defaults(func=cmd_learn)

    sp = sub.add_parser("eval", parents=[common], help="compare two model files")
    sp.add_argument("--loss", choices=["sstv2", "sstv-k", "kl-proj", "symkl", "cond"], required=True)
    sp.add_argument("--model-a", required=True)
    sp.add_argument("--model-b", required=True)
    sp.add_argument("--k", type=int)
    sp.add_argument("--target", type=int, help="predicted node (cond)")
    sp.add_argument("--given", help="comma-separated conditioning nodes (cond)")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("sweep", parents=[common], help="Monte-Carlo learning sweep to CSV")
    sp.add_argument("--model", help="model file")
    sp.add_argument("--kind", help="generator used when --model is absent")
    sp.add_argument("--member", type=int, default=0, help="member of a generated family")
    model_params(sp)
    sp.add_argument("--n-grid", help="comma-separated increasing sample sizes")
    sp.add_argument("--C", type=float, default=harness.DEFAULT_C,
                    help="constant of the sufficient sample size used without --n-grid")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--coupling-bound", type=float, help="beta used for tau (default max |theta|)")
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--methods", default="chow-liu", help="comma-separated: chow-liu,truncate")
    sp.add_argument("--timing", action="store_true", help="add a runtime_ms column")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", parents=[common], help="run a property check suite")
    sp.add_argument("--suite", choices=sorted(_SUITES), required=True)
    sp.add_argument("--p", type=int)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--n", type=int)
    sp.add_argument("--delta", type=float, default=0.1)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--allow-p7", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("repro-chain", parents=[common], help="three-node chain loss table")
    sp.add_argument("--epsilon", type=float, default=0.1)
    sp.set_defaults(func=cmd_repro_chain)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for name, default in (("seed", 0), ("workers", 1), ("out", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"treeising {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(f"treeising {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AssertionError as exc:
        print(f"treeising {args.command}: check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
