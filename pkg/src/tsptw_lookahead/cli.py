"""Command-line entry point: ``python -m tsptw_lookahead <command> ...``.

Commands: ``gen``, ``label``, ``train``, ``solve``, ``eval``, ``sweep``.
Every command accepts ``--config FILE``: a JSON object whose keys are the
command's option names (dashes or underscores). Flags given explicitly on the
command line win over the file. Exit status is 0 on success, 2 on invalid
input and 1 on internal errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

from . import datagen
from .evaluation import (GREEDY, adapt_solver, evaluate, expert_solver, greedy_solver,
                         policy_solver, score_sweep, write_report)
from .expert import import_external_solutions, label_dataset
from .pipeline import fit_level
from .policy import epsilon_grid
from .scorer import PolicyConfig
from .serialization import (FormatError, load_checkpoint, read_jsonl, save_checkpoint,
                            write_jsonl, write_solutions)

log = logging.getLogger("tsptw_lookahead")

GEN_KINDS = ("medium", "hard-train", "hard-eval", "weak-no-start", "unconstrained",
             "grouped-medium")
SOLVER_CHOICES = ("greedy-mt", "greedy-lt", "greedy-es", "checkpoint", "checkpoint-adapt",
                  "expert")


class UsageError(ValueError):
    pass


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in str(text).replace(",", " ").split()]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tsptw-lookahead", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def command(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON file with defaults for this command")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--workers", type=int, default=1)
        return sp

    g = command("gen", "generate an unlabelled dataset")
    g.add_argument("--kind", choices=GEN_KINDS, default="medium")
    g.add_argument("--n", type=int, default=10)
    g.add_argument("--count", type=int, default=100)
    g.add_argument("--alpha", type=float, default=0.5)
    g.add_argument("--beta", type=float, default=0.75)
    g.add_argument("--t-n", type=float, default=None, help="override T_n (medium only)")
    g.add_argument("--n-groups", type=int, default=None)
    g.add_argument("--out", required=False)

    lb = command("label", "attach expert tours")
    lb.add_argument("--data")
    lb.add_argument("--out")
    lb.add_argument("--solver", choices=("dp", "brute"), default="dp")
    lb.add_argument("--import-solutions", dest="import_solutions",
                    help="text file of '<id> <tour>' rows to attach instead of solving")

    t = command("train", "train a candidate scorer")
    t.add_argument("--data")
    t.add_argument("--level", choices=("static", "dynamic", "osla", "musla"), default="osla")
    t.add_argument("--epochs", type=int, default=30)
    t.add_argument("--hidden", type=_ints, default=[128, 128, 128])
    t.add_argument("--lr", type=float, default=1e-3)
    t.add_argument("--weight-decay", type=float, default=0.01)
    t.add_argument("--batch-size", type=int, default=256)
    t.add_argument("--patience", type=int, default=5)
    t.add_argument("--val-fraction", type=float, default=0.1)
    t.add_argument("--k", type=int, default=5)
    t.add_argument("--m", type=int, default=1)
    t.add_argument("--osla-checkpoint", help="trained osla scorer (required for --level musla)")
    t.add_argument("--out")
    t.add_argument("--loss-csv")

    for name, help_ in (("solve", "write tours for a dataset"),
                        ("eval", "evaluate solvers and write reports")):
        sp = command(name, help_)
        sp.add_argument("--data")
        sp.add_argument("--solver", choices=SOLVER_CHOICES, nargs="+", default=["greedy-mt"])
        sp.add_argument("--checkpoint")
        sp.add_argument("--epsilons", type=_floats, default=None,
                        help="time offsets for checkpoint-adapt, as fractions of T_n")
        if name == "solve":
            sp.add_argument("--out")
        else:
            sp.add_argument("--out-dir")

    sw = command("sweep", "weighted-score curves from report summaries")
    sw.add_argument("--reports", nargs="+", help="JSON summaries written by eval")
    sw.add_argument("--gammas", type=_floats, default=None)
    sw.add_argument("--out")
    return p


def _load_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    sp = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sp._actions} - {"help", "config"}
    cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"unknown config keys for {args.command}: {', '.join(unknown)}")
    sp.set_defaults(**cfg)
    return parser.parse_args(argv)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _provenance(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("verbose",)}


def cmd_gen(args):
    _need(args, "out")
    kind, n, count, seed, w = args.kind, args.n, args.count, args.seed, args.workers
    if kind == "medium":
        recs = datagen.gen_medium(datagen.MediumParams(n, args.alpha, args.beta, args.t_n), count, seed, w)
    elif kind in ("hard-train", "hard-eval"):
        hp = datagen.HardParams(n, alpha=args.alpha, beta=args.beta, n_groups=args.n_groups)
        fn = datagen.gen_hard_train if kind == "hard-train" else datagen.gen_hard_eval
        recs = fn(hp, count, seed, w)
    elif kind == "weak-no-start":
        recs = datagen.gen_weak_no_start(n, count, seed, args.alpha, args.beta, w)
    elif kind == "unconstrained":
        recs = datagen.gen_unconstrained(n, count, seed, w)
    else:
        recs = datagen.gen_grouped_medium(n, count, seed, args.n_groups, args.alpha, args.beta, w)
    write_jsonl(recs, args.out)
    print(json.dumps({"written": len(recs), "out": args.out}))


def cmd_label(args):
    _need(args, "data", "out")
    records = read_jsonl(args.data)
    if args.import_solutions:
        res = import_external_solutions(records, args.import_solutions)
        for lineno, rid, reason in res.rejected:
            print(f"rejected line {lineno} ({rid}): {reason}", file=sys.stderr)
        labeled = res.records
        summary = {"attached": res.attached, "rejected": len(res.rejected)}
    else:
        labeled, screened = label_dataset(records, args.solver, args.workers)
        summary = {"labeled": len(labeled), "screened": screened, "solver": args.solver}
    write_jsonl(labeled, args.out)
    print(json.dumps(summary))


def cmd_train(args):
    _need(args, "data", "out")
    records = [r for r in read_jsonl(args.data) if r.labeled]
    if not records:
        raise UsageError(f"{args.data} holds no labelled records")
    lookahead = None
    if args.level == "musla":
        if not args.osla_checkpoint:
            raise UsageError("--level musla needs --osla-checkpoint")
        lookahead, _ = load_checkpoint(args.osla_checkpoint)
        if lookahead.level != "osla":
            raise UsageError(f"{args.osla_checkpoint} is a {lookahead.level} scorer, not osla")
    cfg = PolicyConfig(level=args.level, hidden=tuple(args.hidden), lr=args.lr,
                       weight_decay=args.weight_decay, batch_size=args.batch_size,
                       epochs=args.epochs, seed=args.seed, k=args.k, m=args.m,
                       patience=args.patience)
    n_val = int(round(args.val_fraction * len(records)))
    fit, val = records[: len(records) - n_val], records[len(records) - n_val:] or None
    params = fit_level(fit, cfg, lookahead, val)
    save_checkpoint(params, args.out, extra={"args": _provenance(args), "history": params.history})
    if args.loss_csv:
        with open(args.loss_csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "val_loss"])
            vals = params.history.get("val", [])
            for i, loss in enumerate(params.history["train"]):
                w.writerow([i, repr(loss), repr(vals[i]) if i < len(vals) else ""])
    print(json.dumps({"out": args.out, "epochs": len(params.history["train"]),
                      "final_loss": params.history["train"][-1],
                      "best_epoch": params.history.get("best_epoch")}))


def _solver(name, args, n):
    if name in GREEDY:
        return greedy_solver(GREEDY[name])
    if name == "expert":
        return expert_solver
    if not args.checkpoint:
        raise UsageError(f"solver {name} needs --checkpoint")
    params, _ = load_checkpoint(args.checkpoint)
    if name == "checkpoint":
        return policy_solver(params)
    grid = epsilon_grid(n, args.epsilons) if args.epsilons else None
    return adapt_solver(params, grid)


def cmd_solve(args):
    _need(args, "data", "out")
    records = read_jsonl(args.data)
    if len(args.solver) != 1:
        raise UsageError("solve takes exactly one --solver")
    solver = _solver(args.solver[0], args, records[0].n if records else 1)
    rows = []
    for rec in records:
        out = solver(rec)
        rows.append((rec.id, out[0] if isinstance(out, tuple) and isinstance(out[-1], dict) else out))
    write_solutions(rows, args.out, header=_provenance(args))
    print(json.dumps({"solved": len(rows), "out": args.out}))


def cmd_eval(args):
    _need(args, "data", "out_dir")
    records = read_jsonl(args.data)
    if not records:
        raise UsageError(f"{args.data} is empty")
    os.makedirs(args.out_dir, exist_ok=True)
    summaries = {}
    for name in args.solver:
        rep = evaluate(records, _solver(name, args, records[0].n), name)
        summary = write_report(rep, os.path.join(args.out_dir, name))
        summary["provenance"] = _provenance(args)
        with open(os.path.join(args.out_dir, name + ".json"), "w") as fh:
            json.dump(summary, fh, indent=2)
        summaries[name] = summary
    print(json.dumps({k: {kk: v[kk] for kk in ("illegal_rate", "gap", "mean_timeout")}
                      for k, v in summaries.items()}))


def cmd_sweep(args):
    _need(args, "reports", "out")
    reports = {}
    for path in args.reports:
        with open(path) as fh:
            doc = json.load(fh)
        if "illegal_rate" not in doc:
            raise UsageError(f"{path} is not a report summary")
        reports[doc.get("solver", os.path.splitext(os.path.basename(path))[0])] = doc
    sweep = score_sweep(reports, args.gammas)
    sweep.write_csv(args.out)
    stem = os.path.splitext(args.out)[0]
    sweep.write_bands_csv(stem + ".bands.csv")
    print(json.dumps({"rows": len(sweep.rows), "out": args.out}))


COMMANDS = {"gen": cmd_gen, "label": cmd_label, "train": cmd_train, "solve": cmd_solve,
            "eval": cmd_eval, "sweep": cmd_sweep}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _load_config(parser, argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    except (UsageError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except (UsageError, FormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
