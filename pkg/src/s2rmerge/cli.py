"""Command-line interface.

Subcommands:

  task-vector   difference between a fine-tuned checkpoint and its ancestor
  delta         synthetic-to-real displacement from two task vectors
  merge         apply a merge plan (single- or multi-source) to a target
  lang-sim      n-gram similarity matrices from a directory of corpora
  eval          CER/WER of a hypothesis file against a reference file
  select-alpha  grid-search alpha over a precomputed score table
  toybench      run the end-to-end benchmark and render its reports

Every command is deterministic given its flags and seeds; diagnostics go to
stderr, primary output to files or stdout. Exit code 0 iff no error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import lang_sim, metrics, plots, selection
from .checkpoint import load_checkpoint, save_checkpoint
from .task_arith import (
    SourceSetMismatch,
    TaskVector,
    apply_multi_analogy,
    merge_plan_sidecar,
    parse_merge_plan,
    s2r_delta,
    task_vector,
)
from .toybench.protocol import ExperimentConfig, aggregate_reports, report_to_json, run_protocol


def _err(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return 1


def _info(msg: str) -> None:
    print(msg, file=sys.stderr)


def cmd_task_vector(args) -> int:
    fine_tuned = load_checkpoint(args.fine_tuned)
    ancestor = load_checkpoint(args.ancestor)
    tv = task_vector(fine_tuned, ancestor)
    save_checkpoint(tv.to_parameter_set(), args.out)
    _info(f"wrote task vector ({len(tv.entries)} tensors) to {args.out}")
    return 0


def cmd_delta(args) -> int:
    real_tv = TaskVector.from_parameter_set(load_checkpoint(args.real_tv))
    syn_tv = TaskVector.from_parameter_set(load_checkpoint(args.syn_tv))
    delta = s2r_delta(real_tv, syn_tv)
    save_checkpoint(delta.to_parameter_set(), args.out)
    _info(f"wrote synthetic-to-real displacement to {args.out}")
    return 0


def cmd_merge(args) -> int:
    with open(args.plan, "r", encoding="utf-8") as fh:
        plan_obj = json.load(fh)
    sim = None
    sim_path = args.similarity or plan_obj.get("similarity_file")
    if sim_path:
        sim = lang_sim.SimilarityMatrix.from_tsv(sim_path)
    plan = parse_merge_plan(plan_obj, sim=sim)
    target_syn = load_checkpoint(args.target_syn)
    deltas = {}
    for source in plan.sources:
        path = os.path.join(args.deltas, f"{source}.tvc")
        if not os.path.exists(path):
            raise SourceSetMismatch(f"delta for source {source!r} not found at {path}")
        deltas[source] = TaskVector.from_parameter_set(load_checkpoint(path))
    merged = apply_multi_analogy(target_syn, deltas, plan)
    save_checkpoint(merged, args.out)
    with open(str(args.out) + ".meta.json", "w", encoding="utf-8") as fh:
        fh.write(merge_plan_sidecar(plan) + "\n")
    _info(f"wrote merged checkpoint to {args.out} (alpha={plan.alpha}, {len(plan.sources)} sources)")
    return 0


def _parse_orders(text: str) -> tuple[int, ...]:
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        return tuple(range(int(lo), int(hi) + 1))
    return tuple(int(p) for p in text.split(","))


def cmd_lang_sim(args) -> int:
    files = sorted(f for f in os.listdir(args.corpora) if f.endswith(".txt"))
    if len(files) < 2:
        return _err(f"need at least two <lang>.txt corpora in {args.corpora}, found {len(files)}")
    orders = _parse_orders(args.orders)
    profiles = []
    for fname in files:
        lang = fname[: -len(".txt")]
        path = os.path.join(args.corpora, fname)
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
        try:
            profiles.append(lang_sim.build_profile(lines, lang, orders))
        except lang_sim.EmptyCorpus as exc:
            return _err(f"{path}: {exc}")
    metrics_to_run = lang_sim.METRICS if args.metric == "all" else (args.metric,)
    os.makedirs(args.out, exist_ok=True)
    for metric in metrics_to_run:
        matrix = lang_sim.build_matrix(profiles, metric, args.epsilon)
        out_path = os.path.join(args.out, f"{metric}.tsv")
        matrix.write_tsv(out_path)
        if matrix.degenerate:
            _info(f"warning: {metric} matrix is degenerate (all pairwise divergences zero)")
        if not args.no_figures:
            plots.fig_similarity_heatmap(matrix, os.path.join(args.out, f"{metric}.png"))
        _info(f"wrote {out_path}")
    return 0


def cmd_eval(args) -> int:
    with open(args.hyp, "r", encoding="utf-8") as fh:
        hyps = fh.read().splitlines()
    with open(args.ref, "r", encoding="utf-8") as fh:
        refs = fh.read().splitlines()
    report = metrics.evaluate(hyps, refs, dataset=args.dataset, model=args.model)
    text = report.to_json() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.append_csv:
        metrics.append_report_csv(report, args.append_csv)
    return 0


def cmd_select_alpha(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    grid = selection.AlphaGrid(tuple(cfg.get("grid", selection.DEFAULT_ALPHA_GRID)))
    mode = cfg.get("mode", "heldout")
    target = cfg["target"]
    raw_scores = cfg["scores"]
    table = {float(a): {str(k): float(v) for k, v in row.items()} for a, row in raw_scores.items()}

    def lookup(alpha, lang):
        return table[alpha][lang]

    if mode == "heldout":
        result = selection.select_alpha_heldout(grid, target, cfg["candidates"], lookup)
    elif mode == "oracle":
        result = selection.select_alpha_oracle(grid, target, lambda a: table[a][target])
    else:
        return _err(f"unknown selection mode {mode!r}; expected heldout or oracle")
    text = result.to_json() + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    _info(f"chosen alpha: {result.chosen_alpha}")
    return 0


def cmd_toybench(args) -> int:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg_obj = json.load(fh)
    else:
        cfg_obj = {}
    if args.per_target_alpha:
        cfg_obj["per_target_alpha"] = True
    config = ExperimentConfig.from_dict(cfg_obj)
    seeds = [args.seed] if args.seed is not None else list(config.seeds)
    if not seeds:
        return _err("no seeds: pass --seed or list them in the config")
    os.makedirs(args.out, exist_ok=True)
    reports = []
    for seed in seeds:
        _info(f"running protocol for seed {seed} ...")
        report = run_protocol(config, seed)
        path = os.path.join(args.out, f"report_seed{seed}.json")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(report_to_json(report))
        _info(f"wrote {path}")
        reports.append(report)
    aggregate = aggregate_reports(reports)
    agg_path = os.path.join(args.out, "aggregate.json")
    with open(agg_path, "w", encoding="utf-8") as fh:
        fh.write(report_to_json(aggregate))
    _info(f"wrote {agg_path}")
    tables = plots.write_report_tables(reports, args.out)
    _info(f"wrote tables: {', '.join(tables)}")
    if not args.no_figures:
        figures = plots.write_report_figures(reports, os.path.join(args.out, "figures"))
        _info(f"wrote figures: {', '.join(figures)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="s2rmerge",
        description="Zero-shot synthetic-to-real checkpoint adaptation via task analogies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("task-vector", help="fine-tuned minus ancestor checkpoint")
    p.add_argument("--fine-tuned", required=True)
    p.add_argument("--ancestor", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_task_vector)

    p = sub.add_parser("delta", help="real task vector minus synthetic task vector")
    p.add_argument("--real-tv", required=True)
    p.add_argument("--syn-tv", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_delta)

    p = sub.add_parser("merge", help="apply a merge plan to a target checkpoint")
    p.add_argument("--plan", required=True)
    p.add_argument("--target-syn", required=True)
    p.add_argument("--deltas", required=True, help="directory of <lang>.tvc displacement files")
    p.add_argument("--similarity", default=None, help="similarity TSV (overrides plan)")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_merge)

    p = sub.add_parser("lang-sim", help="pairwise similarity matrices from corpora")
    p.add_argument("--corpora", required=True, help="directory of <lang>.txt files")
    p.add_argument("--orders", default="1..5", help="n-gram orders, e.g. 1..5 or 1,2,3")
    p.add_argument("--metric", default="all", choices=("all",) + lang_sim.METRICS)
    p.add_argument("--epsilon", type=float, default=lang_sim.DEFAULT_EPSILON)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(fn=cmd_lang_sim)

    p = sub.add_parser("eval", help="CER/WER of hypothesis vs reference lines")
    p.add_argument("--hyp", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--dataset", default="")
    p.add_argument("--model", default="")
    p.add_argument("--append-csv", default=None, help="append the report row to this CSV")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("select-alpha", help="grid-search alpha over a score table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_select_alpha)

    p = sub.add_parser("toybench", help="run the end-to-end benchmark")
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--per-target-alpha", action="store_true")
    p.set_defaults(fn=cmd_toybench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except Exception as exc:  # noqa: BLE001 - single CLI boundary
        return _err(f"{type(exc).__name__}: {exc}")


if __name__ == "__main__":
    sys.exit(main())
