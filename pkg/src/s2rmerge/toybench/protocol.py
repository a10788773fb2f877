"""End-to-end benchmark protocol.

One run, for one seed:

1.  train an ancestor recognizer on pooled clean synthetic data from every
    language;
2.  fine-tune a synthetic child per language on the augmented synthetic
    domain;
3.  fine-tune a real model per language from its child;
4.  form the synthetic-to-real displacement per language from the task
    vectors;
5.  build character n-gram profiles from the synthetic corpora and all
    three similarity matrices;
6.  for every merge configuration, select alpha by held-out grid search
    (plus the oracle variant) and score the merged target models on real
    test data;
7.  apply each single-source displacement to every language to separate
    source-specific from language-agnostic transfer;
8.  linear-probe baseline and merged models on real data.

Everything is a pure function of (config, seed): reports serialize to
byte-identical JSON across repeated runs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields, asdict

import numpy as np

from ..checkpoint import ParameterSet
from ..lang_sim import METRICS, build_matrix, build_profile
from ..selection import AlphaGrid, select_alpha_heldout, select_alpha_oracle
from ..task_arith import (
    MergePlan,
    apply_multi_analogy,
    apply_single_analogy,
    best_source,
    resolve_betas,
    s2r_delta,
    task_vector,
)
from .languages import ToyDataset, gen_language, make_domains, sample_dataset, stable_seed
from .recognizer import evaluate_rates, init_recognizer, linear_probe, train

SINGLE_CONFIGS = ("single_best", "single_kl", "single_hellinger", "single_jaccard")
MULTI_CONFIGS = ("multi_unit", "multi_uniform", "multi_kl", "multi_hellinger", "multi_jaccard")
MERGE_CONFIGS = SINGLE_CONFIGS + MULTI_CONFIGS

# merge-config name -> beta mode
_BETA_MODE = {
    "single_best": "unit",
    "single_kl": "kl",
    "single_hellinger": "hellinger",
    "single_jaccard": "jaccard",
    "multi_unit": "unit",
    "multi_uniform": "uniform",
    "multi_kl": "kl",
    "multi_hellinger": "hellinger",
    "multi_jaccard": "jaccard",
}


class ConfigInvalid(Exception):
    pass


@dataclass
class ExperimentConfig:
    """Knobs for one toy experiment; defaults run in about a minute."""

    languages: tuple[str, ...] = ("l1", "l2", "l3", "l4", "l5")
    alphabet_size: int = 16
    feature_dim: int = 32
    hidden_dim: int = 24
    seq_len: int = 12
    train_sequences: int = 2000
    val_sequences: int = 200
    test_sequences: int = 500
    corpus_sequences: int = 500
    noise_clean: float = 0.01
    noise_augmented: float = 0.05
    real_noise: float = 0.4
    shift_strength: float = 1.5
    per_lang_shift_scale: float = 0.2
    lr: float = 0.25
    probe_lr: float = 0.02
    batch_size: int = 256
    ancestor_epochs: int = 4
    child_epochs: int = 3
    real_epochs: int = 6
    probe_epochs: int = 1
    alpha_grid: tuple[float, ...] = tuple(i / 8 for i in range(9))
    merge_configs: tuple[str, ...] = MERGE_CONFIGS
    orders: tuple[int, ...] = (1, 2, 3, 4, 5)
    epsilon: float = 1e-10
    per_target_alpha: bool = False
    linear_probe: bool = True
    seeds: tuple[int, ...] = (1, 2, 3, 4, 5)

    def __post_init__(self):
        self.languages = tuple(self.languages)
        if len(self.languages) < 3:
            raise ConfigInvalid(
                f"need at least 3 languages for source/target/other analysis, got {len(self.languages)}"
            )
        if len(set(self.languages)) != len(self.languages):
            raise ConfigInvalid("language ids must be unique")
        unknown = set(self.merge_configs) - set(MERGE_CONFIGS)
        if unknown:
            raise ConfigInvalid(f"unknown merge configs {sorted(unknown)}; known: {MERGE_CONFIGS}")
        self.merge_configs = tuple(self.merge_configs)
        self.alpha_grid = tuple(float(a) for a in self.alpha_grid)
        self.orders = tuple(int(n) for n in self.orders)
        self.seeds = tuple(int(s) for s in self.seeds)
        for name in ("train_sequences", "val_sequences", "test_sequences", "corpus_sequences"):
            if getattr(self, name) < 1:
                raise ConfigInvalid(f"{name} must be >= 1")

    @classmethod
    def from_dict(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ConfigInvalid(f"unknown config keys {sorted(unknown)}")
        return cls(**obj)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, value in out.items():
            if isinstance(value, tuple):
                out[key] = list(value)
        return out


@dataclass
class _RunState:
    """Everything the merge/evaluation phases need from the training phase."""

    config: ExperimentConfig
    seed: int
    langs: list[str]
    children: dict[str, ParameterSet]
    reals: dict[str, ParameterSet]
    deltas: dict[str, object]
    sims: dict[str, object]
    real_train: dict[str, object]
    real_val: dict[str, object]
    real_test: dict[str, object]
    val_cache: dict = field(default_factory=dict)


def _cer_on(model: ParameterSet, dataset) -> float:
    c, _ = evaluate_rates(model, dataset)
    return c.rate


def _merged_for(state: _RunState, name: str, target: str, alpha: float, source: str | None = None):
    """Merged checkpoint for one configuration/target/alpha.

    ``source`` overrides the source choice for single_best, whose source is
    ranked externally from held-out scores.
    """
    cfg_sources = tuple(s for s in state.langs if s != target)
    mode = _BETA_MODE[name]
    if name.startswith("single"):
        if name == "single_best":
            if source is None:
                raise ConfigInvalid("single_best needs an explicit source")
            chosen = source
        else:
            chosen = best_source(cfg_sources, target, state.sims[mode])
        betas = resolve_betas(mode, (chosen,), target, sim=state.sims.get(mode))
        plan = MergePlan(
            target=target, sources=(chosen,), beta_mode=mode, betas=betas, alpha=alpha
        )
        return apply_multi_analogy(
            state.children[target], {chosen: state.deltas[chosen]}, plan
        ), plan
    betas = resolve_betas(mode, cfg_sources, target, sim=state.sims.get(mode))
    plan = MergePlan(target=target, sources=cfg_sources, beta_mode=mode, betas=betas, alpha=alpha)
    deltas = {s: state.deltas[s] for s in cfg_sources}
    return apply_multi_analogy(state.children[target], deltas, plan), plan


def _val_cer(state: _RunState, name: str, pseudo_target: str, alpha: float) -> float:
    """Validation CER of the merge built for a pseudo-target, cached."""
    key = (name, pseudo_target, alpha)
    if key not in state.val_cache:
        merged, _ = _merged_for(state, name, pseudo_target, alpha)
        state.val_cache[key] = _cer_on(merged, state.real_val[pseudo_target])
    return state.val_cache[key]


def _single_best_selection(state: _RunState, grid: AlphaGrid) -> dict:
    """Rank candidate sources by held-out CER of their raw displacement.

    For each source s, alpha is grid-searched on the mean CER over every
    other language (apply s's displacement to that language's synthetic
    child, score on its real validation split); sources are then ranked by
    their best mean. A target uses the best-ranked source other than
    itself, at that source's selected alpha.
    """
    per_source = {}
    for s in state.langs:
        others = [h for h in state.langs if h != s]

        def eval_sb(alpha, h, _s=s):
            merged = apply_single_analogy(state.children[h], state.deltas[_s], alpha, 1.0)
            return _cer_on(merged, state.real_val[h])

        result = select_alpha_heldout(grid, s, others, eval_sb)
        mean_at_best = sum(result.per_alpha_scores[result.chosen_alpha].values()) / len(others)
        per_source[s] = {
            "alpha": result.chosen_alpha,
            "score": mean_at_best,
            "per_alpha_scores": result.per_alpha_scores,
        }
    ranking = sorted(state.langs, key=lambda s: (per_source[s]["score"], s))
    chosen_source = {
        t: next(s for s in ranking if s != t) for t in state.langs
    }
    return {"per_source": per_source, "ranking": ranking, "chosen_source": chosen_source}


def _select_alphas(state: _RunState, grid: AlphaGrid) -> dict:
    """Held-out and oracle alpha selection for every merge configuration.

    Default: one alpha per configuration, chosen on the mean validation CER
    over all languages, each acting as a pseudo-target whose merge never
    sees its own data (leave-one-language-out). With per_target_alpha, each
    target gets its own alpha from the other languages only.
    """
    cfg = state.config
    out: dict = {}
    for name in cfg.merge_configs:
        if name == "single_best":
            continue
        entry: dict = {"mode": "per_target" if cfg.per_target_alpha else "shared"}
        if cfg.per_target_alpha:
            chosen = {}
            for t in state.langs:
                others = [h for h in state.langs if h != t]
                res = select_alpha_heldout(
                    grid, t, others, lambda a, h, _n=name: _val_cer(state, _n, h, a)
                )
                chosen[t] = res.chosen_alpha
            entry["chosen"] = chosen
        else:
            res = select_alpha_heldout(
                grid, "*", list(state.langs), lambda a, h, _n=name: _val_cer(state, _n, h, a)
            )
            entry["chosen"] = {t: res.chosen_alpha for t in state.langs}
            entry["per_alpha_mean"] = {
                repr(a): sum(res.per_alpha_scores[a].values()) / len(state.langs)
                for a in grid.values
            }
        oracle = {}
        for t in state.langs:
            res_o = select_alpha_oracle(grid, t, lambda a, _n=name, _t=t: _val_cer(state, _n, _t, a))
            oracle[t] = res_o.chosen_alpha
        entry["oracle"] = oracle
        out[name] = entry

    if "single_best" in cfg.merge_configs:
        sb = _single_best_selection(state, grid)
        oracle = {}
        for t in state.langs:
            best = None
            for s in state.langs:
                if s == t:
                    continue
                for a in grid.values:
                    c = _cer_on(
                        apply_single_analogy(state.children[t], state.deltas[s], a, 1.0),
                        state.real_val[t],
                    )
                    if best is None or c < best[0]:
                        best = (c, s, a)
            oracle[t] = {"source": best[1], "alpha": best[2], "val_cer": best[0]}
        sb["oracle"] = oracle
        out["single_best"] = sb
    return out


def run_protocol(config: ExperimentConfig, seed: int) -> dict:
    """Execute the full protocol for one seed and return the report dict."""
    cfg = config
    langs = sorted(cfg.languages)
    specs = {lang: gen_language(seed, lang, cfg.alphabet_size) for lang in langs}
    clean_dom, aug_dom, real_dom = make_domains(
        seed,
        alphabet_size=cfg.alphabet_size,
        feature_dim=cfg.feature_dim,
        noise_clean=cfg.noise_clean,
        noise_augmented=cfg.noise_augmented,
        real_noise=cfg.real_noise,
        shift_strength=cfg.shift_strength,
        per_lang_shift_scale=cfg.per_lang_shift_scale,
    )

    def split_seed(*tags) -> int:
        return int(stable_seed(seed, *tags).generate_state(1, np.uint64)[0])

    clean_train = {
        lang: sample_dataset(specs[lang], clean_dom, cfg.train_sequences, cfg.seq_len, split_seed("clean", lang))
        for lang in langs
    }
    aug_train = {
        lang: sample_dataset(specs[lang], aug_dom, cfg.train_sequences, cfg.seq_len, split_seed("aug", lang))
        for lang in langs
    }
    corpus = {
        lang: sample_dataset(specs[lang], clean_dom, cfg.corpus_sequences, cfg.seq_len, split_seed("corpus", lang))
        for lang in langs
    }
    real_train = {
        lang: sample_dataset(specs[lang], real_dom, cfg.train_sequences, cfg.seq_len, split_seed("rtrain", lang))
        for lang in langs
    }
    real_val = {
        lang: sample_dataset(specs[lang], real_dom, cfg.val_sequences, cfg.seq_len, split_seed("rval", lang))
        for lang in langs
    }
    real_test = {
        lang: sample_dataset(specs[lang], real_dom, cfg.test_sequences, cfg.seq_len, split_seed("rtest", lang))
        for lang in langs
    }

    # 1. ancestor on pooled clean synthetic data
    pooled = ToyDataset(
        features=np.concatenate([clean_train[lang].features for lang in langs]),
        label_indices=np.concatenate([clean_train[lang].label_indices for lang in langs]),
        labels=[s for lang in langs for s in clean_train[lang].labels],
        language="pooled",
        domain="synthetic",
    )
    ancestor = init_recognizer(
        split_seed("init"),
        feature_dim=cfg.feature_dim,
        hidden_dim=cfg.hidden_dim,
        alphabet_size=cfg.alphabet_size,
    )
    ancestor = train(
        ancestor, pooled, cfg.ancestor_epochs, cfg.lr, split_seed("train-ancestor"), cfg.batch_size
    )

    # 2-3. synthetic children and real fine-tunes
    children = {
        lang: train(ancestor, aug_train[lang], cfg.child_epochs, cfg.lr, split_seed("train-child", lang), cfg.batch_size)
        for lang in langs
    }
    reals = {
        lang: train(children[lang], real_train[lang], cfg.real_epochs, cfg.lr, split_seed("train-real", lang), cfg.batch_size)
        for lang in langs
    }

    # 4. synthetic-to-real displacement per language
    deltas = {
        lang: s2r_delta(task_vector(reals[lang], ancestor), task_vector(children[lang], ancestor))
        for lang in langs
    }

    # 5. n-gram profiles and similarity matrices from synthetic corpora
    profiles = [build_profile(corpus[lang].labels, lang, cfg.orders) for lang in langs]
    sims = {metric: build_matrix(profiles, metric, cfg.epsilon) for metric in METRICS}

    state = _RunState(
        config=cfg,
        seed=seed,
        langs=langs,
        children=children,
        reals=reals,
        deltas=deltas,
        sims=sims,
        real_train=real_train,
        real_val=real_val,
        real_test=real_test,
    )

    # 6. alpha selection and test-set evaluation per configuration
    grid = AlphaGrid(cfg.alpha_grid)
    selection = _select_alphas(state, grid)

    table1: dict = {"baseline": {}, "in_domain": {}}
    for t in langs:
        c, w = evaluate_rates(children[t], real_test[t])
        table1["baseline"][t] = {"cer": c.rate, "wer": w.rate}
        c, w = evaluate_rates(reals[t], real_test[t])
        table1["in_domain"][t] = {"cer": c.rate, "wer": w.rate}

    alpha_gap: dict = {}
    for name in cfg.merge_configs:
        table1[name] = {}
        alpha_gap[name] = {}
        for t in langs:
            if name == "single_best":
                source = selection[name]["chosen_source"][t]
                alpha = selection[name]["per_source"][source]["alpha"]
                merged, plan = _merged_for(state, name, t, alpha, source=source)
                o = selection[name]["oracle"][t]
                oracle_merged = apply_single_analogy(
                    state.children[t], state.deltas[o["source"]], o["alpha"], 1.0
                )
                heldout_val = _cer_on(merged, real_val[t])
                oracle_val = o["val_cer"]
                oracle_alpha = o["alpha"]
            else:
                alpha = selection[name]["chosen"][t]
                merged, plan = _merged_for(state, name, t, alpha)
                oracle_alpha = selection[name]["oracle"][t]
                oracle_merged, _ = _merged_for(state, name, t, oracle_alpha)
                heldout_val = _val_cer(state, name, t, alpha)
                oracle_val = _val_cer(state, name, t, oracle_alpha)
            c, w = evaluate_rates(merged, real_test[t])
            table1[name][t] = {
                "cer": c.rate,
                "wer": w.rate,
                "alpha": alpha,
                "betas": {k: plan.betas[k] for k in sorted(plan.betas)},
            }
            oc, _ = evaluate_rates(oracle_merged, real_test[t])
            alpha_gap[name][t] = {
                "heldout_alpha": alpha,
                "oracle_alpha": oracle_alpha,
                "heldout_val_cer": heldout_val,
                "oracle_val_cer": oracle_val,
                "heldout_test_cer": c.rate,
                "oracle_test_cer": oc.rate,
            }

    table1_mean = {
        row: {
            "cer": sum(table1[row][t]["cer"] for t in langs) / len(langs),
            "wer": sum(table1[row][t]["wer"] for t in langs) / len(langs),
        }
        for row in table1
    }

    # 7. cross-lingual transfer: apply each source displacement everywhere
    if "single_best" in selection:
        per_source_alpha = {s: selection["single_best"]["per_source"][s]["alpha"] for s in langs}
    else:
        per_source_alpha = {s: 0.5 for s in langs}
    transfer_cer = {}
    rel_improvement = {}
    for s in langs:
        transfer_cer[s] = {}
        rel_improvement[s] = {}
        for lang in langs:
            merged = apply_single_analogy(
                children[lang], deltas[s], per_source_alpha[s], 1.0
            )
            cer_val = _cer_on(merged, real_test[lang])
            base = table1["baseline"][lang]["cer"]
            transfer_cer[s][lang] = cer_val
            rel_improvement[s][lang] = (base - cer_val) / base if base > 0 else 0.0
    diag = [rel_improvement[s][s] for s in langs]
    offdiag = [rel_improvement[s][lang] for s in langs for lang in langs if lang != s]
    stq = []
    for s in langs:
        for t in langs:
            if s == t:
                continue
            q_langs = [q for q in langs if q not in (s, t)]
            stq.append(
                {
                    "source": s,
                    "target": t,
                    "s_improvement": rel_improvement[s][s],
                    "t_improvement": rel_improvement[s][t],
                    "q_mean_improvement": sum(rel_improvement[s][q] for q in q_langs)
                    / len(q_langs),
                }
            )
    transfer = {
        "per_source_alpha": per_source_alpha,
        "baseline_cer": {lang: table1["baseline"][lang]["cer"] for lang in langs},
        "cer": transfer_cer,
        "rel_improvement": rel_improvement,
        "diag_mean": sum(diag) / len(diag),
        "offdiag_mean": sum(offdiag) / len(offdiag),
        "stq": stq,
        "q_mean": sum(row["q_mean_improvement"] for row in stq) / len(stq),
    }

    # 8. linear probing of baseline vs best multi-analogy merge
    probe_report = None
    multi_in_run = [n for n in cfg.merge_configs if n.startswith("multi")]
    if cfg.linear_probe and multi_in_run:
        best_multi = min(multi_in_run, key=lambda n: (table1_mean[n]["cer"], n))
        baseline_probe = {}
        merged_probe = {}
        for t in langs:
            probed_base = linear_probe(
                children[t], real_train[t], cfg.probe_epochs, cfg.probe_lr,
                split_seed("probe-base", t), cfg.batch_size,
            )
            alpha = table1[best_multi][t]["alpha"]
            merged, _ = _merged_for(state, best_multi, t, alpha)
            probed_merged = linear_probe(
                merged, real_train[t], cfg.probe_epochs, cfg.probe_lr,
                split_seed("probe-merged", t), cfg.batch_size,
            )
            baseline_probe[t] = _cer_on(probed_base, real_test[t])
            merged_probe[t] = _cer_on(probed_merged, real_test[t])
        probe_report = {
            "config": best_multi,
            "baseline_cer": baseline_probe,
            "merged_cer": merged_probe,
            "baseline_mean": sum(baseline_probe.values()) / len(langs),
            "merged_mean": sum(merged_probe.values()) / len(langs),
        }

    sim_report = {}
    for metric in METRICS:
        m = sims[metric]
        sim_report[metric] = {
            "languages": list(m.languages),
            "scores": [[float(v) for v in row] for row in m.scores],
            "degenerate": bool(m.degenerate),
        }
        if m.raw_divergences is not None:
            sim_report[metric]["raw_divergences"] = [
                [float(v) for v in row] for row in m.raw_divergences
            ]

    # selection summary without the bulky per-alpha tables
    selection_report = {}
    for name, entry in selection.items():
        if name == "single_best":
            selection_report[name] = {
                "per_source_alpha": {s: entry["per_source"][s]["alpha"] for s in langs},
                "per_source_score": {s: entry["per_source"][s]["score"] for s in langs},
                "ranking": entry["ranking"],
                "chosen_source": entry["chosen_source"],
                "oracle": entry["oracle"],
            }
        else:
            selection_report[name] = {
                k: entry[k] for k in ("mode", "chosen", "oracle") if k in entry
            }
            if "per_alpha_mean" in entry:
                selection_report[name]["per_alpha_mean"] = entry["per_alpha_mean"]

    return {
        "schema": "toybench-report-v1",
        "seed": seed,
        "config": cfg.to_dict(),
        "languages": langs,
        "similarity": sim_report,
        "alpha_selection": selection_report,
        "table1": table1,
        "table1_mean": table1_mean,
        "alpha_gap": alpha_gap,
        "transfer": transfer,
        "linear_probe": probe_report,
    }


def aggregate_reports(reports: list[dict]) -> dict:
    """Mean tables and directional summaries across seeds."""
    if not reports:
        raise ConfigInvalid("no reports to aggregate")
    langs = reports[0]["languages"]
    rows = list(reports[0]["table1"])
    k = len(reports)

    table1_mean = {
        row: {
            "cer": sum(r["table1_mean"][row]["cer"] for r in reports) / k,
            "wer": sum(r["table1_mean"][row]["wer"] for r in reports) / k,
        }
        for row in rows
    }
    baseline_cer = table1_mean["baseline"]["cer"]
    multi_rows = [r for r in rows if r.startswith("multi")]
    sim_multi_rows = [r for r in multi_rows if r.split("_", 1)[1] in ("kl", "hellinger", "jaccard")]
    best_multi = min(multi_rows, key=lambda r: (table1_mean[r]["cer"], r)) if multi_rows else None

    fig4 = {
        "diag_mean": sum(r["transfer"]["diag_mean"] for r in reports) / k,
        "offdiag_mean": sum(r["transfer"]["offdiag_mean"] for r in reports) / k,
    }
    fig4["holds"] = fig4["diag_mean"] > fig4["offdiag_mean"]
    fig5 = {"q_mean": sum(r["transfer"]["q_mean"] for r in reports) / k}
    fig5["holds"] = fig5["q_mean"] > 0.0

    gap_rows = []
    dominance = True
    for r in reports:
        for per_target in r["alpha_gap"].values():
            for rec in per_target.values():
                gap_rows.append(rec)
                if rec["oracle_val_cer"] > rec["heldout_val_cer"] + 1e-12:
                    dominance = False
    n_gap = max(1, len(gap_rows))
    alpha_gap = {
        "heldout_val_cer_mean": sum(g["heldout_val_cer"] for g in gap_rows) / n_gap,
        "oracle_val_cer_mean": sum(g["oracle_val_cer"] for g in gap_rows) / n_gap,
        "heldout_test_cer_mean": sum(g["heldout_test_cer"] for g in gap_rows) / n_gap,
        "oracle_test_cer_mean": sum(g["oracle_test_cer"] for g in gap_rows) / n_gap,
        "dominance_all_runs": dominance,
    }
    alpha_gap["gap_val_cer"] = (
        alpha_gap["heldout_val_cer_mean"] - alpha_gap["oracle_val_cer_mean"]
    )
    alpha_gap["gap_test_cer"] = (
        alpha_gap["heldout_test_cer_mean"] - alpha_gap["oracle_test_cer_mean"]
    )

    probe = None
    probed = [r["linear_probe"] for r in reports if r.get("linear_probe")]
    if probed:
        probe = {
            "baseline_mean": sum(p["baseline_mean"] for p in probed) / len(probed),
            "merged_mean": sum(p["merged_mean"] for p in probed) / len(probed),
        }
        probe["holds"] = probe["merged_mean"] <= probe["baseline_mean"]

    return {
        "schema": "toybench-aggregate-v1",
        "seeds": [r["seed"] for r in reports],
        "languages": langs,
        "table1_mean": table1_mean,
        "baseline_cer": baseline_cer,
        "best_multi": None
        if best_multi is None
        else {
            "name": best_multi,
            "cer": table1_mean[best_multi]["cer"],
            "rel_improvement_vs_baseline": (baseline_cer - table1_mean[best_multi]["cer"])
            / baseline_cer
            if baseline_cer > 0
            else 0.0,
        },
        "multi_sim_beats_baseline": {
            r: table1_mean[r]["cer"] < baseline_cer for r in sim_multi_rows
        },
        "fig4": fig4,
        "fig5": fig5,
        "alpha_gap": alpha_gap,
        "linear_probe": probe,
    }


def report_to_json(report: dict) -> str:
    """Canonical JSON serialization: sorted keys, stable float repr."""
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
