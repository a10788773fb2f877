"""Report rendering: delimited tables and matplotlib figures.

The benchmark CLI writes, next to the JSON reports, a set of TSV tables and
PNG figures summarizing the same numbers: per-configuration error rates,
the cross-lingual transfer heatmap, source/target/other improvement bars,
held-out versus oracle selection, and linear-probe comparisons. All table
output is deterministic (fixed row order, fixed float formatting).
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _mean(values) -> float:
    values = list(values)
    return sum(values) / len(values)


def table1_tsv(reports: list[dict]) -> str:
    """Per-configuration CER/WER per target, averaged across seeds."""
    langs = reports[0]["languages"]
    rows = list(reports[0]["table1"])
    header = ["config"]
    for lang in langs:
        header += [f"{lang}_cer", f"{lang}_wer"]
    header += ["mean_cer", "mean_wer"]
    lines = ["\t".join(header)]
    for row in rows:
        cells = [row]
        for lang in langs:
            cells.append(_fmt(_mean(r["table1"][row][lang]["cer"] for r in reports)))
            cells.append(_fmt(_mean(r["table1"][row][lang]["wer"] for r in reports)))
        cells.append(_fmt(_mean(r["table1_mean"][row]["cer"] for r in reports)))
        cells.append(_fmt(_mean(r["table1_mean"][row]["wer"] for r in reports)))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def transfer_tsv(reports: list[dict]) -> str:
    """Relative CER improvement of each source displacement on each language."""
    langs = reports[0]["languages"]
    lines = ["\t".join(["source\\evaluated"] + langs)]
    for s in langs:
        cells = [s]
        for lang in langs:
            cells.append(_fmt(_mean(r["transfer"]["rel_improvement"][s][lang] for r in reports)))
        lines.append("\t".join(cells))
    lines.append("")
    lines.append("\t".join(["aggregate", "value"]))
    lines.append("\t".join(["diag_mean", _fmt(_mean(r["transfer"]["diag_mean"] for r in reports))]))
    lines.append(
        "\t".join(["offdiag_mean", _fmt(_mean(r["transfer"]["offdiag_mean"] for r in reports))])
    )
    lines.append("\t".join(["q_mean", _fmt(_mean(r["transfer"]["q_mean"] for r in reports))]))
    return "\n".join(lines) + "\n"


def alpha_gap_tsv(reports: list[dict]) -> str:
    """Held-out vs oracle CER per configuration, averaged across seeds/targets."""
    configs = list(reports[0]["alpha_gap"])
    langs = reports[0]["languages"]
    header = [
        "config",
        "heldout_val_cer",
        "oracle_val_cer",
        "gap_val_cer",
        "heldout_test_cer",
        "oracle_test_cer",
        "gap_test_cer",
    ]
    lines = ["\t".join(header)]
    for name in configs:
        rows = [r["alpha_gap"][name][t] for r in reports for t in langs]
        hv = _mean(g["heldout_val_cer"] for g in rows)
        ov = _mean(g["oracle_val_cer"] for g in rows)
        ht = _mean(g["heldout_test_cer"] for g in rows)
        ot = _mean(g["oracle_test_cer"] for g in rows)
        lines.append(
            "\t".join([name, _fmt(hv), _fmt(ov), _fmt(hv - ov), _fmt(ht), _fmt(ot), _fmt(ht - ot)])
        )
    return "\n".join(lines) + "\n"


def probe_tsv(reports: list[dict]) -> str:
    """Linear-probe CER for baseline vs merged models."""
    probed = [r["linear_probe"] for r in reports if r.get("linear_probe")]
    if not probed:
        return "no linear-probe results\n"
    langs = reports[0]["languages"]
    lines = ["\t".join(["model"] + langs + ["mean"])]
    for key, label in (("baseline_cer", "probed_baseline"), ("merged_cer", "probed_merged")):
        cells = [label]
        for lang in langs:
            cells.append(_fmt(_mean(p[key][lang] for p in probed)))
        mean_key = key.replace("_cer", "_mean")
        cells.append(_fmt(_mean(p[mean_key] for p in probed)))
        lines.append("\t".join(cells))
    return "\n".join(lines) + "\n"


def write_report_tables(reports: list[dict], out_dir) -> list[str]:
    """Write all TSV tables; returns the file names written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name, text in (
        ("table1.tsv", table1_tsv(reports)),
        ("transfer.tsv", transfer_tsv(reports)),
        ("alpha_gap.tsv", alpha_gap_tsv(reports)),
        ("probe.tsv", probe_tsv(reports)),
    ):
        path = os.path.join(out_dir, name)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        written.append(name)
    return written


def _savefig(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def fig_improvement_by_config(reports: list[dict], path) -> None:
    """Bar chart: mean CER improvement over the baseline per configuration."""
    rows = [r for r in reports[0]["table1"] if r not in ("baseline", "in_domain")]
    base = _mean(r["table1_mean"]["baseline"]["cer"] for r in reports)
    deltas = [base - _mean(r["table1_mean"][row]["cer"] for r in reports) for row in rows]
    fig, ax = plt.subplots(figsize=(7.5, 3.6))
    colors = ["tab:blue" if row.startswith("single") else "tab:orange" for row in rows]
    ax.bar(range(len(rows)), [d * 100 for d in deltas], color=colors)
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(rows, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("CER improvement vs baseline (pts)")
    ax.set_title(f"Zero-shot improvement (baseline CER {base * 100:.1f})")
    _savefig(fig, path)


def fig_transfer_heatmap(reports: list[dict], path) -> None:
    """Heatmap of relative CER improvement: rows sources, columns targets."""
    langs = reports[0]["languages"]
    mat = np.array(
        [
            [_mean(r["transfer"]["rel_improvement"][s][t] for r in reports) for t in langs]
            for s in langs
        ]
    )
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    im = ax.imshow(mat * 100, cmap="RdYlGn")
    ax.set_xticks(range(len(langs)), langs)
    ax.set_yticks(range(len(langs)), langs)
    ax.set_xlabel("evaluated language")
    ax.set_ylabel("source displacement")
    for i in range(len(langs)):
        for j in range(len(langs)):
            ax.text(j, i, f"{mat[i, j] * 100:.1f}", ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax, label="relative CER decrease (%)")
    ax.set_title("Cross-lingual transfer of displacements")
    _savefig(fig, path)


def fig_stq(reports: list[dict], path) -> None:
    """Mean relative improvement on source, target, and uninvolved languages."""
    stq_rows = [row for r in reports for row in r["transfer"]["stq"]]
    means = {
        "source (S)": _mean(row["s_improvement"] for row in stq_rows),
        "target (T)": _mean(row["t_improvement"] for row in stq_rows),
        "others (Q)": _mean(row["q_mean_improvement"] for row in stq_rows),
    }
    fig, ax = plt.subplots(figsize=(4.4, 3.4))
    ax.bar(list(means), [v * 100 for v in means.values()], color=["tab:green", "tab:blue", "tab:gray"])
    ax.axhline(0.0, color="black", linewidth=0.8)
    ax.set_ylabel("relative CER decrease (%)")
    ax.set_title("Where each displacement helps")
    _savefig(fig, path)


def fig_alpha_gap(reports: list[dict], path) -> None:
    """Held-out vs oracle validation CER per configuration."""
    configs = list(reports[0]["alpha_gap"])
    langs = reports[0]["languages"]
    heldout, oracle = [], []
    for name in configs:
        rows = [r["alpha_gap"][name][t] for r in reports for t in langs]
        heldout.append(_mean(g["heldout_val_cer"] for g in rows) * 100)
        oracle.append(_mean(g["oracle_val_cer"] for g in rows) * 100)
    x = np.arange(len(configs))
    fig, ax = plt.subplots(figsize=(7.5, 3.6))
    ax.bar(x - 0.2, oracle, width=0.4, label="oracle", color="tab:purple")
    ax.bar(x + 0.2, heldout, width=0.4, label="held-out", color="tab:cyan")
    ax.set_xticks(x)
    ax.set_xticklabels(configs, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("validation CER (%)")
    ax.legend()
    ax.set_title("Cost of zero-shot alpha selection")
    _savefig(fig, path)


def fig_linear_probe(reports: list[dict], path) -> None:
    """Probed baseline vs probed merged CER per target language."""
    probed = [r["linear_probe"] for r in reports if r.get("linear_probe")]
    if not probed:
        return
    langs = reports[0]["languages"]
    base = [_mean(p["baseline_cer"][lang] for p in probed) * 100 for lang in langs]
    merged = [_mean(p["merged_cer"][lang] for p in probed) * 100 for lang in langs]
    x = np.arange(len(langs))
    fig, ax = plt.subplots(figsize=(6.0, 3.4))
    ax.bar(x - 0.2, base, width=0.4, label="probed baseline", color="tab:red")
    ax.bar(x + 0.2, merged, width=0.4, label="probed merged", color="tab:green")
    ax.set_xticks(x, langs)
    ax.set_ylabel("CER after probing (%)")
    ax.legend()
    ax.set_title("Representation quality under linear probing")
    _savefig(fig, path)


def write_report_figures(reports: list[dict], out_dir) -> list[str]:
    """Render all benchmark figures; returns the file names written."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    jobs = (
        ("improvement_by_config.png", fig_improvement_by_config),
        ("transfer_heatmap.png", fig_transfer_heatmap),
        ("stq_improvement.png", fig_stq),
        ("alpha_gap.png", fig_alpha_gap),
        ("linear_probe.png", fig_linear_probe),
    )
    for name, fn in jobs:
        path = os.path.join(out_dir, name)
        fn(reports, path)
        if os.path.exists(path):
            written.append(name)
    return written


def fig_similarity_heatmap(matrix, path) -> None:
    """Heatmap for one language-similarity matrix."""
    langs = matrix.languages
    fig, ax = plt.subplots(figsize=(4.6, 4.0))
    im = ax.imshow(np.asarray(matrix.scores), cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(len(langs)), langs)
    ax.set_yticks(range(len(langs)), langs)
    for i in range(len(langs)):
        for j in range(len(langs)):
            ax.text(j, i, f"{matrix.scores[i][j]:.2f}", ha="center", va="center", fontsize=8, color="white")
    fig.colorbar(im, ax=ax)
    ax.set_title(f"{matrix.metric} similarity")
    _savefig(fig, path)
