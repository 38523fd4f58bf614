"""Text, JSON and figure output for search runs and mode comparisons."""
from __future__ import annotations

import sys
from typing import Any

from .graph import ColoredGraph
from .search import ComparisonReport, SearchStats


def decimal(x: int) -> str:
    """``str(x)`` without the interpreter's digit limit (group orders get huge)."""
    limit = getattr(sys, "get_int_max_str_digits", lambda: 0)()
    if limit and x.bit_length() > 3 * limit:
        sys.set_int_max_str_digits(0)
        try:
            return str(x)
        finally:
            sys.set_int_max_str_digits(limit)
    return str(x)


def stats_dict(g: ColoredGraph, st: SearchStats) -> dict[str, Any]:
    return {
        "n": g.n,
        "m": g.m,
        "k": g.k,
        "mode": st.mode,
        "heuristic": st.heuristic,
        "group_order": decimal(st.group_order),
        "generators": [str(a) for a in st.generators],
        "nodes": st.nodes,
        "conflicts": st.conflicts,
        "bad_leaves": st.bad_leaves,
        "time_ms": round(st.time_ms, 3),
        "complete": st.complete,
    }


def comparison_dict(g: ColoredGraph, rep: ComparisonReport) -> dict[str, Any]:
    out = stats_dict(g, rep.enhanced)
    out["mode"] = "compare"
    out["nodes"] = rep.enhanced.nodes
    out["time_ms"] = round(rep.baseline.time_ms + rep.enhanced.time_ms, 3)
    out["complete"] = rep.comparable
    out["baseline"] = {
        "group_order": decimal(rep.baseline.group_order),
        "nodes": rep.baseline.nodes,
        "conflicts": rep.baseline.conflicts,
        "bad_leaves": rep.baseline.bad_leaves,
        "generators": len(rep.baseline.generators),
    }
    out["conflict_depth_histogram"] = emit_histogram(rep, "json")
    out["unmatched_conflicts"] = rep.unmatched
    return out


def stats_lines(g: ColoredGraph, st: SearchStats) -> list[str]:
    lines = [str(a) for a in st.generators]
    d = stats_dict(g, st)
    for key in ("n", "m", "k", "mode", "heuristic", "group_order", "nodes", "conflicts",
                "bad_leaves", "time_ms"):
        lines.append(f"{key} {d[key]}")
    lines.append(f"complete {'true' if st.complete else 'false'}")
    return lines


def comparison_lines(g: ColoredGraph, rep: ComparisonReport) -> list[str]:
    b, e = rep.baseline, rep.enhanced
    lines = [str(a) for a in e.generators]
    lines += [
        f"n {g.n}",
        f"m {g.m}",
        f"k {g.k}",
        "mode compare",
        f"heuristic {e.heuristic}",
        f"group_order {decimal(e.group_order)}",
        f"nodes baseline={b.nodes} enhanced={e.nodes}",
        f"conflicts baseline={b.conflicts} enhanced={e.conflicts}",
        f"bad_leaves baseline={b.bad_leaves} enhanced={e.bad_leaves}",
        f"time_ms {round(b.time_ms + e.time_ms, 3)}",
        f"complete {'true' if rep.comparable else 'false'}",
        "conflict_depth_histogram",
    ]
    lines += emit_histogram(rep, "text")
    if rep.unmatched:
        lines.append(f"unmatched_conflicts {rep.unmatched}")
    return lines


def emit_histogram(rep: ComparisonReport, fmt: str = "text"):
    """Conflict-depth buckets: ``depth d: count`` lines, or a ``{"d": count}`` dict."""
    if fmt == "json":
        return {str(d): c for d, c in sorted(rep.histogram.items())}
    return [f"depth {d}: {c}" for d, c in sorted(rep.histogram.items())]


def plot_conflict_histogram(rep: ComparisonReport, path: str, title: str | None = None) -> None:
    """Write a bar chart of baseline conflicts by anticipation depth."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    depths = sorted(rep.histogram)
    counts = [rep.histogram[d] for d in depths]
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    if depths:
        ax.bar(depths, counts, width=0.8, color="#4c72b0")
        ax.set_xticks(depths)
        if max(counts) / max(min(counts), 1) > 100:
            ax.set_yscale("log")
    else:
        ax.text(0.5, 0.5, "no conflicts", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("conflict depth $d = l_n - l$")
    ax.set_ylabel("baseline conflicts")
    ax.set_title(title or (
        f"conflicts: baseline {rep.baseline.conflicts}, enhanced {rep.enhanced.conflicts}"
    ), fontsize=10)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
