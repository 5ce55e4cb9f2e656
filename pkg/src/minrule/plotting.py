"""Self-contained SVG figures comparing the sharing modes."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MODE_STYLE = {
    "full": ("full sharing", "-"),
    "partial_previous": ("partial, stored estimates", "--"),
    "partial_own": ("partial, own-belief estimates", ":"),
}


def _save(fig, path):
    with matplotlib.rc_context({"svg.hashsalt": "minrule", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_belief_evolution(series, agent, h_true, path):
    """Belief on the true hypothesis over time, one curve per mode (log y-axis).

    ``series`` maps mode name to ``(rounds, log_belief_true)`` for ``agent``.
    """
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, (rounds, lb) in series.items():
        label, ls = MODE_STYLE.get(mode, (mode, "-"))
        ax.plot(rounds, np.exp(lb), ls, label=label)
    ax.set_yscale("log")
    ax.set_xlabel("round t")
    ax.set_ylabel(f"belief of agent {agent} on h{h_true + 1}")
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def plot_rejection_rate(series, agent, hypothesis, bound, path):
    """Rejection rate -ln(belief)/t per mode with the max-KL bound as a reference."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for mode, (rounds, rate) in series.items():
        label, ls = MODE_STYLE.get(mode, (mode, "-"))
        keep = rounds >= 1
        ax.plot(rounds[keep], rate[keep], ls, label=label)
    ax.axhline(bound, color="k", lw=0.8, label="max KL bound")
    ax.set_xlabel("round t")
    ax.set_ylabel(f"rejection rate of h{hypothesis + 1}, agent {agent}")
    ax.legend(loc="lower right")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
