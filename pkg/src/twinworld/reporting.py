"""CSV emission and figure rendering for experiment results.

CSV bodies are deterministic: floats carry 17 significant digits, newline
is always "\\n", and no timestamps appear (those live in the metadata
file), so re-running a configuration reproduces the files byte for byte.
Figures are rendered to PNG next to the CSVs.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .experiments import ExperimentResult, Table


def format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_table(table: Table, out_dir: Path) -> Path:
    path = out_dir / f"{table.name}.csv"
    lines = [",".join(table.header)]
    lines.extend(",".join(format_value(v) for v in row) for row in table.rows)
    path.write_text("\n".join(lines) + "\n", newline="\n")
    return path


def write_metadata(result: ExperimentResult, cfg: dict, out_dir: Path,
                   version: str) -> Path:
    payload = {
        "version": version,
        "experiment": result.experiment,
        "config": {k: v for k, v in sorted(cfg.items())},
        **result.metadata,
    }
    path = out_dir / "run_metadata.json"
    path.write_text(json.dumps(payload, indent=2, default=_jsonable) + "\n")
    return path


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return str(obj)


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _columns(table: Table) -> dict[str, np.ndarray]:
    cols = list(zip(*table.rows))
    out = {}
    for name, values in zip(table.header, cols):
        try:
            out[name] = np.asarray(values, dtype=float)
        except (TypeError, ValueError):
            out[name] = np.asarray(values, dtype=object)
    return out


def render_figures(result: ExperimentResult, out_dir: Path) -> list[Path]:
    renderer = _RENDERERS.get(result.experiment)
    if renderer is None:
        return []
    return renderer(result, out_dir)


def _render_phase(result, out_dir):
    plt = _plt()
    c = _columns(result.tables[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(c["phi"], c["p0_exact"], "-", label="exact")
    ax.plot(c["phi"], c["p0_emulated"], "o", ms=4, label="twin-world emulation")
    ax.set_xlabel(r"$\varphi$")
    ax.set_ylabel("P(outcome 0)")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "phase_rotation.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _render_chsh(result, out_dir):
    plt = _plt()
    c = _columns(result.tables[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.axhspan(-2, 2, color="palegreen", alpha=0.4, label="local-model band")
    ax.plot(c["phi"], c["E_exact"], "-", label="exact")
    ax.plot(c["phi"], c["E_emulated"], "o", ms=4, label="twin-world emulation")
    ax.set_xlabel(r"$\varphi$")
    ax.set_ylabel("E")
    ax.legend(loc="lower right")
    fig.tight_layout()
    path = out_dir / "chsh.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _render_free_particle(result, out_dir):
    plt = _plt()
    states = _columns(result.tables[0])
    final_t = states["t"].max()
    mask = states["t"] == final_t
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for rho, label in ((0, "Re"), (1, "Im")):
        m = mask & (states["rho"] == rho)
        order = np.argsort(states["x"][m])
        axes[0].plot(states["x"][m][order], states["phi_exact"][m][order],
                     "-", label=f"{label} exact")
        axes[0].plot(states["x"][m][order], states["phi_emulated"][m][order],
                     "o", ms=4, label=f"{label} emulated")
    axes[0].set_xlabel("x")
    axes[0].set_ylabel(r"$\phi$")
    axes[0].set_title(f"state at t = {final_t:g}")
    axes[0].legend(fontsize=8)
    var = _columns(result.tables[1])
    axes[1].plot(var["t"], var["variance_exact"], "-", label="exact")
    axes[1].plot(var["t"], var["variance_emulated"], "o", ms=4, label="emulated")
    axes[1].set_xlabel("t")
    axes[1].set_ylabel("variance")
    axes[1].legend()
    fig.tight_layout()
    path = out_dir / "free_particle.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


def _render_tunneling(result, out_dir):
    plt = _plt()
    snaps = _columns(result.tables[0])
    errors = _columns(result.tables[1])
    paths = []

    times = np.unique(snaps["t"])
    fig, axes = plt.subplots(1, len(times), figsize=(3 * len(times), 3),
                             sharey=True)
    for ax, t in zip(np.atleast_1d(axes), times):
        m = snaps["t"] == t
        order = np.argsort(snaps["x"][m])
        ax.plot(snaps["x"][m][order], snaps["p_exact"][m][order], "-",
                label="exact")
        ax.plot(snaps["x"][m][order], snaps["p_emulated"][m][order], ".",
                ms=3, label="emulated")
        ax.set_title(f"t = {t:g}")
        ax.set_xlabel("x")
    np.atleast_1d(axes)[0].set_ylabel("p(x)")
    np.atleast_1d(axes)[0].legend(fontsize=8)
    fig.tight_layout()
    path = out_dir / "tunneling_snapshots.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    mid_times = times[(times > times.min()) & (times < times.max())]
    t_log = mid_times[0] if mid_times.size else times.max()
    m = snaps["t"] == t_log
    order = np.argsort(snaps["x"][m])
    fig, ax = plt.subplots(figsize=(6, 4))
    with np.errstate(divide="ignore"):
        ax.plot(snaps["x"][m][order], np.log10(snaps["p_exact"][m][order]),
                "-", label="exact")
        ax.plot(snaps["x"][m][order], np.log10(snaps["p_emulated"][m][order]),
                ".", ms=3, label="emulated")
    ax.set_xlabel("x")
    ax.set_ylabel(r"$\log_{10} p(x)$")
    ax.set_title(f"t = {t_log:g}")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "tunneling_log_density.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    for n_t in np.unique(errors["N_t"]):
        m = errors["N_t"] == n_t
        order = np.argsort(errors["t"][m])
        ax.plot(errors["t"][m][order], errors["two_norm_diff"][m][order],
                "o-", ms=3, label=f"N_t = {int(n_t)}")
    ax.set_xlabel("t")
    ax.set_ylabel("2-norm difference")
    ax.legend()
    fig.tight_layout()
    path = out_dir / "tunneling_error.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    paths.append(path)
    return paths


def _render_locality(result, out_dir):
    plt = _plt()
    c = _columns(result.tables[0])
    fig, ax = plt.subplots(figsize=(6, 4))
    labels = [str(p) for p in c["problem"]]
    ax.bar(range(len(labels)), np.maximum(c["q_min"], 1e-18))
    ax.set_yscale("log")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("Q minimum (upper bound)")
    fig.tight_layout()
    path = out_dir / "locality.png"
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [path]


_RENDERERS = {
    "phase_rotation": _render_phase,
    "chsh": _render_chsh,
    "free_particle": _render_free_particle,
    "tunneling": _render_tunneling,
    "locality": _render_locality,
}
