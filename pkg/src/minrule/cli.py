"""Command-line runner: ``minrule {run,compare,validate,plot}``.

Exit codes: 0 success, 1 validation verdict failed, 2 bad experiment file
or parameters, 3 simulation error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .engine import SharingMode, run
from .errors import DataError, EngineError, GenerationError, ParameterError, SpecError
from .experiment import build_model, build_network, make_config, parse_spec
from .export import (
    read_compare_csv,
    read_manifest,
    write_compare_csv,
    write_manifest,
    write_metrics_csv,
    write_trajectory_csv,
)
from .graph import is_strongly_connected, unreachable_pairs
from .metrics import convergence_time, learning_verdict, median_convergence_time, theoretical_rate_bound
from .observation import (
    GENERATOR_DESCRIPTION,
    check_global_identifiability,
    discriminating_set,
    max_kl_table,
)

EXIT_OK, EXIT_INVALID, EXIT_SPEC, EXIT_ENGINE, EXIT_IO = 0, 1, 2, 3, 4

COMPARE_MODES = (SharingMode.FULL, SharingMode.PARTIAL_PREVIOUS, SharingMode.PARTIAL_OWN)


class _Console:
    def __init__(self, quiet):
        self.quiet = quiet

    def __call__(self, *args):
        if not self.quiet:
            print(*args)


def _load(args):
    spec = parse_spec(args.spec)
    if args.seed is not None:
        spec = spec.with_seed(args.seed)
    try:
        network = build_network(spec)
        model = build_model(spec, network.n_agents)
    except (ParameterError, GenerationError) as exc:
        raise SpecError(f"cannot build experiment: {exc}") from exc
    return spec, network, model


def _out_dir(args, spec):
    return Path(args.out if args.out is not None else spec.output.directory)


def _configs(spec, network, model, mode=None):
    try:
        return [make_config(spec, network, model, s, mode) for s in spec.run.seeds]
    except ParameterError as exc:
        raise SpecError(f"invalid experiment: {exc}") from exc


def cmd_run(args):
    say = _Console(args.quiet)
    spec, network, model = _load(args)
    configs = _configs(spec, network, model)
    out = _out_dir(args, spec)
    out.mkdir(parents=True, exist_ok=True)
    h_true = spec.run.true_hypothesis
    for cfg in configs:
        seed = cfg.master_seed
        traj = run(cfg)
        write_trajectory_csv(traj, out / f"trajectory_seed{seed}.csv")
        write_metrics_csv(traj, out / f"metrics_seed{seed}.csv")
        write_manifest(
            out / f"manifest_seed{seed}.json",
            command="run",
            experiment=spec.as_dict(),
            experiment_file=spec.source,
            likelihood_generator=_generator(spec),
            seed=seed,
            config_digest=traj.metadata["config_digest"],
            wall_time=traj.metadata["wall_time"],
        )
        verdict = learning_verdict(traj, h_true, 0.01)
        say(f"seed {seed}: mode={cfg.mode} learned={verdict} "
            f"min final belief on h{h_true + 1}={np.exp(traj.log_beta[-1, :, h_true].min()):.6f}")
    return EXIT_OK


def _generator(spec):
    return GENERATOR_DESCRIPTION if spec.model.source == "random" else f"file {spec.model.path}"


def _pick_plot_targets(spec, model):
    h_true = spec.run.true_hypothesis
    h = spec.output.plot_hypothesis
    if h == h_true or not 0 <= h < model.n_hypotheses:
        h = 1 if h_true == 0 else 0
    agent = spec.output.plot_agent
    if agent is None:
        informed = set(discriminating_set(model, h_true, h))
        agent = next((i for i in range(model.n_agents) if i not in informed), 0)
    return agent, h


def cmd_compare(args):
    say = _Console(args.quiet)
    spec, network, model = _load(args)
    per_mode = {mode.kind: _configs(spec, network, model, mode) for mode in COMPARE_MODES}
    out = _out_dir(args, spec)
    out.mkdir(parents=True, exist_ok=True)
    h_true = spec.run.true_hypothesis
    agent, h = _pick_plot_targets(spec, model)
    bound = theoretical_rate_bound(model, h_true, h)
    threshold = spec.output.threshold
    for k, seed in enumerate(spec.run.seeds):
        rows, summary = [], {}
        for kind, configs in per_mode.items():
            traj = run(configs[k])
            rounds = traj.rounds
            with np.errstate(divide="ignore", invalid="ignore"):
                rates = np.where(rounds[:, None] >= 1,
                                 -traj.log_beta[:, :, h] / rounds[:, None], np.nan)
            for i in range(traj.n_agents):
                rows.append((kind, i, rounds, traj.log_beta[:, i, h_true], rates[:, i]))
            summary[kind] = {
                "learned": learning_verdict(traj, h_true, 0.01),
                "median_convergence_time": median_convergence_time(traj, threshold, h_true),
                "convergence_time_plot_agent": convergence_time(traj, threshold, h_true)[agent],
                "config_digest": traj.metadata["config_digest"],
            }
        write_compare_csv(rows, out / f"compare_seed{seed}.csv")
        write_manifest(
            out / f"compare_seed{seed}.json",
            command="compare",
            experiment=spec.as_dict(),
            experiment_file=spec.source,
            likelihood_generator=_generator(spec),
            seed=seed,
            h_true=h_true,
            plot_agent=agent,
            plot_hypothesis=h,
            rate_bound=bound,
            threshold=threshold,
            modes=summary,
        )
        if spec.output.plot:
            _render(out, seed)
        times = ", ".join(f"{kind}={s['median_convergence_time']:g}" for kind, s in summary.items())
        say(f"seed {seed}: median rounds to {threshold:g} belief: {times}")
    return EXIT_OK


def _render(out, seed):
    from .plotting import plot_belief_evolution, plot_rejection_rate

    manifest = read_manifest(out / f"compare_seed{seed}.json")
    data = read_compare_csv(out / f"compare_seed{seed}.csv")
    agent = manifest["plot_agent"]
    plot_belief_evolution(
        {mode: (r, lb[:, agent]) for mode, (r, lb, _) in data.items()},
        agent, manifest["h_true"], out / f"belief_seed{seed}.svg",
    )
    plot_rejection_rate(
        {mode: (r, rate[:, agent]) for mode, (r, _, rate) in data.items()},
        agent, manifest["plot_hypothesis"], manifest["rate_bound"], out / f"rate_seed{seed}.svg",
    )


def cmd_plot(args):
    say = _Console(args.quiet)
    if args.out is not None:
        out = Path(args.out)
    else:
        out = Path(parse_spec(args.spec).output.directory)
    manifests = sorted(out.glob("compare_seed*.json"))
    if not manifests:
        raise DataError(f"no compare results in {out}")
    for path in manifests:
        seed = read_manifest(path)["seed"]
        _render(out, seed)
        say(f"rendered belief_seed{seed}.svg and rate_seed{seed}.svg")
    return EXIT_OK


def cmd_validate(args):
    say = _Console(args.quiet)
    spec, network, model = _load(args)
    ok = True
    if network.n_agents != model.n_agents:
        say(f"size mismatch: graph has {network.n_agents} agents, model {model.n_agents}")
        return EXIT_INVALID
    if is_strongly_connected(network):
        say(f"strong connectivity: PASS ({network.n_agents} agents, {network.n_edges} directed edges)")
    else:
        ok = False
        pairs = unreachable_pairs(network)
        say(f"strong connectivity: FAIL ({len(pairs)} unreachable ordered pairs)")
        for u, v in pairs:
            say(f"  {u} cannot reach {v}")
    ident, failing = check_global_identifiability(model)
    if ident:
        say("global identifiability: PASS")
    else:
        ok = False
        say(f"global identifiability: FAIL ({len(failing)} indistinguishable pairs)")
        for l, k in failing:
            say(f"  h{l + 1} vs h{k + 1}")
    table = max_kl_table(model)
    h_true = spec.run.true_hypothesis
    say(f"max KL over agents (rate bounds, nats/round), row = true hypothesis h{h_true + 1}:")
    for k in range(model.n_hypotheses):
        if k != h_true:
            say(f"  h{k + 1}: {table[h_true, k]:.6g}")
    if not args.quiet:
        say("full pairwise max-KL table:")
        for l in range(model.n_hypotheses):
            say("  " + " ".join(f"{x:8.4f}" for x in table[l]))
    return EXIT_OK if ok else EXIT_INVALID


def build_parser():
    parser = argparse.ArgumentParser(prog="minrule", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", help="experiment file (default: bundled 100-agent setup)")
    common.add_argument("--out", help="output directory (default: [output] directory)")
    common.add_argument("--seed", type=int, help="replace the first run seed")
    common.add_argument("--quiet", action="store_true", help="print nothing on success")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func, text in [
        ("run", cmd_run, "simulate the configured mode, write CSVs and manifests"),
        ("compare", cmd_compare, "run all three sharing modes side by side and plot"),
        ("validate", cmd_validate, "check connectivity and identifiability"),
        ("plot", cmd_plot, "re-render SVGs from existing compare output"),
    ]:
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except EngineError as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    except (OSError, DataError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
