"""Command line front end.

Subcommands map onto the library stages: ``build`` explores the decision
model, ``solve`` runs backward induction, ``simulate`` rolls out a policy
under Monte Carlo damage sampling, and ``serve`` starts the HTTP API.

Exit codes: 0 success, 1 invalid input, 2 state budget exceeded, 3 I/O
failure.
"""

from __future__ import annotations

import json
import pathlib
import sys

import click

from . import KERNEL_IMPLEMENTATION
from .fragility import FragilityError, PfAssignment, assign_pf, load_curves, load_exposure
from .mdp import MdpError, MdpModel, StateBudgetExceeded, build_mdp
from .network import Network, NetworkError, load_network
from .powerflow import PowerFlowError, VoltageLimits
from .simulate import SimulationError, attach_bus_sets, baseline_policy, monte_carlo
from .solver import (
    SolverError,
    average_restoration_time,
    nominal_sequence,
    policy_from_json,
    policy_to_json,
    solve,
)

_INPUT_ERRORS = (
    NetworkError,
    FragilityError,
    MdpError,
    PowerFlowError,
    SolverError,
    SimulationError,
    ValueError,
)


class _Config:
    """Defaults from --config JSON; explicit flags always win."""

    def __init__(self, path: str | None):
        self.values: dict = {}
        if path:
            self.values = json.loads(pathlib.Path(path).read_text())
            if not isinstance(self.values, dict):
                raise click.UsageError("config file must hold a JSON object")

    def get(self, name, given, default=None):
        if given is not None and given != ():
            return given
        return self.values.get(name, default)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _run(fn):
    try:
        fn()
    except StateBudgetExceeded as exc:
        _fail(2, str(exc))
    except _INPUT_ERRORS as exc:
        _fail(1, str(exc))
    except json.JSONDecodeError as exc:
        _fail(1, f"malformed JSON: {exc}")
    except OSError as exc:
        _fail(3, str(exc))


def _load_net(cfg: _Config, network: str | None) -> Network:
    path = cfg.get("network", network)
    if not path:
        raise click.UsageError("--network is required (flag or config)")
    return load_network(pathlib.Path(path).read_text())


def _resolve_pf(cfg: _Config, net: Network, fragility, exposure, pf_override) -> PfAssignment:
    fragility = cfg.get("fragility", fragility)
    exposure = cfg.get("exposure", exposure)
    overrides = list(cfg.get("pf_override", pf_override, ()))
    if overrides:
        out: dict[int, float] = {}
        for item in overrides:
            key, _, val = str(item).partition("=")
            if not val:
                raise click.UsageError(f"--pf-override wants branch=p or all=p, got {item!r}")
            p = float(val)
            if key.strip() == "all":
                out.update({br.id: p for br in net.branches})
            else:
                out[int(key)] = p
        missing = {br.id for br in net.branches} - set(out)
        if missing:
            raise click.UsageError(f"--pf-override missing branches {sorted(missing)}")
        return PfAssignment(out)
    if fragility and exposure:
        curves = load_curves(pathlib.Path(fragility).read_text())
        exp = load_exposure(pathlib.Path(exposure).read_text())
        return assign_pf(net, curves, exp)
    raise click.UsageError("provide --pf-override or both --fragility and --exposure")


def _limits(cfg: _Config, vmin, vmax) -> VoltageLimits:
    return VoltageLimits(
        float(cfg.get("vmin", vmin, 0.95)), float(cfg.get("vmax", vmax, 1.05))
    )


def _build_model(cfg, network, fragility, exposure, pf_override, vmin, vmax, relax_cap, state_budget):
    net = _load_net(cfg, network)
    pf = _resolve_pf(cfg, net, fragility, exposure, pf_override)
    model = build_mdp(
        net,
        pf,
        limits=_limits(cfg, vmin, vmax),
        state_budget=int(cfg.get("state_budget", state_budget, 2_000_000)),
        relax_cap=float(cfg.get("relax_cap", relax_cap, 0.10)),
    )
    return net, model


def _out_dir(cfg: _Config, out_dir) -> pathlib.Path:
    path = pathlib.Path(cfg.get("out_dir", out_dir, "."))
    path.mkdir(parents=True, exist_ok=True)
    return path


_model_options = [
    click.option("--network", type=click.Path(), help="Network JSON document."),
    click.option("--fragility", type=click.Path(), help="Fragility curve set JSON."),
    click.option("--exposure", type=click.Path(), help="Per-branch exposure JSON."),
    click.option(
        "--pf-override",
        multiple=True,
        help="Direct failure probability, branch=p (repeatable) or all=p.",
    ),
    click.option("--vmin", type=float, help="Lower voltage limit, pu (default 0.95)."),
    click.option("--vmax", type=float, help="Upper voltage limit, pu (default 1.05)."),
    click.option("--relax-cap", type=float, help="Max voltage-band widening (default 0.10)."),
    click.option("--state-budget", type=int, help="Abort exploration past this many states."),
    click.option("--config", type=click.Path(), help="JSON file of option defaults."),
]


def _with(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn

    return deco


@click.group()
@click.version_option()
def main():
    """Restoration decision support for damaged radial distribution feeders."""


@main.command()
@_with(_model_options)
@click.option("--out-dir", type=click.Path(), help="Directory for model.json.")
def build(network, fragility, exposure, pf_override, vmin, vmax, relax_cap, state_budget, config, out_dir):
    """Explore the reachable decision model and write model.json."""

    def body():
        cfg = _Config(config)
        _, model = _build_model(
            cfg, network, fragility, exposure, pf_override, vmin, vmax, relax_cap, state_budget
        )
        out = _out_dir(cfg, out_dir) / "model.json"
        out.write_text(model.to_json())
        click.echo(f"states: {model.n_states}")
        click.echo(f"terminal states: {sum(model.is_terminal(i) for i in range(model.n_states))}")
        click.echo(f"relaxed states: {sum(model.relaxed)}")
        click.echo(f"model: {out}")

    _run(body)


@main.command("solve")
@_with(_model_options)
@click.option("--model", "model_path", type=click.Path(), help="Reuse a built model.json.")
@click.option("--horizon", type=int, help="Stages to plan for (default: branch count).")
@click.option("--out-dir", type=click.Path(), help="Directory for policy.json.")
def solve_cmd(network, fragility, exposure, pf_override, vmin, vmax, relax_cap, state_budget, config, model_path, horizon, out_dir):
    """Compute the optimal stage-indexed policy and write policy.json."""

    def body():
        cfg = _Config(config)
        if cfg.get("model", model_path):
            model = MdpModel.from_json(pathlib.Path(cfg.get("model", model_path)).read_text())
        else:
            _, model = _build_model(
                cfg, network, fragility, exposure, pf_override, vmin, vmax, relax_cap, state_budget
            )
        h = int(cfg.get("horizon", horizon, model.n_branches))
        table, policy = solve(model, h)
        out = _out_dir(cfg, out_dir) / "policy.json"
        out.write_text(policy_to_json(model, policy))
        v0 = table.value(h, 0)
        click.echo(f"kernel: {KERNEL_IMPLEMENTATION}")
        click.echo(f"states: {model.n_states}")
        click.echo(f"expected cost: {v0:.6f}")
        click.echo(
            f"average restoration time: {average_restoration_time(v0, model.n_buses):.6f}"
        )
        click.echo(f"nominal sequence: {nominal_sequence(model, policy)}")
        click.echo(f"policy: {out}")

    _run(body)


@main.command()
@_with(_model_options)
@click.option("--model", "model_path", type=click.Path(), help="Reuse a built model.json.")
@click.option("--policy", "policy_path", type=click.Path(), help="Reuse a policy.json.")
@click.option(
    "--baseline",
    type=click.Choice(["greedy-max-energize", "min-total-time"]),
    help="Simulate a comparison policy instead of solving.",
)
@click.option("--horizon", type=int, help="Stages per trial (default: branch count).")
@click.option("--trials", type=int, help="Monte Carlo trial count (default 1000).")
@click.option("--seed", type=int, help="Philox stream seed (default 0).")
@click.option("--threads", type=int, help="Reserved worker-count hint; accepted, unused.")
@click.option("--out-dir", type=click.Path(), help="Directory for report.json/report.csv.")
def simulate(network, fragility, exposure, pf_override, vmin, vmax, relax_cap, state_budget, config, model_path, policy_path, baseline, horizon, trials, seed, threads, out_dir):
    """Roll out a policy under sampled damage and write a report."""

    def body():
        cfg = _Config(config)
        net = _load_net(cfg, network)
        if cfg.get("model", model_path):
            model = MdpModel.from_json(pathlib.Path(cfg.get("model", model_path)).read_text())
        else:
            pf = _resolve_pf(cfg, net, fragility, exposure, pf_override)
            model = build_mdp(
                net,
                pf,
                limits=_limits(cfg, vmin, vmax),
                state_budget=int(cfg.get("state_budget", state_budget, 2_000_000)),
                relax_cap=float(cfg.get("relax_cap", relax_cap, 0.10)),
            )
        attach_bus_sets(model, net)
        h = int(cfg.get("horizon", horizon, model.n_branches))
        kind = cfg.get("baseline", baseline)
        if kind:
            policy = baseline_policy(model, kind, h)
        elif cfg.get("policy", policy_path):
            policy = policy_from_json(
                model, pathlib.Path(cfg.get("policy", policy_path)).read_text()
            )
        else:
            _, policy = solve(model, h)
        report = monte_carlo(
            model,
            policy,
            trials=int(cfg.get("trials", trials, 1000)),
            horizon=h,
            seed=int(cfg.get("seed", seed, 0)),
        )
        out = _out_dir(cfg, out_dir)
        (out / "report.json").write_text(report.to_json())
        (out / "report.csv").write_text(report.to_csv())
        click.echo(f"trials: {report.trials}")
        click.echo(f"seed: {report.seed}")
        click.echo(
            f"mean average restoration time: {report.mean:.6f} +/- {report.stderr:.6f}"
        )
        click.echo(f"report: {out / 'report.json'}")

    _run(body)


@main.command()
@click.option("--listen", default=None, help="host:port to bind (default 127.0.0.1:8000).")
@click.option("--db", "db_path", type=click.Path(), help="SQLite session log path.")
@click.option("--static", "static_dir", type=click.Path(), help="Console asset directory.")
@click.option("--threads", type=int, help="Reserved worker-count hint; accepted, unused.")
@click.option("--config", type=click.Path(), help="JSON file of option defaults.")
def serve(listen, db_path, static_dir, threads, config):
    """Start the restoration-session HTTP service."""

    def body():
        import uvicorn

        from .service import create_app

        cfg = _Config(config)
        addr = cfg.get("listen", listen, "127.0.0.1:8000")
        host, _, port = addr.rpartition(":")
        if not host:
            raise click.UsageError(f"--listen wants host:port, got {addr!r}")
        app = create_app(
            cfg.get("db", db_path, "sessions.db"),
            static_dir=cfg.get("static", static_dir, "frontend/dist"),
        )
        uvicorn.run(app, host=host, port=int(port), log_level="warning")

    _run(body)


if __name__ == "__main__":  # pragma: no cover
    main()
