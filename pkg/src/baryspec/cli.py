"""Command-line entry point.

Subcommands: ``interp`` (sample-interpolation study), ``solve`` (benchmark
PDE solves), ``probe`` (theory probes), ``decompose`` (precision-conditioning
experiment), and ``list-problems``. Runs are configured by an INI-style file
with strict key checking and emit report.json, trace.csv, and model.ckpt into
the output directory. Exit codes: 2 for configuration errors, 3 for numerical
aborts.
"""

from __future__ import annotations

import configparser
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import analysis, optim, pde
from .model import GridModel

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------------------
# Strict config parsing
# ---------------------------------------------------------------------------

_SECTION_KEYS = {
    "run": {"problem", "seed", "lambda_ibc", "collocation", "collocation_count",
            "reference", "eval_every", "test_resolution"},
    "grid": {"n"},
    # optimizer sections may repeat as [optimizer], [optimizer.2], ...
    "optimizer": {"kind", "steps", "lr0", "rank", "cg_iters", "damping",
                  "line_search", "seed", "hvp_mode", "precond_update_freq"},
}


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def load_config(path: str) -> dict:
    """Parse the INI-style run config, rejecting unknown sections and keys."""
    parser = configparser.ConfigParser(strict=True)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    out: dict = {"optimizers": []}
    for section in parser.sections():
        base = "optimizer" if section.split(".")[0] == "optimizer" else section
        if base not in _SECTION_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        allowed = _SECTION_KEYS[base]
        block = {}
        for key, raw in parser.items(section):
            if key not in allowed:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            block[key] = _parse_value(raw)
        if base == "optimizer":
            out["optimizers"].append(block)
        else:
            out[section] = block
    return out


def _optimizer_stage(block: dict, seed: int, max_steps: int | None) -> dict:
    """Translate an optimizer config block into a run_stages stage dict."""
    block = dict(block)
    kind = block.pop("kind", "nncg")
    stage = {"kind": kind}
    if "steps" in block:
        stage["steps"] = int(block.pop("steps"))
    if max_steps is not None:
        stage["steps"] = min(stage.get("steps", max_steps), max_steps)
    if kind in ("gd", "adam") and "lr0" in block:
        stage["lr"] = block.pop("lr0")
    block.pop("lr0", None)
    if kind == "nncg":
        for src, dst in (("rank", "rank"), ("cg_iters", "cg_iters"),
                         ("damping", "damping"), ("seed", "seed"),
                         ("hvp_mode", "hvp_mode"),
                         ("precond_update_freq", "precond_update_freq")):
            if src in block:
                stage[dst] = block.pop(src)
        stage.setdefault("seed", seed)
        if not block.pop("line_search", True):
            raise ConfigError("line_search=false is not supported")
    else:
        for key in ("rank", "cg_iters", "damping", "hvp_mode",
                    "precond_update_freq", "line_search", "seed"):
            block.pop(key, None)
    if block:
        raise ConfigError(f"unused optimizer keys: {sorted(block)}")
    return stage


def _problem_stage(problem: pde.PdeProblem, seed: int, max_steps: int | None) -> dict:
    """Default optimizer stage for a benchmark problem."""
    d = dict(problem.default_optimizer)
    stage = {"kind": d.pop("kind"), "seed": seed, **d}
    if problem.is_linear:
        stage["precond_update_freq"] = 0
    if max_steps is not None:
        stage["steps"] = min(stage["steps"], max_steps)
    return stage


def _progress(step, loss, metric, lr):
    print(f"iter={step} loss={loss:.6e} l2re={metric:.6e} step_size={lr:.3e}",
          file=sys.stderr)


def _write_outputs(out_dir: Path, report: analysis.ExperimentReport,
                   model: GridModel | None, trace: str | None = None) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    report.save(out_dir / "report.json")
    if trace is not None:
        report.write_trace_csv(out_dir / "trace.csv", trace)
    if model is not None:
        model.save(out_dir / "model.ckpt")


def _fail(code: int, kind: str, message: str):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)
    sys.exit(code)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Pseudo-spectral physics-informed solver experiments."""


@main.command("list-problems")
def list_problems():
    """Print the built-in benchmarks and their default hyperparameters."""
    header = f"{'problem':<12} {'grid':<16} {'deriv':<22} {'lambda_ibc':<10} optimizer"
    click.echo(header)
    click.echo("-" * len(header))
    for name, factory in pde.PROBLEM_FACTORIES.items():
        p = factory()
        grid = "x".join(f"N={n}" for n in p.default_n)
        deriv = ",".join(
            d.method.value + (f"(k={d.half_bandwidth})" if d.half_bandwidth else "")
            for d in p.default_deriv
        )
        o = p.default_optimizer
        opt = (f"{o['kind']} steps={o['steps']} rank={o['rank']} "
               f"cg_iters={o['cg_iters']}")
        click.echo(f"{name:<12} {grid:<16} {deriv:<22} {p.default_lambda_ibc:<10} {opt}")


_TARGETS = {
    "sin": lambda freq: (lambda x: np.sin(freq * x)),
    "runge": lambda freq: (lambda x: 1.0 / (1.0 + 25.0 * x**2)),
}


@main.command()
@click.option("--n", default=40, type=int, help="Polynomial degree.")
@click.option("--m", default=100, type=int, help="Number of training samples.")
@click.option("--target", default="sin", type=click.Choice(sorted(_TARGETS)))
@click.option("--freq", default=4.0, type=float, help="Frequency for the sin target.")
@click.option("--steps", "--max-steps", default=3000, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", default="out", type=click.Path())
def interp(n, m, target, freq, steps, seed, out):
    """Fit a 1-D target from random samples by gradient descent."""
    fn = _TARGETS[target](freq)
    t0 = time.perf_counter()
    model, loss_fn = analysis.interpolation_task(n, fn, m=m, seed=seed)
    try:
        history = optim.run_gd(
            model, loss_fn, steps, "auto", eval_every=100,
            metric_fn=lambda mm: analysis.interpolation_l2re(mm, fn),
            progress_fn=_progress,
        )
    except optim.NumericalAbort as exc:
        _fail(EXIT_NUMERICAL, "numerical_abort", str(exc))
    err = analysis.interpolation_l2re(model, fn)
    report = analysis.ExperimentReport(
        config={"subcommand": "interp", "n": n, "m": m, "target": target,
                "freq": freq, "steps": steps},
        seed=seed,
        runtime_seconds=time.perf_counter() - t0,
    )
    report.add_trace("gd", history)
    report.final_metrics = {"final_loss": history.final_loss, "final_l2re": err}
    _write_outputs(Path(out), report, model, trace="gd")
    click.echo(f"final l2re {err:.3e}")


@main.command()
@click.option("--problem", "problem_name", default=None,
              type=click.Choice(sorted(pde.PROBLEM_FACTORIES)))
@click.option("--config", "config_path", default=None, type=click.Path())
@click.option("--out", default="out", type=click.Path())
@click.option("--seed", default=0, type=int)
@click.option("--max-steps", default=None, type=int)
def solve(problem_name, config_path, out, seed, max_steps):
    """Solve a benchmark PDE and emit report, trace, and checkpoint."""
    try:
        cfg = load_config(config_path) if config_path else {"optimizers": []}
        run = cfg.get("run", {})
        name = run.get("problem", problem_name)
        if name is None:
            raise ConfigError("no problem given (--problem or [run] problem=...)")
        if name not in pde.PROBLEM_FACTORIES:
            raise ConfigError(f"unknown problem {name!r}")
        problem = pde.make_problem(name)
        seed = int(run.get("seed", seed))
        grid_n = None
        if "grid" in cfg:
            grid_n = tuple(int(v) for v in str(cfg["grid"]["n"]).split("x"))
            if len(grid_n) != len(problem.default_n):
                raise ConfigError(f"grid n must have {len(problem.default_n)} axes")
        lam = run.get("lambda_ibc")
        scheme = pde.CollocationScheme()
        if "collocation" in run:
            kind = pde.CollocationKind(run["collocation"])
            scheme = pde.CollocationScheme(
                kind, int(run.get("collocation_count", 0)), seed)
        if "reference" in run:
            pde.load_reference(problem, run["reference"])
        stages = [_optimizer_stage(b, seed, max_steps) for b in cfg["optimizers"]]
        if not stages:
            stages = [_problem_stage(problem, seed, max_steps)]
    except ConfigError as exc:
        _fail(EXIT_CONFIG, "config_error", str(exc))

    resolution = int(run.get("test_resolution", 256))
    eval_every = int(run.get("eval_every", 100))
    model = problem.default_model(problem.default_grid(grid_n))
    loss_fn = problem.make_loss(model, lam, scheme)
    have_ref = problem.exact is not None or problem.reference is not None
    metric = (lambda mm: pde.model_l2re(problem, mm, resolution)) if have_ref else None
    t0 = time.perf_counter()
    try:
        history = optim.run_stages(
            model, loss_fn, stages, eval_every=eval_every,
            metric_fn=metric, progress_fn=_progress,
        )
    except optim.NumericalAbort as exc:
        _fail(EXIT_NUMERICAL, "numerical_abort", str(exc))
    report = analysis.ExperimentReport(
        config={"subcommand": "solve", "problem": name,
                "grid_n": list(grid_n or problem.default_n),
                "lambda_ibc": lam if lam is not None else problem.default_lambda_ibc,
                "collocation": scheme.kind.value, "stages": stages,
                "eval_every": eval_every, "test_resolution": resolution},
        seed=seed,
        runtime_seconds=time.perf_counter() - t0,
    )
    report.add_trace(name, history)
    report.final_metrics = {
        "final_loss": history.final_loss,
        "final_l2re": history.metrics[-1] if history.metrics else float("nan"),
    }
    _write_outputs(Path(out), report, model, trace=name)
    click.echo(f"final loss {history.final_loss:.3e} "
               f"l2re {report.final_metrics['final_l2re']:.3e}")


@main.command()
@click.argument("kind", type=click.Choice(["gram", "lebesgue", "epsop"]))
@click.option("--n", default=16, type=int)
@click.option("--m", default=4000, type=int, help="Samples (gram probe).")
@click.option("--stencil", default=1, type=int, help="FD half-bandwidth (epsop).")
@click.option("--trials", default=200, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", default="out", type=click.Path())
def probe(kind, n, m, stencil, trials, seed, out):
    """Run a theory probe and emit its report."""
    from .diff import DiffMethod, make_diff_operator
    from .grid import chebyshev_grid, fourier_grid

    config = {"subcommand": "probe", "kind": kind, "n": n, "m": m,
              "stencil": stencil, "trials": trials}
    report = analysis.ExperimentReport(config=config, seed=seed)
    t0 = time.perf_counter()
    if kind == "gram":
        res = analysis.gram_probe(n, m, seed)
        report.final_metrics = {"kappa_sq_emp": res.kappa_sq_emp,
                                "kappa_sq_pop": res.kappa_sq_pop}
        report.probes = [analysis.TheoryProbe(n=n, m=m, kappa_sq=res.kappa_sq_emp)]
    elif kind == "lebesgue":
        lam = analysis.lebesgue_constant(chebyshev_grid(n, (-1.0, 1.0)))
        report.final_metrics = {"lebesgue": lam}
        report.probes = [analysis.TheoryProbe(n=n, lebesgue=lam)]
    else:
        grid = fourier_grid(n, (0.0, 2.0 * np.pi))
        true_op = make_diff_operator(grid, 1, DiffMethod.FOURIER_MATRIX)
        fd_op = make_diff_operator(grid, 1, DiffMethod.FINITE_DIFFERENCE, stencil)
        eps = analysis.epsilon_op(true_op, fd_op, trials=trials, seed=seed)
        report.final_metrics = {"eps_op": eps}
        report.probes = [analysis.TheoryProbe(n=n, eps_op=eps)]
    report.runtime_seconds = time.perf_counter() - t0
    _write_outputs(Path(out), report, None)
    click.echo(json.dumps(report.final_metrics))


@main.command()
@click.option("--stencils", default="1,2,spectral",
              help="Comma list of half-bandwidths; 'spectral' for the exact surrogate.")
@click.option("--steps", default=100, type=int, help="Newton-CG plateau-stage steps.")
@click.option("--max-steps", default=None, type=int)
@click.option("--rank", default=400, type=int)
@click.option("--cg-iters", default=50, type=int)
@click.option("--adam-steps", default=2000, type=int, help="Adam slope-stage steps.")
@click.option("--grid", "grid_spec", default=None,
              help="Training grid as NtxNx (default 81x80).")
@click.option("--jobs", default=1, type=int)
@click.option("--seed", default=0, type=int)
@click.option("--out", default="out", type=click.Path())
def decompose(stencils, steps, max_steps, rank, cg_iters, adam_steps, grid_spec,
              jobs, seed, out):
    """Precision-conditioning decomposition experiment on convection."""
    try:
        ks = tuple(None if s.strip() == "spectral" else int(s)
                   for s in stencils.split(","))
        grid_n = (81, 80)
        if grid_spec is not None:
            grid_n = tuple(int(v) for v in grid_spec.split("x"))
            if len(grid_n) != 2:
                raise ValueError(grid_spec)
    except ValueError:
        _fail(EXIT_CONFIG, "config_error",
              f"bad stencil list {stencils!r} or grid {grid_spec!r}")
    if max_steps is not None:
        steps = min(steps, max_steps)
    try:
        report = analysis.decomposition_experiment(
            stencils=ks, steps=steps, rank=rank, cg_iters=cg_iters,
            seed=seed, grid_n=grid_n, jobs=jobs, adam_steps=adam_steps,
        )
    except optim.NumericalAbort as exc:
        _fail(EXIT_NUMERICAL, "numerical_abort", str(exc))
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report.save(out_dir / "report.json")
    for name in report.traces:
        report.write_trace_csv(out_dir / f"trace_{name}.csv", name)
    for name, metrics in report.final_metrics.items():
        click.echo(f"{name}: plateau_l2re={metrics['plateau_l2re']:.3e} "
                   f"slope={metrics['initial_slope']:.3e} "
                   f"kappa_sq={metrics['kappa_sq']:.3e}")


if __name__ == "__main__":
    main()
