"""Command-line interface.

Exit codes: 0 success, 2 input error, 3 planning infeasible, 4 backend unavailable.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import kernels
from . import latent as L
from .analysis import analyze as run_analysis
from .composer import ModulationParams, run_sampling
from .config import Config, load_config
from .errors import (
    BackendFailure,
    BackendUnavailable,
    CxdError,
    EmptyPrompt,
    LayoutInfeasible,
    UnsatisfiableBudget,
)
from .lexicon import load_lexicon
from .plan import CompositionPlan
from .planner import build_plan
from .svg import plan_to_svg

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_BACKEND = 4

log = logging.getLogger("cxd")


@dataclass
class CliConfig:
    config: Config
    verbosity: int = 0


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _exit_codes(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (LayoutInfeasible, UnsatisfiableBudget) as exc:
            _fail(EXIT_INFEASIBLE, f"{type(exc).__name__}: {exc}")
        except (BackendFailure, BackendUnavailable) as exc:
            _fail(EXIT_BACKEND, f"{type(exc).__name__}: {exc}")
        except (CxdError, ValueError, OSError) as exc:
            _fail(EXIT_INPUT, f"{type(exc).__name__}: {exc}")
    return wrapper


def _dump_json(data) -> str:
    return json.dumps(data, indent=2, ensure_ascii=False) + "\n"


def _http_kwargs(cfg: Config) -> dict:
    return {"timeout": cfg.backends.timeout, "token": cfg.backends.token}


def _make_planner(cfg: Config, kind: str | None, fixtures: str | None, record: bool, lexicon):
    from .backends.planners import RemotePlanner, ScriptedPlanner, TemplatePlanner

    kind = kind or cfg.backends.planner
    template = TemplatePlanner(lexicon, max_concepts=cfg.lexicons.max_concepts)
    if kind == "template":
        return template
    if kind == "scripted":
        fixtures = fixtures or cfg.backends.planner_fixtures
        if not fixtures:
            raise ValueError("the scripted planner needs --fixtures or backends.planner_fixtures")
        return ScriptedPlanner(fixtures, fallback=template if record else None, record=record)
    if kind == "remote":
        if not cfg.backends.planner_url:
            raise BackendUnavailable("remote planner selected but CXD_PLANNER_URL is not set")
        return RemotePlanner(cfg.backends.planner_url, **_http_kwargs(cfg))
    raise ValueError(f"unknown planner {kind!r}")


def _make_denoiser(cfg: Config, kind: str | None):
    from .backends.denoiser import MockDenoiser, RemoteDenoiser

    kind = kind or cfg.backends.denoiser
    if kind == "mock":
        return MockDenoiser()
    if kind == "remote":
        if not cfg.backends.denoiser_url:
            raise BackendUnavailable("remote denoiser selected but CXD_DENOISER_URL is not set")
        return RemoteDenoiser(cfg.backends.denoiser_url, **_http_kwargs(cfg))
    raise ValueError(f"unknown denoiser {kind!r}")


def _params(cfg: Config, steps, seed, lambda_pos, lambda_neg, omega) -> ModulationParams:
    m = cfg.modulation
    pick = lambda flag, default: default if flag is None else flag  # noqa: E731
    return ModulationParams(
        lambda_pos=pick(lambda_pos, m.lambda_pos),
        lambda_neg=pick(lambda_neg, m.lambda_neg),
        omega=pick(omega, m.omega),
        steps=pick(steps, m.steps),
        seed=pick(seed, m.seed),
    )


def _shape(cfg: Config, height, width, channels) -> tuple[int, int, int]:
    m = cfg.modulation
    return (height or m.height, width or m.width, channels or m.channels)


def modulation_options(fn):
    opts = [
        click.option("--steps", type=click.IntRange(min=1), default=None, help="Sampling steps."),
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Noise seed."),
        click.option("--lambda-pos", type=float, default=None, help="Enhancement strength."),
        click.option("--lambda-neg", type=float, default=None, help="Suppression strength."),
        click.option("--omega", type=click.FloatRange(0, 1), default=None,
                     help="Weight of the composited latent against the complex one."),
        click.option("--height", type=click.IntRange(min=1), default=None),
        click.option("--width", type=click.IntRange(min=1), default=None),
        click.option("--channels", type=click.IntRange(min=1), default=None),
        click.option("--workers", type=click.IntRange(min=1), default=1,
                     help="Parallel denoiser calls per step."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def planner_options(fn):
    opts = [
        click.option("--planner", "planner_kind", type=click.Choice(["template", "scripted", "remote"]),
                     default=None, help="Planner backend (default from config: template)."),
        click.option("--fixtures", type=click.Path(file_okay=False), default=None,
                     help="Reply directory for the scripted planner."),
        click.option("--record", is_flag=True,
                     help="Scripted planner: fill missing replies from the template planner."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


@click.group()
@click.option("--config", "config_path", type=click.Path(dir_okay=False), default=None,
              help="Config file (default: ./cxd.toml if present).")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def main(ctx, config_path, verbose):
    """Complex scene generation: analyse, plan, paint, generate."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(config_path)
    except (OSError, ValueError) as exc:
        _fail(EXIT_INPUT, f"config: {exc}")
    ctx.obj = CliConfig(cfg, verbose)


def _lexicon(cfg: Config, override: str | None):
    return load_lexicon(override or cfg.lexicons.path)


@main.command()
@click.argument("prompt")
@click.option("--lexicon", type=click.Path(dir_okay=False), default=None)
@click.pass_obj
@_exit_codes
def analyze(obj: CliConfig, prompt, lexicon):
    """Print the complexity report of PROMPT as JSON."""
    lex = _lexicon(obj.config, lexicon)
    result = run_analysis(prompt, lex, obj.config.lexicons.max_concepts)
    click.echo(_dump_json(result.report.to_dict()), nl=False)


@main.command()
@click.argument("prompt")
@planner_options
@click.option("--lexicon", type=click.Path(dir_okay=False), default=None)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default=None,
              help="Write the plan JSON here instead of stdout.")
@click.option("--svg", type=click.Path(dir_okay=False), default=None,
              help="Also write an SVG rendering of the layout.")
@click.pass_obj
@_exit_codes
def plan(obj: CliConfig, prompt, planner_kind, fixtures, record, lexicon, out, svg):
    """Decompose PROMPT and lay out its simple prompts."""
    cfg = obj.config
    lex = _lexicon(cfg, lexicon)
    planner = _make_planner(cfg, planner_kind, fixtures, record, lex)
    result = build_plan(prompt, planner, lex, max_concepts=cfg.lexicons.max_concepts)
    text = result.to_json()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text, nl=False)
    if svg:
        Path(svg).write_text(plan_to_svg(result), encoding="utf-8")


def _paint(cfg: Config, plan_obj: CompositionPlan, denoiser_kind, out, steps, seed, lambda_pos,
           lambda_neg, omega, height, width, channels, workers):
    params = _params(cfg, steps, seed, lambda_pos, lambda_neg, omega)
    denoiser = _make_denoiser(cfg, denoiser_kind)
    z = run_sampling(plan_obj, params, denoiser, shape=_shape(cfg, height, width, channels),
                     workers=workers)
    digest = L.write_latent(out, z) if out else L.checksum(z)
    log.info("kernels: %s", kernels.BACKEND)
    return z, digest, denoiser


@main.command()
@click.argument("plan_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--denoiser", "denoiser_kind", type=click.Choice(["mock", "remote"]), default=None)
@click.option("-o", "--out", type=click.Path(dir_okay=False), default="latent.cxdl",
              show_default=True, help="Where to write the final latent dump.")
@modulation_options
@click.pass_obj
@_exit_codes
def paint(obj: CliConfig, plan_file, denoiser_kind, out, **mod):
    """Run the sampling loop for PLAN_FILE and print the final latent checksum."""
    plan_obj = CompositionPlan.from_json(Path(plan_file).read_text(encoding="utf-8"))
    _, digest, _ = _paint(obj.config, plan_obj, denoiser_kind, out, **mod)
    click.echo(digest)


@main.command()
@click.argument("prompt")
@planner_options
@click.option("--lexicon", type=click.Path(dir_okay=False), default=None)
@click.option("--denoiser", "denoiser_kind", type=click.Choice(["mock", "remote"]),
              default="remote", show_default=True)
@click.option("--skip-retouch", is_flag=True, help="Stop after painting.")
@click.option("--latent-out", type=click.Path(dir_okay=False), default=None,
              help="Write the final latent dump here.")
@click.option("--out-dir", type=click.Path(file_okay=False), default=".", show_default=True)
@click.option("--strength", type=click.FloatRange(0, 1), default=0.5, show_default=True,
              help="Retouch strength.")
@modulation_options
@click.pass_obj
@_exit_codes
def generate(obj: CliConfig, prompt, planner_kind, fixtures, record, lexicon, denoiser_kind,
             skip_retouch, latent_out, out_dir, strength, **mod):
    """Plan, paint, decode and retouch PROMPT; prints the final image reference."""
    from .backends.retouch import RetouchClient, build_retouch_request

    cfg = obj.config
    if denoiser_kind == "remote" and not cfg.backends.denoiser_url:
        raise BackendUnavailable("generate needs a diffusion service: set CXD_DENOISER_URL "
                                 "(or use --denoiser mock --skip-retouch)")
    if not skip_retouch:
        if denoiser_kind != "remote":
            raise BackendUnavailable("retouching needs a decoded image from a remote denoiser; "
                                     "pass --skip-retouch with the mock denoiser")
        if not cfg.backends.retouch_url:
            raise BackendUnavailable("retouching needs CXD_RETOUCH_URL (or --skip-retouch)")

    lex = _lexicon(cfg, lexicon)
    planner = _make_planner(cfg, planner_kind, fixtures, record, lex)
    plan_obj = build_plan(prompt, planner, lex, max_concepts=cfg.lexicons.max_concepts)
    out_path = Path(out_dir)
    out_path.mkdir(parents=True, exist_ok=True)
    (out_path / "plan.json").write_text(plan_obj.to_json(), encoding="utf-8")

    z, digest, denoiser = _paint(cfg, plan_obj, denoiser_kind, latent_out, **mod)
    if skip_retouch:
        click.echo(digest)
        return

    image_ref = denoiser.decode(z)
    request = build_retouch_request(plan_obj, image_ref, strength)
    (out_path / "retouch_request.json").write_text(_dump_json(request.to_dict()), encoding="utf-8")
    final = RetouchClient(cfg.backends.retouch_url, **_http_kwargs(cfg)).retouch(request)
    (out_path / "image_ref.txt").write_text(final + "\n", encoding="utf-8")
    click.echo(final)


if __name__ == "__main__":  # pragma: no cover
    main()
