"""Command Line.

`adelic-slopes [OPTIONS] COMMAND ...` reads bundle documents, prints one JSON line (or CSV row, or text line) per
result and exits with 0 on success, 2 when an asserted check fails and 1 on usage or input errors.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
from contextlib import contextmanager
from functools import partial
from pathlib import Path
from typing import TYPE_CHECKING, Annotated, Any

import anyio
import typer

try:  # typer >= 0.26 vendors click and raises its own exception classes
    from typer._click import exceptions as click
except ImportError:  # pragma: no cover
    import click  # type: ignore[no-redef]

from adelic_slopes.bundle import (
    degree,
    euler_characteristic,
    height_vector,
    john_bundle,
    lowner_bundle,
    scalar_extension_check,
)
from adelic_slopes.config import OutputFormat, Settings, SuiteName
from adelic_slopes.dtos import CheckReport
from adelic_slopes.ellipsoids import delta_upper, volume_ratio, vr_tilde
from adelic_slopes.errors import AdelicSlopesError, ParseError, UnexpectedCommandError
from adelic_slopes.minima import successive_minima
from adelic_slopes.schemas import load_bundle
from adelic_slopes.slopes import canonical_polygon, mu_bracket, polygon_envelope, polygon_to_csv, polygon_to_svg, slope
from adelic_slopes.sympow import gamma_nl
from adelic_slopes.utils import format_significant, parse_rational, round_significant, safe_error
from adelic_slopes.verify import SUITE_DESCRIPTIONS, run_suite_async, summarize

if TYPE_CHECKING:
    from collections.abc import Generator, Sequence

app = typer.Typer(
    name="adelic-slopes",
    help="Invariants of adelic vector bundles over Q and certified slope inequalities.",
    no_args_is_help=True,
    add_completion=False,
)

Record = dict[str, Any]

BundleFile = Annotated[
    Path, typer.Argument(exists=True, dir_okay=False, readable=True, help="Bundle document (JSON).")
]


@app.callback()
def configure(
    ctx: typer.Context,
    tol: Annotated[float | None, typer.Option(min=0, help="Relative gap of the John/Löwner solvers.")] = None,
    radius_factor: Annotated[
        float | None, typer.Option(min=0, help="Enumeration radius relative to the incumbent.")
    ] = None,
    seed: Annotated[int | None, typer.Option(min=0, help="Seed of generators and Monte Carlo.")] = None,
    output_format: Annotated[OutputFormat | None, typer.Option("--format", help="Output format.")] = None,
    out: Annotated[Path | None, typer.Option(dir_okay=False, help="Write the output to a file.")] = None,
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Debug logging.")] = False,
) -> None:
    """Global options, applied over the ADELIC_* environment configuration."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING)
    with _guard():
        ctx.obj = Settings.from_environment().with_overrides(
            tol=tol, radius_factor=radius_factor, seed=seed, output_format=output_format, out=out
        )


def _settings(ctx: typer.Context) -> Settings:
    return ctx.obj if isinstance(ctx.obj, Settings) else Settings()


@contextmanager
def _guard() -> Generator[None, None, None]:
    """Map library errors to exit code 1, wrapping unexpected ones in `UnexpectedCommandError` first."""
    try:
        with safe_error(UnexpectedCommandError, allow=AdelicSlopesError):
            yield
    except AdelicSlopesError as error:
        typer.echo(f"Error: {error}", err=True)
        raise typer.Exit(code=1) from error


# ----------------------------------------------------------------------------------------------------------------------
# Output


def _rounded(value: object, digits: int) -> object:
    if isinstance(value, float):
        return round_significant(value, digits)
    if isinstance(value, dict):
        return {k: _rounded(v, digits) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_rounded(v, digits) for v in value]
    return value


def _text_line(record: Record, digits: int) -> str:
    status = ""
    if "pass" in record:
        status = "PASS " if record["pass"] else ("FAIL " if record.get("sound_direction_only", True) else "INFO ")
    fields = " ".join(
        f"{key}={format_significant(value, digits) if isinstance(value, float) else json.dumps(value)}"
        for key, value in record.items()
        if key not in {"name", "pass", "instance"}
    )
    return f"{status}{record['name']} {fields}"


def render(records: Sequence[Record], output_format: OutputFormat, digits: int) -> str:
    """Render records as JSON lines, CSV rows or text lines, with reals cut to `digits` significant digits."""
    rounded: list[Record] = [{k: _rounded(v, digits) for k, v in record.items()} for record in records]
    if output_format is OutputFormat.JSON:
        return "".join(json.dumps(record, ensure_ascii=False) + "\n" for record in rounded)
    if output_format is OutputFormat.TEXT:
        return "".join(_text_line(record, digits) + "\n" for record in rounded)
    buffer = io.StringIO()
    columns = list(dict.fromkeys(key for record in rounded for key in record))
    writer = csv.DictWriter(buffer, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for record in rounded:
        writer.writerow({k: json.dumps(v) if isinstance(v, dict | list) else v for k, v in record.items()})
    return buffer.getvalue()


def _write(text: str, settings: Settings) -> None:
    if settings.output.out is None:
        typer.echo(text, nl=False)
        return
    try:
        settings.output.out.write_text(text, encoding="utf-8")
    except OSError as error:
        raise ParseError(str(settings.output.out), error.strerror or "unwritable file") from error


def _emit(ctx: typer.Context, records: Sequence[Record], reports: Sequence[CheckReport] = ()) -> None:
    """Write the records; exit 2 if an asserted report failed."""
    settings = _settings(ctx)
    with _guard():
        _write(render(records, settings.output.format, settings.output.digits), settings)
    if any(report.failed for report in reports):
        raise typer.Exit(code=2)


def _parse_vector(literal: str) -> list[Any]:
    parts = [part.strip() for part in literal.split(",")]
    if not all(parts):
        raise ParseError("vector", f"empty coordinate in {literal!r}")
    return [parse_rational(part) for part in parts]


# ----------------------------------------------------------------------------------------------------------------------
# Commands


@app.command("degree")
def cmd_degree(ctx: typer.Context, file: BundleFile) -> None:
    """Adelic degree, slope and Euler characteristic of a bundle."""
    with _guard():
        bundle = load_bundle(file)
        record = {
            "name": "degree",
            "rank": bundle.rank,
            "hermitian": bundle.hermitian_flag,
            "degree": degree(bundle),
            "slope": slope(bundle),
            "euler_characteristic": euler_characteristic(bundle),
        }
    _emit(ctx, [record])


@app.command("polygon")
def cmd_polygon(
    ctx: typer.Context,
    file: BundleFile,
    svg: Annotated[Path | None, typer.Option(dir_okay=False, help="Render the polygon to an SVG file.")] = None,
) -> None:
    """Canonical polygon and slopes; convex body bundles get certified brackets."""
    settings = _settings(ctx)
    config = settings.enumeration
    with _guard():
        bundle = load_bundle(file)
        if bundle.hermitian_flag:
            polygon = canonical_polygon(bundle, config=config)
            record: Record = {
                "name": "polygon",
                "rank": polygon.n,
                "vertices": polygon.vertices,
                "slopes": polygon.slopes,
                "vertex_ranks": polygon.vertex_ranks,
                "certified": polygon.certified,
            }
        else:
            # plotted: the John polygon, a lower envelope
            polygon = canonical_polygon(john_bundle(bundle, settings.solver), config=config)
            record = {
                "name": "polygon",
                "rank": bundle.rank,
                "envelope": polygon_envelope(bundle, config=config, solver=settings.solver),
                "mu_bracket": mu_bracket(bundle, config=config, solver=settings.solver),
            }
        if svg is not None:
            polygon_to_svg(polygon, svg)
        if bundle.hermitian_flag and settings.output.format is OutputFormat.CSV:
            _write(polygon_to_csv(polygon), settings)
            return
    _emit(ctx, [record])


@app.command("minima")
def cmd_minima(ctx: typer.Context, file: BundleFile) -> None:
    """Successive minima of the lattice and their witnesses."""
    settings = _settings(ctx)
    with _guard():
        result = successive_minima(load_bundle(file), config=settings.enumeration, solver=settings.solver)
    _emit(ctx, [{"name": "minima", **result.model_dump(mode="json")}])


@app.command("john")
def cmd_john(ctx: typer.Context, file: BundleFile) -> None:
    """John and Löwner companions, volume ratios and the Banach-Mazur upper bound."""
    solver = _settings(ctx).solver
    with _guard():
        bundle = load_bundle(file)
        record = {
            "name": "john",
            "degree": degree(bundle),
            "john_degree": degree(john_bundle(bundle, solver)),
            "lowner_degree": degree(lowner_bundle(bundle, solver)),
            "volume_ratio": volume_ratio(bundle.body, solver),
            "vr_tilde": vr_tilde(bundle.body, solver),
            "delta_upper": delta_upper(bundle.body, solver),
        }
    _emit(ctx, [record])


@app.command("gamma")
def cmd_gamma(
    ctx: typer.Context,
    n: Annotated[int, typer.Argument(min=1, help="Number of variables.")],
    ell: Annotated[int, typer.Argument(min=0, help="Degree.")],
) -> None:
    """log γ_(n,ℓ), the mean log multinomial coefficient of degree ℓ in n variables."""
    with _guard():
        value = gamma_nl(n, ell)
    _emit(ctx, [{"name": "gamma", **value.model_dump(mode="json")}])


@app.command("height")
def cmd_height(
    ctx: typer.Context,
    file: BundleFile,
    vector: Annotated[str, typer.Argument(help='Comma separated rationals, e.g. "1,2/3,-1".')],
) -> None:
    """Height of a vector of the ambient space."""
    with _guard():
        value = height_vector(load_bundle(file), _parse_vector(vector))
    _emit(ctx, [{"name": "height", **value.model_dump(mode="json")}])


@app.command("scalar-extension")
def cmd_scalar_extension(ctx: typer.Context, file: BundleFile) -> None:
    """Degree of the extension of scalars to Q(i) against the degree over Q."""
    check = _settings(ctx).check
    with _guard():
        report = scalar_extension_check(load_bundle(file), samples=check.mc_samples, seed=check.seed)
    _emit(ctx, [report.to_record()], [report])


@app.command("verify")
def cmd_verify(
    ctx: typer.Context,
    suite: Annotated[SuiteName, typer.Argument(help="Suite to run.")],
    count: Annotated[int, typer.Argument(min=0, help="Generated instances per suite.")] = 10,
    seed: Annotated[int | None, typer.Argument(min=0, help="Seed (defaults to --seed).")] = None,
    workers: Annotated[int | None, typer.Option(min=1, help="Concurrent instances.")] = None,
) -> None:
    """Run a verification suite and print one report per check."""
    settings = _settings(ctx)
    with _guard():
        reports = anyio.run(partial(run_suite_async, suite, count, seed, settings=settings, workers=workers))
    summary = summarize(reports)
    typer.echo(
        f"{suite.value}: {summary.passed}/{summary.total} passed, {summary.failed} failed, "
        f"{summary.informational} informational",
        err=True,
    )
    _emit(ctx, [report.to_record() for report in reports], reports)


@app.command("suite-list")
def cmd_suite_list(ctx: typer.Context) -> None:
    """List the verification suites."""
    _emit(ctx, [{"name": suite.value, "description": text} for suite, text in SUITE_DESCRIPTIONS.items()])


def main(args: Sequence[str] | None = None) -> int:
    """Console entry point; usage errors exit with 1 like input errors."""
    try:
        code = app(args=list(args) if args is not None else None, standalone_mode=False)
    except click.UsageError as error:
        error.show()
        return 1
    except click.Abort:
        typer.echo("Aborted.", err=True)
        return 1
    return code if isinstance(code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
