"""Command line entry points.

Exit codes: 0 all checks pass, 2 at least one threshold check failed,
1 configuration or computation error.
"""

from __future__ import annotations

import csv as csvmod
import json
import sys
from pathlib import Path

import click

from .errors import CfxError
from .estimators import debiased_estimate, spot_var
from .harness import fit_order, load_config, model_from_dict, run
from .model import assumption_report
from .spanning import bs_option_curve, span_cf, strike_grid_design


@click.group()
def cli():
    """Small-tenor CF expansions and option-implied variance estimators."""


@cli.command("run")
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", default="runs", show_default=True,
              help="directory for manifest and CSV output")
def run_cmd(config, out):
    """Run the experiment described by a TOML config file."""
    cfg = load_config(config)
    manifest = run(cfg, Path(out) / cfg.kind)
    for c in manifest["checks"]:
        status = "PASS" if c["passed"] else "FAIL"
        click.echo(f"[{status}] {c['name']}: value={c['value']:.6g} "
                   f"threshold={c['threshold']:.6g}")
    click.echo(f"results in {Path(out) / cfg.kind}")
    if not manifest["passed"]:
        sys.exit(2)


@cli.command()
@click.option("--sigma", default=0.2, show_default=True)
@click.option("--tenor", "-T", default=0.25, show_default=True)
@click.option("--coverage", default=10.0, show_default=True,
              help="strike grid half-width in sigma*sqrt(T) units")
@click.option("--spacing-frac", default=1.0 / 50.0, show_default=True)
@click.option("-u", "freqs", multiple=True, type=float,
              default=(0.5, 1.0, 2.0, 3.0), show_default=True)
def span(sigma, tenor, coverage, spacing_frac, freqs):
    """Span a Black-Scholes option curve into CF values and spot variance."""
    k = strike_grid_design(sigma, tenor, coverage, spacing_frac=spacing_frac)
    curve = bs_option_curve(0.0, sigma, tenor, k)
    cf = span_cf(curve, list(freqs), tenor)
    for row in cf.to_rows():
        click.echo(f"u={row['u']:g} re={row['re']:+.8f} im={row['im']:+.8f} "
                   f"err_est={row['stderr']:.2e}")
    est = spot_var(cf.value_at(freqs[-1]), freqs[-1], tenor)
    click.echo(f"spot variance at u={freqs[-1]:g}: {est.value:.6f} "
               f"(true {sigma ** 2:.6f})")


@cli.command()
@click.option("--re", "re_", type=float, required=True, help="Re of the CF")
@click.option("--im", "im_", type=float, required=True, help="Im of the CF")
@click.option("-u", "freq", type=float, default=2.0, show_default=True)
@click.option("--tenor", "-T", type=float, required=True)
@click.option("--re2", type=float, default=None,
              help="Re of the CF at the second maturity (enables debiasing)")
@click.option("--im2", type=float, default=None)
@click.option("--tau", type=float, default=1.5, show_default=True)
@click.option("--transform", default="x", show_default=True,
              type=click.Choice(["x", "sqrt", "log", "logsqrt"]))
def estimate(re_, im_, freq, tenor, re2, im2, tau, transform):
    """Spot-variance (or transform) estimate from CF values."""
    cf = complex(re_, im_)
    if re2 is None:
        est = spot_var(cf, freq, tenor)
        value = est.value
        if transform != "x":
            from .estimators import transform_estimate
            value = transform_estimate(est.value, transform)
        flag = " (clamped)" if est.clamped else ""
        click.echo(f"{value:.8g}{flag}")
    else:
        if im2 is None:
            raise click.UsageError("--re2 requires --im2")
        est = debiased_estimate(cf, complex(re2, im2), freq, tenor, tau,
                                transform)
        flag = " (clamped)" if est.clamped else ""
        click.echo(f"{est.value:.8g}{flag}")


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
def validate(config):
    """Build the configured model and print its assumption report."""
    cfg = load_config(config)
    model = model_from_dict(cfg.model)
    rep = assumption_report(model)
    click.echo(json.dumps(rep, indent=2, default=str))
    if not rep["passes"]:
        sys.exit(2)


@cli.command()
@click.argument("csvfile", type=click.Path(exists=True, dir_okay=False))
@click.option("--scale-col", default="T", show_default=True)
@click.option("--resid-col", default="resid_norm", show_default=True)
@click.option("--threshold", type=float, default=None,
              help="minimum slope to pass")
def fit(csvfile, scale_col, resid_col, threshold):
    """Least-squares order fit of a residual column against a scale column."""
    scales, resids = [], []
    with open(csvfile, newline="") as fh:
        for row in csvmod.DictReader(fh):
            scales.append(float(row[scale_col]))
            resids.append(float(row[resid_col]))
    result = fit_order(scales, resids, threshold)
    click.echo(f"slope={result.slope:.4f} stderr={result.stderr:.4f} "
               f"intercept={result.intercept:.4f} n={len(scales)}")
    if threshold is not None and not result.passed:
        sys.exit(2)


def main():
    try:
        cli(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        sys.exit(exc.exit_code)
    except click.Abort:
        sys.exit(1)
    except CfxError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
