"""Command-line interface."""

import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor, as_completed
from io import StringIO

import click
import numpy as np
from tqdm import tqdm

from rankprecond.algebras import describe
from rankprecond.blackdot import (
    AlgebraPlusLowRank,
    optimal_rank_preconditioner,
    positivity_repair,
)
from rankprecond.config import load_config
from rankprecond.errors import (
    ConfigError,
    DenseCapExceeded,
    NotConverged,
    RankPrecondError,
    UnsupportedCombination,
)
from rankprecond.explicit import precond_hankel, precond_hartley_kms, precond_symbol
from rankprecond.solvers import gmres, pcg, spectrum
from rankprecond.util import complex_to_json, vector_to_json

logger = logging.getLogger(__name__)

BENCH_FIELDS = [
    "n",
    "method",
    "achieved_rank",
    "iterations",
    "converged",
    "outliers",
    "wall_time",
]
SPECTRUM_FIELDS = ["n", "index", "re", "im", "outlier"]
HISTORY_FIELDS = ["n", "method", "iteration", "residual"]

# First match wins.
EXIT_CODES = (
    (NotConverged, 1),
    (ConfigError, 3),
    (DenseCapExceeded, 3),
    (RankPrecondError, 2),
    (ValueError, 2),
)


def exit_code(exc):
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 2


def _fail(exc):
    click.echo(f"{type(exc).__name__}: {exc}", err=True)
    sys.exit(exit_code(exc))


def build_preconditioner(config, n):
    """Preconditioner of size n for a campaign, or None for method "none"."""
    method = config["method"]
    if method == "none":
        return None
    algebra_id = config.algebra_id
    epsilon = config["epsilon"]
    if method == "blackdot":
        return optimal_rank_preconditioner(
            config.matrix_at(n),
            algebra_id,
            epsilon=epsilon,
            r_max=config["r_max"],
            diag_mode=config["diag_mode"],
            delta=config["delta"],
        )
    name = method.partition(":")[2] or "symbol"
    spec = config.symbol
    if spec is None:
        raise UnsupportedCombination("Explicit splittings need a symbol description.")
    if name == "hartley_kms":
        if spec.variant != "kms" or algebra_id.family != "hartley":
            raise UnsupportedCombination(
                "explicit:hartley_kms needs a kms symbol and a Hartley algebra."
            )
        preconditioner = precond_hartley_kms(n, spec["lam"], algebra_id)
    elif config.structure == "hankel":
        if name not in ("hankel", "symbol"):
            raise UnsupportedCombination(
                f"explicit:{name} does not apply to Hankel matrices."
            )
        preconditioner = precond_hankel(spec, n, algebra_id, epsilon)
    else:
        if name == "hankel":
            raise UnsupportedCombination("explicit:hankel needs a Hankel matrix.")
        if name != "symbol" and name != spec.variant:
            raise UnsupportedCombination(
                f"explicit:{name} does not match the {spec.variant} symbol."
            )
        if algebra_id.family != "circ":
            raise UnsupportedCombination(
                "Explicit splittings of Toeplitz matrices target phi-circulants, "
                f"not {algebra_id.token}."
            )
        preconditioner = precond_symbol(spec, n, algebra_id.phi, epsilon)
    if config["delta"] is not None:
        preconditioner = positivity_repair(preconditioner, config["delta"])
    return preconditioner


def _right_hand_side(config, n, dtype):
    rng = np.random.default_rng([config["seed"], n])
    b = rng.standard_normal(n)
    if np.issubdtype(dtype, np.complexfloating):
        b = b + 1j * rng.standard_normal(n)
    return b


def _solve(config, matrix, preconditioner):
    b = _right_hand_side(config, matrix.n, matrix.dtype)
    options = dict(
        tol=config["tol"],
        maxit=config["maxit"],
        outlier_epsilon=config["outlier_epsilon"],
        dense_cap=config["dense_cap"],
        raise_on_failure=False,
    )
    if config["solver"] == "cg":
        return pcg(matrix, preconditioner, b, **options)
    return gmres(matrix, preconditioner, b, restart=config["restart"], **options)


def _load_preconditioners(path):
    try:
        with open(path) as f:
            obj = json.load(f)
        return {
            int(item["n"]): AlgebraPlusLowRank.from_json(item)
            for item in obj["preconditioners"]
        }
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ConfigError(f"Cannot read preconditioners from {path}: {exc}")


def bench_size(config, n, preconditioners=None, timings=False):
    """Solve one size of a campaign.

    Returns
    -------
    rows : list of dict
        Benchmark rows, the control row last when enabled.
    histories : list of dict
        Residual history rows.
    """
    matrix = config.matrix_at(n)
    if preconditioners is not None:
        if n not in preconditioners:
            raise ConfigError(f"No stored preconditioner for n={n}.")
        runs = [(config["method"], preconditioners[n])]
    else:
        runs = [(config["method"], build_preconditioner(config, n))]
    if config["control"] and config["method"] != "none":
        runs.append(("none", None))
    rows, histories = [], []
    for method, preconditioner in runs:
        report = _solve(config, matrix, preconditioner)
        rank = "" if preconditioner is None else preconditioner.achieved_rank
        outliers = report.cluster_outliers
        rows.append(
            {
                "n": n,
                "method": method,
                "achieved_rank": rank,
                "iterations": report.iterations,
                "converged": int(report.converged),
                "outliers": "" if outliers is None else outliers,
                "wall_time": f"{report.wall_time:.6f}" if timings else "",
            }
        )
        histories.extend(
            {"n": n, "method": method, "iteration": k, "residual": float(r)}
            for k, r in enumerate(report.residual_history)
        )
    return rows, histories


def _write_csv(rows, fieldnames, out):
    if out:
        with open(out, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames, lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return
    with StringIO() as f:
        w = csv.DictWriter(f, fieldnames, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        click.echo(f.getvalue(), nl=False)


def _write_json(obj, out):
    dump = json.dumps(obj, indent=True)
    if out:
        with open(out, "w") as f:
            f.write(dump + "\n")
    else:
        click.echo(dump)


def _campaign(path, out, dense_cap, seed):
    config = load_config(path)
    return config.overridden(output=out, dense_cap=dense_cap, seed=seed)


def _check_dense_cap(config):
    too_large = [n for n in config.sizes if n > config["dense_cap"]]
    if too_large:
        raise DenseCapExceeded(
            f"Sizes {too_large} are above the dense cap {config['dense_cap']}."
        )


@click.group()
@click.option("-v", "--verbose", is_flag=True, default=False, help="Debug logging.")
def cli(verbose):
    if verbose:
        logging.basicConfig(level=logging.DEBUG)


def campaign_options(command):
    options = [
        click.option(
            "--config",
            "-c",
            "config_path",
            type=click.Path(dir_okay=False),
            required=True,
            help="Campaign JSON file.",
        ),
        click.option(
            "--out", "-o", type=click.Path(dir_okay=False), help="Output file."
        ),
        click.option(
            "--dense-cap", type=click.INT, help="Max. n for dense diagnostics."
        ),
        click.option("--seed", type=click.INT, help="Seed of the right-hand sides."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


@click.command()
@campaign_options
def build(config_path, out, dense_cap, seed):
    """Build preconditioners and write them as JSON."""
    try:
        config = _campaign(config_path, out, dense_cap, seed)
        preconditioners = [build_preconditioner(config, n) for n in config.sizes]
    except (RankPrecondError, ValueError) as exc:
        _fail(exc)
    if any(pr is None for pr in preconditioners):
        _fail(UnsupportedCombination('Method "none" builds no preconditioner.'))
    _write_json(
        {
            "schema": config["schema"],
            "algebra": config.algebra_id.token,
            "method": config["method"],
            "preconditioners": [pr.to_json() for pr in preconditioners],
        },
        config["output"],
    )


@click.command()
@campaign_options
@click.option(
    "--threads", "-t", type=click.INT, default=1, help="Sizes solved in parallel."
)
@click.option(
    "--preconditioners",
    "-p",
    "stored",
    type=click.Path(dir_okay=False),
    help="Preconditioners written by `build`.",
)
@click.option(
    "--history", type=click.Path(dir_okay=False), help="Residual history CSV."
)
@click.option(
    "--timings", is_flag=True, default=False, help="Fill the wall_time column."
)
@click.option("--quiet", "-q", is_flag=True, default=False, help="No progress bar.")
def bench(config_path, out, dense_cap, seed, threads, stored, history, timings, quiet):
    """Solve the campaign systems and write one CSV row per size."""
    try:
        config = _campaign(config_path, out, dense_cap, seed)
        preconditioners = _load_preconditioners(stored) if stored else None
    except (RankPrecondError, ValueError) as exc:
        _fail(exc)

    results, failure = {}, None
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        futures = {
            pool.submit(bench_size, config, n, preconditioners, timings): n
            for n in config.sizes
        }
        with tqdm(total=len(futures), unit="size", disable=quiet) as pbar:
            for future in as_completed(futures):
                n = futures[future]
                try:
                    results[n] = future.result()
                except (RankPrecondError, ValueError) as exc:
                    logger.debug("Size %d failed: %s", n, exc)
                    if failure is None or n < failure[0]:
                        failure = (n, exc)
                pbar.update(1)

    rows = [row for n in sorted(results) for row in results[n][0]]
    _write_csv(rows, BENCH_FIELDS, config["output"])
    if history:
        histories = [h for n in sorted(results) for h in results[n][1]]
        _write_csv(histories, HISTORY_FIELDS, history)
    if failure is not None:
        _fail(failure[1])
    if not all(row["converged"] for row in rows):
        click.echo("NotConverged: some solves did not reach the tolerance.", err=True)
        sys.exit(1)


@click.command()
@campaign_options
@click.option(
    "--epsilon",
    type=click.FLOAT,
    default=None,
    help="Cluster radius around 1, defaults to outlier_epsilon.",
)
def spectrum_command(config_path, out, dense_cap, seed, epsilon):
    """Write the eigenvalues of the preconditioned matrices as CSV."""
    rows = []
    try:
        config = _campaign(config_path, out, dense_cap, seed)
        _check_dense_cap(config)
        radius = config["outlier_epsilon"] if epsilon is None else epsilon
        for n in config.sizes:
            matrix = config.matrix_at(n)
            preconditioner = build_preconditioner(config, n)
            values = spectrum(matrix, preconditioner, config["dense_cap"])
            if radius is not None:
                count = int(np.sum(np.abs(values - 1) > radius))
                logger.debug("n=%d: %d outliers at radius %g.", n, count, radius)
            rows.extend(
                {
                    "n": n,
                    "index": k,
                    "re": float(np.real(z)),
                    "im": float(np.imag(z)),
                    "outlier": "" if radius is None else int(abs(z - 1) > radius),
                }
                for k, z in enumerate(values)
            )
    except (RankPrecondError, ValueError) as exc:
        _fail(exc)
    _write_csv(rows, SPECTRUM_FIELDS, config["output"])


@click.command()
@click.argument("token", type=click.STRING)
@click.option("--size", "-n", type=click.INT, default=8, help="Matrix size.")
def info(token, size):
    """Describe an algebra and its generator eigenvalues."""
    try:
        summary = describe(token, size)
    except (RankPrecondError, ValueError) as exc:
        _fail(exc)
    for key in ("eigenvalues", "second_eigenvalues"):
        if key in summary:
            summary[key] = vector_to_json(summary[key])
    if summary.get("phi") is not None:
        summary["phi"] = complex_to_json(summary["phi"])
    click.echo(json.dumps(summary, indent=True))


cli.add_command(build)
cli.add_command(bench)
cli.add_command(spectrum_command, name="spectrum")
cli.add_command(info)


if __name__ == "__main__":
    cli()
