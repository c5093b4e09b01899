"""Command-line interface.

Subcommands: decode one syndrome, Monte Carlo sampling to CSV, threshold
estimation to JSON, offline DEM compression, and brute-force oracles for
small instances.  Exit codes: 0 success, 2 input error, 3 numerical
failure.
"""
from __future__ import annotations

import csv
import json
import os
import sys

import click
import numpy as np

from .codes import five_qubit_code, surface_code_2d, surface_code_3d
from .dem import (
    CompressedCubicNetwork,
    CompressionError,
    DemParseError,
    brute_force_class_probs,
    compress_dem,
    parse_dem,
)
from .harness import (
    ContractionConfig,
    CssSectorProblem,
    CubicDepolarizingProblem,
    DemProblem,
    StabilizerProblem,
    decode as _decode,
    estimate_crossing,
    logical_error_rate,
)
from .noise import depolarizing
from .tensornet import ContractionCapError


class InputError(click.ClickException):
    exit_code = 2


def _fail_numerical(exc) -> "NoReturn":
    click.echo(f"numerical failure: {exc}", err=True)
    sys.exit(3)


_NUMERICAL = (
    FloatingPointError,
    CompressionError,
    ContractionCapError,
    np.linalg.LinAlgError,
    OverflowError,
)


def _make_problem(code, dem, picture, sector, p, d, chi_compress=None):
    if (code is None) == (dem is None):
        raise InputError("give exactly one of --code or --dem")
    if dem is not None:
        try:
            with open(dem) as f:
                model = parse_dem(f.read())
        except OSError as exc:
            raise InputError(str(exc))
        if p is not None and p != 1.0:
            model = model.scaled(p)
        if chi_compress:
            state = compress_dem(model, chi_compress)
            return DemProblem(
                state.model, network_builder=lambda mdl, m, ports: state.decoding_network(m, ports)
            )
        return DemProblem(model)
    if p is None:
        raise InputError("--p is required with --code")
    if code == "five-qubit":
        _, tab = five_qubit_code()
        return StabilizerProblem(tab, [depolarizing(p)] * tab.n, picture)
    if code == "surface2d":
        if sector == "both":
            raise InputError("2D decoding is per sector; use --sector x or z")
        return CssSectorProblem(surface_code_2d(d), sector, p, picture)
    if code == "surface3d":
        c = surface_code_3d(d)
        if sector == "both":
            if picture != "detector":
                raise InputError("depolarizing 3D decoding uses the detector picture")
            return CubicDepolarizingProblem(c, p)
        return CssSectorProblem(c, sector, p, picture)
    raise InputError(f"unknown code {code!r}")


def _parse_syndrome(s, expected=None):
    if s is None:
        raise InputError("--syndrome is required")
    if not set(s) <= {"0", "1"}:
        raise InputError("syndrome must be a string of 0s and 1s")
    m = np.array([int(c) for c in s], dtype=np.uint8)
    if expected is not None and len(m) != expected:
        raise InputError(f"syndrome length {len(m)} != expected {expected}")
    return m


def _config(engine, chi_peps, chi_split, chi_mps):
    return ContractionConfig(
        engine=engine, chi_peps=chi_peps, chi_split=chi_split, chi_mps=chi_mps
    )


base_options = [
    click.option("--code", type=click.Choice(["five-qubit", "surface2d", "surface3d"])),
    click.option("--dem", type=click.Path(), help="detector error model file"),
    click.option("--picture", type=click.Choice(["detector", "generator"]), default="detector"),
    click.option("--sector", type=click.Choice(["x", "z", "both"]), default="both"),
    click.option("--chi-peps", type=int, default=24),
    click.option("--chi-split", type=int, default=8),
    click.option("--chi-mps", type=int, default=32),
    click.option("--chi-compress", type=int, default=None),
    click.option(
        "--engine",
        type=click.Choice(["auto", "exact", "mps", "sweep"]),
        default="auto",
    ),
]


single_point_options = [
    click.option("--p", type=float, default=None, help="physical error rate / DEM scale"),
    click.option("--d", type=int, default=3, help="code distance"),
]


def with_base_options(f):
    for opt in reversed(base_options):
        f = opt(f)
    return f


def with_problem_options(f):
    f = with_base_options(f)
    for opt in reversed(single_point_options):
        f = opt(f)
    return f


@click.group()
def main():
    """Tensor-network maximum-likelihood decoding."""


@main.command("decode")
@with_problem_options
@click.option("--syndrome", help="detector outcomes as a 0/1 string")
def decode_cmd(code, dem, picture, sector, p, d, chi_peps, chi_split, chi_mps,
               chi_compress, engine, syndrome):
    """Decode one syndrome and print the class values."""
    problem = _make_problem(code, dem, picture, sector, p, d, chi_compress)
    m = _parse_syndrome(syndrome)
    config = _config(engine, chi_peps, chi_split, chi_mps)
    try:
        res = _decode(problem, m, config)
    except _NUMERICAL as exc:
        _fail_numerical(exc)
    except ValueError as exc:
        raise InputError(str(exc))
    for i, v in enumerate(res.class_values):
        click.echo(f"class {i}: {v.value:.12e}")
    click.echo(f"chosen class: {res.chosen_class}")


@main.command("sample")
@with_problem_options
@click.option("--shots", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True, help="CSV output path")
def sample_cmd(code, dem, picture, sector, p, d, chi_peps, chi_split, chi_mps,
               chi_compress, engine, shots, seed, out):
    """Monte Carlo logical-error-rate run; appends a CSV row per run and
    writes a JSON manifest of the configuration next to it."""
    problem = _make_problem(code, dem, picture, sector, p, d, chi_compress)
    config = _config(engine, chi_peps, chi_split, chi_mps)
    try:
        rec = logical_error_rate(problem, shots, seed, config, d=d, p=p)
    except _NUMERICAL as exc:
        _fail_numerical(exc)
    new = not os.path.exists(out)
    with open(out, "a", newline="") as f:
        w = csv.writer(f)
        if new:
            w.writerow(["problem", "p", "d", "shots", "failures", "rate",
                        "stderr", "seed", "seconds"])
        w.writerow([rec.problem_id, rec.p, rec.d, rec.shots, rec.failures,
                    f"{rec.rate:.6g}", f"{rec.stderr:.3g}", rec.seed,
                    f"{rec.wall_time:.1f}"])
    manifest = os.path.splitext(out)[0] + ".config.json"
    with open(manifest, "w") as f:
        json.dump(
            {"engine": config.engine, "chi_peps": config.chi_peps,
             "chi_split": config.chi_split, "chi_mps": config.chi_mps,
             "cutoff": config.cutoff, "picture": picture, "sector": sector},
            f, indent=2)
    click.echo(f"rate {rec.rate:.4g} +- {rec.stderr:.2g} "
               f"({rec.failures}/{rec.shots} failures, {rec.wall_time:.1f}s)")


@main.command("threshold")
@with_base_options
@click.option("--p", "ps", type=float, multiple=True, required=True)
@click.option("--d", "ds", type=int, multiple=True, required=True)
@click.option("--shots", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--out", type=click.Path(), required=True, help="JSON output path")
def threshold_cmd(code, dem, picture, sector, chi_peps, chi_split,
                  chi_mps, chi_compress, engine, ps, ds, shots, seed, out):
    """Sweep a p grid for two distances and estimate the crossing."""
    if len(ds) != 2:
        raise InputError("give exactly two --d values")
    if len(ps) < 3:
        raise InputError("give at least three --p values")
    config = _config(engine, chi_peps, chi_split, chi_mps)
    ps = sorted(ps)
    curves = {}
    try:
        for dist in ds:
            rates = []
            for idx, pp in enumerate(ps):
                problem = _make_problem(code, dem, picture, sector, pp, dist,
                                        chi_compress)
                rec = logical_error_rate(
                    problem, shots, seed + 100 * dist + idx, config, d=dist, p=pp
                )
                rates.append(rec.rate)
                click.echo(f"d={dist} p={pp}: {rec.rate:.4g}", err=True)
            curves[dist] = rates
        cross = estimate_crossing(ps, curves, shots)
    except _NUMERICAL as exc:
        _fail_numerical(exc)
    result = {
        "ps": ps, "shots": shots, "curves": {str(k): v for k, v in curves.items()},
        "crossing_found": cross.found, "p_c": cross.p_c, "interval": cross.interval,
    }
    with open(out, "w") as f:
        json.dump(result, f, indent=2)
    click.echo(json.dumps(result))


@main.command("compress-dem")
@click.option("--dem", type=click.Path(), required=True)
@click.option("--chi-compress", type=int, default=None)
@click.option("--out", type=click.Path(), required=True, help="cache file (.npz)")
def compress_cmd(dem, chi_compress, out):
    """Compress a detector error model onto a cubic lattice (offline)."""
    try:
        with open(dem) as f:
            model = parse_dem(f.read())
    except (OSError, DemParseError) as exc:
        raise InputError(str(exc))
    try:
        state = compress_dem(model, chi_compress)
        state.save(out)
    except _NUMERICAL as exc:
        _fail_numerical(exc)
    dims = "x".join(str(v) for v in state.dims)
    bd = state.bond_dims()
    click.echo(f"compressed {state.model.n_mechanisms} mechanisms onto {dims} "
               f"lattice, max bond {max(bd.values()) if bd else 1} -> {out}")


@main.command("oracle")
@with_problem_options
@click.option("--syndrome", help="detector outcomes as a 0/1 string")
def oracle_cmd(code, dem, picture, sector, p, d, chi_peps, chi_split, chi_mps,
               chi_compress, engine, syndrome):
    """Brute-force reference class probabilities for small instances."""
    if dem is not None:
        try:
            with open(dem) as f:
                model = parse_dem(f.read())
        except (OSError, DemParseError) as exc:
            raise InputError(str(exc))
        if p is not None and p != 1.0:
            model = model.scaled(p)
        m = _parse_syndrome(syndrome, model.n_detectors)
        try:
            probs = brute_force_class_probs(model, m)
        except ValueError as exc:
            raise InputError(str(exc))
    else:
        problem = _make_problem(code, None, picture, sector, p, d)
        if getattr(problem, "code", None) is not None and problem.code.n > 16:
            raise InputError("oracle instances are limited to n <= 16")
        m = _parse_syndrome(syndrome)
        probs = _oracle_probs(problem, m)
    for i, v in enumerate(probs):
        click.echo(f"class {i}: {v:.12e}")
    click.echo(f"chosen class: {int(np.argmax(probs))}")


def _oracle_probs(problem, m):
    """Exhaustive enumeration oracle over error patterns."""
    if isinstance(problem, StabilizerProblem):
        import itertools

        from .pauli import PauliOperator, decompose, syndrome_of

        tab = problem.tableau
        if tab.n > 10:
            raise InputError("stabilizer oracle is limited to n <= 10")
        if len(m) != tab.n - tab.k:
            raise InputError("bad syndrome length")
        out = np.zeros(4 ** tab.k)
        for ds in itertools.product(range(4), repeat=tab.n):
            x = np.array([(v == 1) | (v == 2) for v in ds], np.uint8)
            z = np.array([(v == 2) | (v == 3) for v in ds], np.uint8)
            e = PauliOperator(x, z)
            if not np.array_equal(syndrome_of(e, tab), m):
                continue
            dec = decompose(e, tab)
            idx = 0
            for j in range(tab.k):
                idx = (idx << 1) | int(dec.logical_b[j])
            for j in range(tab.k):
                idx = (idx << 1) | int(dec.logical_a[j])
            w = 1.0
            for q, v in enumerate(ds):
                w *= problem.noise[q].probs[v]
            out[idx] += w
        return out
    if isinstance(problem, CssSectorProblem):
        n = problem.code.n
        if len(m) != problem.h.shape[0]:
            raise InputError("bad syndrome length")
        pats = ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.uint8)
        syn = pats @ problem.h.T % 2
        match = np.all(syn == m, axis=1)
        w = np.prod(
            np.where(pats == 1, problem.p, 1 - problem.p), axis=1
        )
        cls = pats @ problem.con_log % 2
        out = np.zeros(2)
        np.add.at(out, cls[match], w[match])
        return out
    raise InputError("no oracle for this problem type")


if __name__ == "__main__":
    main()
