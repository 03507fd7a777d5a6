"""Command-line experiment harness.

Artifacts are CSV files with a JSON provenance sidecar carrying the fully
resolved parameters; identical parameters and seed give byte-identical CSVs.
Exit codes: 0 success, 1 no factorization found / contradiction, 2 usage.
"""

from __future__ import annotations

import csv
import json
import math
import re
import sys
from pathlib import Path

import click

from . import __version__
from .clauses import ContradictionError, factor_oracle
from .device import default_device_model, parse_device_model
from .experiments import (
    PRESETS,
    landscape_rows,
    noise_sweep_rows,
    resolve_instance,
    run_rows,
    scaling_rows,
)
from .ising import hamiltonian_to_dict
from .noise import NoiseConfig
from .preprocessing import reduce_biprime
from .qaoa import OptimizerConfig, run_vqf
from .clauses import system_to_dict

_ANGLE_PATTERN = re.compile(r"^\s*(?P<num>\d+(?:\.\d+)?)?\s*(?P<pi>pi)?\s*(?:/\s*(?P<den>\d+(?:\.\d+)?))?\s*$")


def parse_angle(text: str) -> float:
    """Angles as decimals or pi fractions: '0.5', 'pi/6', '2pi/23'."""
    match = _ANGLE_PATTERN.match(text.lower())
    if not match or (match.group("num") is None and match.group("pi") is None):
        raise click.BadParameter(f"cannot parse angle '{text}'")
    value = float(match.group("num")) if match.group("num") else 1.0
    if match.group("pi"):
        value *= math.pi
    if match.group("den"):
        value /= float(match.group("den"))
    if value <= 0:
        raise click.BadParameter("angle must be positive")
    return value


def _write_rows(path: Path, rows: list[dict], provenance: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        raise click.ClickException("no rows produced")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    sidecar = path.with_suffix(path.suffix + ".provenance.json")
    with open(sidecar, "w", encoding="utf-8") as handle:
        json.dump({"tool": "vqfactor", "version": __version__, **provenance}, handle, indent=2, sort_keys=True)
        handle.write("\n")
    click.echo(f"wrote {path}")


def _noise_config(mode: str, cr_scheme: str, spectators: bool, device_path: str | None,
                  mapping: tuple[int, ...] | None) -> NoiseConfig:
    device = None
    if mode != "ideal":
        device = parse_device_model(device_path) if device_path else default_device_model()
    return NoiseConfig(mode=mode, cr_scheme=cr_scheme, spectators=spectators,
                       device=device, mapping=mapping)


def _mapping_for(token: str, explicit: str | None = None):
    if explicit:
        return tuple(int(v) for v in explicit.split(","))
    preset = PRESETS.get(token)
    return preset.qubit_mapping if preset else None


@click.group()
@click.version_option(__version__)
def main():
    """Variational quantum factoring pipeline and noise studies."""


@main.command()
@click.option("--n", "token", required=True, help="Biprime or preset name")
@click.option("--output", type=click.Path(path_type=Path), default=None)
def preprocess(token: str, output: Path | None):
    """Reduce a biprime's clause system and print/emit it as JSON."""
    try:
        system, hamiltonian, preset = resolve_instance(token)
    except ContradictionError as err:
        raise SystemExit(_fail(str(err)))
    payload = {
        "system": system_to_dict(system),
        "unknowns": len(system.unknowns),
    }
    text = json.dumps(payload, indent=2)
    if output:
        output.write_text(text + "\n", encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text)


@main.command()
@click.option("--n", "token", required=True, help="Biprime or preset name")
@click.option("--output", type=click.Path(path_type=Path), default=None)
def hamiltonian(token: str, output: Path | None):
    """Compile the reduced system to its diagonal cost operator (JSON)."""
    try:
        system, compiled, preset = resolve_instance(token)
    except ContradictionError as err:
        raise SystemExit(_fail(str(err)))
    text = json.dumps(hamiltonian_to_dict(compiled), indent=2)
    if output:
        output.write_text(text + "\n", encoding="utf-8")
        click.echo(f"wrote {output}")
    else:
        click.echo(text)


@main.command()
@click.option("--n", "token", required=True, help="Biprime or preset name")
@click.option("--layers", type=int, default=8, show_default=True)
@click.option("--mode", type=click.Choice(["ideal", "damping", "zz", "damping_and_zz"]), default="ideal")
@click.option("--cr-scheme", type=click.Choice(["single_pulse", "ecr_two_pulse"]), default="single_pulse")
@click.option("--spectators/--no-spectators", default=False)
@click.option("--device", "device_path", type=click.Path(exists=True), default=None)
@click.option("--mapping", default=None, help="Comma-separated device qubits")
@click.option("--res", "resolution", default=None, help="Grid resolution, e.g. pi/6")
@click.option("--shots", type=int, default=0, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--output", type=click.Path(path_type=Path), default=Path("factor.csv"))
def factor(token, layers, mode, cr_scheme, spectators, device_path, mapping, resolution, shots, seed, output):
    """Run the full pipeline on one instance and emit per-depth records."""
    try:
        system, compiled, preset = resolve_instance(token)
    except ContradictionError as err:
        raise SystemExit(_fail(str(err)))
    res_val = parse_angle(resolution) if resolution else (
        preset.grid_resolution if preset else math.pi / 6
    )
    config = OptimizerConfig(grid_resolution=res_val, shots=shots, seed=seed)
    noise = _noise_config(mode, cr_scheme, spectators, device_path, _mapping_for(token, mapping))
    result = run_vqf(system, compiled, layers, config, noise)
    rows = run_rows(token, result, noise, config)
    _write_rows(output, rows, {
        "command": "factor", "instance": token, "layers": layers, "mode": mode,
        "cr_scheme": cr_scheme, "spectators": spectators, "shots": shots, "seed": seed,
        "grid_resolution": res_val, "factors": list(result.factors) if result.factors else None,
    })
    if result.factors:
        p, q = result.factors
        click.echo(f"factors: {p} x {q} = {p * q}")
    else:
        raise SystemExit(_fail("no satisfying bitstring observed"))


@main.command()
@click.option("--n", "token", required=True)
@click.option("--layer", type=int, default=1, show_default=True)
@click.option("--res", "resolution", default="pi/6", show_default=True)
@click.option("--mode", type=click.Choice(["ideal", "damping", "zz", "damping_and_zz"]), default="ideal")
@click.option("--cr-scheme", type=click.Choice(["single_pulse", "ecr_two_pulse"]), default="single_pulse")
@click.option("--spectators/--no-spectators", default=False)
@click.option("--device", "device_path", type=click.Path(exists=True), default=None)
@click.option("--mapping", default=None)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output", type=click.Path(path_type=Path), default=Path("landscape.csv"))
def landscape(token, layer, resolution, mode, cr_scheme, spectators, device_path, mapping, seed, output):
    """Energy landscape of one layer on the [0, 2pi)^2 grid."""
    try:
        system, compiled, preset = resolve_instance(token)
    except ContradictionError as err:
        raise SystemExit(_fail(str(err)))
    res_val = parse_angle(resolution)
    noise = _noise_config(mode, cr_scheme, spectators, device_path, _mapping_for(token, mapping))
    config = OptimizerConfig(
        grid_resolution=preset.grid_resolution if preset else res_val, seed=seed
    )
    rows = landscape_rows(system, compiled, layer, res_val, noise=noise, config=config)
    _write_rows(output, rows, {
        "command": "landscape", "instance": token, "layer": layer, "resolution": res_val,
        "mode": mode, "cr_scheme": cr_scheme, "spectators": spectators, "seed": seed,
    })


@main.command("noise-sweep")
@click.option("--n", "token", required=True)
@click.option("--layers", type=int, default=20, show_default=True)
@click.option("--res", "resolution", default="pi/6", show_default=True)
@click.option("--t2-grid", default="10,25,50,100", show_default=True, help="us values")
@click.option("--t1-grid", default="10,25,50,100", show_default=True, help="us values")
@click.option("--xi-grid", default="10,25,50,100", show_default=True, help="kHz values")
@click.option("--gate-ns", type=float, default=315.0, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--output", type=click.Path(path_type=Path), default=Path("noise_sweep.csv"))
def noise_sweep(token, layers, resolution, t2_grid, t1_grid, xi_grid, gate_ns, seed, output):
    """Success-rate curves under isolated noise channels (exact probabilities)."""
    try:
        system, compiled, preset = resolve_instance(token)
    except ContradictionError as err:
        raise SystemExit(_fail(str(err)))
    config = OptimizerConfig(grid_resolution=parse_angle(resolution), seed=seed,
                             gradient_method="adjoint")
    grids = {key: tuple(float(v) for v in text.split(","))
             for key, text in (("t2", t2_grid), ("t1", t1_grid), ("xi", xi_grid))}
    rows = noise_sweep_rows(system, compiled, layers, config,
                            t2_grid_us=grids["t2"], t1_grid_us=grids["t1"],
                            xi_grid_khz=grids["xi"], gate_ns=gate_ns)
    _write_rows(output, rows, {
        "command": "noise-sweep", "instance": token, "layers": layers, "seed": seed,
        "resolution": config.grid_resolution, "t2_grid_us": grids["t2"],
        "t1_grid_us": grids["t1"], "xi_grid_khz": grids["xi"], "gate_ns": gate_ns,
    })


@main.command()
@click.option("--max-bits", type=int, default=16, show_default=True)
@click.option("--min-bits", type=int, default=6, show_default=True)
@click.option("--samples", type=int, default=50, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--output", type=click.Path(path_type=Path), default=Path("scaling.csv"))
def scaling(max_bits, min_bits, samples, seed, output):
    """Qubit counts and operator locality over random biprimes per bit length."""
    rows = scaling_rows(max_bits, samples, seed, min_bits=min_bits)
    _write_rows(output, rows, {
        "command": "scaling", "max_bits": max_bits, "min_bits": min_bits,
        "samples": samples, "seed": seed,
    })


@main.command()
@click.option("--n", type=int, required=True)
def oracle(n: int):
    """Trial-division factorization (classical cross-check)."""
    p, q = factor_oracle(n)
    click.echo(f"{p} x {q} = {p * q}")


def _fail(message: str) -> int:
    click.echo(f"error: {message}", err=True)
    return 1


if __name__ == "__main__":
    main()
