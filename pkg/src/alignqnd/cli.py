"""Command-line interface: ``alignqnd run | sweep | kernel-check | validate``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .config import ConfigError, RunConfig, load_config
from .couplings import CouplingSet, coupling_set, sweep_detuning
from .kernel_solver import (
    NumericalError,
    collective_output_variance,
    exact_double_pass_conditional_variance,
    grid_double_pass_conditional_variance,
    pde_oracle,
)
from .scenarios import (
    ScenarioConfig,
    build_tensorial_single,
    run_scenario,
    to_db,
)
from .gaussian import check_symplectic

__all__ = ["main", "scenario_report", "sweep_rows", "kernel_check", "SWEEP_HEADER"]

log = logging.getLogger("alignqnd")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 2, 3

SWEEP_HEADER = ("delta_norm", "kappa_v", "kappa_t", "eps_p", "eps_a",
                "predicted_conditional_variance", "squeezing_db", "masked")

# quantity reported as the headline figure of each geometry, with its vacuum reference
HEADLINE = {
    "vectorial_single_pass": ("p|sy", 1.0),
    "tensorial_single_pass": ("x|sy", 1.0),
    "mixed_single_pass": ("x|sy", 1.0),
    "double_pass": ("x|sy", 1.0),
    "double_cell": ("xa+xb|sy", 2.0),
    "double_cell_two_pulse": ("epr", 4.0),
}


def _g(x: float) -> str:
    return f"{x:.6g}"


def _couplings(cfg: RunConfig) -> CouplingSet:
    params = cfg.params()
    double = cfg.scenario.geometry.startswith("double")
    cs = coupling_set(params, doubled=double)
    sc = cfg.scenario
    if sc.kappa_v is not None:
        cs = replace(cs, kappa_v=float(sc.kappa_v))
    if sc.kappa_t is not None:
        cs = replace(cs, kappa_t=float(sc.kappa_t))
    return cs


def _scenario(cfg: RunConfig, cs: CouplingSet, noise: bool) -> ScenarioConfig:
    sc = cfg.scenario
    # eps already carries the doubling; undo it so add_noise can apply its own
    base = cs
    if sc.geometry.startswith("double"):
        base = replace(cs, eps_a=cs.eps_a / 2, eps_p=cs.eps_p / 2, eps_prime=cs.eps_prime / 2)
    return ScenarioConfig(
        geometry=sc.geometry, coupling=base, include_noise=noise,
        larmor_phase=sc.larmor_phase, compensate_light_shift=sc.compensate_light_shift,
        photons_n=cfg.experiment.photons_n or 1.0, atoms_n=cfg.experiment.atoms_n or 1.0,
    )


def _headline(result) -> Tuple[str, float, float]:
    key, ref = HEADLINE[result.geometry]
    v = result.epr if key == "epr" else result.conditional_variances[key]
    return key, v, to_db(v, ref)


def scenario_report(cfg: RunConfig) -> Tuple[str, Dict]:
    """Evaluate the configured scenario; return ``(text report, JSON-able record)``."""
    cs = _couplings(cfg)
    geometry = cfg.scenario.geometry
    gamma = cfg.manifold.gamma_mhz
    lossless = run_scenario(_scenario(cfg, cs, False))
    noisy = None
    if cfg.scenario.include_noise or geometry.startswith("double"):
        if cs.noise_valid:
            noisy = run_scenario(_scenario(cfg, cs, True))
    main = noisy if (cfg.scenario.include_noise and noisy is not None) else lossless

    record: Dict = {
        "geometry": geometry,
        "detuning_mhz": cfg.experiment.detuning_mhz,
        "detuning_norm": cfg.experiment.detuning_mhz / (gamma / 2),
        "couplings": {"kappa_v": cs.kappa_v, "kappa_t": cs.kappa_t, "eps_a": cs.eps_a,
                      "eps_p": cs.eps_p, "eps_prime": cs.eps_prime,
                      "saturation": cs.saturation},
        "include_noise": bool(cfg.scenario.include_noise and noisy is not None),
        "conditional_variances": main.conditional_variances,
        "squeezing_db": main.squeezing_db,
        "epr": main.epr,
    }
    lines = [
        f"geometry: {geometry}",
        f"detuning: {_g(cfg.experiment.detuning_mhz)} MHz "
        f"(normalized {_g(record['detuning_norm'])})",
        f"kappa_v = {_g(cs.kappa_v)}   kappa_t = {_g(cs.kappa_t)}",
        f"eps_a = {_g(cs.eps_a)}   eps_p = {_g(cs.eps_p)}   eps_prime = {_g(cs.eps_prime)}"
        + ("   (doubled)" if geometry.startswith("double") else ""),
        f"saturation = {_g(cs.saturation)}",
        f"noise included: {'yes' if record['include_noise'] else 'no'}",
        "conditional variances:",
    ]
    for q, v in main.conditional_variances.items():
        lines.append(f"  {q:<14} {_g(v):>12}   {main.squeezing_db[q]:+.3f} dB")
    if main.epr is not None:
        verdict = "entangled" if main.epr < 4 else "no entanglement"
        lines.append(f"EPR variance: {_g(main.epr)} ({verdict}, threshold 4)")
        record["entangled"] = main.epr < 4
    key, v, db = _headline(main)
    record["headline"] = {"quantity": key, "value": v, "db": db}
    lines.append(f"squeezing ({key}): {db:+.3f} dB")

    if noisy is not None:
        _, v0, _ = _headline(lossless)
        _, v1, _ = _headline(noisy)
        rel = (v1 - v0) / v0
        record["noise_degradation"] = {"lossless": v0, "noisy": v1, "relative_increase": rel}
        lines.append(f"noise degradation: lossless {_g(v0)} -> noisy {_g(v1)} "
                     f"({100 * rel:+.2f}% relative)")
    if geometry == "double_pass":
        k = cs.kappa_t
        series = lossless.extras["series_1_minus_4k2"]
        extra = {"series_1_minus_4k2": series}
        text = f"double pass: series 1-4k^2 = {_g(series)}"
        if abs(k) <= 0.6:
            exact = exact_double_pass_conditional_variance(abs(k))
            extra["exact_kernel"] = exact
            extra["exact_kernel_db"] = to_db(exact)
            text += f", exact kernels = {_g(exact)} ({to_db(exact):+.3f} dB)"
        record["double_pass"] = extra
        lines.append(text)
    return "\n".join(lines) + "\n", record


def sweep_rows(cfg: RunConfig, workers: Optional[int] = None) -> List[Dict]:
    """Rows of the detuning sweep in ascending detuning order.

    Rows are independent and evaluated on a thread pool; ``Executor.map``
    keeps the output in input order.
    """
    params = cfg.params()
    sw = cfg.sweep
    double = cfg.scenario.geometry.startswith("double")
    table = sweep_detuning(params, (sw.start, sw.stop), sw.steps, normalized=sw.normalized,
                           doubled=double)
    noise = cfg.scenario.include_noise

    def row(i: int) -> Dict:
        r = {
            "delta_norm": float(table.delta_norm[i]),
            "kappa_v": float(table.kappa_v[i]),
            "kappa_t": float(table.kappa_t[i]),
            "eps_p": float(table.eps_p[i]),
            "eps_a": float(table.eps_a[i]),
            "predicted_conditional_variance": math.nan,
            "squeezing_db": math.nan,
            "masked": bool(table.masked[i]),
        }
        if not r["masked"]:
            cs = CouplingSet(r["kappa_v"], r["kappa_t"], r["eps_a"], r["eps_p"],
                             float(table.eps_prime[i]))
            if not noise or cs.noise_valid:
                res = run_scenario(_scenario(cfg, cs, noise))
                _, v, db = _headline(res)
                r["predicted_conditional_variance"], r["squeezing_db"] = v, db
        return r

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(row, range(len(table))))


def _fmt17(v) -> str:
    if isinstance(v, bool):
        return "1" if v else "0"
    return format(v, ".17g")


def format_rows(rows: Sequence[Dict], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in rows:
            w.writerow([_fmt17(r[k]) for k in SWEEP_HEADER])
    else:
        for r in rows:
            clean = {k: (None if isinstance(r[k], float) and math.isnan(r[k]) else r[k])
                     for k in SWEEP_HEADER}
            buf.write(json.dumps(clean) + "\n")
    return buf.getvalue()


def kernel_check(kappa_t: float, grid: int = 512) -> Tuple[str, Dict]:
    """Compare exact kernels with the grid oracle; return ``(report, record)``."""
    if not 0 <= kappa_t <= 1:
        raise ValueError("kernel-check needs kappa_t in [0, 1]")
    if grid < 128:
        raise ValueError("grid too coarse: use at least 128 cells per side")
    exact = collective_output_variance(kappa_t)
    fine = pde_oracle(kappa_t, grid, grid).moments
    coarse = pde_oracle(kappa_t, grid // 2, grid // 2).moments
    keys = [k for k in fine if k in exact]
    diff = {k: abs(exact[k] - fine[k]) for k in keys}
    worst = max(diff.values())
    e_c = max(abs(exact[k] - coarse[k]) for k in keys)
    order = math.log2(e_c / worst) if worst > 1e-14 and e_c > 1e-14 else None
    trunc = check_symplectic(build_tensorial_single(kappa_t))
    lines = [
        f"kappa_t = {_g(kappa_t)}, grid = {grid} x {grid}",
        f"{'quantity':<10} {'kernel':>22} {'grid':>22} {'|diff|':>10}",
    ]
    for k in keys:
        lines.append(f"{k:<10} {exact[k]:>22.15f} {fine[k]:>22.15f} {diff[k]:>10.2e}")
    lines.append(f"max discrepancy: {worst:.3e}")
    lines.append("convergence order (grid/2 -> grid): "
                 + (f"{order:.2f}" if order is not None else "n/a (exact agreement)"))
    lines.append(f"collective [x_out, p_out] / 2i: kernels {exact['comm_xp']:.12f}, "
                 f"first-order map deviation {trunc:.6g}")
    record = {"kappa_t": kappa_t, "grid": grid, "kernel": exact, "grid_moments": fine,
              "max_discrepancy": worst, "convergence_order": order,
              "truncated_symplectic_residual": trunc}
    if kappa_t <= 0.6:
        dp = exact_double_pass_conditional_variance(kappa_t)
        dpg = grid_double_pass_conditional_variance(kappa_t, grid, grid)
        series = 1 - 4 * kappa_t ** 2
        lines.append(f"double pass Var(x|s_y): exact kernels {dp:.10f}, grid {dpg:.10f}, "
                     f"series 1-4k^2 {series:.6g}, first-order map {1 / (1 + 4 * kappa_t ** 2):.6g}")
        record["double_pass"] = {"exact": dp, "grid": dpg, "series": series,
                                 "first_order_map": 1 / (1 + 4 * kappa_t ** 2)}
    return "\n".join(lines) + "\n", record


def _write(path: Optional[str], text: str):
    if path is None:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise ConfigError([f"{path}: cannot write ({exc.strerror})"]) from None


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration file (defaults if omitted)")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config entry, e.g. experiment.detuning_mhz=40")
    common.add_argument("--out", help="output file (stdout if omitted)")
    common.add_argument("--format", choices=("csv", "json-lines"), help="machine-readable format")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="alignqnd", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", parents=[common], help="evaluate one measurement geometry")
    run.add_argument("--geometry", help="override scenario.geometry")
    sub.add_parser("sweep", parents=[common], help="detuning sweep of couplings and squeezing")
    kc = sub.add_parser("kernel-check", parents=[common], help="exact kernels vs grid oracle")
    kc.add_argument("--kappa", type=float, help="override kernel.kappa_t")
    kc.add_argument("--grid", type=int, help="override kernel.grid")
    sub.add_parser("validate", parents=[common], help="check a configuration and exit")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = list(args.overrides)
    if getattr(args, "geometry", None):
        overrides.append(f"scenario.geometry={args.geometry}")
    if getattr(args, "kappa", None) is not None:
        overrides.append(f"kernel.kappa_t={args.kappa}")
    if getattr(args, "grid", None) is not None:
        overrides.append(f"kernel.grid={args.grid}")
    if args.format:
        overrides.append(f"output.format={args.format}")
    if args.out:
        overrides.append(f"output.path={json.dumps(args.out)}")
    try:
        cfg = load_config(args.config, overrides)
        out = cfg.output
        if args.command == "validate":
            sys.stdout.write("configuration OK\n")
        elif args.command == "run":
            text, record = scenario_report(cfg)
            if args.format == "json-lines":
                sys.stdout.write(json.dumps(record) + "\n")
            else:
                sys.stdout.write(text)
            if out.path:
                _write(out.path, json.dumps(record, indent=2) + "\n")
        elif args.command == "sweep":
            _write(out.path, format_rows(sweep_rows(cfg), out.format))
        elif args.command == "kernel-check":
            text, record = kernel_check(cfg.kernel.kappa_t, cfg.kernel.grid)
            if args.format == "json-lines":
                sys.stdout.write(json.dumps(record) + "\n")
            else:
                sys.stdout.write(text)
            if out.path:
                _write(out.path, json.dumps(record, indent=2) + "\n")
    except ConfigError as exc:
        for e in exc.errors:
            sys.stderr.write(f"config error: {e}\n")
        return EXIT_CONFIG
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    except ValueError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
