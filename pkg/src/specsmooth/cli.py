"""Batch command-line front end.

Each run reads one section of an INI config file, drives the library,
and writes plot-ready CSV plus a JSON summary.  Outputs are
deterministic: identical configs produce byte-identical data files,
with the timestamp confined to the JSON header.

Exit codes: 0 success, 2 config or validation error, 3 internal
self-check failure.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolver import convergence_table, eigen_lowest, residual_check
from .errors import NumericalFailure, SelfCheckError
from .free import band_kernel, theta_exponent, uniform_bound_check
from .operators import (
    PotentialSpec,
    WeightSpec,
    assemble_hamiltonian,
    bracket,
    build_grid,
    grid_from_spacing,
    sample_potential,
    sample_weight,
)
from .projectors import bin_spectrum, fit_decay_exponent, gap_profile, weighted_decay
from .smoothing import (
    quadratic_form,
    smoothing_closed_form,
    smoothing_constant,
    smoothing_quadrature,
)

_EQUIVALENCE_TOL = 1e-8


def _as_float(raw):
    val = float(raw)
    if np.isnan(val):
        raise ValueError("not a number")
    return val


def _as_int(raw):
    return int(raw, 10)


def _as_lower(raw):
    return raw.strip().lower()


def _as_float_list(raw):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return [_as_float(p) for p in parts]


def _as_int_list(raw):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty list")
    return [_as_int(p) for p in parts]


_GRID_KEYS = {
    "half_width": (_as_float, True, None),
    "n_points": (_as_int, False, None),
    "spacing": (_as_float, False, None),
}

_POTENTIAL_KEYS = {
    "potential": (_as_lower, True, None),
    "growth_exponent": (_as_float, False, None),
    "convexity_exponent": (_as_float, False, None),
}

_WEIGHT_KEYS = {
    "weight": (_as_lower, False, "constant_one"),
    "weight_lower": (_as_float, False, None),
    "weight_upper": (_as_float, False, None),
    "weight_decay": (_as_float, False, None),
}

_SCHEMAS = {
    "eigen": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        "count": (_as_int, True, None),
        "convergence_spacings": (_as_float_list, False, None),
        "convergence_count": (_as_int, False, None),
    },
    "decay": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_WEIGHT_KEYS,
        "count": (_as_int, True, None),
        "fit_lo": (_as_int, False, None),
        "fit_hi": (_as_int, False, None),
        "m": (_as_float, False, None),
    },
    "smoothing": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_WEIGHT_KEYS,
        "count": (_as_int, True, None),
        "gamma": (_as_float, True, None),
        "dynamics": (_as_lower, False, "exact"),
        "weight_operator": (_as_lower, False, "exact"),
        "nodes": (_as_int, False, 128),
        "mode_count": (_as_int, False, None),
    },
    "equivalence": {
        **_GRID_KEYS,
        **_POTENTIAL_KEYS,
        **_WEIGHT_KEYS,
        "count": (_as_int, True, None),
        "gamma": (_as_float, True, None),
        "fit_lo": (_as_int, False, None),
        "fit_hi": (_as_int, False, None),
    },
    "free": {
        "n_values": (_as_int_list, True, None),
        "u_min": (_as_float, False, -20.0),
        "u_max": (_as_float, False, 20.0),
        "u_count": (_as_int, False, 401),
        "half_width": (_as_float, False, 5.0),
        "n_points": (_as_int, False, 201),
        "bound_weight": (_as_lower, False, "gaussian"),
    },
    "theta": {
        "q": (_as_lower, True, None),
        "k": (_as_float, True, None),
        "eta": (_as_float, False, None),
    },
}


def _apply_schema(section, command):
    schema = _SCHEMAS[command]
    for key in section:
        if key not in schema:
            raise ValueError(f"unknown config key '{key}' in section [{command}]")
    parsed = {}
    for key, (convert, required, default) in schema.items():
        if key in section:
            raw = section[key].strip()
            try:
                parsed[key] = convert(raw)
            except (TypeError, ValueError) as exc:
                raise ValueError(
                    f"invalid value for config key '{key}': {raw!r} ({exc})"
                ) from exc
        elif required:
            raise ValueError(
                f"missing required config key '{key}' in section [{command}]"
            )
        else:
            parsed[key] = default
    return parsed


def _grid_from(cfg):
    n_points = cfg.get("n_points")
    spacing = cfg.get("spacing")
    if (n_points is None) == (spacing is None):
        raise ValueError("specify exactly one of 'n_points' or 'spacing'")
    if n_points is not None:
        return build_grid(cfg["half_width"], n_points)
    return grid_from_spacing(cfg["half_width"], spacing)


def _potential_from(cfg, grid):
    kind = cfg["potential"]
    if kind == "harmonic":
        return PotentialSpec.harmonic()
    if kind == "bracket_power":
        k = cfg.get("growth_exponent")
        if k is None:
            raise ValueError("potential 'bracket_power' needs 'growth_exponent'")
        return PotentialSpec.bracket_power(
            k, convexity_exponent=cfg.get("convexity_exponent")
        )
    if kind == "box":
        return PotentialSpec.custom(np.zeros(grid.n_points))
    raise ValueError(f"unknown potential kind '{kind}'")


def _weight_from(cfg, grid):
    kind = cfg.get("weight", "constant_one")
    if kind == "constant_one":
        spec = WeightSpec.constant_one()
    elif kind == "indicator":
        lo, hi = cfg.get("weight_lower"), cfg.get("weight_upper")
        if lo is None or hi is None:
            raise ValueError("weight 'indicator' needs 'weight_lower'/'weight_upper'")
        spec = WeightSpec.indicator(lo, hi)
    elif kind == "inverse_power":
        nu = cfg.get("weight_decay")
        if nu is None:
            raise ValueError("weight 'inverse_power' needs 'weight_decay'")
        spec = WeightSpec.inverse_power(nu)
    elif kind == "gaussian":
        spec = WeightSpec.custom(np.exp(-0.5 * grid.points**2))
    else:
        raise ValueError(f"unknown weight kind '{kind}'")
    return sample_weight(spec, grid)


def _eigensystem_from(cfg):
    grid = _grid_from(cfg)
    spec = _potential_from(cfg, grid)
    ham = assemble_hamiltonian(spec, grid)
    eig = eigen_lowest(ham, cfg["count"])
    return grid, spec, ham, eig


def _fit_range(cfg, count):
    lo = cfg.get("fit_lo")
    hi = cfg.get("fit_hi")
    if lo is None:
        lo = max(1, count // 4)
    if hi is None:
        hi = count
    return lo, hi


def _default_m(cfg):
    if cfg.get("m") is not None:
        return cfg["m"]
    kind = cfg["potential"]
    if kind == "harmonic":
        return 2.0
    if kind == "bracket_power":
        return cfg.get("growth_exponent")
    return None


def _cell(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return "%.16e" % float(value)


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _config_hash(items):
    canon = "\n".join(f"{k}={v}" for k, v in sorted(items)) + "\n"
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _mode_vector(count, mode_count):
    if mode_count is None:
        mode_count = min(8, count)
    mode_count = int(mode_count)
    if not (1 <= mode_count <= count):
        raise ValueError("'mode_count' must lie in [1, count]")
    coeffs = np.zeros(count, dtype=np.complex128)
    coeffs[:mode_count] = 1.0 / np.sqrt(mode_count)
    return coeffs


def _cmd_eigen(cfg, out_dir):
    grid, spec, ham, eig = _eigensystem_from(cfg)
    max_residual = residual_check(ham, eig)
    rows = [
        (i + 1, eig.energies[i], eig.residuals[i]) for i in range(eig.count)
    ]
    _write_csv(out_dir / "eigen_values.csv", ("index", "lambda_sq", "residual"), rows)
    results = {
        "count": eig.count,
        "half_width": grid.half_width,
        "spacing": grid.spacing,
        "max_residual": float(np.max(max_residual)),
        "lowest": float(eig.energies[0]),
        "highest": float(eig.energies[-1]),
    }
    spacings = cfg.get("convergence_spacings")
    if spacings is not None:
        conv_count = cfg.get("convergence_count") or min(cfg["count"], 10)
        table = convergence_table(spec, cfg["half_width"], spacings, conv_count)
        conv_rows = []
        for si, h in enumerate(table.spacings):
            for idx in range(conv_count):
                conv_rows.append((h, idx + 1, table.energies[si, idx]))
        _write_csv(
            out_dir / "eigen_convergence.csv",
            ("spacing", "index", "lambda_sq"),
            conv_rows,
        )
        results["convergence"] = {
            "spacings": list(table.spacings),
            "observed_order": list(table.observed_order),
            "extrapolated": list(table.extrapolated),
        }
    return results, "eigen_summary.json"


def _cmd_decay(cfg, out_dir):
    grid, spec, ham, eig = _eigensystem_from(cfg)
    psi = _weight_from(cfg, grid)
    bins = bin_spectrum(eig)
    report = weighted_decay(eig, psi, bins)
    lo, hi = _fit_range(cfg, eig.count)
    fit = fit_decay_exponent(report, lo, hi)
    rows = [
        (
            i + 1,
            eig.energies[i],
            report.sqrt_energies[i],
            report.weighted_norms[i],
            int(report.bin_labels[i]),
        )
        for i in range(eig.count)
    ]
    _write_csv(
        out_dir / "decay_modes.csv",
        ("index", "lambda_sq", "lambda", "weighted_norm", "bin"),
        rows,
    )
    results = {
        "gamma_hat": fit.exponent,
        "c2_hat": fit.constant,
        "rms_residual": fit.rms_residual,
        "excluded": fit.excluded,
        "fit_lo": fit.fit_lo,
        "fit_hi": fit.fit_hi,
        "bin_norms": [[int(k), float(v)] for k, v in sorted(report.bin_norms.items())],
    }
    m = _default_m(cfg)
    if m is not None:
        prof = gap_profile(eig, m)
        results["gap"] = {
            "m": float(m),
            "inf_ratio": prof.inf_ratio,
            "singleton_start": prof.singleton_start,
            "shared_bin_pairs": int(np.sum(~prof.distinct_bins)),
        }
    return results, "decay_summary.json"


def _cmd_smoothing(cfg, out_dir):
    grid, spec, ham, eig = _eigensystem_from(cfg)
    psi = _weight_from(cfg, grid)
    gamma = cfg["gamma"]
    dynamics = cfg["dynamics"]
    weight_operator = cfg["weight_operator"]
    nodes = cfg["nodes"]
    coeffs = _mode_vector(eig.count, cfg.get("mode_count"))
    form = quadratic_form(eig, psi, gamma, dynamics, weight_operator)
    s_closed = smoothing_closed_form(
        eig, psi, gamma, coeffs, dynamics, weight_operator, form=form
    )
    s_quad = smoothing_quadrature(
        eig, psi, gamma, coeffs, dynamics, weight_operator, nodes=nodes
    )
    s_quad_fine = smoothing_quadrature(
        eig, psi, gamma, coeffs, dynamics, weight_operator, nodes=2 * nodes
    )
    # trapezoid halving should shrink the defect ~4x; a fine value that
    # still disagrees with the closed form flags a broken route
    coarse_step = abs(s_quad - s_quad_fine)
    fine_gap = abs(s_quad_fine - s_closed)
    if fine_gap > max(4.0 * coarse_step, 1e-9 * max(1.0, s_closed)):
        raise SelfCheckError(
            "quadrature and closed form disagree: "
            f"|S_quad - S_closed| = {fine_gap:.3e} at {2 * nodes} panels"
        )
    constant = smoothing_constant(eig, psi, gamma, dynamics, weight_operator)
    truncation = []
    for cnt in sorted({max(2, eig.count // 4), max(2, eig.count // 2), eig.count}):
        sub = dataclasses.replace(
            eig,
            energies=eig.energies[:cnt],
            vectors=eig.vectors[:, :cnt],
            residuals=eig.residuals[:cnt],
        )
        sub_const = smoothing_constant(sub, psi, gamma, dynamics, weight_operator)
        truncation.append([cnt, sub_const.constant])
    herm_defect = float(np.max(np.abs(form - form.conj().T)))
    results = {
        "gamma": gamma,
        "dynamics": dynamics,
        "weight_operator": weight_operator,
        "mode_count": int(np.count_nonzero(coeffs)),
        "s_closed": s_closed,
        "s_quadrature": s_quad,
        "s_quadrature_fine": s_quad_fine,
        "self_check_gap": fine_gap,
        "constant": constant.constant,
        "iterations": constant.iterations,
        "truncation_table": truncation,
        "form_trace": float(np.trace(form).real),
        "form_top": constant.top_value,
        "form_hermiticity_defect": herm_defect,
    }
    return results, "smoothing_report.json"


def _cmd_equivalence(cfg, out_dir):
    grid, spec, ham, eig = _eigensystem_from(cfg)
    psi = _weight_from(cfg, grid)
    gamma = cfg["gamma"]
    bins = bin_spectrum(eig)
    report = weighted_decay(eig, psi, bins)
    floor_const = smoothing_constant(
        eig, psi, gamma, dynamics="floor", weight_operator="floor"
    )
    projector_side = np.sqrt(2.0 * np.pi) * max(
        bracket(float(label)) ** (0.5 * gamma) * value
        for label, value in report.bin_norms.items()
    )
    ratio = floor_const.constant / projector_side
    if abs(ratio - 1.0) > _EQUIVALENCE_TOL:
        raise SelfCheckError(
            f"block-form constant and projector supremum disagree: ratio {ratio!r}"
        )
    exact_const = smoothing_constant(
        eig, psi, gamma, dynamics="exact", weight_operator="exact"
    )
    lo, hi = _fit_range(cfg, eig.count)
    fit = fit_decay_exponent(report, lo, hi)
    results = {
        "gamma": gamma,
        "constant_floor": floor_const.constant,
        "projector_side": float(projector_side),
        "ratio": float(ratio),
        "constant_exact": exact_const.constant,
        "gamma_hat": fit.exponent,
        "c2_hat": fit.constant,
    }
    return results, "equivalence_report.json"


def _cmd_free(cfg, out_dir):
    n_values = cfg["n_values"]
    if any(n < 1 for n in n_values):
        raise ValueError("'n_values' entries must be >= 1")
    u = np.linspace(cfg["u_min"], cfg["u_max"], cfg["u_count"])
    rows = []
    max_gap = 0.0
    for n in n_values:
        closed = band_kernel(n, u, "closed_form")
        quad = band_kernel(n, u, "quadrature")
        max_gap = max(max_gap, float(np.max(np.abs(closed - quad))))
        for ui, cv, qv in zip(u, closed, quad):
            rows.append((n, ui, cv, qv))
    _write_csv(
        out_dir / "free_kernel.csv",
        ("n", "u", "closed_form", "quadrature"),
        rows,
    )
    grid = build_grid(cfg["half_width"], cfg["n_points"])
    if cfg["bound_weight"] == "gaussian":
        psi = np.exp(-0.5 * grid.points**2)
    elif cfg["bound_weight"] == "constant_one":
        psi = np.ones(grid.n_points)
    else:
        raise ValueError(f"unknown bound_weight '{cfg['bound_weight']}'")
    bound = uniform_bound_check(n_values, psi, grid)
    results = {
        "n_values": [int(n) for n in n_values],
        "kernel_max_gap": max_gap,
        "sup_per_n": list(bound.sup_per_n),
        "envelope_per_n": list(bound.envelope_per_n),
        "normalized_per_n": list(bound.normalized_per_n),
        "overall_sup": bound.overall_sup,
        "support_size": bound.support_size,
    }
    return results, "free_bound.json"


def _theta_args(args, cfg):
    if args.q is not None:
        q_raw = args.q
        if args.k is None:
            raise ValueError("theta needs both q and k")
        k = args.k
        eta = args.eta
    elif cfg is not None:
        q_raw = cfg["q"]
        k = cfg["k"]
        eta = cfg.get("eta")
    else:
        raise ValueError("theta needs positional arguments or a config file")
    q = float("inf") if q_raw in ("inf", "infinity") else float(q_raw)
    return q, k, eta


def _run(args):
    command = args.command
    out_dir = Path(getattr(args, "out", ".") or ".")
    cfg = None
    raw_items = []
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.is_file():
            raise ValueError(f"config file not found: {path}")
        parser = configparser.ConfigParser(interpolation=None)
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
        if command not in parser:
            raise ValueError(f"config file has no [{command}] section")
        raw_items = list(parser[command].items())
        cfg = _apply_schema(parser[command], command)
    elif command != "theta":
        raise ValueError("--config is required")

    if command == "theta":
        q, k, eta = _theta_args(args, cfg)
        value = theta_exponent(q, k, eta)
        print("%.12g" % value)
        return 0

    out_dir.mkdir(parents=True, exist_ok=True)
    handler = {
        "eigen": _cmd_eigen,
        "decay": _cmd_decay,
        "smoothing": _cmd_smoothing,
        "equivalence": _cmd_equivalence,
        "free": _cmd_free,
    }[command]
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        results, summary_name = handler(cfg, out_dir)
    notes = sorted({f"{w.category.__name__}: {w.message}" for w in caught})
    payload = {
        "command": command,
        "version": __version__,
        "config_hash": _config_hash(raw_items),
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "results": _plain(results),
        "warnings": notes,
    }
    with open(out_dir / summary_name, "w", encoding="utf-8", newline="") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="specsmooth",
        description="Spectral smoothing experiments for confined 1-d operators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("eigen", "decay", "smoothing", "equivalence", "free"):
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", required=True, help="INI config file")
        p.add_argument("--out", default=".", help="output directory")
    p = sub.add_parser("theta", help="print the piecewise exponent theta(q, k)")
    p.add_argument("q", nargs="?", default=None, help="integrability index or 'inf'")
    p.add_argument("k", nargs="?", type=float, default=None, help="growth exponent")
    p.add_argument("eta", nargs="?", type=float, default=None, help="offset at q=4")
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--out", default=".", help="output directory (unused)")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _run(args)
    except (ValueError, OSError, configparser.Error) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SelfCheckError, NumericalFailure) as exc:
        print(f"self-check failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
