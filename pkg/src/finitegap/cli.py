"""Command-line front end.

Subcommands: eqm, torus, oprl, perturb, sumrule, distance, report.
Global flags: --config PATH, --out DIR, --seed U64, --tol FLOAT, --nodes INT,
--quiet.  Exit codes: 0 success, 1 hard invariant violation, 2 bad input,
3 missing dependency file.

Every output embeds the tool version and a sha256 hash of the canonical
config, and numeric CSV cells use 17 significant digits, so identical
config+seed reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandset import (equilibrium_density, green, make_band_set, potential,
                      rational_harmonic_period, solve_equilibrium)
from .errors import AccuracyError, DomainError, FiniteGapError, MeasureError
from .isotorus import DirichletData, dirichlet_data, dist_to_torus, torus_jacobi
from .jacobi import (JacobiParams, SpectralMeasure, arcsine_measure,
                     equilibrium_measure, free_jacobi,
                     measure_from_theta_density, oprl_eval,
                     semicircle_measure)
from .sumrules import (PerturbationSpec, apply_perturbation, cesaro_distance,
                       lt_free_bound, oscillatory_spec,
                       three_condition_experiment, twisted_sum_report)


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _fmt(x) -> str:
    return f"{x:.17g}"


def _config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _check_keys(config: dict, allowed: set, where: str):
    unknown = set(config) - allowed
    if unknown:
        raise CliError(2, f"unknown config keys {sorted(unknown)} in {where}")


def _load_config(args) -> dict:
    if args.config is None:
        return {}
    path = Path(args.config)
    if not path.exists():
        raise CliError(3, f"config file {path} does not exist")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(2, f"malformed config JSON: {exc}") from exc


def _write_json(out: Path, name: str, payload: dict, config: dict):
    doc = {"tool": "finitegap", "version": __version__,
           "config_sha256": _config_hash(config), **payload}
    (out / name).write_text(json.dumps(doc, sort_keys=True, default=_json_default)
                            + "\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o)}")


def _write_csv(out: Path, name: str, header: list, rows, config: dict):
    lines = [f"# finitegap {__version__} config={_config_hash(config)}",
             ",".join(header)]
    for row in rows:
        lines.append(",".join(v if isinstance(v, str) else
                              str(v) if isinstance(v, (int, np.integer)) else
                              _fmt(v) for v in row))
    (out / name).write_text("\n".join(lines) + "\n")


def _bands_from_config(config: dict):
    if "bands" not in config:
        raise CliError(2, "config needs a 'bands' key: [[a1,b1],...]")
    try:
        return make_band_set([x for pair in config["bands"] for x in pair])
    except (FiniteGapError, TypeError) as exc:
        raise CliError(2, f"invalid band set: {exc}") from exc


def _jacobi_from_config(spec, nodes: int | None, tol: float):
    """Build coefficients from 'free' | {jacobi: ...} | {torus: ...} | {path: ...}."""
    if spec == "free":
        return free_jacobi()
    if not isinstance(spec, dict):
        raise CliError(2, f"cannot interpret jacobi spec {spec!r}")
    if "path" in spec:
        path = Path(spec["path"])
        if not path.exists():
            raise CliError(3, f"jacobi file {path} does not exist")
        return JacobiParams.from_json(path.read_text())
    if "torus" in spec:
        t = spec["torus"]
        _check_keys(t, {"bands", "dirichlet", "n"}, "torus spec")
        e = _bands_from_config(t)
        dd = _dirichlet_from_config(e, t.get("dirichlet", []))
        return torus_jacobi(e, dd, int(t.get("n", 64)), strip_tol=tol).params
    if "head_a" in spec:
        try:
            return JacobiParams.from_json(json.dumps(spec))
        except ValueError as exc:
            raise CliError(2, f"bad jacobi spec: {exc}") from exc
    raise CliError(2, f"cannot interpret jacobi spec {spec!r}")


def _dirichlet_from_config(e, items) -> DirichletData:
    try:
        return dirichlet_data(e, [(d["gamma"], d["sheet"]) for d in items])
    except (FiniteGapError, KeyError, TypeError) as exc:
        raise CliError(2, f"invalid dirichlet data: {exc}") from exc


def _measure_from_config(e, spec: dict, eq=None) -> SpectralMeasure:
    _check_keys(spec, {"base", "atoms", "dead_band"}, "measure spec")
    base = spec.get("base", "equilibrium")
    atoms = [(float(x), float(w)) for x, w in spec.get("atoms", [])]
    atom_mass = sum(w for _, w in atoms)
    if atom_mass >= 1.0:
        raise CliError(2, "atom weights must total < 1")
    if base == "equilibrium":
        eq = eq if eq is not None else solve_equilibrium(e)
        band = equilibrium_measure(eq)
    elif base == "semicircle":
        band = semicircle_measure()
    elif base == "arcsine":
        band = arcsine_measure()
    else:
        raise CliError(2, f"unknown measure base {base!r}")
    if base in ("semicircle", "arcsine") and band.set.bands != e.bands:
        raise CliError(2, f"measure base {base!r} lives on [-2,2], not {e.bands}")
    scale = 1.0 - atom_mass
    dead = spec.get("dead_band")

    def theta_fn(j, th):
        h = band.theta_density(j, th) * scale
        if dead is not None:
            x = e.midpoints[j] + e.radii[j] * np.cos(th)
            h = np.where((x >= dead[0]) & (x <= dead[1]), 0.0, h)
        return h

    return measure_from_theta_density(e, theta_fn, atoms,
                                      strict=dead is None)


# ---------------------------------------------------------------------------
# subcommands


def cmd_eqm(config: dict, args, out: Path) -> int:
    _check_keys(config, {"bands", "grid_points"}, "eqm config")
    e = _bands_from_config(config)
    try:
        eq = solve_equilibrium(e, n0=args.nodes or 256, tol=args.tol or 1e-10)
    except AccuracyError as exc:
        raise CliError(1, f"equilibrium solve failed: {exc}") from exc
    period = rational_harmonic_period(eq.harmonic_measures)
    payload = {"bands": [list(b) for b in e.bands],
               "gap_zeros": list(eq.gap_zeros),
               "robin_constant": eq.robin_constant,
               "capacity": eq.capacity,
               "harmonic_measures": list(eq.harmonic_measures),
               "node_counts": eq.node_counts,
               "rational_period": period}
    gp = int(config.get("grid_points", 64))
    rows = []
    for j in range(e.n_bands):
        a, b = e.bands[j]
        pad = (b - a) * 1e-6
        for x in np.linspace(a + pad, b - pad, gp):
            rows.append((x, equilibrium_density(eq, float(x)),
                         potential(eq, complex(x)), green(eq, complex(x))))
    _write_json(out, "equilibrium.json", payload, config)
    _write_csv(out, "eqm_grid.csv", ["x", "w", "phi", "green"], rows, config)
    if not args.quiet:
        print(f"capacity {eq.capacity:.12g}, harmonic measures "
              f"{np.round(eq.harmonic_measures, 6)}")
    return 0


def cmd_torus(config: dict, args, out: Path) -> int:
    _check_keys(config, {"bands", "dirichlet", "n"}, "torus config")
    e = _bands_from_config(config)
    dd = _dirichlet_from_config(e, config.get("dirichlet", []))
    n = int(config.get("n", 64))
    tp = torus_jacobi(e, dd, n, strip_tol=args.tol or 1e-10)
    a, b = tp.params.coeffs(n)
    payload = {"bands": [list(x) for x in e.bands],
               "dirichlet": [{"gamma": g, "sheet": s}
                             for g, s in zip(dd.gammas, dd.sheets)],
               "pole_weights": list(tp.herglotz.pole_weights),
               "scale_c": tp.herglotz.c,
               "measure_mass": tp.measure.total_mass(),
               "n": n}
    _write_json(out, "torus.json", payload, config)
    _write_csv(out, "torus_coeffs.csv", ["n", "a_n", "b_n"],
               [(i + 1, a[i], b[i]) for i in range(n)], config)
    if not args.quiet:
        print(f"torus point on {e.bands}: a1..a4 = {np.round(a[:4], 8)}")
    return 0


def cmd_oprl(config: dict, args, out: Path) -> int:
    _check_keys(config, {"jacobi", "z", "n"}, "oprl config")
    J = _jacobi_from_config(config.get("jacobi", "free"), args.nodes,
                            args.tol or 1e-10)
    zs = config.get("z", [3.0])
    n = int(config.get("n", 32))
    rows = []
    for zspec in zs:
        z = complex(zspec[0], zspec[1]) if isinstance(zspec, (list, tuple)) \
            else complex(float(zspec), 0.0)
        vals = oprl_eval(J, n, z)
        for k, v in enumerate(np.atleast_1d(vals)):
            v = complex(v)
            rows.append((z.real, z.imag, k, v.real, v.imag))
    _write_csv(out, "oprl.csv", ["z_re", "z_im", "n", "p_re", "p_im"],
               rows, config)
    return 0


def _perturbation_from_config(spec: dict) -> PerturbationSpec:
    try:
        return PerturbationSpec.from_json(spec)
    except (KeyError, TypeError, ValueError) as exc:
        raise CliError(2, f"bad perturbation spec: {exc}") from exc


def cmd_perturb(config: dict, args, out: Path) -> int:
    _check_keys(config, {"base", "perturbation", "n"}, "perturb config")
    base = _jacobi_from_config(config.get("base", "free"), args.nodes,
                               args.tol or 1e-10)
    spec = _perturbation_from_config(config.get("perturbation", {}))
    n = int(config.get("n", 64))
    try:
        J = apply_perturbation(base, spec, n)
    except ValueError as exc:
        raise CliError(2, str(exc)) from exc
    a, b = J.coeffs(n)
    a0, b0 = base.coeffs(n)
    da, db = spec.deltas(n)
    payload = {"perturbation": spec.to_json(), "n": n,
               "abs_delta_a_partial": float(np.abs(da).sum()),
               "abs_delta_b_partial": float(np.abs(db).sum())}
    _write_json(out, "perturb.json", payload, config)
    _write_csv(out, "perturb_coeffs.csv",
               ["n", "a_n", "b_n", "delta_a", "delta_b"],
               [(i + 1, a[i], b[i], a[i] - a0[i], b[i] - b0[i])
                for i in range(n)], config)
    return 0


def cmd_distance(config: dict, args, out: Path) -> int:
    _check_keys(config, {"bands", "jacobi", "m", "grid_per_gap"}, "distance config")
    e = _bands_from_config(config)
    J = _jacobi_from_config(config.get("jacobi", "free"), args.nodes,
                            args.tol or 1e-9)
    m = int(config.get("m", 1))
    res = dist_to_torus(J, e, m, grid_per_gap=int(config.get("grid_per_gap", 16)))
    payload = json.loads(res.to_json())
    payload["bands"] = [list(x) for x in e.bands]
    _write_json(out, "distance.json", payload, config)
    if not args.quiet:
        print(f"d_{m}(J, torus) <= {res.value:.6g}")
    return 0


def cmd_sumrule(config: dict, args, out: Path) -> int:
    _check_keys(config, {"experiment", "bands", "jacobi", "perturbation",
                         "measure", "which_two", "n_trunc", "n_strip", "M",
                         "k_vector", "k_list", "amplitude", "decay", "n"},
                "sumrule config")
    exp = config.get("experiment")
    seed = args.seed or 0
    rc = 0
    if exp == "lt_free":
        spec = _perturbation_from_config(config.get("perturbation", {}))
        res = lt_free_bound(spec, n_trunc=int(config.get("n_trunc", 2000)))
        payload = {"experiment": exp, "result": res.to_json(), "seed": seed,
                   "verdict": bool(res.holds)}
        _write_json(out, "sumrule_lt_free.json", payload, config)
        if not res.holds:
            rc = 1
    elif exp == "three_condition":
        e = _bands_from_config(config)
        mu = _measure_from_config(e, config.get("measure", {}))
        rep = three_condition_experiment(
            e, mu, which_two=tuple(config.get("which_two", ["a", "b"])),
            n_strip=int(config.get("n_strip", 256)),
            n_trunc=int(config.get("n_trunc", 1024)))
        doc = json.loads(rep.to_json())
        doc["experiment"] = exp
        _write_json(out, "sumrule_three_condition.json", doc, config)
    elif exp == "cesaro":
        e = _bands_from_config(config)
        base = _jacobi_from_config(config.get("jacobi", "free") if "jacobi" in config
                                   else "free", args.nodes, args.tol or 1e-9)
        if "perturbation" in config:
            spec = _perturbation_from_config(config["perturbation"])
            M = int(config.get("M", 100))
            base = apply_perturbation(base, spec, M + 64)
        M = int(config.get("M", 100))
        avg, dms = cesaro_distance(base, e, M, return_sequence=True)
        payload = {"experiment": exp, "M": M, "cesaro_average": avg}
        _write_json(out, "sumrule_cesaro.json", payload, config)
        _write_csv(out, "cesaro_dm.csv", ["m", "d_m"],
                   [(i + 1, dms[i]) for i in range(M)], config)
    elif exp == "oscillatory":
        e = _bands_from_config(config)
        eq = solve_equilibrium(e)
        omega = eq.harmonic_measures[:-1]  # independent frequencies
        spec = oscillatory_spec(omega, config.get("k_vector", [1] * max(e.ell, 1)),
                                float(config.get("amplitude", 0.1)),
                                float(config.get("decay", 1.0)))
        rep = twisted_sum_report(spec, omega,
                                 [np.asarray(k) for k in
                                  config.get("k_list", [[0], [1], [2]])],
                                 N=int(config.get("n", 1 << 14)))
        payload = {"experiment": exp,
                   "per_k": {str(k): v for k, v in rep["per_k"].items()},
                   "sup_growth": rep["sup_growth"], "N": rep["N"]}
        _write_json(out, "sumrule_oscillatory.json", payload, config)
    else:
        raise CliError(2, f"unknown experiment {exp!r}")
    return rc


def cmd_report(config: dict, args, out: Path) -> int:
    rows = []
    for path in sorted(out.glob("*.json")):
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError:
            continue
        if doc.get("tool") != "finitegap":
            continue
        verdicts = doc.get("verdicts", {})
        if "verdict" in doc:
            verdicts = {**verdicts, "verdict": doc["verdict"]}
        if not verdicts:
            rows.append((path.name, "-", "-"))
        for key, val in sorted(verdicts.items()):
            rows.append((path.name, key, str(val)))
    _write_csv(out, "summary.csv", ["file", "verdict", "value"], rows, config)
    if not args.quiet:
        print(f"report: {len(rows)} rows")
    return 0


COMMANDS = {"eqm": cmd_eqm, "torus": cmd_torus, "oprl": cmd_oprl,
            "perturb": cmd_perturb, "sumrule": cmd_sumrule,
            "distance": cmd_distance, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="finitegap",
                                 description="finite gap Jacobi matrix toolkit")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", help="path to a JSON config")
    ap.add_argument("--out", default=".", help="output directory")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--tol", type=float, default=None)
    ap.add_argument("--nodes", type=int, default=None)
    ap.add_argument("--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load_config(args)
        if not isinstance(config, dict):
            raise CliError(2, "config JSON must be an object")
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        return COMMANDS[args.command](config, args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (FiniteGapError, MeasureError, DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except AccuracyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
