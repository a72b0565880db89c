"""Command line experiment runner.

    nullinf <command> [mode] [--config FILE] [--out DIR] [--seed N] [--threads N] [--format csv|json]

Config files are INI style.  An optional [experiment] section holds `kind`,
`mode` and `seed`; all experiment parameters live in [params].  Parameters not
given fall back to the defaults in SCHEMAS.
"""

import argparse
import configparser
import io
import math
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, NullInfError, ThresholdViolation

SCHEMA_VERSION = 1

# ----------------------------------------------------------------- value parsers


def _float(v):
    return float(v)


def _int(v):
    f = float(v)
    if f != int(f):
        raise ValueError(f"{v!r} is not an integer")
    return int(f)


def _bool(v):
    t = v.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"{v!r} is not a boolean")


def _str(v):
    return v.strip()


def _list(conv):
    def parse(v):
        items = [p for p in re.split(r"[,\s]+", v.strip()) if p]
        return [conv(p) for p in items]
    return parse


def _complex(v):
    return complex(v.replace(" ", "").replace("i", "j"))


def _choice(*options):
    def parse(v):
        v = v.strip()
        if v not in options:
            raise ValueError(f"{v!r} is not one of {', '.join(options)}")
        return v
    return parse


FLOATS, INTS, STRS = _list(_float), _list(_int), _list(_str)
CHART = _choice("NearI0", "NearIplus")

SCHEMAS = {
    ("chart", None): {
        "chart": (CHART, "NearI0"), "T": (_float, 0.0),
        "t": (FLOATS, [0.5, 5.0, 50.0]), "r": (FLOATS, [10.0, 100.0, 1000.0]),
    },
    ("flow", "trace"): {
        "chart": (CHART, "NearI0"), "T": (_float, 0.0), "rho": (_float, 0.2),
        "fiber_chart": (_choice("ZetaLarge", "XiLarge"), "ZetaLarge"), "hat": (_float, 3.0),
        "sign": (_float, 1.0), "direction": (_float, 1.0), "s_max": (_float, 60.0),
        "n": (_int, 3),
    },
    ("flow", "portrait"): {
        "charts": (STRS, ["NearI0", "NearIplus"]), "rhos": (FLOATS, [0.0, 0.3]), "n_dirs": (_int, 24),
        "directions": (FLOATS, [1.0, -1.0]), "n": (_int, 3),
    },
    ("flow", "oracle"): {
        "n_starts": (_int, 200), "s_end": (_float, 1.5), "n": (_int, 3),
    },
    ("radial", None): {
        "charts": (STRS, ["NearI0", "NearIplus"]), "tol": (_float, 1e-8), "n": (_int, 3),
    },
    ("thresholds", None): {
        "tag": (_str, "ThmExterior"), "s": (_float, 0.0), "s0": (_str, ""),
        "alpha0": (FLOATS, [-1.0, 0.0]), "alphaI": (FLOATS, [-0.75, -0.4]),
        "alphaPlus": (_float, -2.0), "p1bar": (_float, 0.0), "p1bar_plus": (_float, 0.0),
        "lam": (_complex, 0j), "gammaI": (_float, 0.0), "n": (_int, 3),
        "dual": (_bool, False), "require_pass": (_bool, False),
    },
    ("multiplier", None): {
        "alpha0": (FLOATS, [0.0, -1.5]), "p1": (FLOATS, [0.0, 0.3]), "n": (_int, 3),
        "tol": (_float, 1e-5), "check_alpha0": (FLOATS, [1.0, 0.5]),
        "check_alphaI": (FLOATS, [0.25, -0.3]), "lam": (FLOATS, [0.0, 0.2]),
        "c": (_float, 0.01),
    },
    ("solve", None): {
        "n": (_int, 3), "ells": (INTS, [0]), "amplitude": (_float, 1.0),
        "t_range": (FLOATS, [0.0, 1.0]), "r_range": (FLOATS, [2.5, 3.0]), "order": (_int, 1),
        "variant": (_choice("Minkowski", "ModelP1"), "Minkowski"), "p1": (_float, 0.0),
        "h": (_float, 0.05), "u1": (_float, 2.0), "v_max": (_float, 4e5),
        "growth": (_float, 1.02), "backend": (_str, ""),
        "gate": (_str, "ThmExterior"), "s": (_int, 0), "k": (_int, 0),
        "alpha0": (_float, -1.0), "alphaI": (_float, -0.6), "alphaPlus": (_float, -2.0),
        "family": (_choice("EdgeB", "B"), "EdgeB"),
        "fit_value": (_float, -2.0), "fit_curves": (STRS, ["OutgoingRay"]),
        "snapshot_u": (_float, -2.0), "snapshot_points": (_int, 40),
        "sharpness_alphaI": (FLOATS, []),
    },
    ("normop", "spectrum"): {
        "lam": (_list(_complex), [0.3 - 0.2j, 0.5 - 0.1j, 0.2 - 0.4j, -0.3 - 0.3j, 0.0 - 0.5j]),
        "q1": (_float, 1.0), "p0": (_float, 0.0), "n": (_int, 3),
        "gamma_fractions": (FLOATS, [0.1, 0.3, 0.5, 0.7, 0.9]), "gammaI": (FLOATS, []),
        "N": (_int, 320), "x_min": (_float, 1e-6), "x_max": (_float, 40.0),
    },
    ("normop", "solve"): {
        "lam": (_complex, 0.3 - 0.2j), "q1": (_float, 1.0), "p0": (_float, 0.0),
        "n": (_int, 3), "gammaI": (_float, 0.5), "N": (_int, 320),
        "x_min": (_float, 1e-6), "x_max": (_float, 40.0),
    },
    ("normop", "mellin-check"): {
        "lam": (_list(_complex), [0.5 + 0.5j, 1 + 1j, -2 + 0.3j, 3 + 2j, 0.1 + 1.5j]),
    },
    ("mellin", None): {
        "gammas": (FLOATS, [-1.0, 0.0, 1.0]), "n_functions": (_int, 20),
        "s_min": (_float, -40.0), "s_max": (_float, 40.0), "N": (_int, 4096),
    },
}

MODES = {"flow": ("trace", "portrait", "oracle"), "normop": ("spectrum", "solve", "mellin-check")}


# ----------------------------------------------------------------- config


def _line_of(text, section, key):
    """1-based line of `key` inside `section` (or of the section header if key is None)."""
    current = None
    for i, line in enumerate(text.splitlines(), 1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            current = m.group(1).strip()
            if key is None and current == section:
                return i
            continue
        if current == section and key is not None:
            if re.match(rf"\s*{re.escape(key)}\s*[=:]", line, re.IGNORECASE):
                return i
    return None


def load_config(text, kind, mode=None):
    """Parse INI text into (params, seed); defaults fill missing keys."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc.message.splitlines()[0]}",
                          line=getattr(exc, "lineno", None)) from None
    seed = 0
    for sec in cp.sections():
        if sec not in ("experiment", "params"):
            raise ConfigError(f"unknown section [{sec}]", line=_line_of(text, sec, None))
    if cp.has_section("experiment"):
        exp = cp["experiment"]
        for key in exp:
            if key not in ("kind", "mode", "seed"):
                raise ConfigError("unknown key", _line_of(text, "experiment", key), key)
        if "kind" in exp and exp["kind"].strip() != kind:
            raise ConfigError(f"config is for {exp['kind'].strip()!r}, not {kind!r}",
                              _line_of(text, "experiment", "kind"), "kind")
        if mode is not None and "mode" in exp and exp["mode"].strip() != mode:
            raise ConfigError(f"config is for mode {exp['mode'].strip()!r}, not {mode!r}",
                              _line_of(text, "experiment", "mode"), "mode")
        if "seed" in exp:
            try:
                seed = _int(exp["seed"])
            except ValueError as exc:
                raise ConfigError(str(exc), _line_of(text, "experiment", "seed"), "seed") from None
    schema = SCHEMAS[(kind, mode)]
    params = {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in schema.items()}
    if cp.has_section("params"):
        for key, raw in cp["params"].items():
            if key not in schema:
                raise ConfigError("unknown key", _line_of(text, "params", key), key)
            try:
                params[key] = schema[key][0](raw)
            except ValueError as exc:
                raise ConfigError(f"bad value: {exc}", _line_of(text, "params", key), key) from None
    return params, seed


# ----------------------------------------------------------------- emit


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    if v is None:
        return ""
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(_fmt(x) for x in v)
    return str(v)


def _csv_cell(v):
    s = _fmt(v)
    if any(ch in s for ch in ',"\n'):
        s = '"' + s.replace('"', '""') + '"'
    return s


def to_csv(columns, rows):
    out = io.StringIO()
    out.write(f"# schema_version: {SCHEMA_VERSION}\n")
    out.write(",".join(columns) + "\n")
    for row in rows:
        out.write(",".join(_csv_cell(row.get(c)) for c in columns) + "\n")
    return out.getvalue()


def _json(v, indent=0):
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(v, dict):
        if not v:
            return "{}"
        items = [f"{inner}{_json(str(k))}: {_json(x, indent + 1)}" for k, x in v.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(v, (list, tuple, np.ndarray)):
        v = list(v)
        if not v:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple, np.ndarray)) for x in v):
            return "[" + ", ".join(_json(x) for x in v) + "]"
        return "[\n" + ",\n".join(inner + _json(x, indent + 1) for x in v) + "\n" + pad + "]"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "%.17g" % v if math.isfinite(v) else "null"
    if isinstance(v, (complex, np.complexfloating)):
        return _json([v.real, v.imag])
    if v is None:
        return "null"
    s = str(v).replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{s}"'


def to_json(results):
    doc = {"schema_version": SCHEMA_VERSION, "experiment": results["experiment"],
           "summary": results.get("summary", {}),
           "tables": {name: {"columns": cols, "rows": [[row.get(c) for c in cols] for row in rows]}
                      for name, (cols, rows) in results.get("tables", {}).items()}}
    return _json(doc) + "\n"


def emit(results, fmt="csv", out=None, stream=None):
    """Write results; returns the list of written paths (empty when streaming)."""
    files = {}
    if fmt == "json":
        files[f"{results['experiment']}.json"] = to_json(results)
    elif fmt == "csv":
        for name, (cols, rows) in results.get("tables", {}).items():
            files[f"{name}.csv"] = to_csv(cols, rows)
        summary = results.get("summary", {})
        files["summary.csv"] = to_csv(["key", "value"],
                                      [{"key": k, "value": v} for k, v in summary.items()])
    else:
        raise ConfigError(f"unknown format {fmt!r}", field="format")
    if out is None:
        stream = stream or sys.stdout
        for name, text in files.items():
            stream.write(f"## {name}\n{text}")
        return []
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in files.items():
        p = d / name
        p.write_text(text, encoding="utf-8")
        paths.append(p)
    return paths


def _table(rows, columns=None):
    if columns is None:
        columns = []
        for r in rows:
            for k in r:
                if k not in columns:
                    columns.append(k)
    return columns, rows


# ----------------------------------------------------------------- experiments


def _chart(name, T=0.0):
    from .geometry import ChartId
    return ChartId(name, float(T))


def run_chart(p, seed, threads):
    from .geometry import SpacetimePoint, from_chart, to_chart
    if len(p["t"]) != len(p["r"]):
        raise ConfigError("t and r must have the same length", field="t")
    chart = _chart(p["chart"], p["T"])
    rows = []
    for t, r in zip(p["t"], p["r"]):
        c = to_chart(SpacetimePoint(t, r), chart)
        back = from_chart(c)
        err = max(abs(back.t - t), abs(back.r - r)) / max(abs(t), abs(r), 1.0)
        rows.append({"t": t, "r": r, "rho": c.rho, "x": c.x, "t_back": back.t, "r_back": back.r,
                     "roundtrip_error": err})
    worst = max((r["roundtrip_error"] for r in rows), default=0.0)
    return {"tables": {"chart": _table(rows)}, "summary": {"max_roundtrip_error": worst}}


def run_flow_trace(p, seed, threads):
    from .flow import FlowParams, classify_asymptotics, integrate_flow, sigma_plus_start
    from .geometry import MetricSpec
    m = MetricSpec("Minkowski", n=p["n"])
    chart = _chart(p["chart"], p["T"])
    start = sigma_plus_start(chart, p["rho"], p["hat"], p["fiber_chart"], p["sign"], p["n"])
    res = integrate_flow(m, start, FlowParams(s_max=p["s_max"], direction=p["direction"]))
    k = p["n"] - 1
    cols = (["s", "chart", "fiber_chart", "fiber_sign", "rho", "x"] + [f"y{j}" for j in range(k)]
            + ["rho_inf", "hat"] + [f"eta_hat{j}" for j in range(k)])
    rows = []
    for s, z, c, fc, fs in zip(res.s, res.z, res.charts, res.fiber_charts, res.signs):
        row = {"s": abs(float(s)), "chart": c.kind, "fiber_chart": fc, "fiber_sign": fs}
        row.update(zip(cols[4:], z))
        rows.append(row)
    summary = {"classification": classify_asymptotics(res, m),
               "chart_switches": res.diagnostics.get("chart_switches", 0),
               "max_symbol_drift": res.diagnostics.get("max_symbol_drift", 0.0),
               "points": len(rows)}
    return {"tables": {"trajectory": (cols, rows)}, "summary": summary}


def run_flow_portrait(p, seed, threads):
    from .flow import phase_portrait
    from .geometry import minkowski
    rows = []
    for name in p["charts"]:
        for r in phase_portrait(minkowski(), _chart(CHART(name)), tuple(p["rhos"]), p["n_dirs"],
                                tuple(p["directions"])):
            rows.append({"chart": name, **r})
    counts = {}
    for r in rows:
        key = f"count_{r['classification']}"
        counts[key] = counts.get(key, 0) + 1
    summary = {"trajectories": len(rows),
               "misclassified": sum(r["classification"] != r["expected"] for r in rows)}
    summary.update(sorted(counts.items()))
    return {"tables": {"portrait": _table(rows)}, "summary": summary}


def run_flow_oracle(p, seed, threads):
    from .flow import oracle_comparison
    from .geometry import minkowski
    res = oracle_comparison(minkowski(), p["n_starts"], seed, p["s_end"])
    return {"tables": {"oracle": _table(res["rows"])},
            "summary": {"max_rel_error": res["max_rel_error"],
                        "max_symbol_drift": res["max_symbol_drift"], "starts": p["n_starts"]}}


def run_radial(p, seed, threads):
    from .flow import locate_radial_sets
    from .geometry import minkowski
    from .hamiltonian import linearize_at_point
    m = minkowski()
    rows = []
    for name in p["charts"]:
        chart = _chart(CHART(name))
        for c, key in locate_radial_sets(m, chart, tol=p["tol"]):
            lin = linearize_at_point(m, c, key[0] if isinstance(key, tuple) else None)
            blk = lin["blocks"].get(key[0], {})
            rows.append({"chart": chart.kind, "set": key[0], "component": key[1],
                         "fiber_chart": c.fiber_chart, "rho": c.base.rho, "hat": c.hat,
                         "eta_hat": float(np.linalg.norm(c.eta_hat)),
                         "block_coords": blk.get("coords", []),
                         "block_diag": blk.get("diag", []),
                         "block_eigenvalues": np.real(blk.get("eigenvalues", [])),
                         "tag": blk.get("tag", "")})
    sets = sorted({r["set"] for r in rows})
    return {"tables": {"radial": _table(rows)},
            "summary": {"distinct_sets": len(sets), "sets": " ".join(sets)}}


def run_thresholds(p, seed, threads):
    from .multiplier import dual_report, threshold_evaluate
    s0 = float(p["s0"]) if p["s0"] else None
    records, grid = [], []
    for a0, aI in product(p["alpha0"], p["alphaI"]):
        if p["dual"]:
            rep = dual_report(p["tag"], p["s"], a0, aI, p["alphaPlus"], p["p1bar"])
        else:
            rep = threshold_evaluate(p["tag"], p["s"], s0, a0, aI, p["alphaPlus"], p["p1bar"],
                                     p["p1bar_plus"], p["lam"], p["gammaI"], p["n"])
        for r in rep.records:
            records.append({"tag": rep.tag, "alpha0": a0, "alphaI": aI, "record": r["name"],
                            "lhs": r["lhs"], "rhs": r["rhs"], "pass": r["pass"]})
        grid.append({"tag": rep.tag, "alpha0": a0, "alphaI": aI, "all_pass": rep.all_pass,
                     "failures": "; ".join(rep.failures())})
    failing = sum(not g["all_pass"] for g in grid)
    if p["require_pass"] and failing:
        bad = next(g for g in grid if not g["all_pass"])
        raise ThresholdViolation(f"{bad['tag']} fails at alpha0 = {bad['alpha0']}, "
                                 f"alphaI = {bad['alphaI']}: {bad['failures']}")
    return {"tables": {"threshold_records": _table(records), "threshold_grid": _table(grid)},
            "summary": {"points": len(grid), "failing_points": failing}}


def run_multiplier(p, seed, threads):
    from .multiplier import analytic_threshold, positivity_boundary, richardson_minor
    bound = []
    for a0, p1 in product(p["alpha0"], p["p1"]):
        b = positivity_boundary(a0, p1, tol=p["tol"], n=p["n"])
        a = analytic_threshold(a0, p1)
        bound.append({"alpha0": a0, "p1": p1, "numeric_boundary": b, "analytic": a,
                      "difference": b - a})
    if not len(p["check_alpha0"]) == len(p["check_alphaI"]) == len(p["lam"]):
        raise ConfigError("check_alpha0, check_alphaI and lam must have equal length",
                          field="check_alpha0")
    minor = []
    for a0c, aIc, lam in zip(p["check_alpha0"], p["check_alphaI"], p["lam"]):
        r = richardson_minor(a0c, aIc, lam, c=p["c"], n=p["n"])
        tr, sl = -10 * aIc + 10 * lam, 8 * (aIc - lam) * (aIc - a0c)
        minor.append({"check_alpha0": a0c, "check_alphaI": aIc, "lam": lam,
                      "trace0": r["trace0"], "trace_predicted": tr,
                      "det_slope": r["det_slope"], "slope_predicted": sl,
                      "trace_rel_error": abs(r["trace0"] - tr) / max(abs(tr), 1e-300),
                      "slope_rel_error": abs(r["det_slope"] - sl) / max(abs(sl), 1e-300)})
    summary = {"max_boundary_difference": max((abs(b["difference"]) for b in bound), default=0.0),
               "max_minor_rel_error": max((max(m["trace_rel_error"], m["slope_rel_error"])
                                           for m in minor), default=0.0)}
    return {"tables": {"positivity_boundary": _table(bound), "minor": _table(minor)},
            "summary": summary}


def run_solve(p, seed, threads):
    from .multiplier import threshold_evaluate
    from .wavesolver import (ForcingSpec, NormSpec, decay_fit, grid_for, sharpness_scan,
                             solve_spherical_forward, weighted_norm)
    if p["gate"].lower() != "none":
        rep = threshold_evaluate(p["gate"], s=p["s"], alpha0=p["alpha0"], alphaI=p["alphaI"],
                                 alphaPlus=p["alphaPlus"], p1bar=p["p1"], n=p["n"])
        if not rep.all_pass:
            raise ThresholdViolation(f"{p['gate']} gate refuses the weights: "
                                     + ", ".join(rep.failures()))
    if len(p["t_range"]) != 2 or len(p["r_range"]) != 2:
        raise ConfigError("t_range and r_range need two values", field="t_range")
    forcings = [ForcingSpec(p["amplitude"], tuple(p["t_range"]), tuple(p["r_range"]), p["order"], ell)
                for ell in p["ells"]]
    grid = grid_for(forcings[0], h=p["h"], u1=p["u1"], v_max=p["v_max"], growth=p["growth"])
    sol = solve_spherical_forward(p["n"], forcings, grid, p["variant"], p["p1"], p["backend"] or None)

    i = int(np.argmin(np.abs(grid.u - p["snapshot_u"])))
    r_row = 0.5 * (grid.v - grid.u[i])
    pick = np.unique(np.searchsorted(r_row, np.geomspace(max(r_row[r_row > 0].min(), 1.0),
                                                         r_row[-1], p["snapshot_points"])))
    pick = pick[pick < r_row.size]
    snap = []
    for j in pick:
        row = {"u": grid.u[i], "v": grid.v[j], "r": r_row[j]}
        for ell in sol.modes:
            row[f"u_ell{ell}"] = sol.field(ell)[i, j]
        snap.append(row)

    fits = []
    for curve in p["fit_curves"]:
        for ell in sol.modes:
            f = decay_fit(sol, curve, p["fit_value"], ell)
            fits.append({"curve": curve, "ell": ell, "variable": f.variable,
                         "exponent": f.exponent, "error": f.error, "samples": f.samples})

    spec = NormSpec(p["s"], p["alpha0"], p["alphaI"], p["alphaPlus"], p["family"], p["k"])
    nr = weighted_norm(sol, spec)
    norms = [{"s": p["s"], "k": p["k"], "family": p["family"], "alpha0": p["alpha0"],
              "alphaI": p["alphaI"], "value": nr.value, "finite": nr.finite,
              "last_ratio": float(nr.ratios[-1])}]
    tables = {"snapshot": _table(snap), "decay_fits": _table(fits), "norms": _table(norms)}
    summary = {"grid_nu": grid.shape[0], "grid_nv": grid.shape[1], "norm": nr.value,
               "norm_finite": nr.finite}
    if p["sharpness_alphaI"]:
        sc = sharpness_scan(sol, p["sharpness_alphaI"], alpha0=p["alpha0"], s=p["s"])
        tables["sharpness"] = _table(sc["rows"])
        summary["bracket_lo"], summary["bracket_hi"] = sc["bracket"]
    return {"tables": tables, "summary": summary}


def _pmap(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def run_normop_spectrum(p, seed, threads):
    from .normop import CollocationGrid, ReducedNormalOp, smallest_singular_value
    grid = CollocationGrid(p["x_min"], p["x_max"], p["N"])
    jobs = []
    for lam in p["lam"]:
        op = ReducedNormalOp(lam, q1=p["q1"], p0=p["p0"], n=p["n"])
        lo, hi = op.window()
        gs = p["gammaI"] or [lo + f * (hi - lo) for f in p["gamma_fractions"]]
        jobs += [(op, g) for g in gs]
    sig = _pmap(lambda j: smallest_singular_value(j[0], j[1], grid), jobs, threads)
    rows = [{"lam_re": op.lam.real, "lam_im": op.lam.imag, "q1": op.q1, "gammaI": g,
             "sigma_min": s} for (op, g), s in zip(jobs, sig)]
    return {"tables": {"singular_values": _table(rows)},
            "summary": {"points": len(rows), "min_sigma": min(sig, default=float("nan"))}}


def run_normop_solve(p, seed, threads):
    from .normop import (CollocationGrid, ReducedNormalOp, apply_reduced, boundary_spectrum,
                         shooting_exponents, solve_reduced)
    op = ReducedNormalOp(p["lam"], q1=p["q1"], p0=p["p0"], n=p["n"])
    grid = CollocationGrid(p["x_min"], p["x_max"], p["N"])
    ustar = lambda x: x ** 2 * np.exp(-x ** 2 / 2)
    du = lambda x: (2 * x - x ** 3) * np.exp(-x ** 2 / 2)
    d2u = lambda x: (2 - 5 * x ** 2 + x ** 4) * np.exp(-x ** 2 / 2)
    x, u, info = solve_reduced(op, lambda x: apply_reduced(op, ustar(x), du(x), d2u(x), x),
                               p["gammaI"], grid)
    err = float(np.max(np.abs(u - ustar(x))))
    spec = boundary_spectrum(op)
    shoot = shooting_exponents(op, seed=seed)
    exact = spec["exponents"]
    fit_err = max(min(abs(a - e) for a in shoot) for e in exact)
    rows = [{"x": xi, "u_re": ui.real, "u_im": ui.imag, "u_exact": ustar(xi)}
            for xi, ui in zip(x[::-1], u[::-1])]
    expo = [{"zeta_re": z.real, "zeta_im": z.imag, "exponent_re": a.real, "exponent_im": a.imag}
            for z, a in zip(spec["zeta"], exact)]
    summary = {"manufactured_error": err, "residual": info["residual"],
               "sigma_min": info["sigma_min"], "exponent_fit_error": float(fit_err)}
    return {"tables": {"solution": _table(rows), "boundary_spectrum": _table(expo)},
            "summary": summary}


def run_normop_mellin(p, seed, threads):
    from .normop import gamma_check
    lams = np.array(p["lam"], dtype=complex)
    got, ex = gamma_check(lams)
    rows = [{"lam_re": l.real, "lam_im": l.imag, "mellin_re": g.real, "mellin_im": g.imag,
             "gamma_re": e.real, "gamma_im": e.imag, "rel_error": abs(g - e) / abs(e)}
            for l, g, e in zip(lams, got, ex)]
    return {"tables": {"gamma_check": _table(rows)},
            "summary": {"max_rel_error": max((r["rel_error"] for r in rows), default=0.0)}}


def mellin_experiment(gammas, n_functions, seed, s_min=-40.0, s_max=40.0, N=4096):
    """Round trip and Plancherel on random Gaussian mixtures in log rho, for each weight."""
    from scipy import integrate

    from .normop import line_norm_sq, mellin_grid, mellin_transform
    rng = np.random.default_rng(seed)
    rows = []
    for g in gammas:
        pair = mellin_grid(s_min, s_max, N, gamma=g)
        for k in range(n_functions):
            c = rng.normal(size=3)
            mu = rng.uniform(-5, 5, 3)
            wd = rng.uniform(0.5, 2, 3)
            prof = lambda s: sum(ci * np.exp(-(s - mi) ** 2 / (2 * wi ** 2))
                                 for ci, mi, wi in zip(c, mu, wd))
            u = pair.rho ** g * prof(np.log(pair.rho))
            F = mellin_transform(u, pair)
            back = mellin_transform(F, pair, "Inverse")
            wt = pair.rho ** (-g)
            rt = float(np.max(np.abs(wt * (back - u))) / np.max(np.abs(wt * u)))
            # independent route: adaptive quadrature of the weighted L2 norm in log rho
            exact = integrate.quad(lambda s: prof(s) ** 2, s_min, s_max, limit=500,
                                   epsabs=0, epsrel=1e-13)[0]
            pl = abs(line_norm_sq(F, pair) - exact) / exact
            rows.append({"gamma": g, "function": k, "roundtrip_error": rt,
                         "plancherel_rel_error": pl})
    return rows


def run_mellin(p, seed, threads):
    rows = mellin_experiment(p["gammas"], p["n_functions"], seed, p["s_min"], p["s_max"], p["N"])
    return {"tables": {"mellin": _table(rows)},
            "summary": {"max_roundtrip_error": max((r["roundtrip_error"] for r in rows), default=0.0),
                        "max_plancherel_error": max((r["plancherel_rel_error"] for r in rows),
                                                    default=0.0)}}


RUNNERS = {
    ("chart", None): run_chart,
    ("flow", "trace"): run_flow_trace,
    ("flow", "portrait"): run_flow_portrait,
    ("flow", "oracle"): run_flow_oracle,
    ("radial", None): run_radial,
    ("thresholds", None): run_thresholds,
    ("multiplier", None): run_multiplier,
    ("solve", None): run_solve,
    ("normop", "spectrum"): run_normop_spectrum,
    ("normop", "solve"): run_normop_solve,
    ("normop", "mellin-check"): run_normop_mellin,
    ("mellin", None): run_mellin,
}


def run(kind, mode=None, config_text="", seed=None, threads=1):
    """Parse a config and run one experiment; returns the results dict."""
    if (kind, mode) not in RUNNERS:
        raise ConfigError(f"unknown experiment {kind} {mode or ''}".strip(), field="kind")
    params, cfg_seed = load_config(config_text, kind, mode)
    seed = cfg_seed if seed is None else seed
    res = RUNNERS[(kind, mode)](params, seed, threads)
    name = kind if mode is None else f"{kind}_{mode.replace('-', '_')}"
    res["experiment"] = name
    res.setdefault("summary", {})
    res["summary"] = {"seed": seed, **res["summary"]}
    return res


# ----------------------------------------------------------------- entry point


def build_parser():
    ap = argparse.ArgumentParser(prog="nullinf", description="Wave equations near null infinity.")
    ap.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI config file")
    common.add_argument("--out", type=Path, help="output directory (default: stdout)")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    sub = ap.add_subparsers(dest="command", required=True)
    for kind in ("chart", "radial", "thresholds", "multiplier", "solve", "mellin"):
        sub.add_parser(kind, parents=[common])
    for kind, modes in MODES.items():
        sp = sub.add_parser(kind, parents=[common])
        sp.add_argument("mode", choices=modes)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    mode = getattr(args, "mode", None)
    try:
        text = ""
        if args.config is not None:
            try:
                text = args.config.read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc.strerror}", field="config") from None
        res = run(args.command, mode, text, args.seed, args.threads)
        emit(res, args.format, args.out)
    except NullInfError as exc:
        print(f"nullinf: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        print(f"nullinf: numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"nullinf: invalid parameters: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
