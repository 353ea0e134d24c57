"""Command-line surface: configuration, experiment dispatch, and bit-stable emission.

Commands: orbit | integrate | seminorm | joining | rigidity-sweep | subnil-probe.
Configuration comes from an INI file ([run] section, flat key = value lines)
and/or flags; flags override file values. Every numeric default equals the
documented module default, so a fully defaulted config runs the standard
battery.

Outputs: a JSON envelope (fixed key order; rerunning the echoed config
reproduces the payload byte-for-byte), one CSV per payload table (RFC 4180),
and optional SVG line charts for sweep curves. Wall-clock timing is logged to
stderr and a .meta.json sidecar, never into the deterministic envelope.

Exit codes: 0 success, 2 invalid config, 3 budget exceeded.
"""

import argparse
import configparser
import csv
import io
import json
import math
import os
import re
import sys as _sys
import time
from dataclasses import dataclass, fields as dc_fields, replace

import numpy as np

from . import __version__, backend
from .errors import BudgetError, CertificationError
from .joinings import (ClassifyConfig, analyze_joining, counterexample_joining,
                       diagonal_joining, graph_joining, parse_shear, vertical_map)
from .nilgroup import haar_sample
from .rigidity import (SubnilDescriptor, default_catalog, rigidity_sweep,
                       subnil_diameter)
from .seminorms import MAX_STEP, cube_cost, u1, uk_cube, uk_recursive
from .systems import (birkhoff_avg, heis_character, heisenberg_system, orbit,
                      parse_observable, torus_character, torus_system)

COMMANDS = ("orbit", "integrate", "seminorm", "joining", "rigidity-sweep", "subnil-probe")
OUTDIR_ENV = "NILLAB_OUTDIR"


@dataclass(frozen=True)
class RunConfig:
    command: str = ""
    system: str = "heisenberg"
    alpha: str = "sqrt2-1"
    beta: str = "sqrt3-1"
    gamma: str = "0"
    freqs: str = "sqrt2-1"          # torus rotation frequencies (comma list)
    f: str = ""                      # observable; per-command default when empty
    k: int = 2
    estimator: str = "both"
    kind: str = "diagonal"
    n: int = 100000
    n_ref: int = 100000
    n_mc: int = 200
    n_side: int = 64
    n_outer: int = 1000
    n_base: int = 100000
    seed: int = 1
    u: float = 0.25
    s: str = "s0"
    u_grid: str = "pow2:1..8"
    s_grid: str = "s0"
    u_star: float = 0.0625
    scheme: str = "direct-haar"
    bin_size: float = 0.05
    min_count: int = 20
    pair_cap: int = 96
    max_freq: int = 3
    max_terms: int = 64
    budget: float = 1e10
    samples: int = 1000
    qmax: int = 10
    translates: int = 10
    dump_points: int = 0
    out: str = ""
    name: str = ""
    formats: str = "json,csv"


_IRRATIONAL = re.compile(r"^sqrt\(?(\d+)\)?(?:/(\d+))?((?:[+-])\d+(?:\.\d+)?)?$")


def parse_param(text):
    """Decimal strings or exact expressions like 'sqrt2-1', 'sqrt(5)-2', 'sqrt13/2+1'."""
    t = str(text).strip().replace(" ", "")
    m = _IRRATIONAL.match(t)
    if m:
        val = math.sqrt(int(m.group(1)))
        if m.group(2):
            val /= int(m.group(2))
        if m.group(3):
            val += float(m.group(3))
        return val
    return float(t)


def _parse_grid(text):
    t = str(text).strip()
    m = re.match(r"^pow2:(\d+)\.\.(\d+)$", t)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        return [2.0 ** -k for k in range(lo, hi + 1)]
    return [float(x) for x in t.split(",") if x.strip()]


def _coerce(name, kind, text):
    if kind is int:
        return int(text)
    if kind is float:
        return float(text)
    return str(text)


def config_from_file(path):
    cp = configparser.ConfigParser()
    with open(path, "r", encoding="utf-8") as fh:
        cp.read_file(fh)
    if not cp.has_section("run"):
        raise ValueError("config file needs a [run] section")
    known = {f.name: f.type for f in dc_fields(RunConfig)}
    values, unknown = {}, []
    for key, raw in cp.items("run"):
        if key not in known:
            unknown.append(key)
            continue
        values[key] = _coerce(key, type(getattr(RunConfig(), key)), raw)
    return values, unknown


def build_system(cfg):
    if cfg.system == "torus":
        freqs = [parse_param(x) for x in cfg.freqs.split(",") if x.strip()]
        return torus_system(freqs)
    if cfg.system == "heisenberg":
        return heisenberg_system(parse_param(cfg.alpha), parse_param(cfg.beta),
                                 parse_param(cfg.gamma))
    raise ValueError(f"unknown system: {cfg.system!r}")


def _default_observable(cfg):
    if cfg.f:
        return cfg.f
    return "vert" if cfg.system == "heisenberg" else "char:" + ",".join(
        ["1"] + ["0"] * (len(cfg.freqs.split(",")) - 1))


def validate(cfg):
    """All config diagnostics, without running anything."""
    diags = []

    def add(field, code, message):
        diags.append({"field": field, "code": code, "message": message})

    if cfg.command not in COMMANDS:
        add("command", "value", f"unknown command {cfg.command!r}; choose from {COMMANDS}")
        return diags
    if cfg.system not in ("heisenberg", "torus"):
        add("system", "value", f"unknown system {cfg.system!r}")
    for fld in ("alpha", "beta", "gamma"):
        try:
            parse_param(getattr(cfg, fld))
        except ValueError:
            add(fld, "value", f"cannot parse parameter {getattr(cfg, fld)!r}")
    for fld in ("n", "n_ref", "n_mc", "n_side", "n_outer", "n_base", "samples"):
        if getattr(cfg, fld) < 1:
            add(fld, "value", f"{fld} must be >= 1")
    if cfg.scheme not in ("direct-haar", "orbit-pushforward"):
        add("scheme", "value", f"unknown scheme {cfg.scheme!r}")
    fmts = {x.strip() for x in cfg.formats.split(",") if x.strip()}
    if not fmts <= {"json", "csv", "svg"}:
        add("formats", "value", "formats must be a subset of json,csv,svg")

    if cfg.command == "seminorm":
        if not 1 <= cfg.k <= MAX_STEP:
            add("k", "budget", f"step k={cfg.k} exceeds the hard ceiling k <= {MAX_STEP}")
        elif cfg.estimator in ("cube", "both"):
            cost = cube_cost(cfg.k, cfg.n_side, cfg.n_mc)
            if cost > cfg.budget:
                add("n_side", "budget",
                    f"cube run cost {cost:.3g} exceeds budget {cfg.budget:.3g}")
        if cfg.estimator not in ("both", "recursive", "cube"):
            add("estimator", "value", f"unknown estimator {cfg.estimator!r}")
        try:
            parse_observable(_default_observable(cfg), cfg.system,
                             3 if cfg.system == "heisenberg" else len(cfg.freqs.split(",")))
        except ValueError as e:
            add("f", "value", str(e))
    if cfg.command == "joining":
        if cfg.kind not in ("diagonal", "graph", "counterexample"):
            add("kind", "value", f"unknown joining kind {cfg.kind!r}")
        if cfg.kind == "counterexample":
            _check_shear(cfg.s, cfg.scheme, add)
    if cfg.command == "rigidity-sweep":
        try:
            if not _parse_grid(cfg.u_grid):
                add("u_grid", "value", "empty u grid")
        except ValueError:
            add("u_grid", "value", f"cannot parse u grid {cfg.u_grid!r}")
        svals = [x.strip() for x in cfg.s_grid.split(",") if x.strip()]
        if not svals:
            add("s_grid", "value", "empty s grid")
        for sv in svals:
            _check_shear(sv, cfg.scheme, add)
    return diags


def _check_shear(expr, scheme, add):
    try:
        shear = parse_shear(expr)
    except CertificationError as e:
        add("s", "certification", str(e))
        return
    if not shear.certified:
        if shear.value != 0.0:
            add("s", "certification",
                f"shear {expr!r} is rational; 1, alpha, beta, alpha*s must be "
                "linearly independent over Q (use expressions in s0)")
        elif scheme != "direct-haar":
            add("s", "certification", "s = 0 requires the direct-haar scheme")


def _py(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    return v


def _table(columns, rows):
    return {"columns": list(columns), "rows": [[_py(v) for v in r] for r in rows]}


# --- command payloads -------------------------------------------------------


def _cmd_orbit(cfg):
    sys_ = build_system(cfg)
    pts = orbit(sys_, np.zeros(sys_.dim), cfg.n)
    names = ["x", "y", "z"] if sys_.kind == "heisenberg" else \
        [f"x{i+1}" for i in range(sys_.dim)]
    rows = [[k] + [float(c) for c in pts[k]] for k in range(len(pts))]
    return {"orbit": _table(["k"] + names, rows)}


def _battery(cfg):
    if cfg.f and cfg.f != "battery":
        dim = 3 if cfg.system == "heisenberg" else len(cfg.freqs.split(","))
        return [parse_observable(cfg.f, cfg.system, dim)]
    if cfg.system == "heisenberg":
        freqs = [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1)]
        return [heis_character(m) for m in freqs]
    d = len(cfg.freqs.split(","))
    eye = np.eye(d, dtype=int)
    return [torus_character(eye[i]) for i in range(d)]


def _cmd_integrate(cfg):
    sys_ = build_system(cfg)
    mc_pts = haar_sample(cfg.n_ref, cfg.seed + 9176, sys_.dim)
    rows = []
    for obs in _battery(cfg):
        bk = birkhoff_avg(sys_, obs, None, cfg.n)
        mc = complex(np.mean(obs(mc_pts)))
        rows.append([obs.name, bk.real, bk.imag, mc.real, mc.imag, abs(bk - mc)])
    return {"integrate": _table(
        ["observable", "birkhoff_re", "birkhoff_im", "mc_re", "mc_im", "abs_diff"], rows)}


def _cmd_seminorm(cfg):
    sys_ = build_system(cfg)
    dim = sys_.dim
    obs = parse_observable(_default_observable(cfg), cfg.system, dim)
    rows = []
    cols = ["estimator", "k", "value", "stability", "imag_diag",
            "n_side", "n_outer", "n_base", "n_mc", "seed"]
    if cfg.estimator in ("recursive", "both"):
        est = (u1(sys_, obs, cfg.n_base) if cfg.k == 1 else
               uk_recursive(sys_, obs, cfg.k, cfg.n_outer, cfg.n_base))
        rows.append(["recursive", est.k, est.value, est.stability, est.imag_diag,
                     0, est.n_side, est.n_base, 0, cfg.seed])
    if cfg.estimator in ("cube", "both") and cfg.k >= 2:
        est = uk_cube(sys_, obs, cfg.k, cfg.n_side, cfg.n_mc, cfg.seed, cfg.budget)
        rows.append(["cube", est.k, est.value, est.stability, est.imag_diag,
                     est.n_side, 0, 0, est.n_mc, est.seed])
    return {"seminorm": _table(cols, rows)}


def _classify_cfg(cfg, sys_):
    fiber = subnil_diameter(SubnilDescriptor("central_fiber", sample_count=512),
                            sys_.metric, cfg.seed)
    return ClassifyConfig(cfg.bin_size, cfg.min_count, cfg.pair_cap,
                          fiber_diameter=fiber)


def _cmd_joining(cfg):
    sys_ = build_system(cfg)
    if cfg.kind == "diagonal":
        m = diagonal_joining(sys_, cfg.n, cfg.scheme, cfg.seed)
        param = ""
    elif cfg.kind == "graph":
        m = graph_joining(sys_, vertical_map(cfg.u), cfg.n, cfg.seed)
        param = repr(cfg.u)
    else:
        m = counterexample_joining(sys_, cfg.s, cfg.n, cfg.scheme, cfg.seed)
        param = cfg.s
    rep = analyze_joining(m, _classify_cfg(cfg, sys_))
    rows = [["kind", cfg.kind], ["param", param], ["scheme", cfg.scheme],
            ["n", cfg.n], ["seed", cfg.seed]]
    rows += [[k, _py(v)] for k, v in rep.to_dict().items() if k != "thresholds"]
    rows += [[f"threshold_{k}", _py(v)] for k, v in rep.thresholds.items()]
    payload = {"joining_report": _table(["field", "value"], rows)}
    if cfg.dump_points > 0:
        payload["points"] = m.to_table(cfg.dump_points)
    return payload


def _cmd_rigidity(cfg):
    sys_ = build_system(cfg)
    rep = rigidity_sweep(
        sys_, _parse_grid(cfg.u_grid),
        [x.strip() for x in cfg.s_grid.split(",") if x.strip()],
        cfg.n, cfg.seed, cfg.scheme, cfg.max_freq, cfg.max_terms, cfg.u_star,
        classify=_classify_cfg(cfg, sys_))
    return rep.to_payload()


def _cmd_subnil(cfg):
    catalog = default_catalog(cfg.seed, cfg.translates, cfg.qmax, cfg.samples)
    rows = []
    diams = []
    for d in catalog:
        val = subnil_diameter(d, seed=cfg.seed)
        diams.append(val)
        rows.append([d.kind,
                     d.q[0] if d.q else "", d.q[1] if d.q else "",
                     "" if d.base is None else ",".join(f"{b:.6f}" for b in d.base),
                     val])
    summary = [["count", len(catalog)], ["min_diameter", min(diams)],
               ["max_diameter", max(diams)]]
    return {"diameters": _table(["kind", "q1", "q2", "base", "diameter"], rows),
            "summary": _table(["field", "value"], summary)}


_DISPATCH = {
    "orbit": _cmd_orbit,
    "integrate": _cmd_integrate,
    "seminorm": _cmd_seminorm,
    "joining": _cmd_joining,
    "rigidity-sweep": _cmd_rigidity,
    "subnil-probe": _cmd_subnil,
}


def run(cfg):
    """Dispatch a validated config; returns the deterministic result envelope."""
    payload = _DISPATCH[cfg.command](cfg)
    echo = {f.name: getattr(cfg, f.name) for f in dc_fields(RunConfig)}
    return {
        "tool": "nillab",
        "version": __version__,
        "backend": backend.name,
        "command": cfg.command,
        "seed": cfg.seed,
        "config": echo,
        "payload": payload,
    }


# --- emission ---------------------------------------------------------------


def emit_json(envelope):
    return json.dumps(envelope, indent=2) + "\n"


def emit_csv(table):
    buf = io.StringIO()
    w = csv.writer(buf, quoting=csv.QUOTE_MINIMAL, lineterminator="\r\n")
    w.writerow(table["columns"])
    for row in table["rows"]:
        w.writerow(row)
    return buf.getvalue()


def svg_line_chart(xs, ys, xlabel, ylabel, title):
    """Minimal data-only polyline chart (SVG 1.1)."""
    W, H, ML, MB, MT, MR = 640, 400, 70, 50, 30, 20
    xs = [float(x) for x in xs]
    ys = [float(y) for y in ys]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    xr = (x1 - x0) or 1.0
    yr = (y1 - y0) or 1.0

    def X(x):
        return ML + (x - x0) / xr * (W - ML - MR)

    def Y(y):
        return H - MB - (y - y0) / yr * (H - MB - MT)

    pts = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in zip(xs, ys))
    ticks = []
    for i in range(5):
        tx = x0 + xr * i / 4
        ty = y0 + yr * i / 4
        ticks.append(f'<text x="{X(tx):.1f}" y="{H - MB + 18}" font-size="11" '
                     f'text-anchor="middle">{tx:.4g}</text>')
        ticks.append(f'<text x="{ML - 8}" y="{Y(ty):.1f}" font-size="11" '
                     f'text-anchor="end">{ty:.4g}</text>')
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="0 0 {W} {H}">\n'
        f'<rect width="{W}" height="{H}" fill="white"/>\n'
        f'<text x="{W/2}" y="18" font-size="14" text-anchor="middle">{title}</text>\n'
        f'<line x1="{ML}" y1="{H-MB}" x2="{W-MR}" y2="{H-MB}" stroke="black"/>\n'
        f'<line x1="{ML}" y1="{MT}" x2="{ML}" y2="{H-MB}" stroke="black"/>\n'
        f'<text x="{(ML+W-MR)/2}" y="{H-10}" font-size="12" text-anchor="middle">{xlabel}</text>\n'
        f'<text x="16" y="{(MT+H-MB)/2}" font-size="12" text-anchor="middle" '
        f'transform="rotate(-90 16 {(MT+H-MB)/2})">{ylabel}</text>\n'
        + "\n".join(ticks) + "\n"
        f'<polyline points="{pts}" fill="none" stroke="#1f77b4" stroke-width="2"/>\n'
        "</svg>\n"
    )


def write_outputs(envelope, cfg):
    fmts = {x.strip() for x in cfg.formats.split(",") if x.strip()}
    outdir = cfg.out or os.environ.get(OUTDIR_ENV, ".")
    os.makedirs(outdir, exist_ok=True)
    base = cfg.name or cfg.command.replace("-", "_")
    written = []

    def save(fname, text):
        path = os.path.join(outdir, fname)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        written.append(path)

    if "json" in fmts:
        save(f"{base}.json", emit_json(envelope))
    if "csv" in fmts:
        for tname, table in envelope["payload"].items():
            save(f"{base}_{tname}.csv", emit_csv(table))
    if "svg" in fmts and cfg.command == "rigidity-sweep":
        table = envelope["payload"]["graph_family"]
        ci = table["columns"].index
        xs = [r[ci("param")] for r in table["rows"]]
        ys = [r[ci("dist_to_diagonal")] for r in table["rows"]]
        save(f"{base}_graph_family.svg",
             svg_line_chart(xs, ys, "u", "weak-* distance to diagonal",
                            "vertical-rotation graph family"))
    return written


def _build_parser():
    p = argparse.ArgumentParser(prog="nillab",
                                description="nilmanifold dynamics laboratory")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="INI config file ([run] section)")
    p.add_argument("--check", action="store_true",
                   help="validate the config and exit without running")
    for f in dc_fields(RunConfig):
        if f.name == "command":
            continue
        flag = "--" + f.name.replace("_", "-")
        p.add_argument(flag, dest=f.name, type=type(f.default), default=None)
    return p


def main(argv=None):
    args = _build_parser().parse_args(argv)
    values = {}
    unknown = []
    if args.config:
        try:
            values, unknown = config_from_file(args.config)
        except (OSError, ValueError, configparser.Error) as e:
            print(json.dumps({"error": "invalid-config",
                              "diagnostics": [{"field": "config", "code": "value",
                                               "message": str(e)}]}))
            return 2
    for f in dc_fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    values["command"] = args.command
    cfg = replace(RunConfig(), **values)

    diags = [{"field": k, "code": "unknown-field", "message": f"unknown config key {k!r}"}
             for k in unknown]
    diags += validate(cfg)
    if args.check:
        print(json.dumps({"diagnostics": diags}, indent=2))
        return 0 if not diags else (3 if any(d["code"] == "budget" for d in diags) else 2)
    if diags:
        print(json.dumps({"error": "invalid-config", "diagnostics": diags}, indent=2))
        return 3 if any(d["code"] == "budget" for d in diags) else 2

    t0 = time.perf_counter()
    try:
        envelope = run(cfg)
    except BudgetError as e:
        print(json.dumps({"error": "budget-exceeded", "message": str(e)}))
        return 3
    except CertificationError as e:
        print(json.dumps({"error": "invalid-config",
                          "diagnostics": [{"field": "s", "code": "certification",
                                           "message": str(e)}]}))
        return 2
    wall = time.perf_counter() - t0
    written = write_outputs(envelope, cfg)
    outdir = cfg.out or os.environ.get(OUTDIR_ENV, ".")
    meta = {"wall_clock_s": wall, "written": written}
    base = cfg.name or cfg.command.replace("-", "_")
    with open(os.path.join(outdir, f"{base}.meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
    print(f"nillab {cfg.command}: wrote {len(written)} file(s) to {outdir} "
          f"in {wall:.2f}s [{backend.name} backend]", file=_sys.stderr)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
