"""Command-line front end: ``qrabi {spectrum,gfunction,husimi,stats}``.

Every output file starts with the full run configuration (as ``#`` comment
lines in CSV, a ``config`` field in JSON, a metadata block in SVG), and no
file contains timestamps or timings, so reruns are byte-identical.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import analytic, eigen, gfunction, husimi, stats, svg
from .config import RunConfig, parse_value
from .model import ModelParams, Sector, build_sector_hamiltonian, scaled_params, suggest_dim

DEFAULT_STATS_DELTAS = (0.0, 0.5, 0.95, 0.9999)
DEFAULT_GROUND_DELTAS = (0.01, 0.5, 0.9)
STATS_DIM = 30000
# beyond this g̃ the G-series cancels away more than ~10 digits between poles
MAX_G_TILDE = 5.0


class CliError(RuntimeError):
    pass


# ---------------------------------------------------------------- output helpers

def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _write(path: Path, text: str):
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}") from exc


def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path: Path, config: RunConfig, header, rows):
    buf = io.StringIO()
    for line in config.to_text().splitlines():
        buf.write(f"# {line}\n" if not line.startswith("#") else line + "\n")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if not isinstance(v, str) else v for v in row])
    _write(path, buf.getvalue())


def write_json(path: Path, config: RunConfig, payload: dict):
    doc = {"config": config.to_dict(), **payload}
    _write(path, json.dumps(_clean(doc), indent=2, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n")


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


def _map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _label(delta: float) -> str:
    return f"d{delta!r}"


# ---------------------------------------------------------------- spectrum

def _spectrum_job(args):
    config, delta = args
    p = config.model(delta)
    if p.delta >= 1.0:
        raise CliError("delta = 1 has a continuous spectrum; choose delta < 1")
    dim = max(config.dim or 0, suggest_dim(p, config.levels, 1.0))
    sector = config.sector_enum
    ev = eigen.eigenvalues(build_sector_hamiltonian(p, sector, dim), (0, config.levels))
    probe = eigen.eigenvalues(build_sector_hamiltonian(p, sector, eigen.default_probe_dim(dim)), (0, config.levels))
    converged = int(np.sum(np.cumprod(np.abs(ev - probe) <= 1e-8 * p.omega)))
    return delta, dim, ev, converged


def spectrum_deltas(config: RunConfig) -> tuple[float, ...]:
    if config.delta_list is not None:
        return config.delta_list
    return tuple(float(d) for d in np.linspace(0.0, 1.0, config.delta_points, endpoint=False))


def cmd_spectrum(config: RunConfig) -> list[Path]:
    out = _out_dir(config)
    results = _map(_spectrum_job, [(config, d) for d in spectrum_deltas(config)], config.workers)
    rows = [(d, j, e) for d, _, ev, _ in results for j, e in enumerate(ev)]
    paths = [out / "energies.csv", out / "spectrum_meta.json"]
    write_csv(paths[0], config, ["delta", "level_index", "energy"], rows)
    meta = [{"delta": d, "dim": dim, "converged_levels": c} for d, dim, _, c in results]
    write_json(paths[1], config, {"runs": meta})
    return paths


# ---------------------------------------------------------------- gfunction

def cmd_gfunction(config: RunConfig) -> list[Path]:
    out = _out_dir(config)
    deltas = config.delta_list if config.delta_list is not None else (config.delta,)
    rows, runs = [], []
    for delta in deltas:
        p = config.model(delta)
        if p.delta >= 1.0:
            raise CliError("G-function needs delta < 1; the delta = 1 limit is handled by the husimi relativistic mode")
        sc = scaled_params(p)
        if sc.g_tilde > MAX_G_TILDE:
            raise CliError(f"delta = {delta}: g_tilde = {sc.g_tilde:.3g} exceeds {MAX_G_TILDE}; poles are too dense "
                           "for the series to resolve roots reliably. Use `qrabi spectrum` at this delta instead.")
        if sc.g_tilde == 0.0:
            raise CliError("G-function needs g > 0")
        reports = gfunction.find_roots(sc, config.k_max)
        for r in reports:
            lo, hi = r.interval
            a, b = (lo, hi - gfunction.POLE_EPS) if r.k < 0 else (lo + gfunction.POLE_EPS, hi - gfunction.POLE_EPS)
            xs = np.linspace(a, b, 64)
            for x, gv in zip(xs, gfunction.g_values(sc, xs)):
                rows.append((delta, x, gv))
        runs.append({
            "delta": delta,
            "g_tilde": sc.g_tilde,
            "omega0_tilde": sc.omega0_tilde,
            "reports": [{"k": r.k, "interval": list(r.interval), "roots": r.roots, "count": r.count,
                         "unresolved": r.unresolved, "note": r.note} for r in reports],
            "energies": gfunction.root_energies(sc, reports),
            "pattern": gfunction.root_pattern(reports),
        })
    paths = [out / "gfunction.csv", out / "roots.json"]
    write_csv(paths[0], config, ["delta", "x", "G"], rows)
    write_json(paths[1], config, {"runs": runs})
    return paths


# ---------------------------------------------------------------- husimi

def _ground_state(config: RunConfig, delta: float):
    p = config.model(delta)
    dim = max(config.dim or 0, suggest_dim(p, 8, 1.0))
    best = None
    for sector in (Sector.PLUS, Sector.MINUS):
        sp = eigen.eigenpairs(build_sector_hamiltonian(p, sector, dim), (0, 1))
        if best is None or sp.energies[0] < best[0] - 1e-12:
            best = (float(sp.energies[0]), sector, sp.vectors[:, 0])
    energy, sector, v = best
    parity = np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)
    # reduced boson state of the laboratory eigenstate: equal mixture of psi and Pi psi
    return [v, parity * v], [0.5, 0.5], {"energy": energy, "sector": sector.value, "dim": dim}


def _panel(config: RunConfig, comps, weights, window_hint) -> husimi.PhaseSpaceGrid:
    if config.window is not None:
        if len(config.window) != 4:
            raise CliError("window needs xmin,xmax,ymin,ymax")
        x0, x1, y0, y1 = config.window
        return husimi.PhaseSpaceGrid((x0, x1), (y0, y1), config.grid, config.grid)
    q = window_hint if window_hint is not None else analytic.state_quadratures(comps, weights)
    return husimi.PhaseSpaceGrid.centred(q.mean_x, q.mean_y, q.var_x, q.var_y, config.grid)


def husimi_panels(config: RunConfig) -> list[tuple[str, husimi.QField, dict]]:
    mode = config.mode or "degenerate"
    panels = []
    if mode == "degenerate":
        p = config.model(0.0)
        for n in config.n:
            q = analytic.degenerate_quadratures(p, n)
            grid = _panel(config, None, None, q)
            panels.append((f"n{n}", husimi.q_degenerate_closed_form(p, n, grid), {"n": n, "delta": 0.0}))
    elif mode == "ground":
        deltas = config.delta_list if config.delta_list is not None else DEFAULT_GROUND_DELTAS
        for d in deltas:
            comps, weights, info = _ground_state(config, d)
            grid = _panel(config, comps, weights, None)
            panels.append((_label(d), husimi.q_from_fock_state(comps, grid, weights), {"delta": d, **info}))
    elif mode == "relativistic":
        p = config.model(1.0)
        st = analytic.finite_mu_state(p, config.x, config.mu, analytic.required_squeezed_dim(config.x, config.mu))
        comps, weights = st.reduced_state()
        grid = _panel(config, comps, weights, None)
        q = husimi.q_relativistic_closed_form(p, config.x, config.mu, grid)
        panels.append(("relativistic", q, {"x": config.x, "mu": config.mu}))
    elif mode == "vacuum":
        vac = np.zeros(4)
        vac[0] = 1.0
        grid = _panel(config, [vac], [1.0], None)
        panels.append(("vacuum", husimi.q_from_fock_state(vac, grid), {}))
    else:
        raise CliError(f"unknown husimi mode {mode!r}; use degenerate, ground, relativistic or vacuum")
    for label, q, _ in panels:
        if q.norm_estimate < 0.9:
            raise CliError(f"panel {label}: grid captures only {q.norm_estimate:.3f} of Q; "
                           "enlarge the window (--window xmin,xmax,ymin,ymax)")
    return panels


def cmd_husimi(config: RunConfig) -> list[Path]:
    out = _out_dir(config)
    panels = husimi_panels(config)
    paths = []
    single = len(panels) == 1
    cfg_text = config.to_text()
    summary = []
    for label, q, info in panels:
        stem = "q" if single else f"q_{label}"
        xs, ys = q.grid.xs, q.grid.ys
        rows = [(xs[i], ys[j], q.values[j, i]) for j in range(q.grid.ny) for i in range(q.grid.nx)]
        write_csv(out / f"{stem}.csv", config, ["x", "y", "Q"], rows)
        _write(out / f"{stem}.svg", svg.heatmap(xs, ys, q.values, title=f"Husimi Q ({label})", metadata=cfg_text))
        paths += [out / f"{stem}.csv", out / f"{stem}.svg"]
        summary.append({"label": label, "norm_estimate": q.norm_estimate, "max": float(q.values.max()),
                        "meta": {k: v for k, v in q.meta.items()}, **info})
    write_json(out / "husimi.json", config, {"panels": summary})
    paths.append(out / "husimi.json")
    return paths


# ---------------------------------------------------------------- stats

def _stats_job(args):
    config, delta = args
    p = config.model(delta)
    if p.delta >= 1.0:
        return {"delta": delta, "status": "rejected", "reason": "delta = 1 has no discrete spectrum"}
    dim = config.dim or STATS_DIM
    spec = eigen.compute_spectrum(p, config.sector_enum, dim, keep_fraction=config.keep_fraction)
    certified = True
    try:
        s1 = stats.spacings(spec, 1, keep_fraction=config.keep_fraction)
        s2 = stats.spacings(spec, 2, keep_fraction=config.keep_fraction)
    except stats.InsufficientLevelsError as exc:
        need = suggest_dim(p, int(config.keep_fraction * dim), config.keep_fraction)
        if not config.allow_unconverged:
            return {"delta": delta, "status": "unconverged", "dim": dim,
                    "converged_count": spec.converged_count, "required_dim": need, "reason": str(exc)}
        certified = False
        raw = spec.energies
        s1 = stats.spacings(raw, 1, keep_fraction=config.keep_fraction, omega=p.omega)
        s2 = stats.spacings(raw, 2, keep_fraction=config.keep_fraction, omega=p.omega)
    return {"delta": delta, "status": "ok", "certified": certified, "dim": dim,
            "converged_count": spec.converged_count, "s1": s1, "s2": s2}


def cmd_stats(config: RunConfig) -> list[Path]:
    out = _out_dir(config)
    deltas = config.delta_list if config.delta_list is not None else DEFAULT_STATS_DELTAS
    results = _map(_stats_job, [(config, d) for d in deltas], config.workers)
    ok = [r for r in results if r["status"] == "ok"]
    for r in results:
        if r["status"] != "ok":
            msg = r["reason"]
            if "required_dim" in r:
                msg += f" (about dim = {r['required_dim']} needed; --allow-unconverged keeps uncertified levels)"
            print(f"warning: delta = {r['delta']}: {msg}", file=sys.stderr)
    if not ok:
        raise CliError("no delta produced converged levels; raise --dim")
    cfg_text = config.to_text()
    paths = []
    report = []
    for k in config.k_orders:
        if k not in (1, 2):
            raise CliError("k_orders may only contain 1 and 2")
        key = f"s{k}"
        rows = [(r["delta"], n, s) for r in ok for n, s in enumerate(r[key].values)]
        write_csv(out / f"spacing_k{k}.csv", config, ["delta", "n", "s"], rows)
        hrows = []
        for r in ok:
            h = stats.histogram(r[key], config.bins)
            hrows += [(r["delta"], a, b, d) for a, b, d in zip(h.bin_edges[:-1], h.bin_edges[1:], h.density)]
            name = f"hist_k{k}_{_label(r['delta'])}.svg"
            _write(out / name, svg.histogram_chart(h.bin_edges, h.density, metadata=cfg_text,
                                                   title=f"P(s{k}), delta = {r['delta']}", xlabel=f"s{k}"))
            paths.append(out / name)
        write_csv(out / f"hist_k{k}.csv", config, ["delta", "bin_left", "bin_right", "density"], hrows)
        paths += [out / f"spacing_k{k}.csv", out / f"hist_k{k}.csv"]
    for r in results:
        if r["status"] != "ok":
            report.append({k: v for k, v in r.items()})
            continue
        p = config.model(r["delta"])
        entry = stats.interweave_report(r["s1"], r["s2"], config.bins)
        h1 = stats.histogram(r["s1"], config.bins)
        entry.update({"delta": r["delta"], "status": "ok", "certified": r["certified"], "dim": r["dim"],
                      "converged_count": r["converged_count"],
                      "pole_spacing": stats.pole_spacing_diagnostic(p) / p.omega,
                      "s1_local_maxima": len(h1.peak_locations)})
        report.append(entry)
    write_json(out / "interweave_report.json", config, {"runs": report})
    paths.append(out / "interweave_report.json")
    return paths


# ---------------------------------------------------------------- argument parsing

COMMANDS = {"spectrum": cmd_spectrum, "gfunction": cmd_gfunction, "husimi": cmd_husimi, "stats": cmd_stats}

_FLAGS = [
    ("--omega", "omega", "boson frequency"),
    ("--omega0", "omega0", "qubit splitting"),
    ("--g", "g", "coupling"),
    ("--delta", "delta", "single interpolation parameter in [0, 1]"),
    ("--delta-list", "delta_list", "comma separated deltas (a sweep)"),
    ("--delta-points", "delta_points", "points of the default spectrum sweep over [0, 1)"),
    ("--dim", "dim", "Fock truncation"),
    ("--sector", "sector", "plus or minus"),
    ("--levels", "levels", "levels per delta for `spectrum`"),
    ("--keep-fraction", "keep_fraction", "fraction of computed levels used for statistics"),
    ("--bins", "bins", "histogram bin width"),
    ("--k-orders", "k_orders", "spacing orders, e.g. 1,2"),
    ("--mode", "mode", "husimi: degenerate, ground, relativistic or vacuum"),
    ("--grid", "grid", "phase-space points per axis"),
    ("--window", "window", "phase-space window xmin,xmax,ymin,ymax"),
    ("--n", "n", "degenerate levels, e.g. 0,5,10"),
    ("--x", "x", "position for the relativistic state"),
    ("--mu", "mu", "squeezing regulariser in [0, 1)"),
    ("--k-max", "k_max", "number of pole intervals scanned by `gfunction`"),
    ("--workers", "workers", "worker processes for delta sweeps"),
    ("--out", "out", "output directory"),
]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrabi", description="Interpolating Rabi model: spectra, "
                                     "G-function roots, Husimi Q-functions and spacing statistics.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="flat key = value config file; flags override it")
        for flag, dest, help_ in _FLAGS:
            sp.add_argument(flag, dest=dest, default=None, help=help_)
        sp.add_argument("--allow-unconverged", dest="allow_unconverged", action="store_const", const="true",
                        default=None, help="stats: keep uncertified levels instead of skipping that delta")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    base = RunConfig.load(ns.config) if ns.config else RunConfig()
    overrides = {"command": ns.command}
    for _, dest, _ in _FLAGS:
        val = getattr(ns, dest)
        if val is not None:
            overrides[dest] = parse_value(dest, val)
    if ns.allow_unconverged is not None:
        overrides["allow_unconverged"] = True
    if ns.delta is not None and ns.delta_list is None:
        # a single --delta is a one-entry sweep
        overrides["delta_list"] = (float(ns.delta),)
    return base.replace(**overrides)


def run(config: RunConfig) -> list[Path]:
    out = _out_dir(config)
    _write(out / "run.cfg", config.to_text())
    return COMMANDS[config.command](config)


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        config = config_from_args(ns)
        paths = run(config)
    except (CliError, ValueError) as exc:
        print(f"qrabi: error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
