"""Command-line surface.

Subcommands: geometry, check, sample, enumerate, cluster.  Parameters are
accepted as flags and/or a key=value config file (flags win); every output
is accompanied by an echo of the exact configuration that produced it, so
runs are reproducible byte for byte.  Exit codes: 0 pass, 1 assertion
failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .backend import backend_name
from .cluster import (
    conditional_m_leading,
    field_threshold,
    logZ_leading,
    m_beta_leading,
    xi_unit,
)
from .contours import group_contours
from .kernel import build_kernel
from .oracle import ev_all, ev_window, gibbs_scan
from .params import ModelParams, provisional_exponents
from .sampler import phase_separation_experiment
from .spins import SpinConfig
from .suites import SUITES
from .triangles import build_triangles, droplet_stats

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# configuration round trip
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Flat run configuration; round-trips losslessly through key=value."""

    alpha: float = 0.3
    beta: float = 1.0
    bigJ: float = 10.0
    L: int = 8
    C: float = 14.0
    a: float = 0.0
    gamma: float = 0.0
    nu: float = 0.0
    m: float = 0.0
    seed: int = 1
    sweeps: int = 1000
    replicas: int = 4
    burn_in: int = -1  # -1 = dynamics default
    thin: int = 1
    dynamics: str = "free-glauber"
    eps0_abs: float = -1.0  # -1 = from exponents

    def to_params(self) -> ModelParams:
        a, g, nu = self.a, self.gamma, self.nu
        if a == 0.0 and g == 0.0 and nu == 0.0:
            a, g, nu = provisional_exponents(self.alpha)
        return ModelParams(
            alpha=self.alpha,
            beta=self.beta,
            L=self.L,
            J=self.bigJ,
            C=self.C,
            a=a,
            gamma=g,
            nu=nu,
        )

    def emit(self) -> str:
        lines = [f"{f.name}={getattr(self, f.name)!r}" for f in fields(self)]
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "RunConfig":
        kw = {}
        types = {f.name: f.type for f in fields(cls)}
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {raw!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"unknown config key {key!r}")
            if types[key] in ("int", int):
                kw[key] = int(val)
            elif types[key] in ("float", float):
                kw[key] = float(val)
            else:
                kw[key] = val.strip("'\"")
        return cls(**kw)


def _load_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        cfg = RunConfig.parse(Path(args.config).read_text())
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            setattr(cfg, f.name, v)
    return cfg


def _echo_config(cfg: RunConfig, out_path: Path):
    out_path.with_suffix(out_path.suffix + ".config").write_text(cfg.emit())


def _add_param_flags(sp):
    sp.add_argument("--config", help="key=value config file")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--bigJ", type=float)
    sp.add_argument("--L", type=int)
    sp.add_argument("--C", type=float)
    sp.add_argument("--a", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--nu", type=float)
    sp.add_argument("--m", type=float)
    sp.add_argument("--seed", type=int)


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------


def cmd_geometry(args) -> int:
    cfg = _load_config(args)
    kernel = build_kernel(cfg.to_params().replace(L=max(cfg.L, 1)))
    src = Path(args.input).open() if args.input != "-" else sys.stdin
    out = Path(args.out).open("w") if args.out != "-" else sys.stdout
    status = 0
    try:
        for lineno, raw in enumerate(src, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                sc = SpinConfig.from_text(line, kernel)
            except ValueError as exc:
                print(f"line {lineno}: {exc}", file=sys.stderr)
                return 2
            fam = build_triangles(sc.spins, sc.L)
            cf = group_contours(fam, cfg.C)
            cid = {}
            for gi, g in enumerate(cf):
                for t in g.triangles:
                    cid[t] = gi
            params = cfg.to_params().replace(L=sc.L)
            rep = droplet_stats(sc.spins, params, m_target=cfg.m, family=fam)
            ok = (
                np.array_equal(
                    sc.spins,
                    np.array(
                        [1 if s > 0 else -1 for s in sc.spins], dtype=np.int8
                    ),
                )
                and fam.check_distances()
                and fam.check_nesting_ratio()
            )
            if not ok:
                status = 1
            record = {
                "line": lineno,
                "n_sites": sc.n,
                "energy": sc.energy,
                "m_emp": sc.magnetization,
                "invariants_ok": ok,
                "triangles": [
                    {
                        "i": t.left_flip,
                        "j": t.right_flip,
                        "mass": t.mass,
                        "external": bool(fam.parent[k] == -1),
                        "parent": (
                            None if fam.parent[k] == -1 else int(fam.parent[k])
                        ),
                        "contour_id": cid[t],
                        "norm_alpha": t.mass**cfg.alpha,
                    }
                    for k, t in enumerate(fam.triangles)
                ],
                "droplet": rep.to_dict(),
            }
            out.write(json.dumps(record) + "\n")
    finally:
        if src is not sys.stdin:
            src.close()
        if out is not sys.stdout:
            out.close()
    return status


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------


def cmd_check(args) -> int:
    if args.suite not in SUITES:
        print(
            f"unknown suite {args.suite!r}; available: {', '.join(sorted(SUITES))}",
            file=sys.stderr,
        )
        return 2
    kwargs = {}
    if args.suite == "counting" and args.mass_max:
        kwargs["mass_max"] = args.mass_max
    if args.suite == "peierls" and args.mass_max:
        kwargs["contour_mass_max"] = args.mass_max
    if args.suite == "bijection" and args.n_random:
        kwargs["n_random"] = args.n_random
    report = SUITES[args.suite](**kwargs)
    text = json.dumps(report, indent=2, default=str)
    if args.out:
        Path(args.out).write_text(text + "\n")
    for c in report["checks"]:
        print(f"[{'pass' if c['passed'] else 'FAIL'}] {args.suite}:{c['name']}")
    print(f"suite {args.suite}: {'PASS' if report['passed'] else 'FAIL'}")
    return 0 if report["passed"] else 1


# ---------------------------------------------------------------------------
# sample
# ---------------------------------------------------------------------------

DROPLET_COLUMNS = [
    "chain",
    "sweep",
    "m_emp",
    "rho_emp",
    "n0",
    "is_B",
    "in_S1",
    "in_window",
    "largest_fraction",
    "block_inner",
    "block_outer",
]


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    if args.sweeps is not None:
        cfg.sweeps = args.sweeps
    if args.replicas is not None:
        cfg.replicas = args.replicas
    if args.dynamics is not None:
        cfg.dynamics = args.dynamics
    if args.thin is not None:
        cfg.thin = args.thin
    params = cfg.to_params()
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    stream_path = outdir / "droplets.jsonl"
    summary_path = outdir / "summary.csv"
    _echo_config(cfg, stream_path)

    report = phase_separation_experiment(
        params,
        m=cfg.m,
        replicas=cfg.replicas,
        sweeps=cfg.sweeps,
        dynamics=cfg.dynamics,
        burn_in=None if cfg.burn_in < 0 else cfg.burn_in,
        thin=cfg.thin,
        seed=cfg.seed,
        epsilon0_abs=None if cfg.eps0_abs < 0 else cfg.eps0_abs,
    )
    with stream_path.open("w") as fh:
        header = {
            "schema": SCHEMA_VERSION,
            "config": cfg.emit().strip().split("\n"),
            "m_beta": report.m_beta,
            "rho_target": report.rho_target,
            "backend": backend_name(),
        }
        fh.write(json.dumps(header) + "\n")
        for r, drops in zip(report.replicas, report.reports):
            for k, d in enumerate(drops):
                rec = {"chain": r.replica, "sweep": (k + 1) * cfg.thin}
                rec.update(d.to_dict())
                fh.write(json.dumps(rec) + "\n")
    with summary_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "replica",
                "start",
                "seed",
                "n_measurements",
                "freq_single_droplet",
                "freq_total_fraction",
                "mean_largest_fraction",
                "median_largest_fraction",
                "mean_block_inner",
                "mean_block_outer",
                "acceptance_rate",
                "final_cache_error",
            ]
        )
        for r in report.replicas:
            w.writerow(
                [
                    r.replica,
                    r.start,
                    r.seed,
                    r.n_measurements,
                    r.freq_single_droplet,
                    r.freq_total_fraction,
                    r.mean_largest_fraction,
                    r.median_largest_fraction,
                    r.mean_block_inner,
                    r.mean_block_outer,
                    r.acceptance_rate,
                    r.final_cache_error,
                ]
            )
    print(
        f"wrote {stream_path} and {summary_path}; "
        f"single-droplet frequency {report.freq_single_droplet:.3f}"
    )
    return 0


# ---------------------------------------------------------------------------
# enumerate
# ---------------------------------------------------------------------------


def _parse_events(spec: str, params: ModelParams):
    events = []
    for token in spec.split(";"):
        token = token.strip()
        if not token:
            continue
        if token == "all":
            events.append(ev_all())
        elif token.startswith("window:"):
            kw = dict(kv.split("=") for kv in token[len("window:") :].split(","))
            m = float(kw.get("m", 0.0))
            eps0 = float(kw.get("eps0", params.eps0))
            events.append(ev_window(m, eps0 * params.n_sites, params.n_sites))
        else:
            raise ValueError(f"unknown event spec {token!r}")
    return events


def cmd_enumerate(args) -> int:
    cfg = _load_config(args)
    params = cfg.to_params()
    try:
        events = _parse_events(args.events, params)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    res = gibbs_scan(params, events)
    out = Path(args.out)
    _echo_config(cfg, out)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event", "observable", "value", "configs"])
        w.writerow(["all", "logZ", res.log_z, res.n_configs])
        for name, acc in res.accumulators.items():
            if acc.count == 0:
                w.writerow([name, "probability", 0.0, 0])
                continue
            w.writerow([name, "probability", acc.weight / res.z, acc.count])
            w.writerow([name, "mean_m", res.mean_m(name), acc.count])
            w.writerow(
                [name, "mean_sigma0", res.mean_sigma(name, params.L), acc.count]
            )
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------


def cmd_cluster(args) -> int:
    cfg = _load_config(args)
    params = cfg.to_params()
    out = Path(args.out)
    _echo_config(cfg, out)
    from .oracle import log_partition, site_magnetizations
    from .cluster import finite_volume_slack

    logz = log_partition(params)
    m0 = float(site_magnetizations(params)[params.L])
    rows = []
    env = logZ_leading(params)
    rows.append(
        ("logZ", env.center, env.half_width, env.kind, logz, env.contains(logz))
    )
    env = m_beta_leading(params)
    slack = finite_volume_slack(params)
    rows.append(
        (
            "m_beta",
            env.center,
            env.half_width,
            env.kind,
            m0,
            env.contains(m0, extra_slack=slack),
        )
    )
    for rho in (0.25, 0.5):
        env = conditional_m_leading(rho, params)
        rows.append(
            (f"conditional_m(rho={rho})", env.center, env.half_width, env.kind, "", "")
        )
    rows.append(("xi_unit", xi_unit(params), 0.0, "exact", "", ""))
    rows.append(
        (
            "field_threshold_very_small",
            field_threshold("very-small", params),
            0.0,
            "exact",
            "",
            "",
        )
    )
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "center", "half_width", "kind", "exact", "contained"])
        for r in rows:
            w.writerow(r)
    print(f"wrote {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="lrising",
        description="long-range Ising chain: geometry, exact oracles, "
        "sampling and verification suites",
    )
    ap.add_argument("--version", action="version", version=f"lrising {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("geometry", help="triangles/contours/droplet report per spin line")
    _add_param_flags(g)
    g.add_argument("--input", default="-", help="spin text file, '-' for stdin")
    g.add_argument("--out", default="-", help="output JSONL, '-' for stdout")
    g.set_defaults(func=cmd_geometry)

    c = sub.add_parser("check", help="run a named verification suite")
    c.add_argument("--suite", required=True)
    c.add_argument("--mass-max", type=int, default=0, dest="mass_max")
    c.add_argument("--n-random", type=int, default=0, dest="n_random")
    c.add_argument("--out", help="write the JSON report here")
    c.set_defaults(func=cmd_check)

    s = sub.add_parser("sample", help="sample the conditioned ensemble")
    _add_param_flags(s)
    s.add_argument("--dynamics", choices=["free-glauber", "window-restricted", "fixed-exchange"])
    s.add_argument("--sweeps", type=int)
    s.add_argument("--replicas", type=int)
    s.add_argument("--thin", type=int)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sample)

    e = sub.add_parser("enumerate", help="exact small-volume expectations")
    _add_param_flags(e)
    e.add_argument("--events", default="all", help="e.g. 'all;window:m=0,eps0=0.2'")
    e.add_argument("--out", required=True, help="output CSV")
    e.set_defaults(func=cmd_enumerate)

    cl = sub.add_parser("cluster", help="leading-order envelopes vs exact values")
    _add_param_flags(cl)
    cl.add_argument("--out", required=True, help="output CSV")
    cl.set_defaults(func=cmd_cluster)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
