"""Command-line front end.

    zeropot catalog
    zeropot sample  --family inverse-quartic-74 --g 1 --grid log:1e-2,20,400
    zeropot compose --base free --inner exp:lambda=-5,mu=1
    zeropot iterate --base rational --inner quartic:g=4,b=1 --depth 2 --format json
    zeropot verify  --all

Settings may also come from ``--config job.json`` (same keys as the long
flags); flags on the command line win. The default tolerance profile is
read from ``ZEROPOT_TOL_PROFILE`` (``strict``, ``default`` or ``fast``).

Exit status: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from . import __version__
from .analysis import residual_profile, run_suite, verify_pair, verify_system
from .catalog import FAMILIES, FamilyId, make_pair, potential
from .errors import AdmissibilityError, DepthLimit, DomainError, NotAdmissible, ParamDomain, ZeropotError
from .numerics import TOLERANCE_PROFILES, GridSpec
from .transform import iterate

ENV_PROFILE = "ZEROPOT_TOL_PROFILE"
DEFAULT_GRID = "log:1e-2,20,400"
PARAM_FLAGS = ("lambda", "mu", "a", "b", "g", "n", "ell", "alpha", "beta", "g1", "g2", "p", "R0")
COMMANDS = ("catalog", "compose", "iterate", "verify", "sample")


class ConfigError(Exception):
    pass


@dataclass
class JobConfig:
    command: str
    family: Optional[str] = None
    params: dict = field(default_factory=dict)
    base: Optional[str] = None
    inner: Optional[str] = None
    depth: int = 1
    grid: str = DEFAULT_GRID
    tol_profile: str = "default"
    out: Optional[str] = None
    report: Optional[str] = None
    format: str = "csv"
    all: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.tol_profile not in TOLERANCE_PROFILES:
            raise ConfigError(f"unknown tolerance profile {self.tol_profile!r}; known: {', '.join(TOLERANCE_PROFILES)}")
        if int(self.depth) != self.depth or self.depth < 1:
            raise ConfigError(f"depth must be an integer >= 1, got {self.depth}")
        try:
            GridSpec.parse(self.grid)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad grid {self.grid!r}: {exc}") from exc
        if self.command == "sample" and not self.family:
            raise ConfigError("sample needs --family")
        if self.command in ("compose", "iterate") and not (self.base and self.inner):
            raise ConfigError(f"{self.command} needs --base and --inner")
        if self.params and self.command not in ("sample", "verify"):
            raise ConfigError("named parameter flags apply to --family; give base/inner parameters inline, "
                              "e.g. --inner exp:lambda=-5,mu=1")


# ------------------------------------------------------------------ parsing


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="zeropot", description="Compose and verify solvable zero-energy potentials.")
    ap.add_argument("--version", action="version", version=f"zeropot {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, grid=True):
        p.add_argument("--config", help="JSON file with job settings; flags override it")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--tol-profile", dest="tol_profile", choices=sorted(TOLERANCE_PROFILES))
        if grid:
            p.add_argument("--grid", help=f"r grid as spacing:r_min,r_max,points (default {DEFAULT_GRID})")

    def param_flags(p):
        g = p.add_argument_group("family parameters")
        for name in PARAM_FLAGS:
            g.add_argument(f"--{name}", dest=f"param_{name}", type=float, metavar="X")

    p = sub.add_parser("catalog", help="list families with their parameter domains")
    common(p, grid=False)

    p = sub.add_parser("sample", help="export r, V, phi, chi for one family")
    common(p)
    p.add_argument("--family")
    param_flags(p)

    for name, helptext in (("compose", "compose a base pair with an inner potential"),
                           ("iterate", "repeat the composition with the same base")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--base", help="base family, e.g. rational or rational-exp-22:lambda=1,a=1")
        p.add_argument("--inner", help="inner family, e.g. exp:lambda=-5,mu=1")
        p.add_argument("--report", help="also write the JSON verification report here")
        if name == "iterate":
            p.add_argument("--depth", type=int)
        param_flags(p)

    p = sub.add_parser("verify", help="run the verification suite")
    common(p, grid=False)
    p.add_argument("--all", action="store_true", default=None, help="every catalog family and the standard composed systems")
    p.add_argument("--family", help="verify a single family's pair")
    param_flags(p)
    return ap


def build_config(argv: Optional[list[str]] = None) -> JobConfig:
    ns = _parser().parse_args(argv)
    data: dict = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {ns.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    known = {f.name for f in fields(JobConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    data["command"] = ns.command
    params = dict(data.get("params") or {})
    for key, val in vars(ns).items():
        if key.startswith("param_"):
            if val is not None:
                params[key[len("param_"):]] = val
        elif key in known and val is not None:
            data[key] = val
    data["params"] = params
    env = os.environ.get(ENV_PROFILE)
    if env and "tol_profile" not in data:
        data["tol_profile"] = env
    if ns.command == "compose":
        data["depth"] = 1
    cfg = JobConfig(**data)
    cfg.validate()
    return cfg


# ------------------------------------------------------------------- output


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def to_csv(columns: dict[str, np.ndarray]) -> str:
    buf = io.StringIO()
    buf.write(f"# zeropot {__version__}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(columns))
    for row in zip(*columns.values()):
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(columns: dict[str, np.ndarray]) -> dict:
    # NaN is not valid JSON
    return {k: [float(v) if np.isfinite(v) else None for v in arr] for k, arr in columns.items()}


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _family(text: str, params: Optional[dict] = None) -> FamilyId:
    fid = FamilyId.parse(text)
    return FamilyId(fid.id, {**fid.params, **(params or {})})


# ----------------------------------------------------------------- commands


def cmd_catalog(cfg: JobConfig) -> int:
    rows = [{"id": f.id, "defaults": dict(f.defaults), "domain": f.domain} for f in FAMILIES.values()]
    if cfg.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", cfg.out)
        return 0
    width = max(len(r["id"]) for r in rows)
    lines = []
    for r in rows:
        defaults = ",".join(f"{k}={v:g}" for k, v in r["defaults"].items()) or "-"
        lines.append(f"{r['id']:<{width}}  {defaults:<32}  {r['domain']}")
    _emit("\n".join(lines) + "\n", cfg.out)
    return 0


def cmd_sample(cfg: JobConfig) -> int:
    fid = _family(cfg.family, cfg.params)
    r = GridSpec.parse(cfg.grid).radii()
    V = potential(fid)
    with np.errstate(all="ignore"):
        cols = {"r": r, "V": np.asarray(V.evaluate(r), dtype=float)}
        try:
            pair = make_pair(fid)
        except NotAdmissible:
            pair = None  # potential-only family
        if pair is not None:
            cols["phi"] = np.asarray(pair.phi(r), dtype=float)
            cols["chi"] = np.asarray(pair.chi(r), dtype=float)
    if cfg.format == "json":
        _emit(json.dumps({"version": __version__, "config": asdict(cfg), "samples": _jsonable(cols)}, indent=2) + "\n",
              cfg.out)
    else:
        _emit(to_csv(cols), cfg.out)
    return 0


def cmd_compose(cfg: JobConfig) -> int:
    tol = TOLERANCE_PROFILES[cfg.tol_profile]
    base = make_pair(_family(cfg.base))
    inner = potential(_family(cfg.inner))
    system = iterate(base, inner, cfg.depth, tol=tol)
    r = GridSpec.parse(cfg.grid).radii()
    if r[-1] > system.r_max:
        raise DomainError(f"grid reaches r = {r[-1]:g} beyond the composed system's r_max = {system.r_max:g}")
    rp = r[r > 0]
    with np.errstate(all="ignore"):
        res = np.full_like(r, np.nan)
        res[r > 0] = residual_profile(system.as_potential(), system.phi, rp, system.dphi,
                                         (system.base.domain[0], system.r_max))
        cols = {
            "r": r,
            "V": np.asarray(system.potential_value(r), dtype=float),
            "phi": np.asarray(system.phi(r), dtype=float),
            "x": np.asarray(system.mapping.forward(r), dtype=float),
            "residual": res,
        }
    report = verify_system(system, gate=1e-6 if cfg.depth == 1 else 1e-5)
    doc = {"version": __version__, "config": asdict(cfg), "provenance": list(system.provenance),
           "report": report.to_dict()}
    if cfg.format == "json":
        doc["samples"] = _jsonable(cols)
        _emit(json.dumps(doc, indent=2) + "\n", cfg.out)
    else:
        _emit(to_csv(cols), cfg.out)
    if cfg.report:
        with open(cfg.report, "w") as fh:
            fh.write(json.dumps(doc, indent=2) + "\n")
    print(_summary(report), file=sys.stderr)
    return 0 if report.passed else 1


def _summary(rep) -> str:
    status = "PASS" if rep.passed else "FAIL"
    parts = [f"{status} {rep.subject}"]
    if rep.node_count is not None:
        parts.append(f"node_count={rep.node_count}")
    if rep.max_residual_rel is not None:
        parts.append(f"residual={rep.max_residual_rel:.3g}")
    if rep.max_wronskian_dev is not None:
        parts.append(f"wronskian_dev={rep.max_wronskian_dev:.3g}")
    if rep.bargmann_bound is not None:
        parts.append(f"bargmann={rep.bargmann_bound:.6g}")
    line = "  ".join(parts)
    for c in rep.failures():
        line += f"\n    failed check {c.name}: value={c.value} limit={c.limit} {c.detail}".rstrip()
    return line


def cmd_verify(cfg: JobConfig) -> int:
    if cfg.family:
        reports = [verify_pair(make_pair(_family(cfg.family, cfg.params)))]
    elif cfg.all:
        reports = run_suite()
    else:
        raise ConfigError("verify needs --all or --family")
    if cfg.format == "json":
        doc = {"version": __version__, "config": asdict(cfg), "reports": [r.to_dict() for r in reports]}
        _emit(json.dumps(doc, indent=2) + "\n", cfg.out)
    else:
        _emit("\n".join(_summary(r) for r in reports) + "\n", cfg.out)
    failed = [r.subject for r in reports if not r.passed]
    if failed:
        print(f"verification failed: {len(failed)} of {len(reports)} subjects", file=sys.stderr)
        return 1
    return 0


HANDLERS = {"catalog": cmd_catalog, "sample": cmd_sample, "compose": cmd_compose, "iterate": cmd_compose,
            "verify": cmd_verify}

CONFIG_ERRORS = (ConfigError, ParamDomain, NotAdmissible, AdmissibilityError, DepthLimit, DomainError, ValueError)


def run(cfg: JobConfig) -> int:
    try:
        return HANDLERS[cfg.command](cfg)
    except CONFIG_ERRORS as exc:
        print(f"zeropot: configuration error: {exc}", file=sys.stderr)
        return 2
    except ZeropotError as exc:
        print(f"zeropot: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv: Optional[list[str]] = None) -> int:
    try:
        cfg = build_config(argv)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"zeropot: configuration error: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
