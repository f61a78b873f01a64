"""Command-line driver.

    szegoutm ellipse-bvp --a 2 --b 1 --m 2 --N 16 --out results/
    szegoutm vortex --vertices "4,-1;0,3;-4,-1;0,0" --z0 0,2 --gamma 1
    szegoutm vortex-punctured --vertices ... --z0 ...
    szegoutm verify --suite disc-kernels

Exit codes: 0 success, 2 configuration error, 3 numerical failure.  Errors are
reported as one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import apps, kernels, transform
from .conformal import DiscMap, build_ellipse_map
from .errors import SzegoError
from .geometry import PanelQuadrature

PROBLEMS = ("ellipse-bvp", "vortex", "vortex-punctured", "verify")
SUITES = ("disc-kernels",)
PAPER_VERTICES = "4,-1;0,3;-4,-1;0,0"


class ConfigError(Exception):
    pass


def parse_complex(text) -> complex:
    """'re,im' (or a bare real) -> complex; two-element lists are accepted too."""
    if isinstance(text, (list, tuple)):
        if len(text) != 2:
            raise ConfigError(f"complex value needs two components: {text!r}")
        return complex(float(text[0]), float(text[1]))
    if isinstance(text, (int, float)):
        return complex(text)
    parts = str(text).split(",")
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse complex value {text!r}; expected 're,im'")


def parse_vertices(text) -> list[complex]:
    if isinstance(text, (list, tuple)):
        return [parse_complex(v) for v in text]
    return [parse_complex(p) for p in str(text).split(";") if p.strip()]


@dataclass
class RunConfig:
    problem: str
    a: float = 2.0
    b: float = 1.0
    m: int = 2
    vertices: list = field(default_factory=lambda: parse_vertices(PAPER_VERTICES))
    z0: complex = 2j
    gamma: float = 1.0
    N: int = 16
    N_k: int | None = None
    panels: int | None = None
    tol: float = 1e-12
    r: float = 0.5
    nx: int = 81
    ny: int = 41
    levels: int = 12
    manufactured: bool = False
    suite: str = "disc-kernels"
    out: str = "."
    formats: list = field(default_factory=lambda: ["csv", "json", "svg"])

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}")
        if self.problem == "ellipse-bvp":
            if not (self.a > self.b > 0):
                raise ConfigError("need a > b > 0")
            if self.m < 1:
                raise ConfigError("need m >= 1")
        if self.problem in ("vortex", "vortex-punctured") and len(self.vertices) != 4:
            raise ConfigError("the vortex solvers need a quadrilateral (four vertices)")
        if self.N < 1:
            raise ConfigError("need N >= 1")
        if self.N_k is not None and self.N_k < 1:
            raise ConfigError("need N_k >= 1")
        if self.panels is not None and self.panels < 1:
            raise ConfigError("need panels >= 1")
        if not (0 < self.r < 1):
            raise ConfigError("contour radius r must lie in (0, 1)")
        if not (0 < self.tol < 1):
            raise ConfigError("tol must lie in (0, 1)")
        if self.nx < 2 or self.ny < 2:
            raise ConfigError("grid needs nx, ny >= 2")
        if self.levels < 1:
            raise ConfigError("need levels >= 1")
        if self.suite not in SUITES:
            raise ConfigError(f"unknown verification suite {self.suite!r}")
        bad = set(self.formats) - {"csv", "json", "svg"}
        if bad:
            raise ConfigError(f"unknown output formats {sorted(bad)}")
        return self

    # canonical JSON form: complex numbers as [re, im]
    def to_dict(self) -> dict:
        d = asdict(self)
        d["z0"] = [self.z0.real, self.z0.imag]
        d["vertices"] = [[v.real, v.imag] for v in self.vertices]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown configuration keys {sorted(extra)}")
        d = dict(d)
        if "problem" not in d:
            raise ConfigError("configuration needs a problem")
        if "z0" in d:
            d["z0"] = parse_complex(d["z0"])
        if "vertices" in d:
            d["vertices"] = parse_vertices(d["vertices"])
        try:
            cfg = cls(**d)
            for name, typ in (("a", float), ("b", float), ("gamma", float), ("tol", float), ("r", float)):
                setattr(cfg, name, typ(getattr(cfg, name)))
            for name in ("m", "N", "nx", "ny", "levels"):
                v = getattr(cfg, name)
                if int(v) != v:
                    raise ConfigError(f"{name} must be an integer")
                setattr(cfg, name, int(v))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        return cls.from_dict(json.loads(text))

    def provenance(self) -> str:
        """Resolved configuration minus the output location, so reruns elsewhere stay byte-identical."""
        d = self.to_dict()
        d.pop("out")
        return json.dumps(d, sort_keys=True)

    def numerics(self) -> dict:
        return {"N": self.N, "N_k": self.N_k, "panels": self.panels, "tol": self.tol, "r": self.r,
                "nx": self.nx, "ny": self.ny}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="szegoutm", description="Transform-method solvers for mixed boundary value problems.")
    sub = p.add_subparsers(dest="problem", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON configuration file; flags override its values")
        sp.add_argument("--N", type=int)
        sp.add_argument("--N_k", "--Nk", dest="N_k", type=int)
        sp.add_argument("--panels", type=int)
        sp.add_argument("--tol", type=float)
        sp.add_argument("--r", type=float)
        sp.add_argument("--out")
        sp.add_argument("--formats", help="comma-separated subset of csv,json,svg")

    e = sub.add_parser("ellipse-bvp", help="mixed problem in an ellipse")
    common(e)
    e.add_argument("--a", type=float)
    e.add_argument("--b", type=float)
    e.add_argument("--m", type=int)
    e.add_argument("--manufactured", action="store_true", default=None,
                   help="impose data from z^m instead of conj(z)^m")
    for name in ("vortex", "vortex-punctured"):
        v = sub.add_parser(name, help="point vortex in a quadrilateral")
        common(v)
        v.add_argument("--vertices", help='"x1,y1;x2,y2;x3,y3;x4,y4" counterclockwise')
        v.add_argument("--z0", help='vortex position "re,im"')
        v.add_argument("--gamma", type=float)
        v.add_argument("--nx", type=int)
        v.add_argument("--ny", type=int)
        v.add_argument("--levels", type=int)
    ver = sub.add_parser("verify", help="self-test suites")
    common(ver)
    ver.add_argument("--suite", choices=SUITES)
    return p


def parse_args(argv: Sequence[str]) -> RunConfig:
    ns = build_parser().parse_args(list(argv))
    base: dict = {}
    if ns.config:
        try:
            base = json.loads(Path(ns.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read configuration file: {exc}") from exc
        if base.get("problem", ns.problem) != ns.problem:
            raise ConfigError("configuration file is for a different problem")
    base["problem"] = ns.problem
    for key, val in vars(ns).items():
        if key in ("config", "problem") or val is None:
            continue
        if key == "formats":
            val = [s.strip() for s in val.split(",") if s.strip()]
        base[key] = val
    return RunConfig.from_dict(base)


# --------------------------------------------------------------------------- output writers


def _num(x: float) -> str:
    return repr(float(x))


def _header(cfg: RunConfig) -> str:
    return "# config " + cfg.provenance() + "\n"


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def trace_csv(cfg: RunConfig, contour, trace, per_segment: int = 200) -> str:
    """segment,t,theta_or_s,x,y,re_f,im_f; ``trace(j, t)`` gives the solved boundary values."""
    lines = [_header(cfg), "segment,t,theta_or_s,x,y,re_f,im_f\n"]
    for j, seg in enumerate(contour):
        t = np.linspace(seg.t0, seg.t1, per_segment)
        z = seg(t)
        f = trace(j, t)
        for tt, zz, ff in zip(t, z, f):
            lines.append(",".join([seg.label, _num(tt), _num(tt), _num(zz.real), _num(zz.imag),
                                   _num(ff.real), _num(ff.imag)]) + "\n")
    return "".join(lines)


def field_csv(cfg: RunConfig, grid: apps.FieldGrid) -> str:
    lines = [_header(cfg), "x,y,mask,re_f,im_f,psi,u,v\n"]
    for i, y in enumerate(grid.y):
        for j, x in enumerate(grid.x):
            ok = bool(grid.mask[i, j])
            vals = [grid.re_f, grid.im_f, grid.psi, grid.u, grid.v]
            cells = [_num(a[i, j]) if ok and np.isfinite(a[i, j]) else "" for a in vals]
            lines.append(",".join([_num(x), _num(y), "1" if ok else "0", *cells]) + "\n")
    return "".join(lines)


def streamline_svg(cfg: RunConfig, contour, lines, z0: complex | None, bbox) -> str:
    xmin, xmax, ymin, ymax = bbox
    padx, pady = 0.05 * (xmax - xmin), 0.05 * (ymax - ymin)
    x0, x1, y0, y1 = xmin - padx, xmax + padx, ymin - pady, ymax + pady
    w, h = x1 - x0, y1 - y0
    sw = _num(0.003 * max(w, h))

    def pt(x, y):  # flip y so the picture is upright while the viewBox stays the padded box
        return f"{x:.10g},{(y0 + y1 - y):.10g}"

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_num(x0)} {_num(y0)} {_num(w)} {_num(h)}">\n',
           f"<desc>{cfg.provenance()}</desc>\n"]
    outline = contour.sample(100)
    out.append('<polygon fill="none" stroke="black" stroke-width="' + sw + '" points="'
               + " ".join(pt(z.real, z.imag) for z in outline) + '"/>\n')
    for line in lines:
        out.append('<polyline fill="none" stroke="steelblue" stroke-width="' + sw + '" points="'
                   + " ".join(pt(x, y) for x, y in line) + '"/>\n')
    if z0 is not None:
        out.append(f'<circle cx="{z0.real:.10g}" cy="{(y0 + y1 - z0.imag):.10g}" r="{_num(0.01 * max(w, h))}" '
                   'fill="red"/>\n')
    out.append("</svg>\n")
    return "".join(out)


def _coefficients(expansions) -> dict:
    return {e.segment_label: e.to_dict()["coefficients"] for e in expansions}


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


# --------------------------------------------------------------------------- runners


def _quadrature(cfg: RunConfig, default_panels: int) -> PanelQuadrature:
    return PanelQuadrature(panels=cfg.panels or default_panels)


def run_ellipse(cfg: RunConfig) -> dict:
    q = _quadrature(cfg, 24)
    sol = apps.solve_ellipse_bvp(cfg.a, cfg.b, cfg.m, cfg.N, cfg.N_k, q, manufactured=cfg.manufactured)
    diag = {"max_global_relation_residual": sol.max_global_relation_residual(),
            "boundary_condition_residual": sol.boundary_condition_residual(),
            "coefficient_tail": sol.coefficient_tail(), "junction_jump": sol.junction_jump()}
    numerics = dict(cfg.numerics(), N_k=sol.N_k, panels=q.panels)
    report = {"problem": cfg.problem, "geometry": {"a": cfg.a, "b": cfg.b}, "data": {"m": cfg.m,
              "manufactured": cfg.manufactured}, "numerics": numerics,
              "coefficients": _coefficients(sol.expansions), "residual_norm": sol.residual_norm,
              "diagnostics": diag, "config": json.loads(cfg.provenance())}
    out = Path(cfg.out)
    if "csv" in cfg.formats:
        _write(out / "ellipse_trace.csv", trace_csv(cfg, sol.map.contour, sol.trace))
    if "json" in cfg.formats:
        _write(out / "ellipse_coefficients.json", _json(report))
    return report


def _levels(psi: np.ndarray, n: int) -> list[float]:
    vals = psi[np.isfinite(psi)]
    if vals.size == 0:
        return []
    top = float(np.quantile(vals, 0.95))
    bottom = float(min(0.0, vals.min()))
    return [bottom + (top - bottom) * (i + 1) / (n + 1) for i in range(n)]


def run_vortex(cfg: RunConfig) -> dict:
    q = _quadrature(cfg, 12)
    vc = apps.VortexConfig(cfg.z0, cfg.gamma)
    solver = apps.solve_vortex if cfg.problem == "vortex" else apps.solve_vortex_punctured
    sol = solver(cfg.vertices, vc, cfg.N, cfg.N_k, q=q)
    diag = {"max_global_relation_residual": sol.max_global_relation_residual(),
            "boundary_condition_residual": sol.impermeability_residual()}
    diag.update(sol.diagnostics)
    numerics = dict(cfg.numerics(), N_k=sol.system.N_k, panels=q.panels)
    report = {"problem": cfg.problem, "geometry": {"vertices": [[v.real, v.imag] for v in cfg.vertices]},
              "data": {"z0": [cfg.z0.real, cfg.z0.imag], "gamma": cfg.gamma}, "numerics": numerics,
              "coefficients": _coefficients(sol.expansions), "residual_norm": sol.residual_norm,
              "diagnostics": diag, "config": json.loads(cfg.provenance())}
    out = Path(cfg.out)
    stem = cfg.problem.replace("-", "_")
    contour = sol.base_map.contour
    if "csv" in cfg.formats or "svg" in cfg.formats:
        grid = apps.sample_field(sol, contour, cfg.nx, cfg.ny)
        if "csv" in cfg.formats:
            _write(out / f"{stem}_field.csv", field_csv(cfg, grid))
            _write(out / f"{stem}_trace.csv", trace_csv(cfg, sol.map.contour,
                                                        lambda j, t: sol.system.model.trace(sol.x, j, t)))
        if "svg" in cfg.formats:
            lines = apps.extract_streamlines(grid, _levels(grid.psi, cfg.levels))
            bbox = (grid.x[0], grid.x[-1], grid.y[0], grid.y[-1])
            _write(out / f"{stem}_streamlines.svg", streamline_svg(cfg, contour, lines, cfg.z0, bbox))
    if "json" in cfg.formats:
        _write(out / f"{stem}_coefficients.json", _json(report))
    return report


def verify_disc_kernels(seed: int = 0) -> dict:
    """Disc identity, reproduction and transform checks; returns {check: (max error, tolerance)}."""
    rng = np.random.default_rng(seed)
    res = {}
    th = rng.uniform(0, 2 * math.pi, 200)
    zeta = np.exp(1j * th)
    z = np.sqrt(rng.uniform(0, 0.81, 200)) * np.exp(1j * rng.uniform(0, 2 * math.pi, 200))
    diff = max(abs(kernels.szego_disc(zeta[i], z[i]) - kernels.cauchy_kernel(zeta[i], z[i], 1j * zeta[i]))
               for i in range(200))
    res["kernel_identity"] = (float(diff), 1e-14)
    disc = DiscMap()
    ell = build_ellipse_map(2.0, 1.0)
    worst = 0.0
    for mp in (disc, ell):
        pts = z[:20] if mp is disc else ell.inverse(0.9 * z[:20])
        for n in range(9):
            f = (lambda n: lambda s: s ** n)(n)
            for p in pts:
                worst = max(worst, abs(kernels.szego_reproduction(mp, f, complex(p)) - complex(p) ** n),
                            abs(kernels.cauchy_reproduction(f, complex(p), mp.contour) - complex(p) ** n))
    res["reproduction"] = (float(worst), 1e-8)
    worst = 0.0
    for i in range(20):
        worst = max(worst, abs(transform.spectral_identity_check(complex(zeta[i]), complex(z[i]))
                               - 1.0 / (zeta[i] - z[i])))
    res["spectral_identity"] = (float(worst), 1e-9)
    rho = transform.SpectralFunction(disc, lambda s: s ** 3)
    gr_res = float(np.abs(rho(-np.arange(1.0, 12.0) + 0j)).max())
    res["global_relation"] = (gr_res, 1e-10)
    vals = transform.inverse_transform(rho, disc, z[:10])
    res["round_trip"] = (float(np.abs(vals - z[:10] ** 3).max()), 1e-7)
    return res


def run_verify(cfg: RunConfig) -> dict:
    checks = verify_disc_kernels()
    report = {"suite": cfg.suite, "checks": {k: {"max_error": v[0], "tolerance": v[1], "pass": v[0] < v[1]}
                                             for k, v in checks.items()}}
    report["pass"] = all(c["pass"] for c in report["checks"].values())
    return report


def run(cfg: RunConfig) -> tuple[int, dict]:
    if cfg.problem == "ellipse-bvp":
        return 0, run_ellipse(cfg)
    if cfg.problem in ("vortex", "vortex-punctured"):
        return 0, run_vortex(cfg)
    rep = run_verify(cfg)
    return (0 if rep["pass"] else 1), rep


def _summary(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "coefficients"}


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_args(argv)
    except ConfigError as exc:
        print(json.dumps({"kind": "config_error", "message": str(exc)}), file=sys.stderr)
        return 2
    try:
        code, report = run(cfg)
    except SzegoError as exc:
        print(json.dumps(exc.payload, default=str, sort_keys=True), file=sys.stderr)
        return 3
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(json.dumps({"kind": "numerical_failure", "message": str(exc)}), file=sys.stderr)
        return 3
    print(json.dumps(_summary(report), sort_keys=True, default=str))
    return code


if __name__ == "__main__":
    sys.exit(main())
