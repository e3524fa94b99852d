"""Command-line front end.

    zetaprop propagator --B 1 --wx 0.8 --wy 1.3 --T 1.7 --from 0,0 --to 1,0.5
    zetaprop propagator --B 1 --wx 0.8 --wy 1.3 --sweep T=0.1:3.0:0.01 --out k.csv
    zetaprop spectrum --wx 3 --wy 4 --n-max 1 --m-max 1
    zetaprop verify

Flags override values read from a ``--config`` file of ``key = value`` lines.
Exit codes: 0 ok, 1 verification failure, 2 configuration error, 3 caustic in
single-point mode.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .classical import classical_trajectory
from .core import (
    CausticError,
    DomainError,
    Endpoints,
    PhysicalParams,
    PropagatorError,
    derive_frequencies,
    dimensionless_mode_frequencies,
)
from .fluctuation import amplitude, mode_sum_D, mode_sum_params
from .oracles import (
    SingularDiscretization,
    compare,
    gelfand_yaglom_amplitude,
    richardson_time_sliced,
    time_sliced_amplitude,
    truncated_mode_sum,
    vvpm_amplitude,
)
from .propagator import classify, energy_spectrum, landau_degenerate, propagate

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_CAUSTIC = 0, 1, 2, 3

PARAM_FLAGS = {"m": "m", "q": "q", "B": "B", "Ex": "Ex", "Ey": "Ey", "wx": "omega_x", "wy": "omega_y", "hbar": "hbar"}
SWEEPABLE = set(PARAM_FLAGS) | {"T"}
DEFAULT_TOL = {"gelfand_yaglom": 1e-8, "vvpm": 1e-6, "time_slice": 1e-5, "series": 1e-5}


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return "%.17g" % x


@dataclass
class RunConfig:
    command: str
    params: Dict[str, float]
    T: Optional[float] = None
    r0: Tuple[float, float] = (0.0, 0.0)
    r1: Tuple[float, float] = (0.0, 0.0)
    sweep: Optional[Tuple[str, float, float, float]] = None
    out: Optional[str] = None
    tolerance: Optional[float] = None
    slices: int = 4096
    terms: int = 10**6
    endpoint_rule: bool = False
    n_max: int = 3
    m_max: int = 3
    samples: int = 101
    jobs: int = 1
    explicit_point: bool = False
    extra: Dict[str, str] = field(default_factory=dict)

    def physical(self, **override) -> PhysicalParams:
        kw = {PARAM_FLAGS[k]: v for k, v in self.params.items()}
        kw.update({PARAM_FLAGS.get(k, k): v for k, v in override.items()})
        try:
            return PhysicalParams(**kw)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def endpoints(self, T: float) -> Endpoints:
        try:
            return Endpoints(self.r0[0], self.r0[1], self.r1[0], self.r1[1], T)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


def parse_pair(text: str) -> Tuple[float, float]:
    try:
        a, b = text.split(",")
        return float(a), float(b)
    except ValueError:
        raise ConfigError(f"expected x,y but got {text!r}") from None


def parse_sweep(text: str) -> Tuple[str, float, float, float]:
    try:
        var, rng = text.split("=")
        lo, hi, step = (float(s) for s in rng.split(":"))
    except ValueError:
        raise ConfigError(f"expected VAR=lo:hi:step but got {text!r}") from None
    var = var.strip()
    if var not in SWEEPABLE:
        raise ConfigError(f"cannot sweep {var!r}; choose from {sorted(SWEEPABLE)}")
    if not step > 0 or hi < lo:
        raise ConfigError("sweep needs step > 0 and hi >= lo")
    return var, lo, hi, step


def sweep_values(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


def read_config(path: str) -> Dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key = value")
                k, v = line.split("=", 1)
                out[k.strip().lstrip("-").replace("-", "_")] = v.strip()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    for flag in PARAM_FLAGS:
        common.add_argument(f"--{flag}", type=float)
    common.add_argument("--T", type=float)
    common.add_argument("--from", dest="from_", metavar="x,y")
    common.add_argument("--to", metavar="x,y")
    common.add_argument("--sweep", metavar="VAR=lo:hi:step")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--config", metavar="PATH")
    common.add_argument("--tolerance", type=float)
    common.add_argument("--slices", type=int)
    common.add_argument("--terms", type=int)
    common.add_argument("--endpoint-rule", action="store_true", default=None)
    common.add_argument("--n-max", type=int)
    common.add_argument("--m-max", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--jobs", type=int)

    parser = argparse.ArgumentParser(prog="zetaprop", description="Exact propagator of a charged anisotropic oscillator.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("propagator", "kernel K(x1, T; x0, 0)"),
        ("amplitude", "fluctuation prefactor and field phase"),
        ("action", "classical action"),
        ("trajectory", "sampled classical path"),
        ("spectrum", "energy levels E(n, m)"),
        ("verify", "cross-check closed forms against numerical oracles"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    return parser


def make_config(ns: argparse.Namespace) -> RunConfig:
    file_vals = read_config(ns.config) if ns.config else {}

    def pick(name, conv, default=None):
        v = getattr(ns, name, None)
        if v is not None:
            return v, True
        key = name.rstrip("_")
        if key in file_vals:
            try:
                return conv(file_vals[key]), True
            except ValueError:
                raise ConfigError(f"bad value for {key}: {file_vals[key]!r}") from None
        return default, False

    params = {}
    explicit = False
    for flag in PARAM_FLAGS:
        v, given = pick(flag, float)
        if given:
            params[flag] = v
            explicit = True
    T, gT = pick("T", float)
    explicit = explicit or gT
    r0, _ = pick("from_", parse_pair)
    if isinstance(r0, str):
        r0 = parse_pair(r0)
    r1, _ = pick("to", parse_pair)
    if isinstance(r1, str):
        r1 = parse_pair(r1)
    sweep, _ = pick("sweep", str)

    def as_bool(s):
        return str(s).lower() in ("1", "true", "yes", "on")

    cfg = RunConfig(
        command=ns.command,
        params=params,
        T=T,
        r0=r0 or (0.0, 0.0),
        r1=r1 or (0.0, 0.0),
        sweep=parse_sweep(sweep) if sweep else None,
        out=pick("out", str)[0],
        tolerance=pick("tolerance", float)[0],
        slices=pick("slices", int, 4096)[0],
        terms=pick("terms", int, 10**6)[0],
        endpoint_rule=bool(pick("endpoint_rule", as_bool, False)[0]),
        n_max=pick("n_max", int, 3)[0],
        m_max=pick("m_max", int, 3)[0],
        samples=pick("samples", int, 101)[0],
        jobs=pick("jobs", int, 1)[0],
        explicit_point=explicit,
    )
    if cfg.slices < 8:
        raise ConfigError("--slices must be >= 8")
    if cfg.terms < 100:
        raise ConfigError("--terms must be >= 100")
    if cfg.n_max < 0 or cfg.m_max < 0 or cfg.samples < 2 or cfg.jobs < 1:
        raise ConfigError("counts must be positive")
    if cfg.tolerance is not None and not cfg.tolerance > 0:
        raise ConfigError("--tolerance must be positive")
    return cfg


# --- per-point evaluation (top level so worker processes can pickle them) ----

def _point(cfg: RunConfig, value: Optional[float]):
    over = {}
    T = cfg.T
    if cfg.sweep is not None:
        var = cfg.sweep[0]
        if var == "T":
            T = value
        else:
            over[var] = value
    if T is None:
        raise ConfigError("--T is required")
    return cfg.physical(**over), T


def _row_propagator(args):
    cfg, value = args
    p, T = _point(cfg, value)
    e = cfg.endpoints(T)
    try:
        r = propagate(p, e)
    except CausticError:
        return [T, math.nan, math.nan, math.nan, math.nan, classify(p, T), 1]
    return [T, r.kernel.real, r.kernel.imag, abs(r.kernel), r.action.value, r.regime, 0]


def _row_amplitude(args):
    cfg, value = args
    p, T = _point(cfg, value)
    try:
        a = amplitude(p, T)
    except CausticError:
        return [T, math.nan, math.nan, math.nan, -1, math.nan, classify(p, T), 1]
    v = a.total
    return [T, v.real, v.imag, abs(v), a.branch_phase_windings, a.field_phase, classify(p, T), 0]


def _row_action(args):
    cfg, value = args
    p, T = _point(cfg, value)
    try:
        r = propagate(p, cfg.endpoints(T))
    except CausticError:
        return [T, math.nan, "none", 1]
    return [T, r.action.value, r.action.method, 0]


HEADERS = {
    "propagator": ["T", "re_K", "im_K", "abs_K", "S_cl", "regime", "caustic"],
    "amplitude": ["T", "re_A", "im_A", "abs_A", "maslov", "P", "regime", "caustic"],
    "action": ["T", "S_cl", "method", "caustic"],
}
ROWS = {"propagator": _row_propagator, "amplitude": _row_amplitude, "action": _row_action}


def write_csv(out, header: List[str], rows) -> None:
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")


def _open_out(cfg: RunConfig):
    if cfg.out is None:
        return sys.stdout, False
    try:
        return open(cfg.out, "w", newline=""), True
    except OSError as exc:
        raise ConfigError(f"cannot write {cfg.out}: {exc}") from None


def cmd_pointwise(cfg: RunConfig) -> int:
    fn = ROWS[cfg.command]
    header = list(HEADERS[cfg.command])
    if cfg.sweep is None:
        p, T = _point(cfg, None)
        if cfg.command == "amplitude":
            amplitude(p, T)  # single point: let CausticError reach main()
        else:
            propagate(p, cfg.endpoints(T))
        rows = [fn((cfg, None))]
    else:
        var = cfg.sweep[0]
        values = sweep_values(*cfg.sweep[1:])
        tasks = [(cfg, float(v)) for v in values]
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                rows = list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * cfg.jobs))))
        else:
            rows = [fn(t) for t in tasks]
        if var != "T":
            header = [var] + header
            rows = [[v] + r for v, r in zip(values, rows)]
    out, close = _open_out(cfg)
    try:
        write_csv(out, header, rows)
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_propagator(cfg: RunConfig) -> int:
    return cmd_pointwise(cfg)


def cmd_trajectory(cfg: RunConfig) -> int:
    p, T = _point(cfg, None)
    traj = classical_trajectory(p, cfg.endpoints(T))
    t = np.linspace(0.0, T, cfg.samples)
    x, y = traj.evaluate(t, 0)
    vx, vy = traj.evaluate(t, 1)
    out, close = _open_out(cfg)
    try:
        write_csv(out, ["t", "x", "y", "vx", "vy"], zip(t, x, y, vx, vy))
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_spectrum(cfg: RunConfig) -> int:
    p = cfg.physical()
    levels = energy_spectrum(p, cfg.n_max, cfg.m_max)
    if landau_degenerate(p):
        print("note: obar_- = 0, every level is degenerate in m (Landau limit)", file=sys.stderr)
    out, close = _open_out(cfg)
    try:
        write_csv(out, ["n", "m", "E"], ((lv.n, lv.m, lv.energy) for lv in levels))
    finally:
        if close:
            out.close()
    return EXIT_OK


def default_grid(n: int = 5, seed: int = 20240611):
    rng = np.random.default_rng(seed)
    pts = []
    for _ in range(n):
        B = rng.uniform(0.1, 3.0)
        wx, wy = rng.uniform(0.2, 2.0, 2)
        T = rng.uniform(0.3, 2.5)
        Ex, Ey = rng.uniform(0.0, 1.0, 2)
        pts.append((PhysicalParams(B=B, omega_x=wx, omega_y=wy, Ex=Ex, Ey=Ey), T))
    return pts


def verify_point(p: PhysicalParams, T: float, cfg: RunConfig):
    """Oracle reports for one parameter point, as (label, report, tolerance) triples."""
    tol = dict(DEFAULT_TOL)
    if cfg.tolerance is not None:
        tol = {k: cfg.tolerance for k in tol}
    out = []
    amp = amplitude(p, T)
    out.append(("gelfand_yaglom", compare(gelfand_yaglom_amplitude(p, T), amp.value, "gelfand_yaglom"), tol["gelfand_yaglom"]))
    e = Endpoints(cfg.r0[0], cfg.r0[1], cfg.r1[0], cfg.r1[1], T)
    if e.x0 == e.y0 == e.x1 == e.y1 == 0.0:
        e = Endpoints(0.3, -0.2, 0.5, 0.1, T)
    out.append(("vvpm", compare(vvpm_amplitude(p, e), amp.value, "vvpm"), tol["vvpm"]))
    N = cfg.slices
    levels = max(1, min(5, int(math.log2(N / 8)) + 1))
    rule = "prepoint" if cfg.endpoint_rule else "midpoint"
    gauge = "radial" if cfg.endpoint_rule else "symmetric"
    try:
        ts = richardson_time_sliced(p, T, N, levels=levels, rule=rule, gauge=gauge)[0]
        out.append((f"time_slice[{rule}]", compare(ts, amp.total, "time_slice", N), tol["time_slice"]))
    except SingularDiscretization:
        out.append((f"time_slice[{rule}]", compare(math.inf, amp.total, "time_slice", N), tol["time_slice"]))
    f = derive_frequencies(p)
    msp = mode_sum_params(p, T)
    wp, wm = dimensionless_mode_frequencies(f, T)
    for which in ("x", "y"):
        closed = mode_sum_D(msp, which, wp, wm)
        series = truncated_mode_sum(msp, which, cfg.terms).value
        out.append((f"series_D{which}", compare(series, closed, "series", cfg.terms), tol["series"]))
    return out


VERIFY_HEADER = [
    "point", "check", "re_oracle", "im_oracle", "re_reference", "im_reference",
    "relative_error", "tolerance", "resolution", "status",
]


def endpoint_rule_ratio(p: PhysicalParams, T: float, N: int) -> complex:
    """Prepoint (radial gauge) over midpoint loop amplitude at N slices."""
    return time_sliced_amplitude(p, T, N, rule="prepoint", gauge="radial") / time_sliced_amplitude(p, T, N)


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.explicit_point:
        if cfg.T is None:
            raise ConfigError("--T is required for a single verification point")
        points = [(cfg.physical(), cfg.T)]
    else:
        points = default_grid()
    out, close = _open_out(cfg)
    failures = []
    try:
        write_csv(out, VERIFY_HEADER, [])
        for i, (p, T) in enumerate(points):
            try:
                reports = verify_point(p, T, cfg)
            except PropagatorError as exc:
                failures.append(f"point {i}: {type(exc).__name__}: {exc}")
                out.write(f"{i},error,,,,,,,,{type(exc).__name__}\n")
                continue
            for label, rep, tol in reports:
                ok = rep.passed(tol)
                if not ok:
                    failures.append(f"point {i}: {label} relative error {rep.relative_error:.3e} > {tol:.1e}")
                ov, rv = complex(rep.oracle_value), complex(rep.reference_value)
                res = rep.resolution if rep.resolution is not None else ""
                row = [i, label, ov.real, ov.imag, rv.real, rv.imag, rep.relative_error, tol, res, "pass" if ok else "FAIL"]
                out.write(",".join(fmt(v) for v in row) + "\n")
            if cfg.endpoint_rule and p.B != 0.0:
                # not a pass/fail check: shows the rules disagree as N grows
                r = endpoint_rule_ratio(p, T, cfg.slices)
                row = [i, "ambiguity[prepoint/midpoint]", r.real, r.imag, math.exp(p.omega_L * T), 0.0,
                       abs(r - 1), "", cfg.slices, "info"]
                out.write(",".join(fmt(v) for v in row) + "\n")
    finally:
        if close:
            out.close()
    if failures:
        print("verification failed:", file=sys.stderr)
        for f in failures:
            print("  " + f, file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {
    "propagator": cmd_propagator,
    "amplitude": cmd_pointwise,
    "action": cmd_pointwise,
    "trajectory": cmd_trajectory,
    "spectrum": cmd_spectrum,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = make_config(ns)
        return COMMANDS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CausticError as exc:
        print(f"caustic: {exc}", file=sys.stderr)
        return EXIT_CAUSTIC
    except PropagatorError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
