"""Configuration-driven entry point: scenario runs, sweeps, artifacts.

Configurations are JSON documents with strict key validation (unknown keys are
rejected with a best-effort line number).  Every run writes a ``manifest.json``
echoing the fully resolved configuration plus artifact versions, a
``summary.json`` with the scenario's internal pass/fail checks, and the
scenario's CSV artifacts.  Runs are deterministic: fixed seeds, fixed float
formatting, no timestamps, so repeated runs are bytewise identical.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .constructors import gaussian_from_curvature, magnetic_counterexample, theorem1_experiment
from .errors import ConfigError, ThermoflowError
from .fields import FourierField2D
from .flow import integrate_flow, mirror_conjugacy_residual
from .generators import GeneratorField
from .geometry import ConformalTorus, FlatTorus, RoundSphere
from .green import domination_certificate, green_limits
from .index_form import tent_fT
from .jacobi import conjugate_scan
from .maslov import LineField, maslov_counting_check, winding_degree

SCENARIOS = (
    "integrate",
    "conjugate-scan",
    "green",
    "dominated",
    "index",
    "maslov",
    "mirror-check",
    "construct-gaussian",
    "perturb-experiment",
)

_PARAM_KEYS = {
    "integrate": {"v0", "span", "rtol", "atol", "method"},
    "conjugate-scan": {"v0", "T", "samples"},
    "green": {"v0", "T_list"},
    "dominated": {"samples", "n_random", "T", "margin", "T_list", "gap_tol"},
    "index": {"v0", "T"},
    "maslov": {"lambda0", "c1", "c2", "v0", "n_grid", "curve_csv"},
    "mirror-check": {"v0", "T"},
    "construct-gaussian": {"n", "n_theta"},
    "perturb-experiment": {"T", "eps", "delta", "sign"},
}

# fixed catalog of inline conformal/coefficient expressions
_EXPR_CATALOG = {
    "cos_q1": lambda amp, L1, L2: FourierField2D.real_cosine(amp, 1, 0, L1, L2),
    "cos_q2": lambda amp, L1, L2: FourierField2D.real_cosine(amp, 0, 1, L1, L2),
    "cos_q1_plus_q2": lambda amp, L1, L2: FourierField2D.real_cosine(amp, 1, 1, L1, L2),
}


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if x is None:
        return "nan"
    return f"{float(x):.17g}"


def _find_line(raw_text, key):
    if raw_text is None:
        return None
    for i, line in enumerate(raw_text.splitlines(), start=1):
        if f'"{key}"' in line:
            return i
    return None


class RunConfig:
    """Validated configuration for one scenario run."""

    def __init__(self, data, raw_text=None):
        self.raw_text = raw_text
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        allowed = {"metric", "lambda", "scenario", "params", "seed", "out"}
        for key in data:
            if key not in allowed:
                raise ConfigError(f"unknown top-level key {key!r}", _find_line(raw_text, key))
        self.data = copy.deepcopy(data)
        self.scenario = data.get("scenario")
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}", _find_line(raw_text, self.scenario))
        self.seed = int(data.get("seed", 0))
        self.out = data.get("out", "out")
        self.params = data.get("params", {})
        if self.scenario is not None:
            self._check_params(self.scenario)
        self.metric = self._build_metric(data.get("metric", {"kind": "flat_torus"}))
        self.lam = self._build_lambda(data.get("lambda"))

    def _err(self, msg, key):
        raise ConfigError(msg, _find_line(self.raw_text, key))

    def _check_params(self, scenario):
        allowed = _PARAM_KEYS[scenario]
        for key in self.params:
            if key not in allowed:
                self._err(f"unknown parameter {key!r} for scenario {scenario!r}", key)

    def _build_metric(self, block):
        if not isinstance(block, dict) or "kind" not in block:
            self._err("metric block needs a 'kind' tag", "metric")
        kind = block["kind"]
        keys = set(block)
        try:
            if kind == "flat_torus":
                if not keys <= {"kind", "L1", "L2"}:
                    self._err(f"unknown metric keys {sorted(keys - {'kind', 'L1', 'L2'})}", "metric")
                return FlatTorus(block.get("L1", 1.0), block.get("L2", 1.0))
            if kind == "conformal_torus":
                if not keys <= {"kind", "L1", "L2", "u"}:
                    self._err(f"unknown metric keys {sorted(keys - {'kind', 'L1', 'L2', 'u'})}", "metric")
                L1 = block.get("L1", 1.0)
                L2 = block.get("L2", 1.0)
                return ConformalTorus(L1, L2, self._build_field(block.get("u", {}), L1, L2, "u"))
            if kind == "round_sphere":
                if not keys <= {"kind", "R"}:
                    self._err(f"unknown metric keys {sorted(keys - {'kind', 'R'})}", "metric")
                return RoundSphere(block.get("R", 1.0))
        except ThermoflowError as exc:
            if isinstance(exc, ConfigError):
                raise
            self._err(str(exc), kind)
        self._err(f"unknown metric kind {kind!r}", "kind")

    def _build_field(self, spec, L1, L2, where):
        if not isinstance(spec, dict):
            self._err(f"{where} must be an object", where)
        has_fourier = "fourier" in spec
        has_expr = "expr" in spec
        if has_fourier and has_expr:
            self._err(f"{where}: give either a Fourier coefficient list or a catalog "
                      "expression, not both (mixed modes rejected)", where)
        if has_expr:
            name = spec["expr"]
            if name not in _EXPR_CATALOG:
                self._err(f"unknown catalog expression {name!r}", name)
            return _EXPR_CATALOG[name](spec.get("amplitude", 1.0), L1, L2)
        if has_fourier:
            coeffs = {}
            for item in spec["fourier"]:
                k1, k2, re, im = item
                coeffs[(int(k1), int(k2))] = complex(re, im)
            fld = FourierField2D(coeffs, L1, L2)
            return fld
        if "const" in spec:
            from .fields import ConstantField

            return ConstantField(spec["const"])
        self._err(f"{where}: empty field specification", where)

    def _build_lambda(self, block):
        if block is None:
            return GeneratorField.zero()
        if not isinstance(block, dict) or set(block) - {"modes"}:
            self._err("lambda block supports only the 'modes' list", "lambda")
        L1 = getattr(self.metric, "L1", 1.0)
        L2 = getattr(self.metric, "L2", 1.0)
        modes = {}
        for entry in block.get("modes", []):
            bad = set(entry) - {"k", "const", "fourier", "expr", "amplitude"}
            if bad:
                self._err(f"unknown lambda-mode keys {sorted(bad)}", sorted(bad)[0])
            k = int(entry["k"])
            if k < 0:
                self._err("give fiber modes with k >= 0; the -k partner is added by conjugation", "modes")
            fld = self._build_field({kk: vv for kk, vv in entry.items() if kk != "k"}, L1, L2, f"mode {k}")
            modes[k] = fld
            if k != 0:
                modes[-k] = fld.conj()
        if 0 in modes:
            probe = np.array([[0.1, 0.2], [0.5, 0.7]]) * np.array([L1, L2])
            if np.max(np.abs(np.imag(np.asarray(modes[0].value(probe))))) > 1e-12:
                self._err("the k = 0 coefficient must be real", "modes")
        return GeneratorField(modes, check_real=False) if modes else GeneratorField.zero()

    def resolved(self):
        out = copy.deepcopy(self.data)
        out.setdefault("seed", self.seed)
        out.setdefault("metric", {"kind": "flat_torus"})
        out.setdefault("params", {})
        return out


def load_config(path, scenario=None, seed=None):
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", exc.lineno) from exc
    if scenario is not None:
        existing = data.get("scenario")
        if existing is not None and existing != scenario:
            raise ConfigError(
                f"config declares scenario {existing!r} but the {scenario!r} subcommand was invoked"
            )
        data["scenario"] = scenario
    if seed is not None:
        data["seed"] = int(seed)
    return RunConfig(data, raw_text=text)


# -- artifact helpers ---------------------------------------------------------------


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) if not isinstance(x, str) else x for x in row))
    Path(path).write_text("\n".join(lines) + "\n")


def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _summary(outdir, checks, extra=None):
    ok = all(c["pass"] for c in checks)
    payload = {"pass": ok, "checks": checks}
    if extra:
        payload.update(extra)
    _write_json(Path(outdir) / "summary.json", payload)
    return ok


def _v0_state(config, default=(0.0, 0.0, 0.0)):
    v0 = config.params.get("v0", list(default))
    metric = config.metric
    if metric.state_dim == 3:
        return metric.unit_tangent(v0[0], v0[1], v0[2])
    return metric.unit_tangent(v0[:3], v0[3:])


# -- scenarios ------------------------------------------------------------------------


def _run_integrate(config, outdir, rng):
    p = config.params
    span = p.get("span", [0.0, 5.0])
    traj = integrate_flow(
        config.metric, config.lam, _v0_state(config), (span[0], span[1]),
        rtol=p.get("rtol", 1e-9), atol=p.get("atol", 1e-12), method=p.get("method", "rk45"),
    )
    tr = traj.trace
    if config.metric.state_dim == 3:
        rows = [
            (t, s[0], s[1], s[2], vl, kk, kt, m)
            for t, s, vl, kk, kt, m in zip(tr.t, tr.states, tr.vlam, tr.kk, tr.kt, tr.m)
        ]
        _write_csv(Path(outdir) / "trajectory.csv",
                   ["t", "q1", "q2", "theta", "vlam", "KK", "kappa_tilde", "m"], rows)
    else:
        rows = [
            (t, *s, vl, kk, kt, m)
            for t, s, vl, kk, kt, m in zip(tr.t, tr.states, tr.vlam, tr.kk, tr.kt, tr.m)
        ]
        _write_csv(Path(outdir) / "trajectory.csv",
                   ["t", "px", "py", "pz", "wx", "wy", "wz", "vlam", "KK", "kappa_tilde", "m"], rows)
    speed = traj.unit_speed_residual()
    ident = float(np.max(np.abs(tr.kt - (tr.kk - tr._fv / 2.0 - tr.vlam**2 / 4.0))))
    checks = [
        {"name": "unit_speed_residual<1e-9", "value": speed, "pass": speed < 1e-9},
        {"name": "trace_identity<1e-10", "value": ident, "pass": ident < 1e-10},
    ]
    return checks, {"n_steps": traj.stats["n_steps"]}


def _run_conjugate_scan(config, outdir, rng):
    p = config.params
    T = float(p.get("T", 10.0))
    samples = p.get("samples")
    states = [p.get("v0", [0.0, 0.0, 0.0])] if samples is None else samples
    rows = []
    times = []
    for v in states:
        vt = config.metric.unit_tangent(*v) if config.metric.state_dim == 3 else config.metric.unit_tangent(v[:3], v[3:])
        rep = conjugate_scan(config.metric, config.lam, vt, T)
        tc = rep.first_conjugate_time
        times.append(tc)
        if config.metric.state_dim == 3:
            rows.append((v[0], v[1], v[2], tc if tc is not None else float("nan")))
        else:
            rows.append((v[0], v[1], v[2], tc if tc is not None else float("nan")))
    _write_csv(Path(outdir) / "conjugate_report.csv",
               ["v_q1", "v_q2", "v_theta", "first_conjugate_time"], rows)
    checks = [{"name": "scan_completed", "value": len(times), "pass": True}]
    return checks, {"first_conjugate_times": [t if t is None else float(t) for t in times]}


def _run_green(config, outdir, rng):
    p = config.params
    T_list = [float(x) for x in p.get("T_list", [5.0, 10.0, 20.0, 40.0])]
    rep = green_limits(config.metric, config.lam, _v0_state(config), T_list)
    rows = [(T, f, b) for T, f, b in zip(rep.T_list, rep.dzT_forward, rep.dzT_backward)]
    _write_csv(Path(outdir) / "green.csv", ["T", "dzT_forward", "dzT_backward"], rows)
    checks = [{"name": "green_valid", "value": rep.valid, "pass": rep.valid}]
    extra = {
        "u_s": rep.u_s, "u_u": rep.u_u, "gap": rep.gap,
        "cauchy_defect": rep.cauchy_defect, "invalid_reason": rep.invalid_reason,
    }
    return checks, extra


def _run_dominated(config, outdir, rng):
    p = config.params
    metric = config.metric
    samples = p.get("samples")
    if samples is None:
        n = int(p.get("n_random", 4))
        qs = rng.uniform(size=(n, 3))
        samples = [
            [qs[i, 0] * getattr(metric, "L1", 1.0), qs[i, 1] * getattr(metric, "L2", 1.0), qs[i, 2] * 2 * np.pi]
            for i in range(n)
        ]
    if metric.state_dim == 3:
        vts = [metric.unit_tangent(*v) for v in samples]
    else:
        vts = [metric.unit_tangent(v[:3], v[3:]) for v in samples]
    rep = domination_certificate(
        metric, config.lam, vts, T=float(p.get("T", 10.0)), margin=float(p.get("margin", 0.2)),
        gap_tol=float(p.get("gap_tol", 1e-6)), T_list=tuple(p.get("T_list", [5.0, 10.0, 20.0, 40.0])),
    )
    rows = []
    for v, srep in zip(samples, rep.samples):
        g = srep.green
        rows.append(
            (v[0], v[1], v[2],
             g.u_s if g.u_s is not None else float("nan"),
             g.u_u if g.u_u is not None else float("nan"),
             g.gap if g.gap is not None else float("nan"),
             srep.rate_full if srep.rate_full is not None else float("nan"),
             srep.status)
        )
    _write_csv(Path(outdir) / "certificate.csv",
               ["q1", "q2", "theta", "u_s", "u_u", "gap", "rate", "status"], rows)
    checks = [{"name": "certificate_computed", "value": rep.status, "pass": True}]
    return checks, {"status": rep.status, "note": rep.note}


def _run_index(config, outdir, rng):
    p = config.params
    T = float(p.get("T", 5.0))
    traj = integrate_flow(config.metric, config.lam, _v0_state(config), (-T, T), rtol=1e-11, atol=1e-14)
    rep = tent_fT(traj, T)
    t, f, fd = rep.f.sample_arrays(64)
    _write_csv(Path(outdir) / "tent.csv", ["t", "f", "fdot"], zip(t, f, fd))
    checks = [
        {"name": "identity_defect<1e-8", "value": rep.identity_defect, "pass": rep.identity_defect < 1e-8},
    ]
    return checks, {"index_value": rep.index_value, "index_identity": rep.index_identity,
                    "dz_minus": rep.dz_minus, "dz_plus": rep.dz_plus}


def _run_maslov(config, outdir, rng):
    p = config.params
    if "curve_csv" in p:
        data = np.loadtxt(p["curve_csv"], delimiter=",", skiprows=1)
        lf = LineField(t=data[:, 0], states=data[:, 1:4], r=data[:, 4])
        deg = winding_degree(lf, config.metric)
        _write_csv(Path(outdir) / "degree_report.csv",
                   ["nu", "card_P", "ok"], [(deg, float("nan"), "")])
        return [{"name": "degree_computed", "value": deg, "pass": True}], {"nu": deg}
    lam0 = float(p.get("lambda0", 1.0))
    oracle = magnetic_counterexample(lam0)
    v0 = p.get("v0", [0.0, 0.0, 0.0])
    orbit = integrate_flow(oracle.metric, oracle.lam, oracle.metric.unit_tangent(*v0),
                           (0.0, oracle.period), rtol=1e-12, atol=1e-14)
    section = oracle.invariant_section(float(p.get("c1", 0.0)), float(p.get("c2", 1.0)))
    rep = maslov_counting_check(oracle.metric, oracle.lam, orbit, section,
                                n_grid=int(p.get("n_grid", 512)))
    _write_csv(Path(outdir) / "degree_report.csv", ["nu", "card_P", "ok"],
               [(rep.nu, rep.card_P, "true" if rep.ok else "false")])
    checks = [{"name": "counting_identity", "value": f"{rep.nu}={rep.card_P}", "pass": rep.ok}]
    return checks, {"nu": rep.nu, "card_P": rep.card_P,
                    "invariance_residual": rep.invariance_residual}


def _run_mirror_check(config, outdir, rng):
    p = config.params
    is_rev, mass = config.lam.reversibility_report()
    vt = _v0_state(config, default=(0.1, 0.2, 0.5))
    res = mirror_conjugacy_residual(config.metric, config.lam, vt, float(p.get("T", 3.0)))
    agree = bool(is_rev == (res < 1e-7)) if is_rev else True
    _write_csv(Path(outdir) / "mirror.csv",
               ["is_reversible", "even_mode_mass", "conjugacy_residual"],
               [("true" if is_rev else "false", mass, res)])
    checks = [{"name": "parity_vs_conjugacy_consistent", "value": res, "pass": agree}]
    return checks, {"is_reversible": is_rev, "even_mode_mass": mass, "conjugacy_residual": res}


def _run_construct_gaussian(config, outdir, rng):
    p = config.params
    lam, diag = gaussian_from_curvature(config.metric, n=int(p.get("n", 64)),
                                        n_theta=int(p.get("n_theta", 8)))
    c1 = lam.modes[1]
    n1, n2 = c1.shape
    vals = np.fft.ifft2(c1.fhat) * (n1 * n2)
    rows = []
    for i in range(n1):
        for j in range(n2):
            rows.append((i, j, vals[i, j].real, vals[i, j].imag))
    _write_csv(Path(outdir) / "lambda_c1.csv", ["i", "j", "re", "im"], rows)
    checks = [
        {"name": "kk_max<1e-6", "value": diag.kk_max_abs, "pass": diag.kk_max_abs < 1e-6},
        {"name": "reversible", "value": diag.is_reversible, "pass": diag.is_reversible},
        {"name": "hodge<1e-9", "value": diag.hodge_residual, "pass": diag.hodge_residual < 1e-9},
    ]
    return checks, {"kk_max": diag.kk_max_abs, "hodge_residual": diag.hodge_residual,
                    "grid_n": diag.grid_n}


def _run_perturb_experiment(config, outdir, rng):
    p = config.params
    rep = theorem1_experiment(
        T=float(p.get("T", 10.0)), eps=float(p.get("eps", 0.1)),
        delta=float(p.get("delta", 0.05)), sign=int(p.get("sign", 1)),
    )
    summary = {
        k: (v if not isinstance(v, (np.floating, np.integer)) else float(v))
        for k, v in rep.__dict__.items()
        if isinstance(v, (int, float, str, bool, type(None), np.floating, np.integer))
    }
    lines = ["perturbation experiment report", "=" * 32]
    for k in sorted(summary):
        lines.append(f"{k}: {summary[k]}")
    lines.append("")
    lines.append("machine-readable summary:")
    lines.append(json.dumps(summary, sort_keys=True))
    Path(Path(outdir) / "experiment.txt").write_text("\n".join(lines) + "\n")
    ok = rep.status in ("negative-index-with-conjugate-pair", "positive-index")
    checks = [
        {"name": "identity_defect<1e-8", "value": rep.identity_defect, "pass": rep.identity_defect < 1e-8},
        {"name": "status_conclusive", "value": rep.status, "pass": ok},
    ]
    return checks, summary


_RUNNERS = {
    "integrate": _run_integrate,
    "conjugate-scan": _run_conjugate_scan,
    "green": _run_green,
    "dominated": _run_dominated,
    "index": _run_index,
    "maslov": _run_maslov,
    "mirror-check": _run_mirror_check,
    "construct-gaussian": _run_construct_gaussian,
    "perturb-experiment": _run_perturb_experiment,
}


def run(config: RunConfig, outdir=None):
    """Execute one scenario run; returns (exit_status, summary_ok)."""
    if config.scenario is None:
        raise ConfigError("no scenario specified")
    outdir = Path(outdir or config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng([config.seed & 0xFFFFFFFF, (config.seed >> 32) & 0xFFFFFFFF])
    manifest = {
        "package": "thermoflow",
        "version": __version__,
        "schema_version": 1,
        "config": config.resolved(),
    }
    try:
        checks, extra = _RUNNERS[config.scenario](config, outdir, rng)
    except ThermoflowError as exc:
        _write_json(outdir / "manifest.json", manifest)
        _summary(outdir, [{"name": "scenario_failed", "value": str(exc), "pass": False}])
        return 3, False
    manifest["artifacts"] = sorted(p.name for p in outdir.iterdir() if p.is_file())
    _write_json(outdir / "manifest.json", manifest)
    ok = _summary(outdir, checks, extra)
    return (0 if ok else 1), ok


def _set_path(data, dotted, value):
    """Set a nested config entry by dotted path; numeric parts index lists."""
    parts = dotted.split(".")
    node = data
    for key in parts[:-1]:
        if key.isdigit() and isinstance(node, list):
            node = node[int(key)]
        else:
            node = node.setdefault(key, {})
    last = parts[-1]
    if last.isdigit() and isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def sweep(config: RunConfig, parameter, values, outdir=None, threads=1):
    """Run the scenario once per parameter value; aggregate one CSV."""
    outdir = Path(outdir or config.out)
    outdir.mkdir(parents=True, exist_ok=True)
    if len(values) == 0:
        _write_csv(outdir / "sweep.csv", [parameter, "status"], [])
        return 0

    def one(idx_value):
        idx, value = idx_value
        data = copy.deepcopy(config.resolved())
        _set_path(data, parameter, value)
        data["seed"] = int(np.random.SeedSequence([config.seed, idx]).generate_state(1)[0])
        sub = RunConfig(data, raw_text=config.raw_text)
        subdir = outdir / f"{parameter.replace('.', '_')}_{idx}"
        try:
            status, ok = run(sub, subdir)
        except ThermoflowError as exc:
            return idx, value, "error", {"error": str(exc)}
        summary = json.loads((subdir / "summary.json").read_text())
        return idx, value, ("ok" if ok else "check-failed"), summary

    tasks = list(enumerate(values))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, tasks))
    else:
        results = [one(t) for t in tasks]
    results.sort(key=lambda r: r[0])

    def flat(summary):
        out = {}
        for k, v in summary.items():
            if isinstance(v, bool):
                continue
            if isinstance(v, (int, float)):
                out[k] = v
            elif isinstance(v, list) and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                for i, x in enumerate(v):
                    out[f"{k}_{i}"] = x
        return out

    flats = [flat(s) for _, _, _, s in results]
    numeric_keys = sorted({k for fl in flats for k in fl})
    header = [parameter, "status"] + numeric_keys
    rows = []
    for (_, value, status, _), fl in zip(results, flats):
        rows.append([value, status] + [fl.get(k, float("nan")) for k in numeric_keys])
    _write_csv(outdir / "sweep.csv", header, rows)
    return 0 if all(r[2] == "ok" for r in results) else 1


# -- argparse front end ----------------------------------------------------------------


def main(argv=None):
    parser = argparse.ArgumentParser(prog="thermoflow",
                                     description="thermostat-flow numerical laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name, help=f"run the {name} scenario")
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1)
    sw = sub.add_parser("sweep", help="run a scenario over a list of parameter values")
    sw.add_argument("--config", required=True)
    sw.add_argument("--parameter", required=True, help="dotted config path, e.g. params.T")
    sw.add_argument("--values", required=True, help="comma-separated numeric values")
    sw.add_argument("--out", default=None)
    sw.add_argument("--seed", type=int, default=None)
    sw.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        if args.command == "sweep":
            config = load_config(args.config, seed=args.seed)
            values = [float(x) for x in args.values.split(",") if x.strip() != ""]
            return sweep(config, args.parameter, values, outdir=args.out, threads=args.threads)
        config = load_config(args.config, scenario=args.command, seed=args.seed)
        status, _ = run(config, outdir=args.out)
        return status
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ThermoflowError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
