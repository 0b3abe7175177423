"""Named experiments: config, dispatch, result files and run manifest."""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .cache import IntegrityError, cache_load, cache_store
from .clt import (
    PSeries,
    SeriesSpec,
    alternating_report,
    block_clt_control,
    clt_report,
    closed_form_partial,
    alternating_series_table,
    geometric,
    mean_decay_exponent,
)
from .distribution import (
    empirical_charfun,
    empirical_value_distribution,
    ks_distance,
    limit_step_distribution,
    moment,
    product_charfun_compare,
    taylor_check,
)
from .independence import independence_report
from .sieve import DEFAULT_SEGMENT, FunctionTable, build_table, external, kind_from_name, thread_budget
from .summatory import asymptote_deviation, log_grid, prefix_series

log = logging.getLogger(__name__)

EXPERIMENTS = ("independence", "density", "distribution", "charfun", "taylor", "clt", "alternating", "mertens-gap")

# what each experiment exercises, carried into every result file
CLAIMS = {
    "independence": "pairwise-product independence statistic and its decay class",
    "density": "summatory functions against their main terms (psi, theta ~ x; Q ~ 6x/pi^2; Q1, Q2 ~ 3x/pi^2; tau sum ~ x log x)",
    "distribution": "convergence of the value law to its cataloged step distribution",
    "charfun": "charfun of the partial-sum variable against the i.i.d. product surrogate, and the finite-n charfun remainder",
    "taylor": "moment (Taylor) expansion of the characteristic function of a bounded variable",
    "clt": "normal limit of standardized partial sums",
    "alternating": "alternating series with cancelling positive and negative parts: claimed normal limit",
    "mertens-gap": "mean-gap decay rate required for the normal limit, measured for Mertens/Liouville",
}

DEFAULT_TOLERANCE = {
    "density": {"von-mangoldt": 5e-3, "prime-log": 5e-3, "prime": 0.1},
    "distribution": {},
    "taylor": {},
}
_FALLBACK_TOLERANCE = {"density": 1e-3, "distribution": 1e-3, "taylor": 2e-3}


class UsageError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    kind: str = "moebius"
    limit: int = 10**6
    grid: str = "log:1000:limit:10"
    t_grid: str = "linspace:-0.3:0.3:61"
    out: str = "out"
    cache: str | None = None
    seed: int = 0
    threads: int | None = None
    segment: int = DEFAULT_SEGMENT
    window: float = 0.5
    order: int = 2
    tolerance: float | None = None
    positive: str = "geometric:1:1/2"
    negative: str = "geometric:-2:1/3"
    block: int = 1000

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise UsageError(f"unknown experiment {self.experiment!r}; valid ids: {', '.join(EXPERIMENTS)}")
        self.limit = int(self.limit)
        if self.limit < 1:
            raise UsageError("limit must be >= 1")

    def echo(self) -> dict:
        d = asdict(self)
        d.pop("threads")  # never part of the result; outputs must not depend on it
        d.pop("out")
        d.pop("cache")
        return d


def parse_config_text(text: str) -> dict[str, str]:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise UsageError(f"config line {lineno}: expected key = value, got {raw!r}")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


_FIELDS = {f.name for f in fields(ExperimentConfig)}
_INT_KEYS = {"limit", "seed", "threads", "segment", "order", "block"}
_FLOAT_KEYS = {"window", "tolerance"}


def make_config(values: dict) -> ExperimentConfig:
    kw = {}
    for key, value in values.items():
        if value is None:
            continue
        if key not in _FIELDS:
            raise UsageError(f"unknown config key {key!r}")
        if isinstance(value, str) and key in _INT_KEYS | _FLOAT_KEYS:
            if value.lower() in ("", "none"):
                continue
            try:
                value = int(float(value)) if key in _INT_KEYS else float(value)
            except ValueError:
                raise UsageError(f"config key {key!r}: not a number: {value!r}") from None
        kw[key] = value
    if "experiment" not in kw:
        raise UsageError("no experiment id given")
    return ExperimentConfig(**kw)


def load_config(path, overrides: dict | None = None) -> ExperimentConfig:
    values = parse_config_text(Path(path).read_text()) if path else {}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return make_config(values)


def parse_grid(spec: str, limit: int) -> np.ndarray:
    """``log:<lo>:<hi>:<per_decade>`` or ``list:<n1>,<n2>,...``; ``limit`` may stand for hi."""
    head, _, rest = spec.partition(":")
    if head == "log":
        parts = (rest.split(":") + ["", "", ""])[:3]
        lo = int(float(parts[0])) if parts[0] else 1000
        hi = limit if parts[1] in ("", "limit") else int(float(parts[1]))
        per = int(parts[2]) if parts[2] else 10
        grid = log_grid(min(lo, hi), hi, per)
    elif head == "list":
        grid = np.array([int(float(x)) for x in rest.split(",") if x.strip()], dtype=np.int64)
    else:
        raise UsageError(f"bad grid spec {spec!r}")
    if grid.size == 0 or grid[-1] > limit:
        raise UsageError(f"grid {spec!r} is empty or exceeds limit {limit}")
    return grid


def parse_t_grid(spec: str) -> np.ndarray:
    """``linspace:<a>:<b>:<count>`` or ``list:<t1>,<t2>,...``."""
    head, _, rest = spec.partition(":")
    if head == "linspace":
        a, b, c = rest.split(":")
        return np.linspace(float(a), float(b), int(c))
    if head == "list":
        return np.array([float(x) for x in rest.split(",") if x.strip()])
    raise UsageError(f"bad t grid spec {spec!r}")


def parse_rule(spec: str):
    head, _, rest = spec.partition(":")
    args = rest.split(":")
    if head == "geometric" and len(args) == 2:
        return geometric(Fraction(args[0]), Fraction(args[1]))
    if head == "pseries" and len(args) == 2:
        return PSeries(float(args[0]), float(args[1]))
    raise UsageError(f"bad series rule {spec!r}; use geometric:<scale>:<ratio> or pseries:<scale>:<p>")


# ---------------------------------------------------------------------------
# deterministic output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)) or x is None:
        return json.dumps(None if x is None else bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return format(x, ".17g") if math.isfinite(x) else "null"
    if isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in list(x)) + "]"
    raise TypeError(f"cannot serialize {type(x).__name__}")


def dumps(obj) -> str:
    """JSON with every float written to 17 significant digits."""
    return _fmt(obj) + "\n"


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


@dataclass
class RunManifest:
    config: dict
    version: str
    stage_seconds: dict[str, float] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)  # file name -> sha256
    expectations: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.expectations.values())

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "version": self.version,
            "stage_seconds": self.stage_seconds,
            "outputs": self.outputs,
            "expectations": self.expectations,
            "pass": self.passed,
        }


class _Run:
    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.out = Path(config.out)
        try:
            self.out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {self.out}: {exc}") from exc
        if not os.access(self.out, os.W_OK):
            raise PermissionError(f"output directory {self.out} is not writable")
        self.manifest = RunManifest(config.echo(), __version__)

    def stage(self, name: str):
        run = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()

            def __exit__(self, *exc):
                run.manifest.stage_seconds[name] = time.perf_counter() - self.t0

        return _Timer()

    def write(self, name: str, text: str) -> None:
        path = self.out / name
        _atomic_write(path, text)
        self.manifest.outputs[name] = hashlib.sha256(text.encode()).hexdigest()

    def expect(self, name: str, ok: bool) -> bool:
        self.manifest.expectations[name] = bool(ok)
        return bool(ok)

    def result(self, name: str, payload: dict) -> None:
        payload = {"experiment": self.config.experiment, "claim": CLAIMS[self.config.experiment], **payload}
        self.write(name, dumps(payload))

    def table(self, kind_name: str | None = None, limit: int | None = None) -> FunctionTable:
        c = self.config
        kind_name = kind_name or c.kind
        limit = limit or c.limit
        with self.stage(f"table:{kind_name}"):
            if kind_name == "random-sign":
                rng = np.random.default_rng(c.seed)
                vals = rng.choice(np.array([-1, 1], dtype=np.int8), size=limit)
                return FunctionTable(external(f"random-sign seed={c.seed}", integer=True), limit, vals)
            kind = kind_from_name(kind_name)
            if c.cache:
                try:
                    return cache_load(kind, limit, c.cache)
                except FileNotFoundError:
                    pass
                except IntegrityError as exc:
                    log.warning("cache entry rejected (%s); rebuilding", exc)
            table = build_table(kind, limit, c.segment, thread_budget(c.threads))
            if c.cache:
                cache_store(table, c.cache)
            return table

    def tolerance(self, kind_name: str) -> float:
        if self.config.tolerance is not None:
            return self.config.tolerance
        exp = self.config.experiment
        name = kind_from_name(kind_name).name
        return DEFAULT_TOLERANCE[exp].get(name, _FALLBACK_TOLERANCE[exp])


# ---------------------------------------------------------------------------
# experiments


def _independence(run: _Run) -> None:
    c = run.config
    table = run.table()
    grid = parse_grid(c.grid, c.limit)
    with run.stage("independence"):
        rep = independence_report(table, grid)
    run.result("independence.json", rep.to_dict())
    run.expect("classification", rep.passed)


def _density(run: _Run) -> None:
    c = run.config
    table = run.table()
    grid = parse_grid(c.grid, c.limit)
    with run.stage("summatory"):
        dev = asymptote_deviation(prefix_series(table, grid))
    run.write("density.csv", dev.to_csv())
    final = float(dev.relative[-1])
    tol = run.tolerance(c.kind)
    run.result(
        "density.json",
        {"kind": str(table.kind), "asymptote": dev.asymptote, "n": int(dev.n[-1]), "relative_deviation": final, "tolerance": tol},
    )
    run.expect("final relative deviation within tolerance", abs(final) < tol)


def _distribution(run: _Run) -> None:
    c = run.config
    table = run.table()
    with run.stage("distribution"):
        emp = empirical_value_distribution(table, c.limit)
        law = limit_step_distribution(table.kind)
        ks = ks_distance(emp, law)
    tol = run.tolerance(c.kind)
    run.result(
        "distribution.json",
        {"kind": str(table.kind), "empirical": emp.to_dict(), "limit": law.to_dict(), "ks": ks, "tolerance": tol},
    )
    run.expect("ks to limit law within tolerance", ks <= tol)


def _charfun(run: _Run) -> None:
    c = run.config
    table = run.table()
    t = parse_t_grid(c.t_grid)
    with run.stage("charfun"):
        rep = product_charfun_compare(table, c.limit, t)
        phi = empirical_charfun(table.values, t)
    run.write("charfun.csv", phi.to_csv(rep.limit_remainder))
    run.result("charfun.json", {"kind": str(table.kind), **rep.to_dict()})
    ok = bool(np.all(np.abs(phi.values) <= 1 + 1e-12)) and all(phi.values[t == 0] == 1)
    run.expect("charfun bounded by 1 and equal to 1 at t = 0", ok)


def _taylor(run: _Run) -> None:
    c = run.config
    table = run.table()
    t = parse_t_grid(c.t_grid)
    with run.stage("taylor"):
        phi = empirical_charfun(table.values, t)
        moments = [moment(table, c.limit, j) for j in range(1, c.order + 1)]
        rep = taylor_check(phi, moments, c.order)
        fine = np.concatenate((np.geomspace(1e-3, 1e-1, 41), -np.geomspace(1e-3, 1e-1, 41)))
        fine_rep = taylor_check(empirical_charfun(table.values, fine), moments, c.order)
        uppers = [1e-1, 3e-2, 1e-2, 3e-3]
        profile = fine_rep.ratio_profile(1e-3, uppers)
    tol = run.tolerance(c.kind)
    run.write("taylor.csv", phi.to_csv(rep.remainder))
    run.result(
        "taylor.json",
        {
            "kind": str(table.kind),
            "n": c.limit,
            "order": c.order,
            "moments": moments,
            "max_abs_remainder": rep.max_abs,
            "max_ratio": rep.max_ratio,
            "ratio_profile_uppers": uppers,
            "ratio_profile": profile,
            "tolerance": tol,
        },
    )
    run.expect("max remainder within tolerance", rep.max_abs <= tol)
    run.expect("remainder ratio shrinks toward t = 0", all(a > b for a, b in zip(profile, profile[1:])))


def _clt(run: _Run) -> None:
    c = run.config
    table = run.table()
    with run.stage("clt"):
        reports = {v: clt_report(table, c.limit, v, c.window).to_dict() for v in ("A", "B")}
        control_table = run.table("random-sign")
        control = {
            "path_window": clt_report(control_table, c.limit, "A", c.window).to_dict(),
            "blocks": block_clt_control(control_table.values, c.block).to_dict(),
        }
    run.result("clt.json", {"kind": str(table.kind), "n": c.limit, "variants": reports, "control": control})
    run.expect("i.i.d. control: block sums are normal", control["blocks"]["verdict"] == "normal")


def _alternating(run: _Run) -> None:
    c = run.config
    spec = SeriesSpec(parse_rule(c.positive), parse_rule(c.negative))
    with run.stage("alternating"):
        rep = alternating_report(spec, c.limit, c.window)
        checks = {}
        try:
            table, _ = alternating_series_table(spec, min(c.limit, 50))
            S = np.cumsum(table.values)
            checks["closed_form_max_error"] = max(
                abs(float(S[k - 1]) - closed_form_partial(spec, k)) for k in range(1, S.size + 1)
            )
        except TypeError:
            checks["closed_form_max_error"] = None
    run.result("alternating.json", {**rep, **checks})
    err = checks["closed_form_max_error"]
    run.expect("partial sums match closed form", err is None or err <= 1e-12)
    run.expect("limit law reported as degenerate", rep["report"]["degenerate"])


def _mertens_gap(run: _Run) -> None:
    c = run.config
    table = run.table()
    grid = parse_grid(c.grid, c.limit)
    with run.stage("mean-gap"):
        md = mean_decay_exponent(table, grid)
    run.result("mertens_gap.json", {"kind": str(table.kind), "grid": grid.tolist(), **md.to_dict()})
    # the measured gap must decay slower than 1/n, i.e. the normal-limit condition fails
    run.expect("mean gap decays slower than 1/n", not md.condition_holds)


_DISPATCH = {
    "independence": _independence,
    "density": _density,
    "distribution": _distribution,
    "charfun": _charfun,
    "taylor": _taylor,
    "clt": _clt,
    "alternating": _alternating,
    "mertens-gap": _mertens_gap,
}


def run_experiment(config: ExperimentConfig) -> RunManifest:
    """Execute one experiment, write its result files and ``manifest.json``."""
    run = _Run(config)
    t0 = time.perf_counter()
    _DISPATCH[config.experiment](run)
    run.manifest.stage_seconds["total"] = time.perf_counter() - t0
    _atomic_write(run.out / "manifest.json", dumps(run.manifest.to_dict()))
    return run.manifest
