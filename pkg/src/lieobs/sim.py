"""Scenarios, measurement channels, rate fitting and trajectory export.

A scenario is one JSON file (``"version": 1``) describing the group, the
plant, the observer, initial conditions, noise, integrator and horizon.
:func:`run_scenario` turns it into three job-exclusive files::

    <prefix>.csv               t, X (row-major), Xhat (row-major), cost, residual_X, residual_Xhat
    <prefix>.diagnostics.json  synchrony defect, monotonicity count, rate report, ...
    <prefix>.noise.json        the noise traces actually used (only when noise is active)

Exit codes: 0 ok, 2 validation error, 3 divergence guard.
"""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import jsonschema
import numpy as np

from .channels import (InputNoise, MeasurementChannel, SplitMix64, StateNoise, apply_channel,
                       bounded_noise_trace)
from .costs import CostFunction, cost_by_name, log_distance_cost, mirror_invariance
from .errors import ErrorConvention
from .exceptions import DivergenceError, LieObsError, UsageError
from .groups import GroupDescriptor, group_by_name
from .integrators import Diagnostics, IntegratorConfig, simulate_coupled, time_grid
from .lie_core import GroupElement, frobenius_metric
from .observers import Observer, make_observer
from .systems import Handedness, InputSignal, InvariantSystem

__all__ = [
    "InputNoise", "MeasurementChannel", "SplitMix64", "StateNoise", "apply_channel", "bounded_noise_trace",
    "RateReport", "fit_exponential_rate", "Scenario", "ScenarioError", "load_scenario", "parse_scenario",
    "run_scenario", "run_batch", "write_csv", "read_csv", "OUTPUT_ENV",
]

log = logging.getLogger(__name__)

OUTPUT_ENV = "LIEOBS_OUTPUT_DIR"
EXIT_OK, EXIT_CHECK, EXIT_VALIDATION, EXIT_DIVERGENCE = 0, 1, 2, 3
RATE_FLOOR = 1e-20          # relative floor below which a cost trace counts as converged
MIN_FIT_POINTS = 10


# --------------------------------------------------------------------------
# convergence-rate analysis
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class RateReport:
    window: tuple[float, float]
    rate: float
    r_squared: float
    final_cost: float
    points: int

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        return d


def fit_exponential_rate(times, costs, tail_fraction: float = 0.5) -> RateReport:
    """Least-squares fit of ln f = c - rate * t over the tail of a cost trace.

    The trace is first cut at the first sample that is non-positive or
    below ``RATE_FLOOR * max(f)``, since such values only carry rounding
    noise.  The tail is the last ``tail_fraction`` of the remaining time
    span.  Fewer than 10 usable points raise :class:`UsageError`.
    """
    t = np.asarray(times, dtype=float)
    f = np.asarray(costs, dtype=float)
    if t.shape != f.shape or t.ndim != 1:
        raise UsageError("times and costs must be 1-d arrays of equal length")
    if not 0.0 < tail_fraction <= 1.0:
        raise UsageError(f"tail_fraction must lie in (0, 1], got {tail_fraction}")
    if len(f) == 0 or not np.all(np.isfinite(f)):
        raise UsageError("cost trace is empty or not finite")
    floor = RATE_FLOOR * max(float(np.max(f)), 0.0)
    bad = np.nonzero((f <= 0.0) | (f <= floor))[0]
    end = int(bad[0]) if len(bad) else len(f)
    t, f = t[:end], f[:end]
    if len(t) < MIN_FIT_POINTS:
        raise UsageError(f"only {len(t)} samples above the floating floor; need {MIN_FIT_POINTS}")
    t_start = t[-1] - tail_fraction * (t[-1] - t[0])
    sel = t >= t_start - 1e-12 * max(1.0, abs(t_start))
    tt, y = t[sel], np.log(f[sel])
    if len(tt) < MIN_FIT_POINTS:
        raise UsageError(f"tail window holds {len(tt)} samples; need {MIN_FIT_POINTS}")
    slope, icpt = np.polyfit(tt, y, 1)
    resid = y - (slope * tt + icpt)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # a flat trace leaves only rounding in ss_tot; its fit is exact
    flat = ss_tot <= len(y) * (1e-14 * max(1.0, float(np.max(np.abs(y))))) ** 2
    r2 = 1.0 if flat else 1.0 - float(resid @ resid) / ss_tot
    return RateReport((float(tt[0]), float(tt[-1])), float(-slope), float(min(max(r2, 0.0), 1.0)),
                      float(costs[-1]), int(len(tt)))


# --------------------------------------------------------------------------
# scenario parsing
# --------------------------------------------------------------------------

class ScenarioError(UsageError):
    """Schema or semantic problem in a scenario file; carries a location."""

    def __init__(self, message: str, field_path: str = "", line: Optional[int] = None):
        self.field_path, self.line = field_path, line
        loc = []
        if line is not None:
            loc.append(f"line {line}")
        if field_path:
            loc.append(f"field {field_path}")
        super().__init__(f"{', '.join(loc)}: {message}" if loc else message)


def _schema() -> dict:
    return json.loads(resources.files("lieobs").joinpath("schema/scenario.schema.json").read_text())


def _line_of(text: Optional[str], path: Sequence) -> Optional[int]:
    """Best-effort line of the JSON member addressed by ``path``."""
    if not text:
        return None
    pos = 0
    for key in path:
        if isinstance(key, str):
            j = text.find(f'"{key}"', pos)
            if j < 0:
                break
            pos = j
    return text.count("\n", 0, pos) + 1


def _dotted(path: Sequence) -> str:
    out = ""
    for k in path:
        out += f"[{k}]" if isinstance(k, int) else (f".{k}" if out else str(k))
    return out


@dataclass(eq=False)
class Scenario:
    name: str
    group: GroupDescriptor
    system: InvariantSystem
    observer: Observer
    X0: GroupElement
    Xhat0: GroupElement
    config: IntegratorConfig
    horizon: float
    channel_spec: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    source: Optional[Path] = None
    monitor: Optional[CostFunction] = None

    @property
    def times(self) -> np.ndarray:
        return time_grid(self.horizon, self.config.step, self.system.input.breakpoints)

    @property
    def error_side(self) -> ErrorConvention:
        s = self.output.get("error_side")
        return ErrorConvention(s) if s else self.observer.error_side

    def channel(self) -> MeasurementChannel:
        """Build the channel on this scenario's grid (generated traces cover it exactly)."""
        g, times = self.group, self.times
        spec = self.channel_spec
        sn = spec.get("state_noise", {"kind": "none"})
        inn = spec.get("input_noise", {"kind": "none"})
        s_kind, i_kind = StateNoise(sn["kind"]), InputNoise(inn["kind"])

        def trace(d, dim):
            if "trace" in d:
                return np.array(d["trace"], dtype=float)
            return bounded_noise_trace(int(d.get("seed", 0)), len(times), dim, float(d.get("amplitude", 0.0)))

        st = trace(sn, g.dim_algebra) if s_kind is not StateNoise.NONE else None
        it = trace(inn, g.dim_algebra) if i_kind is not InputNoise.NONE else None
        return MeasurementChannel(s_kind, st, i_kind, it, g, times)


def _element(g: GroupDescriptor, spec: dict, where: str) -> GroupElement:
    try:
        if "exp" in spec:
            return GroupElement.exp(g, spec["exp"])
        return GroupElement(g, spec["matrix"])
    except LieObsError as exc:
        raise ScenarioError(str(exc), where) from None


def parse_scenario(data: dict, text: Optional[str] = None, source: Optional[Path] = None) -> Scenario:
    """Validate a decoded scenario and build the objects it names."""
    validator = jsonschema.Draft202012Validator(_schema())
    err = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if err is not None:
        path = list(err.absolute_path)
        raise ScenarioError(err.message, _dotted(path), _line_of(text, path))

    def fail(msg, *path):
        raise ScenarioError(msg, _dotted(path), _line_of(text, path))

    g = group_by_name(data["group"])
    hand = Handedness(data["system"]["handedness"])
    try:
        signal = InputSignal.from_dict(data["system"]["input"])
        system = InvariantSystem(g, hand, signal)
    except LieObsError as exc:
        fail(str(exc), "system", "input")

    ob = data["observer"]
    cost = metric = None
    if "cost" in ob:
        c = ob["cost"]
        try:
            cost = cost_by_name(c["name"], g, **c.get("params", {}))
        except (LieObsError, TypeError) as exc:
            fail(str(exc), "observer", "cost", "name")
        if c.get("mirror"):
            cost = mirror_invariance(cost)
    if "metric" in ob:
        try:
            metric = frobenius_metric(g, ob["metric"]["invariance"])
        except LieObsError as exc:
            fail(str(exc), "observer", "metric", "invariance")
    try:
        observer = make_observer(ob["kind"], g, ob.get("handedness", hand.value), cost, metric)
    except LieObsError as exc:
        fail(str(exc), "observer", "kind")
    if observer.handedness is not hand:
        fail(f"{observer.handedness.value} observer cannot observe a {hand.value} system", "observer", "kind")

    X0 = _element(g, data["initial_state"], "initial_state")
    Xh0 = _element(g, data["initial_estimate"], "initial_estimate")
    try:
        cfg = IntegratorConfig(**data.get("integrator", {}))
    except (LieObsError, ValueError) as exc:
        fail(str(exc), "integrator")

    sc = Scenario(data.get("name") or (source.stem if source else "scenario"), g, system, observer, X0, Xh0,
                  cfg, float(data["horizon"]), data.get("channel", {}), data.get("output", {}), source,
                  cost or log_distance_cost(g))
    for key in ("state_noise", "input_noise"):
        spec = sc.channel_spec.get(key, {})
        if "trace" in spec:
            tr = spec["trace"]
            if any(len(row) != g.dim_algebra for row in tr):
                fail(f"noise trace rows must have {g.dim_algebra} coordinates", "channel", key, "trace")
            if len(tr) < len(sc.times):
                fail(f"noise trace has {len(tr)} samples but the grid has {len(sc.times)} points",
                     "channel", key, "trace")
    try:
        sc.channel()
    except LieObsError as exc:
        fail(str(exc), "channel")
    return sc


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"invalid JSON: {exc.msg}", "", exc.lineno) from None
    return parse_scenario(data, text, path)


# --------------------------------------------------------------------------
# export
# --------------------------------------------------------------------------

def _fmt(x: float) -> str:
    return "%.17g" % x


def csv_header(g: GroupDescriptor) -> list[str]:
    n = g.matrix_size
    cells = [f"{i}{j}" for i in range(n) for j in range(n)]
    return ["t"] + [f"X_{c}" for c in cells] + [f"Xhat_{c}" for c in cells] + ["cost", "residual_X", "residual_Xhat"]


def write_csv(path, g: GroupDescriptor, times, Xs, Xhs, cost, res_x, res_xh) -> None:
    """Header row, then one row per grid point, every float with 17 significant digits."""
    N = len(times)
    rows = np.column_stack([np.asarray(times), np.asarray(Xs).reshape(N, -1), np.asarray(Xhs).reshape(N, -1),
                            np.asarray(cost), np.asarray(res_x), np.asarray(res_xh)])
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(csv_header(g)) + "\n")
        for r in rows:
            fh.write(",".join(_fmt(v) for v in r) + "\n")


def read_csv(path) -> dict[str, np.ndarray]:
    """Columns of an exported trajectory keyed by header name."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {h: data[:, i] for i, h in enumerate(header)}


def _jsonable(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return x


def _diagnostics_dict(sc: Scenario, diag: Diagnostics, tail: float) -> dict:
    out = {
        "scenario": sc.name,
        "status": "ok",
        "group": sc.group.name,
        "observer": sc.observer.kind.value,
        "error_side": diag.error_side.value,
        "monitor": diag.monitor,
        "horizon": sc.horizon,
        "steps": len(diag.times) - 1,
        "initial_cost": float(diag.cost[0]),
        "final_cost": float(diag.cost[-1]),
        "synchrony_defect": _jsonable(float(diag.synchrony_defect)),
        "monotonicity_violations": diag.monotonicity_violations,
        "max_membership_residual": diag.max_membership_residual,
        "noise_active": diag.noise_active,
    }
    try:
        out["rate"] = fit_exponential_rate(diag.times, diag.cost, tail).to_dict()
    except UsageError as exc:
        out["rate"] = None
        out["rate_note"] = str(exc)
    if diag.noise_active:
        k0 = int(len(diag.cost) * (1.0 - tail))
        late = diag.cost[k0:]
        out["noise_residual_max"] = _jsonable(diag.noise_residual) if diag.noise_residual is not None else None
        out["tail_cost"] = {"mean": float(late.mean()), "max": float(late.max()), "min": float(late.min())}
    return out


def _noise_dump(ch: MeasurementChannel) -> dict:
    d: dict = {"times": [float(t) for t in ch.times]}
    if ch.state_noise is not StateNoise.NONE:
        entry = {"kind": ch.state_noise.value}
        if ch.state_coords is not None:
            entry["trace"] = ch.state_coords.tolist()
        else:
            entry["matrices"] = ch.state_trace.tolist()
        d["state_noise"] = entry
    if ch.input_noise is not InputNoise.NONE:
        d["input_noise"] = {"kind": ch.input_noise.value, "trace": ch.input_trace.tolist()}
    return d


# --------------------------------------------------------------------------
# running
# --------------------------------------------------------------------------

def output_dir(sc: Optional[Scenario] = None, override=None) -> Path:
    """Explicit argument, then $LIEOBS_OUTPUT_DIR, then the scenario's output.dir, then ./lieobs_output."""
    if override:
        return Path(override)
    if os.environ.get(OUTPUT_ENV):
        return Path(os.environ[OUTPUT_ENV])
    if sc is not None and sc.output.get("dir"):
        d = Path(sc.output["dir"])
        if not d.is_absolute() and sc.source is not None:
            d = sc.source.parent / d
        return d
    return Path("lieobs_output")


def run(sc: Scenario, out_dir=None) -> tuple[int, Optional[Diagnostics], Path]:
    """Simulate a parsed scenario and write its outputs; returns (exit code, diagnostics, prefix path)."""
    dest = output_dir(sc, out_dir)
    dest.mkdir(parents=True, exist_ok=True)
    prefix = dest / sc.output.get("prefix", sc.name)
    tail = float(sc.output.get("tail_fraction", 0.5))
    ch = sc.channel()
    monitor = sc.monitor or sc.observer.cost or log_distance_cost(sc.group)
    try:
        tx, txh, diag = simulate_coupled(sc.system, sc.observer, ch, sc.X0, sc.Xhat0, sc.config, sc.horizon,
                                         error_side=sc.error_side, monitor=monitor)
    except DivergenceError as exc:
        log.error("%s: %s", sc.name, exc)
        with open(f"{prefix}.diagnostics.json", "w") as fh:
            json.dump({"scenario": sc.name, "status": "diverged", "message": str(exc)}, fh, indent=2)
        return EXIT_DIVERGENCE, None, prefix
    write_csv(f"{prefix}.csv", sc.group, diag.times, tx.matrices, txh.matrices, diag.cost,
              diag.residual_x, diag.residual_xhat)
    with open(f"{prefix}.diagnostics.json", "w") as fh:
        json.dump(_diagnostics_dict(sc, diag, tail), fh, indent=2)
    if ch.active:
        with open(f"{prefix}.noise.json", "w") as fh:
            json.dump(_noise_dump(ch), fh)
    return EXIT_OK, diag, prefix


def run_scenario(path, out_dir=None) -> int:
    """Parse, simulate and export one scenario file; returns the exit code."""
    try:
        sc = load_scenario(path)
    except ScenarioError as exc:
        log.error("%s: %s", path, exc)
        return EXIT_VALIDATION
    return run(sc, out_dir)[0]


def _job(args):
    path, out_dir = args
    logging.basicConfig(level=logging.WARNING)
    return str(path), run_scenario(path, out_dir)


def run_batch(directory, out_dir=None, workers: Optional[int] = None) -> dict[str, int]:
    """Run every ``*.json`` scenario in ``directory`` as an independent job.

    Jobs share nothing and write job-exclusive files, so they run in a
    process pool.  Returns {path: exit code}.
    """
    paths = sorted(Path(directory).glob("*.json"))
    if not paths:
        raise UsageError(f"no scenario files in {directory}")
    workers = workers or min(len(paths), os.cpu_count() or 1)
    if workers == 1:
        return dict(_job((p, out_dir)) for p in paths)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return dict(pool.map(_job, [(p, out_dir) for p in paths]))


def bundled_scenarios() -> list[Path]:
    root = resources.files("lieobs").joinpath("scenarios")
    return sorted(Path(str(root)).glob("*.json"))
