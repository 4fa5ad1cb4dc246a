"""Monte-Carlo sweeps over dimension and tolerance, log-log fits, trace files."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .dlac import dlac_run
from .errors import DomainError, InsufficientAbscissae
from .spectral import TRACE_COLUMNS, RunConfig, RunResult, Trace, run_until, xi
from .spectrum import (
    InitialOverlaps,
    RotationMatrix,
    Spectrum,
    make_ladder_spectrum,
    make_random_rotation,
    make_random_spectrum,
    overlaps_from_state,
    random_overlaps,
    uniform_overlaps,
    uniform_state,
)
from .statevector import (
    EvolutionOperator,
    build_initial_composite,
    expectation_u,
    fractions_of,
    step_closed_form,
)

DEFAULT_N_VALUES = (10, 16, 25, 40, 63, 100)
DEFAULT_EPS_VALUES = tuple(float(e) for e in np.geomspace(0.3, 0.003, 8))
SWEEP_COLUMNS = ("axis", "mean_nc", "std_nc", "trials_converged", "trials_total")


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int

    def to_dict(self) -> dict:
        return {"A": self.slope, "B": self.intercept, "r2": self.r_squared}


def fit_loglog(points: Iterable[tuple[float, float]]) -> FitResult:
    """Least squares of log10(y) = A log10(x) + B."""
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    if np.any(x <= 0.0) or np.any(y <= 0.0):
        raise DomainError("log-log fit needs strictly positive coordinates")
    if np.unique(x).size < 2:
        raise InsufficientAbscissae("log-log fit needs at least two distinct x values")
    lx, ly = np.log10(x), np.log10(y)
    reg = stats.linregress(lx, ly)
    resid = ly - (reg.slope * lx + reg.intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else max(0.0, 1.0 - float(np.sum(resid ** 2)) / ss_tot)
    return FitResult(float(reg.slope), float(reg.intercept), min(r2, 1.0), int(x.size))


@dataclass(frozen=True)
class SweepSpec:
    """One Monte-Carlo sweep.

    ``mode`` is ``"sweep-n"`` (axis ``n_values``, tolerance ``epsilon``) or
    ``"sweep-eps"`` (axis ``eps_values``, dimension ``n``). The gap is ``gap`` when
    given, otherwise ``1 / N**gap_exponent``.
    """

    mode: str = "sweep-n"
    gap_exponent: float = 1.0
    gap: float | None = None
    n_values: tuple = DEFAULT_N_VALUES
    eps_values: tuple = DEFAULT_EPS_VALUES
    n: int = 10
    epsilon: float = 0.01
    trials: int = 100
    master_seed: int = 0
    tau: float = 1.0
    engine: str = "spectral"
    max_iter: int = 10_000_000
    ground: str = "min"
    overlap_model: str = "rotation"

    def __post_init__(self):
        if self.mode not in ("sweep-n", "sweep-eps"):
            raise ValueError(f"unknown sweep mode {self.mode!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.engine not in ("spectral", "statevector"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if self.overlap_model not in ("rotation", "direct"):
            raise ValueError(f"unknown overlap model {self.overlap_model!r}")
        axis = np.asarray(self.axis, dtype=float)
        if axis.size == 0:
            raise ValueError("sweep axis is empty")
        d = np.diff(axis)
        if axis.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
            raise ValueError("sweep axis must be strictly monotone")

    @property
    def axis(self) -> tuple:
        return tuple(self.n_values) if self.mode == "sweep-n" else tuple(self.eps_values)

    def point(self, index: int) -> tuple[int, float, float]:
        """(N, D, epsilon) at sweep position ``index``."""
        if self.mode == "sweep-n":
            n, eps = int(self.n_values[index]), self.epsilon
        else:
            n, eps = int(self.n), float(self.eps_values[index])
        gap = self.gap if self.gap is not None else 1.0 / n ** self.gap_exponent
        return n, gap, eps


@dataclass(frozen=True)
class SweepPoint:
    axis: float
    mean_nc: float
    std_nc: float
    trials_converged: int
    trials_total: int


@dataclass(frozen=True)
class SweepTable:
    points: tuple
    fit: FitResult | None
    n_c: tuple = field(default=(), repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for p in self.points:
            w.writerow([repr(float(p.axis)), repr(p.mean_nc), repr(p.std_nc), p.trials_converged, p.trials_total])
        return buf.getvalue()


def child_seed(master_seed: int, point: int, trial: int) -> tuple[int, int, int]:
    """Seed entropy for one trial; distinct (point, trial) pairs give distinct tuples."""
    return (int(master_seed), int(point), int(trial))


def random_instance(
    n: int, gap: float, seed: tuple, ground: str = "min", overlap_model: str = "rotation"
) -> tuple[Spectrum, InitialOverlaps, RotationMatrix | None]:
    """Random spectrum plus initial overlaps for one trial.

    With ``overlap_model="rotation"`` the uniform computational state is rotated
    into a random eigenbasis; ``"direct"`` draws the overlaps as a random unit
    vector and returns no rotation.
    """
    spectrum = make_random_spectrum(n, gap, seed=(*seed, 0), ground=ground)
    if overlap_model == "rotation":
        rot = make_random_rotation(n, seed=(*seed, 1))
        return spectrum, overlaps_from_state(rot, uniform_state(n)), rot
    return spectrum, random_overlaps(n, seed=(*seed, 1)), None


def statevector_trace(
    spectrum: Spectrum, overlaps: InitialOverlaps, config: RunConfig, rotation: RotationMatrix | None = None
) -> RunResult:
    """Run the full composite evolution and record the same trace columns as the recursion."""
    op = EvolutionOperator(spectrum, config.tau, rotation)
    psi = build_initial_composite(overlaps, rotation)
    target = 1.0 - config.epsilon
    rows = []
    prev = None
    i = 0
    while True:
        f = fractions_of(psi, op.rotation)
        w = abs(expectation_u(psi, op))
        gsq = (1.0, 1.0) if prev is None else (f[0] / prev[0], f[1] / prev[1] if prev[1] > 0 else 0.0)
        drift = abs(float(np.vdot(psi.amplitudes, psi.amplitudes).real) - 1.0)
        rows.append((f[0], f[1], gsq[0], gsq[1], w, xi(w, config.tau), drift))
        if f[0] >= target or i == config.max_iter:
            break
        prev = f
        psi = step_closed_form(psi, op)
        i += 1
    return RunResult(n_c=i, converged=bool(f[0] >= target), trace=Trace(*np.array(rows).T), final=psi)


def _trial(args) -> tuple[int, bool]:
    n, gap, eps, seed, spec = args
    spectrum, overlaps, rot = random_instance(n, gap, seed, spec.ground, spec.overlap_model)
    config = RunConfig(tau=spec.tau, epsilon=eps, max_iter=spec.max_iter)
    if spec.engine == "spectral":
        res = run_until(spectrum, overlaps, config, record_trace=False)
    else:
        res = statevector_trace(spectrum, overlaps, config, rot)
    return res.n_c, res.converged


def worker_count(requested: int | None = None) -> int:
    cap = os.environ.get("EIGENAMP_THREADS")
    n = requested if requested is not None else (os.cpu_count() or 1)
    if cap:
        n = min(n, max(1, int(cap)))
    return max(1, n)


def _run_sweep(spec: SweepSpec, workers: int | None) -> SweepTable:
    tasks = []
    for p in range(len(spec.axis)):
        n, gap, eps = spec.point(p)
        tasks.extend((n, gap, eps, child_seed(spec.master_seed, p, t), spec) for t in range(spec.trials))
    nw = worker_count(workers)
    if nw == 1:
        results = [_trial(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=nw) as pool:
            results = list(pool.map(_trial, tasks, chunksize=max(1, len(tasks) // (8 * nw))))
    points, all_nc, fit_pts = [], [], []
    for p, value in enumerate(spec.axis):
        chunk = results[p * spec.trials:(p + 1) * spec.trials]
        ncs = np.array([nc for nc, ok in chunk if ok], dtype=float)
        all_nc.append(tuple(int(nc) for nc, ok in chunk))
        if ncs.size:
            mean, std = float(ncs.mean()), float(ncs.std(ddof=1)) if ncs.size > 1 else 0.0
            if mean > 0:
                fit_pts.append((float(value), mean))
        else:
            mean, std = math.nan, math.nan
        points.append(SweepPoint(float(value), mean, std, int(ncs.size), spec.trials))
    fit = fit_loglog(fit_pts) if len({x for x, _ in fit_pts}) >= 2 else None
    return SweepTable(tuple(points), fit, tuple(all_nc))


def sweep_n(spec: SweepSpec, workers: int | None = None) -> SweepTable:
    """Mean n_c against N, fitted as log10(n_c) = A log10(N) + B.

    Raises ``InsufficientAbscissae`` when fewer than two N values produced data.
    """
    if spec.mode != "sweep-n":
        raise ValueError("sweep_n needs mode='sweep-n'")
    table = _run_sweep(spec, workers)
    if table.fit is None:
        raise InsufficientAbscissae("sweep produced fewer than two usable N values")
    return table


def sweep_eps(spec: SweepSpec, workers: int | None = None) -> SweepTable:
    """Mean n_c against epsilon, fitted as log10(n_c) = A log10(epsilon) + B."""
    if spec.mode != "sweep-eps":
        raise ValueError("sweep_eps needs mode='sweep-eps'")
    table = _run_sweep(spec, workers)
    if table.fit is None:
        raise InsufficientAbscissae("sweep produced fewer than two usable epsilon values")
    return table


def trace_to_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    cols = trace.columns()
    for i in range(len(trace)):
        w.writerow([i] + [repr(float(cols[name][i])) for name in TRACE_COLUMNS[1:]])
    return buf.getvalue()


def trace_from_csv(text: str) -> Trace:
    rows = list(csv.DictReader(io.StringIO(text)))
    return Trace(*(np.array([float(r[name]) for r in rows]) for name in TRACE_COLUMNS[1:]))


def read_points_csv(text: str) -> list[tuple[float, float]]:
    """Points for ``fit``: a sweep table (axis, mean_nc) or any two-column x,y CSV."""
    rows = list(csv.reader(io.StringIO(text)))
    header = [h.strip() for h in rows[0]]
    if "axis" in header and "mean_nc" in header:
        ix, iy = header.index("axis"), header.index("mean_nc")
        body = rows[1:]
    else:
        try:
            float(header[0])
            body = rows
        except ValueError:
            body = rows[1:]
        ix, iy = 0, 1
    pts = []
    for r in body:
        if not r:
            continue
        x, y = float(r[ix]), float(r[iy])
        if math.isfinite(x) and math.isfinite(y):
            pts.append((x, y))
    return pts


@dataclass(frozen=True)
class ConvergenceOutcome:
    amplifier: RunResult
    dlac: RunResult | None
    spectrum: Spectrum
    overlaps: InitialOverlaps


def build_model(
    model: str, n: int, e0: float | None = None, gap: float | None = None, seed: int = 0,
    ground: str = "min", overlap_model: str = "rotation",
) -> tuple[Spectrum, InitialOverlaps, RotationMatrix | None]:
    """Ladder (uniform overlaps in the eigenbasis) or random-model instance."""
    if model == "ladder":
        e0 = e0 if e0 is not None else 0.5 / n
        return make_ladder_spectrum(n, e0), uniform_overlaps(n), None
    if model == "random":
        return random_instance(n, gap if gap is not None else 1.0 / n, child_seed(seed, 0, 0), ground, overlap_model)
    raise ValueError(f"unknown model {model!r}")


def run_convergence(
    spectrum: Spectrum,
    overlaps: InitialOverlaps,
    config: RunConfig,
    engine: str = "spectral",
    rotation: RotationMatrix | None = None,
    with_dlac: bool = False,
    out: str | Path | None = None,
    fmt: str = "csv",
) -> ConvergenceOutcome:
    """Run the amplifier (and optionally DLAC from the same initial state), writing traces.

    With ``out`` set, the amplifier trace goes to ``out`` and the DLAC trace to
    ``<stem>.dlac<suffix>`` next to it.
    """
    if engine == "spectral":
        amp = run_until(spectrum, overlaps, config)
    elif engine == "statevector":
        amp = statevector_trace(spectrum, overlaps, config, rotation)
    else:
        raise ValueError(f"unknown engine {engine!r}")
    cool = dlac_run(spectrum, overlaps.weights, config) if with_dlac else None
    if out is not None:
        out = Path(out)
        write_result(out, amp, fmt)
        if cool is not None:
            write_result(dlac_path(out), cool, fmt)
    return ConvergenceOutcome(amp, cool, spectrum, overlaps)


def dlac_path(out: Path) -> Path:
    return out.with_name(f"{out.stem}.dlac{out.suffix}")


def write_result(path: Path, result: RunResult, fmt: str = "csv") -> None:
    if fmt == "csv":
        path.write_text(trace_to_csv(result.trace))
    elif fmt == "json":
        path.write_text(json.dumps(result.to_dict()))
    else:
        raise ValueError(f"unknown format {fmt!r}")


def sweep_spec_from_axis(mode: str, values: Sequence[float], **kw) -> SweepSpec:
    if mode == "sweep-n":
        return SweepSpec(mode=mode, n_values=tuple(int(v) for v in values), **kw)
    return SweepSpec(mode=mode, eps_values=tuple(float(v) for v in values), **kw)
