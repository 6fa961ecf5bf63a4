"""Monte Carlo harness for detection-frequency tables.

Every replication draws from its own random stream, derived from
``(master_seed, T, replication)``, so results do not depend on how the work
is scheduled across processes. All strategies of a replication see the same
simulated series; strategies 1 and 2 also share the MAR grid fits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from tirever.distributions import SkewedTParams, stream
from tirever.errors import DataError, TireverError
from tirever.hp import hp_decompose
from tirever.mar import MarSpec, mar_simulate
from tirever.series import TimeSeries, demean
from tirever.strategies import evaluate_strategies, rr_test

STRATEGIES = ("s1", "s2", "rr")
DEFAULT_REPS = 200


@dataclass(frozen=True)
class DgpConfig:
    phi: tuple[float, ...] = ()
    varphi: tuple[float, ...] = ()
    nu: float = 3.0
    gamma: float = 1.0
    sigma: float = 1.0

    def spec(self) -> MarSpec:
        return MarSpec(self.phi, self.varphi, SkewedTParams(self.nu, self.gamma, self.sigma))

    @property
    def label(self) -> str:
        parts = [f"phi={','.join(f'{c:g}' for c in self.phi)}"] if self.phi else []
        if self.varphi:
            parts.append(f"varphi={','.join(f'{c:g}' for c in self.varphi)}")
        parts.append(f"nu={self.nu:g}")
        if self.gamma != 1.0:
            parts.append(f"gamma={self.gamma:g}")
        return f"MAR({len(self.phi)},{len(self.varphi)}) " + " ".join(parts)


@dataclass(frozen=True)
class TrendConfig:
    kind: str = "none"  # "none" | "random_walk_drift"
    delta: float = 0.05
    noise_sd: float = 1.0


@dataclass(frozen=True)
class McConfig:
    dgp: DgpConfig
    T_list: tuple[int, ...]
    n_reps: int = DEFAULT_REPS
    strategies: tuple[str, ...] = ("s1", "s2", "rr")
    p_known: bool = True
    trend: TrendConfig = field(default_factory=TrendConfig)
    detrend_lambda: float | None = None
    master_seed: int = 20230601
    alpha: float = 0.05
    criterion: str = "bic"
    rr_k: int = 2
    rr_variance: str = "gaussian_null"
    burn_in: int = 200
    p_max: int | None = None
    normality_gate: bool = False
    name: str = ""

    def __post_init__(self) -> None:
        if self.n_reps < 1:
            raise DataError("n_reps: must be at least 1")
        if not self.T_list:
            raise DataError("T_list: must be non-empty")
        if any(int(t) < 50 for t in self.T_list):
            raise DataError("T_list: sample sizes must be at least 50")
        bad = [s for s in self.strategies if s not in STRATEGIES]
        if bad or not self.strategies:
            raise DataError(f"strategies: expected a non-empty subset of {STRATEGIES}, got {list(self.strategies)}")
        if self.trend.kind not in ("none", "random_walk_drift"):
            raise DataError(f"trend.kind: unknown overlay {self.trend.kind!r}")
        if self.trend.kind != "none" and self.detrend_lambda is None:
            raise DataError("detrend_lambda: required when a trend overlay is configured")
        if self.detrend_lambda is not None and not self.detrend_lambda > 0:
            raise DataError("detrend_lambda: must be positive")
        if not 0 < self.alpha < 1:
            raise DataError("alpha: must lie in (0, 1)")
        if self.criterion not in ("aic", "bic"):
            raise DataError(f"criterion: expected 'aic' or 'bic', got {self.criterion!r}")

    @property
    def p_true(self) -> int:
        return len(self.dgp.phi) + len(self.dgp.varphi)

    def with_reps(self, n_reps: int) -> "McConfig":
        d = self.to_dict()
        d["n_reps"] = n_reps
        return McConfig.from_dict(d)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["dgp"]["phi"] = list(self.dgp.phi)
        d["dgp"]["varphi"] = list(self.dgp.varphi)
        d["T_list"] = list(self.T_list)
        d["strategies"] = list(self.strategies)
        return d

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "McConfig":
        if not isinstance(raw, dict):
            raise DataError("config: expected a JSON object")
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(raw) - known)
        if unknown:
            raise DataError(f"{unknown[0]}: unknown config field")
        for req in ("dgp", "T_list"):
            if req not in raw:
                raise DataError(f"{req}: missing required field")
        kw = dict(raw)
        kw["dgp"] = _sub(DgpConfig, raw["dgp"], "dgp")
        kw["trend"] = _sub(TrendConfig, raw.get("trend", {}), "trend")
        try:
            kw["T_list"] = tuple(int(t) for t in raw["T_list"])
        except (TypeError, ValueError):
            raise DataError("T_list: expected a list of integers") from None
        if "strategies" in raw:
            if not isinstance(raw["strategies"], list):
                raise DataError("strategies: expected a list")
            kw["strategies"] = tuple(str(s) for s in raw["strategies"])
        for name, typ in (("n_reps", int), ("master_seed", int), ("rr_k", int), ("burn_in", int)):
            if name in raw:
                kw[name] = _typed(raw[name], typ, name)
        for name in ("alpha",):
            if name in raw:
                kw[name] = _typed(raw[name], float, name)
        if raw.get("detrend_lambda") is not None:
            kw["detrend_lambda"] = _typed(raw["detrend_lambda"], float, "detrend_lambda")
        if raw.get("p_max") is not None:
            kw["p_max"] = _typed(raw["p_max"], int, "p_max")
        for name in ("p_known", "normality_gate"):
            if name in raw and not isinstance(raw[name], bool):
                raise DataError(f"{name}: expected true or false")
        return cls(**kw)

    @classmethod
    def load(cls, path: str | Path) -> "McConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise DataError(f"config: cannot read {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"config: invalid JSON in {path}: {exc}") from exc
        return cls.from_dict(raw)


def shipped_configs() -> list[str]:
    """Names of the experiment configurations bundled with the package."""
    root = resources.files("tirever") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def resolve_config(name_or_path: str | Path) -> McConfig:
    """Load a config from a file path, or by name from the bundled set."""
    path = Path(name_or_path)
    if path.exists():
        return McConfig.load(path)
    stem = path.name[:-5] if path.name.endswith(".json") else path.name
    if stem in shipped_configs():
        with resources.as_file(resources.files("tirever") / "configs" / f"{stem}.json") as p:
            return McConfig.load(p)
    raise DataError(f"config: no such file or bundled config {str(name_or_path)!r}")


def _typed(value, typ, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DataError(f"{name}: expected a number, got {value!r}")
    if typ is int and float(value) != int(value):
        raise DataError(f"{name}: expected an integer, got {value!r}")
    return typ(value)


def _sub(cls, raw, name):
    if not isinstance(raw, dict):
        raise DataError(f"{name}: expected an object")
    unknown = sorted(set(raw) - set(cls.__dataclass_fields__))
    if unknown:
        raise DataError(f"{name}.{unknown[0]}: unknown field")
    kw = {}
    for key, val in raw.items():
        if key in ("phi", "varphi"):
            if not isinstance(val, list):
                raise DataError(f"{name}.{key}: expected a list of numbers")
            kw[key] = tuple(_typed(v, float, f"{name}.{key}") for v in val)
        elif key == "kind":
            kw[key] = str(val)
        else:
            kw[key] = _typed(val, float, f"{name}.{key}")
    try:
        obj = cls(**kw)
        if cls is DgpConfig:
            obj.spec()
    except DataError as exc:
        raise DataError(f"{name}: {exc}") from None
    return obj


@dataclass(frozen=True)
class McCell:
    dgp: str
    T: int
    strategy: str
    frequency: float
    n_effective: int
    failures: int


# --------------------------------------------------------------------------
# replications


def add_trend(series: TimeSeries, trend: TrendConfig, rng: np.random.Generator) -> TimeSeries:
    """Overlay a random walk with drift ``X_t = X_{t-1} + delta + eta_t`` (``X_0 = 0``)."""
    if trend.kind == "none":
        return series
    if trend.kind != "random_walk_drift":
        raise DataError(f"trend.kind: unknown overlay {trend.kind!r}")
    steps = trend.delta + trend.noise_sd * rng.standard_normal(len(series.values))
    return series.with_values(series.values + np.cumsum(steps))


def simulate_replication(config: McConfig, T: int, rep: int) -> TimeSeries:
    """The series a strategy sees in replication ``rep``: simulated, overlaid, detrended, demeaned."""
    rng = stream(config.master_seed, T, rep)
    y = mar_simulate(config.dgp.spec(), T, rng, burn_in=config.burn_in)
    y = add_trend(y, config.trend, rng)
    if config.detrend_lambda is not None:
        y = hp_decompose(y, config.detrend_lambda).cycle
    return demean(y)


def run_replication(config: McConfig, T: int, rep: int) -> dict[str, int | None]:
    """Detection outcome (1 irreversible / 0 not) per strategy; ``None`` marks a failure."""
    out: dict[str, int | None] = {}
    try:
        y = simulate_replication(config, T, rep)
    except TireverError:
        return {s: None for s in config.strategies}
    mar_strats = tuple(s for s in config.strategies if s != "rr")
    if mar_strats:
        p = config.p_true if config.p_known else None
        try:
            verdicts = evaluate_strategies(
                y,
                mar_strats,
                criterion=config.criterion,
                alpha=config.alpha,
                p=p,
                p_max=config.p_max,
                normality_alpha=config.alpha if config.normality_gate else None,
            )
            for s, v in verdicts.items():
                ok = v.selected is None or all(f.converged for f in v.fits)
                out[s] = int(v.irreversible) if ok else None
        except TireverError:
            out.update({s: None for s in mar_strats})
    if "rr" in config.strategies:
        try:
            rep_rng = stream(config.master_seed, T, rep, 1)
            rr = rr_test(y, config.rr_k, config.rr_variance, rng=rep_rng)
            out["rr"] = int(rr.rejects(config.alpha))
        except TireverError:
            out["rr"] = None
    return out


def _run_block(args) -> list[dict[str, int | None]]:
    config, T, reps = args
    return [run_replication(config, T, rep) for rep in reps]


def _aggregate(config: McConfig, T: int, outcomes: list[dict[str, int | None]]) -> list[McCell]:
    cells = []
    for s in config.strategies:
        vals = [o[s] for o in outcomes]
        done = [v for v in vals if v is not None]
        freq = sum(done) / len(done) if done else math.nan
        cells.append(McCell(config.dgp.label, T, s, freq, len(done), len(vals) - len(done)))
    return cells


def run_table(config: McConfig, jobs: int = 1, chunk: int = 10) -> list[McCell]:
    """Cells for every ``T`` in ``T_list`` and every configured strategy."""
    tasks = [
        (config, T, tuple(range(start, min(start + chunk, config.n_reps))))
        for T in config.T_list
        for start in range(0, config.n_reps, chunk)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            blocks = list(pool.map(_run_block, tasks))
    else:
        blocks = [_run_block(t) for t in tasks]
    by_T: dict[int, list] = {T: [] for T in config.T_list}
    for (_, T, _), block in zip(tasks, blocks):
        by_T[T].extend(block)
    return [cell for T in config.T_list for cell in _aggregate(config, T, by_T[T])]


def run_cell(config: McConfig, T: int, strategy: str, jobs: int = 1) -> McCell:
    if strategy not in config.strategies:
        raise DataError(f"strategy {strategy!r} not in configured set {config.strategies}")
    sub = McConfig.from_dict({**config.to_dict(), "T_list": [T], "strategies": [strategy]})
    return run_table(sub, jobs=jobs)[0]


# --------------------------------------------------------------------------
# output


def cells_to_csv(cells: list[McCell]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["dgp", "T", "strategy", "frequency", "n_effective", "failures"])
    for c in cells:
        w.writerow([c.dgp, c.T, c.strategy, f"{c.frequency:.6f}", c.n_effective, c.failures])
    return buf.getvalue()


_HEADERS = {"s1": "Strategy 1", "s2": "Strategy 2", "rr": "Ramsey-Rothman"}


def cells_to_markdown(cells: list[McCell], title: str | None = None) -> str:
    """Rows per sample size, one column per strategy, frequencies in percent."""
    strategies = list(dict.fromkeys(c.strategy for c in cells))
    Ts = list(dict.fromkeys(c.T for c in cells))
    lookup = {(c.T, c.strategy): c for c in cells}
    lines = []
    if title or cells:
        lines += [f"**{title or cells[0].dgp}**", ""]
    lines.append("| T | " + " | ".join(_HEADERS[s] for s in strategies) + " |")
    lines.append("|---|" + "---|" * len(strategies))
    for T in Ts:
        row = []
        for s in strategies:
            c = lookup[(T, s)]
            txt = "n/a" if math.isnan(c.frequency) else f"{100 * c.frequency:.1f}%"
            if c.failures:
                txt += f" ({c.failures} failed)"
            row.append(txt)
        lines.append(f"| T={T} | " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"
