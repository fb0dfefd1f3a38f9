"""Config-driven random-polytope experiments.

Every trial draws from its own Philox stream keyed by
``(master seed, family, n, N, trial)``, so rows are reproducible one by one
and the assembled CSV does not depend on the number of workers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import re
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from scipy.stats import theilslopes

from .body import FAMILIES, body_isotropic_constant, family_body
from .errors import ConeHullError, ConfigError
from .hull import MAX_HULL_DIM, build_hull
from .isotropy import bound_chain, max_subset_sign_sum
from .sampling import make_rng, sample_cone_boundary, sample_coupled_pair

REGIMES = ("unconditional", "general", "volume_radius")
CHAIN_COLUMNS = (
    "trial", "n", "N", "body", "l_exact", "l1_bound_raw", "l2_bound",
    "facet_l1", "facet_l2sq", "vol_radius", "seed",
)  # fmt: skip
EXTRA_COLUMNS = (
    "regime", "L_norm", "vr_norm", "n_vertices", "n_facets", "coplanar",
    "l1_mean", "l1_se", "l1_mode", "l2sq_mean", "l2_bound_ok", "facet_l1_ok",
    "facet_l2_ok", "general_position", "subset_l1", "subset_l2", "subset_exhaustive", "status",
)  # fmt: skip
VOLUME_COLUMNS = (
    "trial", "n", "N", "body", "vol_radius", "vol_radius_uniform", "inclusion",
    "volume_ok", "monotone", "ratio_a", "ratio_b", "seed", "status",
)  # fmt: skip
MAX_FAILURE_RATE = 0.01
TREND_STREAM = 7_000_001


# --------------------------------------------------------------------------
# config


def parse_n_schedule(entry, n: int) -> int:
    """``8``, ``"2n"``, ``"n^2"``, ``"nlogn"`` (rounded) -> an integer N."""
    if isinstance(entry, (int, np.integer)) and not isinstance(entry, bool):
        return int(entry)
    s = str(entry).replace(" ", "").replace("*", "").lower()
    if s.isdigit():
        return int(s)
    m = re.fullmatch(r"(\d*)n", s)
    if m:
        return int(m.group(1) or 1) * n
    if s in ("n^2", "n2", "nn"):
        return n * n
    if s in ("nlogn", "nln(n)", "nlog(n)"):
        return max(n + 1, round(n * math.log(n)))
    raise ConfigError(f"cannot parse N schedule entry {entry!r}")


@dataclass
class ExperimentConfig:
    regime: str = "unconditional"
    families: list = field(default_factory=lambda: ["l1"])
    dims: list = field(default_factory=lambda: [4])
    n_schedule: list = field(default_factory=lambda: ["2n", "3n", "4n"])
    trials: int = 200
    seed: int = 0
    l1_mode: str = "auto"
    l1_samples: int = 20_000
    subset_stats: bool = False
    subset_budget: int = 10_000
    subset_cap: int = 10**7
    trend_bootstrap: int = 1000
    workers: int = 1
    output_csv: str | None = None
    output_json: str | None = None
    warnings: list = field(default_factory=list)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__) - {"warnings"}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    @staticmethod
    def from_json_dict(path: str) -> dict:
        try:
            with open(path) as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return d

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        return cls.from_dict(cls.from_json_dict(path))

    def cells(self) -> list[tuple[str, int, int]]:
        out = []
        for fam in self.families:
            for n in self.dims:
                Ns = sorted({parse_n_schedule(e, n) for e in self.n_schedule})
                out.extend((fam, n, N) for N in Ns)
        return out

    def validate(self) -> None:
        if self.regime not in REGIMES:
            raise ConfigError(f"regime must be one of {REGIMES}")
        if not self.families or not self.dims:
            raise ConfigError("families and dims must be nonempty")
        if not self.n_schedule:
            raise ConfigError("N schedule is empty")
        if self.trials < 1 or self.workers < 1:
            raise ConfigError("trials and workers must be >= 1")
        if self.l1_mode not in ("auto", "exact", "mc"):
            raise ConfigError("l1_mode must be auto, exact or mc")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ConfigError(f"unknown family {fam!r}; choose from {FAMILIES}")
        for n in self.dims:
            if not 1 <= int(n) <= MAX_HULL_DIM:
                raise ConfigError(f"dimension {n} outside the exact range 1..{MAX_HULL_DIM}")
        if self.regime == "unconditional":
            for fam in self.families:
                if not family_body(fam, 2, self.seed, normalize=False).is_unconditional:
                    raise ConfigError(f"family {fam!r} is not unconditional")
        self.warnings = []
        for fam, n, N in self.cells():
            if N <= n:
                raise ConfigError(f"cell n={n}, N={N} violates n < N")
            if self.regime == "general" and N > math.exp(math.sqrt(n)):
                self.warnings.append(f"n={n}, N={N} exceeds e^sqrt(n) = {math.exp(math.sqrt(n)):.2f}")

    def as_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------------
# workers


@lru_cache(maxsize=64)
def _body(fam: str, n: int, seed: int):
    return family_body(fam, n, seed)


def _fam_code(fam: str) -> int:
    return FAMILIES.index(fam)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _run_jobs(fn, tasks, workers: int):
    """Map ``fn`` over ``tasks`` preserving order; results never depend on ``workers``."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, tasks, chunksize=max(1, len(tasks) // (8 * workers))))


def _log_ratio(N, n):
    return math.log(2.0 * N / n)


def _polytope_trial(task) -> dict:
    cfg, fam, n, N, trial = task
    seed = cfg["seed"]
    row = {"trial": trial, "n": n, "N": N, "body": fam, "seed": seed, "regime": cfg["regime"]}
    try:
        body = _body(fam, n, seed)
        rng = make_rng(seed, (_fam_code(fam), n, N, trial))
        X = sample_cone_boundary(body, N, rng).points
        P = build_hull(X, coplanar="triangulate")
        bc = bound_chain(P, l1_mode=cfg["l1_mode"], rng=rng, samples=cfg["l1_samples"])
        lr = _log_ratio(N, n)
        row.update(
            l_exact=bc.l_exact,
            l1_bound_raw=bc.l1_bound_raw,
            l2_bound=bc.l2_bound,
            facet_l1=bc.facet_l1,
            facet_l2sq=bc.facet_l2sq,
            vol_radius=bc.volume_radius,
            L_norm=bc.l_exact / math.sqrt(lr),
            vr_norm=bc.volume_radius / min(math.sqrt(lr / n), 1.0),
            n_vertices=P.n_vertices,
            n_facets=P.n_facets,
            coplanar=P.coplanar,
            l1_mean=bc.l1_mean,
            l1_se=bc.l1_se,
            l1_mode=bc.l1_mode,
            l2sq_mean=bc.l2sq_mean,
            l2_bound_ok=bc.l2_bound_ok,
            facet_l1_ok=bc.facet_l1_ok,
            facet_l2_ok=bc.facet_l2_ok,
            general_position=P.n_vertices == 2 * N,
            status="ok",
        )
        if cfg["subset_stats"]:
            s1 = max_subset_sign_sum(X, "l1", cfg["subset_budget"], rng, cap=cfg["subset_cap"])
            s2 = max_subset_sign_sum(X, "l2", cfg["subset_budget"], rng, cap=cfg["subset_cap"])
            row.update(subset_l1=s1.value, subset_l2=s2.value, subset_exhaustive=s1.exhaustive and s2.exhaustive)
    except (ConeHullError, np.linalg.LinAlgError) as exc:
        row["status"] = f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")
    return row


# --------------------------------------------------------------------------
# summaries


def _quantiles(v):
    v = np.asarray(v, dtype=np.float64)
    if v.size == 0:
        return {"median": None, "p99": None, "max": None}
    return {"median": float(np.median(v)), "p99": float(np.percentile(v, 99)), "max": float(v.max())}


def trend_test(groups: dict, rng, bootstrap: int = 1000, level: float = 0.95) -> dict:
    """Theil-Sen slope of per-cell medians against ``log log N`` with a
    bootstrap band (trials resampled within each cell).

    ``groups`` maps N to the trial values of that cell. Passes when the
    lower end of the band is <= 0, i.e. no significant growth in N.
    """
    Ns = sorted(N for N in groups if len(groups[N]))
    if len(Ns) < 2:
        return {"slope": None, "band": None, "pass": True, "cells": len(Ns), "note": "fewer than two cells"}
    x = np.log(np.log(np.asarray(Ns, dtype=np.float64)))
    vals = [np.asarray(groups[N], dtype=np.float64) for N in Ns]
    med = np.array([np.median(v) for v in vals])
    slope = float(theilslopes(med, x)[0])
    reps = np.empty(bootstrap)
    for b in range(bootstrap):
        m = [np.median(v[rng.integers(0, v.size, v.size)]) for v in vals]
        reps[b] = theilslopes(m, x)[0]
    tail = 50.0 * (1.0 - level)
    band = (float(np.percentile(reps, tail)), float(np.percentile(reps, 100.0 - tail)))
    return {"slope": slope, "band": band, "pass": band[0] <= 0.0, "cells": len(Ns), "medians": med.tolist()}


def _rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(_fmt(r.get(c, "")) for c in columns)
    return buf.getvalue()


def _write(path, text):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)


@dataclass
class ExperimentReport:
    config: dict
    rows: list
    summary: dict
    columns: tuple = CHAIN_COLUMNS + EXTRA_COLUMNS

    def to_csv(self) -> str:
        return _rows_to_csv(self.rows, self.columns)

    def to_json(self) -> str:
        return json.dumps({"config": self.config, "summary": self.summary}, indent=2, sort_keys=True)

    @property
    def passed(self) -> bool:
        return bool(self.summary.get("pass"))

    def write(self, csv_path=None, json_path=None) -> None:
        _write(csv_path or self.config.get("output_csv"), self.to_csv())
        _write(json_path or self.config.get("output_json"), self.to_json())


def _summarize_polytope(cfg: ExperimentConfig, rows: list) -> dict:
    metric = "l_exact" if cfg.regime == "unconditional" else "L_norm"
    cells = []
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r["body"], r["n"], r["N"]), []).append(r)
    for (fam, n, N), rs in by_cell.items():
        ok = [r for r in rs if r["status"] == "ok"]
        fails = len(rs) - len(ok)
        cell = {
            "body": fam,
            "n": n,
            "N": N,
            "trials": len(rs),
            "failures": fails,
            "cell_failed": fails > MAX_FAILURE_RATE * len(rs),
            "l_exact": _quantiles([r["l_exact"] for r in ok]),
            "L_norm": _quantiles([r["L_norm"] for r in ok]),
            "vol_radius": _quantiles([r["vol_radius"] for r in ok]),
            "l2_consistent": all(r["l2_bound_ok"] for r in ok),
            "facet_bounds_ok": all(r["facet_l1_ok"] and r["facet_l2_ok"] for r in ok),
            "coplanar_trials": sum(1 for r in ok if r["coplanar"]),
        }
        if N <= 2 * n:
            cell["all_vertices"] = all(r["general_position"] for r in ok)
        cells.append(cell)
    trends = []
    for fam in cfg.families:
        for n in cfg.dims:
            groups = {
                N: [r[metric] for r in rs if r["status"] == "ok"]
                for (f, nn, N), rs in by_cell.items()
                if f == fam and nn == n
            }
            rng = make_rng(cfg.seed, (TREND_STREAM, _fam_code(fam), n))
            t = trend_test(groups, rng, cfg.trend_bootstrap)
            p99 = {N: [float(np.percentile(v, 99))] if len(v) else [] for N, v in groups.items()}
            xs = sorted(N for N in p99 if p99[N])
            t99 = (
                float(theilslopes([p99[N][0] for N in xs], np.log(np.log(np.asarray(xs, float))))[0])
                if len(xs) >= 2
                else None
            )
            trends.append({"body": fam, "n": n, "metric": metric, **t, "p99_slope": t99})
    oks = [r for r in rows if r["status"] == "ok"]
    passed = (
        all(t["pass"] for t in trends)
        and not any(c["cell_failed"] for c in cells)
        and all(c["l2_consistent"] for c in cells)
    )
    return {
        "regime": cfg.regime,
        "metric": metric,
        "cells": cells,
        "trends": trends,
        "max_l_exact": max((r["l_exact"] for r in oks), default=None),
        "max_L_norm": max((r["L_norm"] for r in oks), default=None),
        "warnings": cfg.warnings,
        "pass": passed,
    }


def _coerce(config) -> ExperimentConfig:
    if isinstance(config, ExperimentConfig):
        config.validate()
        return config
    if isinstance(config, dict):
        return ExperimentConfig.from_dict(config)
    return ExperimentConfig.from_json(config)


def _coerce_regime(config, regime: str) -> ExperimentConfig:
    if isinstance(config, ExperimentConfig):
        config = config.as_dict()
        config.pop("warnings")
    elif not isinstance(config, dict):
        config = ExperimentConfig.from_json_dict(config)
    return ExperimentConfig.from_dict({**config, "regime": regime})


def _polytope_tasks(cfg: ExperimentConfig):
    light = {k: getattr(cfg, k) for k in ("seed", "regime", "l1_mode", "l1_samples", "subset_stats", "subset_budget", "subset_cap")}
    return [(light, fam, n, N, t) for fam, n, N in cfg.cells() for t in range(cfg.trials)]


def run_polytope_experiment(config) -> ExperimentReport:
    cfg = _coerce(config)
    for w in cfg.warnings:
        warnings.warn(w, stacklevel=2)
    rows = _run_jobs(_polytope_trial, _polytope_tasks(cfg), cfg.workers)
    report = ExperimentReport(cfg.as_dict(), rows, _summarize_polytope(cfg, rows))
    report.write()
    return report


def run_unconditional_experiment(config) -> ExperimentReport:
    """Random polytopes from cone points of unconditional isotropic bodies:
    per-trial bound chains and a no-growth-in-N trend test on median ``L``."""
    return run_polytope_experiment(_coerce_regime(config, "unconditional"))


def run_general_experiment(config) -> ExperimentReport:
    """As :func:`run_unconditional_experiment` for general isotropic bodies,
    with the trend test on ``L / sqrt(log(2N/n))``."""
    return run_polytope_experiment(_coerce_regime(config, "general"))


# --------------------------------------------------------------------------
# volume radius and coupling


def _volume_trial(task) -> list[dict]:
    seed, fam, n, Ns, trial = task
    body = _body(fam, n, seed)
    LK = body_isotropic_constant(body)
    rng = make_rng(seed, (_fam_code(fam), n, 0, trial))
    rows = []
    try:
        uni, cone = sample_coupled_pair(body, max(Ns), rng)
    except ConeHullError as exc:
        return [{"trial": trial, "n": n, "N": N, "body": fam, "seed": seed, "status": f"failed: {exc}"} for N in Ns]
    prev = 0.0
    for N in Ns:
        row = {"trial": trial, "n": n, "N": N, "body": fam, "seed": seed}
        try:
            PX = build_hull(cone.points[:N], coplanar="triangulate")
            PY = build_hull(uni.points[:N], coplanar="triangulate")
            vr = PX.volume ** (1.0 / n)
            lr = _log_ratio(N, n)
            row.update(
                vol_radius=vr,
                vol_radius_uniform=PY.volume ** (1.0 / n),
                inclusion=bool(PX.contains(uni.points[:N], tol=1e-9).all()),
                volume_ok=PY.volume <= PX.volume * (1.0 + 1e-12),
                monotone=vr >= prev * (1.0 - 1e-12),
                ratio_a=vr / min(math.sqrt(lr / n), 1.0),
                ratio_b=vr / (LK * math.sqrt(lr / n)),
                status="ok",
            )
            prev = vr
        except ConeHullError as exc:
            row["status"] = f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")
        rows.append(row)
    return rows


def run_volume_radius_check(config) -> ExperimentReport:
    """Per trial: coupled uniform/cone samples, nested in N.

    Records ``|K_N|^(1/n)``, its two normalized ratios, the inclusion
    ``conv{+-Y} in conv{+-X}`` with ``|K~_N| <= |K_N|``, and monotonicity of
    the volume radius along the nested N schedule.
    """
    if isinstance(config, dict):
        config = {"regime": "volume_radius", **config}
    elif isinstance(config, str):
        config = ExperimentConfig.from_json_dict(config)
        config.setdefault("regime", "volume_radius")
    cfg = _coerce(config)
    tasks = []
    for fam in cfg.families:
        for n in cfg.dims:
            Ns = tuple(sorted({parse_n_schedule(e, n) for e in cfg.n_schedule}))
            tasks.extend((cfg.seed, fam, n, Ns, t) for t in range(cfg.trials))
    rows = [r for rs in _run_jobs(_volume_trial, tasks, cfg.workers) for r in rs]
    cells = []
    by_cell = {}
    for r in rows:
        by_cell.setdefault((r["body"], r["n"], r["N"]), []).append(r)
    for (fam, n, N), rs in by_cell.items():
        ok = [r for r in rs if r["status"] == "ok"]
        ra = np.array([r["ratio_a"] for r in ok])
        rb = np.array([r["ratio_b"] for r in ok])
        cells.append(
            {
                "body": fam,
                "n": n,
                "N": N,
                "trials": len(rs),
                "failures": len(rs) - len(ok),
                "inclusion_rate": float(np.mean([r["inclusion"] and r["volume_ok"] for r in ok])) if ok else 0.0,
                "monotone_rate": float(np.mean([r["monotone"] for r in ok])) if ok else 0.0,
                "median_vol_radius": float(np.median([r["vol_radius"] for r in ok])) if ok else None,
                "ratio_a": {q: float(np.percentile(ra, q)) for q in (1, 50, 99)} if ok else None,
                "ratio_b": {q: float(np.percentile(rb, q)) for q in (1, 50, 99)} if ok else None,
            }
        )
    median_monotone = True
    for fam in cfg.families:
        for n in cfg.dims:
            meds = [c["median_vol_radius"] for c in sorted(cells, key=lambda c: c["N"]) if c["body"] == fam and c["n"] == n]
            median_monotone &= all(b >= a for a, b in zip(meds, meds[1:]))
    summary = {
        "cells": cells,
        "inclusion_all": all(c["inclusion_rate"] == 1.0 for c in cells),
        "monotone_all": all(c["monotone_rate"] == 1.0 for c in cells),
        "median_monotone": median_monotone,
        "positive_lower_quantile": all(c["ratio_a"] and c["ratio_a"][1] > 0 for c in cells),
        "failures": sum(c["failures"] for c in cells),
    }
    summary["pass"] = bool(
        summary["inclusion_all"] and summary["monotone_all"] and median_monotone and summary["positive_lower_quantile"]
    )
    report = ExperimentReport(cfg.as_dict(), rows, summary, VOLUME_COLUMNS)
    report.write()
    return report
