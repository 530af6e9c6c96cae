"""Monte-Carlo harness: replicated estimation runs, MSE tables and threshold sweeps.

Every replication draws its noise from ``SeedSequence([master_seed, *keys])``
so a run is reproducible entry by entry regardless of batching. Reductions
are plain means over the replication axis, in replication order.
"""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from . import __version__
from .errors import ConfigError, NumericalError
from .model import VarModel, model_from_dict, model_to_dict, random_model, simulate_batch, true_moments
from .quantize import SensorGraph, sign_and_predominance, threshold_quantize
from .scheme1 import estimate_model_s1, failure_lower_bound
from .scheme2 import (
    RatioVariant,
    estimate_correlations_s2,
    estimate_model_s2,
    estimate_ratios_efficient,
    estimate_ratios_optimized,
    estimate_ratios_simple,
    predict_variance_indep,
)
from .yulewalker import mlse_continuous, rescale, solve_correlation_system

log = logging.getLogger(__name__)

TABLE1_MODELS = (
    ((0.25, 1.00), (0.00, -0.20)),
    ((0.70, 0.00), (1.00, -0.50)),
    ((0.90, 0.50), (-0.50, 0.70)),
)
TABLE1_T = (250, 500, 1000, 2000)
DESK_REPS = 200
FULL_REPS = 1000
FULL_SWEEP_REPS = 1001
SWEEP_T = 10_000
DEFAULT_ETA_GRID = (0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0)


def replication_seed(master: int, *keys: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), *(int(k) for k in keys)])


def table1_models() -> list[VarModel]:
    return [VarModel(np.array(a)[None], np.eye(2)) for a in TABLE1_MODELS]


@dataclass
class ExperimentConfig:
    models: list[VarModel] = field(default_factory=table1_models)
    T_list: tuple[int, ...] = TABLE1_T
    reps: int = DESK_REPS
    seed: int = 0
    graph: str = "complete"
    variants: tuple[str, ...] = ("simple",)
    # random models (table 3)
    d_list: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8)
    model_count: int = DESK_REPS
    band: tuple[float, float] = (0.5, 0.85)
    # threshold sweep (scheme 1)
    eta_grid: tuple[float, ...] = DEFAULT_ETA_GRID
    sweep_mode: str = "both"
    eta_fixed: float = 0.5

    def validate(self) -> None:
        if self.reps < 1 or self.model_count < 1:
            raise ConfigError("replication and model counts must be >= 1")
        max_p = max((m.p for m in self.models), default=1)
        if any(T < max_p + 2 for T in self.T_list):
            raise ConfigError(f"every T must be >= p + 2 = {max_p + 2}")
        if self.graph not in ("complete", "star", "path"):
            raise ConfigError(f"unknown graph {self.graph!r}")
        for v in self.variants:
            try:
                RatioVariant(v)
            except ValueError:
                raise ConfigError(f"unknown ratio variant {v!r}") from None
        if self.sweep_mode not in ("both", "eta2_fixed"):
            raise ConfigError(f"unknown sweep mode {self.sweep_mode!r}")
        if any(e == 0 for e in self.eta_grid) or self.eta_fixed == 0:
            raise ConfigError("scheme-1 standard thresholds must be nonzero")
        if any(d < 2 or d > 8 for d in self.d_list):
            raise ConfigError("random-model dimensions must lie in [2, 8]")
        lo, hi = self.band
        if not 0 < lo < hi < 1:
            raise ConfigError(f"bad spectral band {self.band}")
        for m in self.models:
            if not m.is_stationary:
                raise ConfigError(f"model with spectral radius {m.spectral_radius:.3f} is not stationary")

    def echo(self) -> dict:
        return {
            "models": [model_to_dict(m) for m in self.models],
            "T_list": list(self.T_list),
            "reps": self.reps,
            "seed": self.seed,
            "graph": self.graph,
            "variants": list(self.variants),
            "d_list": list(self.d_list),
            "model_count": self.model_count,
            "band": list(self.band),
            "eta_grid": list(self.eta_grid),
            "sweep_mode": self.sweep_mode,
            "eta_fixed": self.eta_fixed,
        }


_SCALAR_KEYS = {"reps": int, "seed": int, "model_count": int, "graph": str, "sweep_mode": str, "eta_fixed": float}
_TUPLE_KEYS = {"T_list": int, "variants": str, "d_list": int, "band": float, "eta_grid": float}


def config_from_dict(obj: dict, *, full: bool = False) -> ExperimentConfig:
    """Build a config from JSON data; unknown keys are rejected."""
    cfg = ExperimentConfig()
    if full:
        cfg.reps = FULL_REPS
        cfg.model_count = FULL_REPS
    for key, value in obj.items():
        try:
            if key == "models":
                cfg.models = [model_from_dict(m) for m in value]
            elif key in _SCALAR_KEYS:
                setattr(cfg, key, _SCALAR_KEYS[key](value))
            elif key in _TUPLE_KEYS:
                setattr(cfg, key, tuple(_TUPLE_KEYS[key](v) for v in value))
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key!r}: {exc}") from exc
    cfg.validate()
    return cfg


def load_config(path: str | Path | None, *, full: bool = False) -> ExperimentConfig:
    if path is None:
        return config_from_dict({}, full=full)
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return config_from_dict(obj, full=full)


def make_graph(kind: str, d: int) -> SensorGraph:
    return {"complete": SensorGraph.complete, "star": SensorGraph.star, "path": SensorGraph.path}[kind](d)


@dataclass
class MseReport:
    """Entrywise statistics of one estimator over replications.

    ``mse`` averages ``(estimate - truth)^2`` over successful replications;
    failed ones are only counted.
    """

    label: dict
    truth: np.ndarray
    average: np.ndarray
    mse: np.ndarray
    variance: np.ndarray
    replications: int
    failures: int = 0
    aux: dict = field(default_factory=dict)
    wall_clock: float = 0.0

    @classmethod
    def from_samples(cls, label: dict, truth, samples, replications: int, **kw) -> "MseReport":
        truth = np.asarray(truth, dtype=float)
        samples = np.asarray(samples, dtype=float)
        if samples.shape[0] == 0:
            nan = np.full(truth.shape, np.nan)
            return cls(label, truth, nan, nan.copy(), nan.copy(), replications, **kw)
        return cls(
            label,
            truth,
            samples.mean(axis=0),
            ((samples - truth) ** 2).mean(axis=0),
            samples.var(axis=0),
            replications,
            **kw,
        )

    @property
    def mean_mse(self) -> float:
        return float(np.mean(self.mse))

    def to_dict(self) -> dict:
        out = {
            "label": self.label,
            "replications": self.replications,
            "failures": self.failures,
            "truth": _jsonable(self.truth),
            "average": _jsonable(self.average),
            "mse": _jsonable(self.mse),
            "variance": _jsonable(self.variance),
        }
        out["aux"] = {k: _jsonable(v) for k, v in sorted(self.aux.items())}
        return out


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x] if x.ndim else _jsonable(x.item())
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return None if math.isnan(x) else x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in sorted(x.items())}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _true_unscaled(m: VarModel) -> tuple[np.ndarray, np.ndarray]:
    mom = true_moments(m)
    ratios = mom.sigmas[:, None] / mom.sigmas[None, :]
    return m.coeff[0] / ratios, ratios


def _offdiag_null(mat: np.ndarray) -> np.ndarray:
    out = np.array(mat, dtype=float)
    out[np.diag_indices(out.shape[0])] = np.nan
    return out


# ---------------------------------------------------------------- scheme 2

@dataclass
class Scheme2Samples:
    coeff: np.ndarray  # (reps, d, d), first lag
    unscaled: np.ndarray
    ratios: np.ndarray
    mlse: np.ndarray
    failures: int


def collect_scheme2(model: VarModel, T: int, reps: int, seed: int, model_index: int,
                    graph: str = "complete", variant: str = "simple") -> Scheme2Samples:
    trajs = simulate_batch(model, T, [replication_seed(seed, model_index, T, k) for k in range(reps)])
    g = make_graph(graph, model.d)
    coeff, unscaled, ratios, mlse = [], [], [], []
    failures = 0
    for z in trajs:
        rec = sign_and_predominance(z, g)
        try:
            res = estimate_model_s2(rec, model.p, variant)
            ml = mlse_continuous(z, model.p)[0]
        except NumericalError as exc:
            log.debug("replication failed: %s", exc)
            failures += 1
            continue
        coeff.append(res.coeff[0])
        unscaled.append(res.unscaled.a_tilde[0])
        ratios.append(res.ratios.r)
        mlse.append(ml[0])
    return Scheme2Samples(*(np.array(v) for v in (coeff, unscaled, ratios, mlse)), failures)


def _scheme2_reports(cfg: ExperimentConfig, decompose: bool) -> list[dict]:
    out = []
    for mi, model in enumerate(cfg.models):
        a_tilde, r_true = _true_unscaled(model)
        for T in cfg.T_list:
            start = time.perf_counter()
            s = collect_scheme2(model, T, cfg.reps, cfg.seed, mi, cfg.graph, cfg.variants[0])
            elapsed = time.perf_counter() - start
            label = {"model": mi, "T": T, "estimator": f"scheme2_{cfg.variants[0]}"}
            rep = MseReport.from_samples(label, model.coeff[0], s.coeff, cfg.reps,
                                         failures=s.failures, wall_clock=elapsed)
            base = MseReport.from_samples({"model": mi, "T": T, "estimator": "mlse"},
                                          model.coeff[0], s.mlse, cfg.reps, failures=s.failures)
            if decompose:
                ut = MseReport.from_samples({}, a_tilde, s.unscaled, cfg.reps)
                rt = MseReport.from_samples({}, r_true, s.ratios, cfg.reps)
                pred = predict_variance_indep(a_tilde, r_true, ut.variance, rt.variance, rt.average)
                rep.aux = {
                    "mse_unscaled": ut.mse,
                    "mse_ratio": _offdiag_null(rt.mse),
                    "var_if_independent": pred,
                    "true_unscaled": a_tilde,
                    "true_ratio": r_true,
                }
            log.info("model %d T=%d: mse %.3e (mlse %.3e) in %.1fs", mi, T, rep.mean_mse, base.mean_mse, elapsed)
            out.append({"scheme2": rep, "mlse": base})
    return out


def run_table1(cfg: ExperimentConfig) -> list[dict]:
    """Scheme-2 vs continuous least squares for every (model, T)."""
    cfg.validate()
    return _scheme2_reports(cfg, decompose=False)


def run_table2(cfg: ExperimentConfig) -> list[dict]:
    """Table-1 runs plus unscaled/ratio MSE and the independence variance prediction."""
    cfg.validate()
    return _scheme2_reports(cfg, decompose=True)


# ---------------------------------------------------------------- table 3

def _entry_masks(d: int) -> dict[str, np.ndarray]:
    off = ~np.eye(d, dtype=bool)
    first = np.zeros((d, d), dtype=bool)
    first[0, :] = first[:, 0] = True
    return {"all": np.ones((d, d), dtype=bool), "offdiag": off,
            "offdiag_first": off & first, "offdiag_other": off & ~first}


def run_table3(cfg: ExperimentConfig, T: int | None = None) -> list[dict]:
    """Per dimension: pooled MSE of the three ratio variants and MLSE over random models.

    Each random model is simulated once with a complete graph; all variants
    share that record.
    """
    cfg.validate()
    T = T or (cfg.T_list[-1] if cfg.T_list else 2000)
    rows = []
    for d in cfg.d_list:
        start = time.perf_counter()
        graph = SensorGraph.complete(d)
        masks = _entry_masks(d)
        sq = {k: [] for k in ("simple", "optimized", "efficient", "mlse")}
        failures = 0
        for k in range(cfg.model_count):
            model = random_model(d, seed=replication_seed(cfg.seed, 3, d, k), spectral_band=cfg.band)
            z = simulate_batch(model, T, [replication_seed(cfg.seed, d, k, T, 0)])[0]
            rec = sign_and_predominance(z, graph)
            try:
                corr = estimate_correlations_s2(rec, 1)
                unscaled = solve_correlation_system(corr.corr)
                simple, _ = estimate_ratios_simple(rec, corr)
                variants = {
                    "simple": simple,
                    "optimized": estimate_ratios_optimized(simple),
                    "efficient": estimate_ratios_efficient(rec, corr)[0],
                }
                ml = mlse_continuous(z, 1)[0][0]
            except NumericalError as exc:
                log.debug("d=%d model %d failed: %s", d, k, exc)
                failures += 1
                continue
            for name, ratios in variants.items():
                sq[name].append((rescale(unscaled, ratios)[0][0] - model.coeff[0]) ** 2)
            sq["mlse"].append((ml - model.coeff[0]) ** 2)
        stats = {}
        for name, errs in sq.items():
            mse = np.mean(errs, axis=0) if errs else np.full((d, d), np.nan)
            stats[name] = {key: float(np.mean(mse[mask])) if mask.any() else None
                           for key, mask in masks.items()}
            stats[name]["matrix"] = mse
        elapsed = time.perf_counter() - start
        log.info("d=%d: simple %.3e optimized %.3e efficient %.3e mlse %.3e (%.1fs)", d,
                 stats["simple"]["all"], stats["optimized"]["all"], stats["efficient"]["all"],
                 stats["mlse"]["all"], elapsed)
        rows.append({"d": d, "T": T, "models": cfg.model_count, "failures": failures, "stats": stats,
                     "wall_clock": elapsed})
    return rows


# ---------------------------------------------------------------- sweep

def sweep_points(cfg: ExperimentConfig) -> list[tuple[float, float]]:
    if cfg.sweep_mode == "both":
        return [(e, e) for e in cfg.eta_grid]
    return [(e, cfg.eta_fixed) for e in cfg.eta_grid]


def run_threshold_sweep(cfg: ExperimentConfig, T: int = SWEEP_T) -> list[dict]:
    """Scheme-1 statistics over a grid of standard thresholds (d = 2 models)."""
    cfg.validate()
    out = []
    for mi, model in enumerate(cfg.models):
        mom = true_moments(model)
        a_tilde, r_true = _true_unscaled(model)
        trajs = None
        for gi, (e1, e2) in enumerate(sweep_points(cfg)):
            start = time.perf_counter()
            eta = np.full(model.d, e2, dtype=float)
            eta[0] = e1
            c = eta * mom.sigmas
            # same noise for every grid point: only the thresholds change
            if trajs is None:
                trajs = simulate_batch(model, T, [replication_seed(cfg.seed, mi, T, k) for k in range(cfg.reps)])
            coeff, unscaled, ratios = [], [], []
            failures = singular = 0
            for z in trajs:
                try:
                    res = estimate_model_s1(threshold_quantize(z, c), model.p)
                except NumericalError:
                    singular += 1
                    continue
                if res.failed:
                    failures += 1
                    continue
                coeff.append(res.coeff[0])
                unscaled.append(res.unscaled.a_tilde[0])
                ratios.append(res.ratios.r)
            label = {"model": mi, "T": T, "eta1": e1, "eta2": e2, "estimator": "scheme1"}
            rep = MseReport.from_samples(label, model.coeff[0], np.array(coeff), cfg.reps,
                                         failures=failures + singular)
            ut = MseReport.from_samples({}, a_tilde, np.array(unscaled), cfg.reps)
            rt = MseReport.from_samples({}, r_true, np.array(ratios), cfg.reps)
            med = (np.median(np.abs(np.array(coeff) - model.coeff[0]), axis=0)
                   if coeff else np.full(a_tilde.shape, np.nan))
            rep.aux = {
                "mse_unscaled": ut.mse,
                "mse_ratio": _offdiag_null(rt.mse),
                "var_if_independent": predict_variance_indep(a_tilde, r_true, ut.variance, rt.variance, rt.average),
                "median_abs_error": med,
                "failures_flagged": float(failures),
                "failures_singular": float(singular),
                "failure_lower_bound": failure_lower_bound(max(abs(e1), abs(e2)), T),
            }
            rep.wall_clock = time.perf_counter() - start
            log.info("model %d eta=(%g, %g): failures %d/%d, mse %.3e (%.1fs)", mi, e1, e2,
                     failures + singular, cfg.reps, rep.mean_mse, rep.wall_clock)
            out.append({"scheme1": rep})
    return out


# ---------------------------------------------------------------- output

def _matrix_rows(prefix: dict, name: str, mat) -> Iterable[list]:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim == 0:
        yield [*prefix.values(), "", "", name, _fmt(mat.item())]
        return
    for i in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            yield [*prefix.values(), i, j, name, _fmt(mat[i, j])]


def _fmt(v: float) -> str:
    return "" if math.isnan(v) else repr(float(v))


def report_rows(kind: str, results: list[dict]) -> tuple[list[str], list[list]]:
    """Flatten results into one CSV row per (model, T, variant, i, j, statistic)."""
    if kind == "table3":
        header = ["d", "T", "variant", "i", "j", "statistic", "value"]
        rows = []
        for row in results:
            for name, st in row["stats"].items():
                prefix = {"d": row["d"], "T": row["T"], "variant": name}
                rows.extend(_matrix_rows(prefix, "mse", st["matrix"]))
                for key in ("all", "offdiag", "offdiag_first", "offdiag_other"):
                    rows.append([row["d"], row["T"], name, "", "", f"mse_{key}",
                                 "" if st[key] is None else repr(st[key])])
            rows.append([row["d"], row["T"], "", "", "", "failures", str(row["failures"])])
        return header, rows
    header = ["model", "T", "eta1", "eta2", "variant", "i", "j", "statistic", "value"]
    rows = []
    for group in results:
        for rep in group.values():
            lab = rep.label
            prefix = {"model": lab["model"], "T": lab["T"], "eta1": lab.get("eta1", ""),
                      "eta2": lab.get("eta2", ""), "variant": lab["estimator"]}
            for name in ("average", "mse", "variance"):
                rows.extend(_matrix_rows(prefix, name, getattr(rep, name)))
            for name, mat in sorted(rep.aux.items()):
                rows.extend(_matrix_rows(prefix, name, mat))
            rows.append([*prefix.values(), "", "", "failures", str(rep.failures)])
    return header, rows


def results_to_json(kind: str, cfg: ExperimentConfig, results: list[dict]) -> dict:
    if kind == "table3":
        body = [
            {k: (_jsonable({n: {kk: _jsonable(vv) for kk, vv in st.items()} for n, st in v.items()})
                 if k == "stats" else v)
             for k, v in row.items() if k != "wall_clock"}
            for row in results
        ]
    else:
        body = [{name: rep.to_dict() for name, rep in sorted(group.items())} for group in results]
    return {"kind": kind, "version": __version__, "config": cfg.echo(), "results": body}


def write_outputs(kind: str, cfg: ExperimentConfig, results: list[dict], out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``<kind>.csv`` and ``<kind>.json``; contents depend only on config and seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    header, rows = report_rows(kind, results)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    csv_path = out / f"{kind}.csv"
    csv_path.write_text(buf.getvalue())
    json_path = out / f"{kind}.json"
    json_path.write_text(json.dumps(results_to_json(kind, cfg, results), indent=1, sort_keys=True) + "\n")
    return csv_path, json_path


def summarize(kind: str, results: list[dict]) -> Any:
    """Short human-readable lines for the terminal."""
    lines = []
    if kind == "table3":
        for row in results:
            st = row["stats"]
            lines.append(
                f"d={row['d']}: simple {st['simple']['all']:.3e} optimized {st['optimized']['all']:.3e} "
                f"efficient {st['efficient']['all']:.3e} mlse {st['mlse']['all']:.3e}"
            )
        return lines
    for group in results:
        for name, rep in group.items():
            lab = rep.label
            where = f"model {lab['model']} T={lab['T']}"
            if "eta1" in lab:
                where += f" eta=({lab['eta1']:g}, {lab['eta2']:g})"
            lines.append(f"{where} {name}: mean mse {rep.mean_mse:.3e} failures {rep.failures}/{rep.replications}")
    return lines
