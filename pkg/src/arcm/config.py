"""Run configuration: an INI file with one [model] section, one [run]
section, and one [optimizer:<kind>] section per optimizer.

Grammar (all keys optional unless noted):

    [model]
    kind = logistic_nonconvex | robust_linear | quadratic | rosenbrock
    dim = <int>                  ; analytic kinds only (required there)
    dataset = <path>             ; .libsvm/.txt or .csv, regression kinds
    label_col = <int>            ; CSV label column, default last
    synthetic_n = <int>          ; alternative to dataset
    synthetic_d = <int>
    synthetic_label_noise = <float in [0,1]>
    synthetic_task = classification | regression
    synthetic_seed = <int>
    chi = <float >= 0>           ; logistic regularization weight
    standardize = true | false
    subsample_n = <int>          ; 0 disables
    subsample_seed = <int>

    [run]
    x0 = zeros | seeded_gaussian
    x0_scale = <float>
    x0_seed = <int>
    grad_tol = <float > 0>
    max_iter = <int >= 1>
    max_seconds = <float>        ; empty/0 disables
    outdir = <path>
    seeds = <comma-separated ints>

    [optimizer:ARCm]             ; kind in {ARCm, ARC, CR, CRm, TR}
    label = <name>               ; defaults to the kind
    solver = exact | krylov | cauchy
    gamma1 = ... gamma2 = ... gamma3 = ...
    eta1 = ... eta2 = ...
    sigma0 = ... sigma_min = ...
    tau = ... alpha1 = ... alpha2 = ...
    krylov_max_dim = ... momentum_halvings = ...
    fixed_m = ... tr_radius0 = ... tr_radius_max = ...
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import data as data_mod
from .errors import ConfigurationError
from .objective import ModelSpec, ObjectiveModel, make_objective
from .optimizers import KINDS, SOLVERS, HyperParams, StopCriteria

_HYPER_FIELDS = {f.name: f.type for f in dataclasses.fields(HyperParams)}
_INT_HYPERS = ("krylov_max_dim", "momentum_halvings")


@dataclass(frozen=True)
class OptimizerConfig:
    kind: str
    label: str
    solver: str
    params: HyperParams


@dataclass(frozen=True)
class RunConfig:
    model_kind: str
    dim: Optional[int]
    dataset_path: Optional[str]
    label_col: Optional[int]
    synthetic: Optional[data_mod.SyntheticSpec]
    chi: float
    standardize: bool
    subsample_n: int
    subsample_seed: int
    x0_policy: str
    x0_scale: float
    x0_seed: int
    stop: StopCriteria
    outdir: str
    seeds: tuple[int, ...]
    optimizers: tuple[OptimizerConfig, ...]


def _get(section, key, conv, default, where):
    raw = section.get(key)
    if raw is None or raw.strip() == "":
        return default
    try:
        return conv(raw)
    except ValueError:
        raise ConfigurationError(
            f"[{where}] {key}: cannot parse {raw!r}") from None


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(raw)


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None

    if "model" not in cp:
        raise ConfigurationError("missing [model] section")
    model = cp["model"]
    kind = model.get("kind", "").strip()
    if not kind:
        raise ConfigurationError("[model] kind is required")

    synthetic = None
    if model.get("synthetic_n"):
        synthetic = data_mod.SyntheticSpec(
            n=_get(model, "synthetic_n", int, None, "model"),
            d=_get(model, "synthetic_d", int, None, "model"),
            label_noise=_get(model, "synthetic_label_noise", float, 0.0, "model"),
            task=model.get("synthetic_task", "classification").strip(),
            seed=_get(model, "synthetic_seed", int, 0, "model"),
        )
    dataset_path = model.get("dataset", "").strip() or None
    if synthetic is not None and dataset_path is not None:
        raise ConfigurationError("[model] give either dataset or synthetic_*, not both")

    run = cp["run"] if "run" in cp else {}
    x0_policy = (run.get("x0") or "zeros").strip()
    if x0_policy not in ("zeros", "seeded_gaussian"):
        raise ConfigurationError(f"[run] x0: unknown policy {x0_policy!r}")
    max_seconds = _get(run, "max_seconds", float, 0.0, "run")
    stop = StopCriteria(
        grad_tol=_get(run, "grad_tol", float, 1e-6, "run"),
        max_iter=_get(run, "max_iter", int, 1000, "run"),
        max_seconds=max_seconds if max_seconds > 0 else None,
    )
    seeds_raw = (run.get("seeds") or "0").strip()
    try:
        seeds = tuple(int(tok) for tok in seeds_raw.split(","))
    except ValueError:
        raise ConfigurationError(f"[run] seeds: cannot parse {seeds_raw!r}") from None

    optimizers = []
    for section_name in cp.sections():
        if not section_name.startswith("optimizer:"):
            continue
        opt_kind = section_name.split(":", 1)[1].strip()
        if opt_kind not in KINDS:
            raise ConfigurationError(
                f"[{section_name}] unknown optimizer kind {opt_kind!r}")
        section = cp[section_name]
        solver = (section.get("solver") or "krylov").strip()
        if solver not in SOLVERS:
            raise ConfigurationError(
                f"[{section_name}] solver: unknown solver {solver!r}")
        overrides = {}
        for key in section:
            if key in ("label", "solver"):
                continue
            if key not in _HYPER_FIELDS:
                raise ConfigurationError(f"[{section_name}] unknown key {key!r}")
            conv = int if key in _INT_HYPERS else float
            overrides[key] = _get(section, key, conv, None, section_name)
        params = HyperParams(**overrides)
        label = (section.get("label") or opt_kind).strip()
        optimizers.append(OptimizerConfig(kind=opt_kind, label=label,
                                          solver=solver, params=params))
    if not optimizers:
        raise ConfigurationError("config lists no [optimizer:*] sections")
    labels = [o.label for o in optimizers]
    if len(set(labels)) != len(labels):
        raise ConfigurationError("optimizer labels must be unique")

    return RunConfig(
        model_kind=kind,
        dim=_get(model, "dim", int, None, "model"),
        dataset_path=dataset_path,
        label_col=_get(model, "label_col", int, None, "model"),
        synthetic=synthetic,
        chi=_get(model, "chi", float, 0.1, "model"),
        standardize=_get(model, "standardize", _bool, False, "model"),
        subsample_n=_get(model, "subsample_n", int, 0, "model"),
        subsample_seed=_get(model, "subsample_seed", int, 0, "model"),
        x0_policy=x0_policy,
        x0_scale=_get(run, "x0_scale", float, 1.0, "run"),
        x0_seed=_get(run, "x0_seed", int, 0, "run"),
        stop=stop,
        outdir=(run.get("outdir") or "runs/out").strip(),
        seeds=seeds,
        optimizers=tuple(optimizers),
    )


def build_model(cfg: RunConfig, seed_offset: int = 0) -> ObjectiveModel:
    """Materialize the objective for one run.

    ``seed_offset`` shifts the synthetic dataset seed so comparisons can
    vary the problem instance per seed while every optimizer sees the same
    instance at a given seed.
    """
    dataset = None
    if cfg.synthetic is not None:
        spec = dataclasses.replace(cfg.synthetic,
                                   seed=cfg.synthetic.seed + seed_offset)
        dataset = data_mod.gen_synthetic(spec)
    elif cfg.dataset_path is not None:
        path = Path(cfg.dataset_path)
        if path.suffix.lower() == ".csv":
            label_col = cfg.label_col
            if label_col is None:
                with path.open("r", encoding="utf-8") as fh:
                    label_col = len(fh.readline().split(",")) - 1
            dataset = data_mod.load_csv(path, label_col)
        else:
            dataset = data_mod.load_libsvm(path)
    if dataset is not None:
        if cfg.subsample_n > 0:
            dataset = data_mod.subsample(dataset, cfg.subsample_n,
                                         cfg.subsample_seed)
        if cfg.standardize:
            dataset = data_mod.standardize(dataset)
        return make_objective(ModelSpec(kind=cfg.model_kind, dataset=dataset,
                                        chi=cfg.chi))
    return make_objective(ModelSpec(kind=cfg.model_kind, dim=cfg.dim,
                                    chi=cfg.chi))


def initial_point(cfg: RunConfig, dim: int, seed_offset: int = 0) -> np.ndarray:
    if cfg.x0_policy == "zeros":
        return np.zeros(dim)
    rng = np.random.Generator(np.random.Philox(cfg.x0_seed + seed_offset))
    return cfg.x0_scale * rng.standard_normal(dim)
