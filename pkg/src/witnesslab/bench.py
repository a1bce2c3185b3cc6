"""Synthetic two-sample problems and a Monte-Carlo harness for power and
Type-I error.

Sample sizes are per-sample sizes before the train/test split. Every trial
draws its own seed from the master seed through a splitmix64 expansion, so a
report is reproducible bit for bit regardless of the worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ._seeding import child_seed, derive_seeds, make_rng
from .baselines import KernelSpec, f_test_outcome, mmd_permutation_test
from .core import Sample
from .inference import LEARNER_METHODS, PipelineConfig, run_test

GENERATOR_KINDS = ("blob_null", "blob_alt", "gauss_var_shift", "mean_shift", "noise_shift", "knockout_shift")
NOISE_PRESETS = {"small": 0.1, "medium": 1.0, "large": 10.0}
KNOCKOUT_PRESETS = {"small": 0.1, "medium": 0.5, "large": 1.0}
METHODS = tuple(LEARNER_METHODS) + ("mmd", "f_test")

_DEFAULTS = {
    "blob_null": {"spacing": 5.0, "rho": 0.5},
    "blob_alt": {"spacing": 5.0, "rho": 0.5},
    # standard deviations 1.0 and 1.5
    "gauss_var_shift": {"var_p": 1.0, "var_q": 2.25},
    "mean_shift": {"mu": 1.0},
    "noise_shift": {"sigma": "medium", "delta": 0.5},
    "knockout_shift": {"delta": "medium", "separation": 2.0},
}
_DEFAULT_DIM = {"blob_null": 2, "blob_alt": 2, "gauss_var_shift": 1, "mean_shift": 2,
                "noise_shift": 5, "knockout_shift": 2}


@dataclass(frozen=True)
class GeneratorSpec:
    """A synthetic two-sample problem.

    ``params`` override the per-kind defaults. Presets: ``noise_shift.sigma``
    accepts ``small``/``medium``/``large`` (0.1, 1, 10) and
    ``knockout_shift.delta`` the same names (0.1, 0.5, 1.0).
    """

    kind: str
    params: dict = field(default_factory=dict)
    dim: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in GENERATOR_KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {GENERATOR_KINDS}")
        unknown = set(self.params) - set(_DEFAULTS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        merged = dict(_DEFAULTS[self.kind], **self.params)
        if merged.get("sigma") in NOISE_PRESETS:
            merged["sigma"] = NOISE_PRESETS[merged["sigma"]]
        if self.kind == "knockout_shift" and merged["delta"] in KNOCKOUT_PRESETS:
            merged["delta"] = KNOCKOUT_PRESETS[merged["delta"]]
        for key, value in merged.items():
            if isinstance(value, str):
                raise ValueError(f"invalid value {value!r} for parameter {key}")
            merged[key] = float(value)
        self._validate(merged)
        object.__setattr__(self, "params", merged)
        dim = self.dim or _DEFAULT_DIM[self.kind]
        if self.kind.startswith("blob") and dim != 2:
            raise ValueError("blob generators are 2-dimensional")
        if self.kind == "gauss_var_shift" and dim != 1:
            raise ValueError("gauss_var_shift is 1-dimensional")
        if dim < 1:
            raise ValueError("dim must be >= 1")
        object.__setattr__(self, "dim", int(dim))

    def _validate(self, p):
        if "rho" in p and not abs(p["rho"]) < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if "spacing" in p and not p["spacing"] > 0:
            raise ValueError("spacing must be positive")
        for key in ("var_p", "var_q"):
            if key in p and not p[key] > 0:
                raise ValueError(f"{key} must be positive")
        if "sigma" in p and not p["sigma"] >= 0:
            raise ValueError("sigma must be non-negative")
        if "delta" in p and not 0.0 <= p["delta"] <= 1.0:
            raise ValueError("delta must lie in [0, 1]")
        if "separation" in p and not p["separation"] >= 0:
            raise ValueError("separation must be non-negative")

    @property
    def is_null(self):
        """True when P and Q are the same distribution."""
        p = self.params
        return {
            "blob_null": True,
            "blob_alt": p.get("rho") == 0.0,
            "gauss_var_shift": p.get("var_p") == p.get("var_q"),
            "mean_shift": p.get("mu") == 0.0,
            "noise_shift": p.get("sigma") == 0.0 or p.get("delta") == 0.0,
            "knockout_shift": p.get("delta") == 0.0 or p.get("separation") == 0.0,
        }[self.kind]

    def with_seed(self, seed):
        return replace(self, seed=int(seed))


def _blob(rng, size, spacing, rho, alternating):
    modes = rng.integers(0, 9, size=size)
    gi, gj = modes // 3, modes % 3
    centers = np.column_stack([gi, gj]) * spacing
    z = rng.standard_normal((size, 2))
    if alternating:
        r = rho * np.where((gi + gj) % 2 == 0, 1.0, -1.0)
    else:
        r = np.zeros(size)
    # Cholesky factor of [[1, r], [r, 1]]
    x1 = z[:, 0]
    x2 = r * z[:, 0] + np.sqrt(1.0 - r ** 2) * z[:, 1]
    return centers + np.column_stack([x1, x2])


def _knockout_base(rng, size, dim, separation):
    comp = rng.integers(0, 2, size=size)
    rows = rng.standard_normal((size, dim))
    rows[:, 0] += np.where(comp == 0, -separation / 2, separation / 2)
    return rows, comp


def generate(spec, n, m):
    """Draw ``(S_P, S_Q)`` with ``n`` and ``m`` rows from ``spec``."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    rng = make_rng(spec.seed)
    p, d = spec.params, spec.dim
    kind = spec.kind
    if kind in ("blob_null", "blob_alt"):
        xs = _blob(rng, n, p["spacing"], p["rho"], alternating=False)
        ys = _blob(rng, m, p["spacing"], p["rho"], alternating=(kind == "blob_alt"))
    elif kind == "gauss_var_shift":
        xs = rng.normal(0.0, math.sqrt(p["var_p"]), size=(n, 1))
        ys = rng.normal(0.0, math.sqrt(p["var_q"]), size=(m, 1))
    elif kind == "mean_shift":
        xs = rng.standard_normal((n, d))
        ys = rng.standard_normal((m, d))
        ys[:, 0] += p["mu"]
    elif kind == "noise_shift":
        xs = rng.standard_normal((n, d))
        ys = rng.standard_normal((m, d))
        hit = rng.permutation(m)[: int(round(p["delta"] * m))]
        ys[hit] += p["sigma"] * rng.standard_normal((len(hit), d))
    else:  # knockout_shift
        xs, _ = _knockout_base(rng, n, d, p["separation"])
        ys, comp = _knockout_base(rng, m, d, p["separation"])
        zeros = np.flatnonzero(comp == 0)
        drop = rng.permutation(zeros)[: int(round(p["delta"] * len(zeros)))]
        # replace knocked-out rows by fresh component-1 draws
        fresh = rng.standard_normal((len(drop), d))
        fresh[:, 0] += p["separation"] / 2
        ys[drop] = fresh
    return Sample(xs), Sample(ys)


@dataclass(frozen=True)
class MethodConfig:
    """Which test to run in the harness and with what settings.

    ``method`` is a witness method (``auto``, ``ridge``, ``gbt``, ``knn``,
    ``xent``, ``bin``) or a baseline (``mmd``, ``f_test``).
    """

    method: str = "auto"
    alpha: float = 0.05
    permutations: int = 999
    pvalue: str = "permutation"
    time_limit: float = 60.0
    ratio: float = 0.5

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        self.pipeline(0)  # validates the shared fields

    def pipeline(self, seed):
        method = self.method if self.method in LEARNER_METHODS else "auto"
        return PipelineConfig(ratio=self.ratio, alpha=self.alpha, permutations=self.permutations,
                              pvalue=self.pvalue, method=method, time_limit=self.time_limit, seed=seed)


def run_method(sp, sq, method_cfg, seed):
    if method_cfg.method == "mmd":
        return mmd_permutation_test(sp, sq, KernelSpec(), B=method_cfg.permutations, seed=seed,
                                    alpha=method_cfg.alpha)
    if method_cfg.method == "f_test":
        return f_test_outcome(sp, sq, alpha=method_cfg.alpha, seed=seed)
    return run_test(sp, sq, method_cfg.pipeline(seed))


@dataclass(frozen=True)
class PowerReport:
    trials: int
    rejections: int
    power: float
    std_err: float
    p_values: list
    seeds: list
    config: dict

    @property
    def rejects(self):
        alpha = self.config["alpha"]
        return [p <= alpha for p in self.p_values]

    def to_dict(self):
        return asdict(self)

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["seed", "p_value", "reject"])
        for s, p, r in zip(self.seeds, self.p_values, self.rejects):
            writer.writerow([s, repr(p), int(r)])
        return buf.getvalue()


def _trial(args):
    gen, method_cfg, n, trial_seed = args
    sp, sq = generate(gen.with_seed(child_seed(trial_seed, 0)), n, n)
    return run_method(sp, sq, method_cfg, child_seed(trial_seed, 1)).p_value


def _report(p_values, seeds, alpha, config):
    trials = len(p_values)
    rejections = sum(p <= alpha for p in p_values)
    power = rejections / trials
    return PowerReport(trials=trials, rejections=rejections, power=power,
                       std_err=math.sqrt(power * (1.0 - power) / trials),
                       p_values=list(p_values), seeds=list(seeds), config=config)


def estimate_power(gen, test, n, trials, seed=0, workers=1):
    """Rejection rate of ``test`` over ``trials`` fresh draws of size ``n`` per sample."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seeds = derive_seeds(seed, trials)
    jobs = [(gen, test, n, s) for s in seeds]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            p_values = list(pool.map(_trial, jobs, chunksize=max(1, trials // (4 * workers))))
    else:
        p_values = [_trial(job) for job in jobs]
    config = {"generator": gen.kind, "params": dict(gen.params), "dim": gen.dim, "n": n,
              "seed": seed, **asdict(test)}
    return _report(p_values, seeds, test.alpha, config)


def estimate_type1(gen, test, n, trials, seed=0, workers=1):
    """Like :func:`estimate_power`, restricted to generators with P = Q."""
    if not gen.is_null:
        raise ValueError(f"generator {gen.kind} with {gen.params} is not a null pair")
    return estimate_power(gen, test, n, trials, seed=seed, workers=workers)
