"""Monte-Carlo comparison of ALPA against the baselines on synthetic instances.

Per noise level and trial the observation is drawn from a fixed base spec with
AWGN of the given sigma. Methods:

``alpa``    blind, filter initialized from a linear predictor of y;
``reg_ls``  regularized LS with the same linear-prediction filter (the naive
            blind estimate ALPA starts from);
``lasso``   non-blind l1 deconvolution with the true filter and
            delta = 3 sigma ||h|| (or delta matched to ALPA's residual).

Trial seeds come from (seed, sigma index, trial), so results do not depend on
how trials are scheduled across workers.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .alpa import AlpaConfig, lp_filter, run_alpa
from .baselines import LassoConfig, lasso_irls, lasso_matched_residual, reg_ls, sdmm_delta_rule
from .costs import PenaltyParams
from .errors import InvalidArgument
from .metrics import aligned_error, mse_db, sparsity_ratio
from .synth import AwgnSigma, SynthSpec, make_instance, sec4_spec

METHODS = ("alpa", "reg_ls", "lasso")
METRIC_COLUMNS = ("e_mse_db", "e_mae_db", "h_mse_db", "h_mae_db", "y_mse_db", "sparsity",
                  "residual", "support_hits")


def default_alpa_config(filter_len):
    return AlpaConfig(filter_len=filter_len, penalty=PenaltyParams(p=0.1, delta=1.0, epsilon=1e-6),
                      h_init="lp")


@dataclass(frozen=True)
class BenchConfig:
    sigmas: tuple = (0.01, 0.02, 0.03)
    trials: int = 500
    seed: int = 0
    methods: tuple = METHODS
    spec: SynthSpec = field(default_factory=sec4_spec)
    alpa: AlpaConfig | None = None
    reg_ls_delta: float = 1.0
    lasso_delta: str = "rule"  # "rule" or "matched"
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "sigmas", tuple(float(s) for s in self.sigmas))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.trials < 1:
            raise InvalidArgument("trials must be >= 1")
        if any(s < 0 for s in self.sigmas):
            raise InvalidArgument("noise levels must be >= 0")
        bad = set(self.methods) - set(METHODS)
        if bad:
            raise InvalidArgument(f"unknown methods {sorted(bad)}; choose from {METHODS}")
        if self.lasso_delta not in ("rule", "matched"):
            raise InvalidArgument("lasso_delta must be 'rule' or 'matched'")
        if self.lasso_delta == "matched" and "alpa" not in self.methods:
            raise InvalidArgument("matched LASSO delta needs the alpa method")
        if self.alpa is None:
            object.__setattr__(self, "alpa", default_alpa_config(self.spec.filter.length))
        if self.alpa.filter_len != self.spec.filter.length:
            raise InvalidArgument("ALPA filter length differs from the instance filter length")

    def to_dict(self):
        d = asdict(self)
        d["spec"] = self.spec.to_dict()
        d["alpa"] = self.alpa.to_dict()
        d["sigmas"] = list(self.sigmas)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "spec" in d:
            d["spec"] = SynthSpec.from_dict(d["spec"])
        if d.get("alpa") is not None:
            d["alpa"] = AlpaConfig.from_dict(d["alpa"])
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidArgument(f"bad bench scenario: {exc}") from exc


def trial_seed(seed, level, trial):
    return int(np.random.SeedSequence([int(seed), int(level), int(trial)]).generate_state(1)[0])


def _score(inst, h, e):
    k = int(np.count_nonzero(inst.e_true))
    ae = aligned_error(inst.e_true, e, align_scale=True, support_k=k, support_tol=1)
    ah = aligned_error(inst.h_true, h, align_scale=True)
    y_hat = np.convolve(h, e)
    return {
        "e_mse_db": ae.mse_db,
        "e_mae_db": ae.mae_db,
        "h_mse_db": ah.mse_db,
        "h_mae_db": ah.mae_db,
        "y_mse_db": mse_db(inst.y_clean, y_hat),
        "sparsity": sparsity_ratio(e) if np.any(e) else float("nan"),
        "residual": float(np.linalg.norm(inst.y - y_hat)),
        "support_hits": ae.support_hits,
    }


def run_trial(cfg, level, trial):
    """Score every method on one noisy draw. Returns (rows, timings)."""
    sigma = cfg.sigmas[level]
    inst = make_instance(cfg.spec.with_noise(AwgnSigma(sigma, trial_seed(cfg.seed, level, trial))))
    rows, timings = [], []
    base = {"sigma": sigma, "trial": trial}
    alpa_residual = None

    for method in cfg.methods:
        t0 = time.perf_counter()
        if method == "alpa":
            res = run_alpa(inst.y, cfg.alpa)
            h, e = res.h, res.e
            extra = {"iterations": res.iterations, "delta": cfg.alpa.penalty.delta}
        elif method == "reg_ls":
            h = lp_filter(inst.y, cfg.alpa.lp_order, cfg.alpa.filter_len)
            e = reg_ls(inst.y, h, cfg.reg_ls_delta)
            extra = {"iterations": 0, "delta": cfg.reg_ls_delta}
        else:
            h = inst.h_true
            if cfg.lasso_delta == "matched" and alpa_residual is not None:
                rule = max(sdmm_delta_rule(h, sigma), 1e-4)
                e, d = lasso_matched_residual(inst.y, h, alpa_residual, lo=rule, hi=10 * rule)
            else:
                d = max(sdmm_delta_rule(h, sigma), 1e-6)
                e = lasso_irls(inst.y, h, LassoConfig(d))
            extra = {"iterations": 0, "delta": d}
        elapsed = time.perf_counter() - t0
        scores = _score(inst, h, e)
        if method == "alpa":
            alpa_residual = scores["residual"]
        rows.append({**base, "method": method, **scores, **extra})
        timings.append({**base, "method": method, "seconds": elapsed})
    return rows, timings


def _run_one(args):
    return run_trial(*args)


def run_bench(cfg):
    """Return (trial rows, timing rows) ordered by (sigma, trial, method)."""
    jobs = [(cfg, level, t) for level in range(len(cfg.sigmas)) for t in range(cfg.trials)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_one, jobs, chunksize=4))
    else:
        results = [_run_one(j) for j in jobs]
    rows = [r for res in results for r in res[0]]
    timings = [t for res in results for t in res[1]]
    return rows, timings


def summarize(rows, timings=None):
    """Mean of each metric per (sigma, method), in first-seen order."""
    groups = {}
    for r in rows:
        groups.setdefault((r["sigma"], r["method"]), []).append(r)
    secs = {}
    for t in timings or ():
        secs.setdefault((t["sigma"], t["method"]), []).append(t["seconds"])
    out = []
    for (sigma, method), rs in groups.items():
        row = {"sigma": sigma, "method": method, "trials": len(rs)}
        for col in METRIC_COLUMNS:
            row[col] = float(np.nanmean([r[col] for r in rs]))
        if timings is not None:
            row["seconds"] = float(np.mean(secs[(sigma, method)]))
        out.append(row)
    return out


def format_table(summary):
    cols = ["sigma", "method", "trials", "e_mse_db", "e_mae_db", "h_mse_db", "y_mse_db", "sparsity"]
    if summary and "seconds" in summary[0]:
        cols.append("seconds")
    lines = ["  ".join(f"{c:>10}" for c in cols)]
    for row in summary:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(f"{v:>10.4g}" if isinstance(v, float) else f"{v!s:>10}")
        lines.append("  ".join(cells))
    return "\n".join(lines)
