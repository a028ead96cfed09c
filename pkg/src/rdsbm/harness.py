"""Monte Carlo experiment orchestration.

A flat key-value config describes the true model and the experiment; each
replicate simulates a walk-discovered sample with its own derived seed,
runs the requested estimators on exactly the observations each is allowed
to see (latent-label methods never receive the labels), aligns class
labels to the truth, and the report aggregates per-parameter mean, bias
and mean squared error with failures counted rather than dropped.
"""
from __future__ import annotations

import concurrent.futures
from dataclasses import dataclass, field, replace

import numpy as np

from .debias import debias_algebraic_general, debias_algebraic_q2, debias_by_empirical_cdf
from .errors import EstimationError
from .graphon import SbmParams
from .mle import METHOD_TAGS, Estimate, classical_estimator, mle_complete
from .saem import saem_classical_with_threshold, saem_rds
from .sampler import EmpiricalCdf, complete_graph, count_stats, simulate_walk
from .seeds import derive_seed

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "ReportRow",
    "parse_config",
    "serialize_config",
    "load_config",
    "save_config",
    "align_labels",
    "run_experiment",
    "param_names",
    "histogram_rows",
]

_CONFIG_KEYS = (
    "Q", "alpha", "pi", "n", "replicates", "seed", "methods",
    "saem_iterations", "proposal_std", "dsub_max_k",
)

DEFAULT_METHODS = METHOD_TAGS


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Experiment description: true model plus run settings."""

    q: int
    alpha: np.ndarray
    pi: np.ndarray
    n: int
    replicates: int = 1
    seed: int = 0
    methods: tuple[str, ...] = DEFAULT_METHODS
    saem_iterations: int = 200
    proposal_std: float = 0.05
    dsub_max_k: int = 3

    def __post_init__(self):
        object.__setattr__(self, "alpha", np.asarray(self.alpha, dtype=float))
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=float))
        object.__setattr__(self, "methods", tuple(self.methods))
        if self.replicates < 1:
            raise ValueError("need at least one replicate")
        if self.n < 2:
            raise ValueError("need at least two vertices")
        for m in self.methods:
            if m not in METHOD_TAGS:
                raise ValueError(f"unknown method {m!r}")
        self.params()  # validates alpha/pi

    def params(self) -> SbmParams:
        return SbmParams(self.alpha, self.pi)

    def __eq__(self, other):
        if not isinstance(other, ExperimentConfig):
            return NotImplemented
        return (
            self.q == other.q
            and np.array_equal(self.alpha, other.alpha)
            and np.array_equal(self.pi, other.pi)
            and (self.n, self.replicates, self.seed, self.methods,
                 self.saem_iterations, self.proposal_std, self.dsub_max_k)
            == (other.n, other.replicates, other.seed, other.methods,
                other.saem_iterations, other.proposal_std, other.dsub_max_k)
        )


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key-value config format.

    Keys: ``Q``, ``alpha`` (Q-1 values with the last implied, or Q values
    summing to one), ``pi`` (upper triangle row-major), ``n``,
    ``replicates``, ``seed``, ``methods``, ``saem_iterations``,
    ``proposal_std``, ``dsub_max_k``.  ``#`` starts a comment.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        values[key] = val.strip()

    for required in ("Q", "alpha", "pi", "n"):
        if required not in values:
            raise ValueError(f"missing required config key {required!r}")

    q = int(values["Q"])
    alpha = np.array([float(v) for v in values["alpha"].split(",")])
    if alpha.shape[0] == q - 1:
        alpha = np.append(alpha, 1.0 - alpha.sum())
    elif alpha.shape[0] != q:
        raise ValueError(f"alpha needs {q - 1} or {q} values, got {alpha.shape[0]}")

    tri = [float(v) for v in values["pi"].split(",")]
    need = q * (q + 1) // 2
    if len(tri) != need:
        raise ValueError(f"pi needs {need} upper-triangle values, got {len(tri)}")
    pi = np.zeros((q, q))
    iu = np.triu_indices(q)
    pi[iu] = tri
    pi = pi + np.triu(pi, k=1).T

    kwargs = {}
    if "replicates" in values:
        kwargs["replicates"] = int(values["replicates"])
    if "seed" in values:
        kwargs["seed"] = int(values["seed"])
    if "methods" in values:
        kwargs["methods"] = tuple(m.strip() for m in values["methods"].split(",") if m.strip())
    if "saem_iterations" in values:
        kwargs["saem_iterations"] = int(values["saem_iterations"])
    if "proposal_std" in values:
        kwargs["proposal_std"] = float(values["proposal_std"])
    if "dsub_max_k" in values:
        kwargs["dsub_max_k"] = int(values["dsub_max_k"])
    return ExperimentConfig(q=q, alpha=alpha, pi=pi, n=int(values["n"]), **kwargs)


def serialize_config(config: ExperimentConfig) -> str:
    iu = np.triu_indices(config.q)
    lines = [
        f"Q = {config.q}",
        "alpha = " + ", ".join(repr(float(v)) for v in config.alpha),
        "pi = " + ", ".join(repr(float(v)) for v in config.pi[iu]),
        f"n = {config.n}",
        f"replicates = {config.replicates}",
        f"seed = {config.seed}",
        "methods = " + ", ".join(config.methods),
        f"saem_iterations = {config.saem_iterations}",
        f"proposal_std = {config.proposal_std!r}",
        f"dsub_max_k = {config.dsub_max_k}",
    ]
    return "\n".join(lines) + "\n"


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_config(config))


# ---------------------------------------------------------------------------


def param_names(q: int) -> list[str]:
    names = [f"alpha_{i + 1}" for i in range(q)]
    names += [f"pi_{i + 1}{j + 1}" for i in range(q) for j in range(i, q)]
    return names


def _param_vector(alpha: np.ndarray, pi: np.ndarray) -> np.ndarray:
    iu = np.triu_indices(len(alpha))
    return np.concatenate([alpha, pi[iu]])


def align_labels(estimate: Estimate, truth: SbmParams) -> Estimate:
    """Resolve label switching against the truth.

    Applies the class permutation minimizing the summed squared distance
    of weights and upper-triangle connection entries; exhaustive over the
    Q! permutations (fine for the handful of classes used here).
    """
    import itertools

    if estimate.q != truth.q:
        raise ValueError("estimate and truth have different class counts")
    iu = np.triu_indices(truth.q)
    best = None
    best_cost = np.inf
    for perm in itertools.permutations(range(truth.q)):
        perm = list(perm)
        a = estimate.alpha[perm]
        p = estimate.pi[np.ix_(perm, perm)]
        cost = float(np.sum((a - truth.alpha) ** 2) + np.sum((p[iu] - truth.pi[iu]) ** 2))
        if cost < best_cost - 1e-15:
            best_cost = cost
            best = (a, p)
    return replace(estimate, alpha=best[0], pi=best[1])


def _method_rng(config: ExperimentConfig, replicate: int, method: str) -> np.random.Generator:
    return np.random.default_rng(
        derive_seed(config.seed, replicate, 100 + METHOD_TAGS.index(method))
    )


def run_method(method: str, sample, stats, cdf: EmpiricalCdf,
               config: ExperimentConfig, rng: np.random.Generator) -> Estimate:
    """Run one estimator on its allowed observation set."""
    if method == "mle-complete":
        return mle_complete(stats)
    if method == "classical":
        return classical_estimator(stats)
    if method == "saem-rds":
        return saem_rds(sample.y, config.q, config.saem_iterations, rng)
    if method == "debias-complete":
        cls = classical_estimator(stats)
        alpha = debias_by_empirical_cdf(cls.alpha, cdf)
        return Estimate(alpha=alpha, pi=cls.pi, method="debias-complete",
                        diagnostics=dict(cls.diagnostics))
    if method == "debias-saem":
        step1 = saem_classical_with_threshold(
            sample.x, sample.y, config.saem_iterations, config.proposal_std, rng
        )
        alpha = debias_by_empirical_cdf(step1.alpha, cdf)
        return Estimate(alpha=alpha, pi=step1.pi, method="debias-saem",
                        diagnostics=dict(step1.diagnostics))
    if method == "debias-algebraic":
        cls = classical_estimator(stats)
        if config.q == 2:
            a1 = debias_algebraic_q2(float(cls.alpha[0]), cls.pi)
            alpha = np.array([a1, 1.0 - a1])
            info = dict(cls.diagnostics)
        else:
            alpha, extra = debias_algebraic_general(cls.alpha, cls.pi, full_output=True)
            info = dict(cls.diagnostics, **extra)
        return Estimate(alpha=alpha, pi=cls.pi, method="debias-algebraic", diagnostics=info)
    raise ValueError(f"unknown method {method!r}")


def _run_replicate(config: ExperimentConfig, replicate: int):
    """Simulate one sample and run every requested method on it."""
    params = config.params()
    rng_sim = np.random.default_rng(derive_seed(config.seed, replicate))
    x, z = simulate_walk(params, config.n, rng_sim)
    sample = complete_graph(params, x, z, rng_sim)
    stats = count_stats(sample)
    cdf = EmpiricalCdf(x)
    out: dict[str, np.ndarray] = {}
    errors: dict[str, str] = {}
    for method in config.methods:
        try:
            est = run_method(method, sample, stats, cdf, config,
                             _method_rng(config, replicate, method))
            est = align_labels(est, params)
            out[method] = _param_vector(est.alpha, est.pi)
        except (EstimationError, ValueError) as exc:
            errors[method] = f"{type(exc).__name__}: {exc}"
    return replicate, out, errors


@dataclass(frozen=True)
class ReportRow:
    method: str
    param: str
    mean: float
    bias: float
    mse: float
    failures: int


@dataclass
class ExperimentReport:
    """Aggregated Monte Carlo results plus replicate-level records."""

    rows: list[ReportRow]
    records: list[tuple[int, str, str, float]] = field(default_factory=list)
    failure_log: list[tuple[int, str, str]] = field(default_factory=list)
    replicates: int = 0

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("method,param,mean,bias,mse,failures\n")
            for row in self.rows:
                fh.write(
                    f"{row.method},{row.param},{row.mean:.8g},"
                    f"{row.bias:.8g},{row.mse:.8g},{row.failures}\n"
                )

    def records_to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("replicate,method,param,value\n")
            for rep, method, param, value in self.records:
                fh.write(f"{rep},{method},{param},{value:.8g}\n")

    def mse(self, method: str, param: str) -> float:
        for row in self.rows:
            if row.method == method and row.param == param:
                return row.mse
        raise KeyError(f"no row for ({method}, {param})")


def histogram_rows(report: ExperimentReport, bins: int = 30):
    """Histogram bin data of the replicate-level estimates."""
    out = []
    pairs = sorted({(m, p) for _, m, p, _ in report.records})
    by_pair: dict[tuple[str, str], list[float]] = {pair: [] for pair in pairs}
    for _, method, param, value in report.records:
        by_pair[(method, param)].append(value)
    for (method, param) in pairs:
        counts, edges = np.histogram(by_pair[(method, param)], bins=bins)
        for i, count in enumerate(counts):
            out.append((method, param, float(edges[i]), float(edges[i + 1]), int(count)))
    return out


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Run the full replicated experiment described by ``config``.

    Deterministic given the config: every replicate derives its own seed
    from the master seed, and aggregation merges results in replicate
    order regardless of scheduling.
    """
    results = {}
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            for rep, out, errors in pool.map(
                _run_replicate, [config] * config.replicates, range(config.replicates)
            ):
                results[rep] = (out, errors)
    else:
        for rep in range(config.replicates):
            _, out, errors = _run_replicate(config, rep)
            results[rep] = (out, errors)

    truth = _param_vector(config.alpha, config.pi)
    names = param_names(config.q)
    records = []
    failure_log = []
    rows = []
    for method in config.methods:
        values = []
        failures = 0
        for rep in range(config.replicates):
            out, errors = results[rep]
            if method in out:
                values.append(out[method])
                for name, value in zip(names, out[method]):
                    records.append((rep, method, name, float(value)))
            else:
                failures += 1
                failure_log.append((rep, method, errors.get(method, "unknown")))
        if values:
            mat = np.vstack(values)
            mean = mat.mean(axis=0)
            bias = mean - truth
            mse = ((mat - truth[None, :]) ** 2).mean(axis=0)
        else:
            mean = bias = mse = np.full(len(names), np.nan)
        for i, name in enumerate(names):
            rows.append(ReportRow(method, name, float(mean[i]), float(bias[i]),
                                  float(mse[i]), failures))
    return ExperimentReport(rows=rows, records=records, failure_log=failure_log,
                            replicates=config.replicates)
