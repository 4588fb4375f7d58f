"""Per-node scores: penalised logistic fits and Laplace-approximate log marginal likelihoods.

Each candidate parent set of each node gets a Bayesian logistic regression
(intercept plus one slope per parent) under one of three prior families:

* ``GaussianPrior`` - independent normals, the weakly-informative default
  being mean 0 and variance 1000 per coefficient;
* ``StudentTPrior`` - independent t distributions, by default Cauchy with
  scale 2.5 on slopes and 10 on the intercept;
* ``StrongGaussianPrior`` - normals centred on the generating parameters with
  small variance, for studies where the truth is known.

Fitting maximises the exact log posterior by iteratively reweighted least
squares with the prior folded in as pseudo-observations.  For the t family
each sweep first performs an EM step: conditional on the current coefficient,
the t prior is replaced by its conditional Gaussian with working variance
``(df * scale^2 + (coef - loc)^2) / (df + 1)``, which at convergence is a
fixed point.  Steps that would decrease the log posterior are halved.

The node score is the Laplace approximation at the mode

    log p(y | b) + log p(b) + d/2 log(2 pi) - 1/2 log det H

with H the negative Hessian of the log posterior.  Duplicate design rows are
aggregated into (pattern, successes, trials) counts first; the posterior is
unchanged and binary designs collapse to at most 2^parents patterns.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterator, Union

import numpy as np
from scipy.special import expit, gammaln

from .data import (
    AbnParams,
    Dataset,
    SeparationStatus,
    aggregate_design,
    separation_of_patterns,
)
from .graph import _bits

LOG_2PI = math.log(2.0 * math.pi)


class FitError(RuntimeError):
    """Base class for node-fit failures."""


class SingularSystemError(FitError):
    """The weighted least-squares system became singular."""


class HessianNotPositiveDefinite(FitError):
    """The negative Hessian at the mode admits no Cholesky factor."""


@dataclass(frozen=True, eq=False)
class GaussianPrior:
    """Independent normal priors; ``mean`` and ``variance`` broadcast per coefficient.

    An infinite variance marks a coefficient as unpenalised: it contributes
    nothing to the log prior or its curvature, giving a flat-prior fit.
    """

    mean: float | np.ndarray = 0.0
    variance: float | np.ndarray = 1000.0

    def resolve(self, n_coef: int) -> tuple[np.ndarray, np.ndarray]:
        mean = np.broadcast_to(np.asarray(self.mean, dtype=float), (n_coef,)).copy()
        variance = np.broadcast_to(np.asarray(self.variance, dtype=float), (n_coef,)).copy()
        if not np.isfinite(mean).all():
            raise ValueError("prior means must be finite")
        if not (variance > 0).all():
            raise ValueError("prior variances must be positive")
        return mean, variance


def weakly_informative(variance: float = 1000.0) -> GaussianPrior:
    """The zero-mean large-variance Gaussian prior used as the diffuse default."""
    return GaussianPrior(mean=0.0, variance=variance)


@dataclass(frozen=True)
class StudentTPrior:
    """Independent Student t priors, Cauchy by default.

    Slopes get ``scale``; the intercept (column 0 of every design) gets
    ``intercept_scale``, which has no consensus default and is therefore kept
    explicit and reported wherever the prior is described.
    """

    df: float = 1.0
    scale: float = 2.5
    intercept_scale: float = 10.0
    location: float = 0.0

    def __post_init__(self) -> None:
        if not (self.df > 0 and self.scale > 0 and self.intercept_scale > 0):
            raise ValueError("df and scales must be positive")

    def resolve(self, n_coef: int) -> tuple[np.ndarray, np.ndarray]:
        loc = np.full(n_coef, float(self.location))
        scales = np.full(n_coef, float(self.scale))
        scales[0] = float(self.intercept_scale)
        return loc, scales

    def describe(self) -> str:
        return (
            f"student_t df={self.df:g} scale={self.scale:g} "
            f"intercept_scale={self.intercept_scale:g}"
        )


@dataclass(frozen=True)
class StrongGaussianPrior:
    """Normals centred on the known generating parameters.

    Coefficients the truth actually pins down (each node's intercept and the
    slope of every real parent) get a tight normal around the true value.
    Candidate parents the truth does not contain carry no informed value, so
    they keep a diffuse zero-mean normal: an edge absent from the truth has
    to earn its place from the data exactly as it would under the weakly
    informative prior, instead of being subsidised by a narrow prior whose
    small Occam penalty lets noise promote spurious parents.
    """

    truth: AbnParams
    variance: float = 0.1
    absent_variance: float = 1000.0

    def __post_init__(self) -> None:
        if not (self.variance > 0 and self.absent_variance > 0):
            raise ValueError("prior variances must be positive")

    def for_node(self, node: int, parent_mask: int) -> GaussianPrior:
        """The concrete per-coefficient prior for one candidate parent set."""
        truth = self.truth
        if not 0 <= node < truth.n:
            raise ValueError(f"node {node} out of range")
        mean = [truth.intercepts[node]]
        var = [self.variance]
        for parent in _bits(parent_mask):
            coef = truth.edge_coef.get((parent, node))
            if coef is None:
                mean.append(0.0)
                var.append(self.absent_variance)
            else:
                mean.append(coef)
                var.append(self.variance)
        return GaussianPrior(mean=np.array(mean), variance=np.array(var))


Prior = Union[GaussianPrior, StudentTPrior]


def describe_prior(prior: Prior | StrongGaussianPrior) -> str:
    if isinstance(prior, StudentTPrior):
        return prior.describe()
    if isinstance(prior, StrongGaussianPrior):
        return (
            f"gaussian_informed variance={prior.variance:g} "
            f"absent_variance={prior.absent_variance:g}"
        )
    mean = np.asarray(prior.mean, dtype=float)
    variance = np.asarray(prior.variance, dtype=float)
    if mean.ndim == 0 and variance.ndim == 0:
        return f"gaussian mean={float(mean):g} variance={float(variance):g}"
    return "gaussian (per-coefficient)"


def _gaussian_log_prior(coef: np.ndarray, mean: np.ndarray, variance: np.ndarray) -> float:
    finite = np.isfinite(variance)
    if not finite.any():
        return 0.0
    v = variance[finite]
    u = coef[finite] - mean[finite]
    return float(-0.5 * np.sum(np.log(2.0 * np.pi * v) + u * u / v))


def _student_log_prior(coef: np.ndarray, loc: np.ndarray, scale: np.ndarray, df: float) -> float:
    u = (coef - loc) / scale
    per = (
        gammaln((df + 1.0) / 2.0)
        - gammaln(df / 2.0)
        - 0.5 * math.log(df * math.pi)
        - np.log(scale)
        - (df + 1.0) / 2.0 * np.log1p(u * u / df)
    )
    return float(np.sum(per))


def _gaussian_curvature(variance: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        out = 1.0 / variance
    return np.where(np.isfinite(variance), out, 0.0)


def _student_curvature(coef: np.ndarray, loc: np.ndarray, scale: np.ndarray, df: float) -> np.ndarray:
    u = coef - loc
    a = df * scale * scale
    return (df + 1.0) * (a - u * u) / (a + u * u) ** 2


def _binomial_loglik(patterns: np.ndarray, successes: np.ndarray, trials: np.ndarray, coef: np.ndarray) -> float:
    if len(trials) == 0:
        return 0.0
    eta = patterns @ coef
    log_p = -np.logaddexp(0.0, -eta)
    log_q = -np.logaddexp(0.0, eta)
    return float(successes @ log_p + (trials - successes) @ log_q)


@dataclass
class NodeFit:
    """One penalised logistic fit: mode, curvature, score, and diagnostics."""

    coef: np.ndarray
    neg_hessian: np.ndarray
    log_posterior: float
    log_marginal: float
    converged: bool
    iterations: int
    separation: SeparationStatus
    n_obs: int


def fit_node(
    X: np.ndarray,
    y: np.ndarray,
    prior: Prior,
    *,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> NodeFit:
    """Fit one node's logistic regression by posterior-mode IRLS.

    ``X`` must carry the intercept as its first column; ``y`` is 0/1.
    Convergence means the largest coefficient change of a sweep fell below
    ``tol``.  A fit that exhausts ``max_iter`` comes back with
    ``converged=False`` and the best iterate found; a singular weighted
    system raises :class:`SingularSystemError`.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be 2-d with one response per row")
    if X.shape[0] and not np.all(X[:, 0] == 1.0):
        raise ValueError("first design column must be the intercept")
    if len(y) and not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("outcomes must be 0 or 1")
    patterns, successes, trials = aggregate_design(X, y)
    separation = separation_of_patterns(patterns, successes, trials)
    return _fit_aggregated(
        patterns, successes, trials, prior, tol=tol, max_iter=max_iter, separation=separation
    )


def _fit_aggregated(
    patterns: np.ndarray,
    successes: np.ndarray,
    trials: np.ndarray,
    prior: Prior,
    *,
    tol: float = 1e-8,
    max_iter: int = 200,
    separation: SeparationStatus,
) -> NodeFit:
    n_coef = patterns.shape[1]
    n_obs = int(round(trials.sum())) if len(trials) else 0
    student = isinstance(prior, StudentTPrior)
    if student:
        loc, scales = prior.resolve(n_coef)
        df = float(prior.df)
        mean = loc
    else:
        mean, variance = prior.resolve(n_coef)

    def log_prior(coef: np.ndarray) -> float:
        if student:
            return _student_log_prior(coef, loc, scales, df)
        return _gaussian_log_prior(coef, mean, variance)

    def log_post(coef: np.ndarray) -> float:
        return _binomial_loglik(patterns, successes, trials, coef) + log_prior(coef)

    beta = mean.copy()
    current = log_post(beta)
    converged = False
    iterations = 0
    diag = np.arange(n_coef)

    for sweep in range(1, max_iter + 1):
        iterations = sweep
        if student:
            u = beta - loc
            working_var = (df * scales * scales + u * u) / (df + 1.0)
        else:
            working_var = variance
        inv_var = _gaussian_curvature(working_var)

        eta = patterns @ beta
        p = expit(eta)
        w = trials * p * (1.0 - p)
        grad = patterns.T @ (successes - trials * p) - (beta - mean) * inv_var
        hess = (patterns * w[:, None]).T @ patterns
        hess[diag, diag] += inv_var
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                f"weighted system singular at sweep {sweep} (flat prior on a separated design?)"
            ) from exc

        candidate = beta + step
        value = log_post(candidate)
        halvings = 0
        while value < current - 1e-12 and halvings < 30:
            step = step / 2.0
            candidate = beta + step
            value = log_post(candidate)
            halvings += 1
        delta = float(np.abs(candidate - beta).max()) if n_coef else 0.0
        beta = candidate
        current = value
        if delta < tol:
            converged = True
            break

    p = expit(patterns @ beta)
    w = trials * p * (1.0 - p)
    neg_hessian = (patterns * w[:, None]).T @ patterns
    if student:
        curv = _student_curvature(beta, loc, scales, df)
    else:
        curv = _gaussian_curvature(variance)
    neg_hessian[diag, diag] += curv

    if n_obs == 0:
        log_marginal = 0.0
    else:
        try:
            log_marginal = _laplace_value(current, neg_hessian)
        except HessianNotPositiveDefinite:
            log_marginal = float("nan")

    return NodeFit(
        coef=beta,
        neg_hessian=neg_hessian,
        log_posterior=current,
        log_marginal=log_marginal,
        converged=converged,
        iterations=iterations,
        separation=separation,
        n_obs=n_obs,
    )


def _laplace_value(log_posterior_at_mode: float, neg_hessian: np.ndarray) -> float:
    n_coef = neg_hessian.shape[0]
    try:
        chol = np.linalg.cholesky(neg_hessian)
    except np.linalg.LinAlgError as exc:
        raise HessianNotPositiveDefinite("negative Hessian is not positive definite") from exc
    log_det = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return log_posterior_at_mode + 0.5 * n_coef * LOG_2PI - 0.5 * log_det


def log_marginal_likelihood(fit: NodeFit, X: np.ndarray, y: np.ndarray, prior: Prior) -> float:
    """Laplace log marginal likelihood of the data under the fitted mode.

    With no observations the marginal likelihood of the empty product is 1,
    so the result is exactly 0 for every prior.  Raises
    :class:`HessianNotPositiveDefinite` when the stored curvature admits no
    Cholesky factor.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(y) == 0:
        return 0.0
    patterns, successes, trials = aggregate_design(X, y)
    n_coef = len(fit.coef)
    if isinstance(prior, StudentTPrior):
        loc, scales = prior.resolve(n_coef)
        log_prior = _student_log_prior(fit.coef, loc, scales, float(prior.df))
    else:
        mean, variance = prior.resolve(n_coef)
        log_prior = _gaussian_log_prior(fit.coef, mean, variance)
    log_post = _binomial_loglik(patterns, successes, trials, fit.coef) + log_prior
    return _laplace_value(log_post, fit.neg_hessian)


@dataclass(frozen=True)
class CacheEntry:
    log_score: float
    converged: bool
    separation: SeparationStatus


@dataclass
class ScoreCache:
    """Log scores for every (node, parent mask) pair up to a parent-count cap."""

    n_vars: int
    max_parents: int
    entries: dict[tuple[int, int], CacheEntry]
    diagnostics: list[tuple[int, int, str]] = field(default_factory=list)
    prior_label: str = ""

    def score(self, node: int, parent_mask: int) -> float:
        return self.entries[(node, parent_mask)].log_score

    def total_entries(self) -> int:
        return len(self.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# n_vars: {self.n_vars}\n")
        buf.write(f"# max_parents: {self.max_parents}\n")
        if self.prior_label:
            buf.write(f"# prior: {self.prior_label}\n")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["node", "parent_mask", "log_score", "converged", "separation"])
        for (node, mask) in sorted(self.entries):
            entry = self.entries[(node, mask)]
            writer.writerow(
                [
                    node,
                    mask,
                    repr(entry.log_score),
                    "true" if entry.converged else "false",
                    entry.separation.value,
                ]
            )
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ScoreCache":
        n_vars = None
        max_parents = None
        prior_label = ""
        data_lines = []
        for line in text.splitlines():
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("n_vars:"):
                    n_vars = int(body.split(":", 1)[1])
                elif body.startswith("max_parents:"):
                    max_parents = int(body.split(":", 1)[1])
                elif body.startswith("prior:"):
                    prior_label = body.split(":", 1)[1].strip()
            elif line.strip():
                data_lines.append(line)
        if not data_lines:
            raise ValueError("empty score cache file")
        rows = list(csv.reader(io.StringIO("\n".join(data_lines))))
        header = rows[0]
        if header[:3] != ["node", "parent_mask", "log_score"]:
            raise ValueError(f"unexpected cache header: {header}")
        entries: dict[tuple[int, int], CacheEntry] = {}
        for row in rows[1:]:
            node, mask = int(row[0]), int(row[1])
            entries[(node, mask)] = CacheEntry(
                log_score=float(row[2]),
                converged=row[3] == "true",
                separation=SeparationStatus(row[4]),
            )
        if n_vars is None:
            n_vars = max(node for node, _ in entries) + 1
        if max_parents is None:
            max_parents = max((mask.bit_count() for _, mask in entries), default=0)
        return cls(
            n_vars=n_vars,
            max_parents=max_parents,
            entries=entries,
            prior_label=prior_label,
        )


def parent_masks(n_vars: int, node: int, max_parents: int) -> Iterator[int]:
    """All candidate parent masks for ``node``, ascending."""
    for mask in range(1 << n_vars):
        if (mask >> node) & 1:
            continue
        if mask.bit_count() > max_parents:
            continue
        yield mask


def build_score_cache(
    data: Dataset,
    prior: Prior | StrongGaussianPrior,
    max_parents: int | None = None,
    *,
    tol: float = 1e-8,
    max_iter: int = 200,
) -> ScoreCache:
    """Score every candidate parent set of every node.

    Scores are Laplace log marginal likelihoods; a fit that fails (singular
    system, no convergence, or a curvature with no Cholesky factor) enters the
    cache as -inf with a diagnostic, so downstream search simply never picks
    it.  Entries are computed in ascending (node, mask) order, which together
    with row-order-free aggregation makes the cache a pure function of the
    data multiset.
    """
    n = data.n_vars
    if n < 1:
        raise ValueError("dataset needs at least one variable")
    if max_parents is None:
        max_parents = n - 1
    if not 0 <= max_parents <= n - 1:
        raise ValueError(f"max_parents must lie in 0..{n - 1}")
    if isinstance(prior, StrongGaussianPrior) and prior.truth.n != n:
        raise ValueError("informed prior truth has a different variable count")

    codes = data.row_patterns()
    columns = data.values.astype(float)
    entries: dict[tuple[int, int], CacheEntry] = {}
    diagnostics: list[tuple[int, int, str]] = []

    for node in range(n):
        y = columns[:, node]
        for mask in parent_masks(n, node, max_parents):
            parents = _bits(mask)
            sub = codes & mask
            uniq_codes, inverse = np.unique(sub, return_inverse=True)
            inverse = inverse.reshape(-1)
            trials = np.bincount(inverse, minlength=len(uniq_codes)).astype(float)
            successes = np.bincount(inverse, weights=y, minlength=len(uniq_codes))
            patterns = np.empty((len(uniq_codes), 1 + len(parents)))
            patterns[:, 0] = 1.0
            for i, parent in enumerate(parents):
                patterns[:, 1 + i] = (uniq_codes >> parent) & 1

            node_prior = prior.for_node(node, mask) if isinstance(prior, StrongGaussianPrior) else prior
            sep = separation_of_patterns(patterns, successes, trials)
            try:
                fit = _fit_aggregated(
                    patterns,
                    successes,
                    trials,
                    node_prior,
                    tol=tol,
                    max_iter=max_iter,
                    separation=sep,
                )
            except FitError as exc:
                entries[(node, mask)] = CacheEntry(float("-inf"), False, sep)
                diagnostics.append((node, mask, str(exc)))
                continue
            score = fit.log_marginal
            if not fit.converged:
                entries[(node, mask)] = CacheEntry(float("-inf"), False, sep)
                diagnostics.append((node, mask, f"no convergence in {max_iter} sweeps"))
            elif not np.isfinite(score):
                entries[(node, mask)] = CacheEntry(float("-inf"), True, sep)
                diagnostics.append((node, mask, "non-finite log score"))
            else:
                entries[(node, mask)] = CacheEntry(float(score), True, sep)

    return ScoreCache(
        n_vars=n,
        max_parents=max_parents,
        entries=entries,
        diagnostics=diagnostics,
        prior_label=describe_prior(prior),
    )


def prior_from_name(
    name: str,
    *,
    truth: AbnParams | None = None,
    wi_variance: float = 1000.0,
    st_df: float = 1.0,
    st_scale: float = 2.5,
    st_intercept_scale: float = 10.0,
    si_variance: float = 0.1,
    si_absent_variance: float = 1000.0,
) -> Prior | StrongGaussianPrior:
    """Build a prior from its short study name: ``wi``, ``st`` or ``si``."""
    key = name.strip().lower()
    if key == "wi":
        return weakly_informative(wi_variance)
    if key == "st":
        return StudentTPrior(df=st_df, scale=st_scale, intercept_scale=st_intercept_scale)
    if key == "si":
        if truth is None:
            raise ValueError("the informed prior needs the generating parameters")
        return StrongGaussianPrior(
            truth=truth, variance=si_variance, absent_variance=si_absent_variance
        )
    raise ValueError(f"unknown prior name: {name!r} (expected wi, st or si)")
