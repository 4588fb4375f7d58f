"""Binary datasets: parameterised networks, forward sampling, designs, and separation checks.

A fitted network is a DAG plus one logistic regression per node: an intercept
and one coefficient per parent, all on the logit scale.  Sampling walks a
topological order and draws each column given its parents.

The separation diagnostics classify a node's design/response pair as ``none``,
``quasi_complete`` or ``complete`` in the sense of Albert and Anderson: does
some direction in coefficient space separate successes from failures strictly
(complete), or only weakly but not trivially (quasi-complete)?  Separated
likelihoods have no finite maximum, which is exactly the regime where the
choice of prior starts to matter.
"""

from __future__ import annotations

import csv
import enum
import io
import json
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit

from .graph import MAX_NODES, Dag, _bits, _edge_pairs, topological_order

_LP_TOL = 1e-7


@dataclass(frozen=True)
class AbnParams:
    """A DAG with logit-scale parameters: per-node intercepts and per-edge coefficients.

    ``edge_coef`` maps (parent, child) pairs to slopes and must cover exactly
    the edges of ``dag``.
    """

    dag: Dag
    intercepts: tuple[float, ...]
    edge_coef: Mapping[tuple[int, int], float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "intercepts", tuple(float(v) for v in self.intercepts))
        coef = {(int(p), int(c)): float(v) for (p, c), v in self.edge_coef.items()}
        object.__setattr__(self, "edge_coef", coef)
        if len(self.intercepts) != self.dag.n:
            raise ValueError("need one intercept per node")
        if set(coef) != set(self.dag.edges()):
            raise ValueError("edge coefficients must cover exactly the edges of the DAG")
        values = list(self.intercepts) + list(coef.values())
        if not all(np.isfinite(values)):
            raise ValueError("parameters must be finite")

    @classmethod
    def uniform(cls, dag: Dag, edge_coef: float = 5.0, intercept: float = 0.0) -> "AbnParams":
        """One shared slope on every edge and one shared intercept everywhere."""
        return cls(dag, (float(intercept),) * dag.n, {e: float(edge_coef) for e in dag.edges()})

    @classmethod
    def balanced(cls, dag: Dag, edge_coef: float = 5.0) -> "AbnParams":
        """One shared slope, with each node's intercept centering its logit.

        The intercept of a node with k parents is -k * edge_coef / 2, so a
        node whose parents are half on sits at probability 1/2.  Without the
        centering, nodes deep in a dense network saturate toward 1 and the
        rare parent configurations needed to identify their edges never show
        up in a finite sample.
        """
        coef = float(edge_coef)
        intercepts = tuple(-coef * mask.bit_count() / 2.0 for mask in dag.parents)
        return cls(dag, intercepts, {e: coef for e in dag.edges()})

    @property
    def n(self) -> int:
        return self.dag.n

    def to_json(self) -> str:
        obj = {
            "n": self.dag.n,
            "edges": [
                {"from": p, "to": c, "coef": self.edge_coef[(p, c)]} for p, c in self.dag.edges()
            ],
            "intercepts": list(self.intercepts),
        }
        return json.dumps(obj, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "AbnParams":
        obj = json.loads(text)
        n = int(obj["n"])
        edges = obj.get("edges", [])
        dag = Dag.from_edges(n, _edge_pairs(edges))
        coef = {}
        for item in edges:
            if not isinstance(item, dict) or "coef" not in item:
                raise ValueError("parameter files need edges as objects with from/to/coef")
            coef[(int(item["from"]), int(item["to"]))] = float(item["coef"])
        intercepts = obj.get("intercepts", [0.0] * n)
        return cls(dag, tuple(float(v) for v in intercepts), coef)


class Dataset:
    """An n_obs by n_vars matrix of 0/1 values with columns named X1..Xn."""

    def __init__(self, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.uint8)
        if values.ndim != 2:
            raise ValueError("dataset values must be a 2-d array")
        if values.size and not np.isin(values, (0, 1)).all():
            raise ValueError("dataset values must be 0 or 1")
        if values.shape[1] > MAX_NODES:
            raise ValueError(f"at most {MAX_NODES} variables supported")
        values.flags.writeable = False
        self.values = values

    @property
    def n_obs(self) -> int:
        return self.values.shape[0]

    @property
    def n_vars(self) -> int:
        return self.values.shape[1]

    def row_patterns(self) -> np.ndarray:
        """Each row packed into one integer, bit k = column k."""
        weights = (1 << np.arange(self.n_vars, dtype=np.int64)).astype(np.int64)
        return self.values.astype(np.int64) @ weights

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([f"X{k + 1}" for k in range(self.n_vars)])
        for row in self.values:
            writer.writerow([int(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Dataset":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ValueError("empty dataset file")
        header = rows[0]
        expected = [f"X{k + 1}" for k in range(len(header))]
        if header != expected:
            raise ValueError(f"dataset header must be {expected[:3]}..., got {header[:3]}")
        body = [r for r in rows[1:] if r]
        if any(len(r) != len(header) for r in body):
            raise ValueError("ragged dataset rows")
        values = np.array([[int(v) for v in r] for r in body], dtype=np.uint8)
        if values.size == 0:
            values = values.reshape(0, len(header))
        return cls(values)


def sample(params: AbnParams, n_obs: int, rng: np.random.Generator) -> Dataset:
    """Forward-sample ``n_obs`` rows from the network.

    Columns are generated in topological order, each from a logistic model in
    its already-sampled parents, consuming one uniform per (row, node).
    """
    if n_obs < 0:
        raise ValueError("n_obs must be nonnegative")
    n = params.n
    values = np.zeros((n_obs, n), dtype=np.uint8)
    for node in topological_order(params.dag):
        eta = np.full(n_obs, params.intercepts[node])
        for parent in params.dag.parent_list(node):
            eta = eta + params.edge_coef[(parent, node)] * values[:, parent]
        values[:, node] = rng.random(n_obs) < expit(eta)
    return Dataset(values)


def design_rows(data: Dataset, node: int, parent_mask: int) -> tuple[np.ndarray, np.ndarray]:
    """Design matrix (intercept column, then parents ascending) and response for one node."""
    if not 0 <= node < data.n_vars:
        raise ValueError(f"node {node} out of range")
    if (parent_mask >> node) & 1:
        raise ValueError(f"node {node} cannot be its own parent")
    if parent_mask & ~((1 << data.n_vars) - 1):
        raise ValueError("parent mask references variables beyond the dataset")
    parents = _bits(parent_mask)
    X = np.empty((data.n_obs, 1 + len(parents)))
    X[:, 0] = 1.0
    for i, p in enumerate(parents):
        X[:, 1 + i] = data.values[:, p]
    y = data.values[:, node].astype(float)
    return X, y


class SeparationStatus(enum.Enum):
    NONE = "none"
    QUASI_COMPLETE = "quasi_complete"
    COMPLETE = "complete"


def aggregate_design(X: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Collapse duplicate design rows to (unique rows, successes, trials).

    The Bernoulli likelihood only sees counts per distinct predictor pattern,
    so everything downstream (fits, scores, separation) may work on the
    collapsed system.  ``np.unique`` sorts, which also makes the result
    independent of row order.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError("X must be 2-d with one response per row")
    if X.shape[0] == 0:
        return X.copy(), np.zeros(0), np.zeros(0)
    uniq, inverse = np.unique(X, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    trials = np.bincount(inverse, minlength=len(uniq)).astype(float)
    successes = np.bincount(inverse, weights=y, minlength=len(uniq))
    return uniq, successes, trials


def detect_separation(data: Dataset, node: int, parent_mask: int) -> SeparationStatus:
    """Classify the separation status of one node's logistic design."""
    X, y = design_rows(data, node, parent_mask)
    return separation_of_design(X, y)


def separation_of_design(X: np.ndarray, y: np.ndarray) -> SeparationStatus:
    """Albert-Anderson classification of an arbitrary design/response pair."""
    uniq, successes, trials = aggregate_design(X, y)
    return separation_of_patterns(uniq, successes, trials)


def separation_of_patterns(
    patterns: np.ndarray, successes: np.ndarray, trials: np.ndarray
) -> SeparationStatus:
    """Separation status from an aggregated design.

    Works on the signed rows u = s * x (s = +1 for an observed success, -1
    for an observed failure): complete separation means some b satisfies
    u'b > 0 for every row, quasi-complete means some b != 0 satisfies
    u'b >= 0 for every row.  A pattern with both outcomes contributes +x and
    -x, forcing x'b = 0, which rules complete separation out immediately and
    confines weak separators to the null space of the mixed patterns; the
    remaining questions are settled by small HiGHS linear programs (see
    :func:`_strict_margin` and :func:`_weak_slack`) and SVD rank checks.

    A one-sided response (all successes or all failures, including the empty
    design) is complete by convention: any direction through the intercept
    separates it.
    """
    if len(trials) == 0:
        return SeparationStatus.COMPLETE
    pos = successes > 0
    neg = successes < trials
    if not pos.any() or not neg.any():
        return SeparationStatus.COMPLETE
    d = patterns.shape[1]
    mixed = pos & neg

    if not mixed.any():
        signed = np.vstack([patterns[pos], -patterns[neg]])
        if _strict_margin(signed) > _LP_TOL:
            return SeparationStatus.COMPLETE
        if _weak_slack(signed) > _LP_TOL:
            return SeparationStatus.QUASI_COMPLETE
        if np.linalg.matrix_rank(patterns) < d:
            return SeparationStatus.QUASI_COMPLETE
        return SeparationStatus.NONE

    # A mixed pattern pins x'b = 0, so only weak separation remains possible,
    # and only inside the null space of the mixed patterns.
    null_basis = _null_space(patterns[mixed])
    if null_basis.shape[1] == 0:
        return SeparationStatus.NONE
    pure = ~mixed
    if not pure.any():
        return SeparationStatus.QUASI_COMPLETE  # any null direction separates weakly
    sign = np.where(successes[pure] > 0, 1.0, -1.0)
    projected = (patterns[pure] * sign[:, None]) @ null_basis
    if _weak_slack(projected) > _LP_TOL:
        return SeparationStatus.QUASI_COMPLETE
    # all-equality separators are flat directions of the full design
    if np.linalg.matrix_rank(patterns) < d:
        return SeparationStatus.QUASI_COMPLETE
    return SeparationStatus.NONE


def _null_space(rows: np.ndarray) -> np.ndarray:
    """Orthonormal basis of the null space of ``rows`` (columns of the result)."""
    m, d = rows.shape
    _, sv, vt = np.linalg.svd(rows)
    tol = (sv.max() * max(m, d) * np.finfo(float).eps) if len(sv) and sv.max() > 0 else 0.0
    rank = int((sv > tol).sum())
    return vt[rank:].T


def _strict_margin(signed: np.ndarray) -> float:
    """Optimum of: max t  s.t.  U b >= t, -1 <= b <= 1, t <= 1.  Positive iff strictly separable."""
    signed = np.unique(signed, axis=0)
    n_rows, d = signed.shape
    res = linprog(
        c=[0.0] * d + [-1.0],
        A_ub=np.hstack([-signed, np.ones((n_rows, 1))]),
        b_ub=np.zeros(n_rows),
        bounds=[(-1.0, 1.0)] * d + [(None, 1.0)],
        method="highs",
    )
    if res.status != 0:  # pragma: no cover - HiGHS handles these tiny LPs
        raise RuntimeError(f"separation LP failed: {res.message}")
    return -res.fun


def _weak_slack(signed: np.ndarray) -> float:
    """Optimum of: max 1'U b  s.t.  U b >= 0, -1 <= b <= 1.  Positive iff weakly separable with slack."""
    signed = np.unique(signed, axis=0)
    if signed.shape[1] == 0:
        return 0.0
    res = linprog(
        c=-signed.sum(axis=0),
        A_ub=-signed,
        b_ub=np.zeros(signed.shape[0]),
        bounds=[(-1.0, 1.0)] * signed.shape[1],
        method="highs",
    )
    if res.status != 0:  # pragma: no cover
        raise RuntimeError(f"separation LP failed: {res.message}")
    return -res.fun


def separation_screen(
    X: np.ndarray, y: np.ndarray, coef_bound: float = 10.0, max_iter: int = 25
) -> bool:
    """Cheap necessary-condition screen: does an unpenalised fit run away?

    Runs a few damped Newton steps on the plain logistic likelihood and
    reports whether the coefficient norm escapes ``coef_bound``.  Separated
    designs always escape eventually; near-separated ones may too, so this is
    a screen, not the classifier - use :func:`separation_of_design` for the
    exact answer.
    """
    uniq, successes, trials = aggregate_design(X, y)
    if len(trials) == 0:
        return False
    beta = np.zeros(uniq.shape[1])
    for _ in range(max_iter):
        p = expit(uniq @ beta)
        w = trials * p * (1.0 - p)
        grad = uniq.T @ (successes - trials * p)
        hess = (uniq * w[:, None]).T @ uniq
        hess[np.diag_indices_from(hess)] += 1e-10
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            return True
        limit = np.abs(step).max()
        if limit > 5.0:
            step *= 5.0 / limit
        beta = beta + step
        if np.abs(beta).max() > coef_bound:
            return True
        if limit < 1e-10:
            return False
    return bool(np.abs(beta).max() > coef_bound)
