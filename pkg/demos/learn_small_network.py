"""
Recover a known four-node network from simulated data.

Walks the whole pipeline in memory: draw a truth network, forward-sample a
dataset, score every (node, parent set) pair under a prior, run the exact
search, and compare the estimated essential graph against the truth.  The
same steps are available as CLI subcommands (see demos/cli_pipeline.py).
"""

import numpy as np

from abn_forge import (
    AbnParams,
    Dag,
    build_score_cache,
    compare,
    exact_search,
    prior_from_name,
    sample,
    to_cpdag,
)


def describe(cpdag):
    directed = ", ".join(f"{a}->{b}" for a, b in sorted(cpdag.directed)) or "(none)"
    undirected = ", ".join(f"{a}-{b}" for a, b in sorted(cpdag.undirected)) or "(none)"
    return f"directed: {directed}; undirected: {undirected}"


def main():
    rng = np.random.default_rng(8)

    # a collider into node 2 plus a downstream effect on node 3
    truth_dag = Dag.from_edges(4, [(0, 2), (1, 2), (2, 3)])
    params = AbnParams.balanced(truth_dag, edge_coef=5.0)
    truth_cp = to_cpdag(truth_dag)
    print("truth:", describe(truth_cp))

    dataset = sample(params, n_obs=2000, rng=rng)
    print(f"sampled {dataset.n_obs} observations of {dataset.n_vars} variables")

    for prior_name in ("wi", "st", "si"):
        prior = prior_from_name(prior_name, truth=params)
        cache = build_score_cache(dataset, prior)
        result = exact_search(cache)
        estimate_cp = to_cpdag(result.dag)
        metrics = compare(estimate_cp, truth_cp)
        print(f"\nprior {prior_name}:")
        print("  estimate:", describe(estimate_cp))
        print(f"  total log score {result.total_score:.2f};"
              f" tpr={metrics.tpr:.2f} fpr={metrics.fpr:.2f}")

    print("\nAt this sample size all three priors land on the truth's")
    print("equivalence class; they come apart at small N (separation) and")
    print("in the density sweep (complexity bias), see the study demos.")


if __name__ == "__main__":
    main()
