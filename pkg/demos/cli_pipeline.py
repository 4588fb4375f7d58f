"""
The command-line pipeline end to end, in a temporary directory.

Each stage writes a file the next stage reads: parameters -> dataset ->
score cache -> estimated DAG -> evaluation, then a tiny study with its
summary table and SVG plot.  Run it after installing the package; it
invokes the `abn-forge` console script the way a shell user would.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from abn_forge import AbnParams, Dag


def run(*argv):
    print("$ abn-forge " + " ".join(str(a) for a in argv))
    proc = subprocess.run(
        [sys.executable, "-m", "abn_forge.cli", *map(str, argv)],
        capture_output=True,
        text=True,
    )
    sys.stdout.write(proc.stdout)
    sys.stderr.write(proc.stderr)
    if proc.returncode != 0:
        raise SystemExit(f"stage failed with exit code {proc.returncode}")


def main():
    with tempfile.TemporaryDirectory(prefix="abn_forge_demo_") as tmp:
        work = Path(tmp)
        params_path = work / "truth.json"
        dag = Dag.from_edges(3, [(0, 1), (1, 2)])
        params_path.write_text(AbnParams.balanced(dag, edge_coef=5.0).to_json())
        print(f"truth written to {params_path.name}: edges {dag.edges()}")

        run("simulate", "--params", params_path, "--n-obs", 2000, "--seed", 7,
            "--out", work / "data.csv")
        run("score", "--data", work / "data.csv", "--prior", "st",
            "--out", work / "cache.csv")
        run("search", "--cache", work / "cache.csv", "--out", work / "estimate.json")
        run("evaluate", "--truth", params_path, "--estimate", work / "estimate.json")

        config = dict(
            study="separation",
            n_nodes=3,
            densities=[0.8],
            sample_sizes=[100, 500],
            replicates=4,
            priors=["wi", "st"],
            master_seed=3,
        )
        (work / "config.json").write_text(json.dumps(config, indent=2))
        run("study", "--config", work / "config.json", "--out", work / "results.csv")
        run("summarize", "--in", work / "results.csv", "--out", work / "summary.csv",
            "--svg", work / "plots.svg")

        svg_bytes = (work / "plots.svg").stat().st_size
        print(f"\nall artifacts round-tripped; summary plot is {svg_bytes} bytes of SVG")


if __name__ == "__main__":
    main()
