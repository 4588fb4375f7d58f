"""
What data separation does to a logistic fit, and how the priors differ.

A small dataset where one predictor perfectly splits the outcome classes
makes the unpenalized likelihood monotone: the slope estimate escapes to
infinity.  The weakly informative Gaussian prior pulls the mode back to a
large but finite value, and the heavy-tailed Student t shrinks it much
harder while leaving well-identified coefficients nearly untouched.
"""

import numpy as np

from abn_forge import (
    GaussianPrior,
    StudentTPrior,
    fit_node,
    separation_of_design,
)


def fit_and_report(name, X, y, prior):
    fit = fit_node(X, y, prior)
    coefs = ", ".join(f"{c:+.3f}" for c in fit.coef)
    print(f"  {name:<28} coef = [{coefs}]  log marginal = {fit.log_marginal:+.3f}")
    return fit


def main():
    rng = np.random.default_rng(20)

    # forty observations, and the outcome simply copies the predictor
    x = rng.integers(0, 2, 40).astype(float)
    y = x.copy()
    X = np.column_stack([np.ones(40), x])

    status = separation_of_design(X, y)
    print(f"detected separation: {status.value}")
    print("fits on the separated data:")
    fit_and_report("Gaussian, variance 1000", X, y, GaussianPrior(mean=0.0, variance=1000.0))
    fit_and_report("Student t, df 1, scale 2.5", X, y, StudentTPrior(df=1.0, scale=2.5))

    # same design, but now with 10% label noise the classes overlap
    noisy = y.copy()
    flip = rng.random(40) < 0.10
    noisy[flip] = 1.0 - noisy[flip]
    print(f"\nafter flipping {int(flip.sum())} labels: "
          f"{separation_of_design(X, noisy).value}")
    print("fits on the overlapping data:")
    fit_and_report("Gaussian, variance 1000", X, noisy, GaussianPrior(mean=0.0, variance=1000.0))
    fit_and_report("Student t, df 1, scale 2.5", X, noisy, StudentTPrior(df=1.0, scale=2.5))

    print("\nUnder separation the flat prior chases the likelihood into the")
    print("tens while the t prior stays near the scale of its slope prior;")
    print("once the classes overlap the two agree closely.")


if __name__ == "__main__":
    main()
