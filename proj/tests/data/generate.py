"""Regenerates the synthetic CSV fixtures used by the test suite."""
import numpy as np

rng = np.random.default_rng(20180601)

# toy.csv: 4 observations of 2 variables.
with open("toy.csv", "w") as f:
    f.write("x1,x2\n")
    for row in [(0.5, 1.0), (1.5, -0.5), (-1.0, 2.0), (2.5, 0.25)]:
        f.write("%g,%g\n" % row)

# classes.csv: 3 Gaussian classes, p = 20, 130 samples each, shared AR(1) covariance.
p, per_class = 20, 130
idx = np.arange(p)
sigma = 0.6 ** np.abs(idx[:, None] - idx[None, :])
chol = np.linalg.cholesky(sigma)
means = [np.zeros(p), np.r_[np.full(5, 0.9), np.zeros(p - 5)], np.r_[np.zeros(10), np.full(10, -0.7)]]
with open("classes.csv", "w") as f:
    f.write(",".join("f%d" % (j + 1) for j in range(p)) + ",label\n")
    for k, mu in enumerate(means):
        x = rng.standard_normal((per_class, p)) @ chol.T + mu
        for row in x:
            f.write(",".join("%.6f" % v for v in row) + ",%d\n" % (k + 1))

# returns.csv: 300 days of Student-t(5) returns for 12 assets with a one-factor covariance.
T, n_assets = 300, 12
beta = rng.uniform(0.5, 1.5, n_assets)
cov = 1e-4 * (np.outer(beta, beta) + np.diag(rng.uniform(0.5, 2.0, n_assets)))
lc = np.linalg.cholesky(cov)
nu = 5.0
z = rng.standard_normal((T, n_assets)) @ lc.T
w = rng.chisquare(nu, T)
r = z * np.sqrt((nu - 2.0) / w)[:, None]
with open("returns.csv", "w") as f:
    f.write("date," + ",".join("A%02d" % (j + 1) for j in range(n_assets)) + "\n")
    for t in range(T):
        f.write("d%03d," % (t + 1) + ",".join("%.8f" % v for v in r[t]) + "\n")
