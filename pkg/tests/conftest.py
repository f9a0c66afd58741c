import numpy as np
import pytest

from blockstab import LagSpec, MultiSeries, RegressionData, build_design
from blockstab.core import ENDOGENOUS, EXOGENOUS, PredictorDescriptor


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def gaussian_regression(n, p, seed, n_signal=0, signal=1.0, noise=1.0, standardized_cols=False):
    """Plain random-design RegressionData for solver tests."""
    g = np.random.default_rng(seed)
    Z = g.standard_normal((n, p))
    if standardized_cols:
        Z = (Z - Z.mean(axis=0)) / Z.std(axis=0)
    beta = np.zeros(p)
    if n_signal:
        beta[:n_signal] = signal
    Y = Z @ beta + noise * g.standard_normal(n)
    return regression_from_arrays(Z, Y)


def regression_from_arrays(Z, Y):
    Z = np.asarray(Z, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    n, p = Z.shape
    return RegressionData(
        Y=Y,
        Z=Z,
        descriptors=tuple(PredictorDescriptor(EXOGENOUS, j, 0) for j in range(p)),
        response_times=np.arange(2, n + 2, dtype=np.int64),
        column_means=np.zeros(p),
        column_scales=np.ones(p),
    )


def orthonormal_regression(n, rhos, seed=0):
    """Design with Z'Z/n = I and Z_k'Y/n equal to the given correlations."""
    g = np.random.default_rng(seed)
    p = len(rhos)
    q, _ = np.linalg.qr(g.standard_normal((n, n)))
    Z = q[:, :p] * np.sqrt(n)
    Y = Z @ (np.asarray(rhos, dtype=np.float64) / 1.0)
    # Z'Y/n = rhos exactly by orthonormality
    return regression_from_arrays(Z, Y)


def ar_multiseries(T, coeffs=(0.5,), seed=0, m=0):
    g = np.random.default_rng(seed)
    from blockstab import simulate_ar

    y = simulate_ar(coeffs, T, 1.0, g)
    exo = g.standard_normal((T, m)) if m else None
    names = ("y",) + tuple(f"x{j}" for j in range(m))
    return MultiSeries(y, exo, names)


def write_series_csv(path, T=320, seed=0, n_true=3, n_decoy=3, n_noise=1, beta_sd=0.6):
    """Dump one simulated dataset in the CLI's CSV format."""
    import csv

    from blockstab import ArxConfig, simulate_arx

    cfg = ArxConfig(T=T, n_true=n_true, n_decoy_ar=n_decoy, n_noise=n_noise, beta_sd=beta_sd)
    series, truth = simulate_arx(cfg, np.random.default_rng(seed))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t",) + series.names)
        for t in range(series.T):
            w.writerow(
                [t]
                + [repr(float(v)) for v in series.endogenous[t]]
                + [repr(float(v)) for v in series.exogenous[t]]
            )
    return series, truth
