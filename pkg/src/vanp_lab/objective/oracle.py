"""Loop-based reference for the joint-embedding loss.

Everything here is written with explicit Python loops over floats on
purpose: no numpy, no torch, no code shared with the production path in
``vicreg.py``. Tests compare the two implementations on random inputs.
"""

import math


def _as_rows(z):
    """Coerce a matrix-like (nested lists, numpy, torch) to list-of-lists of float."""
    if hasattr(z, "tolist"):
        z = z.tolist()
    return [[float(v) for v in row] for row in z]


def oracle_vicreg(z1, z2, coeffs):
    """Weighted invariance/variance/covariance loss, computed the slow way.

    Args:
        z1, z2: n x d matrices (any nested-sequence or array type).
        coeffs: object with mu1, mu2, mu3, gamma, eps and per_dim_invariance
            attributes (``VicregCoefficients`` works).

    Returns:
        float: the scalar loss.
    """
    a = _as_rows(z1)
    b = _as_rows(z2)
    if len(a) != len(b) or len(a[0]) != len(b[0]):
        raise ValueError(
            f"shape mismatch: {len(a)}x{len(a[0])} vs {len(b)}x{len(b[0])}"
        )
    n = len(a)
    d = len(a[0])
    if n < 2:
        raise ValueError("variance/covariance terms need a batch of at least 2 rows")

    s = _oracle_invariance(a, b, coeffs.per_dim_invariance)
    v = _oracle_variance(a, coeffs.gamma, coeffs.eps) + _oracle_variance(
        b, coeffs.gamma, coeffs.eps
    )
    c = _oracle_covariance(a) + _oracle_covariance(b)
    return coeffs.mu1 * s + coeffs.mu2 * v + coeffs.mu3 * c


def _oracle_invariance(a, b, per_dim):
    n = len(a)
    d = len(a[0])
    total = 0.0
    for i in range(n):
        for j in range(d):
            diff = a[i][j] - b[i][j]
            total += diff * diff
    total /= n
    if per_dim:
        total /= d
    return total


def _oracle_variance(a, gamma, eps):
    n = len(a)
    d = len(a[0])
    acc = 0.0
    for j in range(d):
        mean = 0.0
        for i in range(n):
            mean += a[i][j]
        mean /= n
        var = 0.0
        for i in range(n):
            dev = a[i][j] - mean
            var += dev * dev
        var /= n - 1
        hinge = gamma - math.sqrt(var + eps)
        if hinge > 0.0:
            acc += hinge
    return acc / d


def _oracle_covariance(a):
    n = len(a)
    d = len(a[0])
    means = []
    for j in range(d):
        m = 0.0
        for i in range(n):
            m += a[i][j]
        means.append(m / n)
    acc = 0.0
    for j in range(d):
        for k in range(j + 1, d):  # symmetric matrix: count each pair twice
            cov = 0.0
            for i in range(n):
                cov += (a[i][j] - means[j]) * (a[i][k] - means[k])
            cov /= n - 1
            acc += 2.0 * cov * cov
    return acc / d
