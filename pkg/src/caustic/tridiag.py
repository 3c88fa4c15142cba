"""
Tridiagonal matrix algorithm (Thomas elimination).
"""

import numpy as np

__all__ = ["trisolve", "trimatvec"]


def trisolve(lower, diag, upper, rhs):
    """Solve ``A x = rhs`` for tridiagonal ``A``.

    Parameters
    ----------
    lower : array (n-1,)
        Sub-diagonal, ``A[i+1, i]``.
    diag : array (n,)
        Main diagonal.
    upper : array (n-1,)
        Super-diagonal, ``A[i, i+1]``.
    rhs : array (n,)

    Raises
    ------
    ZeroDivisionError
        On a vanishing pivot (no pivoting is attempted).
    """
    a = np.asarray(lower, dtype=float)
    b = np.asarray(diag, dtype=float)
    c = np.asarray(upper, dtype=float)
    d = np.asarray(rhs, dtype=float)
    n = b.size
    if a.size != n - 1 or c.size != n - 1 or d.size != n:
        raise ValueError("inconsistent tridiagonal dimensions")
    cp = np.empty(max(n - 1, 0))
    dp = np.empty(n)
    piv = b[0]
    if piv == 0:
        raise ZeroDivisionError("zero pivot in tridiagonal solve")
    if n > 1:
        cp[0] = c[0] / piv
    dp[0] = d[0] / piv
    for i in range(1, n):
        piv = b[i] - a[i - 1] * cp[i - 1]
        if piv == 0:
            raise ZeroDivisionError("zero pivot in tridiagonal solve")
        if i < n - 1:
            cp[i] = c[i] / piv
        dp[i] = (d[i] - a[i - 1] * dp[i - 1]) / piv
    x = dp
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return x


def trimatvec(lower, diag, upper, x):
    """``A x`` for tridiagonal ``A`` in the same band layout as :func:`trisolve`."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(diag, dtype=float) * x
    if x.size > 1:
        y[:-1] += np.asarray(upper) * x[1:]
        y[1:] += np.asarray(lower) * x[:-1]
    return y
