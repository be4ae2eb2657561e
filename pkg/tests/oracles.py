"""Independent reference computations shared by several test modules."""
import numpy as np
from scipy.optimize import linprog


def minimal_envelope_lp(f: np.ndarray) -> np.ndarray:
    """Smallest nondecreasing l >= max(-f, 0), found by linear programming.

    The feasible set is closed under pointwise minima, so minimising the sum
    returns its least element.  LP values are snapped to the data candidates
    {0} U {-f_j} to allow an exact comparison.
    """
    n = f.size
    # -l_k + l_{k-1} <= 0
    A = np.zeros((n - 1, n))
    for k in range(1, n):
        A[k - 1, k], A[k - 1, k - 1] = -1.0, 1.0
    bounds = [(max(0.0, -v), None) for v in f]
    res = linprog(np.ones(n), A_ub=A if n > 1 else None, b_ub=np.zeros(n - 1) if n > 1 else None,
                  bounds=bounds, method="highs")
    assert res.status == 0
    cand = np.concatenate(([0.0], -f))
    snapped = []
    for v in res.x:
        j = np.argmin(np.abs(cand - v))
        assert abs(cand[j] - v) < 1e-9
        snapped.append(cand[j])
    return np.array(snapped)
