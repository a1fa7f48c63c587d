"""Dense complex linear algebra helpers and the two special functions.

Vectors and matrices are plain numpy arrays. ``as_hermitian`` is the
validation gate used wherever a Hermitian input is required.
"""

import math

import numpy as np

EULER_GAMMA = 0.57721566490153286061
LOG2E = 1.0 / math.log(2.0)

HERMITIAN_TOL = 1e-12
EI_SWITCH = 6.0


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class NumericError(ArithmeticError):
    """A numerical routine could not produce a trustworthy result."""


class DomainError(ValueError):
    """Argument outside the implemented domain of a special function."""


def as_vector(x, name="x"):
    v = np.asarray(x, dtype=complex).reshape(-1)
    if v.size < 1:
        raise ValidationError(f"{name} must have length >= 1")
    if not np.all(np.isfinite(v)):
        raise ValidationError(f"{name} has non-finite entries")
    return v


def as_hermitian(A, tol=HERMITIAN_TOL):
    """Return ``A`` as a complex square array, checking Hermitian symmetry.

    The asymmetry ``max |A - A^H|`` is compared against ``tol`` scaled by
    ``max(1, max|A|)`` so that tiny-valued channel matrices are not held to a
    looser standard than unit-scale ones.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValidationError("matrix has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(A))))
    asym = float(np.max(np.abs(A - A.conj().T)))
    if asym > tol * scale:
        raise ValidationError(f"matrix is not Hermitian (max asymmetry {asym:.3e})")
    return 0.5 * (A + A.conj().T)


def herm_eig(A, tol=HERMITIAN_TOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns
    -------
    eigenvalues : ndarray, shape (n,)
        Real eigenvalues in ascending order.
    eigenvectors : ndarray, shape (n, n)
        Orthonormal eigenvectors stored as columns.
    """
    A = as_hermitian(A, tol)
    try:
        lam, V = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"Hermitian eigensolver did not converge: {exc}") from exc
    return lam, V


def _cholesky_pd(A):
    A = as_hermitian(A)
    try:
        return np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        lam_min = float(np.linalg.eigvalsh(A)[0])
        raise NumericError(
            f"matrix is not positive definite (smallest eigenvalue {lam_min:.3e})"
        ) from None


def solve_hermitian_pd(A, b):
    """Solve ``A x = b`` for Hermitian positive definite ``A``."""
    L = _cholesky_pd(A)
    b = np.asarray(b, dtype=complex)
    z = np.linalg.solve(L, b)
    return np.linalg.solve(L.conj().T, z)


def logdet_pd(A):
    """Base-2 log-determinant of a Hermitian positive definite matrix."""
    L = _cholesky_pd(A)
    return 2.0 * float(np.sum(np.log2(np.abs(np.diag(L)))))


def _e1_continued_fraction(x):
    # E1(x) for x > 0 by modified Lentz on the even form of the continued fraction
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 500):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h * math.exp(-x)
    raise NumericError(f"E1 continued fraction did not converge at x={x}")


def _ei_negative_series(x):
    # Ei(x) = gamma + ln|x| + sum_k x^k / (k k!)
    total = 0.0
    term = 1.0
    for k in range(1, 200):
        term *= x / k
        contrib = term / k
        total += contrib
        if abs(contrib) < 1e-17 * max(1.0, abs(total)):
            break
    return EULER_GAMMA + math.log(-x) + total


def expint_Ei(x):
    """Exponential integral ``Ei(x)`` for strictly negative ``x``.

    ``Ei(x) = -E1(-x)``; a convergent series is used for ``|x| <= 6`` and a
    continued fraction beyond that.
    """
    x = float(x)
    if not x < 0.0:
        raise DomainError(f"Ei is implemented for x < 0 only, got {x!r}")
    if x == -math.inf:
        return 0.0
    if -x <= EI_SWITCH:
        return _ei_negative_series(x)
    if -x > 745.0:
        return 0.0
    return -_e1_continued_fraction(-x)


def expint_E1(x):
    """``E1(x) = -Ei(-x)`` for ``x > 0``."""
    return -expint_Ei(-x)


def bessel_I0(x):
    """Modified Bessel function of the first kind, order zero, ``x >= 0``.

    Power series summed until the term ratio drops below 1e-14 relative.
    Overflows past ``x ~ 713``; use :func:`bessel_I0e` there.
    """
    x = float(x)
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"I0 is implemented for x >= 0 only, got {x!r}")
    q = 0.25 * x * x
    total = 1.0
    term = 1.0
    k = 0
    while True:
        k += 1
        term *= q / (k * k)
        total += term
        if term < 1e-16 * total and k > q ** 0.5:
            return total


_I0_ASYMPTOTIC_FROM = 40.0


def bessel_I0e(x):
    """Exponentially scaled ``exp(-x) * I0(x)`` for ``x >= 0``.

    Uses the power series below x = 40 and the Hankel asymptotic expansion
    above, which keeps the chi-square density finite for large arguments.
    """
    x = float(x)
    if x < 0.0 or math.isnan(x):
        raise DomainError(f"I0 is implemented for x >= 0 only, got {x!r}")
    if x < _I0_ASYMPTOTIC_FROM:
        return bessel_I0(x) * math.exp(-x)
    # sum_k ((2k-1)!!)^2 / (k! 8^k x^k), stopped at the smallest term
    total = 1.0
    term = 1.0
    for k in range(1, 60):
        nxt = term * (2 * k - 1) ** 2 / (8.0 * k * x)
        if nxt > term:
            break
        term = nxt
        total += term
        if term < 1e-17 * total:
            break
    return total / math.sqrt(2.0 * math.pi * x)
