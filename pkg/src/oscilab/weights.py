"""Iterated-logarithm weight pairs.

For depth ``k`` the singular profile is ``phi_star(x) = ln^(k)(|ln x|)``
and the weight is ``phi(x) = -x phi_star'(x)``, which has the closed form
``1 / (L_0 L_1 ... L_{k-1})`` with ``L_0 = |ln x|`` and
``L_{j+1} = ln L_j``.  Depth 0 gives ``phi_star = |ln x|`` and ``phi = 1``.

Both functions are evaluated wherever every intermediate log ``L_j``
(``j < k``) is positive.  Because only ``|ln x|`` enters, this includes
large arguments, which is how ``phi_star`` is applied to maximal
functions.  ``x_safe`` is the conservative small-``x`` threshold where
``phi_star > 1``; experiments draw their cutoffs below it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

__all__ = [
    "LogWeight",
    "phi_star",
    "phi",
    "phi_star_log",
    "phi_log",
    "iterated_exp",
    "iterated_log",
    "phi_star_from_integral",
    "reciprocal_phi_star",
]


def iterated_exp(k: int, x: float) -> float:
    """``exp`` composed ``k`` times; raises ``OverflowError`` on overflow."""
    if k < 0 or int(k) != k:
        raise ValueError("k must be a nonnegative integer")
    y = float(x)
    for _ in range(int(k)):
        y = math.exp(y)
    if not math.isfinite(y):
        raise OverflowError(f"iterated_exp({k}, {x}) overflows")
    return y


def iterated_log(k: int, x):
    """``ln`` composed ``k`` times, no domain checks (numpy semantics)."""
    y = np.asarray(x, dtype=float)
    for _ in range(int(k)):
        y = np.log(y)
    return y


def _log_chain(k: int, x, *, logs=False):
    """Return ``[L_0, ..., L_k]`` and a mask of points where all ``L_j > 0`` (j<k).

    With ``logs=True`` the input already is ``L_0 = |ln x|``.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        if logs:
            chain = [x]
            ok = (x >= 0) & np.isfinite(x)
        else:
            chain = [np.abs(np.log(x))]
            ok = (x > 0) & np.isfinite(chain[0])
        if k > 0:
            ok &= chain[0] > 0
        for _ in range(k):
            prev = chain[-1]
            nxt = np.log(np.where(prev > 0, prev, 1.0))
            chain.append(nxt)
        for j in range(1, k):
            ok &= chain[j] > 0
    return chain, ok


@dataclass(frozen=True)
class LogWeight:
    """The pair ``(phi_star, phi)`` of iterated-log depth ``k``."""

    k: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 0:
            raise ValueError("depth k must be a nonnegative integer")
        object.__setattr__(self, "k", int(self.k))

    @property
    def x_safe(self) -> float:
        """Largest ``x`` below which ``phi_star > 1`` (shrunk by 1e-9)."""
        return math.exp(-iterated_exp(self.k, 1.0)) * (1 - 1e-9)

    @property
    def log_x_safe(self) -> float:
        """``ln(x_safe)``; stays finite for depths where ``x_safe`` underflows."""
        return -iterated_exp(self.k, 1.0) + math.log1p(-1e-9)

    @property
    def label(self) -> str:
        return f"loglog^{self.k}"

    def phi_star(self, x):
        return phi_star(self, x)

    def phi(self, x):
        return phi(self, x)

    def __call__(self, x):
        return phi(self, x)

    def in_domain(self, x) -> np.ndarray:
        return _log_chain(self.k, x)[1]


def _check(ok, x, k):
    if not np.all(ok):
        bad = np.asarray(x, dtype=float)[~np.asarray(ok)]
        raise ValueError(
            f"x={bad.ravel()[:3]} outside the domain of the depth-{k} weight "
            "(an intermediate logarithm is not positive)"
        )


def _unwrap(x, out):
    return float(out) if np.ndim(x) == 0 else out


def phi_star(w: LogWeight, x):
    """``ln^(k)(|ln x|)`` evaluated by composing built-in logs left to right."""
    chain, ok = _log_chain(w.k, x)
    _check(ok, x, w.k)
    return _unwrap(x, chain[w.k])


def phi(w: LogWeight, x):
    """``-x phi_star'(x)`` in closed form: ``1 / prod_{j<k} L_j``."""
    chain, ok = _log_chain(w.k, x)
    _check(ok, x, w.k)
    out = np.ones_like(chain[0])
    for j in range(w.k):
        out = out / chain[j]
    return _unwrap(x, out)


def phi_star_log(w: LogWeight, u):
    """``phi_star`` as a function of ``u = |ln x|``."""
    chain, ok = _log_chain(w.k, u, logs=True)
    _check(ok, u, w.k)
    return _unwrap(u, chain[w.k])


def phi_log(w: LogWeight, u):
    """``phi`` as a function of ``u = |ln x|``."""
    chain, ok = _log_chain(w.k, u, logs=True)
    _check(ok, u, w.k)
    out = np.ones_like(chain[0])
    for j in range(w.k):
        out = out / chain[j]
    return _unwrap(u, out)


def phi_star_from_integral(phi_fn, t: float, delta: float, *, rtol: float = 1e-10) -> float:
    """``int_{min(delta, t)}^{delta} phi(s) / s ds``.

    With ``u = ln(1/s)`` the integrand becomes ``phi(e^{-u})`` on
    ``[ln(1/delta), ln(1/t)]``, which has no endpoint singularity.
    """
    t, delta = float(t), float(delta)
    if not (t > 0 and delta > 0):
        raise ValueError("t and delta must be positive")
    if t >= delta:
        return 0.0
    u0, u1 = -math.log(delta), -math.log(t)
    val, _ = integrate.quad(
        lambda u: float(phi_fn(math.exp(-u))), u0, u1,
        epsabs=0.0, epsrel=rtol, limit=200,
    )
    return val


def reciprocal_phi_star(w: LogWeight):
    """Weight ``r -> 1 / phi_star(r)`` (the reciprocal reading of ``(phi_*)^{-1}``)."""

    def weight(r):
        return 1.0 / np.asarray(phi_star(w, r))

    weight.label = f"1/phi_star[k={w.k}]"
    return weight
