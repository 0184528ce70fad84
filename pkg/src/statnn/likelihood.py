"""Penalized log-likelihood, analytic gradient, and observed information.

The objective is

    l(theta) = sum_i log f(y_i | theta) - lambda * ||theta_pen||^2

where theta_pen excludes the hidden intercepts omega_0k and the output
intercept gamma_0.  Two response families are supported: Gaussian with
identity output activation (y ~ N(NN(x), sigma^2)) and Bernoulli with
logistic output activation.

The observed information is the negative Hessian of the *unpenalized*
log-likelihood, assembled from exact analytic second derivatives (not a
Gauss-Newton approximation) and symmetrized.  Derivative bookkeeping,
with z the output-node net input and s_k the hidden net inputs:

    dz/dgamma_0   = 1
    dz/dgamma_k   = h_k
    dz/domega_jk  = gamma_k h_k (1 - h_k) x_j
    d2z/dgamma_k domega_jk  = h_k (1 - h_k) x_j
    d2z/domega_jk domega_mk = gamma_k h_k (1 - h_k)(1 - 2 h_k) x_j x_m

with h_k = sigmoid(s_k); all second derivatives across distinct hidden
nodes vanish.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .model import (Architecture, Dataset, ParamVector, design_with_intercept,
                    sigmoid)

FAMILIES = ("gaussian", "bernoulli")

#: Clamp distance from {0, 1} applied to Bernoulli success probabilities
#: before taking logs; prevents -inf without materially biasing the objective.
BERNOULLI_EPS = 1e-12

LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class LikelihoodSpec:
    """Response family plus the ridge penalty size."""

    family: str
    lam: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.lam < 0.0:
            raise ValueError(f"ridge penalty must be nonnegative, got {self.lam}")

    def required_output_activation(self) -> str:
        return "identity" if self.family == "gaussian" else "logistic"


def check_family(arch: Architecture, spec: LikelihoodSpec):
    """Gaussian pairs with identity output, Bernoulli with logistic."""
    want = spec.required_output_activation()
    if arch.output_activation != want:
        raise DataError(
            f"{spec.family} family requires {want!r} output activation, "
            f"architecture has {arch.output_activation!r}")


def penalty(theta: ParamVector, lam: float) -> float:
    """Ridge penalty lambda * ||theta_pen||^2; intercepts contribute nothing."""
    if lam < 0.0:
        raise ValueError(f"ridge penalty must be nonnegative, got {lam}")
    mask = theta.arch.penalized_mask()
    return lam * float(np.sum(theta.values[mask] ** 2))


def _validate_gaussian(sigma_sq):
    if sigma_sq is None:
        raise DataError("gaussian likelihood requires sigma_sq")
    if not (sigma_sq > 0.0 and np.isfinite(sigma_sq)):
        raise DataError(f"sigma_sq must be positive and finite, got {sigma_sq}")


def _validate_bernoulli(y: np.ndarray):
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataError("bernoulli likelihood requires a response in {0, 1}")


# ---------------------------------------------------------------------------
# Vectorized core on plain arrays (shared with the fitter's hot loop)
# ---------------------------------------------------------------------------

def _net_parts(p: int, q: int, x1: np.ndarray, theta: np.ndarray):
    """Forward pass pieces: omega matrix, gamma, hidden activations, output z."""
    w = theta[:(p + 1) * q].reshape(p + 1, q)
    g = theta[(p + 1) * q:]
    h = sigmoid(x1 @ w)
    z = g[0] + h @ g[1:]
    return w, g, h, z


def _pred_jacobian(p: int, q: int, x1: np.ndarray, h: np.ndarray,
                   gk: np.ndarray) -> np.ndarray:
    """n x r matrix of dz/dtheta per observation."""
    n = x1.shape[0]
    r = (p + 2) * q + 1
    a = np.empty((n, r))
    hp = h * (1.0 - h)
    a[:, :(p + 1) * q] = (x1[:, :, None] * (hp * gk)[:, None, :]).reshape(n, -1)
    a[:, (p + 1) * q] = 1.0
    a[:, (p + 1) * q + 1:] = h
    return a


def _curvature_correction(p: int, q: int, x1: np.ndarray, h: np.ndarray,
                          gk: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """sum_i weights_i * d2z_i/dtheta dtheta^T (r x r, symmetric)."""
    r = (p + 2) * q + 1
    c = np.zeros((r, r))
    hp = h * (1.0 - h)
    hpp = hp * (1.0 - 2.0 * h)
    cols = np.arange(p + 1) * q
    for k in range(q):
        idx = cols + k
        wk = weights * hpp[:, k] * gk[k]
        c[np.ix_(idx, idx)] += x1.T @ (wk[:, None] * x1)
        v = x1.T @ (weights * hp[:, k])
        gi = (p + 1) * q + 1 + k
        c[gi, idx] += v
        c[idx, gi] += v
    return c


def _penalty_grad(p: int, q: int, lam: float, theta: np.ndarray,
                  mask: np.ndarray) -> np.ndarray:
    out = np.zeros_like(theta)
    if lam != 0.0:
        out[mask] = 2.0 * lam * theta[mask]
    return out


def _clamped_bernoulli_loglik(y: np.ndarray, mu: np.ndarray) -> float:
    mu_c = np.clip(mu, BERNOULLI_EPS, 1.0 - BERNOULLI_EPS)
    return float(np.sum(y * np.log(mu_c) + (1.0 - y) * np.log(1.0 - mu_c)))


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------

def log_likelihood(arch: Architecture, theta: ParamVector, data: Dataset,
                   spec: LikelihoodSpec, sigma_sq: float | None = None) -> float:
    """Penalized log-likelihood (penalty already subtracted)."""
    check_family(arch, spec)
    x1 = design_with_intercept(data.x)
    _, g, h, z = _net_parts(arch.p, arch.q, x1, theta.values)
    pen = penalty(theta, spec.lam)
    if spec.family == "gaussian":
        _validate_gaussian(sigma_sq)
        res = data.y - z
        n = data.n
        return float(-0.5 * n * (LOG_2PI + np.log(sigma_sq))
                     - 0.5 * float(res @ res) / sigma_sq - pen)
    _validate_bernoulli(data.y)
    return _clamped_bernoulli_loglik(data.y, sigmoid(z)) - pen


def gradient(arch: Architecture, theta: ParamVector, data: Dataset,
             spec: LikelihoodSpec, sigma_sq: float | None = None) -> np.ndarray:
    """Gradient of the penalized log-likelihood, length r.

    The ridge term contributes -2 lambda theta on the penalized
    coordinates and nothing on the intercepts.
    """
    check_family(arch, spec)
    x1 = design_with_intercept(data.x)
    _, g, h, z = _net_parts(arch.p, arch.q, x1, theta.values)
    a = _pred_jacobian(arch.p, arch.q, x1, h, g[1:])
    if spec.family == "gaussian":
        _validate_gaussian(sigma_sq)
        u = (data.y - z) / sigma_sq
    else:
        _validate_bernoulli(data.y)
        u = data.y - sigmoid(z)
    pen = _penalty_grad(arch.p, arch.q, spec.lam, theta.values,
                        arch.penalized_mask())
    return a.T @ u - pen


def observed_information(arch: Architecture, theta: ParamVector, data: Dataset,
                         spec: LikelihoodSpec,
                         sigma_sq: float | None = None) -> np.ndarray:
    """Negative Hessian of the unpenalized log-likelihood at ``theta``.

    Symmetric by construction ((H + H^T)/2 after assembly) and invariant
    under the penalty used elsewhere: the ridge term is stripped by
    definition.
    """
    check_family(arch, spec)
    x1 = design_with_intercept(data.x)
    _, g, h, z = _net_parts(arch.p, arch.q, x1, theta.values)
    a = _pred_jacobian(arch.p, arch.q, x1, h, g[1:])
    if spec.family == "gaussian":
        _validate_gaussian(sigma_sq)
        res = data.y - z
        info = (a.T @ a - _curvature_correction(arch.p, arch.q, x1, h, g[1:],
                                                res)) / sigma_sq
    else:
        _validate_bernoulli(data.y)
        mu = sigmoid(z)
        wgt = mu * (1.0 - mu)
        info = (a.T * wgt) @ a - _curvature_correction(arch.p, arch.q, x1, h,
                                                       g[1:], data.y - mu)
    info = 0.5 * (info + info.T)
    if not np.all(np.isfinite(info)):
        bad = np.argwhere(~np.isfinite(info))[0]
        raise DataError(
            f"non-finite second derivative at coordinate pair "
            f"({int(bad[0])}, {int(bad[1])})")
    return info


def prediction_gradient(arch: Architecture, theta: ParamVector,
                        x: np.ndarray) -> np.ndarray:
    """Per-row gradient of the network output w.r.t. theta (n x r).

    For the logistic output the chain rule through the output activation
    is included.
    """
    x = np.asarray(x, dtype=float)
    x1 = design_with_intercept(x)
    _, g, h, z = _net_parts(arch.p, arch.q, x1, theta.values)
    a = _pred_jacobian(arch.p, arch.q, x1, h, g[1:])
    if arch.output_activation == "logistic":
        mu = sigmoid(z)
        a = a * (mu * (1.0 - mu))[:, None]
    return a
