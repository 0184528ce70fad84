"""Network architecture, parameter-vector layout, and the forward map.

The model is a single-hidden-layer feedforward network

    NN(x, theta) = phi_o( gamma_0 + sum_k gamma_k * sigmoid( sum_j omega_jk x_j ) )

with x_0 = 1, input weights omega_jk for j = 0..p (j = 0 is the hidden
intercept), k = 1..q, and output weights gamma_0..gamma_q.  The flat
parameter vector is laid out as

    theta = (omega_0^T, omega_1^T, ..., omega_p^T, gamma^T)

where omega_j = (omega_j1, ..., omega_jq) and gamma = (gamma_0, ..., gamma_q),
giving r = (p + 2) q + 1 entries in total.  The ordering is part of the
serialization contract: Wald selection matrices and the canonical-form
machinery rely on a stable index map.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import DataError, ShapeError

HIDDEN_ACTIVATIONS = ("logistic",)
OUTPUT_ACTIVATIONS = ("identity", "logistic")


def sigmoid(s):
    """Numerically stable logistic function, elementwise.

    Uses the branch form exp(-|s|) / (1 + exp(-|s|)) so that large net
    inputs (which occur routinely during exploratory optimization) never
    overflow.
    """
    s = np.asarray(s, dtype=float)
    out = np.empty_like(s)
    pos = s >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-s[pos]))
    es = np.exp(s[~pos])
    out[~pos] = es / (1.0 + es)
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class Architecture:
    """Network shape: p covariates (excluding the intercept), q hidden nodes."""

    p: int
    q: int
    hidden_activation: str = "logistic"
    output_activation: str = "identity"

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if self.q < 1:
            raise ValueError(f"q must be >= 1, got {self.q}")
        if self.hidden_activation not in HIDDEN_ACTIVATIONS:
            raise ValueError(
                f"unsupported hidden activation {self.hidden_activation!r}; "
                f"supported: {HIDDEN_ACTIVATIONS}")
        if self.output_activation not in OUTPUT_ACTIVATIONS:
            raise ValueError(
                f"unsupported output activation {self.output_activation!r}; "
                f"supported: {OUTPUT_ACTIVATIONS}")

    @property
    def r(self) -> int:
        """Total number of parameters, (p + 2) q + 1."""
        return (self.p + 2) * self.q + 1

    def omega_index(self, j: int, k: int) -> int:
        """Flat index of omega_jk, j in 0..p, k in 1..q."""
        if not 0 <= j <= self.p:
            raise IndexError(f"input index j must be in 0..{self.p}, got {j}")
        if not 1 <= k <= self.q:
            raise IndexError(f"hidden index k must be in 1..{self.q}, got {k}")
        return j * self.q + (k - 1)

    def gamma_index(self, k: int) -> int:
        """Flat index of gamma_k, k in 0..q."""
        if not 0 <= k <= self.q:
            raise IndexError(f"output index k must be in 0..{self.q}, got {k}")
        return (self.p + 1) * self.q + k

    def penalized_mask(self) -> np.ndarray:
        """Boolean mask over theta selecting the ridge-penalized entries.

        Excludes exactly the hidden intercepts omega_0k and the output
        intercept gamma_0.
        """
        mask = np.ones(self.r, dtype=bool)
        mask[0:self.q] = False                  # omega_0 block
        mask[self.gamma_index(0)] = False       # gamma_0
        return mask


@dataclass(frozen=True)
class ParamVector:
    """Immutable flat parameter vector with structured accessors."""

    arch: Architecture
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.arch.r,):
            raise ShapeError("parameter vector length", (self.arch.r,), values.shape)
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, arch: Architecture) -> "ParamVector":
        return cls(arch, np.zeros(arch.r))

    def omega(self, j: int, k: int) -> float:
        """Weight from input j (0 = intercept) to hidden node k."""
        return float(self.values[self.arch.omega_index(j, k)])

    def gamma(self, k: int) -> float:
        """Weight from hidden node k (0 = intercept) to the output."""
        return float(self.values[self.arch.gamma_index(k)])

    def with_omega(self, j: int, k: int, value: float) -> "ParamVector":
        v = self.values.copy()
        v[self.arch.omega_index(j, k)] = value
        return ParamVector(self.arch, v)

    def with_gamma(self, k: int, value: float) -> "ParamVector":
        v = self.values.copy()
        v[self.arch.gamma_index(k)] = value
        return ParamVector(self.arch, v)

    def omega_matrix(self) -> np.ndarray:
        """(p + 1) x q matrix W with W[j, k-1] = omega_jk (a fresh copy)."""
        return self.values[:(self.arch.p + 1) * self.arch.q].reshape(
            self.arch.p + 1, self.arch.q).copy()

    def gamma_vector(self) -> np.ndarray:
        """Length-(q + 1) vector (gamma_0, ..., gamma_q) (a fresh copy)."""
        return self.values[(self.arch.p + 1) * self.arch.q:].copy()

    @classmethod
    def from_parts(cls, arch: Architecture, omega: np.ndarray,
                   gamma: np.ndarray) -> "ParamVector":
        """Assemble from the (p + 1) x q input-weight matrix and gamma vector."""
        omega = np.asarray(omega, dtype=float)
        gamma = np.asarray(gamma, dtype=float)
        if omega.shape != (arch.p + 1, arch.q):
            raise ShapeError("omega matrix shape", (arch.p + 1, arch.q), omega.shape)
        if gamma.shape != (arch.q + 1,):
            raise ShapeError("gamma vector length", (arch.q + 1,), gamma.shape)
        return cls(arch, np.concatenate([omega.ravel(), gamma]))


@dataclass(frozen=True)
class ColumnMeta:
    """Standardization / encoding record for one model column.

    For continuous columns, ``mean`` and ``sd`` describe the affine map
    applied during preprocessing (original = standardized * sd + mean).
    Dummy columns are passed through unchanged (mean 0, sd 1).
    """

    name: str
    kind: str = "continuous"
    mean: float = 0.0
    sd: float = 1.0

    def __post_init__(self):
        if self.kind not in ("continuous", "dummy"):
            raise ValueError(f"column kind must be continuous or dummy, got {self.kind!r}")
        if not (np.isfinite(self.mean) and np.isfinite(self.sd)):
            raise DataError(f"non-finite standardization metadata for column {self.name!r}")


@dataclass(frozen=True)
class Dataset:
    """Design matrix (without the implicit intercept column) and response."""

    x: np.ndarray
    y: np.ndarray
    column_meta: tuple = ()
    response_meta: ColumnMeta = field(default_factory=lambda: ColumnMeta("y"))

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if x.ndim != 2:
            raise ShapeError("design matrix dimensions", 2, x.ndim)
        if y.shape != (x.shape[0],):
            raise ShapeError("response length", (x.shape[0],), y.shape)
        if x.shape[0] < 1:
            raise DataError("dataset must contain at least one observation")
        if not np.all(np.isfinite(x)):
            raise DataError("design matrix contains non-finite entries")
        if not np.all(np.isfinite(y)):
            raise DataError("response contains non-finite entries")
        meta = tuple(self.column_meta)
        if meta:
            if len(meta) != x.shape[1]:
                raise ShapeError("column metadata count", x.shape[1], len(meta))
        else:
            meta = tuple(ColumnMeta(f"x{j + 1}") for j in range(x.shape[1]))
        for j, cm in enumerate(meta):
            if cm.kind == "dummy":
                col = x[:, j]
                if not np.all((col == 0.0) | (col == 1.0)):
                    raise DataError(f"dummy column {cm.name!r} contains values outside {{0, 1}}")
        x = x.copy()
        y = y.copy()
        x.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "column_meta", meta)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def column_index(self, name: str) -> int:
        """0-based column index for a model-column name."""
        for j, cm in enumerate(self.column_meta):
            if cm.name == name:
                return j
        raise KeyError(f"no model column named {name!r}")

    def with_columns(self, x: np.ndarray) -> "Dataset":
        """Same metadata and response, different design matrix values."""
        return replace(self, x=x)


def _check_arch_data(arch: Architecture, p_actual: int):
    if p_actual != arch.p:
        raise ShapeError("covariate count", arch.p, p_actual)


def design_with_intercept(x: np.ndarray) -> np.ndarray:
    """Prepend the implicit column of ones."""
    x = np.asarray(x, dtype=float)
    return np.hstack([np.ones((x.shape[0], 1)), x])


def forward(arch: Architecture, theta: ParamVector, x) -> float:
    """Evaluate the network at a single covariate vector of length p."""
    x = np.asarray(x, dtype=float)
    if x.shape != (arch.p,):
        raise ShapeError("covariate vector length", (arch.p,), x.shape)
    if not np.all(np.isfinite(x)):
        raise DataError("covariate vector contains non-finite entries")
    return float(forward_design(arch, theta, design_with_intercept(x[None, :]))[0])


def forward_batch(arch: Architecture, theta: ParamVector, data: Dataset) -> np.ndarray:
    """Evaluate the network at every row of the dataset, preserving order."""
    _check_arch_data(arch, data.p)
    return forward_design(arch, theta, design_with_intercept(data.x))


def forward_design(arch: Architecture, theta: ParamVector, x1: np.ndarray) -> np.ndarray:
    """Forward pass over a design matrix that already carries the 1-column."""
    w = theta.omega_matrix()
    g = theta.gamma_vector()
    hidden = sigmoid(x1 @ w)
    z = g[0] + hidden @ g[1:]
    if arch.output_activation == "logistic":
        return sigmoid(z)
    return z


def selection_matrix(arch: Architecture, j: int) -> np.ndarray:
    """q x r selection matrix S with S theta = omega_j.

    Each row is a distinct unit vector; the hidden intercepts omega_0k are
    never selected, so j = 0 is rejected (intercepts are not testable
    covariates).
    """
    if not 1 <= j <= arch.p:
        raise IndexError(
            f"covariate index must be in 1..{arch.p} (intercepts are not "
            f"testable), got {j}")
    s = np.zeros((arch.q, arch.r))
    for k in range(1, arch.q + 1):
        s[k - 1, arch.omega_index(j, k)] = 1.0
    return s
