"""Classical least-squares SVM.

Assembles the bordered system

    [ 0   1^T          ] [b]   [0]
    [ 1   K + I / eta  ] [a] = [y]

and solves it directly. Used as a solver in its own right and as the oracle
for every quantum training path.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadLabels, ConfigError, DimensionMismatch, SingularSystem

COND_LIMIT = 1e12


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"
    gamma: float = 1.0
    degree: int = 2
    coef: float = 1.0

    def __post_init__(self):
        if self.kind not in ("linear", "rbf", "polynomial"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.kind == "rbf" and not self.gamma > 0:
            raise ValueError("rbf gamma must be positive")
        if self.kind == "polynomial" and int(self.degree) < 1:
            raise ValueError("polynomial degree must be >= 1")

    @classmethod
    def rbf(cls, gamma: float) -> "KernelSpec":
        return cls("rbf", gamma=gamma)

    @classmethod
    def polynomial(cls, degree: int, coef: float = 1.0) -> "KernelSpec":
        return cls("polynomial", degree=degree, coef=coef)

    def __call__(self, a, b) -> np.ndarray:
        """Gram block k(a_i, b_j) for row-stacked ``a`` (n, N) and ``b`` (m, N)."""
        a = np.atleast_2d(np.asarray(a, dtype=np.float64))
        b = np.atleast_2d(np.asarray(b, dtype=np.float64))
        if a.shape[1] != b.shape[1]:
            raise DimensionMismatch(f"feature dims differ: {a.shape[1]} vs {b.shape[1]}")
        if self.kind == "linear":
            return a @ b.T
        if self.kind == "polynomial":
            return (a @ b.T + self.coef) ** int(self.degree)
        sq = (
            np.sum(a * a, axis=1)[:, None]
            + np.sum(b * b, axis=1)[None, :]
            - 2.0 * (a @ b.T)
        )
        return np.exp(-self.gamma * np.maximum(sq, 0.0))

    def to_dict(self) -> dict:
        if self.kind == "linear":
            return {"kind": "linear"}
        if self.kind == "rbf":
            return {"kind": "rbf", "gamma": self.gamma}
        return {"kind": "polynomial", "degree": int(self.degree), "coef": self.coef}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        extra = set(d) - {"kind", "gamma", "degree", "coef"}
        if extra:
            raise ConfigError(f"unknown kernel keys {sorted(extra)}")
        return cls(**d)


@dataclass(frozen=True, eq=False)
class LSSVMSystem:
    F: np.ndarray
    y: np.ndarray
    eta: float
    trF: float

    @property
    def rhs(self) -> np.ndarray:
        return np.concatenate([[0.0], self.y])

    @property
    def size(self) -> int:
        return self.y.size


@dataclass(frozen=True, eq=False)
class BinarySVMModel:
    b: float
    alpha: np.ndarray
    support: np.ndarray
    labels: np.ndarray
    kernel: KernelSpec
    class_pair: Optional[tuple] = None
    eta: Optional[float] = None

    def decision_function(self, x) -> np.ndarray:
        return decision_value(self, x)


def build_kernel_matrix(data, kernel: KernelSpec) -> np.ndarray:
    x = np.asarray(data, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionMismatch("data must be a (M, N) array of equal-length vectors")
    if x.shape[0] < 1:
        raise DimensionMismatch("need at least one vector")
    k = kernel(x, x)
    return 0.5 * (k + k.T)


def assemble_system(K, y, eta: float) -> LSSVMSystem:
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    m = y.size
    if K.shape != (m, m):
        raise DimensionMismatch(f"kernel shape {K.shape} does not match {m} labels")
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise BadLabels("labels must be +1 or -1")
    if not eta > 0:
        raise ValueError("eta must be positive")
    F = np.zeros((m + 1, m + 1))
    F[0, 1:] = 1.0
    F[1:, 0] = 1.0
    F[1:, 1:] = K + np.eye(m) / eta
    return LSSVMSystem(F=F, y=y, eta=float(eta), trF=float(np.trace(F)))


def check_conditioning(F: np.ndarray) -> float:
    cond = float(np.linalg.cond(F))
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularSystem(f"condition number {cond:.3g} exceeds {COND_LIMIT:.0e}")
    return cond


def solve_classical(
    system: LSSVMSystem,
    support=None,
    kernel: Optional[KernelSpec] = None,
    class_pair=None,
) -> BinarySVMModel:
    check_conditioning(system.F)
    sol = np.linalg.solve(system.F, system.rhs)
    sup = np.empty((system.size, 0)) if support is None else np.asarray(support, dtype=np.float64)
    return BinarySVMModel(
        b=float(sol[0]),
        alpha=sol[1:].copy(),
        support=sup,
        labels=system.y.copy(),
        kernel=kernel or KernelSpec(),
        class_pair=class_pair,
        eta=system.eta,
    )


def train_classical(X, y, kernel: KernelSpec, eta: float, class_pair=None) -> BinarySVMModel:
    X = np.asarray(X, dtype=np.float64)
    system = assemble_system(build_kernel_matrix(X, kernel), y, eta)
    return solve_classical(system, X, kernel, class_pair)


def decision_value(model, x):
    """sum_i alpha_i k(x_i, x) + b; labels are already folded into alpha.

    Accepts one vector or a row-stacked batch.
    """
    xa = np.asarray(x, dtype=np.float64)
    single = xa.ndim == 1
    xb = np.atleast_2d(xa)
    if xb.shape[1] != model.support.shape[1]:
        raise DimensionMismatch(
            f"query dim {xb.shape[1]} != support dim {model.support.shape[1]}"
        )
    vals = model.kernel(xb, model.support) @ model.alpha + model.b
    return float(vals[0]) if single else vals
