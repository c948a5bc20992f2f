"""Quantum least-squares SVM.

Training normalizes the bordered LS-SVM matrix by its trace and applies the
filtered spectral inverse to ``(0, y_1, ..., y_M) / sqrt(M)``. Classification
interferes a training-data oracle state with a query state on an ancilla.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, SingularSystem, ZeroVector
from .lssvm import KernelSpec, assemble_system, build_kernel_matrix, check_conditioning
from .statevector import (
    EXACT,
    ShotPlan,
    StateVec,
    spectral_solve,
    swap_test_probability,
)

EPS_K_RELATIVE = 1e-4


@dataclass(frozen=True)
class InversionMode:
    """``exact_spectral`` or ``qpe`` (phase estimation on ``clock_bits`` bits)."""

    kind: str = "exact_spectral"
    clock_bits: Optional[int] = None
    t0: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("exact_spectral", "qpe"):
            raise ValueError(f"unknown inversion mode {self.kind!r}")
        if self.kind == "qpe" and (self.clock_bits is None or self.clock_bits < 1):
            raise ValueError("qpe mode needs clock_bits >= 1")

    @classmethod
    def qpe(cls, clock_bits: int, t0: Optional[float] = None) -> "InversionMode":
        return cls("qpe", int(clock_bits), t0)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "qpe":
            d["clock_bits"] = self.clock_bits
            if self.t0 is not None:
                d["t0"] = self.t0
        return d

    @classmethod
    def from_dict(cls, d) -> "InversionMode":
        if isinstance(d, str):
            return cls(d)
        extra = set(d) - {"kind", "clock_bits", "t0"}
        if extra:
            raise ConfigError(f"unknown mode keys {sorted(extra)}")
        return cls(**d)


EXACT_SPECTRAL = InversionMode()


@dataclass(frozen=True, eq=False)
class QuantumSVMModel:
    state: StateVec
    norm_scale: float
    support: np.ndarray
    labels: np.ndarray
    kernel: KernelSpec
    mode: InversionMode = EXACT_SPECTRAL
    eta: float = 1.0
    eps_k: float = 0.0
    class_pair: Optional[tuple] = None

    @property
    def params(self) -> np.ndarray:
        """(b, alpha_1..alpha_M) read off the state amplitudes."""
        return self.state.amplitudes.real * self.norm_scale

    @property
    def b(self) -> float:
        return float(self.params[0])

    @property
    def alpha(self) -> np.ndarray:
        return self.params[1:]

    @property
    def size(self) -> int:
        return self.labels.size

    def decision_function(self, x):
        from .lssvm import decision_value

        return decision_value(self, x)


def train_quantum_binary(
    X,
    y,
    kernel: KernelSpec,
    eta: float,
    eps_k: Optional[float] = None,
    mode: InversionMode = EXACT_SPECTRAL,
    class_pair=None,
) -> QuantumSVMModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    system = assemble_system(build_kernel_matrix(X, kernel), y, eta)
    check_conditioning(system.F)
    if not system.trF > 0:
        raise SingularSystem(f"trace of F is not positive ({system.trF!r})")
    f_hat = system.F / system.trF
    m = y.size
    y_state = StateVec(system.rhs / np.sqrt(m))
    if eps_k is None:
        eps_k = EPS_K_RELATIVE * float(np.max(np.abs(np.linalg.eigvalsh(f_hat))))
    raw = spectral_solve(
        f_hat,
        y_state,
        eps_k,
        clock_bits=mode.clock_bits if mode.kind == "qpe" else None,
        t0=mode.t0,
    )
    raw_norm = float(np.linalg.norm(raw))
    # F_hat x = y/sqrt(M)  =>  (b, alpha) = x sqrt(M) / trF
    norm_scale = raw_norm * np.sqrt(m) / system.trF
    return QuantumSVMModel(
        state=StateVec(raw / raw_norm),
        norm_scale=float(norm_scale),
        support=X.copy(),
        labels=y.copy(),
        kernel=kernel,
        mode=mode,
        eta=float(eta),
        eps_k=float(eps_k),
        class_pair=class_pair,
    )


def prepare_training_oracle(model, m_max: Optional[int] = None) -> StateVec:
    """b|0>|0> + sum_i alpha_i |x_i| |i>|x_i_hat>, normalized.

    The feature register has N + 1 slots; slot 0 carries the bias branch.
    """
    X = np.asarray(model.support, dtype=np.float64)
    m, n = X.shape
    m_max = m if m_max is None else int(m_max)
    if m_max < m:
        raise ValueError(f"M_max={m_max} is smaller than the support size {m}")
    reg = np.zeros((m_max + 1, n + 1))
    reg[0, 0] = model.b
    reg[1:m + 1, 1:] = model.alpha[:, None] * X
    return StateVec.normalized(reg, shape=reg.shape)


def prepare_query_state(x, m_max: int) -> StateVec:
    """|0>|0> + sum_{i=1..M_max} |x| |i>|x_hat>, normalized by sqrt(M_max |x|^2 + 1)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if not np.any(x):
        raise ZeroVector("query vector is zero")
    m_max = int(m_max)
    reg = np.zeros((m_max + 1, x.size + 1))
    reg[0, 0] = 1.0
    reg[1:, 1:] = x[None, :]
    norm = np.sqrt(m_max * float(x @ x) + 1.0)
    return StateVec(reg / norm, shape=reg.shape)


def kernel_overlap(model, x, m_max: Optional[int] = None) -> float:
    """<T|x> evaluated through kernel values instead of explicit registers.

    Equal to the register overlap for the linear kernel; for other kernels it
    is the same expression in the kernel's feature space.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    m_max = model.size if m_max is None else int(m_max)
    kern = model.kernel
    k_sx = kern(model.support, x[None, :])[:, 0]
    k_ss = np.diag(kern(model.support, model.support)) if model.size else np.zeros(0)
    k_xx = float(kern(x[None, :], x[None, :])[0, 0])
    alpha = model.alpha
    num = model.b + float(alpha @ k_sx)
    den_t = np.sqrt(max(model.b ** 2 + float(alpha ** 2 @ k_ss), 0.0))
    den_x = np.sqrt(max(1.0 + m_max * k_xx, 0.0))
    if den_t == 0.0 or den_x == 0.0:
        raise ZeroVector("degenerate oracle or query state")
    return float(np.clip(num / (den_t * den_x), -1.0, 1.0))


def classify_binary(
    model,
    x,
    plan: ShotPlan = EXACT,
    m_max: Optional[int] = None,
    tag=None,
) -> tuple[int, float]:
    """Returns (+1 or -1, P) with P the ancilla success probability.

    P < 1/2 classifies as +1, otherwise -1.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if tag is None:
        tag = ("classify", model.class_pair or (), x)
    if model.kernel.kind == "linear":
        if m_max is None:
            m_max = model.size
        t_state = prepare_training_oracle(model, m_max)
        q_state = prepare_query_state(x, m_max)
        p = swap_test_probability(t_state, q_state, plan, tag)
    else:
        r = kernel_overlap(model, x, m_max)
        p = min(1.0, max(0.0, 0.5 * (1.0 - r)))
        if plan.sampled:
            rng = plan.rng("swap_test", *tag)
            p = rng.binomial(int(plan.shots), p) / int(plan.shots)
    return (1 if p < 0.5 else -1), float(p)
