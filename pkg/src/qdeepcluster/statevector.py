"""State vectors, amplitude encoding, measurement and Hamiltonian evolution.

Every quantum subroutine in the package goes through this module. States are
immutable; classical norms travel beside them rather than inside them.
"""

from __future__ import annotations

import contextlib
import math
import zlib
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AllFiltered, DimensionMismatch, NonHermitian, ZeroVector

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10

_audit_hooks: list[Callable[["StateVec"], None]] = []


@dataclass(frozen=True, eq=False)
class StateVec:
    """Normalized complex amplitude vector.

    ``shape`` optionally records a composite register layout (e.g.
    ``(M_max + 1, N + 1)`` for index x feature registers); the amplitudes are
    always stored flat in row-major order.
    """

    amplitudes: np.ndarray
    shape: Optional[tuple] = None

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128).reshape(-1)
        if amps.size < 1:
            raise DimensionMismatch("state needs at least one amplitude")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)
        if self.shape is not None:
            shp = tuple(int(n) for n in self.shape)
            if math.prod(shp) != amps.size:
                raise DimensionMismatch(f"register shape {shp} does not match dim {amps.size}")
            object.__setattr__(self, "shape", shp)
        for hook in _audit_hooks:
            hook(self)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @property
    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real ** 2 + a.imag ** 2

    def overlap(self, other: "StateVec") -> complex:
        """<self|other>."""
        _check_dims(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def __neg__(self) -> "StateVec":
        return StateVec(-self.amplitudes, self.shape)

    @classmethod
    def normalized(cls, vec, shape=None) -> "StateVec":
        v = np.asarray(vec, dtype=np.complex128).reshape(-1)
        n = _safe_norm(v)
        if n == 0.0 or not np.isfinite(n):
            raise ZeroVector("cannot normalize a zero or non-finite vector")
        u = v / n
        return cls(u / np.linalg.norm(u), shape)

    @classmethod
    def basis(cls, index: int, dim: int) -> "StateVec":
        v = np.zeros(dim, dtype=np.complex128)
        v[index] = 1.0
        return cls(v)


@dataclass
class NormAudit:
    """Collects the norm deviation of every state constructed while active."""

    count: int = 0
    max_deviation: float = 0.0
    dims: set = field(default_factory=set)

    def __call__(self, state: StateVec) -> None:
        self.count += 1
        self.dims.add(state.dim)
        dev = abs(float(np.linalg.norm(state.amplitudes)) - 1.0)
        if dev > self.max_deviation:
            self.max_deviation = dev


@contextlib.contextmanager
def audit_norms():
    """Context manager yielding a :class:`NormAudit` fed by every new state."""
    audit = NormAudit()
    _audit_hooks.append(audit)
    try:
        yield audit
    finally:
        _audit_hooks.remove(audit)


def add_audit_hook(hook: Callable[[StateVec], None]) -> None:
    _audit_hooks.append(hook)


def remove_audit_hook(hook: Callable[[StateVec], None]) -> None:
    _audit_hooks.remove(hook)


@dataclass(frozen=True)
class ShotPlan:
    """Measurement budget. ``exact`` mode ignores ``shots``."""

    shots: int = 1024
    seed: int = 0
    mode: str = "exact"

    def __post_init__(self):
        if self.mode not in ("exact", "sampled"):
            raise ValueError(f"unknown shot mode {self.mode!r}")
        if self.mode == "sampled" and int(self.shots) < 1:
            raise ValueError("sampled mode needs shots >= 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def sampled(self) -> bool:
        return self.mode == "sampled"

    def rng(self, *tag) -> np.random.Generator:
        """Generator for the stream identified by ``tag``.

        Streams depend only on (seed, tag), never on call order.
        """
        return np.random.default_rng(
            np.random.SeedSequence(int(self.seed), spawn_key=tuple(_tag_int(t) for t in tag))
        )

    def with_shots(self, shots: int) -> "ShotPlan":
        return ShotPlan(shots=int(shots), seed=self.seed, mode=self.mode)


EXACT = ShotPlan()


def _tag_int(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        return int(part) & 0xFFFFFFFFFFFFFFFF
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    if isinstance(part, bytes):
        return zlib.crc32(part)
    if isinstance(part, np.ndarray):
        return zlib.crc32(np.ascontiguousarray(part).tobytes())
    if isinstance(part, float):
        return zlib.crc32(float(part).hex().encode())
    if isinstance(part, tuple):
        return zlib.crc32(repr(tuple(_tag_int(p) for p in part)).encode())
    raise TypeError(f"unsupported rng tag component {part!r}")


def _safe_norm(v: np.ndarray) -> float:
    """2-norm that neither underflows nor overflows for extreme magnitudes."""
    scale = float(np.max(np.abs(v), initial=0.0))
    if scale == 0.0 or not np.isfinite(scale):
        return scale
    return scale * float(np.linalg.norm(v / scale))


def _check_dims(a: StateVec, b: StateVec) -> None:
    if a.dim != b.dim:
        raise DimensionMismatch(f"state dimensions differ: {a.dim} vs {b.dim}")


def encode_amplitudes(v: Sequence[float], shape=None) -> tuple[StateVec, float]:
    """Amplitude-encode a real vector; returns (state, classical norm)."""
    arr = np.asarray(v, dtype=np.float64).reshape(-1)
    norm = _safe_norm(arr)
    if norm == 0.0:
        raise ZeroVector("cannot amplitude-encode the zero vector")
    if not np.isfinite(norm):
        raise ZeroVector("vector has non-finite entries")
    u = arr / norm
    return StateVec(u / np.linalg.norm(u), shape), norm


def swap_test_probability(
    t: StateVec,
    q: StateVec,
    plan: ShotPlan = EXACT,
    tag=(),
) -> float:
    """Ancilla success probability ``(1 - Re<t|q>) / 2``.

    This is the signed-overlap form used by the classifier decision rule. In
    sampled mode the return value is the success fraction over
    ``plan.shots`` Bernoulli draws.
    """
    _check_dims(t, q)
    r = float(np.vdot(t.amplitudes, q.amplitudes).real)
    p = min(1.0, max(0.0, 0.5 * (1.0 - r)))
    if not plan.sampled:
        return p
    rng = plan.rng("swap_test", *_as_tag(tag))
    return rng.binomial(int(plan.shots), p) / int(plan.shots)


def ancilla_interference_probability(t: StateVec, q: StateVec) -> float:
    """Project ``(|0>|t> + |1>|q>)/sqrt(2)`` on the ancilla state ``(|0>-|1>)/sqrt(2)``.

    Builds both register states explicitly; used as an independent route to
    the same number ``swap_test_probability`` returns in exact mode.
    """
    _check_dims(t, q)
    psi = StateVec(np.concatenate([t.amplitudes, q.amplitudes]) / np.sqrt(2.0), (2, t.dim))
    phi = np.array([1.0, -1.0]) / np.sqrt(2.0)
    projected = np.tensordot(phi.conj(), psi.amplitudes.reshape(2, t.dim), axes=1)
    return float(np.vdot(projected, projected).real)


def sample_measurement(s: StateVec, plan: ShotPlan, tag=()) -> dict[int, int]:
    """Histogram of computational-basis outcomes over ``plan.shots`` shots."""
    probs = s.probabilities
    probs = probs / probs.sum()
    rng = plan.rng("measure", *_as_tag(tag))
    counts = rng.multinomial(int(plan.shots), probs)
    return {int(i): int(c) for i, c in enumerate(counts) if c}


def _as_tag(tag) -> tuple:
    return tag if isinstance(tag, tuple) else (tag,)


def _check_hermitian(h: np.ndarray, dim: int) -> np.ndarray:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionMismatch(f"Hamiltonian must be square, got {h.shape}")
    if h.shape[0] != dim:
        raise DimensionMismatch(f"Hamiltonian dim {h.shape[0]} != state dim {dim}")
    if np.max(np.abs(h - h.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise NonHermitian("matrix is not Hermitian within 1e-10")
    return 0.5 * (h + h.conj().T)


def unitary(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian ``h`` via its eigendecomposition."""
    lam, vecs = np.linalg.eigh(h)
    return (vecs * np.exp(-1j * lam * t)) @ vecs.conj().T


def evolve(
    s: StateVec,
    h,
    t: float,
    terms: Optional[Sequence] = None,
    dt: Optional[float] = None,
) -> StateVec:
    """Return exp(-i H t)|s>.

    Without ``terms`` the exponential is exact. With ``terms`` (Hermitian
    matrices summing to ``h``) and a step ``dt`` the evolution is the
    first-order Lie product: each step applies ``exp(-i H_k dt)`` for every
    term in order, so a single step carries an O(dt^2) commutator error.
    """
    h = _check_hermitian(h, s.dim)
    if terms is None:
        out = unitary(h, t) @ s.amplitudes
    else:
        if dt is None or dt <= 0:
            raise ValueError("Trotter mode needs a positive dt")
        mats = [_check_hermitian(term, s.dim) for term in terms]
        if np.max(np.abs(sum(mats) - h)) > HERMITIAN_TOL * max(1, len(mats)):
            raise ValueError("Trotter terms do not sum to the Hamiltonian")
        n_steps = max(1, int(round(abs(t) / dt)))
        step = t / n_steps
        step_u = np.eye(s.dim, dtype=np.complex128)
        for m in mats:
            step_u = unitary(m, step) @ step_u
        out = np.linalg.matrix_power(step_u, n_steps) @ s.amplitudes
    # absorb rounding drift of repeated products
    return StateVec(out / np.linalg.norm(out), s.shape)


def qpe_weights(lam: np.ndarray, clock_bits: int, t0: float) -> tuple[np.ndarray, np.ndarray]:
    """Phase-estimation outcome distribution for each eigenvalue.

    Returns ``(estimates, probs)`` where ``estimates[k]`` is the eigenvalue
    read from clock value ``k`` (signed two's-complement phase) and
    ``probs[j, k]`` is the probability eigenvalue ``lam[j]`` yields ``k``.
    """
    n = 1 << int(clock_bits)
    k = np.arange(n)
    signed = np.where(k >= n // 2, k - n, k)
    estimates = 2.0 * np.pi * signed / (n * t0)
    phase = np.asarray(lam, dtype=np.float64) * t0 / (2.0 * np.pi)
    delta = phase[:, None] - k[None, :] / n
    # |(1/n) sum_tau exp(2 pi i tau delta)|^2 (Fejer kernel)
    num = np.sin(np.pi * n * delta)
    den = n * np.sin(np.pi * delta)
    with np.errstate(divide="ignore", invalid="ignore"):
        amp = np.where(np.abs(den) < 1e-15, 1.0, num / den)
    probs = amp ** 2
    probs /= probs.sum(axis=1, keepdims=True)
    return estimates, probs


def spectral_solve(
    a,
    y,
    eps_k: float,
    clock_bits: Optional[int] = None,
    t0: Optional[float] = None,
) -> np.ndarray:
    """Unnormalized filtered inverse ``sum_j c_j w_j |u_j>``.

    Exact mode uses ``w_j = 1/lambda_j`` for ``|lambda_j| >= eps_k`` and 0
    otherwise. With ``clock_bits`` the eigenvalue is read through a simulated
    phase-estimation register and ``w_j`` is the expected filtered inverse
    over the clock outcome distribution.
    """
    a = np.asarray(a)
    yv = y.amplitudes if isinstance(y, StateVec) else np.asarray(y, dtype=np.complex128)
    a = _check_hermitian(a, yv.size)
    lam, vecs = np.linalg.eigh(a)
    coeffs = vecs.conj().T @ yv
    if clock_bits is None:
        keep = np.abs(lam) >= eps_k
        w = np.zeros_like(lam)
        w[keep] = 1.0 / lam[keep]
    else:
        if t0 is None:
            # keep every phase strictly inside (-1/2, 1/2)
            t0 = 0.9 * np.pi / max(np.max(np.abs(lam)), 1e-300)
        est, probs = qpe_weights(lam, clock_bits, t0)
        inv = np.zeros_like(est)
        ok = np.abs(est) >= eps_k
        inv[ok] = 1.0 / est[ok]
        w = probs @ inv
    # components of y below rounding level do not count as retained
    if not np.any((w != 0.0) & (np.abs(coeffs) > 1e-12 * np.linalg.norm(yv))):
        raise AllFiltered("every eigencomponent of the input fell below eps_K")
    return vecs @ (coeffs * w)


def spectral_invert(
    a,
    y: StateVec,
    eps_k: float,
    clock_bits: Optional[int] = None,
    t0: Optional[float] = None,
) -> StateVec:
    """Normalized filtered inverse of ``a`` applied to ``y``."""
    if np.asarray(a).shape[0] != y.dim:
        raise DimensionMismatch(f"matrix dim {np.asarray(a).shape[0]} != state dim {y.dim}")
    x = spectral_solve(a, y, eps_k, clock_bits, t0)
    return StateVec(x / np.linalg.norm(x), y.shape)


def fidelity(a, b) -> float:
    """|<a|b>| for states or raw vectors (raw vectors are normalized first)."""
    va = a.amplitudes if isinstance(a, StateVec) else np.asarray(a, dtype=np.complex128)
    vb = b.amplitudes if isinstance(b, StateVec) else np.asarray(b, dtype=np.complex128)
    return float(abs(np.vdot(va, vb)) / (np.linalg.norm(va) * np.linalg.norm(vb)))
