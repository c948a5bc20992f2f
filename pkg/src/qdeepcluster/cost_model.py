"""Run-time cost model: classical vs quantum, evaluated in model units.

All O(.) expressions are evaluated with unit constants and base-2 logs.
Integer-valued terms stay Python ints so scaling laws can be checked exactly.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .errors import BadSizes, ConfigError


@dataclass(frozen=True)
class CostParams:
    M: int = 100
    M_max: Optional[int] = None
    N: int = 16
    g: int = 3
    v: int = 2
    l: int = 2
    L: int = 3
    layer_sizes: tuple = ()
    Gr: int = 10
    K_clusters: int = 3
    N_features: int = 8
    eps: float = 0.1
    eps_K: float = 0.01
    eps_KMeans: float = 0.1
    delta: float = 0.1
    eps_gd: float = 0.01
    t0: float = 1.0
    well_separated: bool = False
    T_conv: float = 0.0

    def __post_init__(self):
        if self.M_max is None:
            object.__setattr__(self, "M_max", self.M)
        object.__setattr__(self, "layer_sizes", tuple(int(n) for n in self.layer_sizes))
        for name in ("M", "M_max", "N", "g", "v", "l", "L", "Gr", "K_clusters", "N_features"):
            val = getattr(self, name)
            if int(val) != val or val < 1:
                raise ValueError(f"{name} must be a positive integer, got {val!r}")
            object.__setattr__(self, name, int(val))
        for name in ("eps", "eps_K", "eps_KMeans", "delta", "eps_gd"):
            val = getattr(self, name)
            if not 0 < val < 1:
                raise ValueError(f"{name} must lie in (0, 1), got {val!r}")
        if self.M_max > self.M:
            raise ValueError("M_max cannot exceed M")
        if self.T_conv < 0:
            raise ValueError("T_conv must be non-negative")

    @classmethod
    def from_row(cls, row: dict) -> "CostParams":
        names = {f.name: f for f in fields(cls)}
        extra = set(row) - set(names)
        if extra:
            raise ConfigError(f"unknown cost parameter columns {sorted(extra)}")
        kw = {}
        for key, raw in row.items():
            if raw is None or (isinstance(raw, str) and raw.strip() == ""):
                continue
            if key == "layer_sizes":
                kw[key] = tuple(int(t) for t in str(raw).replace(";", " ").split()) if isinstance(raw, str) else tuple(raw)
            elif key == "well_separated":
                kw[key] = raw if isinstance(raw, bool) else str(raw).strip().lower() in ("1", "true", "yes")
            elif key in ("eps", "eps_K", "eps_KMeans", "delta", "eps_gd", "t0", "T_conv"):
                kw[key] = float(raw)
            else:
                kw[key] = int(float(raw)) if isinstance(raw, str) else raw
        return cls(**kw)


@dataclass(frozen=True)
class CostReport:
    params: CostParams
    n_mul: Optional[int]
    n_act: Optional[int]
    T_forward: Optional[int]
    T_back: int
    T_C1: float
    T_C2: int
    T_C3: int
    T_q1: float
    T_q2: float
    T_q3: float
    T_q2_qpe: float
    T_qsvm_binary: float
    T_qsvm_binary_qpe: float
    n_pairs: int
    total_classical: float
    total_quantum: float
    speedup_svm: Optional[float]
    speedup_kmeans: Optional[float]
    speedup_total: Optional[float]
    units: str = "model units"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = {k: (list(v) if isinstance(v, tuple) else v) for k, v in d["params"].items()}
        return d


def cnn_counts(layer_sizes: Sequence[int]) -> tuple[int, int, int]:
    """(n_mul, n_act, T_forward) for widths n^(0..L).

    n_mul = sum_{l=2..L} n^(l) n^(l-1) n^(l-2) + n^(1) n^(0),
    n_act = sum_{l=1..L} n^(l), T_forward = n_mul + n_act.
    """
    n = [int(s) for s in layer_sizes]
    if len(n) < 2 or any(s < 1 for s in n):
        raise BadSizes("need at least two positive layer sizes (L >= 1)")
    n_mul = sum(n[l] * n[l - 1] * n[l - 2] for l in range(2, len(n))) + n[1] * n[0]
    n_act = sum(n[1:])
    return n_mul, n_act, n_mul + n_act


def backprop_cost(p: CostParams) -> int:
    """Gr * L * N^3."""
    return p.Gr * p.L * p.N ** 3


def classical_costs(p: CostParams) -> tuple[float, int, int]:
    t_c1 = backprop_cost(p) + p.T_conv
    t_c2 = (p.v + 1) * p.l * p.g ** 2 * p.M ** 3
    t_c3 = p.K_clusters * p.M * p.N_features
    return t_c1, t_c2, t_c3


def _svm_terms(p: CostParams) -> tuple[float, float, float]:
    vl = (p.v + 1) * p.l
    first = vl * p.g ** 2 * math.log2(p.M_max * p.N)
    second = vl * p.g ** 1.5 * math.log2(1.0 / p.delta) / p.eps
    third = vl * math.log2(p.g)
    return first, second, third


def quantum_costs(p: CostParams) -> tuple[float, float, float]:
    t_q1 = classical_costs(p)[0]
    t_q2 = sum(_svm_terms(p))
    log_term = math.log2(p.K_clusters * p.M * p.N_features)
    if p.well_separated:
        t_q3 = p.eps_KMeans * log_term
    else:
        t_q3 = p.eps_KMeans * p.K_clusters * log_term
    return t_q1, t_q2, t_q3


def cost_report(p: CostParams) -> CostReport:
    if p.layer_sizes:
        n_mul, n_act, t_fwd = cnn_counts(p.layer_sizes)
    else:
        n_mul = n_act = t_fwd = None
    t_c1, t_c2, t_c3 = classical_costs(p)
    t_q1, t_q2, t_q3 = quantum_costs(p)
    first, second, third = _svm_terms(p)
    qpe_factor = p.eps_K ** -2 * p.eps ** -3
    log_mn = math.log2(p.M * p.N)
    total_c = t_c1 + t_c2 + t_c3
    total_q = t_q1 + t_q2 + t_q3
    return CostReport(
        params=p,
        n_mul=n_mul,
        n_act=n_act,
        T_forward=t_fwd,
        T_back=backprop_cost(p),
        T_C1=t_c1,
        T_C2=t_c2,
        T_C3=t_c3,
        T_q1=t_q1,
        T_q2=t_q2,
        T_q3=t_q3,
        T_q2_qpe=first * qpe_factor + second + third,
        T_qsvm_binary=p.t0 ** 2 / p.eps * log_mn,
        T_qsvm_binary_qpe=qpe_factor * log_mn,
        n_pairs=p.g * (p.g - 1) // 2,
        total_classical=total_c,
        total_quantum=total_q,
        speedup_svm=_ratio(t_c2, t_q2),
        speedup_kmeans=_ratio(t_c3, t_q3),
        speedup_total=_ratio(total_c, total_q),
    )


def _ratio(num, den) -> Optional[float]:
    # a zero quantum cost (every log term is log2(1)) leaves the speedup undefined
    return None if den == 0 else num / den


REPORT_COLUMNS = (
    "n_mul", "n_act", "T_forward", "T_back", "T_C1", "T_C2", "T_C3", "T_q1", "T_q2", "T_q3",
    "T_q2_qpe", "T_qsvm_binary", "T_qsvm_binary_qpe", "n_pairs", "total_classical",
    "total_quantum", "speedup_svm", "speedup_kmeans", "speedup_total",
)


def read_sweep(path) -> list[CostParams]:
    with open(path, newline="") as fh:
        return [CostParams.from_row(row) for row in csv.DictReader(fh)]


def sweep_to_csv(reports: Sequence[CostReport]) -> str:
    buf = io.StringIO()
    param_names = [f.name for f in fields(CostParams)]
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(param_names + list(REPORT_COLUMNS))
    for r in reports:
        d = r.to_dict()
        prow = [
            " ".join(map(str, v)) if isinstance(v, list) else _fmt(v)
            for v in (d["params"][n] for n in param_names)
        ]
        writer.writerow(prow + [_fmt(d[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


# operation counters instrumented on a dense feature network

class OpCounter:
    """Counts scalar multiplications and activation applications."""

    def __init__(self):
        self.mul = 0
        self.act = 0

    def matmul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Naive triple loop; every scalar product is counted."""
        n, k = a.shape
        k2, m = b.shape
        if k != k2:
            raise BadSizes("inner dimensions differ")
        out = np.zeros((n, m))
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(k):
                    acc += a[i, t] * b[t, j]
                    self.mul += 1
                out[i, j] = acc
        return out

    def activate(self, kind: str, z: np.ndarray) -> np.ndarray:
        from .feature_extractor import _act

        self.act += z.shape[0]
        return _act(kind, z)


def _dense_layers(net):
    layers = list(net.layers)
    if not layers or any(l.kind != "dense" for l in layers):
        raise BadSizes("operation counting needs an all-dense network")
    return layers


def count_layerwise_products(net, x) -> OpCounter:
    """Brute-force count under the layer-product accounting of ``cnn_counts``.

    The input enters as an n^(0) x 1 column; layer 1 multiplies it by its
    n^(1) x n^(0) weights, and every later layer l multiplies its
    n^(l) x n^(l-1) weights by the previous layer's n^(l-1) x n^(l-2) weight
    matrix (a dense matrix-matrix product). One activation is applied per
    neuron of layers 1..L.
    """
    layers = _dense_layers(net)
    counter = OpCounter()
    column = np.asarray(x, dtype=np.float64).reshape(-1, 1)
    prev = column
    for layer in layers:
        prod = counter.matmul(layer.weights, prev)
        counter.activate(layer.activation, prod[:, 0])
        prev = layer.weights
    return counter


def count_matvec_forward(net, x) -> OpCounter:
    """Counts the matrix-vector products an actual forward pass performs."""
    layers = _dense_layers(net)
    counter = OpCounter()
    a = np.asarray(x, dtype=np.float64).reshape(-1, 1)
    for layer in layers:
        z = counter.matmul(layer.weights, a)
        a = counter.activate(layer.activation, z[:, 0]).reshape(-1, 1)
    return counter
