"""Problem instances P(b, mu), the linear-operator catalog, and JSON I/O.

An instance is min_x 1/(2 mu) ||Phi x - b||^2 + g(K x) with g from the
regularizer catalog.  Dense matrices travel over JSON as
{"kind": "dense", "rows": R, "cols": C, "entries": [...]} in row-major
order; structured operators (identity, 1-D/2-D discrete gradients) are
materialized to dense at desk scale.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .linalg import Tolerances, DEFAULT_TOL


class InstanceError(ValueError):
    """Schema or dimension violation; carries the offending field path."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# linear operators


class LinearOp:
    """Linear operator given as dense | identity | grad1d | grad2d.

    grad1d(n) is the (n-1) x n map x -> (x_1 - x_2, ..., x_{n-1} - x_n).
    grad2d(n1, n2) maps an n1 x n2 image (row-major vector) to the stacked
    forward differences: all vertical entries (x_{i+1,j} - x_{i,j}, zero in
    the last row) first, then all horizontal ones (x_{i,j+1} - x_{i,j}, zero
    in the last column), each block row-major over (i, j).
    """

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = params
        self._dense = self._materialize()

    @classmethod
    def dense(cls, matrix):
        return cls("dense", matrix=np.asarray(matrix, dtype=float))

    @classmethod
    def identity(cls, dim):
        return cls("identity", dim=int(dim))

    @classmethod
    def grad1d(cls, n):
        return cls("grad1d", n=int(n))

    @classmethod
    def grad2d(cls, n1, n2):
        return cls("grad2d", n1=int(n1), n2=int(n2))

    def _materialize(self):
        if self.kind == "dense":
            m = np.asarray(self.params["matrix"], dtype=float)
            if m.ndim != 2:
                raise ValueError("dense operator must be 2-D")
            if not np.all(np.isfinite(m)):
                raise ValueError("dense operator has non-finite entries")
            return m
        if self.kind == "identity":
            return np.eye(self.params["dim"])
        if self.kind == "grad1d":
            n = self.params["n"]
            if n < 2:
                raise ValueError("grad1d requires n >= 2")
            d = np.zeros((n - 1, n))
            for i in range(n - 1):
                d[i, i] = 1.0
                d[i, i + 1] = -1.0
            return d
        if self.kind == "grad2d":
            n1, n2 = self.params["n1"], self.params["n2"]
            if n1 < 1 or n2 < 1:
                raise ValueError("grad2d requires n1, n2 >= 1")
            m = np.zeros((2 * n1 * n2, n1 * n2))
            idx = lambda i, j: i * n2 + j
            for i in range(n1):
                for j in range(n2):
                    row = idx(i, j)
                    if i < n1 - 1:
                        m[row, idx(i + 1, j)] = 1.0
                        m[row, idx(i, j)] = -1.0
            for i in range(n1):
                for j in range(n2):
                    row = n1 * n2 + idx(i, j)
                    if j < n2 - 1:
                        m[row, idx(i, j + 1)] = 1.0
                        m[row, idx(i, j)] = -1.0
            return m
        raise ValueError(f"unknown operator kind {self.kind!r}")

    @property
    def shape(self):
        return self._dense.shape

    @property
    def rows(self):
        return self._dense.shape[0]

    @property
    def cols(self):
        return self._dense.shape[1]

    @property
    def is_identity(self):
        if self.kind == "identity":
            return True
        m = self._dense
        return m.shape[0] == m.shape[1] and np.array_equal(m, np.eye(m.shape[0]))

    def apply(self, x):
        return self._dense @ np.asarray(x, dtype=float)

    def apply_adjoint(self, y):
        return self._dense.T @ np.asarray(y, dtype=float)

    def op_norm(self):
        if self._dense.size == 0:
            return 0.0
        return float(np.linalg.norm(self._dense, 2))

    def to_json_dict(self):
        if self.kind == "dense":
            m = self._dense
            return {"kind": "dense", "rows": m.shape[0], "cols": m.shape[1],
                    "entries": [float(v) for v in m.ravel()]}
        if self.kind == "identity":
            return {"kind": "identity", "dim": self.params["dim"]}
        if self.kind == "grad1d":
            return {"kind": "grad1d", "n": self.params["n"]}
        return {"kind": "grad2d", "n1": self.params["n1"], "n2": self.params["n2"]}

    def __repr__(self):
        return f"LinearOp({self.kind}, shape={self.shape})"


def materialize(op):
    """Dense matrix of a LinearOp (exact integer entries for gradient kinds)."""
    return op._dense.copy()


# ---------------------------------------------------------------------------
# regularizer specification (behavior lives in regularizers.py)


@dataclass(frozen=True)
class RegularizerSpec:
    """Catalog entry: group_lasso | nuclear | polyhedral_indicator.

    group_lasso: weight * sum_J ||y_J|| over a partition of 0..dim-1.
    nuclear:     weight * nuclear norm of the m x n matrix vec'd row-major.
    polyhedral_indicator: indicator of {y : A y <= c}.
    """

    kind: str
    dim: int
    weight: float = 1.0
    groups: tuple = ()            # group_lasso: tuple of index tuples
    m: int = 0                    # nuclear
    n: int = 0
    matrix: tuple = ()            # polyhedral: rows of A, as tuples
    offset: tuple = ()            # polyhedral: c

    def __post_init__(self):
        if self.kind == "group_lasso":
            seen = sorted(i for g in self.groups for i in g)
            if seen != list(range(self.dim)):
                raise ValueError("group_lasso groups must partition 0..dim-1")
            if not self.weight > 0:
                raise ValueError("group_lasso weight must be positive")
        elif self.kind == "nuclear":
            if self.m * self.n != self.dim:
                raise ValueError("nuclear dim must equal m*n")
            if self.m > self.n:
                raise ValueError("nuclear requires m <= n (transpose the model)")
            if not self.weight > 0:
                raise ValueError("nuclear weight must be positive")
        elif self.kind == "polyhedral_indicator":
            a = self.A
            if a.shape[1] != self.dim:
                raise ValueError("polyhedral matrix columns must match dim")
            if len(self.offset) != a.shape[0]:
                raise ValueError("polyhedral offset length must match rows")
        else:
            raise ValueError(f"unknown regularizer kind {self.kind!r}")

    @property
    def A(self):
        return np.asarray([list(r) for r in self.matrix], dtype=float).reshape(
            len(self.matrix), self.dim if self.matrix else 0)

    @property
    def c(self):
        return np.asarray(self.offset, dtype=float)

    @property
    def group_slices(self):
        return [np.asarray(g, dtype=int) for g in self.groups]

    def to_json_dict(self):
        if self.kind == "group_lasso":
            return {"kind": "group_lasso", "dim": self.dim,
                    "groups": [list(g) for g in self.groups],
                    "weight": self.weight}
        if self.kind == "nuclear":
            return {"kind": "nuclear", "m": self.m, "n": self.n,
                    "weight": self.weight}
        a = self.A
        return {"kind": "polyhedral_indicator",
                "A": {"kind": "dense", "rows": a.shape[0], "cols": a.shape[1],
                      "entries": [float(v) for v in a.ravel()]},
                "c": [float(v) for v in self.c]}


def group_lasso(groups, dim, weight=1.0):
    return RegularizerSpec(kind="group_lasso", dim=dim, weight=weight,
                           groups=tuple(tuple(int(i) for i in g) for g in groups))


def l1(dim, weight=1.0):
    return group_lasso([[i] for i in range(dim)], dim, weight)


def nuclear(m, n, weight=1.0):
    return RegularizerSpec(kind="nuclear", dim=m * n, m=m, n=n, weight=weight)


def polyhedral_indicator(a, c):
    a = np.asarray(a, dtype=float)
    c = np.asarray(c, dtype=float)
    return RegularizerSpec(kind="polyhedral_indicator", dim=a.shape[1],
                           matrix=tuple(tuple(float(v) for v in row) for row in a),
                           offset=tuple(float(v) for v in c))


# ---------------------------------------------------------------------------
# instances and solution pairs


@dataclass
class ProblemInstance:
    phi: LinearOp
    b: np.ndarray
    mu: float
    k: LinearOp
    reg: RegularizerSpec
    tol: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if self.phi.cols != self.k.cols:
            raise InstanceError("k", "cols(K) must equal cols(Phi)")
        if len(self.b) != self.phi.rows:
            raise InstanceError("b", "len(b) must equal rows(Phi)")
        if self.reg.dim != self.k.rows:
            raise InstanceError("reg", "regularizer dim must equal rows(K)")
        if not self.mu > 0:
            raise InstanceError("mu", "mu must be positive")
        if not np.all(np.isfinite(self.b)):
            raise InstanceError("b", "entries must be finite")

    @property
    def dim_x(self):
        return self.phi.cols

    @property
    def dim_y(self):
        return self.k.rows

    def v_of(self, x):
        """v(x) = -(1/mu) Phi^T (Phi x - b)."""
        return -self.phi.apply_adjoint(self.phi.apply(x) - self.b) / self.mu

    def smooth_value(self, x):
        r = self.phi.apply(x) - self.b
        return float(r @ r) / (2.0 * self.mu)

    def smooth_grad(self, x):
        return self.phi.apply_adjoint(self.phi.apply(x) - self.b) / self.mu

    def perturbed(self, db=None, dmu=0.0):
        b = self.b if db is None else self.b + np.asarray(db, dtype=float)
        return ProblemInstance(self.phi, b, self.mu + dmu, self.k, self.reg, self.tol)

    def to_json_dict(self):
        out = {
            "phi": self.phi.to_json_dict(),
            "b": [float(v) for v in self.b],
            "mu": float(self.mu),
            "k": self.k.to_json_dict(),
            "reg": self.reg.to_json_dict(),
        }
        if self.tol != DEFAULT_TOL:
            out["tol"] = {"rank": self.tol.rank, "member": self.tol.member,
                          "kkt": self.tol.kkt}
        return out


@dataclass
class SolutionPair:
    """Primal-dual pair with v_bar = -(1/mu) Phi^T(Phi x_bar - b)."""

    x_bar: np.ndarray
    y_bar: np.ndarray
    v_bar: np.ndarray
    residuals: dict
    iterations: int = 0

    def to_json_dict(self):
        return {
            "x_bar": [float(v) for v in self.x_bar],
            "y_bar": [float(v) for v in self.y_bar],
            "v_bar": [float(v) for v in self.v_bar],
            "residuals": {k: float(v) for k, v in self.residuals.items()},
            "iterations": int(self.iterations),
        }


# ---------------------------------------------------------------------------
# JSON loading


def _need(doc, key, path):
    if key not in doc:
        raise InstanceError(f"{path}.{key}" if path else key, "missing required field")
    return doc[key]


def _number(value, path):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise InstanceError(path, f"expected a number, got {value!r}") from None
    if not np.isfinite(v):
        raise InstanceError(path, "value must be finite")
    return v


def _vector(value, path):
    if not isinstance(value, list):
        raise InstanceError(path, "expected an array of numbers")
    return np.asarray([_number(v, f"{path}[{i}]") for i, v in enumerate(value)])


def _load_operator(doc, path):
    if not isinstance(doc, dict):
        raise InstanceError(path, "expected an operator object")
    kind = _need(doc, "kind", path)
    if kind == "dense":
        rows = int(_need(doc, "rows", path))
        cols = int(_need(doc, "cols", path))
        entries = _vector(_need(doc, "entries", path), f"{path}.entries")
        if entries.size != rows * cols:
            raise InstanceError(f"{path}.entries",
                                f"expected {rows * cols} entries, got {entries.size}")
        return LinearOp.dense(entries.reshape(rows, cols))
    if kind == "identity":
        return LinearOp.identity(int(_need(doc, "dim", path)))
    if kind == "grad1d":
        n = int(_need(doc, "n", path))
        if n < 2:
            raise InstanceError(f"{path}.n", "grad1d requires n >= 2")
        return LinearOp.grad1d(n)
    if kind == "grad2d":
        return LinearOp.grad2d(int(_need(doc, "n1", path)),
                               int(_need(doc, "n2", path)))
    raise InstanceError(f"{path}.kind", f"unknown operator kind {kind!r}")


def _load_regularizer(doc, path):
    if not isinstance(doc, dict):
        raise InstanceError(path, "expected a regularizer object")
    kind = _need(doc, "kind", path)
    if kind == "group_lasso":
        dim = int(_need(doc, "dim", path))
        groups = _need(doc, "groups", path)
        weight = _number(_need(doc, "weight", path), f"{path}.weight")
        try:
            return group_lasso(groups, dim, weight)
        except ValueError as exc:
            raise InstanceError(path, str(exc)) from None
    if kind == "nuclear":
        m = int(_need(doc, "m", path))
        n = int(_need(doc, "n", path))
        weight = _number(_need(doc, "weight", path), f"{path}.weight")
        try:
            if m > n:
                raise ValueError("nuclear requires m <= n (transpose the model)")
            return nuclear(m, n, weight)
        except ValueError as exc:
            raise InstanceError(path, str(exc)) from None
    if kind == "polyhedral_indicator":
        a = materialize(_load_operator(_need(doc, "A", path), f"{path}.A"))
        c = _vector(_need(doc, "c", path), f"{path}.c")
        if c.size != a.shape[0]:
            raise InstanceError(f"{path}.c", "length must match rows of A")
        reg = polyhedral_indicator(a, c)
        from .regularizers import polyhedron_is_nonempty
        if not polyhedron_is_nonempty(a, c):
            raise InstanceError(path, "polyhedral set {y : A y <= c} is empty")
        return reg
    raise InstanceError(f"{path}.kind", f"unknown regularizer kind {kind!r}")


def load_instance(text):
    """Parse and validate an instance JSON document (string or dict)."""
    if isinstance(text, (str, bytes)):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceError("<document>", f"invalid JSON: {exc}") from None
    else:
        doc = text
    if not isinstance(doc, dict):
        raise InstanceError("<document>", "top level must be an object")
    phi = _load_operator(_need(doc, "phi", ""), "phi")
    b = _vector(_need(doc, "b", ""), "b")
    mu = _number(_need(doc, "mu", ""), "mu")
    if mu <= 0:
        raise InstanceError("mu", "mu must be positive")
    k = _load_operator(_need(doc, "k", ""), "k")
    reg = _load_regularizer(_need(doc, "reg", ""), "reg")
    tol = DEFAULT_TOL
    if "tol" in doc and doc["tol"] is not None:
        t = doc["tol"]
        if not isinstance(t, dict):
            raise InstanceError("tol", "expected an object")
        kw = {}
        for key in ("rank", "member", "kkt"):
            if key in t:
                kw[key] = _number(t[key], f"tol.{key}")
        tol = Tolerances(**kw)
    return ProblemInstance(phi=phi, b=b, mu=mu, k=k, reg=reg, tol=tol)


def instance_to_json(instance):
    return json.dumps(instance.to_json_dict(), sort_keys=True)


def instance_hash(instance):
    """sha256 of the canonical instance serialization."""
    return hashlib.sha256(instance_to_json(instance).encode()).hexdigest()
