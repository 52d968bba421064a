"""Semi-Markov model: embedded transition matrix plus sojourn-time specification.

A model carries either explicit raw-moment matrices ``e^(1..R)`` or a
parametric sojourn distribution for every positive-probability transition.
Distribution models are lowered to moment matrices before any passage-time
computation.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special

from smpfpt import _rng
from smpfpt._json import dumps
from smpfpt.errors import DomainError, ModelFormatError, UnsupportedOperationError

STOCHASTIC_TOL = 1e-9
JENSEN_RTOL = 1e-12

# family name -> (kernel code, parameter names in kernel order)
FAMILIES = {
    "deterministic": (_rng.DETERMINISTIC, ("value",)),
    "exponential": (_rng.EXPONENTIAL, ("rate",)),
    "uniform": (_rng.UNIFORM, ("low", "high")),
    "gamma": (_rng.GAMMA, ("shape", "scale")),
    "lognormal": (_rng.LOGNORMAL, ("mu", "sigma")),
}


@dataclass(frozen=True)
class SojournDist:
    """A sojourn-time distribution on ``[0, inf)``.

    Examples
    --------
    >>> SojournDist("exponential", {"rate": 2.0}).moment(1)
    0.5
    """

    family: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DomainError(f"unknown sojourn family {self.family!r}")
        names = FAMILIES[self.family][1]
        if set(self.params) != set(names):
            raise DomainError(
                f"{self.family} takes parameters {list(names)}, got {sorted(self.params)}"
            )
        vals = {k: float(v) for k, v in self.params.items()}
        if not all(math.isfinite(v) for v in vals.values()):
            raise DomainError(f"{self.family} parameters must be finite")
        ok = {
            "deterministic": lambda q: q["value"] >= 0,
            "exponential": lambda q: q["rate"] > 0,
            "uniform": lambda q: 0 <= q["low"] < q["high"],
            "gamma": lambda q: q["shape"] > 0 and q["scale"] > 0,
            "lognormal": lambda q: q["sigma"] >= 0,
        }[self.family](vals)
        if not ok:
            raise DomainError(f"invalid {self.family} parameters {vals}")
        object.__setattr__(self, "params", vals)

    @classmethod
    def deterministic(cls, value):
        return cls("deterministic", {"value": value})

    @classmethod
    def exponential(cls, rate):
        return cls("exponential", {"rate": rate})

    @classmethod
    def uniform(cls, low, high):
        return cls("uniform", {"low": low, "high": high})

    @classmethod
    def gamma(cls, shape, scale):
        return cls("gamma", {"shape": shape, "scale": scale})

    @classmethod
    def lognormal(cls, mu, sigma):
        return cls("lognormal", {"mu": mu, "sigma": sigma})

    @property
    def code(self):
        return FAMILIES[self.family][0]

    def kernel_params(self):
        names = FAMILIES[self.family][1]
        vals = [self.params[n] for n in names]
        return vals[0], (vals[1] if len(vals) > 1 else 0.0)

    def moment(self, r):
        """Raw moment ``E[X^r]`` in closed form."""
        if r < 0 or int(r) != r:
            raise DomainError(f"moment order must be a nonnegative integer, got {r}")
        r = int(r)
        q = self.params
        if self.family == "deterministic":
            return q["value"] ** r
        if self.family == "exponential":
            return math.factorial(r) / q["rate"] ** r
        if self.family == "uniform":
            a, b = q["low"], q["high"]
            return (b ** (r + 1) - a ** (r + 1)) / ((r + 1) * (b - a))
        if self.family == "gamma":
            # rising factorial k (k+1) ... (k+r-1), exact for integer r
            return math.prod(q["shape"] + i for i in range(r)) * q["scale"] ** r
        return math.exp(r * q["mu"] + 0.5 * r * r * q["sigma"] ** 2)

    def cdf(self, x):
        """Right-continuous distribution function."""
        x = float(x)
        q = self.params
        if x < 0:
            return 0.0
        if self.family == "deterministic":
            return 1.0 if x >= q["value"] else 0.0
        if self.family == "exponential":
            return -math.expm1(-q["rate"] * x)
        if self.family == "uniform":
            return min(max((x - q["low"]) / (q["high"] - q["low"]), 0.0), 1.0)
        if self.family == "gamma":
            return float(special.gammainc(q["shape"], x / q["scale"]))
        if x == 0:
            return 0.0
        if q["sigma"] == 0:
            return 1.0 if math.log(x) >= q["mu"] else 0.0
        return 0.5 * math.erfc(-(math.log(x) - q["mu"]) / (q["sigma"] * math.sqrt(2.0)))

    def to_dict(self):
        return {"family": self.family, "params": dict(self.params)}


def _frozen(a):
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class SmpModel:
    """State names, embedded transition matrix ``p`` and sojourn specification.

    Exactly one of ``moments`` (sequence of m x m raw-moment matrices, order
    1 first) and ``distributions`` (m x m nested sequence of
    :class:`SojournDist` or ``None``) must be given. Construction does not
    validate; call :func:`validate`.
    """

    p: np.ndarray
    moments: tuple = None
    distributions: tuple = None
    state_names: tuple = None

    def __post_init__(self):
        if (self.moments is None) == (self.distributions is None):
            raise ModelFormatError("give exactly one of moments or distributions")
        object.__setattr__(self, "p", _frozen(self.p))
        if self.moments is not None:
            object.__setattr__(self, "moments", tuple(_frozen(e) for e in self.moments))
        else:
            object.__setattr__(self, "distributions",
                               tuple(tuple(row) for row in self.distributions))
        names = self.state_names
        if names is None:
            names = [str(i + 1) for i in range(self.p.shape[0] if self.p.ndim else 0)]
        object.__setattr__(self, "state_names", tuple(str(s) for s in names))

    @property
    def m(self):
        return self.p.shape[0]

    @property
    def flavor(self):
        return "moments" if self.moments is not None else "distributions"

    @property
    def max_order(self):
        """Highest available moment order (``None`` means unbounded)."""
        return len(self.moments) if self.moments is not None else None

    def moment_matrices(self, order):
        """Raw-moment matrices ``e^(1..order)``."""
        if order < 1:
            raise DomainError(f"moment order must be >= 1, got {order}")
        if self.moments is not None:
            if order > len(self.moments):
                raise DomainError(
                    f"model provides moments up to order {len(self.moments)}, {order} requested"
                )
            return list(self.moments[:order])
        return moments_from_distributions(self.distributions, order)

    def state_index(self, label):
        """Resolve a state name or 1-based index string to a 0-based index."""
        label = str(label)
        if label in self.state_names:
            return self.state_names.index(label)
        try:
            k = int(label)
        except ValueError:
            raise DomainError(f"unknown state {label!r}") from None
        if not 1 <= k <= self.m:
            raise DomainError(f"state index {k} out of range 1..{self.m}")
        return k - 1

    def to_dict(self):
        out = {"states": list(self.state_names), "p": self.p.tolist()}
        if self.moments is not None:
            out["moments"] = {"orders": [e.tolist() for e in self.moments]}
        else:
            out["distributions"] = [[None if d is None else d.to_dict() for d in row]
                                    for row in self.distributions]
        return out

    def __eq__(self, other):
        if not isinstance(other, SmpModel):
            return NotImplemented
        return self.to_dict() == other.to_dict()


def moments_from_distributions(dists, order):
    """Lower a distribution matrix to raw-moment matrices ``e^(1..order)``.

    Cells without a distribution get 0; they are never read because the
    matching transition probability is zero.
    """
    if order < 1:
        raise DomainError(f"moment order must be >= 1, got {order}")
    m = len(dists)
    out = [np.zeros((m, m)) for _ in range(order)]
    for i, row in enumerate(dists):
        for j, d in enumerate(row):
            if d is None:
                continue
            for r in range(order):
                out[r][i, j] = d.moment(r + 1)
    return out


def kernel_at(model, i, j, x):
    """Semi-Markov kernel ``Q_ij(x) = p_ij F_ij(x)``."""
    if model.flavor != "distributions":
        raise UnsupportedOperationError("kernel_at needs a distribution-flavored model")
    if x < 0:
        raise DomainError("kernel_at requires x >= 0")
    pij = float(model.p[i, j])
    d = model.distributions[i][j]
    if pij == 0.0 or d is None:
        return 0.0
    if math.isinf(x):
        return pij
    return pij * d.cdf(x)


def kernel_arrays(model):
    """Per-cell family codes and the two kernel parameters, for the simulators."""
    m = model.m
    code = np.zeros((m, m), dtype=np.int64)
    pa = np.zeros((m, m))
    pb = np.zeros((m, m))
    for i, row in enumerate(model.distributions):
        for j, d in enumerate(row):
            if d is not None and model.p[i, j] > 0:
                code[i, j] = d.code
                pa[i, j], pb[i, j] = d.kernel_params()
    return code, pa, pb


# ---------------------------------------------------------------- validation

@dataclass(frozen=True)
class Diagnostic:
    """One violated invariant. ``location`` holds 0-based indices."""

    code: str
    message: str
    location: tuple = ()

    def __str__(self):
        return self.message


def validate(model):
    """Check every model invariant; return a (possibly empty) list of diagnostics."""
    diags = []
    p = np.asarray(model.p)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
        return [Diagnostic("shape", f"p must be n x n with n > 1, got shape {p.shape}")]
    m = p.shape[0]
    if len(model.state_names) != m:
        diags.append(Diagnostic("states", f"{len(model.state_names)} state names for {m} states"))
    elif len(set(model.state_names)) != m:
        diags.append(Diagnostic("states", "state names must be unique"))
    if not np.all(np.isfinite(p)):
        return diags + [Diagnostic("finite", "p has non-finite entries")]
    for i, j in zip(*np.nonzero(p < 0)):
        diags.append(Diagnostic("nonnegative", f"p[{i + 1},{j + 1}] = {p[i, j]} is negative", (i, j)))
    for i, s in enumerate(p.sum(axis=1)):
        if abs(s - 1.0) > STOCHASTIC_TOL:
            diags.append(Diagnostic(
                "stochastic", f"p is not a stochastic matrix: row {i + 1} sums to {s!r}", (i,)))
    support = p > 0
    if model.moments is not None:
        diags.extend(_validate_moments(model.moments, support, m))
    else:
        diags.extend(_validate_distributions(model.distributions, support, m))
    return diags


def _validate_moments(moments, support, m):
    diags = []
    if len(moments) == 0:
        return [Diagnostic("moments", "moment list is empty")]
    for r, e in enumerate(moments, start=1):
        if e.shape != (m, m):
            diags.append(Diagnostic(
                "shape", f"moment matrix of order {r} must be {m} x {m}, got {e.shape}", (r - 1,)))
            continue
        if not np.all(np.isfinite(e[support])):
            diags.append(Diagnostic("finite", f"moment matrix of order {r} has non-finite entries", (r - 1,)))
            continue
        for i, j in zip(*np.nonzero(support & (e < 0))):
            diags.append(Diagnostic(
                "nonnegative", f"e^({r})[{i + 1},{j + 1}] = {e[i, j]} is negative", (r - 1, i, j)))
    if diags or len(moments) < 2:
        return diags
    e1, e2 = moments[0], moments[1]
    bad = support & (e2 < e1 * e1 * (1 - JENSEN_RTOL))
    for i, j in zip(*np.nonzero(bad)):
        diags.append(Diagnostic(
            "jensen",
            f"second moment {e2[i, j]} below squared mean {e1[i, j] ** 2} at [{i + 1},{j + 1}]",
            (i, j)))
    return diags


def _validate_distributions(dists, support, m):
    if len(dists) != m or any(len(row) != m for row in dists):
        return [Diagnostic("shape", f"distribution matrix must be {m} x {m}")]
    diags = []
    for i, j in zip(*np.nonzero(support)):
        d = dists[i][j]
        if d is None:
            diags.append(Diagnostic(
                "distribution", f"transition {i + 1}->{j + 1} has p > 0 but no sojourn distribution", (i, j)))
        elif not isinstance(d, SojournDist):
            diags.append(Diagnostic("distribution", f"cell [{i + 1},{j + 1}] is not a SojournDist", (i, j)))
    return diags


# ---------------------------------------------------------------- JSON model files

_TOP_KEYS = {"states", "p", "moments", "distributions"}


def _matrix(obj, what):
    if not isinstance(obj, list) or not all(isinstance(row, list) for row in obj):
        raise ModelFormatError(f"{what} must be an array of arrays")
    if obj and len({len(row) for row in obj}) != 1:
        raise ModelFormatError(f"{what} rows have unequal lengths")
    for row in obj:
        for v in row:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ModelFormatError(f"{what} entries must be numbers, got {v!r}")
    return np.array(obj, dtype=np.float64).reshape(len(obj), len(obj[0]) if obj else 0)


def model_from_dict(obj):
    if not isinstance(obj, dict):
        raise ModelFormatError("model must be a JSON object")
    unknown = set(obj) - _TOP_KEYS
    if unknown:
        raise ModelFormatError(f"unknown key(s): {', '.join(sorted(unknown))}")
    for key in ("states", "p"):
        if key not in obj:
            raise ModelFormatError(f"missing key {key!r}")
    if ("moments" in obj) == ("distributions" in obj):
        raise ModelFormatError("exactly one of 'moments' or 'distributions' is required")
    states = obj["states"]
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        raise ModelFormatError("'states' must be an array of strings")
    p = _matrix(obj["p"], "p")
    if "moments" in obj:
        mom = obj["moments"]
        if not isinstance(mom, dict) or set(mom) != {"orders"}:
            raise ModelFormatError("'moments' must be an object with the single key 'orders'")
        if not isinstance(mom["orders"], list):
            raise ModelFormatError("'moments.orders' must be an array of matrices")
        orders = [_matrix(e, f"moments.orders[{r}]") for r, e in enumerate(mom["orders"])]
        return SmpModel(p, moments=orders, state_names=states)
    rows = obj["distributions"]
    if not isinstance(rows, list) or not all(isinstance(row, list) for row in rows):
        raise ModelFormatError("'distributions' must be an array of arrays")
    dists = []
    for i, row in enumerate(rows):
        out = []
        for j, cell in enumerate(row):
            if cell is None:
                out.append(None)
                continue
            if not isinstance(cell, dict) or set(cell) != {"family", "params"}:
                raise ModelFormatError(
                    f"distributions[{i}][{j}] must be null or {{'family', 'params'}}")
            try:
                out.append(SojournDist(cell["family"], dict(cell["params"])))
            except (DomainError, TypeError, ValueError) as exc:
                raise ModelFormatError(f"distributions[{i}][{j}]: {exc}") from None
        dists.append(out)
    return SmpModel(p, distributions=dists, state_names=states)


def loads_model(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(
            f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return model_from_dict(obj)


def read_model(path):
    return loads_model(Path(path).read_text(encoding="utf-8"))


def write_model(model, path):
    Path(path).write_text(dumps(model.to_dict(), fmt=None) + "\n", encoding="utf-8")
