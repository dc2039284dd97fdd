"""JSON instance files, bundled example instances, and seeded random instances.

File layout (UTF-8 JSON)::

    {"n": 2, "m": 2, "gamma": 0.9,
     "cost": [[...n...] x m],          # cost[u][i]
     "P": [[[...n...] x n] x m]}       # P[u][i][j]

Random instances draw from NumPy's Philox4x64-10 counter-based generator
keyed by the 64-bit seed, so a seed reproduces the same instance on every
platform and NumPy version that ships Philox.
"""

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InvalidInstance, IoError, ParseError, ValidationError
from .mdp import MdpInstance

LOAD_TOL = 1e-9
FIXTURES = ("example1", "example2")


def fixture_path(name):
    """Path of a bundled instance: ``example1`` (gamma 0.5) or ``example2`` (gamma 0.9).

    Both carry the two-state, two-action dynamics of the worked examples,
    with the examples' 1-based labels shifted to 0-based indices.
    """
    if name not in FIXTURES:
        raise KeyError(f"unknown fixture {name!r}; choose from {FIXTURES}")
    return Path(str(resources.files("pdmdp") / "data" / f"{name}.json"))


def _shape(value, shape, what):
    arr = np.asarray(value, dtype=object)
    if arr.shape != shape:
        raise ValidationError(f"{what} must have shape {shape}, got {arr.shape}")
    try:
        out = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"{what} must contain only numbers") from exc
    if any(isinstance(x, bool) for x in arr.ravel()):
        raise ValidationError(f"{what} must contain only numbers")
    return out


def from_dict(data, tol=LOAD_TOL):
    if not isinstance(data, dict):
        raise ValidationError("instance file must hold a JSON object")
    missing = {"n", "m", "gamma", "cost", "P"} - data.keys()
    if missing:
        raise ValidationError(f"missing keys: {sorted(missing)}")
    n, m = data["n"], data["m"]
    if not all(isinstance(x, int) and not isinstance(x, bool) and x >= 1 for x in (n, m)):
        raise ValidationError("n and m must be positive integers")
    gamma = data["gamma"]
    if isinstance(gamma, bool) or not isinstance(gamma, (int, float)):
        raise ValidationError("gamma must be a number")
    cost = _shape(data["cost"], (m, n), "cost")
    trans = _shape(data["P"], (m, n, n), "P")
    try:
        return MdpInstance(cost, trans, gamma, stochastic_tol=tol)
    except ValidationError:
        raise
    except InvalidInstance as exc:
        raise ValidationError(str(exc)) from exc


def loads(text, tol=LOAD_TOL):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, len(text[: exc.pos].encode("utf-8"))) from exc
    return from_dict(data, tol)


def load(path, tol=LOAD_TOL):
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("file is not valid UTF-8", exc.start) from exc
    return loads(text, tol)


def _num(x):
    return format(float(x), ".17g")


def _row(values):
    return "[" + ", ".join(_num(x) for x in values) + "]"


def dumps(inst):
    """Serialize with 17 significant digits so every double round-trips exactly."""
    pad = "  "
    cost = (",\n").join(pad * 2 + _row(r) for r in inst.cost)
    blocks = []
    for P in inst.trans:
        rows = (",\n").join(pad * 3 + _row(r) for r in P)
        blocks.append(f"{pad * 2}[\n{rows}\n{pad * 2}]")
    trans = ",\n".join(blocks)
    return (
        "{\n"
        f'{pad}"n": {inst.n},\n'
        f'{pad}"m": {inst.m},\n'
        f'{pad}"gamma": {_num(inst.gamma)},\n'
        f'{pad}"cost": [\n{cost}\n{pad}],\n'
        f'{pad}"P": [\n{trans}\n{pad}]\n'
        "}\n"
    )


def save(inst, path):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fp:
            fp.write(dumps(inst))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc.strerror or exc}") from exc


@dataclass(frozen=True)
class GeneratorSpec:
    n: int
    m: int
    gamma: float
    seed: int
    sparsity: float = 1.0
    cost_range: tuple = (0.0, 1.0)

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must lie in [0, 1), got {self.gamma!r}")
        if not 0.0 < self.sparsity <= 1.0:
            raise ValueError(f"sparsity must lie in (0, 1], got {self.sparsity!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        lo, hi = self.cost_range
        if not (np.isfinite(lo) and np.isfinite(hi) and lo <= hi):
            raise ValueError(f"invalid cost range {self.cost_range!r}")


def _stochastic_row(rng, n, sparsity):
    support = rng.random(n) < sparsity
    if not support.any():
        support[rng.integers(n)] = True
    weights = 1.0 - rng.random(n)
    weights[~support] = 0.0
    weights /= weights.sum()
    last = np.flatnonzero(support)[-1]
    weights[last] = 0.0
    weights[last] = 1.0 - weights.sum()
    return weights


def random_mdp(spec):
    """Seeded random instance; rows are drawn action-major, then costs."""
    rng = np.random.Generator(np.random.Philox(spec.seed))
    trans = np.empty((spec.m, spec.n, spec.n))
    for u in range(spec.m):
        for i in range(spec.n):
            trans[u, i] = _stochastic_row(rng, spec.n, spec.sparsity)
    lo, hi = spec.cost_range
    cost = rng.uniform(lo, hi, size=(spec.m, spec.n))
    return MdpInstance(cost, trans, spec.gamma)
