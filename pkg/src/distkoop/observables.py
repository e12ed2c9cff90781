"""Observable families: state functions and their lifts to distributions.

State functions (indicators, Gaussians, monomials, registered customs)
act pointwise on states. Distribution observables either lift a state
function linearly, h(pi) = E_pi[h_hat], or combine two state functions
quadratically as a mean-of-product E_pi[h1*h2] or a product-of-means
E_pi[h1]*E_pi[h2]; the difference of the two quadratic forms at equal
indices is exactly the variance.

An :class:`ObservableBank` is an ordered family; the order is the index
contract for every fitted operator matrix and is serialized with it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EvaluationError
from .measures import TWO_PI, EmpiricalMeasure

STATE_KINDS = ("indicator_bin", "gaussian", "monomial", "custom")

CUSTOM_STATE_FUNCTIONS = {
    "identity": lambda x: np.asarray(x, dtype=float),
    "cos1": np.cos,
    "sin1": np.sin,
    "cos2": lambda x: np.cos(2.0 * x),
    "sin2": lambda x: np.sin(2.0 * x),
    "cos3": lambda x: np.cos(3.0 * x),
    "sin3": lambda x: np.sin(3.0 * x),
    "cos4": lambda x: np.cos(4.0 * x),
    "sin4": lambda x: np.sin(4.0 * x),
}


def register_state_function(name: str, fn) -> None:
    """Expose a custom state function to banks and serialized descriptors."""
    CUSTOM_STATE_FUNCTIONS[name] = fn


@dataclass(frozen=True)
class StateObservable:
    """A scalar function on the state space, evaluable on sample batches."""

    kind: str
    i: int = 0          # indicator_bin: 1-based bin index
    n: int = 0          # indicator_bin: number of bins
    center: float = 0.0  # gaussian
    width: float = 1.0   # gaussian
    degree: int = 0      # monomial
    name: str = ""       # custom

    def __post_init__(self):
        if self.kind not in STATE_KINDS:
            raise ValueError(f"unknown state observable kind {self.kind!r}")
        if self.kind == "indicator_bin" and not (1 <= self.i <= self.n):
            raise ValueError(f"indicator bin index {self.i} outside 1..{self.n}")
        if self.kind == "gaussian" and self.width <= 0:
            raise ValueError("gaussian width must be positive")
        if self.kind == "custom" and self.name not in CUSTOM_STATE_FUNCTIONS:
            raise ValueError(f"unregistered custom state function {self.name!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "indicator_bin":
            xr = np.mod(x, TWO_PI)
            lo = TWO_PI * (self.i - 1) / self.n
            hi = TWO_PI * self.i / self.n
            return ((xr >= lo) & (xr < hi)).astype(float)
        if self.kind == "gaussian":
            z = (x - self.center) / self.width
            return np.exp(-0.5 * z * z)
        if self.kind == "monomial":
            return np.ones_like(x) if self.degree == 0 else x**self.degree
        return np.asarray(CUSTOM_STATE_FUNCTIONS[self.name](x), dtype=float)

    def default_label(self) -> str:
        if self.kind == "indicator_bin":
            return f"bin{self.i}/{self.n}"
        if self.kind == "gaussian":
            return f"gauss@{self.center:g}"
        if self.kind == "monomial":
            return f"x^{self.degree}"
        return self.name


LINEAR = "linear"
MEAN_OF_PRODUCT = "mean_of_product"      # p-type: E[h1*h2]
PRODUCT_OF_MEANS = "product_of_means"    # q-type: E[h1]*E[h2]

DIST_KINDS = (LINEAR, MEAN_OF_PRODUCT, PRODUCT_OF_MEANS)


@dataclass(frozen=True)
class DistObservable:
    """A functional on empirical measures, built from state functions."""

    kind: str
    left: StateObservable
    right: StateObservable | None = None
    label: str = ""

    def __post_init__(self):
        if self.kind not in DIST_KINDS:
            raise ValueError(f"unknown distribution observable kind {self.kind!r}")
        if self.kind == LINEAR and self.right is not None:
            raise ValueError("linear observables take a single state function")
        if self.kind != LINEAR and self.right is None:
            raise ValueError(f"{self.kind} observables need two state functions")
        if not self.label:
            object.__setattr__(self, "label", self._default_label())

    def _default_label(self) -> str:
        if self.kind == LINEAR:
            return self.left.default_label()
        tag = "p" if self.kind == MEAN_OF_PRODUCT else "q"
        return f"{tag}[{self.left.default_label()},{self.right.default_label()}]"

    @property
    def is_linear(self) -> bool:
        return self.kind == LINEAR

    def __call__(self, mu: EmpiricalMeasure) -> float:
        return self.evaluate(mu, {})

    def evaluate(self, mu: EmpiricalMeasure, cache: dict) -> float:
        """Evaluate on a measure, reusing state-function values via ``cache``."""
        lvals = _cached_values(self.left, mu, cache)
        if self.kind == LINEAR:
            return float(mu.weights @ lvals)
        rvals = _cached_values(self.right, mu, cache)
        if self.kind == MEAN_OF_PRODUCT:
            return float(mu.weights @ (lvals * rvals))
        return float(mu.weights @ lvals) * float(mu.weights @ rvals)


def _cached_values(obs: StateObservable, mu: EmpiricalMeasure, cache: dict) -> np.ndarray:
    vals = cache.get(obs)
    if vals is None:
        vals = np.asarray(obs(mu.states()), dtype=float)
        if vals.shape != (mu.n_samples,):
            vals = np.broadcast_to(vals, (mu.n_samples,)).astype(float)
        bad = ~np.isfinite(vals)
        if np.any(bad):
            raise EvaluationError(
                f"state observable '{obs.default_label()}' returned non-finite value "
                f"at sample {int(np.argmax(bad))}"
            )
        cache[obs] = vals
    return vals


@dataclass(frozen=True)
class ObservableBank:
    """Ordered family of distribution observables; order defines matrix indices."""

    observables: tuple[DistObservable, ...]

    def __post_init__(self):
        obs = tuple(self.observables)
        if not obs:
            raise ValueError("bank must contain at least one observable")
        object.__setattr__(self, "observables", obs)

    def __len__(self) -> int:
        return len(self.observables)

    def __iter__(self):
        return iter(self.observables)

    def __getitem__(self, idx) -> DistObservable:
        return self.observables[idx]

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(o.label for o in self.observables)

    def evaluate(self, mu: EmpiricalMeasure) -> np.ndarray:
        """Vector of all observable values on one measure."""
        cache: dict = {}
        out = np.empty(len(self.observables))
        for i, obs in enumerate(self.observables):
            try:
                out[i] = obs.evaluate(mu, cache)
            except EvaluationError as exc:
                raise EvaluationError(f"{exc} (bank row {i})") from None
        return out

    def state_functions(self) -> tuple[StateObservable, ...]:
        """Underlying state functions; requires an all-linear bank."""
        if not all(o.is_linear for o in self.observables):
            raise ValueError("bank contains quadratic observables; no state-function view")
        return tuple(o.left for o in self.observables)


def evaluate_bank(bank: ObservableBank, measures) -> np.ndarray:
    """Matrix of bank values: entry (i, j) is observable i on measure j."""
    n = len(bank)
    out = np.empty((n, len(measures)))
    for j, mu in enumerate(measures):
        try:
            out[:, j] = bank.evaluate(mu)
        except EvaluationError as exc:
            raise EvaluationError(f"{exc} (measure column {j})") from None
    return out


# ---------------------------------------------------------------------------
# Bank constructors
# ---------------------------------------------------------------------------


def indicator_bank(n: int) -> ObservableBank:
    """Linear lifts of the n half-open circle-bin indicators partitioning [0, 2*pi)."""
    if n < 1:
        raise ValueError("need at least one bin")
    obs = tuple(
        DistObservable(kind=LINEAR, left=StateObservable(kind="indicator_bin", i=i, n=n))
        for i in range(1, n + 1)
    )
    return ObservableBank(observables=obs)


def gaussian_bank(centers, width: float = 1.0) -> ObservableBank:
    """Linear lifts of unit-height Gaussians at the given centers, in order."""
    centers = [float(c) for c in np.atleast_1d(centers)]
    if not centers:
        raise ValueError("need at least one center")
    obs = tuple(
        DistObservable(kind=LINEAR, left=StateObservable(kind="gaussian", center=c, width=width))
        for c in centers
    )
    return ObservableBank(observables=obs)


def monomial_bank(degrees) -> ObservableBank:
    """Linear lifts of x^d for each degree, in order."""
    obs = tuple(
        DistObservable(kind=LINEAR, left=StateObservable(kind="monomial", degree=int(d)))
        for d in degrees
    )
    return ObservableBank(observables=obs)


def custom_bank(names) -> ObservableBank:
    """Linear lifts of registered custom state functions, in order."""
    obs = tuple(
        DistObservable(kind=LINEAR, left=StateObservable(kind="custom", name=str(nm)))
        for nm in names
    )
    return ObservableBank(observables=obs)


def pq_pairs(n_centers: int) -> list[tuple[int, int]]:
    """Index pairs (i, j), 1-based, i <= j, in lexicographic order."""
    return [(i, j) for i in range(1, n_centers + 1) for j in range(i, n_centers + 1)]


def pq_pair_index(i: int, j: int, n_centers: int) -> int:
    """0-based position of pair (i, j), i <= j, within one block."""
    if not (1 <= i <= j <= n_centers):
        raise ValueError(f"pair ({i},{j}) outside 1 <= i <= j <= {n_centers}")
    before = (i - 1) * n_centers - (i - 1) * (i - 2) // 2
    return before + (j - i)


def pq_bank(centers, width: float = 1.0) -> ObservableBank:
    """Quadratic bank over Gaussian state functions.

    All mean-of-product observables p[i,j] (i <= j, lexicographic) come
    first, followed by the product-of-means observables q[i,j] in the same
    pair order; with c centers the bank has c*(c+1) entries.
    """
    centers = [float(c) for c in np.atleast_1d(centers)]
    if not centers:
        raise ValueError("need at least one center")
    base = [StateObservable(kind="gaussian", center=c, width=width) for c in centers]
    pairs = pq_pairs(len(centers))
    p_obs = [
        DistObservable(
            kind=MEAN_OF_PRODUCT, left=base[i - 1], right=base[j - 1], label=f"p[{i},{j}]"
        )
        for i, j in pairs
    ]
    q_obs = [
        DistObservable(
            kind=PRODUCT_OF_MEANS, left=base[i - 1], right=base[j - 1], label=f"q[{i},{j}]"
        )
        for i, j in pairs
    ]
    return ObservableBank(observables=tuple(p_obs + q_obs))


def variance_coeff(i: int, n_centers: int) -> np.ndarray:
    """Coefficient vector extracting Var[h_hat_i] from a pq-bank value vector.

    +1 at the p-block position of pair (i, i) and -1 at the matching
    q-block position; the inner product with pq-bank values equals the
    variance of the i-th base function under the measure.
    """
    if not (1 <= i <= n_centers):
        raise ValueError(f"center index {i} outside 1..{n_centers}")
    n_pairs = n_centers * (n_centers + 1) // 2
    w = np.zeros(2 * n_pairs)
    idx = pq_pair_index(i, i, n_centers)
    w[idx] = 1.0
    w[n_pairs + idx] = -1.0
    return w


# ---------------------------------------------------------------------------
# Descriptors (serialization)
# ---------------------------------------------------------------------------


def _state_descriptor(obs: StateObservable) -> dict:
    d = {"kind": obs.kind}
    if obs.kind == "indicator_bin":
        d.update(i=obs.i, n=obs.n)
    elif obs.kind == "gaussian":
        d.update(center=obs.center, width=obs.width)
    elif obs.kind == "monomial":
        d.update(degree=obs.degree)
    else:
        d.update(name=obs.name)
    return d


def _state_from_descriptor(d: dict) -> StateObservable:
    return StateObservable(
        kind=d["kind"],
        i=int(d.get("i", 0)),
        n=int(d.get("n", 0)),
        center=float(d.get("center", 0.0)),
        width=float(d.get("width", 1.0)),
        degree=int(d.get("degree", 0)),
        name=str(d.get("name", "")),
    )


def bank_to_descriptors(bank: ObservableBank) -> list[dict]:
    """JSON-ready descriptor list: one {kind, params, label} per observable."""
    out = []
    for obs in bank:
        params = {"left": _state_descriptor(obs.left)}
        if obs.right is not None:
            params["right"] = _state_descriptor(obs.right)
        out.append({"kind": obs.kind, "params": params, "label": obs.label})
    return out


def bank_from_descriptors(descriptors: list[dict]) -> ObservableBank:
    obs = tuple(
        DistObservable(
            kind=d["kind"],
            left=_state_from_descriptor(d["params"]["left"]),
            right=_state_from_descriptor(d["params"]["right"]) if "right" in d["params"] else None,
            label=d.get("label", ""),
        )
        for d in descriptors
    )
    return ObservableBank(observables=obs)
