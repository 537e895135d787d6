"""Nonnegative matrix factorization over compound-target activity.

The interaction matrix holds transformed activity values (potent = high).
Two trainers share one multiplicative-update core: plain alternating
updates, and a similarity-regularized variant whose update pulls the latent
rows of similar compounds toward each other.  With a zero regularization
weight the two produce bit-identical iterates, and the objective value is
recorded every iteration so convergence can be audited after the fact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .errors import (
    FactorizationError,
    FormatError,
    NoInteractionsError,
    UnknownCompoundError,
    UnknownTargetError,
)
from .similarity import SimilarityMatrix

WEAK_INTERACTION_VALUE = 1.0
_LINEAR_RANGE_MAX_NM = 10_000.0

# Pairwise-penalty evaluation is chunked to bound peak memory on large
# similarity graphs.
_PAIR_CHUNK = 200_000


def transform_activity(value_nm):
    """Map an activity value in nM to its interaction-matrix entry.

    Values above 10,000 nM become the weak-interaction constant 1.0; values
    in [0, 10,000] map linearly onto [10, 5] via (20,000 - value) / 2,000,
    so more potent (smaller) values get larger entries.
    """
    value = float(value_nm)
    if not math.isfinite(value) or value < 0:
        raise ValueError(
            f"activity value must be finite and non-negative, got {value_nm!r}")
    if value > _LINEAR_RANGE_MAX_NM:
        return WEAK_INTERACTION_VALUE
    return (20_000.0 - value) / 2_000.0


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for both trainers.

    `lam` is the similarity-regularization weight; the plain trainer
    ignores it.  `epsilon_guard` is added to update denominators so an
    all-zero row cannot divide by zero.
    """

    rank: int = 50
    lam: float = 0.1
    max_iters: int = 200
    rel_tol: float = 1e-5
    epsilon_guard: float = 1e-12
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ValueError("rank must be a positive integer")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.max_iters < 1:
            raise ValueError("max_iters must be a positive integer")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.epsilon_guard > 0:
            raise ValueError("epsilon_guard must be positive")


@dataclass(frozen=True, eq=False)
class InteractionMatrix:
    """Sparse nonnegative compound x target matrix of transformed activities."""

    compounds: tuple[str, ...]
    targets: tuple[str, ...]
    matrix: sp.csr_matrix

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def n_entries(self):
        return self.matrix.nnz

    @cached_property
    def compound_pos(self):
        return {c: i for i, c in enumerate(self.compounds)}

    @cached_property
    def target_pos(self):
        return {t: j for j, t in enumerate(self.targets)}

    def value(self, compound, target):
        """Stored entry for an id pair (0.0 when unstored)."""
        try:
            i = self.compound_pos[compound]
        except KeyError:
            raise UnknownCompoundError(f"unknown compound {compound!r}") from None
        try:
            j = self.target_pos[target]
        except KeyError:
            raise UnknownTargetError(f"unknown target {target!r}") from None
        return float(self.matrix[i, j])


def build_interaction_matrix(corpus, activity_types="IC50"):
    """Build the interaction matrix from a corpus.

    `activity_types` may be one type name, a collection of names, or None
    for all types.  Rows and columns are restricted to compounds/targets
    with at least one qualifying record; each entry is the transform of the
    minimum (most potent) value across the qualifying records of the pair.
    """
    if activity_types is None:
        allowed = None
    elif isinstance(activity_types, str):
        allowed = {activity_types}
    else:
        allowed = set(activity_types)

    best = {}
    for record in corpus.iter_activities():
        if allowed is not None and record.activity_type not in allowed:
            continue
        key = (record.compound, record.target)
        prev = best.get(key)
        if prev is None or record.value_nm < prev:
            best[key] = record.value_nm

    if not best:
        wanted = "any type" if allowed is None else ", ".join(sorted(allowed))
        raise NoInteractionsError(f"no activity record matches type filter ({wanted})")

    compounds = tuple(sorted({c for c, _ in best}))
    targets = tuple(sorted({t for _, t in best}))
    compound_pos = {c: i for i, c in enumerate(compounds)}
    target_pos = {t: j for j, t in enumerate(targets)}

    rows = np.empty(len(best), dtype=np.int64)
    cols = np.empty(len(best), dtype=np.int64)
    data = np.empty(len(best), dtype=np.float64)
    for k, ((c, t), value) in enumerate(sorted(best.items())):
        rows[k] = compound_pos[c]
        cols[k] = target_pos[t]
        data[k] = transform_activity(value)

    matrix = sp.csr_matrix(
        (data, (rows, cols)), shape=(len(compounds), len(targets)))
    return InteractionMatrix(compounds, targets, matrix)


# -- matrix plumbing ---------------------------------------------------------

def _as_csr(X):
    """Accept an InteractionMatrix, scipy sparse, or dense array; return CSR."""
    if isinstance(X, InteractionMatrix):
        return X.matrix
    if sp.issparse(X):
        return X.tocsr()
    return sp.csr_matrix(np.asarray(X, dtype=np.float64))


def _index_tuples(X, n, m):
    """Row/column id tuples for a training input (synthesized when raw)."""
    if isinstance(X, InteractionMatrix):
        return X.compounds, X.targets
    return tuple(str(i) for i in range(n)), tuple(str(j) for j in range(m))


def _similarity_parts(S, X, n_rows):
    """Validate S against X and return (symmetric CSR, degree vector,
    upper-triangle triplets) or (None, None, None)."""
    if S is None:
        return None, None, None
    if isinstance(S, SimilarityMatrix):
        if isinstance(X, InteractionMatrix):
            if S.compounds != X.compounds:
                raise FactorizationError(
                    "similarity matrix compound index does not match the "
                    "interaction matrix rows")
        elif S.n_compounds != n_rows:
            raise FactorizationError(
                f"similarity index size {S.n_compounds} does not match "
                f"matrix rows {n_rows}")
        return S.to_csr(), S.degrees(), S.triplets()

    S_csr = sp.csr_matrix(np.asarray(S, dtype=np.float64)) if not sp.issparse(S) \
        else S.tocsr().astype(np.float64)
    if S_csr.shape != (n_rows, n_rows):
        raise FactorizationError(
            f"similarity matrix shape {S_csr.shape} does not match "
            f"matrix rows {n_rows}")
    if (S_csr != S_csr.T).nnz != 0:
        raise FactorizationError("similarity matrix must be symmetric")
    if S_csr.diagonal().any():
        raise FactorizationError("similarity matrix must have a zero diagonal")
    if S_csr.nnz and S_csr.data.min() < 0:
        raise FactorizationError("similarity values must be non-negative")
    degrees = np.asarray(S_csr.sum(axis=1)).ravel()
    upper = sp.triu(S_csr, k=1).tocoo()
    return S_csr, degrees, (upper.row, upper.col, upper.data)


def _fit_term(X_csr, U, V):
    """0.5 * ||X - U V^T||_F^2 without densifying X (Gram expansion)."""
    xv = X_csr @ V
    x_sq = float((X_csr.data ** 2).sum())
    cross = float(np.sum(xv * U))
    uv_sq = float(np.sum((U.T @ U) * (V.T @ V)))
    return 0.5 * (x_sq - 2.0 * cross + uv_sq)


def _penalty_term(triplets, U, lam):
    """(lam/2) * sum over stored pairs of S_ij ||u_i - u_j||^2."""
    rows, cols, vals = triplets
    total = 0.0
    for lo in range(0, len(vals), _PAIR_CHUNK):
        hi = lo + _PAIR_CHUNK
        diff = U[rows[lo:hi]] - U[cols[lo:hi]]
        total += float(np.sum(vals[lo:hi] * np.einsum("ij,ij->i", diff, diff)))
    return 0.5 * lam * total


def objective(X, U, V, S=None, lam=0.0):
    """Training objective.

    J = 0.5 ||X - U V^T||_F^2 + (lam/2) * sum_{i<j} S_ij ||u_i - u_j||^2

    Unstored entries of X count as zeros (dense Frobenius semantics); the
    penalty sums each unordered compound pair once, which makes its
    gradient with respect to U exactly lam * (D - S) U.
    """
    X_csr = _as_csr(X)
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    n, m = X_csr.shape
    if U.ndim != 2 or V.ndim != 2 or U.shape[0] != n or V.shape[0] != m \
            or U.shape[1] != V.shape[1]:
        raise ValueError(
            f"shape mismatch: X {X_csr.shape}, U {U.shape}, V {V.shape}")
    value = _fit_term(X_csr, U, V)
    if S is None or lam == 0.0:
        return value
    _, _, triplets = _similarity_parts(S, X, n)
    return value + _penalty_term(triplets, U, lam)


@dataclass(frozen=True, eq=False)
class FactorModel:
    """Trained factors with their config and per-iteration objective trace.

    `objective_trace[0]` is the objective at initialization; entry t is the
    value after iteration t.  `regularized` records whether the similarity
    penalty was active during training.
    """

    U: np.ndarray
    V: np.ndarray
    compounds: tuple[str, ...]
    targets: tuple[str, ...]
    config: TrainConfig
    objective_trace: np.ndarray
    converged: bool
    regularized: bool = False

    @property
    def rank(self):
        return self.U.shape[1]

    @cached_property
    def compound_pos(self):
        return {c: i for i, c in enumerate(self.compounds)}

    @cached_property
    def target_pos(self):
        return {t: j for j, t in enumerate(self.targets)}

    def row_of(self, compound):
        try:
            return self.compound_pos[compound]
        except KeyError:
            raise UnknownCompoundError(
                f"compound {compound!r} is not in the model") from None

    def col_of(self, target):
        try:
            return self.target_pos[target]
        except KeyError:
            raise UnknownTargetError(
                f"target {target!r} is not in the model") from None

    def predict(self, row, col):
        """Reconstructed score u_i . v_j for a (row, col) position pair."""
        if not 0 <= row < self.U.shape[0]:
            raise IndexError(f"row {row} out of range [0, {self.U.shape[0]})")
        if not 0 <= col < self.V.shape[0]:
            raise IndexError(f"col {col} out of range [0, {self.V.shape[0]})")
        return float(self.U[row] @ self.V[col])

    def score_targets(self, row):
        """Scores of one compound row against every target."""
        if not 0 <= row < self.U.shape[0]:
            raise IndexError(f"row {row} out of range [0, {self.U.shape[0]})")
        return self.U[row] @ self.V.T


def _train_core(X, S, lam, config, on_iteration):
    X_csr = _as_csr(X)
    n, m = X_csr.shape
    if config.rank > min(n, m):
        raise FactorizationError(
            f"rank {config.rank} exceeds min(rows, cols) = {min(n, m)}")
    if X_csr.nnz and X_csr.data.min() < 0:
        raise FactorizationError("input matrix must be nonnegative")
    S_csr, degrees, triplets = _similarity_parts(S, X, n)
    regularize = lam > 0.0 and S_csr is not None

    rng = np.random.default_rng(config.seed)
    mean = X_csr.sum() / (n * m)
    scale = math.sqrt(mean / config.rank)
    # uniform on (0, 1], scaled so the initial reconstruction magnitude is
    # on the order of the data mean
    U = (1.0 - rng.random((n, config.rank))) * scale
    V = (1.0 - rng.random((m, config.rank))) * scale

    eps = config.epsilon_guard

    def current_objective(U, V):
        value = _fit_term(X_csr, U, V)
        if regularize:
            value += _penalty_term(triplets, U, lam)
        return value

    trace = [current_objective(U, V)]
    converged = False
    for iteration in range(1, config.max_iters + 1):
        XV = X_csr @ V
        gram_v = V.T @ V
        if regularize:
            U *= (XV + lam * (S_csr @ U)) / (U @ gram_v + lam * degrees[:, None] * U + eps)
        else:
            U *= XV / (U @ gram_v + eps)
        XtU = X_csr.T @ U
        gram_u = U.T @ U
        V *= XtU / (V @ gram_u + eps)
        if __debug__:
            assert (U >= 0.0).all() and (V >= 0.0).all()

        value = current_objective(U, V)
        if not (math.isfinite(value)
                and np.isfinite(U).all() and np.isfinite(V).all()):
            raise FactorizationError(
                f"non-finite value encountered at iteration {iteration}")
        trace.append(value)
        if on_iteration is not None:
            on_iteration(iteration, U, V, value)

        previous = trace[-2]
        if previous == 0.0 or (previous - value) < config.rel_tol * previous:
            converged = True
            break

    compounds, targets = _index_tuples(X, n, m)
    return FactorModel(
        U=U, V=V, compounds=compounds, targets=targets, config=config,
        objective_trace=np.asarray(trace), converged=converged,
        regularized=regularize)


def train_nmf(X, config, on_iteration=None):
    """Train plain NMF by alternating multiplicative updates.

    U <- U * (X V) / (U V^T V + eps);  V <- V * (X^T U) / (V U^T U + eps).
    Factors are initialized uniform-random in (0, 1] from `config.seed`, so
    the same seed reproduces the model bit for bit.  `on_iteration(it, U, V,
    J)`, when given, is called after every update for diagnostics.
    """
    return _train_core(X, None, 0.0, config, on_iteration)


def train_csnmf(X, S, config, on_iteration=None):
    """Train similarity-regularized NMF.

    With D the diagonal row-sum of S, the compound-side update becomes
    U <- U * (X V + lam S U) / (U V^T V + lam D U + eps); the target side is
    unchanged.  With lam = 0 this reproduces :func:`train_nmf` exactly,
    iterate for iterate.
    """
    if S is None:
        raise FactorizationError("train_csnmf requires a similarity matrix")
    return _train_core(X, S, config.lam, config, on_iteration)


# -- model container ---------------------------------------------------------

_MODEL_MAGIC = "#repurpose-factor-model\tv1"


def _fmt(x):
    return format(float(x), ".17g")


def save_model(model, path):
    """Write a model as a line-based TSV container (17 significant digits,
    so floats round-trip exactly)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_MODEL_MAGIC + "\n")
        fh.write("[config]\n")
        fh.write(f"rank\t{model.config.rank}\n")
        fh.write(f"lambda\t{_fmt(model.config.lam)}\n")
        fh.write(f"max_iters\t{model.config.max_iters}\n")
        fh.write(f"rel_tol\t{_fmt(model.config.rel_tol)}\n")
        fh.write(f"epsilon_guard\t{_fmt(model.config.epsilon_guard)}\n")
        fh.write(f"seed\t{model.config.seed}\n")
        fh.write(f"converged\t{int(model.converged)}\n")
        fh.write(f"regularized\t{int(model.regularized)}\n")
        fh.write("[compounds]\n")
        for c in model.compounds:
            fh.write(c + "\n")
        fh.write("[targets]\n")
        for t in model.targets:
            fh.write(t + "\n")
        fh.write("[U]\n")
        for row in model.U:
            fh.write("\t".join(_fmt(x) for x in row) + "\n")
        fh.write("[V]\n")
        for row in model.V:
            fh.write("\t".join(_fmt(x) for x in row) + "\n")
        fh.write("[trace]\n")
        for value in model.objective_trace:
            fh.write(_fmt(value) + "\n")


def load_model(path):
    """Read a model container written by :func:`save_model`."""
    sections = {"config": [], "compounds": [], "targets": [],
                "U": [], "V": [], "trace": []}
    current = None
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\r\n")
        if first != _MODEL_MAGIC:
            raise FormatError(path, 1, "not a factor-model file")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.rstrip("\r\n")
            if not line:
                continue
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1]
                if name not in sections:
                    raise FormatError(path, lineno, f"unknown section {name!r}")
                current = name
                continue
            if current is None:
                raise FormatError(path, lineno, "content before first section")
            sections[current].append((lineno, line))

    fields = {}
    for lineno, line in sections["config"]:
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(path, lineno, "bad config line")
        fields[parts[0]] = parts[1]
    try:
        config = TrainConfig(
            rank=int(fields["rank"]),
            lam=float(fields["lambda"]),
            max_iters=int(fields["max_iters"]),
            rel_tol=float(fields["rel_tol"]),
            epsilon_guard=float(fields["epsilon_guard"]),
            seed=int(fields["seed"]),
        )
        converged = bool(int(fields["converged"]))
        regularized = bool(int(fields.get("regularized", "0")))
    except (KeyError, ValueError) as exc:
        raise FormatError(path, 0, f"bad or missing config field: {exc}") from None

    compounds = tuple(line for _, line in sections["compounds"])
    targets = tuple(line for _, line in sections["targets"])

    def parse_rows(name, expected_rows):
        rows = []
        for lineno, line in sections[name]:
            try:
                rows.append([float(x) for x in line.split("\t")])
            except ValueError:
                raise FormatError(path, lineno, f"bad float in [{name}]") from None
        arr = np.asarray(rows, dtype=np.float64)
        if arr.shape != (expected_rows, config.rank):
            raise FormatError(
                path, 0,
                f"[{name}] has shape {arr.shape}, expected "
                f"({expected_rows}, {config.rank})")
        return arr

    U = parse_rows("U", len(compounds))
    V = parse_rows("V", len(targets))
    trace = np.asarray([float(line) for _, line in sections["trace"]])
    return FactorModel(U=U, V=V, compounds=compounds, targets=targets,
                       config=config, objective_trace=trace,
                       converged=converged, regularized=regularized)
