"""Shared domain types for score-and-search structure learning.

All types are frozen dataclasses holding tuples, so they hash, compare and
can be shared between threads without copying. Parent sets are sorted tuples
of variable indices; parent configuration ``j`` stores the value of the
``p``-th parent in bit ``p`` (lowest index = lowest bit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence, Union

import numpy as np

# Comparisons in pruning and search lean towards keeping candidates by this much.
SCORE_SLACK = 1e-9

ParentSet = tuple  # sorted tuple[int, ...]


class EbnslError(Exception):
    """Base class for errors raised by this package."""


class ParseError(EbnslError, ValueError):
    """Malformed input file."""


class InfeasibleCandidate(EbnslError, ValueError):
    """A noisy-OR candidate whose likelihood is zero on the data."""


class CapacityError(EbnslError):
    """Problem exceeds a configured size limit."""


class InconsistentEvidence(EbnslError, ValueError):
    """Evidence has zero probability under the network."""


class Rep(str, Enum):
    FULL_CPT = "T"
    NOISY_OR = "N"


def make_parent_set(members: Iterable[int]) -> ParentSet:
    """Sorted, duplicate-free tuple of parent indices."""
    ps = tuple(sorted(int(m) for m in members))
    if len(set(ps)) != len(ps):
        raise ValueError(f"duplicate parent in {ps}")
    if ps and ps[0] < 0:
        raise ValueError(f"negative parent index in {ps}")
    return ps


def parent_mask(parents: Iterable[int]) -> int:
    mask = 0
    for p in parents:
        mask |= 1 << p
    return mask


def mask_members(mask: int) -> ParentSet:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def encode_config(values: Sequence[int]) -> int:
    """Configuration index of a parent instantiation (value of parent p at bit p)."""
    j = 0
    for p, v in enumerate(values):
        if v not in (0, 1):
            raise ValueError(f"non-binary value {v!r}")
        j |= v << p
    return j


def decode_config(j: int, k: int) -> tuple:
    if not 0 <= j < (1 << k):
        raise ValueError(f"configuration {j} out of range for {k} parents")
    return tuple((j >> p) & 1 for p in range(k))


def config_bits(k: int) -> np.ndarray:
    """``(2**k, k)`` 0/1 matrix; row j is the decoded configuration j."""
    j = np.arange(1 << k)[:, None]
    return ((j >> np.arange(k)[None, :]) & 1).astype(np.int64)


@dataclass(frozen=True)
class Dataset:
    names: tuple
    values: np.ndarray = field(repr=False, compare=False)

    def __post_init__(self):
        names = tuple(str(n) for n in self.names)
        object.__setattr__(self, "names", names)
        values = np.asarray(self.values)
        if values.ndim != 2:
            raise ValueError("values must be a 2-D matrix")
        if values.shape[1] != len(names):
            raise ValueError(f"{values.shape[1]} columns but {len(names)} names")
        if len(names) < 1:
            raise ValueError("dataset needs at least one variable")
        if values.shape[0] < 1:
            raise ValueError("dataset needs at least one instance")
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        if not np.isin(values, (0, 1)).all():
            raise ValueError("every cell must be 0 or 1")
        values = values.astype(np.uint8)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def N(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"unknown variable {name!r}") from None


@dataclass(frozen=True)
class CountVector:
    """Counts ``n_jk`` of child value k under parent configuration j."""

    child: int
    parents: ParentSet
    table: np.ndarray = field(repr=False, compare=False)  # shape (2**k, 2)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.int64)
        if t.shape != (1 << len(self.parents), 2):
            raise ValueError(f"count table shape {t.shape} does not match {len(self.parents)} parents")
        if (t < 0).any():
            raise ValueError("counts must be non-negative")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    @property
    def n_j(self) -> np.ndarray:
        return self.table.sum(axis=1)

    @property
    def N(self) -> int:
        return int(self.table.sum())


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table; ``rows[j] = (P(child=0|j), P(child=1|j))``."""

    rows: tuple

    def __post_init__(self):
        rows = tuple((float(a), float(b)) for a, b in self.rows)
        for a, b in rows:
            if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0) or abs(a + b - 1.0) > 1e-12:
                raise ValueError(f"invalid CPT row {(a, b)}")
        n_rows = len(rows)
        if n_rows == 0 or n_rows & (n_rows - 1):
            raise ValueError("CPT needs a power-of-two number of rows")
        object.__setattr__(self, "rows", rows)

    @classmethod
    def from_array(cls, arr) -> "Cpt":
        return cls(tuple(map(tuple, np.asarray(arr, dtype=float))))

    def as_array(self) -> np.ndarray:
        return np.array(self.rows, dtype=float)

    @property
    def n_parents(self) -> int:
        return len(self.rows).bit_length() - 1


@dataclass(frozen=True)
class NoisyOrParams:
    """Inhibitor probabilities, one per parent: P(child=0 | only that parent on)."""

    q: tuple

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        for v in q:
            if not 0.0 < v < 1.0:
                raise ValueError(f"noisy-OR parameter {v} outside (0, 1)")
        object.__setattr__(self, "q", q)

    def as_array(self) -> np.ndarray:
        return np.array(self.q, dtype=float)


@dataclass(frozen=True)
class Representation:
    """CPD family of a local score.

    ``params`` may be None when the representation is known but its parameters
    were not carried along (e.g. full-CPT lines read back from a score file).
    """

    tag: Rep
    params: Optional[Union[Cpt, NoisyOrParams]] = None

    def __post_init__(self):
        object.__setattr__(self, "tag", Rep(self.tag))
        if self.params is None:
            if self.tag is Rep.NOISY_OR:
                raise ValueError("noisy-OR representation needs its parameters")
            return
        want = Cpt if self.tag is Rep.FULL_CPT else NoisyOrParams
        if not isinstance(self.params, want):
            raise TypeError(f"{self.tag.name} expects {want.__name__}, got {type(self.params).__name__}")


@dataclass(frozen=True)
class LocalScore:
    child: int
    parents: ParentSet
    representation: Representation
    score: float

    def __post_init__(self):
        parents = make_parent_set(self.parents)
        object.__setattr__(self, "parents", parents)
        if self.child in parents:
            raise ValueError(f"node {self.child} cannot be its own parent")
        if not math.isfinite(self.score):
            raise ValueError("local scores must be finite")
        params = self.representation.params
        if isinstance(params, Cpt) and params.n_parents != len(parents):
            raise ValueError("CPT size does not match parent count")
        if isinstance(params, NoisyOrParams) and len(params.q) != len(parents):
            raise ValueError("noisy-OR parameter count does not match parent count")
        if self.representation.tag is Rep.NOISY_OR and not parents:
            raise ValueError("noisy-OR needs at least one parent")

    @property
    def rep(self) -> Rep:
        return self.representation.tag

    @property
    def mask(self) -> int:
        return parent_mask(self.parents)

    @property
    def key(self) -> tuple:
        return (self.child, self.parents, self.rep.value)


@dataclass(frozen=True)
class ScoreTable:
    """Per-node candidate lists, each sorted ascending by score."""

    names: tuple
    entries: tuple  # entries[i] = tuple of LocalScore for node i

    def __post_init__(self):
        names = tuple(self.names)
        if len(names) != len(self.entries):
            raise ValueError("one entry list per variable required")
        fixed = []
        for i, lst in enumerate(self.entries):
            lst = tuple(sorted(lst, key=lambda e: (e.score, len(e.parents), e.parents, e.rep.value)))
            if not lst:
                raise ValueError(f"node {names[i]} has no candidate parent sets")
            for e in lst:
                if e.child != i:
                    raise ValueError(f"entry for node {e.child} listed under node {i}")
                if any(p >= len(names) for p in e.parents):
                    raise ValueError(f"parent index out of range in {e}")
            fixed.append(lst)
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "entries", tuple(fixed))

    @property
    def n(self) -> int:
        return len(self.names)

    def __getitem__(self, node: int) -> tuple:
        return self.entries[node]


def is_acyclic(parent_sets: Sequence[Iterable[int]]) -> bool:
    """True iff ``parent_sets[i]`` (parents of node i) induce a DAG."""
    n = len(parent_sets)
    indeg = [0] * n
    children: list = [[] for _ in range(n)]
    for v, ps in enumerate(parent_sets):
        for p in ps:
            if p == v:
                return False
            children[p].append(v)
            indeg[v] += 1
    stack = [v for v in range(n) if indeg[v] == 0]
    seen = 0
    while stack:
        u = stack.pop()
        seen += 1
        for c in children[u]:
            indeg[c] -= 1
            if indeg[c] == 0:
                stack.append(c)
    return seen == n


@dataclass(frozen=True)
class Network:
    """One chosen local score per node; node order follows ``LocalScore.child``."""

    names: tuple
    nodes: tuple
    score: float = field(init=False)

    def __post_init__(self):
        names = tuple(self.names)
        nodes = tuple(sorted(self.nodes, key=lambda e: e.child))
        if [e.child for e in nodes] != list(range(len(names))):
            raise ValueError("network needs exactly one local score per variable")
        if not is_acyclic([e.parents for e in nodes]):
            raise ValueError("parent sets contain a directed cycle")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "score", math.fsum(e.score for e in nodes))

    @property
    def n(self) -> int:
        return len(self.names)

    def parents_of(self, node: int) -> ParentSet:
        return self.nodes[node].parents


@dataclass(frozen=True)
class CredibleSet:
    epsilon: float
    opt: float
    networks: tuple
    truncated: bool = False

    def __len__(self) -> int:
        return len(self.networks)

    def keys(self) -> set:
        return {canonicalize(net) for net in self.networks}


def canonicalize(network: Network) -> tuple:
    """Hashable key: per node, sorted parents and representation tag."""
    return tuple((e.parents, e.rep.value) for e in sorted(network.nodes, key=lambda e: e.child))


def epsilon_from_bayes_factor(bf: float) -> float:
    if not bf > 1:
        raise ValueError(f"Bayes factor must exceed 1, got {bf}")
    return math.log(bf)
