"""Read-once oblivious branching programs as matrix-valued functions.

States are 1-indexed in every public interface (maps, JSON, evaluate);
internally the 0-indexed arrays ``Layer.arrays`` are used.  Layer i of a
program reads input bit ``order[i]`` (1-indexed), so B[x] = B'[pi(x)] with
B' the ordered core.

B[x] is the w x w 0/1 matrix with B[x](u, v) = 1 iff the program started in
u ends in v.  Matrix products compose left to right: B[x] = M_1 M_2 ... M_n.

A program may carry an optional ``head`` state map applied before layer 1.
It only arises from collapsing leading fixed layers (and is absent from
every program built any other way).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bits import all_strings, as_bits, to_int
from .errors import CapExceeded, ClassError, ProgramError

KINDS = ("permutation", "regular", "general")
ENUM_CAP_BITS = 30
TAU = 1e-9


def kind_rank(kind: str) -> int:
    return KINDS.index(kind)


def _map_kind(map0: np.ndarray, map1: np.ndarray | None, w: int) -> str:
    if map1 is None:
        return "permutation" if np.unique(map0).size == w else "general"
    if np.unique(map0).size == w and np.unique(map1).size == w:
        return "permutation"
    indeg = np.bincount(np.concatenate([map0, map1]), minlength=w)
    return "regular" if np.all(indeg == 2) else "general"


def _check_map(m, w: int, name: str) -> tuple[int, ...]:
    out = tuple(int(v) for v in m)
    if len(out) != w:
        raise ProgramError(f"{name} has length {len(out)}, expected width {w}")
    for i, v in enumerate(out):
        if not 1 <= v <= w:
            raise ProgramError(f"{name}[{i + 1}] = {v} is not a state in 1..{w}")
    return out


@dataclass(frozen=True)
class Layer:
    """One transition pair: state u goes to map0[u] on bit 0, map1[u] on bit 1."""

    map0: tuple[int, ...]
    map1: tuple[int, ...]

    def __post_init__(self):
        w = len(self.map0)
        if w < 1:
            raise ProgramError("layer width must be at least 1")
        object.__setattr__(self, "map0", _check_map(self.map0, w, "map0"))
        object.__setattr__(self, "map1", _check_map(self.map1, w, "map1"))

    @property
    def width(self) -> int:
        return len(self.map0)

    @cached_property
    def arrays(self) -> np.ndarray:
        """(2, w) 0-indexed successor table."""
        return np.array([self.map0, self.map1], dtype=np.int64) - 1

    @cached_property
    def kind(self) -> str:
        a = self.arrays
        return _map_kind(a[0], a[1], self.width)

    @cached_property
    def matrices(self) -> np.ndarray:
        """(2, w, w) transition matrices M0, M1."""
        w = self.width
        out = np.zeros((2, w, w))
        rows = np.arange(w)
        out[0, rows, self.arrays[0]] = 1.0
        out[1, rows, self.arrays[1]] = 1.0
        return out

    def after(self, f: np.ndarray) -> Layer:
        """This layer followed by the 0-indexed state map f."""
        a = f[self.arrays] + 1
        return Layer(tuple(a[0]), tuple(a[1]))

    def before(self, f: np.ndarray) -> Layer:
        """The 0-indexed state map f followed by this layer."""
        a = self.arrays[:, f] + 1
        return Layer(tuple(a[0]), tuple(a[1]))


def make_layer(map0, map1) -> Layer:
    map0, map1 = list(map0), list(map1)
    if len(map0) != len(map1):
        raise ProgramError(f"map0 has {len(map0)} entries, map1 has {len(map1)}")
    return Layer(tuple(map0), tuple(map1))


def _map_matrix(f: np.ndarray, w: int) -> np.ndarray:
    out = np.zeros((w, w))
    out[np.arange(w), f] = 1.0
    return out


@dataclass(frozen=True)
class BranchingProgram:
    width: int
    layers: tuple[Layer, ...] = ()
    order: tuple[int, ...] | None = None
    head: tuple[int, ...] | None = None

    def __post_init__(self):
        w = int(self.width)
        if w < 1:
            raise ProgramError("width must be at least 1")
        object.__setattr__(self, "width", w)
        layers = tuple(self.layers)
        for i, L in enumerate(layers):
            if not isinstance(L, Layer):
                raise ProgramError(f"layer {i + 1} is not a Layer")
            if L.width != w:
                raise ProgramError(f"layer {i + 1} has width {L.width}, program width {w}")
        object.__setattr__(self, "layers", layers)
        n = len(layers)
        order = tuple(range(1, n + 1)) if self.order is None else tuple(int(v) for v in self.order)
        if sorted(order) != list(range(1, n + 1)):
            raise ProgramError(f"order {list(order)} is not a permutation of 1..{n}")
        object.__setattr__(self, "order", order)
        if self.head is not None:
            head = _check_map(self.head, w, "head")
            object.__setattr__(self, "head", None if head == tuple(range(1, w + 1)) else head)

    @property
    def n(self) -> int:
        return len(self.layers)

    @property
    def is_ordered(self) -> bool:
        return self.order == tuple(range(1, self.n + 1))

    @cached_property
    def read(self) -> np.ndarray:
        """0-indexed input position read by each layer."""
        return np.array(self.order, dtype=np.int64) - 1

    @cached_property
    def kind(self) -> str:
        r = max((kind_rank(L.kind) for L in self.layers), default=0)
        if self.head is not None:
            r = max(r, kind_rank(_map_kind(self.head_array, None, self.width)))
        return KINDS[r]

    @cached_property
    def head_array(self) -> np.ndarray:
        if self.head is None:
            return np.arange(self.width)
        return np.array(self.head, dtype=np.int64) - 1

    @cached_property
    def tables(self) -> np.ndarray:
        """(n, 2, w) 0-indexed successor tables."""
        if not self.layers:
            return np.zeros((0, 2, self.width), dtype=np.int64)
        return np.stack([L.arrays for L in self.layers])

    @cached_property
    def stack(self) -> np.ndarray:
        """(n, 2, w, w) transition matrices."""
        if not self.layers:
            return np.zeros((0, 2, self.width, self.width))
        return np.stack([L.matrices for L in self.layers])

    def head_matrix(self) -> np.ndarray:
        return _map_matrix(self.head_array, self.width)

    def as_fn(self) -> LayeredFn:
        return LayeredFn(self.width, self.n, self.stack, self.read, self.head_matrix())

    def __call__(self, x) -> np.ndarray:
        return as_matrix(self, x)


def classify(program: BranchingProgram) -> str:
    return program.kind


# ---------- matrix-valued functions


@dataclass(frozen=True, eq=False)
class LayeredFn:
    """x -> H A_1[x] A_2[x] ... A_L[x] with each A_i depending on one input bit.

    ``read[i]`` is the 0-indexed input bit layer i depends on, or -1 for a
    constant layer (then mats[i, 0] is used).  Every input is read by at
    most one layer.  Programs, restrictions and collapses all live here.
    """

    width: int
    n: int
    mats: np.ndarray
    read: np.ndarray
    head: np.ndarray | None = None

    def __post_init__(self):
        read = np.asarray(self.read, dtype=np.int64)
        live = read[read >= 0]
        if live.size != np.unique(live).size or (live.size and live.max() >= self.n):
            raise ProgramError("layered function must read each input at most once")
        object.__setattr__(self, "read", read)
        if self.head is None:
            object.__setattr__(self, "head", np.eye(self.width))

    def __call__(self, x) -> np.ndarray:
        x = as_bits(x, self.n)
        return self.batch(x[None, :])[0]

    def batch(self, X: np.ndarray) -> np.ndarray:
        """(N, n) bit matrix -> (N, w, w)."""
        X = np.asarray(X)
        if X.ndim != 2 or X.shape[1] != self.n:
            raise ProgramError(f"inputs must have {self.n} bits")
        N = X.shape[0]
        acc = np.broadcast_to(self.head, (N, self.width, self.width)).copy()
        for i, r in enumerate(self.read):
            if r < 0:
                acc = acc @ self.mats[i, 0]
            else:
                acc = acc @ self.mats[i][X[:, r].astype(np.int64)]
        return acc

    def table(self, max_bits: int = ENUM_CAP_BITS) -> np.ndarray:
        """All 2^n values, row r at the input whose bits are those of r."""
        if self.n > max_bits:
            raise CapExceeded(f"tabulating 2^{self.n} inputs exceeds cap 2^{max_bits}")
        return self.batch(all_strings(self.n))

    def mean_layers(self) -> np.ndarray:
        """Per-layer average over the read bit (constant layers unchanged)."""
        avg = self.mats.mean(axis=1)
        const = self.read < 0
        avg[const] = self.mats[const, 0]
        return avg


@dataclass(frozen=True, eq=False)
class TabulatedFn:
    """An arbitrary matrix-valued function given by its full table (2^n, w, w)."""

    values: np.ndarray

    @property
    def n(self) -> int:
        return int(self.values.shape[0]).bit_length() - 1

    @property
    def width(self) -> int:
        return int(self.values.shape[1])

    def __call__(self, x) -> np.ndarray:
        return self.values[to_int(as_bits(x, self.n))]

    def batch(self, X: np.ndarray) -> np.ndarray:
        idx = (np.asarray(X, dtype=np.int64) << np.arange(self.n)).sum(axis=1)
        return self.values[idx]

    def table(self, max_bits: int = ENUM_CAP_BITS) -> np.ndarray:
        return self.values


def as_fn(obj):
    if isinstance(obj, BranchingProgram):
        return obj.as_fn()
    return obj


# ---------- evaluation


def _check_input(program: BranchingProgram, x) -> np.ndarray:
    try:
        return as_bits(x, program.n)
    except ValueError as e:
        raise ProgramError(str(e)) from None


def evaluate(program: BranchingProgram, x, u0: int = 1) -> int:
    """Final state B[x](u0), 1-indexed."""
    x = _check_input(program, x)
    if not 1 <= u0 <= program.width:
        raise ProgramError(f"start state {u0} not in 1..{program.width}")
    u = int(program.head_array[u0 - 1])
    for L, r in zip(program.layers, program.read):
        u = int(L.arrays[x[r], u])
    return u + 1


def final_states(program: BranchingProgram, X: np.ndarray) -> np.ndarray:
    """(N, n) inputs -> (N, w) 0-indexed final states, one column per start state."""
    X = np.asarray(X)
    if X.ndim != 2 or X.shape[1] != program.n:
        raise ProgramError(f"inputs must have {program.n} bits")
    N = X.shape[0]
    S = np.broadcast_to(program.head_array, (N, program.width)).copy()
    tabs = program.tables
    for i, r in enumerate(program.read):
        bit = X[:, r].astype(bool)[:, None]
        S = np.where(bit, tabs[i, 1][S], tabs[i, 0][S])
    return S


def transition_counts(program: BranchingProgram, X: np.ndarray) -> np.ndarray:
    """sum over rows x of X of B[x], as a (w, w) count matrix."""
    w = program.width
    S = final_states(program, X)
    flat = (np.arange(w)[None, :] * w + S).ravel()
    return np.bincount(flat, minlength=w * w).reshape(w, w).astype(float)


def as_matrix(program: BranchingProgram, x) -> np.ndarray:
    x = _check_input(program, x)
    S = final_states(program, x[None, :])[0]
    return _map_matrix(S, program.width)


# ---------- composition


def concat(A: BranchingProgram, B: BranchingProgram) -> BranchingProgram:
    """A then B on the concatenated input x o y."""
    if A.width != B.width:
        raise ProgramError(f"width mismatch: {A.width} vs {B.width}")
    layers = list(A.layers)
    head = A.head
    if B.head is not None:
        if layers:
            layers[-1] = layers[-1].after(B.head_array)
        else:
            head = tuple(B.head_array[A.head_array] + 1)
    order = A.order + tuple(v + A.n for v in B.order)
    return BranchingProgram(A.width, tuple(layers) + B.layers, order, head)


def subprogram(program: BranchingProgram, i: int, j: int) -> BranchingProgram:
    """Layers i..j (1-indexed, inclusive) of an ordered program."""
    if not program.is_ordered:
        raise ProgramError("subprogram needs an ordered program; apply the order first")
    if not 1 <= i <= j <= program.n:
        raise ProgramError(f"bad layer range [{i}, {j}] for length {program.n}")
    head = program.head if i == 1 else None
    return BranchingProgram(program.width, program.layers[i - 1:j], None, head)


def ordered_core(program: BranchingProgram) -> BranchingProgram:
    """Same layers read in layer order: B[x] = core[pi(x)]."""
    return BranchingProgram(program.width, program.layers, None, program.head)


def identity_program(w: int, n: int = 0) -> BranchingProgram:
    ident = tuple(range(1, w + 1))
    return BranchingProgram(w, tuple(Layer(ident, ident) for _ in range(n)))


# ---------- expectation, restriction, collapse


def expectation(fn, dist=None, max_bits: int = ENUM_CAP_BITS) -> np.ndarray:
    """E_X[B[X]] for a program or layered/tabulated function."""
    from .dists import Enumerated, Product, SeedSampler, Uniform

    fn = as_fn(fn)
    dist = Uniform() if dist is None else dist
    if isinstance(dist, (Uniform, Product)) and isinstance(fn, LayeredFn):
        means = dist.means(fn.n)
        acc = fn.head.copy()
        for i, r in enumerate(fn.read):
            if r < 0:
                acc = acc @ fn.mats[i, 0]
            else:
                p = means[r]
                acc = acc @ ((1 - p) * fn.mats[i, 0] + p * fn.mats[i, 1])
        return acc
    if isinstance(dist, Uniform):
        return fn.table(max_bits).mean(axis=0)
    if isinstance(dist, Product):
        vals = fn.table(max_bits)
        return np.tensordot(dist.probabilities(fn.n), vals, axes=1)
    if isinstance(dist, Enumerated):
        pts, wts = dist.points, dist.weights
        return np.tensordot(wts, fn.batch(pts), axes=1)
    if isinstance(dist, SeedSampler):
        pts = dist.support(max_bits)
        return fn.batch(pts).mean(axis=0)
    raise TypeError(f"unsupported distribution {dist!r}")


def restrict(fn, t) -> LayeredFn:
    """x -> E_U[B[Select(t, x, U)]]: layers reading outside t are averaged."""
    f = as_fn(fn)
    if not isinstance(f, LayeredFn):
        raise TypeError("restrict needs a program or layered function")
    try:
        t = as_bits(t, f.n)
    except ValueError as e:
        raise ProgramError(str(e)) from None
    mats = f.mats.copy()
    for i, r in enumerate(f.read):
        if r >= 0 and not t[r]:
            mats[i, :] = f.mats[i].mean(axis=0)
    return LayeredFn(f.width, f.n, mats, f.read, f.head)


def _collapse_plan(n: int, t, x):
    try:
        t = as_bits(t, n)
        x = as_bits(x, n)
    except ValueError as e:
        raise ProgramError(str(e)) from None
    rank = np.cumsum(1 - t.astype(np.int64)) - 1
    return t, x, rank


def collapse_fn(fn, t, x) -> LayeredFn:
    """y -> B[Select(t, x, y)] for any class, as a layered function of n - |t| bits."""
    f = as_fn(fn)
    t, x, rank = _collapse_plan(f.n, t, x)
    read = f.read.copy()
    mats = f.mats.copy()
    for i, r in enumerate(f.read):
        if r < 0:
            continue
        if t[r]:
            mats[i, :] = f.mats[i, x[r]]
            read[i] = -1
        else:
            read[i] = rank[r]
    return LayeredFn(f.width, int(f.n - t.sum()), mats, read, f.head)


def collapse(program: BranchingProgram, t, x) -> BranchingProgram:
    """The permutation program y -> B[Select(t, x, y)] on n - |t| bits.

    Fixed layers are folded into the preceding free layer, or into the head
    when no free layer precedes them.
    """
    if program.kind != "permutation":
        raise ClassError(f"collapse undefined for {program.kind} programs; use collapse_fn")
    t, x, rank = _collapse_plan(program.n, t, x)
    w = program.width
    head = program.head_array.copy()
    layers: list[Layer] = []
    order: list[int] = []
    for L, r in zip(program.layers, program.read):
        if t[r]:
            f = L.arrays[x[r]]
            if layers:
                layers[-1] = layers[-1].after(f)
            else:
                head = f[head]
        else:
            layers.append(L)
            order.append(int(rank[r]) + 1)
    return BranchingProgram(w, tuple(layers), tuple(order), tuple(head + 1))


# ---------- constructions


def random_layer(w: int, kind: str, rng: np.random.Generator) -> Layer:
    if kind == "permutation":
        a, b = rng.permutation(w), rng.permutation(w)
    elif kind == "regular":
        slots = rng.permutation(np.repeat(np.arange(w), 2))
        a, b = slots[:w], slots[w:]
    elif kind == "general":
        a, b = rng.integers(0, w, size=w), rng.integers(0, w, size=w)
    else:
        raise ValueError(f"unknown class {kind!r}")
    return Layer(tuple(int(v) + 1 for v in a), tuple(int(v) + 1 for v in b))


def random_program(w: int, n: int, kind: str, rng_seed=0, scramble: bool = False) -> BranchingProgram:
    rng = np.random.default_rng(rng_seed)
    layers = tuple(random_layer(w, kind, rng) for _ in range(n))
    order = tuple(int(v) + 1 for v in rng.permutation(n)) if scramble else None
    return BranchingProgram(w, layers, order)


def scrambled(program: BranchingProgram, rng_seed=0) -> BranchingProgram:
    """Twin with the same layers and a random read order."""
    rng = np.random.default_rng(rng_seed)
    order = tuple(int(v) + 1 for v in rng.permutation(program.n))
    return BranchingProgram(program.width, program.layers, order, program.head)


def mod3_program(n: int) -> BranchingProgram:
    """Width-3 counter of the input's Hamming weight mod 3."""
    if n < 1:
        raise ProgramError("mod3_program needs n >= 1")
    L = Layer((1, 2, 3), (2, 3, 1))
    return BranchingProgram(3, (L,) * n)


def xor_program(n: int) -> BranchingProgram:
    """Width-2 parity: every layer swaps the states on bit 1."""
    L = Layer((1, 2), (2, 1))
    return BranchingProgram(2, (L,) * n)


# ---------- JSON


def to_dict(program: BranchingProgram) -> dict:
    out = {
        "width": program.width,
        "length": program.n,
        "order": list(program.order),
        "layers": [{"map0": list(L.map0), "map1": list(L.map1)} for L in program.layers],
    }
    if program.head is not None:
        out["head"] = list(program.head)
    return out


def from_dict(d: dict) -> BranchingProgram:
    layers = tuple(make_layer(L["map0"], L["map1"]) for L in d["layers"])
    if "length" in d and d["length"] != len(layers):
        raise ProgramError(f"length {d['length']} disagrees with {len(layers)} layers")
    return BranchingProgram(int(d["width"]), layers, d.get("order"), d.get("head"))


def dumps(program: BranchingProgram) -> str:
    return json.dumps(to_dict(program))


def loads(s: str) -> BranchingProgram:
    return from_dict(json.loads(s))


def save(program: BranchingProgram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(program) + "\n")


def load(path) -> BranchingProgram:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())

