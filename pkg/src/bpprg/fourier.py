"""Matrix-valued Fourier transform, norms and Fourier-mass quantities.

For a layered function every coefficient factors over the layers:
B^[s] = H * prod_i F_i[s_i] with F_i[0] = (A_i0 + A_i1)/2 and
F_i[1] = (A_i0 - A_i1)/2, s being read through the layer order.  The
brute-force routines go back to the definition E_U[B[U] chi_s(U)] and serve
as oracles for the factored ones.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from itertools import combinations
from math import comb, sqrt

import numpy as np

from .bits import as_bits, popcounts, walsh_hadamard
from .errors import CapExceeded, ClassError, ProgramError
from .program import ENUM_CAP_BITS, BranchingProgram, LayeredFn, TabulatedFn, as_fn

LEVEL_COST_CAP = 10 ** 7
SPECTRAL_RTOL = 1e-12
SPECTRAL_MAX_ITER = 10_000


def character(s, x) -> int:
    s = as_bits(s)
    x = as_bits(x)
    if s.size != x.size:
        raise ProgramError(f"length mismatch: |s|={s.size}, |x|={x.size}")
    return -1 if int(np.dot(s.astype(np.int64), x)) % 2 else 1


# ---------- norms


def frobenius_norm(M) -> float:
    return float(np.sqrt(np.sum(np.square(M))))


def _start_vector(w: int) -> np.ndarray:
    # all-ones with a small index-linear tiebreak
    return 1.0 + np.arange(w) / (4.0 * w * w)


def spectral_norms(stack, rtol: float = SPECTRAL_RTOL, max_iter: int = SPECTRAL_MAX_ITER) -> np.ndarray:
    """Largest singular value of every matrix in an (N, w, w) stack.

    Power iteration on G = M^T M.  The iteration is front-loaded by repeated
    squaring of the normalized G (each squaring doubles the number of power
    steps), then polished with plain steps until the Rayleigh quotient moves
    by less than rtol.
    """
    M = np.asarray(stack, dtype=float)
    if M.ndim == 2:
        M = M[None]
    N, w = M.shape[0], M.shape[-1]
    if N == 0:
        return np.zeros(0)
    G = np.swapaxes(M, 1, 2) @ M
    scale = np.sqrt(np.sum(G * G, axis=(1, 2)))
    live = scale > 0
    out = np.zeros(N)
    if not live.any():
        return out
    G = G[live]
    H = G / scale[live, None, None]
    for _ in range(64):
        H = H @ H
        f = np.sqrt(np.sum(H * H, axis=(1, 2)))
        H /= f[:, None, None]
    v = H @ _start_vector(w)
    nv = np.linalg.norm(v, axis=1)
    # start vector orthogonal to the top eigenspace: use the heaviest column
    weak = nv < 1e-8
    if weak.any():
        cols = np.argmax(np.sum(H[weak] ** 2, axis=1), axis=1)
        v[weak] = H[weak][np.arange(weak.sum()), :, cols]
        nv[weak] = np.linalg.norm(v[weak], axis=1)
    v /= nv[:, None]
    lam = np.einsum("ni,nij,nj->n", v, G, v)
    for _ in range(max_iter):
        u = np.einsum("nij,nj->ni", G, v)
        nu = np.linalg.norm(u, axis=1)
        v = u / np.where(nu > 0, nu, 1.0)[:, None]
        new = np.einsum("ni,nij,nj->n", v, G, v)
        done = np.all(np.abs(new - lam) <= rtol * np.maximum(np.abs(new), 1e-300))
        lam = new
        if done:
            break
    out[live] = np.sqrt(np.maximum(lam, 0.0))
    return out


def spectral_norm(M) -> float:
    return float(spectral_norms(np.asarray(M, dtype=float)[None])[0])


def norms(stack, norm: str = "2") -> np.ndarray:
    stack = np.asarray(stack, dtype=float)
    if norm == "2":
        return spectral_norms(stack)
    if norm == "fro":
        return np.sqrt(np.sum(stack * stack, axis=(1, 2)))
    raise ValueError(f"unknown norm {norm!r}")


# ---------- coefficients


@dataclass(frozen=True, eq=False)
class Core:
    """Reading layers of a layered function with constants folded in.

    Coefficient at a set S of reading layers: prod_j (D_j if j in S else A_j),
    or ``const`` when there are no reading layers.
    """

    width: int
    n: int
    A: np.ndarray
    D: np.ndarray
    pos: np.ndarray
    const: np.ndarray

    @property
    def R(self) -> int:
        return int(self.pos.size)


def core(fn) -> Core:
    f = as_fn(fn)
    if not isinstance(f, LayeredFn):
        raise TypeError("factored Fourier routines need a program or layered function")
    w = f.width
    pending = f.head.copy()
    A, D, pos = [], [], []
    for i, r in enumerate(f.read):
        if r < 0:
            if A:
                A[-1] = A[-1] @ f.mats[i, 0]
                D[-1] = D[-1] @ f.mats[i, 0]
            else:
                pending = pending @ f.mats[i, 0]
            continue
        a = (f.mats[i, 0] + f.mats[i, 1]) / 2
        d = (f.mats[i, 0] - f.mats[i, 1]) / 2
        if not A:
            a, d = pending @ a, pending @ d
        A.append(a)
        D.append(d)
        pos.append(int(r))
    if not A:
        return Core(w, f.n, np.zeros((0, w, w)), np.zeros((0, w, w)), np.zeros(0, dtype=np.int64), pending)
    return Core(w, f.n, np.stack(A), np.stack(D), np.array(pos, dtype=np.int64), pending)


def coefficient(fn, s) -> np.ndarray:
    """B^[s] as the layer product, s indexed by input position."""
    c = core(fn)
    try:
        s = as_bits(s, c.n)
    except ValueError as e:
        raise ProgramError(str(e)) from None
    if c.R == 0:
        return c.const.copy() if not s.any() else np.zeros((c.width, c.width))
    unread = np.ones(c.n, dtype=bool)
    unread[c.pos] = False
    if np.any(s[unread]):
        return np.zeros((c.width, c.width))
    acc = np.eye(c.width)
    for j in range(c.R):
        acc = acc @ (c.D[j] if s[c.pos[j]] else c.A[j])
    return acc


def _table(fn, max_bits: int) -> np.ndarray:
    f = as_fn(fn)
    return f.table(max_bits)


def coefficient_bruteforce(fn, s, max_bits: int = ENUM_CAP_BITS) -> np.ndarray:
    """Definitional average E_U[B[U] chi_s(U)] over all 2^n inputs."""
    vals = _table(fn, max_bits)
    n = vals.shape[0].bit_length() - 1
    s_int = int((as_bits(s, n).astype(np.int64) << np.arange(n)).sum())
    par = popcounts(n)[np.arange(1 << n) & s_int] & 1
    chi = 1.0 - 2.0 * par
    return np.tensordot(chi, vals, axes=1) / (1 << n)


def fourier_spectrum_bruteforce(fn, max_bits: int = 22) -> np.ndarray:
    """All coefficients from the full table by a Walsh-Hadamard transform."""
    vals = _table(fn, max_bits)
    return walsh_hadamard(vals) / vals.shape[0]


def coefficients_all(fn, max_bits: int = 22) -> np.ndarray:
    """(2^n, w, w) table of every coefficient, entry s at int mask s.

    Built by doubling over the reading layers; layers whose half-difference
    vanishes (identical maps) do not double the table.
    """
    c = core(fn)
    if c.n > max_bits:
        raise CapExceeded(f"coefficient table over 2^{c.n} indices exceeds cap 2^{max_bits}")
    out = np.zeros((1 << c.n, c.width, c.width))
    if c.R == 0:
        out[0] = c.const
        return out
    table = np.eye(c.width)[None]
    index = np.zeros(1, dtype=np.int64)
    for j in range(c.R):
        if not np.any(c.D[j]):
            table = table @ c.A[j]
            continue
        table = np.concatenate([table @ c.A[j], table @ c.D[j]])
        index = np.concatenate([index, index | (1 << int(c.pos[j]))])
    out[index] = table
    return out


def _live_table(fn, max_bits: int = 22):
    """Coefficient table restricted to indices that can be nonzero, with their masks."""
    c = core(fn)
    if c.R == 0:
        return c.const[None], np.zeros(1, dtype=np.int64)
    table = np.eye(c.width)[None]
    index = np.zeros(1, dtype=np.int64)
    live = 0
    for j in range(c.R):
        if not np.any(c.D[j]):
            table = table @ c.A[j]
            continue
        live += 1
        if live > max_bits:
            raise CapExceeded(f"more than {max_bits} live layers")
        table = np.concatenate([table @ c.A[j], table @ c.D[j]])
        index = np.concatenate([index, index | (1 << int(c.pos[j]))])
    return table, index


# ---------- Fourier mass


@dataclass(frozen=True)
class MassReport:
    n: int
    w: int
    level: int
    value: float
    bound: float
    count: int

    def row(self) -> dict:
        return {"n": self.n, "w": self.w, "k": self.level, "value": fmt(self.value),
                "bound": fmt(self.bound), "count": self.count}


MASS_CSV_HEADER = ["n", "w", "k", "value", "bound", "count"]


def fmt(x: float) -> str:
    return f"{x:.12g}"


def mass_csv(reports) -> str:
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=MASS_CSV_HEADER, lineterminator="\n")
    wr.writeheader()
    for r in sorted(reports, key=lambda r: r.level):
        wr.writerow(r.row())
    return buf.getvalue()


def level_bound(fn, k: int) -> float:
    """(2w^2)^k for regular programs, sqrt(w C(n,k)) otherwise."""
    f = as_fn(fn)
    if isinstance(fn, BranchingProgram) and fn.kind != "general":
        return float((2 * fn.width ** 2) ** k)
    return sqrt(f.width * comb(f.n, k))


def segment_products(A: np.ndarray) -> np.ndarray:
    """S[a, b] = A_a A_{a+1} ... A_{b-1} for 0 <= a <= b <= R (identity when a = b)."""
    R, w = A.shape[0], A.shape[-1]
    S = np.zeros((R + 1, R + 1, w, w))
    eye = np.eye(w)
    for a in range(R + 1):
        S[a, a] = eye
        for b in range(a + 1, R + 1):
            S[a, b] = S[a, b - 1] @ A[b - 1]
    return S


def _combo_chunks(R: int, k: int, chunk: int = 1 << 15):
    it = combinations(range(R), k)
    while True:
        block = list(next(it, None) for _ in range(chunk))
        block = [b for b in block if b is not None]
        if not block:
            return
        yield np.array(block, dtype=np.int64).reshape(len(block), k)


def level_coefficients(fn, k: int, cost_cap: int = LEVEL_COST_CAP):
    """Yield (combos, coefficients) chunks for every weight-k s over reading layers."""
    c = core(fn)
    if comb(c.n, k) > cost_cap:
        raise CapExceeded(f"C({c.n},{k}) = {comb(c.n, k)} terms exceeds cost cap {cost_cap}")
    if c.R == 0:
        if k == 0:
            yield np.zeros((1, 0), dtype=np.int64), c.const[None]
        return
    S = segment_products(c.A)
    if k == 0:
        yield np.zeros((1, 0), dtype=np.int64), S[0, c.R][None]
        return
    for cb in _combo_chunks(c.R, k):
        acc = S[0, cb[:, 0]] @ c.D[cb[:, 0]]
        for j in range(1, k):
            acc = acc @ S[cb[:, j - 1] + 1, cb[:, j]] @ c.D[cb[:, j]]
        acc = acc @ S[cb[:, -1] + 1, c.R]
        yield cb, acc


def level_mass(fn, k: int, norm: str = "2", cost_cap: int = LEVEL_COST_CAP,
               bound: float | None = None) -> MassReport:
    """L^k(B) = sum over |s| = k of ||B^[s]||."""
    f = as_fn(fn)
    if not 0 <= k <= f.n:
        raise ValueError(f"level {k} outside [0, {f.n}]")
    total = 0.0
    for _, coefs in level_coefficients(fn, k, cost_cap):
        total += float(norms(coefs, norm).sum())
    b = level_bound(fn, k) if bound is None else bound
    return MassReport(f.n, f.width, k, total, b, comb(f.n, k))


def level_items(fn, k: int, norm: str = "2", cost_cap: int = LEVEL_COST_CAP):
    """(s as a bit string, ||B^[s]||) for nonzero-capable weight-k s, lexicographic in s."""
    c = core(fn)
    items = []
    for cb, coefs in level_coefficients(fn, k, cost_cap):
        vals = norms(coefs, norm)
        for row, v in zip(cb, vals):
            s = np.zeros(c.n, dtype=np.uint8)
            s[c.pos[row]] = 1
            items.append(("".join(map(str, s)), float(v)))
    items.sort(key=lambda t: t[0])
    return items


def level_masses(fn, ks, norm: str = "2", cost_cap: int = LEVEL_COST_CAP) -> list[MassReport]:
    return [level_mass(fn, k, norm, cost_cap) for k in ks]


def total_mass(fn, norm: str = "2", max_bits: int = 22) -> float:
    """L(B) = sum over s != 0 of ||B^[s]||."""
    table, index = _live_table(fn, max_bits)
    vals = norms(table, norm)
    return float(vals[index != 0].sum())


def mass_by_level(fn, norm: str = "2", max_bits: int = 22) -> np.ndarray:
    """Entry k is L^k(B), from the full coefficient table."""
    f = as_fn(fn)
    table, index = _live_table(fn, max_bits)
    vals = norms(table, norm)
    weights = np.array([bin(int(i)).count("1") for i in index], dtype=np.int64)
    return np.bincount(weights, weights=vals, minlength=f.n + 1)


def restricted_mass_expectation(fn, p, norm: str = "2", max_bits: int = 22) -> float:
    """sum over s != 0 of p^|s| ||B^[s]||: the mean mass of B|_T for T with independent p-bits."""
    table, index = _live_table(fn, max_bits)
    vals = norms(table, norm)
    weights = np.array([bin(int(i)).count("1") for i in index], dtype=np.int64)
    keep = index != 0
    return float(np.sum(vals[keep] * float(p) ** weights[keep]))


def parseval_check(fn, max_bits: int = 22) -> tuple[float, float]:
    """(sum_s ||B^[s]||_F^2, E_U ||B[U]||_F^2)."""
    f = as_fn(fn)
    if isinstance(f, TabulatedFn):
        coefs = fourier_spectrum_bruteforce(f, max_bits)
    else:
        coefs, _ = _live_table(f, max_bits)
    lhs = float(np.sum(coefs * coefs))
    vals = f.table(max_bits)
    rhs = float(np.mean(np.sum(vals * vals, axis=(1, 2))))
    return lhs, rhs


# ---------- BRRY weight and the rho potential


def brry_terms(program: BranchingProgram) -> np.ndarray:
    """||B_{i..n}^[1 0^{n-i}]||_2 for i = 1..n (layer order)."""
    if not isinstance(program, BranchingProgram):
        raise TypeError("brry_terms needs a BranchingProgram")
    if program.kind == "general":
        raise ClassError("BRRY weight is only bounded for regular programs")
    n, w = program.n, program.width
    if n == 0:
        return np.zeros(0)
    A = program.stack.mean(axis=1)
    D = (program.stack[:, 0] - program.stack[:, 1]) / 2
    terms = np.zeros((n, w, w))
    suffix = np.eye(w)
    for i in range(n - 1, -1, -1):
        terms[i] = D[i] @ suffix
        suffix = A[i] @ suffix
    return spectral_norms(terms)


def brry_weight(program: BranchingProgram) -> float:
    return float(brry_terms(program).sum())


def rho_potential(M) -> float:
    """sum over u < v of the Euclidean distance between rows u and v."""
    M = np.asarray(M, dtype=float)
    diff = M[:, None, :] - M[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    return float(np.sum(np.triu(dist, 1)))


def rho_step(layer, X) -> tuple[float, float]:
    """(||F[1] X||_2, 2 (rho(X) - rho(F[0] X))) for one layer."""
    F0 = layer.matrices.mean(axis=0)
    F1 = (layer.matrices[0] - layer.matrices[1]) / 2
    return spectral_norm(F1 @ X), 2.0 * (rho_potential(X) - rho_potential(F0 @ X))


# ---------- bias


def bias_of(dist, n: int, max_bits: int = ENUM_CAP_BITS) -> float:
    """max over s != 0 of |E[chi_s(X)]|, exact."""
    if n == 0:
        return 0.0
    spec = dist.spectrum(n, max_bits)
    return float(np.max(np.abs(spec[1:])))


def report_dict(r: MassReport) -> dict:
    return asdict(r)
