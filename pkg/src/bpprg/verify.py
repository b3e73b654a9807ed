"""Distinguishing-error oracle, program corpora and experiment drivers.

Every experiment is a pure function of its config: it writes one CSV (a
status column of pass/fail/skip per row) and a summary JSON.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import comb, sqrt

import numpy as np

from .batch import generate_batch, kwise_batch, almost_kwise_batch, t_weight_batch
from .bits import all_strings, index_bits
from .errors import CapExceeded
from .fourier import (
    brry_weight,
    fmt,
    fourier_spectrum_bruteforce,
    level_mass,
    norms,
    parseval_check,
    restricted_mass_expectation,
    rho_step,
    total_mass,
)
from .prg import PrgParams, depth, make_params, rescaled_epsilon, seed_length_for
from .program import (
    BranchingProgram,
    expectation,
    identity_program,
    mod3_program,
    random_layer,
    random_program,
    restrict,
    scrambled,
    transition_counts,
    xor_program,
)
from .samplers import (
    almost_kwise_seed_length,
    ceil_log2,
    chernoff_bound,
    kwise_seed_length,
)

TAU = 1e-9
EXACT_SEED_BITS = 26
MC_SAMPLES = 10 ** 6
CHUNK = 1 << 16


# ---------- distinguishing error


@dataclass(frozen=True)
class ErrorEstimate:
    value: float
    mode: str
    samples: int
    ci99: float = 0.0

    @property
    def upper(self) -> float:
        return self.value + self.ci99


def hoeffding_halfwidth(samples: int, w: int, confidence: float = 0.99) -> float:
    """Entrywise half-width holding for all w^2 entries simultaneously."""
    return sqrt(math.log(2 * w * w / (1 - confidence)) / (2 * samples))


@dataclass(frozen=True)
class Generator:
    """n-bit outputs from seed_length-bit seeds, evaluated in batches."""

    n: int
    seed_length: int
    batch: object
    info: dict = field(default_factory=dict)


def uniform_generator(n: int) -> Generator:
    return Generator(n, n, lambda S: S, {"kind": "uniform"})


def constant_generator(n: int, value=None) -> Generator:
    v = np.zeros(n, dtype=np.uint8) if value is None else np.asarray(value, dtype=np.uint8)
    return Generator(n, 0, lambda S: np.broadcast_to(v, (S.shape[0], n)).copy(), {"kind": "constant"})


def prg_generator(params: PrgParams, n: int) -> Generator:
    info = {"kind": "prg", "variant": params.variant, "eps_used": float(params.eps),
            "depth": depth(params, n), "d": params.d, "k": params.k}
    return Generator(n, seed_length_for(params, n), lambda S: generate_batch(params, n, S), info)


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str = "prg"
    variant: str = "perm"
    eps: float = 0.25
    rescale: bool = True
    # explicit parameters (d, k, mu, delta, base_cutoff) instead of make_params
    params: dict | None = None

    def build(self, n: int, w: int) -> Generator:
        if self.kind == "uniform":
            return uniform_generator(n)
        if self.kind == "constant":
            return constant_generator(n)
        if self.params is not None:
            p = PrgParams(self.variant, n, w, Fraction(self.eps), **_param_fields(self.params))
            return prg_generator(p, n)
        eps = rescaled_epsilon(n, w, self.eps, self.variant) if self.rescale else self.eps
        g = prg_generator(make_params(n, w, eps, self.variant), n)
        g.info["eps_target"] = self.eps
        return g


def _param_fields(d: dict) -> dict:
    out = dict(d)
    for key in ("mu", "delta"):
        if key in out and out[key] is not None:
            out[key] = Fraction(out[key])
    return out


def distinguish_error(program: BranchingProgram, gen: Generator,
                      exact_bits: int = EXACT_SEED_BITS, samples: int = MC_SAMPLES,
                      rng_seed=0, mode: str = "auto", override: bool = False) -> ErrorEstimate:
    """||E_seed B[G(seed)] - E_U B[U]||_2, exact when the seed space is enumerable.

    mode "auto" enumerates seeds up to exact_bits and samples beyond; "exact"
    past exact_bits raises CapExceeded unless override is set.
    """
    if gen.n != program.n:
        raise ValueError(f"generator outputs {gen.n} bits, program reads {program.n}")
    w = program.width
    target = expectation(program)
    L = gen.seed_length
    counts = np.zeros((w, w))
    if mode not in ("auto", "exact", "montecarlo"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and L > exact_bits and not override:
        raise CapExceeded(f"seed length {L} exceeds the {exact_bits}-bit enumeration cap")
    if mode == "exact" or (mode == "auto" and L <= exact_bits):
        total = 1 << L
        for start in range(0, total, CHUNK):
            S = index_bits(np.arange(start, min(total, start + CHUNK)), L)
            counts += transition_counts(program, gen.batch(S))
        diff = counts / total - target
        return ErrorEstimate(float(norms(diff[None])[0]), "exact", total, 0.0)
    rng = np.random.default_rng(rng_seed)
    done = 0
    while done < samples:
        size = min(CHUNK, samples - done)
        S = rng.integers(0, 2, size=(size, L), dtype=np.uint8)
        counts += transition_counts(program, gen.batch(S))
        done += size
    diff = counts / samples - target
    h = hoeffding_halfwidth(samples, w)
    return ErrorEstimate(float(norms(diff[None])[0]), "montecarlo", samples, w * h)


# ---------- corpora


@dataclass(frozen=True)
class CorpusSpec:
    classes: tuple[str, ...] = ("permutation",)
    widths: tuple[int, ...] = (2, 3)
    lengths: tuple[int, ...] = (8,)
    count: int = 1
    rng_seed: int = 0
    specials: tuple[str, ...] = ()
    scramble_twins: bool = False
    scramble_order: bool = False

    @classmethod
    def from_dict(cls, d: dict) -> CorpusSpec:
        d = dict(d)
        for key in ("classes", "widths", "lengths", "specials"):
            if key in d:
                d[key] = tuple(d[key])
        return cls(**d)


def corpus(spec: CorpusSpec) -> list[tuple[str, BranchingProgram]]:
    """Deterministic list of (name, program)."""
    out = []
    for n in spec.lengths:
        for name in spec.specials:
            if name == "mod3":
                out.append((f"mod3_n{n}", mod3_program(n)))
            elif name == "xor" and 2 in spec.widths:
                out.append((f"xor_n{n}", xor_program(n)))
            elif name == "identity":
                for w in spec.widths:
                    out.append((f"identity_w{w}_n{n}", identity_program(w, n)))
            elif name not in ("xor",):
                raise ValueError(f"unknown special program {name!r}")
        for ci, kind in enumerate(spec.classes):
            for w in spec.widths:
                for i in range(spec.count):
                    seed = [spec.rng_seed, ci, w, n, i]
                    P = random_program(w, n, kind, seed, scramble=spec.scramble_order)
                    out.append((f"{kind}_w{w}_n{n}_{i}", P))
    if spec.scramble_twins:
        twins = [(f"{name}~scr", scrambled(P, [spec.rng_seed, 7, j]))
                 for j, (name, P) in enumerate(out)]
        out.extend(twins)
    return out


# ---------- experiment plumbing


@dataclass
class ExperimentConfig:
    id: str
    corpus: CorpusSpec = field(default_factory=CorpusSpec)
    settings: dict = field(default_factory=dict)
    out: str = "results"

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentConfig:
        return cls(d["id"], CorpusSpec.from_dict(d.get("corpus", {})), d.get("settings", {}),
                   d.get("out", "results"))

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class Result:
    id: str
    columns: list[str]
    rows: list[dict]

    def summary(self) -> dict:
        status = [r["status"] for r in self.rows]
        return {"id": self.id, "rows": len(status), "passes": status.count("pass"),
                "fails": status.count("fail"), "skipped": status.count("skip")}

    @property
    def ok(self) -> bool:
        return self.summary()["fails"] == 0

    def write(self, out_dir) -> tuple[str, str]:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{self.id}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            wr = csv.DictWriter(fh, fieldnames=self.columns, lineterminator="\n")
            wr.writeheader()
            for r in self.rows:
                wr.writerow({k: (fmt(v) if isinstance(v, float) else v) for k, v in r.items()})
        spath = os.path.join(out_dir, f"{self.id}_summary.json")
        with open(spath, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")
        return path, spath


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


# ---------- experiments


def exp_levelk(cfg: ExperimentConfig) -> Result:
    ks = cfg.settings.get("ks", [1, 2, 3])
    rows = []
    for name, P in corpus(cfg.corpus):
        for k in ks:
            if k > P.n:
                continue
            r = level_mass(P, k)
            rows.append({"program": name, "class": P.kind, "w": P.width, "n": P.n, "k": k,
                         "value": r.value, "bound": r.bound, "count": r.count,
                         "status": _status(r.value <= r.bound * (1 + TAU))})
    return Result("levelk", ["program", "class", "w", "n", "k", "value", "bound", "count", "status"], rows)


def random_rho_pairs(count: int, max_w: int, rng_seed=0):
    """(layer, X) pairs: regular layers of width 2..max_w and Gaussian X."""
    rng = np.random.default_rng(rng_seed)
    for _ in range(count):
        w = int(rng.integers(2, max_w + 1))
        kind = "regular" if rng.random() < 0.5 else "permutation"
        yield random_layer(w, kind, rng), rng.normal(size=(w, w))


def exp_brry(cfg: ExperimentConfig) -> Result:
    rows = []
    for name, P in corpus(cfg.corpus):
        v = brry_weight(P)
        b = 2.0 * P.width ** 2
        rows.append({"check": "brry", "program": name, "w": P.width, "n": P.n,
                     "value": v, "bound": b, "status": _status(v <= b * (1 + TAU))})
    pairs = cfg.settings.get("rho_pairs", 0)
    worst = -math.inf
    bad = 0
    for layer, X in random_rho_pairs(pairs, cfg.settings.get("rho_max_w", 5),
                                     cfg.settings.get("rho_seed", 0)):
        lhs, rhs = rho_step(layer, X)
        worst = max(worst, lhs - rhs)
        bad += lhs > rhs + TAU * max(1.0, abs(rhs))
    if pairs:
        rows.append({"check": "rho_step", "program": f"{pairs}_pairs", "w": cfg.settings.get("rho_max_w", 5),
                     "n": 1, "value": float(worst), "bound": 0.0,
                     "status": _status(bad == 0)})
    return Result("brry", ["check", "program", "w", "n", "value", "bound", "status"], rows)


def restricted_mass_enumerated(P, p: float) -> float:
    """E_T[L_2(B|_T)] by summing over every t with product weights."""
    n = P.n
    total = 0.0
    for t_int in range(1 << n):
        t = ((t_int >> np.arange(n)) & 1).astype(np.uint8)
        wt = int(t.sum())
        prob = p ** wt * (1 - p) ** (n - wt)
        if wt == 0 or prob == 0.0:
            continue
        total += prob * total_mass(restrict(P, t))
    return total


def exp_restriction(cfg: ExperimentConfig) -> Result:
    rows = []
    for name, P in corpus(cfg.corpus):
        w = P.width
        ps = cfg.settings.get("p_values") or [1.0 / (4 * w * w)]
        for p in ps:
            enum = restricted_mass_enumerated(P, p)
            formula = restricted_mass_expectation(P, p)
            eq_ok = abs(enum - formula) <= TAU * max(1.0, abs(formula))
            x = 2 * w * w * p
            bound = x / (1 - x) if x < 1 else math.inf
            applies = p <= 1.0 / (4 * w * w) and P.kind != "general"
            ok = eq_ok and (enum <= bound * (1 + TAU) if applies else True)
            rows.append({"program": name, "class": P.kind, "w": w, "n": P.n, "p": p,
                         "enumerated": enum, "formula": formula, "abs_diff": abs(enum - formula),
                         "bound": bound, "bound_applies": applies, "status": _status(ok)})
    return Result("restriction", ["program", "class", "w", "n", "p", "enumerated", "formula",
                                  "abs_diff", "bound", "bound_applies", "status"], rows)


def exp_mainlemma(cfg: ExperimentConfig) -> Result:
    """Empirical Pr[L_2(B|_T) > (2w^2)^k] against n^4 2/2^k; vacuous bounds are recorded only."""
    ks = cfg.settings.get("ks", [1, 2])
    samples = cfg.settings.get("samples", 500)
    rows = []
    for name, P in corpus(cfg.corpus):
        w, n = P.width, P.n
        d = ceil_log2(4 * w * w)
        for k in ks:
            delta = Fraction(1, (2 * w) ** (4 * k))
            L = almost_kwise_seed_length(n, d, 2 * k, delta)
            rng = np.random.default_rng([cfg.corpus.rng_seed, n, w, k])
            S = rng.integers(0, 2, size=(samples, L), dtype=np.uint8)
            T = almost_kwise_batch(n, d, 2 * k, delta, S)
            thr = float((2 * w * w) ** k)
            over = sum(total_mass(restrict(P, t)) > thr for t in T)
            freq = over / samples
            bound = 2.0 * n ** 4 / 2 ** k
            status = "skip" if bound >= 1 else _status(freq <= bound)
            rows.append({"program": name, "w": w, "n": n, "k": k, "p": 2.0 ** -d,
                         "delta": float(delta), "samples": samples, "threshold": thr,
                         "frequency": freq, "bound": bound, "vacuous": bound >= 1, "status": status})
    return Result("mainlemma", ["program", "w", "n", "k", "p", "delta", "samples", "threshold",
                                "frequency", "bound", "vacuous", "status"], rows)


def exp_prg(cfg: ExperimentConfig, variant: str) -> Result:
    s = cfg.settings
    gcfg = GeneratorConfig("prg", variant, s.get("eps", 0.25), s.get("rescale", True), s.get("params"))
    rows = []
    for name, P in corpus(cfg.corpus):
        gen = gcfg.build(P.n, P.width)
        est = distinguish_error(P, gen, s.get("exact_bits", EXACT_SEED_BITS),
                                s.get("samples", MC_SAMPLES), s.get("mc_seed", 0))
        bound = gcfg.eps
        rows.append({"program": name, "class": P.kind, "w": P.width, "n": P.n, "variant": variant,
                     "eps": bound, "eps_used": gen.info.get("eps_used"), "seed_length": gen.seed_length,
                     "depth": gen.info.get("depth"), "mode": est.mode, "samples": est.samples,
                     "value": est.value, "ci99": est.ci99,
                     "status": _status(est.upper <= bound)})
    return Result("prg" if variant == "perm" else "prg-general",
                  ["program", "class", "w", "n", "variant", "eps", "eps_used", "seed_length", "depth",
                   "mode", "samples", "value", "ci99", "status"], rows)


def _tail(weights: np.ndarray, probs: np.ndarray, center: float, radius: float) -> float:
    return float(probs[np.abs(weights - center) >= radius - 1e-12].sum())


def _weight_distribution(T: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = T.shape[1]
    counts = np.bincount(T.sum(axis=1), minlength=n + 1).astype(float)
    return np.arange(n + 1), counts / counts.sum()


def exp_chernoff(cfg: ExperimentConfig) -> Result:
    s = cfg.settings
    zetas = s.get("zetas", [0.1, 0.2, 0.3, 0.45])
    rows = []

    def emit(family, ell, k, delta, zeta, mean_frac, weights, probs):
        tail = _tail(weights, probs, ell * mean_frac, ell * zeta)
        b = chernoff_bound(ell, k, zeta, delta)
        rows.append({"family": family, "ell": ell, "k": k, "delta": float(delta), "zeta": zeta,
                     "tail": tail, "bound": b, "status": _status(tail <= b + 1e-12)})

    for ell, k in s.get("binomial", [[10, 2], [20, 4], [40, 6], [100, 8]]):
        weights = np.arange(ell + 1)
        probs = np.array([comb(ell, j) for j in weights], dtype=float) / 2.0 ** ell
        for z in zetas:
            emit("independent", ell, k, 0.0, z, 0.5, weights, probs)
    for n, d, k in s.get("kwise", [[8, 1, 2], [6, 2, 2], [8, 2, 2], [5, 1, 4]]):
        L = kwise_seed_length(n, d, k)
        if L > s.get("max_seed_bits", 20):
            raise CapExceeded(f"kwise instance needs {L} seed bits")
        T = kwise_batch(n, d, k, all_strings(L))
        weights, probs = _weight_distribution(T)
        for z in zetas:
            emit(f"kwise_d{d}", n, k, 0.0, z, 2.0 ** -d, weights, probs)
    for n, d, k, delta in s.get("almost", [[4, 1, 2, 0.5], [6, 1, 2, 0.25], [4, 2, 2, 0.5]]):
        L = almost_kwise_seed_length(n, d, k, Fraction(delta))
        if L > s.get("max_seed_bits", 22):
            raise CapExceeded(f"almost k-wise instance needs {L} seed bits")
        T = almost_kwise_batch(n, d, k, Fraction(delta), all_strings(L))
        weights, probs = _weight_distribution(T)
        for z in zetas:
            emit(f"almost_d{d}", n, k, delta, z, 2.0 ** -d, weights, probs)
    return Result("chernoff", ["family", "ell", "k", "delta", "zeta", "tail", "bound", "status"], rows)


def mod3_closed_form(n: int) -> float:
    return ((1 + sqrt(3)) / 2) ** n - 2.0 ** -n


def exp_mod3(cfg: ExperimentConfig) -> Result:
    rows = []
    for n in cfg.settings.get("lengths", list(range(3, 13))):
        P = mod3_program(n)
        factored = total_mass(P)
        brute = float(norms(fourier_spectrum_bruteforce(P)[1:]).sum())
        closed = mod3_closed_form(n)
        ok = abs(factored - closed) <= 1e-6 and abs(brute - closed) <= 1e-6
        rows.append({"n": n, "factored": factored, "bruteforce": brute, "closed_form": closed,
                     "abs_diff": max(abs(factored - closed), abs(brute - closed)), "status": _status(ok)})
    return Result("mod3", ["n", "factored", "bruteforce", "closed_form", "abs_diff", "status"], rows)


def exp_parseval(cfg: ExperimentConfig) -> Result:
    rows = []
    for name, P in corpus(cfg.corpus):
        lhs, rhs = parseval_check(P)
        ok = abs(lhs - rhs) <= TAU and abs(rhs - P.width) <= TAU
        rows.append({"program": name, "class": P.kind, "w": P.width, "n": P.n,
                     "lhs": lhs, "rhs": rhs, "status": _status(ok)})
    return Result("parseval", ["program", "class", "w", "n", "lhs", "rhs", "status"], rows)


# ---------- seed-length table and step-4 failures


def seedlen_table(lengths, w: int, eps: float, variant: str) -> list[dict]:
    rows = []
    prev = None
    for n in lengths:
        P = make_params(n, w, eps, variant)
        L = seed_length_for(P, n)
        rows.append({"variant": variant, "n": n, "w": w, "eps": eps, "d": P.d, "k": P.k,
                     "depth": depth(P, n), "seed_length": L,
                     "ratio_to_prev": (L / prev) if prev else float("nan")})
        prev = L
    return rows


def fit_log2_squared(rows) -> tuple[float, float, float]:
    """Least squares seed_length ~ a log2(n)^2 + b; returns (a, b, relative residual)."""
    x = np.array([math.log2(r["n"]) ** 2 for r in rows])
    y = np.array([float(r["seed_length"]) for r in rows])
    A = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = np.linalg.norm(A @ coef - y) / np.linalg.norm(y)
    return float(coef[0]), float(coef[1]), float(resid)


def exp_seedlen(cfg: ExperimentConfig) -> Result:
    s = cfg.settings
    lengths = s.get("lengths", [2 ** e for e in range(6, 21)])
    rows = []
    for variant in s.get("variants", ["perm", "general"]):
        table = seedlen_table(lengths, s.get("w", 2), s.get("eps", 0.25), variant)
        for r in table:
            r["status"] = "skip"
        if variant == "perm":
            a, b, resid = fit_log2_squared(table)
            table.append({"variant": "perm-fit", "n": 0, "w": s.get("w", 2), "eps": s.get("eps", 0.25),
                          "d": "", "k": "", "depth": "", "seed_length": f"a={a:.6g};b={b:.6g}",
                          "ratio_to_prev": resid, "status": _status(resid < 0.10)})
        rows.extend(table)
    return Result("seedlen", ["variant", "n", "w", "eps", "d", "k", "depth", "seed_length",
                              "ratio_to_prev", "status"], rows)


def step4_params(n: int, w: int, eps: float) -> PrgParams:
    """Perm parameters for n with k cut down to what the failure analysis uses.

    The failure analysis only needs 2 ceil(log2(1/eps))-wise independence and
    delta (2/p)^{k'} <= eps; k is the smallest value giving both with
    delta = eps (2w)^{-4k}.
    """
    P = make_params(n, w, eps, "perm")
    kp = 2 * ceil_log2(Fraction(1) / Fraction(eps))
    k = max(1, (kp + 1) // 2)
    while (2 * w) ** (4 * k) < (1 << (P.d + 1)) ** kp:
        k += 1
    delta = Fraction(eps) / Fraction(2 * w) ** (4 * k)
    return replace(P, k=k, delta=delta)


def step4_frequency(params: PrgParams, n: int, samples: int, rng_seed=0) -> tuple[float, int]:
    """Fraction of seeds with |T| < pn/2 at the top level."""
    L = params.t_bits(n)
    rng = np.random.default_rng(rng_seed)
    fails = 0
    done = 0
    while done < samples:
        size = min(CHUNK // 4, samples - done)
        S = rng.integers(0, 2, size=(size, L), dtype=np.uint8)
        wts = t_weight_batch(params, n, S)
        fails += int(np.count_nonzero(wts * (1 << (params.d + 1)) < n))
        done += size
    return fails / samples, fails


def exp_step4(cfg: ExperimentConfig) -> Result:
    s = cfg.settings
    rows = []
    for n, w, eps in s.get("configs", [[37000, 2, 0.25], [19000, 2, 0.45]]):
        P = step4_params(n, w, eps)
        reachable = not P.is_base(n)
        samples = s.get("samples", 10 ** 5)
        if not reachable:
            rows.append({"n": n, "w": w, "eps": eps, "d": P.d, "k": P.k, "samples": 0,
                         "failures": 0, "frequency": float("nan"), "bound": 2 * eps,
                         "chernoff": float("nan"), "status": "skip"})
            continue
        freq, fails = step4_frequency(P, n, samples, s.get("seed", 0))
        kp = 2 * ceil_log2(Fraction(1) / Fraction(eps))
        cb = chernoff_bound(n, kp, float(P.p) / 2, float(P.delta))
        rows.append({"n": n, "w": w, "eps": eps, "d": P.d, "k": P.k, "samples": samples,
                     "failures": fails, "frequency": freq, "bound": 2 * eps, "chernoff": cb,
                     "status": _status(freq <= 2 * eps)})
    return Result("step4", ["n", "w", "eps", "d", "k", "samples", "failures", "frequency", "bound",
                            "chernoff", "status"], rows)


EXPERIMENTS = {
    "levelk": exp_levelk,
    "brry": exp_brry,
    "restriction": exp_restriction,
    "mainlemma": exp_mainlemma,
    "prg": lambda c: exp_prg(c, "perm"),
    "prg-general": lambda c: exp_prg(c, "general"),
    "chernoff": exp_chernoff,
    "mod3": exp_mod3,
    "parseval": exp_parseval,
    "seedlen": exp_seedlen,
    "step4": exp_step4,
}


def run_experiment(cfg: ExperimentConfig, out_dir: str | None = None) -> Result:
    if cfg.id not in EXPERIMENTS:
        raise ValueError(f"unknown experiment {cfg.id!r}; choose from {sorted(EXPERIMENTS)}")
    res = EXPERIMENTS[cfg.id](cfg)
    if out_dir is not None:
        res.write(out_dir)
    return res
