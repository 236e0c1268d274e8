"""Metropolis-adjusted Langevin sampling of the cut-off matrix model.

Target density on d-tuples of Hermitian N x N matrices:

    dmu(X)  propto  exp(-N tr(lambda V(X) + 1/2 sum_i X_i^2)),

optionally restricted to ||X_i|| <= K_cut.  The proposal is the Langevin
discretization in the trace metric,

    X' = X - (eps/2) (lambda D_i V(X) + X_i) + sqrt(eps) * xi,

with xi an independent GUE tuple (so the noise matches the Gaussian reference
measure and the drift is exactly (eps/2N) times the energy gradient), followed
by an exact Metropolis correction.  The cut-off is enforced by outright
rejection when a power-iteration estimate of any spectral norm exceeds K_cut;
boundary misjudgements only ever reject, never accept, so they bias toward the
interior of the constraint set.

All float arithmetic lives in this module; comparisons against the symbolic
expansion are statistical (batched-means error bars).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from .master import Potential

MAGIC = b"MMCH"


class InsufficientSamples(RuntimeError):
    """Not enough retained samples to form batched-means error bars."""


@dataclass(frozen=True)
class ModelConfig:
    V: Potential
    lam: float
    N: int
    K_cut: float | None = None
    seed: int = 0
    step_size: float | None = None  # None: 6.4/N, tuned for ~0.6 acceptance
    n_steps: int = 10000
    n_burnin: int = 1000
    thinning: int = 10
    n_chains: int = 1

    def __post_init__(self):
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.step_size is None:
            object.__setattr__(self, "step_size", 6.4 / self.N)
        if self.step_size <= 0:
            raise ValueError("step_size must be positive")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")


@dataclass
class ChainState:
    X: np.ndarray            # shape (d, N, N), complex Hermitian
    energy: float            # N tr(lambda V + 1/2 sum X^2)
    grad: np.ndarray         # lambda D_i V(X) + X_i, Hermitian per color
    rng: np.random.Generator
    accepted: int = 0
    proposed: int = 0


def gue_sample(N: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """d independent GUE matrices: diagonal variance 1/N, off-diagonal real and
    imaginary parts of variance 1/(2N) each."""
    H = rng.standard_normal((d, N, N)) + 1j * rng.standard_normal((d, N, N))
    return (H + H.conj().transpose(0, 2, 1)) / (2.0 * np.sqrt(N))


def _eval_word(X: np.ndarray, word: tuple[int, ...], N: int) -> np.ndarray:
    if not word:
        return np.eye(N, dtype=complex)
    out = X[word[0] - 1]
    for c in word[1:]:
        out = out @ X[c - 1]
    return out


def trace_potential(X: np.ndarray, V: Potential) -> float:
    """Re tr V(X) (real by trace self-adjointness; Re guards rounding)."""
    N = X.shape[-1]
    total = 0.0
    for w, coeff in V.terms.items():
        total += float(coeff) * float(np.trace(_eval_word(X, w, N)).real)
    return total


def energy(X: np.ndarray, V: Potential, lam: float) -> float:
    N = X.shape[-1]
    quad = 0.5 * float(sum(np.trace(x @ x).real for x in X))
    return N * (lam * trace_potential(X, V) + quad)


def grad_potential(X: np.ndarray, V: Potential, lam: float) -> np.ndarray:
    """lambda D_i V(X) + X_i per color, symmetrized defensively."""
    N = X.shape[-1]
    out = np.array(X, copy=True)
    if lam:
        for i in range(1, V.d + 1):
            g = np.zeros((N, N), dtype=complex)
            for coeff, w in V.cyclic_grad(i):
                g += float(coeff) * _eval_word(X, w, N)
            out[i - 1] += lam * g
    return 0.5 * (out + out.conj().transpose(0, 2, 1))


def spectral_norm_estimate(X: np.ndarray, iters: int = 20, tol: float = 1e-6) -> np.ndarray:
    """Per-color operator norm estimate: power iteration on X_i^2."""
    d, N, _ = X.shape
    X2 = np.matmul(X, X)
    v = np.full((d, N), 1.0 / np.sqrt(N), dtype=complex)
    last = np.zeros(d)
    for _ in range(iters):
        w = np.einsum("dij,dj->di", X2, v)
        norms = np.sqrt(np.einsum("di,di->d", w.conj(), w).real)
        norms = np.where(norms == 0, 1.0, norms)
        v = w / norms[:, None]
        est = np.sqrt(norms)
        if np.all(np.abs(est - last) <= tol * np.maximum(est, 1.0)):
            last = est
            break
        last = est
    return last


def _metric_sq(A: np.ndarray) -> float:
    # sum_i tr(A_i^2) for Hermitian tuples = sum |entries|^2
    return float(np.sum(A * A.conj()).real)


def init_state(config: ModelConfig, chain_index: int = 0) -> ChainState:
    rng = np.random.default_rng(config.seed + chain_index)
    X = gue_sample(config.N, config.V.d, rng)
    if config.K_cut is not None:
        # shrink until inside the cut-off; only affects the starting point
        while np.max(spectral_norm_estimate(X)) > config.K_cut:
            X *= 0.8
    return ChainState(X=X, energy=energy(X, config.V, config.lam),
                      grad=grad_potential(X, config.V, config.lam), rng=rng)


def mala_step(state: ChainState, config: ModelConfig) -> ChainState:
    """One proposal + accept/reject; mutates and returns the state."""
    eps = config.step_size
    rng = state.rng
    noise = gue_sample(config.N, config.V.d, rng)
    Xp = state.X - 0.5 * eps * state.grad + np.sqrt(eps) * noise
    state.proposed += 1
    if config.K_cut is not None and np.max(spectral_norm_estimate(Xp)) > config.K_cut:
        return state
    grad_p = grad_potential(Xp, config.V, config.lam)
    energy_p = energy(Xp, config.V, config.lam)
    fwd = Xp - state.X + 0.5 * eps * state.grad
    bwd = state.X - Xp + 0.5 * eps * grad_p
    # proposal covariance is eps/N per metric direction
    log_q = -(config.N / (2.0 * eps)) * (_metric_sq(bwd) - _metric_sq(fwd))
    log_alpha = state.energy - energy_p + log_q
    if np.log(rng.uniform()) < log_alpha:
        state.X = Xp
        state.energy = energy_p
        state.grad = grad_p
        state.accepted += 1
    return state


# -- observables -------------------------------------------------------------

# picklable observable descriptions, resolved per chain:
#   ("ts", {word: coeff})   normalized trace of a polynomial
#   ("sd", word, i)         Schwinger-Dyson residual of a monomial and color
ObsSpec = tuple


def build_observable(spec: ObsSpec, config: "ModelConfig") -> Callable[[np.ndarray], float]:
    kind = spec[0]
    if kind == "ts":
        return ts_observable(spec[1])
    if kind == "sd":
        return sd_residual_observable(spec[1], spec[2], config.V, config.lam)
    raise ValueError(f"unknown observable spec {spec!r}")


def ts_observable(P: Mapping[tuple[int, ...], Fraction]) -> Callable[[np.ndarray], float]:
    """ts_N(P(X)) for a rational combination of color words."""
    terms = [(float(c), tuple(w)) for w, c in P.items()]

    def f(X: np.ndarray) -> float:
        N = X.shape[-1]
        total = 0.0
        for c, w in terms:
            total += c * float(np.trace(_eval_word(X, w, N)).real) / N
        return total

    return f


def sd_residual_observable(P: tuple[int, ...], i: int, V: Potential,
                           lam: float) -> Callable[[np.ndarray], float]:
    """Schwinger-Dyson residual ts x ts(partial_i P) - ts(P (lambda D_i V + X_i))."""
    splits = [(P[:p], P[p + 1:]) for p, c in enumerate(P) if c == i]
    grad_terms = [(float(c), w) for c, w in V.cyclic_grad(i)]

    def f(X: np.ndarray) -> float:
        N = X.shape[-1]
        lhs = 0.0
        for a, b in splits:
            ta = np.trace(_eval_word(X, a, N)).real / N
            tb = np.trace(_eval_word(X, b, N)).real / N
            lhs += float(ta * tb)
        drift = np.array(X[i - 1], copy=True)
        if lam:
            for c, w in grad_terms:
                drift = drift + lam * c * _eval_word(X, w, N)
        pm = _eval_word(X, P, N)
        rhs = float(np.trace(pm @ drift).real) / N
        return lhs - rhs

    return f


# -- chain driving and estimates ----------------------------------------------


@dataclass
class ChainRun:
    chain_index: int
    values: dict[str, np.ndarray]
    acceptance: float
    samples: list[np.ndarray] = field(default_factory=list)


def run_chain(config: ModelConfig, observables: Mapping[str, ObsSpec],
              chain_index: int = 0, store_samples: bool = False) -> ChainRun:
    fns = {k: build_observable(spec, config) for k, spec in observables.items()}
    state = init_state(config, chain_index)
    traces: dict[str, list[float]] = {k: [] for k in fns}
    kept: list[np.ndarray] = []
    for step in range(config.n_steps):
        mala_step(state, config)
        if step >= config.n_burnin and (step - config.n_burnin) % config.thinning == 0:
            for k, f in fns.items():
                traces[k].append(f(state.X))
            if store_samples:
                kept.append(np.array(state.X, copy=True))
    acc = state.accepted / max(state.proposed, 1)
    return ChainRun(chain_index=chain_index,
                    values={k: np.asarray(v) for k, v in traces.items()},
                    acceptance=acc, samples=kept)


def run_chains(config: ModelConfig, observables: Mapping[str, ObsSpec],
               threads: int = 1, store_samples: bool = False) -> list[ChainRun]:
    """Independent chains, one RNG stream each (seed + chain index).

    With threads > 1 chains run in a process pool; results are ordered by
    chain index either way, so output is reproducible.
    """
    idxs = list(range(config.n_chains))
    if threads > 1 and config.n_chains > 1:
        import concurrent.futures as cf
        with cf.ProcessPoolExecutor(max_workers=min(threads, config.n_chains)) as ex:
            futs = [ex.submit(run_chain, config, observables, i, store_samples)
                    for i in idxs]
            return [f.result() for f in futs]
    return [run_chain(config, observables, i, store_samples) for i in idxs]


def _batch_means(values: np.ndarray, n_batches: int) -> np.ndarray:
    m = len(values) // n_batches
    if m < 1:
        raise InsufficientSamples(f"{len(values)} samples cannot fill {n_batches} batches")
    trimmed = values[: m * n_batches]
    return trimmed.reshape(n_batches, m).mean(axis=1)


def estimate(runs: Sequence[ChainRun], name: str, n_batches: int = 16) -> tuple[float, float]:
    """Pooled batched-means estimate (mean, stderr) of a tracked observable."""
    bms = []
    total, count = 0.0, 0
    for r in runs:
        v = r.values[name]
        if len(v) < 2 * n_batches:
            raise InsufficientSamples(
                f"chain {r.chain_index}: {len(v)} samples < {2 * n_batches}")
        bms.append(_batch_means(v, n_batches))
        total += float(v.sum())
        count += len(v)
    bm = np.concatenate(bms)
    mean = total / count
    stderr = float(bm.std(ddof=1) / np.sqrt(len(bm)))
    return mean, stderr


def sd_residual(runs: Sequence[ChainRun], name: str, n_batches: int = 16) -> tuple[float, float]:
    """Monte Carlo value and stderr of a tracked Schwinger-Dyson residual."""
    return estimate(runs, name, n_batches)


def ess_estimate(runs: Sequence[ChainRun], name: str, n_batches: int = 16) -> float:
    """Batched-means effective sample size: n * s^2 / (m * var(batch means))."""
    values = np.concatenate([r.values[name] for r in runs])
    n = len(values)
    m = min(len(r.values[name]) for r in runs) // n_batches
    bm = np.concatenate([_batch_means(r.values[name], n_batches) for r in runs])
    s2 = float(values.var(ddof=1))
    vb = float(bm.var(ddof=1))
    if vb <= 0 or m < 1:
        return float(n)
    return min(float(n), n * s2 / (m * vb))


def summary(config: ModelConfig, runs: Sequence[ChainRun],
            names: Sequence[str]) -> dict:
    """JSON-ready chain summary: config echo, per-observable mean/stderr,
    acceptance rate, ESS estimate."""
    out = {
        "config": {
            "potential": repr(config.V),
            "lambda": config.lam,
            "N": config.N,
            "K_cut": config.K_cut,
            "seed": config.seed,
            "step_size": config.step_size,
            "n_steps": config.n_steps,
            "n_burnin": config.n_burnin,
            "thinning": config.thinning,
            "n_chains": config.n_chains,
        },
        "acceptance": [r.acceptance for r in runs],
        "observables": {},
    }
    for name in names:
        mean, err = estimate(runs, name)
        out["observables"][name] = {
            "mean": mean, "stderr": err, "ess": ess_estimate(runs, name)}
    return out


def dump_samples(path: str, runs: Sequence[ChainRun], N: int, d: int) -> None:
    """Raw-sample binary dump.

    Layout (little-endian): magic "MMCH", uint32 N, uint32 d, uint32 count,
    then count blocks; each block is d matrices, each N*N float64 pairs
    (re, im) in row-major order.
    """
    blocks = [s for r in runs for s in r.samples]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", N, d, len(blocks)))
        for X in blocks:
            arr = np.ascontiguousarray(X.astype(np.complex128))
            fh.write(arr.view(np.float64).astype("<f8").tobytes())
