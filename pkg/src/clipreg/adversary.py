"""Witness search: estimate the observer metric by maximizing the correlation
of a small clipped network against a target.

The search is multi-start projected subgradient ascent over the network
parameter box.  Every reported value is a LOWER bound on the true supremum
over the infinite dictionary; results say "no witness found at this budget",
never "invisible".
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from clipreg.netcore import DomainSpec, Layer, RepCert, RepNet, pad_depth, net_to_dict
from clipreg.measure import FunctionOracle, Quadrature, inner, oracle_from_net, oracle_from_values

# Restarts are processed in fixed-size chunks so the arithmetic (and hence the
# result bytes) are identical for any worker count.
_CHUNK = 64


class AdversaryError(ValueError):
    pass


@dataclass(frozen=True)
class DictSpec:
    """The dictionary F(d,r): all (d|r)-representable functions on W_n."""

    d: int
    r: int
    domain: DomainSpec

    def __post_init__(self):
        if self.d < 1 or self.r < 0:
            raise AdversaryError(f"invalid dictionary spec ({self.d}|{self.r})")

    @property
    def cert(self) -> RepCert:
        return RepCert(self.d, self.r)

    def arch(self) -> list:
        """Layer widths [n, d, ..., d, 1] with r hidden layers."""
        return [self.domain.n] + [self.d] * self.r + [1]


@dataclass(frozen=True)
class Budget:
    restarts: int = 64
    iterations: int = 400
    step0: float = 0.5
    decay: float = 0.97

    def __post_init__(self):
        if self.restarts < 1 or self.iterations < 1 or self.step0 <= 0 or not (0 < self.decay <= 1):
            raise AdversaryError(f"invalid budget {self}")

    def to_dict(self) -> dict:
        return {"restarts": self.restarts, "iterations": self.iterations,
                "step0": self.step0, "decay": self.decay}


@dataclass(frozen=True)
class AdversaryResult:
    value: float                 # best |<h, target>| found (lower bound)
    witness: RepNet
    restarts_run: int
    per_restart_values: tuple
    seed: int
    budget: Budget

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "lower_bound_only": True,
            "witness": net_to_dict(self.witness),
            "restarts_run": self.restarts_run,
            "per_restart_values": list(self.per_restart_values),
            "seed": self.seed,
            "budget": self.budget.to_dict(),
        }


def correlation(quad: Quadrature, h: RepNet, target: FunctionOracle) -> float:
    """<h, target> under the shared quadrature."""
    return inner(quad, oracle_from_net(h), target)


def _init_params(spec: DictSpec, restart: int, seed: int):
    rng = np.random.default_rng(seed ^ restart)
    q = spec.domain.q
    widths = spec.arch()
    Ws, bs = [], []
    for d_in, d_out in zip(widths[:-1], widths[1:]):
        Ws.append(rng.uniform(-q, q, size=(d_out, d_in)))
        # biases start in [-1,1]: inside the clamp box, away from the dead
        # all-saturated region that large |c| produces
        bs.append(rng.uniform(-1.0, 1.0, size=d_out))
    return Ws, bs


def _embed_params(net: RepNet, spec: DictSpec):
    """Zero-pad a net satisfying (d|r) into the search architecture exactly."""
    if not net.satisfies(spec.cert):
        raise AdversaryError("warm-start net does not satisfy the dictionary certificate")
    padded = pad_depth(net, spec.r - net.depth)
    widths = spec.arch()
    Ws, bs = [], []
    for l, layer in enumerate(padded.layers):
        W = np.zeros((widths[l + 1], widths[l]))
        b = np.zeros(widths[l + 1])
        W[: layer.d_out, : layer.d_in] = layer.W
        b[: layer.d_out] = layer.b
        Ws.append(W)
        bs.append(b)
    return Ws, bs


def _objective_linear(C):
    """J_b = sum_n C[b,n] h_b(x_n): plain weighted correlation."""
    def eval_obj(h):
        return np.einsum("bn,bn->b", C, h), C
    return eval_obj


def _objective_gain(weights, resvals):
    """J_b = <h,res>^2 / ||h||^2: the exact energy decrease of the optimally
    scaled (unclamped) pick; both quantities under the quadrature weights."""
    wres = weights * resvals

    def eval_obj(h):
        c = h @ wres
        h2 = np.maximum((h * h) @ weights, 1e-12)
        obj = c * c / h2
        G = (2.0 * c / h2)[:, None] * wres[None, :] \
            - ((c / h2) ** 2)[:, None] * (2.0 * weights[None, :] * h)
        return obj, G
    return eval_obj


def _ascend_chunk(X, B, objective, Ws, bs, q, bias_bounds, budget: Budget):
    """Ascend a chunk of parameter sets on a batched objective of h.

    Ws[l]: (B, out, in); bs[l]: (B, out).  `objective(h)` returns the per-entry
    value (B,) and its gradient coefficients dJ/dh (B, N).  Returns per-entry
    best objective and the parameters achieving it.
    """
    L = len(Ws)
    best_obj = np.full(B, -np.inf)
    best_Ws = [W.copy() for W in Ws]
    best_bs = [b.copy() for b in bs]
    X0 = X[None]  # (1, N, n), broadcast against the batch in matmul
    step = budget.step0
    for it in range(budget.iterations + 1):
        # forward
        acts = []
        masks = []
        A = X0
        for l in range(L):
            Z = np.matmul(A, np.swapaxes(Ws[l], 1, 2))
            Z += bs[l][:, None, :]
            acts.append(A)
            A = np.clip(Z, -1.0, 1.0)
            # Z == A exactly where the clip is inactive, kinks included;
            # the subgradient there is 1 (the interior value), 0 outside
            masks.append(Z == A)
        h = A[:, :, 0]
        obj, Gc = objective(h)
        improved = obj > best_obj
        if np.any(improved):
            best_obj[improved] = obj[improved]
            for l in range(L):
                best_Ws[l][improved] = Ws[l][improved]
                best_bs[l][improved] = bs[l][improved]
        if it == budget.iterations:
            break
        # backward
        G = Gc[:, :, None]
        gWs = [None] * L
        gbs = [None] * L
        for l in range(L - 1, -1, -1):
            dZ = G * masks[l]
            gWs[l] = np.matmul(np.swapaxes(dZ, 1, 2), acts[l])
            gbs[l] = dZ.sum(axis=1)
            if l > 0:
                G = np.matmul(dZ, Ws[l])
        # normalized subgradient step, then projection onto the boxes
        sq = np.zeros(B)
        for l in range(L):
            sq += np.einsum("boi,boi->b", gWs[l], gWs[l]) + np.einsum("bo,bo->b", gbs[l], gbs[l])
        scale = step / np.maximum(np.sqrt(sq), 1e-12)
        for l in range(L):
            Ws[l] = np.clip(Ws[l] + scale[:, None, None] * gWs[l], -q, q)
            bs[l] = np.clip(bs[l] + scale[:, None] * gbs[l], -bias_bounds[l], bias_bounds[l])
        step *= budget.decay
    return best_obj, best_Ws, best_bs


# The search itself runs on a strided subsample of at most this many nodes;
# every reported quantity (correlations, gains, audit values) is recomputed on
# the full shared quadrature, so the exact inequalities are unaffected.
_SEARCH_NODES = 2048


def _search_indices(quad: Quadrature):
    if quad.size <= _SEARCH_NODES:
        return None
    if quad.scheme_id == "low-discrepancy":
        # digital-sequence prefixes stay balanced; strides do not
        return np.arange(_SEARCH_NODES)
    rng = np.random.default_rng(quad.seed)
    return np.sort(rng.choice(quad.size, size=_SEARCH_NODES, replace=False))


def _search_sample(quad: Quadrature):
    idx = _search_indices(quad)
    if idx is None:
        return quad.nodes, quad.weights
    w = quad.weights[idx]
    return quad.nodes[idx], w / w.sum()


def _subsample_values(quad: Quadrature, vals: np.ndarray) -> np.ndarray:
    idx = _search_indices(quad)
    return vals if idx is None else vals[idx]


def _multistart(quad: Quadrature, spec: DictSpec, entry_inits, make_objective,
                budget: Budget, threads: int):
    """Run chunked multi-start ascent; returns per-entry best params stacked.

    `make_objective(lo, hi)` builds the batched objective for entries
    [lo, hi).  Chunks have a fixed size, so results are byte-identical for
    any worker count.
    """
    X, _ = _search_sample(quad)
    widths = spec.arch()
    L = len(widths) - 1
    q = spec.domain.q
    bias_bounds = [spec.domain.bias_bound(widths[l]) for l in range(L)]
    n_entries = len(entry_inits)
    n_chunks = (n_entries + _CHUNK - 1) // _CHUNK

    def run_chunk(ci):
        lo = ci * _CHUNK
        hi = min(lo + _CHUNK, n_entries)
        Ws = [np.stack([entry_inits[e][0][l] for e in range(lo, hi)]) for l in range(L)]
        bs = [np.stack([entry_inits[e][1][l] for e in range(lo, hi)]) for l in range(L)]
        return ci, _ascend_chunk(X, hi - lo, make_objective(lo, hi), Ws, bs,
                                 q, bias_bounds, budget)

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(pool.map(run_chunk, range(n_chunks)))
    else:
        results = dict(run_chunk(ci) for ci in range(n_chunks))
    Ws_all = [np.concatenate([results[ci][1][l] for ci in range(n_chunks)])
              for l in range(L)]
    bs_all = [np.concatenate([results[ci][2][l] for ci in range(n_chunks)])
              for l in range(L)]
    return Ws_all, bs_all


def _forward_all(X, Ws, bs):
    """Full-quadrature forward pass for a stack of parameter sets: (E, N)."""
    A = X[None]
    for W, b in zip(Ws, bs):
        A = np.clip(np.matmul(A, np.swapaxes(W, 1, 2)) + b[:, None, :], -1.0, 1.0)
    return A[:, :, 0]


def _entry_net(spec: DictSpec, Ws, bs, e: int) -> RepNet:
    layers = tuple(Layer(Ws[l][e], bs[l][e]) for l in range(len(Ws)))
    return RepNet(spec.domain, layers)


def ascend(quad: Quadrature, spec: DictSpec, target: FunctionOracle,
           budget: Budget, seed: int, threads: int = 1,
           warm_start: RepNet | None = None) -> AdversaryResult:
    """Maximize |<h_theta, target>| over the (d|r) parameter box.

    Per restart both sign objectives run; ties across restarts go to the
    higher value, then the lower restart index.  Deterministic given seed.
    """
    tvals = target.values(quad)
    R = budget.restarts

    # batch entries: (restart 0, +), (restart 0, -), (restart 1, +), ...
    inits = [_init_params(spec, i, seed) for i in range(R)]
    if warm_start is not None:
        inits[0] = _embed_params(warm_start, spec)
    signs = np.array([+1.0, -1.0] * R)
    entry_inits = [inits[e // 2] for e in range(2 * R)]

    _, ws = _search_sample(quad)
    base_c = ws * _subsample_values(quad, tvals)

    def make_objective(lo, hi):
        return _objective_linear(signs[lo:hi, None] * base_c[None, :])

    Ws, bs = _multistart(quad, spec, entry_inits, make_objective, budget, threads)

    # score every entry's best iterate on the full quadrature
    h = _forward_all(quad.nodes, Ws, bs)
    corr = h @ (quad.weights * tvals)
    scores = np.abs(corr)
    per_restart = tuple(float(max(scores[2 * i], scores[2 * i + 1])) for i in range(R))
    winner = int(np.argmax(scores))  # first max: lower restart index, then +
    witness = _entry_net(spec, Ws, bs, winner)
    return AdversaryResult(
        value=float(scores[winner]),
        witness=witness,
        restarts_run=R,
        per_restart_values=per_restart,
        seed=seed,
        budget=budget,
    )


def best_gain_element(quad: Quadrature, spec: DictSpec, residual: FunctionOracle,
                      budget: Budget, seed: int, threads: int = 1,
                      warm_start: RepNet | None = None) -> RepNet:
    """Maximize the single-pick energy gain <h,res>^2 / ||h||^2 directly.

    Polishes the plain correlation maximizer for the decomposition stages:
    the gain objective prefers elements that also FIT the residual, not just
    point in its direction.  Sign-invariant, so restarts are not duplicated.
    """
    rv = residual.values(quad)
    _, ws = _search_sample(quad)
    objective = _objective_gain(ws, _subsample_values(quad, rv))

    inits = [_init_params(spec, i, seed) for i in range(budget.restarts)]
    if warm_start is not None:
        inits[0] = _embed_params(warm_start, spec)

    Ws, bs = _multistart(quad, spec, inits, lambda lo, hi: objective, budget, threads)

    h = _forward_all(quad.nodes, Ws, bs)
    c = h @ (quad.weights * rv)
    h2 = np.maximum((h * h) @ quad.weights, 1e-14)
    gains = c * c / h2
    winner = int(np.argmax(gains))
    return _entry_net(spec, Ws, bs, winner)


def sigma_dr(quad: Quadrature, spec: DictSpec, f: FunctionOracle, g: FunctionOracle,
             budget: Budget, seed: int, threads: int = 1,
             warm_start: RepNet | None = None) -> AdversaryResult:
    """Lower-bound estimate of the observer metric between f and g.

    Symmetric in (f, g) because both sign objectives run for every restart.
    """
    diff = oracle_from_values(quad, f.values(quad) - g.values(quad), "difference")
    return ascend(quad, spec, diff, budget, seed, threads=threads, warm_start=warm_start)


def invisibility_audit(quad: Quadrature, spec: DictSpec, h: FunctionOracle,
                       epsilon: float, budget: Budget, seed: int,
                       threads: int = 1) -> dict:
    """Report whether any found dictionary element correlates above epsilon.

    A True verdict means "no witness found at this budget" and is not a proof.
    """
    result = ascend(quad, spec, h, budget, seed, threads=threads)
    invisible = result.value <= epsilon
    return {
        "invisible_up_to_budget": invisible,
        "result": result,
        "note": ("no witness found at this budget"
                 if invisible else "witness exceeds threshold"),
    }
