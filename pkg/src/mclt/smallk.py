"""Exact success probabilities and optimal distributions for tiny code lengths.

For k <= 5 every decoding state a receiver can be in is enumerable: a state
is the number of solved input symbols plus the multiset of reduced neighbor
sets buffered so far, canonicalized under relabeling of the unsolved
symbols (duplicate reduced sets add no information and collapse). Receiving
one more output symbol moves between states with probabilities that are
linear in the degree pmf in force, with hypergeometric structure
coefficients; propagating the state distribution n steps from the empty
state gives the exact probability of full recovery after n received
symbols.

A two-configuration scheme switches the pmf from P to Q once enough symbols
are solved; see :func:`default_switch` for the default switch point. The
optimizer maximizes the n = k success probability over the probability
simplex(es) with multi-start SLSQP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np
from scipy.optimize import minimize

from .prng import CounterRng, derive_seed

MAX_K = 5

_SIMPLEX_TOL = 1e-9


def default_switch(k: int) -> int:
    """Default solved-count switch point: k - 1, i.e. switch once u <= 1.

    A degree-k output symbol releases exactly when one unsolved symbol
    remains, so under this rule the joint optimum pairs a low-degree first
    pmf with a top-degree second pmf; it is also what the arbitrary-length
    scheme's u <= ceil(R) switch degenerates to at these code lengths. The
    k=2 closed-form optimum and the optimized k=3/k=4 values are all
    attained under this rule (they are not under switching at u <= 2).
    """
    return k - 1


@dataclass(frozen=True)
class DecodeState:
    """u unsolved symbols and the canonical family of buffered reduced sets."""

    u: int
    buffered: frozenset[frozenset[int]]

    def solved(self, k: int) -> int:
        return k - self.u


def _canonical_family(u: int, sets) -> frozenset[frozenset[int]]:
    """Minimal relabeling of a family of subsets of range(u)."""
    sets = [tuple(sorted(s)) for s in sets]
    if not sets or u <= 1:
        return frozenset(frozenset(s) for s in sets)
    best = None
    for perm in permutations(range(u)):
        key = tuple(sorted(tuple(sorted(perm[x] for x in s)) for s in sets))
        if best is None or key < best:
            best = key
    return frozenset(frozenset(s) for s in best)


def _peel(u: int, family, released: int) -> DecodeState:
    """Solve one vertex and cascade, returning the canonical successor state."""
    sets = [set(s) for s in family]
    solved = set()
    stack = [released]
    while stack:
        x = stack.pop()
        if x in solved:
            continue
        solved.add(x)
        for s in sets:
            if x in s:
                s.discard(x)
                if len(s) == 1:
                    stack.append(next(iter(s)))
    remaining = [x for x in range(u) if x not in solved]
    relabel = {old: new for new, old in enumerate(remaining)}
    survivors = [{relabel[x] for x in s} for s in sets if len(s) >= 2]
    new_u = len(remaining)
    return DecodeState(u=new_u, buffered=_canonical_family(new_u, survivors))


class TransitionGraph:
    """Canonical decoding-state graph with per-degree transition coefficients.

    ``edges[sid] = (targets, mat)`` where ``mat[t, d-1]`` is the probability
    of moving to ``targets[t]`` given that the received symbol has degree d;
    the full transition probability is ``mat @ pmf`` for the pmf active at
    the source state. For every degree, each row of coefficients sums to 1.
    """

    def __init__(self, k: int, switch_after: int | None):
        if not 1 <= k <= MAX_K:
            raise ValueError(f"state enumeration supports 1 <= k <= {MAX_K}, got {k}")
        if switch_after is not None and not 0 <= switch_after <= k:
            raise ValueError(f"switch_after must be in 0..{k}, got {switch_after}")
        self.k = k
        self.switch_after = switch_after
        self.states: list[DecodeState] = []
        self._ids: dict[DecodeState, int] = {}
        self.edges: list[tuple[np.ndarray, np.ndarray]] = []
        self.initial_id = self._intern(DecodeState(u=k, buffered=frozenset()))
        self._build()
        self.absorbing_id = self._ids[DecodeState(u=0, buffered=frozenset())]
        # which pmf (0 = P, 1 = Q) is in force at each state
        self.pmf_index = np.array(
            [
                1 if switch_after is not None and s.solved(k) >= switch_after else 0
                for s in self.states
            ],
            dtype=np.intp,
        )

    def _intern(self, state: DecodeState) -> int:
        sid = self._ids.get(state)
        if sid is None:
            sid = len(self.states)
            self._ids[state] = sid
            self.states.append(state)
            self.edges.append(None)
        return sid

    def _build(self):
        k = self.k
        pending = [self.initial_id]
        while pending:
            sid = pending.pop()
            if self.edges[sid] is not None:
                continue
            state = self.states[sid]
            u = state.u
            # weight per degree d of hitting one SPECIFIC i-subset of the
            # unsolved symbols: C(k-u, d-i) / C(k, d)
            weights = {}
            for i in range(0, u + 1):
                w = np.zeros(k)
                for d in range(max(i, 1), k + 1):
                    if 0 <= d - i <= k - u:
                        w[d - 1] = math.comb(k - u, d - i) / math.comb(k, d)
                if w.any():
                    weights[i] = w
            acc: dict[int, np.ndarray] = {}
            for i, w in weights.items():
                for subset in combinations(range(u), i):
                    if i == 0:
                        target = state
                    elif i == 1:
                        target = _peel(u, state.buffered, subset[0])
                    else:
                        cand = set(map(frozenset, state.buffered)) | {frozenset(subset)}
                        target = DecodeState(u=u, buffered=_canonical_family(u, cand))
                    tid = self._intern(target)
                    if tid in acc:
                        acc[tid] = acc[tid] + w
                    else:
                        acc[tid] = w.copy()
                    if self.edges[tid] is None and tid != sid:
                        pending.append(tid)
            targets = np.array(sorted(acc), dtype=np.intp)
            mat = np.vstack([acc[t] for t in targets])
            self.edges[sid] = (targets, mat)

    def __len__(self) -> int:
        return len(self.states)


def build_graph(k: int, switch_after_solved: int | None = None) -> TransitionGraph:
    """Enumerate the complete canonical decoding-state graph.

    ``switch_after_solved=None`` builds the pure single-distribution graph;
    an integer s means the Q distribution takes over at >= s solved.
    """
    return TransitionGraph(k, switch_after_solved)


def _as_pmf(p, k: int, name: str) -> np.ndarray:
    arr = np.asarray(getattr(p, "pmf", p), dtype=np.float64)
    if arr.shape != (k,):
        raise ValueError(f"{name} must have length {k}, got shape {arr.shape}")
    if np.any(arr < -_SIMPLEX_TOL) or abs(arr.sum() - 1.0) > 1e-6:
        raise ValueError(f"{name} must be a probability vector, got {arr!r}")
    return np.clip(arr, 0.0, None)


def _propagate(graph: TransitionGraph, P: np.ndarray, Q: np.ndarray | None, n: int) -> float:
    """Forward-propagate n receptions; no input validation (optimizer hot path)."""
    pmfs = (P, P if Q is None else Q)
    # transition probabilities are fixed given (P, Q); evaluate once per state
    step_probs = [
        (targets, mat @ pmfs[graph.pmf_index[sid]])
        for sid, (targets, mat) in enumerate(graph.edges)
    ]
    v = np.zeros(len(graph.states))
    v[graph.initial_id] = 1.0
    for _ in range(n):
        nxt = np.zeros_like(v)
        for sid in np.nonzero(v)[0]:
            targets, probs = step_probs[sid]
            nxt[targets] += v[sid] * probs
        v = nxt
    return float(v[graph.absorbing_id])


def success_probability(graph: TransitionGraph, P, Q=None, n: int | None = None) -> float:
    """Probability of full recovery after exactly n received symbols (default n = k)."""
    k = graph.k
    if n is None:
        n = k
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    P = _as_pmf(P, k, "P")
    if graph.switch_after is not None:
        if Q is None:
            raise ValueError("this graph switches distributions; Q is required")
        Q = _as_pmf(Q, k, "Q")
    elif Q is not None:
        Q = _as_pmf(Q, k, "Q")
    return _propagate(graph, P, Q, n)


@dataclass
class OptResult:
    """Best distributions found and per-restart diagnostics."""

    k: int
    switch_after: int | None
    P: np.ndarray
    Q: np.ndarray | None
    value: float
    restarts: int
    best_restart: int
    restart_values: list[float]

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "switch_after": self.switch_after,
            "P": [round(float(x), 12) for x in self.P],
            "Q": None if self.Q is None else [round(float(x), 12) for x in self.Q],
            "value": float(self.value),
            "restarts": self.restarts,
            "best_restart": self.best_restart,
        }


def optimize(
    k: int,
    switch_after_solved: int | None = None,
    n: int | None = None,
    restarts: int = 50,
    seed: int = 0,
) -> OptResult:
    """Maximize the n = k success probability over the simplex(es).

    Multi-start SLSQP from Dirichlet(1) starting points, best result polished
    with a tight tolerance. Joint optimization over (P, Q) when the graph
    switches.
    """
    graph = build_graph(k, switch_after_solved)
    two = switch_after_solved is not None
    dim = 2 * k if two else k
    rng = np.random.default_rng(seed)

    steps = k if n is None else n

    def split(x):
        return (x[:k], x[k:]) if two else (x, None)

    def objective(x):
        P, Q = split(x)
        return -_propagate(graph, P, Q, steps)

    bounds = [(0.0, 1.0)] * dim
    constraints = [{"type": "eq", "fun": lambda x: x[:k].sum() - 1.0}]
    if two:
        constraints.append({"type": "eq", "fun": lambda x: x[k:].sum() - 1.0})

    best_x, best_val, best_idx = None, np.inf, -1
    values = []
    for r in range(restarts):
        x0 = rng.dirichlet(np.ones(k))
        if two:
            x0 = np.concatenate([x0, rng.dirichlet(np.ones(k))])
        res = minimize(objective, x0, method="SLSQP", bounds=bounds,
                       constraints=constraints, options={"maxiter": 300, "ftol": 1e-10})
        values.append(-float(res.fun))
        if res.fun < best_val:
            best_x, best_val, best_idx = res.x, float(res.fun), r
    res = minimize(objective, best_x, method="SLSQP", bounds=bounds,
                   constraints=constraints, options={"maxiter": 1000, "ftol": 1e-14})
    if res.fun <= best_val:
        best_x, best_val = res.x, float(res.fun)

    def clean(v):
        v = np.clip(v, 0.0, 1.0)
        return v / v.sum()

    P, Q = split(best_x)
    return OptResult(
        k=k,
        switch_after=switch_after_solved,
        P=clean(P),
        Q=None if Q is None else clean(Q),
        value=-best_val,
        restarts=restarts,
        best_restart=best_idx,
        restart_values=values,
    )


def monte_carlo_success(
    k: int,
    P,
    Q=None,
    switch_after_solved: int | None = None,
    n: int | None = None,
    trials: int = 100_000,
    seed: int = 0,
) -> tuple[float, float]:
    """Simulated estimate of the n-reception success probability, with stderr.

    Independent oracle for :func:`success_probability`: runs real decode
    sessions (bitmask peeling) rather than the state graph.
    """
    if not 1 <= k <= 63:
        raise ValueError(f"bitmask simulation supports k <= 63, got {k}")
    if n is None:
        n = k
    P = _as_pmf(P, k, "P")
    cdf_p = np.cumsum(P).tolist()
    if switch_after_solved is not None:
        if Q is None:
            raise ValueError("switching scheme requires Q")
        cdf_q = np.cumsum(_as_pmf(Q, k, "Q")).tolist()
    else:
        cdf_q = cdf_p
        switch_after_solved = k + 1  # never
    from bisect import bisect_right

    rng = CounterRng(derive_seed(seed, k, n))
    full = (1 << k) - 1
    successes = 0
    for _ in range(trials):
        recovered = 0
        nsolved = 0
        buf: list[int] = []
        for _step in range(n):
            cdf = cdf_q if nsolved >= switch_after_solved else cdf_p
            d = bisect_right(cdf, rng.uniform()) + 1
            mask = 0
            for j in range(k - d, k):
                t = rng.randbelow(j + 1)
                bit = 1 << t
                if mask & bit:
                    mask |= 1 << j
                else:
                    mask |= bit
            m = mask & ~recovered
            pc = m.bit_count()
            if pc == 0:
                continue
            if pc >= 2:
                buf.append(m)
                continue
            stack = [m]
            while stack:
                bit = stack.pop()
                if recovered & bit:
                    continue
                recovered |= bit
                nsolved += 1
                nxt = []
                for bm in buf:
                    bm &= ~bit
                    c = bm.bit_count()
                    if c == 1:
                        stack.append(bm)
                    elif c >= 2:
                        nxt.append(bm)
                buf = nxt
            if recovered == full:
                break
        if recovered == full:
            successes += 1
    p_hat = successes / trials
    stderr = math.sqrt(max(p_hat * (1.0 - p_hat), 1.0 / trials) / trials)
    return p_hat, stderr
