"""Explicit Kripke structures, model checking, frame checks and witness extraction.

Also hosts ``brute_force_sat``, an independent satisfiability oracle used by
the tests: it shares nothing with the elimination procedure beyond the
formula datatypes.
"""

from __future__ import annotations

import itertools
import json
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Hashable, Mapping, Sequence

import numpy as np

from .formula import And, Common, Everyone, Formula, Not, Prop, iter_nodes, props_of, sub
from .setalgebra import Agent, GroupDesc, GroupTable

State = Hashable

LOGICS = ("k", "t", "s4", "s5", "kd45")


class ModelError(ValueError):
    pass


class ExtractionError(RuntimeError):
    """The surviving tableau did not yield a model; this indicates a solver bug."""


@dataclass
class KripkeModel:
    """A finite structure (S, π, {K_i}).

    ``a1`` marks the individually named agents when the structure belongs
    to a mixed class; ``None`` means every agent obeys the plain frame
    conditions of the logic.
    """

    states: list
    valuation: dict
    relations: dict
    agents: list
    a1: frozenset | None = None
    _succ: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        known = set(self.states)
        if len(known) != len(self.states):
            raise ModelError("duplicate state ids")
        for a, pairs in self.relations.items():
            if a not in self.agents:
                raise ModelError(f"relation for undeclared agent {a!r}")
            for s, t in pairs:
                if s not in known or t not in known:
                    raise ModelError(f"edge ({s!r}, {t!r}) leaves the state set")
        for a in self.agents:
            self.relations.setdefault(a, set())
        self.relations = {a: sorted(set(p), key=repr) for a, p in self.relations.items()}
        self.valuation = {s: frozenset(self.valuation.get(s, ())) for s in self.states}

    def successors(self, a) -> dict:
        hit = self._succ.get(a)
        if hit is None:
            hit = {s: [] for s in self.states}
            for s, t in self.relations.get(a, ()):
                hit[s].append(t)
            self._succ[a] = hit
        return hit

    def edge_set(self, a) -> set:
        return set(self.relations.get(a, ()))

    def to_json(self, logic: str, sigma: Mapping | None = None) -> str:
        ids = {s: i for i, s in enumerate(self.states)}
        doc = {
            "logic": logic,
            "states": [{"id": ids[s], "true": sorted(p for p in self.valuation[s] if not p.startswith("_"))} for s in self.states],
            "relations": {str(a): sorted([ids[s], ids[t]] for s, t in self.relations[a]) for a in self.agents},
            "sigma": {str(g): sorted(v) for g, v in (sigma or {}).items()},
            "named": None if self.a1 is None else sorted(self.a1),
        }
        return json.dumps(doc, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "KripkeModel":
        doc = json.loads(text)
        states = [s["id"] for s in doc["states"]]
        val = {s["id"]: frozenset(s["true"]) for s in doc["states"]}
        rel = {int(a): {tuple(p) for p in ps} for a, ps in doc["relations"].items()}
        named = doc.get("named")
        return cls(states, val, rel, sorted(rel), None if named is None else frozenset(named))


# ---------------------------------------------------------------------------
# Model checking


def _resolver(table: GroupTable | None, agents: Sequence) -> Callable[[object], list]:
    cache: dict = {}

    def members(g) -> list:
        hit = cache.get(g)
        if hit is None:
            if isinstance(g, frozenset):
                hit = [a for a in agents if a in g]
            elif isinstance(g, Agent) and table is None:
                hit = [a for a in agents if a == g.agent]
            elif isinstance(g, GroupDesc):
                if table is None:
                    raise ModelError(f"group {g} needs a group table")
                s = table.eval(g)
                hit = [a for a in agents if a in s]
            else:
                raise ModelError(f"unknown group {g!r}")
            cache[g] = hit
        return hit

    return members


def extension(M: KripkeModel, f: Formula, table: GroupTable | None = None, _memo: dict | None = None) -> frozenset:
    """Set of states of ``M`` where ``f`` holds."""
    memo = {} if _memo is None else _memo
    members = memo.setdefault("__members__", _resolver(table, M.agents))
    states = M.states
    for g in iter_nodes(f):  # children before parents
        if g in memo:
            continue
        if isinstance(g, Prop):
            out = frozenset(s for s in states if g.name in M.valuation[s])
        elif isinstance(g, Not):
            out = frozenset(states) - memo[g.child]
        elif isinstance(g, And):
            out = memo[g.left] & memo[g.right]
        elif isinstance(g, Everyone):
            child = memo[g.child]
            agents = members(g.group)
            out = frozenset(
                s for s in states if all(t in child for a in agents for t in M.successors(a)[s])
            )
        elif isinstance(g, Common):
            # fails exactly at states with a path of length >= 1 to a ¬ψ state
            child = memo[g.child]
            agents = members(g.group)
            pred: dict = {s: [] for s in states}
            for a in agents:
                for s, ts in M.successors(a).items():
                    for t in ts:
                        pred[t].append(s)
            bad: set = set()
            queue = deque(s for s in states if s not in child)
            frontier = set(queue)
            while queue:
                t = queue.popleft()
                for s in pred[t]:
                    if s not in bad:
                        bad.add(s)
                        if s not in frontier:
                            frontier.add(s)
                            queue.append(s)
            out = frozenset(states) - bad
        else:
            raise ModelError(f"unknown formula node {g!r}")
        memo[g] = out
    return memo[f]


def check(M: KripkeModel, s: State, f: Formula, table: GroupTable | None = None) -> bool:
    if s not in M.valuation:
        raise ModelError(f"unknown state {s!r}")
    return s in extension(M, f, table)


# ---------------------------------------------------------------------------
# Frame conditions


def is_reflexive(states, edges: set) -> bool:
    return all((s, s) in edges for s in states)


def is_serial(states, edges: set) -> bool:
    has = {s for s, _ in edges}
    return all(s in has for s in states)


def is_symmetric(edges: set) -> bool:
    return all((t, s) in edges for s, t in edges)


def is_transitive(edges: set) -> bool:
    succ: dict = {}
    for s, t in edges:
        succ.setdefault(s, set()).add(t)
    return all(u in succ[s] for s, t in edges for u in succ.get(t, ()))


def is_euclidean(edges: set) -> bool:
    succ: dict = {}
    for s, t in edges:
        succ.setdefault(s, set()).add(t)
    return all((t, u) in edges for s, ts in succ.items() for t in ts for u in ts)


def is_secondarily_reflexive(edges: set) -> bool:
    return all((t, t) in edges for _, t in edges)


def frame_ok(states, edges: set, logic: str, named: bool = True) -> bool:
    """Frame conditions for one agent; ``named=False`` selects the atom-agent variant of mixed classes."""
    if logic == "k":
        return True
    if logic == "t":
        return is_reflexive(states, edges)
    if logic == "s4":
        return is_reflexive(states, edges) and (not named or is_transitive(edges))
    if logic == "s5":
        return is_reflexive(states, edges) and is_symmetric(edges) and (not named or is_transitive(edges))
    if logic == "kd45":
        if not named:
            return is_serial(states, edges) and is_secondarily_reflexive(edges)
        return is_serial(states, edges) and is_transitive(edges) and is_euclidean(edges)
    raise ModelError(f"unknown logic {logic!r}")


def verify_frame(M: KripkeModel, logic: str) -> bool:
    for a in M.agents:
        named = M.a1 is None or a in M.a1
        if not frame_ok(M.states, M.edge_set(a), logic, named):
            return False
    return True


# ---------------------------------------------------------------------------
# Witness extraction


MAX_EXTRACTED = 20000


def extract_model(engine) -> KripkeModel:
    """Finite structure over the translated alphabet satisfying the root formula.

    Checks the result (frame conditions and the formula at the root) and
    raises ``ExtractionError`` if either fails.
    """
    if not len(engine.roots):
        raise ExtractionError("no surviving state contains the formula")
    if engine.a1 and engine.logic in ("s5", "kd45"):
        M, root = _extract_vectors(engine)
    else:
        M, root = _extract_rows(engine)
    if not verify_frame(M, engine.logic):
        raise ExtractionError("extracted structure violates the frame conditions")
    ext_memo: dict = {}
    if root not in extension(M, engine.phi, None, ext_memo):
        raise ExtractionError("extracted structure does not satisfy the formula")
    M.root = root
    return M


def _members(engine) -> dict[int, int]:
    """agent -> representative relation."""
    return {m: rep for rep, r in engine.rels.items() for m in r.members}


def _row_props(engine, r: int) -> frozenset:
    lay = engine.lay
    sc = int(engine.row_sub[r])
    return frozenset(lay.formulas[fi].name for fi in lay.atoms if isinstance(lay.formulas[fi], Prop) and engine.T[sc, fi])


def _layers(engine) -> list[tuple[np.ndarray, np.ndarray]]:
    return [engine.reach_layers(engine.alive, ci) for ci in range(len(engine.lay.cforms))]


def _extract_rows(engine):
    """Generated submodel of surviving rows, grown by following witnesses."""
    lay = engine.lay
    alive_idx = np.nonzero(engine.alive)[0]
    layers = _layers(engine)
    agents = sorted(a.ident for a in engine.alpha.agents)
    rep = _members(engine)
    root = int(engine.roots[0])
    chosen = [root]
    seen = {root}
    queue = deque([root])

    def add(t: int) -> None:
        if t not in seen:
            if len(seen) >= MAX_EXTRACTED:
                raise ExtractionError("extracted structure too large")
            seen.add(t)
            chosen.append(t)
            queue.append(t)

    def first(a: int, s: int, cand: np.ndarray) -> int | None:
        if len(cand) == 0:
            return None
        ok = engine.related_mask(a, s, cand)
        hit = np.nonzero(ok)[0]
        return int(cand[hit[0]]) if len(hit) else None

    while queue:
        s = queue.popleft()
        sc = int(engine.row_sub[s])
        owner = engine.owners[int(engine.row_owner[s])]
        for e in range(len(lay.eforms)):
            if not int(engine.neg_e_sh[sc]) >> e & 1:
                continue
            cand = alive_idx[~engine.holds(alive_idx, lay.e_child[e])]
            t = None
            for a in sorted(lay.e_group[e]):
                t = first(a, s, cand)
                if t is not None:
                    break
            if t is None:
                raise ExtractionError("missing witness for an everyone-knows obligation")
            add(t)
        if owner is not None:
            negx = int(engine.row_neg_ext[s])
            for k, (_, lit) in enumerate(engine.ext[owner]):
                if negx >> k & 1:
                    cand = alive_idx[~engine.holds(alive_idx, lit)]
                    t = first(owner, s, cand)
                    if t is None:
                        raise ExtractionError("missing witness for an extension atom")
                    add(t)
        for ci in range(len(lay.cforms)):
            if engine.T[sc, lay.cforms[ci]]:
                continue
            reach, layer = layers[ci]
            target0 = ~engine.holds(alive_idx, lay.c_child[ci])
            cur = s
            while True:
                k = layer[cur]
                if k < 1:
                    raise ExtractionError("common-knowledge obligation has no path")
                good = target0 | ((layer[alive_idx] >= 1) & (layer[alive_idx] < k))
                cand = alive_idx[good]
                nxt = None
                for a in sorted(lay.c_group[ci]):
                    nxt = first(a, cur, cand)
                    if nxt is not None:
                        break
                if nxt is None:
                    raise ExtractionError("broken common-knowledge path")
                add(nxt)
                if not engine.holds(np.array([nxt]), lay.c_child[ci])[0]:
                    break
                cur = nxt
        if engine.logic == "kd45":
            for a in engine.rels:
                t = first(a, s, alive_idx)
                if t is None:
                    raise ExtractionError("seriality witness missing")
                add(t)
    rows = np.array(sorted(chosen), dtype=np.int64)
    relations: dict[int, set] = {}
    cache: dict[int, set] = {}
    for a in agents:
        r = rep[a]
        if r not in cache:
            edges = set()
            for s in rows.tolist():
                ok = engine.related_mask(r, s, rows)
                edges.update((s, int(t)) for t in rows[ok])
            cache[r] = edges
        relations[a] = cache[r]
    valuation = {int(s): _row_props(engine, int(s)) for s in rows}
    a1 = frozenset(engine.a1) if engine.logic in ("s4", "s5", "kd45") else None
    M = KripkeModel([int(s) for s in rows], valuation, relations, agents, a1)
    return M, root


def _extract_vectors(engine):
    """Structure over complete states for S5/KD45 with named agents.

    Every state is a complete state found by the engine's cover search. A
    ¬C_G ψ obligation is discharged by following the fixpoint layers: each
    step lands on a complete state whose witness for the same obligation
    sits on a strictly lower layer, so the walk reaches ¬ψ.
    """
    e = engine
    lay = e.lay
    a1 = list(e.a1)
    pos = {j: i for i, j in enumerate(a1)}
    alive_idx = np.nonzero(e.alive)[0]
    agents = sorted(a.ident for a in e.alpha.agents)
    rep = _members(e)
    reps2 = sorted({rep[a] for a in e.a2 if a in rep})
    final = e._final_ctx

    def own(t: int) -> int:
        return e.owners[int(e.row_owner[t])]

    def complete(ctx, t: int) -> tuple:
        choice = ctx.cover(int(e.row_sub[t]), {own(t): t})
        if choice is None:
            raise ExtractionError("surviving row is not part of a complete state")
        return tuple(choice[j] for j in a1)

    def targets(v: tuple, a: int, ok: np.ndarray) -> np.ndarray:
        """Surviving rows in ``ok`` an a-step away from ``v``; named steps stay on a-owned rows."""
        if a in pos:
            cand = e.owner_rows[a]
            cand = cand[e.alive[cand] & ok[cand]]
            return cand[e.related_mask(a, v[pos[a]], cand)] if len(cand) else cand
        cand = alive_idx[ok[alive_idx]]
        return cand[e.related_mask(a, v[0], cand)] if len(cand) else cand

    def step(v: tuple, agents_: list[int], ok: np.ndarray, ctx) -> tuple | None:
        for a in agents_:
            t = targets(v, a, ok)
            if len(t):
                return complete(ctx, int(t[0]))
        return None

    def group_agents(group) -> list[int]:
        return [a for a in sorted(group) if a in pos] + sorted({rep[a] for a in group if a in rep and a not in pos})

    def c_level(v: tuple, c: int) -> tuple[int, int | None]:
        """Lowest layer among the components that refute obligation ``c`` at ``v``."""
        own_layer, a2_layer, _ = e._layers[c]
        best, who = -1, None
        group = lay.c_group[c]
        for j in a1:
            if j not in group:
                continue
            rows = e._round["rows"][j]
            k = int(np.searchsorted(rows, v[pos[j]]))
            lv = int(own_layer[j][k]) if k < len(rows) and rows[k] == v[pos[j]] else -1
            if lv >= 0 and (best < 0 or lv < best):
                best, who = lv, j
        lv = int(a2_layer[int(e.row_sub[v[0]])])
        if lv >= 0 and (best < 0 or lv < best):
            best, who = lv, None
        return best, who

    def chase(v: tuple, c: int) -> list[tuple]:
        """Complete states along a G-path from ``v`` ending where ψ fails."""
        group = lay.c_group[c]
        _, _, l_layer = e._layers[c]
        notpsi = np.zeros(e.n, dtype=bool)
        notpsi[alive_idx] = ~e.holds(alive_idx, lay.c_child[c])
        path = []
        while True:
            lv, who = c_level(v, c)
            if lv < 0:
                raise ExtractionError("common-knowledge obligation has no witness")
            via = [who] if who is not None else [a for a in group_agents(group) if a not in pos]
            w = step(v, via, notpsi, final)
            if w is not None:
                path.append(w)
                return path
            if lv == 0:
                raise ExtractionError("common-knowledge witness missing on the first layer")
            ok = (l_layer >= 0) & (l_layer <= lv - 1)
            t = None
            for a in via:
                cand = targets(v, a, ok)
                if len(cand):
                    t = int(cand[np.argmin(l_layer[cand])])
                    break
            if t is None:
                raise ExtractionError("common-knowledge layer has no lower successor")
            w = complete(e.layered_ctx(c, int(l_layer[t])), t)
            if len(path) >= MAX_EXTRACTED:
                raise ExtractionError("common-knowledge path too long")
            path.append(w)
            v = w

    v0 = complete(final, int(e.roots[0]))
    seen = {v0}
    order = [v0]
    queue = deque([v0])

    def add(w: tuple) -> None:
        if w not in seen:
            if len(seen) >= MAX_EXTRACTED:
                raise ExtractionError("extracted structure too large")
            seen.add(w)
            order.append(w)
            queue.append(w)

    everywhere = np.ones(e.n, dtype=bool)
    while queue:
        v = queue.popleft()
        sc = int(e.row_sub[v[0]])
        for k in range(len(lay.eforms)):
            if not int(e.neg_e_sh[sc]) >> k & 1:
                continue
            bad = np.zeros(e.n, dtype=bool)
            bad[alive_idx] = ~e.holds(alive_idx, lay.e_child[k])
            w = step(v, group_agents(lay.e_group[k]), bad, final)
            if w is None:
                raise ExtractionError("missing witness for an everyone-knows obligation")
            add(w)
        for j in a1:
            x = v[pos[j]]
            negs = int(e.row_neg_ext[x])
            for k, (_, lit) in enumerate(e.ext[j]):
                if negs >> k & 1:
                    bad = np.zeros(e.n, dtype=bool)
                    bad[alive_idx] = ~e.holds(alive_idx, lit)
                    w = step(v, [j], bad, final)
                    if w is None:
                        raise ExtractionError("missing witness for a named-agent obligation")
                    add(w)
        for c in range(len(lay.cforms)):
            if e.T[sc, lay.cforms[c]]:
                continue
            for w in chase(v, c):
                add(w)
        if e.logic == "kd45":
            for a in a1 + reps2:
                w = step(v, [a], everywhere, final)
                if w is None:
                    raise ExtractionError("seriality witness missing")
                add(w)

    states = list(range(len(order)))
    relations: dict[int, set] = {a: set() for a in agents}
    for a in agents:
        r = rep[a]
        edges = relations[a]
        for i, v in enumerate(order):
            for j, w in enumerate(order):
                if a in pos:
                    p = pos[a]
                    if e.related(a, v[p], w[p]):
                        edges.add((i, j))
                elif any(e.related(r, v[p], w[p]) for p in range(len(a1))):
                    edges.add((i, j))
    valuation = {i: _row_props(e, v[0]) for i, v in enumerate(order)}
    M = KripkeModel(states, valuation, relations, agents, frozenset(a1))
    M.vectors = order
    return M, 0


# ---------------------------------------------------------------------------
# Brute-force oracle


@dataclass
class BruteResult:
    sat: bool
    model: KripkeModel | None
    root: State | None
    bound: int


def _group_members(f: Formula, agents: Sequence, table: GroupTable | None) -> dict:
    members = _resolver(table, agents)
    return {g.group: members(g.group) for g in iter_nodes(f) if isinstance(g, (Everyone, Common))}


def frames(n: int, logic: str, named: bool = True) -> list[frozenset]:
    """All relations on ``range(n)`` satisfying the logic's frame conditions (literal enumeration)."""
    pairs = [(s, t) for s in range(n) for t in range(n)]
    out = []
    for bits in range(1 << len(pairs)):
        edges = {pairs[i] for i in range(len(pairs)) if bits >> i & 1}
        if frame_ok(range(n), edges, logic, named):
            out.append(frozenset(edges))
    return out


def brute_force_enumerate(
    f: Formula, agents: Sequence, logic: str, max_states: int, table: GroupTable | None = None, a1=None
) -> BruteResult:
    """Exhaustive search over all frame-respecting models with up to ``max_states`` states.

    Intended for tiny bounds: the search is literally over every relation
    tuple and valuation, with the pointed state fixed to 0.
    """
    props = props_of(f)
    for n in range(1, max_states + 1):
        fr = {
            a: frames(n, logic, a1 is None or a in a1) for a in agents
        }
        count = len(props) * n
        total = (1 << count) * int(np.prod([len(v) for v in fr.values()], dtype=np.float64))
        if total > 5_000_000:
            raise ModelError("enumeration too large; use the CNF search")
        for rels in itertools.product(*(fr[a] for a in agents)):
            relations = dict(zip(agents, (set(r) for r in rels)))
            for vbits in range(1 << count):
                val = {s: {p for i, p in enumerate(props) if vbits >> (s * len(props) + i) & 1} for s in range(n)}
                M = KripkeModel(list(range(n)), val, {a: set(r) for a, r in relations.items()}, list(agents), a1)
                if check(M, 0, f, table):
                    return BruteResult(True, M, 0, max_states)
    return BruteResult(False, None, None, max_states)


def brute_force_sat(
    f: Formula,
    agents: Sequence,
    logic: str,
    max_states: int,
    table: GroupTable | None = None,
    a1=None,
) -> BruteResult:
    """Search for a model with exactly ``max_states`` states via a CNF encoding.

    Every model with fewer states extends to one of exactly ``max_states``
    states by adding unreachable reflexive points, which preserves every
    frame class here, so this covers all models up to the bound. The model
    found is re-checked with ``check``.
    """
    from pysat.solvers import Solver

    n = max_states
    agents = list(agents)
    if n < 1:
        raise ModelError("bound must be positive")
    if n * n * max(1, len(agents)) > 4096:
        raise ModelError("bound too large for the brute-force oracle")
    members = _group_members(f, agents, table)
    nodes = [g for g in sub(f) if not isinstance(g, Not)]
    counter = itertools.count(1)
    x = {(s, g): next(counter) for s in range(n) for g in nodes}
    r = {(a, s, t): next(counter) for a in agents for s in range(n) for t in range(n)}
    clauses: list[list[int]] = []

    def lit(s: int, g: Formula) -> int:
        pos = True
        while isinstance(g, Not):
            g = g.child
            pos = not pos
        return x[(s, g)] if pos else -x[(s, g)]

    for g in nodes:
        for s in range(n):
            xs = x[(s, g)]
            if isinstance(g, And):
                a, b = lit(s, g.left), lit(s, g.right)
                clauses += [[-xs, a], [-xs, b], [xs, -a, -b]]
            elif isinstance(g, Everyone):
                witnesses = []
                for a in members[g.group]:
                    for t in range(n):
                        c = lit(t, g.child)
                        clauses.append([-xs, -r[(a, s, t)], c])
                        w = next(counter)
                        clauses += [[-w, r[(a, s, t)]], [-w, -c]]
                        witnesses.append(w)
                clauses.append([xs] + witnesses)
            elif isinstance(g, Common):
                pass
    # common knowledge: positive half by unfolding, negative half by bounded reachability
    for g in nodes:
        if not isinstance(g, Common):
            continue
        ag = members[g.group]
        reach = [{s: next(counter) for s in range(n)} for _ in range(n + 1)]
        for s in range(n):
            xs = x[(s, g)]
            for a in ag:
                for t in range(n):
                    clauses.append([-xs, -r[(a, s, t)], lit(t, g.child)])
                    clauses.append([-xs, -r[(a, s, t)], x[(t, g)]])
            clauses.append([xs, reach[n][s]])
            for k in range(1, n + 1):
                opts = []
                for a in ag:
                    for t in range(n):
                        w = next(counter)
                        clauses.append([-w, r[(a, s, t)]])
                        if k == 1:
                            clauses.append([-w, -lit(t, g.child)])
                        else:
                            clauses.append([-w, -lit(t, g.child), reach[k - 1][t]])
                        opts.append(w)
                clauses.append([-reach[k][s]] + opts)
    # frame conditions
    for a in agents:
        named = a1 is None or a in a1
        R = lambda s, t: r[(a, s, t)]  # noqa: E731
        refl = logic in ("t", "s4", "s5")
        trans = (logic in ("s4", "s5", "kd45")) and named
        symm = logic == "s5"
        eucl = logic == "kd45" and named
        serial = logic == "kd45"
        sec = logic == "kd45" and not named
        for s in range(n):
            if refl:
                clauses.append([R(s, s)])
            if serial:
                clauses.append([R(s, t) for t in range(n)])
            for t in range(n):
                if symm:
                    clauses.append([-R(s, t), R(t, s)])
                if sec:
                    clauses.append([-R(s, t), R(t, t)])
                for u in range(n):
                    if trans:
                        clauses.append([-R(s, t), -R(t, u), R(s, u)])
                    if eucl:
                        clauses.append([-R(s, t), -R(s, u), R(t, u)])
    clauses.append([lit(0, f)])
    with Solver(name="cadical153", bootstrap_with=clauses) as solver:
        if not solver.solve():
            return BruteResult(False, None, None, n)
        model = set(v for v in solver.get_model() if v > 0)
    val = {s: {g.name for g in nodes if isinstance(g, Prop) and x[(s, g)] in model} for s in range(n)}
    rel = {a: {(s, t) for s in range(n) for t in range(n) if r[(a, s, t)] in model} for a in agents}
    M = KripkeModel(list(range(n)), val, rel, agents, a1)
    if not check(M, 0, f, table) or not verify_frame(M, logic):
        raise ModelError("CNF model failed the direct check")
    return BruteResult(True, M, 0, n)
