"""State-elimination satisfiability procedures over a translated agent alphabet.

States are maximal consistent assignments to the closure of the formula.
Only propositions and everyone-knows formulas are free bits: conjunctions
are computed, and C_G ψ takes the value of its unfolding E_G(ψ ∧ C_G ψ), so
every bit pattern is a consistent state.

For S4, S5 and KD45 with individually named agents (A1), each such agent
owns a copy of the state space extended by its own K_i atoms; the remaining
agents (A2) stand for whole large atoms of the real universe.

Rows are stored as (owner, shared code, extension code); all accessibility
tests reduce to inclusions between uint64 literal masks (see ``kernels``).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .formula import And, Common, Everyone, Formula, Not, Prop, common_unfolding, length, sub
from .reduction import TranslatedAlphabet, translate
from .setalgebra import GroupTable

DEFAULT_MAX_STATES = 1 << 22
ONE = np.uint64(1)
ZERO = np.uint64(0)


class CapExceeded(RuntimeError):
    pass


class BoundViolation(AssertionError):
    """A structural size bound failed at runtime."""


def _bit(i: int) -> np.uint64:
    return ONE << np.uint64(i)


def _lit(f: Formula) -> tuple[Formula, bool]:
    pos = True
    while isinstance(f, Not):
        f = f.child
        pos = not pos
    return f, pos


@dataclass
class Layout:
    """Indexing of the closure of one translated formula."""

    phi: Formula
    formulas: list[Formula]  # non-negated members of Sub, children first
    index: dict[Formula, int]
    atoms: list[int]  # formula indices that are free bits, in bit order
    eforms: list[int]  # formula indices of E formulas (obligation order)
    e_group: list[frozenset]
    e_child: list[tuple[int, bool]]
    cforms: list[int]
    c_group: list[frozenset]
    c_child: list[tuple[int, bool]]
    c_link: list[int]  # formula index of E_G(ψ ∧ C_G ψ) per C formula

    @classmethod
    def build(cls, phi: Formula) -> "Layout":
        subs = sub(phi)
        formulas = [g for g in subs if not isinstance(g, Not)]
        index = {g: i for i, g in enumerate(formulas)}
        atoms = [i for i, g in enumerate(formulas) if isinstance(g, (Prop, Everyone))]
        eforms = [i for i, g in enumerate(formulas) if isinstance(g, Everyone)]
        cforms = [i for i, g in enumerate(formulas) if isinstance(g, Common)]

        def lit(g: Formula) -> tuple[int, bool]:
            base, pos = _lit(g)
            return index[base], pos

        return cls(
            phi=phi,
            formulas=formulas,
            index=index,
            atoms=atoms,
            eforms=eforms,
            e_group=[frozenset(formulas[i].group) for i in eforms],
            e_child=[lit(formulas[i].child) for i in eforms],
            cforms=cforms,
            c_group=[frozenset(formulas[i].group) for i in cforms],
            c_child=[lit(formulas[i].child) for i in cforms],
            c_link=[index[common_unfolding(formulas[i])[1]] for i in cforms],
        )

    def lit(self, g: Formula) -> tuple[int, bool]:
        base, pos = _lit(g)
        return self.index[base], pos


@dataclass
class AgentRel:
    """Literal-mask view of one agent's accessibility relation.

    ``kind`` is one of ``dec`` (s/K̄ ⊆ t), ``s4`` (the S4 rule for named
    agents), ``eq`` (the S5/KD45 rule for named agents), ``sym`` (S5 rule for
    atom agents) and ``sec`` (KD45 rule for atom agents).
    """

    agent: int
    kind: str
    members: tuple[int, ...]  # agents sharing this relation (dec classes)
    lits: list[tuple[str, int, bool]]
    e_mask: int  # shared E obligations whose group contains the agent
    p_sh: np.ndarray  # per shared code
    in_sh: np.ndarray
    ext_p: list[int] = field(default_factory=list)  # per extension bit of the owner: P contribution
    ext_in: list[int] = field(default_factory=list)
    nk_sources: list[tuple[int, str, int]] = field(default_factory=list)  # (e, 'F'|'X', index)


class Engine:
    """One elimination run for a translated formula."""

    def __init__(self, phi: Formula, alphabet: TranslatedAlphabet, logic: str, max_states: int = DEFAULT_MAX_STATES):
        self.phi = phi
        self.alpha = alphabet
        self.logic = logic
        self.length = length(phi)
        self.lay = lay = Layout.build(phi)
        if len(lay.eforms) > 64:
            raise CapExceeded("more than 64 everyone-knows subformulas")
        named = logic in ("s4", "s5", "kd45")
        self.a1 = sorted(alphabet.a1) if named else []
        self.a2 = sorted(alphabet.a2) if named else sorted(a.ident for a in alphabet.agents)
        self.owners: list[int | None] = list(self.a1) if self.a1 else [None]
        self.b = len(lay.atoms)

        # extension atoms K_o ψ per owner
        self.ext: dict[int, list[tuple[Formula, tuple[int, bool]]]] = {}
        for o in self.a1:
            seen: dict[Formula, None] = {}
            rows = []
            for e, fi in enumerate(lay.eforms):
                if o in lay.e_group[e]:
                    k = Everyone(frozenset([o]), lay.formulas[fi].child)
                    if k not in lay.index and k not in seen:
                        seen[k] = None
                        rows.append((k, lay.e_child[e]))
            self.ext[o] = rows

        if (1 << self.b) > max_states:
            raise CapExceeded(f"{1 << self.b} shared codes exceed the cap of {max_states}")
        self._build_shared()
        self._build_rows(max_states)
        self._build_agents()
        self.stats: dict[str, int | float] = {"states": self.n_initial, "shared_atoms": self.b}
        self._acc_cache: dict = {}
        self._prev_named = None
        self._ctx_cache: dict = {}
        self._named_changed = False

    # ------------------------------------------------------------------ setup

    def _build_shared(self) -> None:
        lay = self.lay
        nsub = 1 << self.b
        codes = np.arange(nsub, dtype=np.int64)
        T = np.zeros((nsub, len(lay.formulas)), dtype=bool)
        for bit, fi in enumerate(lay.atoms):
            T[:, fi] = (codes >> bit) & 1 == 1
        for ci, fi in enumerate(lay.cforms):
            T[:, fi] = T[:, lay.c_link[ci]]
        for fi, g in enumerate(lay.formulas):
            if isinstance(g, And):
                (li, lp), (ri, rp) = lay.lit(g.left), lay.lit(g.right)
                T[:, fi] = (T[:, li] == lp) & (T[:, ri] == rp)
        self.T = T
        neg_e = np.zeros(nsub, dtype=np.uint64)
        neg_child = np.zeros(nsub, dtype=np.uint64)
        for e, fi in enumerate(lay.eforms):
            neg_e |= np.where(T[:, fi], ZERO, _bit(e))
            ci, cp = lay.e_child[e]
            neg_child |= np.where(T[:, ci] == cp, ZERO, _bit(e))
        self.neg_e_sh = neg_e
        self.neg_child_sh = neg_child
        neg_c = np.zeros(nsub, dtype=np.uint64)
        for c, fi in enumerate(lay.cforms):
            neg_c |= np.where(T[:, fi], ZERO, _bit(c))
        self.neg_c_sh = neg_c

    def _ext_masks(self, o: int) -> tuple[np.ndarray, np.ndarray]:
        """Per shared code: extension bits forced true and bits left free for owner ``o``.

        K_o ψ holds whenever some E_G ψ with o in G holds; in reflexive
        logics it fails whenever ψ fails.
        """
        lay = self.lay
        T = self.T
        nsub = 1 << self.b
        ones = np.zeros(nsub, dtype=np.int64)
        free = np.zeros(nsub, dtype=np.int64)
        for k, (kf, (ci, cp)) in enumerate(self.ext[o]):
            forced = np.zeros(nsub, dtype=bool)
            for e, fi in enumerate(lay.eforms):
                if o in lay.e_group[e] and lay.formulas[fi].child == kf.child:
                    forced |= T[:, fi]
            ones |= forced.astype(np.int64) << k
            loose = ~forced
            if self.logic in ("t", "s4", "s5"):
                loose &= T[:, ci] == cp
            free |= loose.astype(np.int64) << k
        return ones, free

    def _build_rows(self, max_states: int) -> None:
        nsub = 1 << self.b
        codes = np.arange(nsub, dtype=np.int64)
        plan = []
        total = 0
        for oi, o in enumerate(self.owners):
            if o is None or not self.ext[o]:
                plan.append((oi, codes, np.zeros(nsub, dtype=np.int64)))
                total += nsub
                continue
            ones, free = self._ext_masks(o)
            pops = np.zeros(nsub, dtype=np.int64)
            for k in range(len(self.ext[o])):
                pops += (free >> k) & 1
            total += int((np.int64(1) << pops).sum())
            plan.append((oi, (ones, free), pops))
        self.n_initial = total
        if total > max_states:
            raise CapExceeded(f"{total} initial states exceed the cap of {max_states}")
        owner, subc, extc = [], [], []
        for oi, a, b in plan:
            if isinstance(a, np.ndarray):
                owner.append(np.full(nsub, oi, dtype=np.int32))
                subc.append(codes)
                extc.append(np.zeros(nsub, dtype=np.int64))
                continue
            ones, free = a
            for m in np.unique(free).tolist():
                scs = codes[free == m]
                bits = [k for k in range(len(self.ext[self.owners[oi]])) if m >> k & 1]
                subsets = np.zeros(1 << len(bits), dtype=np.int64)
                for i, k in enumerate(bits):
                    subsets |= ((np.arange(1 << len(bits)) >> i) & 1) << k
                owner.append(np.full(len(scs) * len(subsets), oi, dtype=np.int32))
                subc.append(np.repeat(scs, len(subsets)))
                extc.append((ones[scs][:, None] | subsets[None, :]).ravel())
        self.row_owner = np.concatenate(owner)  # index into self.owners
        self.row_sub = np.concatenate(subc)
        self.row_ext = np.concatenate(extc)
        order = np.lexsort((self.row_ext, self.row_sub, self.row_owner))
        self.row_owner, self.row_sub, self.row_ext = self.row_owner[order], self.row_sub[order], self.row_ext[order]
        self.n = len(self.row_owner)
        self.owner_index = {o: i for i, o in enumerate(self.owners)}
        self.owner_rows = {o: np.nonzero(self.row_owner == i)[0] for i, o in enumerate(self.owners)}
        self.pos_in_owner = np.zeros(self.n, dtype=np.int64)
        for rows in self.owner_rows.values():
            self.pos_in_owner[rows] = np.arange(len(rows))
        # per-row ext obligations (¬K_o ψ atoms) and witnesses for them
        self.row_neg_ext = np.zeros(self.n, dtype=np.uint64)
        for o in self.a1:
            rows = self.owner_rows[o]
            x = len(self.ext[o])
            if x:
                full = np.uint64((1 << x) - 1)
                self.row_neg_ext[rows] = ~self.row_ext[rows].astype(np.uint64) & full

    def neg_ext_child(self, o: int, rows: np.ndarray) -> np.ndarray:
        """Bit k set when the child of owner o's k-th extension atom is false in the row."""
        out = np.zeros(len(rows), dtype=np.uint64)
        T = self.T
        for k, (_, (ci, cp)) in enumerate(self.ext[o]):
            out |= np.where(T[self.row_sub[rows], ci] == cp, ZERO, _bit(k))
        return out

    def _build_agents(self) -> None:
        lay = self.lay
        T = self.T
        agents = sorted(a.ident for a in self.alpha.agents)
        self.rels: dict[int, AgentRel] = {}
        classes: dict[tuple, int] = {}
        for a in agents:
            if a in self.a1:
                kind = {"s4": "s4", "s5": "eq", "kd45": "eq"}[self.logic]
            else:
                kind = {"k": "dec", "t": "dec", "s4": "dec", "s5": "sym", "kd45": "sec"}[self.logic]
            rel_e = [e for e in range(len(lay.eforms)) if a in lay.e_group[e]]
            if kind in ("dec", "sym", "sec"):
                sig = (kind, tuple(rel_e))
                if sig in classes:
                    rep = self.rels[classes[sig]]
                    rep.members = rep.members + (a,)
                    continue
                classes[sig] = a
            lits: list[tuple[str, int, bool]] = []
            pos: dict[tuple[str, int, bool], int] = {}

            def slot(l: tuple[str, int, bool]) -> int:
                if l not in pos:
                    pos[l] = len(lits)
                    lits.append(l)
                return pos[l]

            p_sh = np.zeros(len(T), dtype=np.uint64)
            for e in rel_e:
                ci, cp = lay.e_child[e]
                u = slot(("F", ci, cp))
                p_sh |= np.where(T[:, lay.eforms[e]], _bit(u), ZERO)
            ext_p: list[int] = []
            ext_in: list[int] = []
            nk_sources: list[tuple[int, str, int]] = []
            if kind in ("s4", "eq"):
                single = frozenset([a])
                for e in rel_e:
                    fi = lay.eforms[e]
                    if lay.e_group[e] == single:
                        u = slot(("F", fi, True))
                        p_sh |= np.where(T[:, fi], _bit(u), ZERO)
                for k, (_, (ci, cp)) in enumerate(self.ext.get(a, [])):
                    uc = slot(("F", ci, cp))
                    uk = slot(("X", k, True))
                    ext_p.append(int(_bit(uc) | _bit(uk)))
                    ext_in.append(int(_bit(uk)))
                ext_index = {f: k for k, (f, _) in enumerate(self.ext.get(a, []))}
                for e in rel_e:
                    kf = Everyone(single, lay.formulas[lay.eforms[e]].child)
                    if kf in lay.index:
                        nk_sources.append((e, "F", lay.index[kf]))
                    else:
                        nk_sources.append((e, "X", ext_index[kf]))
            if len(lits) > 64:
                raise CapExceeded("an agent needs more than 64 literal slots")
            in_sh = np.zeros(len(T), dtype=np.uint64)
            for u, (src, i, p) in enumerate(lits):
                if src == "F":
                    in_sh |= np.where(T[:, i] == p, _bit(u), ZERO)
            e_mask = 0
            for e in rel_e:
                e_mask |= 1 << e
            self.rels[a] = AgentRel(a, kind, (a,), lits, e_mask, p_sh, in_sh, ext_p, ext_in, nk_sources)
        self._p_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self.group_reps: dict[frozenset, list[int]] = {}

    def reps_for(self, group: frozenset) -> list[int]:
        """Relation representatives whose member agents meet ``group``."""
        hit = self.group_reps.get(group)
        if hit is None:
            hit = [a for a, r in self.rels.items() if any(m in group for m in r.members)]
            self.group_reps[group] = hit
        return hit

    def masks(self, a: int) -> tuple[np.ndarray, np.ndarray]:
        """(P, In) literal masks of agent ``a`` over all rows."""
        hit = self._p_cache.get(a)
        if hit is not None:
            return hit
        r = self.rels[a]
        P = r.p_sh[self.row_sub]
        In = r.in_sh[self.row_sub]
        if r.ext_p and a in self.owner_index:
            rows = self.owner_rows[a]
            ext = self.row_ext[rows]
            pe = np.zeros(len(rows), dtype=np.uint64)
            ie = np.zeros(len(rows), dtype=np.uint64)
            for k in range(len(r.ext_p)):
                on = (ext >> k) & 1 == 1
                pe |= np.where(on, np.uint64(r.ext_p[k]), ZERO)
                ie |= np.where(on, np.uint64(r.ext_in[k]), ZERO)
            P = P.copy()
            In = In.copy()
            P[rows] |= pe
            In[rows] |= ie
        self._p_cache[a] = (P, In)
        return P, In

    def nk(self, a: int, rows: np.ndarray) -> np.ndarray:
        """Bit e set when ¬K_a ψ_e holds in the row (rows owned by ``a``)."""
        out = np.zeros(len(rows), dtype=np.uint64)
        for e, src, i in self.rels[a].nk_sources:
            if src == "F":
                false = ~self.T[self.row_sub[rows], i]
            else:
                false = (self.row_ext[rows] >> i) & 1 == 0
            out |= np.where(false, _bit(e), ZERO)
        return out

    # ----------------------------------------------------------- relations

    def rep(self, a: int) -> int:
        """Representative agent whose relation ``a`` shares."""
        if a in self.rels:
            return a
        return next(x for x, r in self.rels.items() if a in r.members)

    def related_mask(self, a: int, s: int, rows: np.ndarray) -> np.ndarray:
        """Vector form of ``related``: (s, t) ∈ K_a for each t in ``rows``."""
        rep = self.rep(a)
        kind = self.rels[rep].kind
        P, In = self.masks(rep)
        ps, is_ = P[s], In[s]
        pt, it = P[rows], In[rows]
        if kind == "dec":
            return ps & ~it == 0
        if kind == "s4":
            return ps & ~(it & pt) == 0
        if kind == "eq":
            return (pt == ps) & (ps & ~it == 0)
        if kind == "sym":
            return (ps & ~it == 0) & (pt & ~is_ == 0)
        return (ps & ~it == 0) & (pt & ~it == 0)

    def related(self, a: int, s: int, t: int) -> bool:
        """(s, t) ∈ K_a for rows s and t."""
        rep = self.rep(a)
        kind = self.rels[rep].kind
        P, In = self.masks(rep)
        ps, pt, it, is_ = int(P[s]), int(P[t]), int(In[t]), int(In[s])
        if kind == "dec":
            return ps & ~it == 0
        if kind == "s4":
            return ps & ~(it & pt) == 0
        if kind == "eq":
            return ps == pt and ps & ~it == 0
        if kind == "sym":
            return ps & ~it == 0 and pt & ~is_ == 0
        return ps & ~it == 0 and pt & ~it == 0  # sec

    def successors_query(
        self, a: int, src: np.ndarray, tgt: np.ndarray, vals: np.ndarray
    ) -> np.ndarray:
        """For each source row, OR of ``vals`` over target rows related by K_a."""
        r = self.rels[a]
        P, In = self.masks(a)
        vals = np.asarray(vals, dtype=np.uint64)
        if r.kind == "eq":
            ok = P[tgt] & ~In[tgt] == 0
            return kernels.equal_key_or(P[src], P[tgt][ok], vals[ok])
        if r.kind == "sec":
            ok = P[tgt] & ~In[tgt] == 0
            tgt, vals = tgt[ok], vals[ok]
            zs = np.zeros(len(src), dtype=np.uint64)
            return kernels.witness_or(P[src], zs, In[tgt], np.zeros(len(tgt), np.uint64), vals)
        zs = np.zeros(len(src), dtype=np.uint64)
        zt = np.zeros(len(tgt), dtype=np.uint64)
        if r.kind == "dec":
            return kernels.witness_or(P[src], zs, In[tgt], zt, vals)
        if r.kind == "s4":
            return kernels.witness_or(P[src], zs, In[tgt] & P[tgt], zt, vals)
        # sym: qa ⊆ In(t) and P(t) ⊆ In(s)
        return kernels.witness_or(P[src], In[src], In[tgt], P[tgt], vals)

    # --------------------------------------------------------------- rounds

    def truth(self, rows: np.ndarray, fi: int) -> np.ndarray:
        return self.T[self.row_sub[rows], fi]

    def holds(self, rows: np.ndarray, lit: tuple[int, bool]) -> np.ndarray:
        return self.T[self.row_sub[rows], lit[0]] == lit[1]

    def reflexive_filter(self) -> np.ndarray:
        ok = np.ones(self.n, dtype=bool)
        for a in self.rels:
            P, In = self.masks(a)
            ok &= P & ~In == 0
        return ok

    def run(self) -> bool:
        alive = np.ones(self.n, dtype=bool)
        if self.logic in ("t", "s4", "s5"):
            alive &= self.reflexive_filter()
        rounds = 0
        while True:
            rounds += 1
            self._acc_cache = {}
            self._named_changed = False
            keep = alive & self.consistent(alive)
            if (keep == alive).all() and not self._named_changed:
                break
            alive = keep
        self.alive = alive
        self.rounds = rounds
        self.stats["rounds"] = rounds
        self.stats["survivors"] = int(alive.sum())
        root = self.lay.lit(self.phi)
        self.roots = np.nonzero(alive & self.holds(np.arange(self.n), root))[0]
        return len(self.roots) > 0

    def consistent(self, alive: np.ndarray) -> np.ndarray:
        if self.a1 and self.logic in ("s5", "kd45"):
            return self._consistent_named(alive)
        return self._consistent_plain(alive)

    def _obligation_values(self, rows: np.ndarray, a: int) -> np.ndarray:
        """Value columns for witness queries: shared ¬child bits and owner-a ext ¬child bits."""
        vals = np.zeros((len(rows), 3), dtype=np.uint64)
        vals[:, 0] = self.neg_child_sh[self.row_sub[rows]] & np.uint64(self.rels[a].e_mask)
        if a in self.ext and self.ext[a]:
            vals[:, 1] = self.neg_ext_child(a, rows)
        vals[:, 2] = ONE
        return vals

    def _consistent_plain(self, alive: np.ndarray) -> np.ndarray:
        """K, T and S4 (and S5/KD45 when every agent is an atom agent)."""
        idx = np.nonzero(alive)[0]
        cov = np.zeros(len(idx), dtype=np.uint64)
        ext_cov = np.zeros(len(idx), dtype=np.uint64)
        ok = np.ones(len(idx), dtype=bool)
        for a, r in self.rels.items():
            res = self.successors_query(a, idx, idx, self._obligation_values(idx, a))
            cov |= res[:, 0]
            if a in self.owner_index:
                mine = self.row_owner[idx] == self.owner_index[a]
                ext_cov[mine] |= res[mine, 1]
            if self.logic == "kd45":
                ok &= res[:, 2] != 0
        sub_idx = self.row_sub[idx]
        ok &= self.neg_e_sh[sub_idx] & ~cov == 0
        ok &= self.row_neg_ext[idx] & ~ext_cov == 0
        ok &= self._common_ok(alive, idx)
        out = np.zeros(self.n, dtype=bool)
        out[idx] = ok
        return out

    # ---- ¬C obligations

    def _common_ok(self, alive: np.ndarray, idx: np.ndarray) -> np.ndarray:
        ok = np.ones(len(idx), dtype=bool)
        for ci in range(len(self.lay.cforms)):
            has = ~self.truth(idx, self.lay.cforms[ci])
            if not has.any():
                continue
            reach = self.reach_layers(alive, ci)[0]
            ok &= ~has | reach[idx]
        return ok

    def reach_layers(self, alive: np.ndarray, ci: int) -> tuple[np.ndarray, np.ndarray]:
        """Rows with a path of length >= 1 to a ¬ψ row, and the path length bound per row."""
        group = self.lay.c_group[ci]
        lit = self.lay.c_child[ci]
        idx = np.nonzero(alive)[0]
        target0 = np.zeros(self.n, dtype=bool)
        target0[idx] = ~self.holds(idx, lit)
        reach = np.zeros(self.n, dtype=bool)
        layer = np.full(self.n, -1, dtype=np.int64)
        k = 0
        while True:
            k += 1
            tgt = np.nonzero(target0 | reach)[0]
            step = self.step_into(alive, idx, tgt, group)
            new = reach.copy()
            new[idx] |= step
            fresh = new & ~reach
            if not fresh.any():
                return reach, layer
            layer[fresh] = k
            reach = new

    def step_into(self, alive: np.ndarray, idx: np.ndarray, tgt: np.ndarray, group: frozenset) -> np.ndarray:
        """For source rows ``idx``: is there a one-step G-move into ``tgt``?"""
        out = np.zeros(len(idx), dtype=bool)
        if len(tgt) == 0:
            return out
        ones = np.ones(len(tgt), dtype=np.uint64)
        for a in self.reps_for(group):
            out |= self.successors_query(a, idx, tgt, ones) != 0
        return out

    # ---- S5 / KD45 with named agents
    #
    # A complete state picks one surviving row per named agent, all with the
    # same shared part. A row survives when some complete state containing it
    # refutes every ¬E_G ψ and ¬C_G ψ it contains. Named K_j steps only land
    # on rows owned by j, since other rows do not record j's own K_j atoms.
    # Each ¬C_G ψ is settled by a least fixpoint whose layers bound the path
    # length; the other ¬C obligations use the previous round's values, and
    # rounds continue until both the surviving set and those values settle.
    # Per-agent arrays are aligned with that agent's surviving rows.

    def _named_round_data(self, alive: np.ndarray) -> dict:
        """Per-round witness data for named agents."""
        data: dict = {k: {} for k in ("rows", "sub", "wc", "extcov", "succ", "nk", "vsel", "vsub")}
        for j in self.a1:
            rows = self.owner_rows[j]
            rows = rows[alive[rows]]
            res = self.successors_query(j, rows, rows, self._obligation_values(rows, j))
            data["rows"][j] = rows
            data["sub"][j] = self.row_sub[rows]
            data["wc"][j] = res[:, 0].copy()
            data["extcov"][j] = res[:, 1].copy()
            data["succ"][j] = res[:, 2] != 0
            data["nk"][j] = self.nk(j, rows)
            sel = np.nonzero(data["succ"][j])[0] if self.logic == "kd45" else np.arange(len(rows))
            data["vsel"][j] = sel
            data["vsub"][j] = data["sub"][j][sel]
        return data

    def _at(self, j: int, r: int) -> int:
        """Position of row ``r`` among agent j's surviving rows, or -1."""
        rows = self._round["rows"][j]
        k = int(np.searchsorted(rows, r))
        return k if k < len(rows) and rows[k] == r else -1

    def _positions(self, j: int, rows: np.ndarray) -> np.ndarray:
        return np.searchsorted(self._round["rows"][j], rows)

    def round_opts(self, j: int, sc: int) -> np.ndarray:
        """Agent j's surviving rows with shared code ``sc``."""
        sub = self._round["sub"][j]
        lo, hi = np.searchsorted(sub, [sc, sc + 1])
        return self._round["rows"][j][lo:hi]

    def _c_bits_top(self) -> tuple[dict[int, int], int]:
        """Optimistic ¬C coverage used before any round has run."""
        per_agent = {j: 0 for j in self.a1}
        shared = 0
        for c, group in enumerate(self.lay.c_group):
            for j in self.a1:
                if j in group:
                    per_agent[j] |= 1 << c
            if any(self.rels[a].kind != "eq" for a in self.reps_for(group)):
                shared |= 1 << c
        return per_agent, shared

    def _consistent_named(self, alive: np.ndarray) -> np.ndarray:
        lay = self.lay
        n_e, n_c = len(lay.eforms), len(lay.cforms)
        if n_e + n_c > 64:
            raise CapExceeded("more than 64 modal obligations")
        nsub = 1 << self.b
        idx = np.nonzero(alive)[0]
        data = self._named_round_data(alive)
        self._round = data
        subs, first = np.unique(self.row_sub[idx], return_index=True)
        src = idx[first]
        cov2 = np.zeros(len(src), dtype=np.uint64)
        serial2 = np.ones(len(src), dtype=bool)
        for a, r in self.rels.items():
            if r.kind == "eq":
                continue
            res = self.successors_query(a, src, idx, self._obligation_values(idx, a))
            cov2 |= res[:, 0]
            if self.logic == "kd45":
                serial2 &= res[:, 2] != 0
        self._cov2_full = np.zeros(nsub, dtype=np.uint64)
        self._cov2_full[subs] = cov2
        serial_full = np.zeros(nsub, dtype=bool)
        serial_full[subs] = serial2
        self._subs, self._src = subs, src

        if self._prev_named is None:
            top_agent, top_shared = self._c_bits_top()
            prev_rows = {j: np.full(len(data["rows"][j]), top_agent[j], dtype=np.uint64) for j in self.a1}
            prev_sc = np.full(nsub, top_shared, dtype=np.uint64)
        else:
            full_rows, prev_sc = self._prev_named
            prev_rows = {j: full_rows[j][self.pos_in_owner[data["rows"][j]]] for j in self.a1}
        final_rows = {j: np.zeros(len(data["rows"][j]), dtype=np.uint64) for j in self.a1}
        final_sc = np.zeros(nsub, dtype=np.uint64)
        layers: dict[int, tuple] = {}
        for c in range(n_c):
            own_layer, a2_layer, l_layer = self._common_fixpoint(c, idx, prev_rows, prev_sc)
            layers[c] = (own_layer, a2_layer, l_layer)
            for j in self.a1:
                final_rows[j] |= np.where(own_layer[j] >= 0, _bit(c), ZERO)
            final_sc |= np.where(a2_layer >= 0, _bit(c), ZERO)
        self._named_changed = self._prev_named is None or not (
            all((final_rows[j] == prev_rows[j]).all() for j in self.a1) and (final_sc[subs] == prev_sc[subs]).all()
        )
        full_rows = {}
        for j in self.a1:
            arr = np.zeros(len(self.owner_rows[j]), dtype=np.uint64)
            arr[self.pos_in_owner[data["rows"][j]]] = final_rows[j]
            full_rows[j] = arr
        self._prev_named = (full_rows, final_sc)
        self._final = (final_rows, final_sc)
        self._layers = layers
        self._ctx_cache = {}
        ctx = VectorCtx(self, final_rows, final_sc)
        self._final_ctx = ctx

        ok = np.ones(len(idx), dtype=bool)
        for oi, o in enumerate(self.owners):
            sel = np.nonzero(self.row_owner[idx] == oi)[0]
            if not len(sel):
                continue
            pos = self._positions(o, idx[sel])
            good = self.row_neg_ext[idx[sel]] & ~data["extcov"][o][pos] == 0
            if self.logic == "kd45":
                good &= data["succ"][o][pos] & serial_full[self.row_sub[idx[sel]]]
            ok[sel] = good
        todo = np.nonzero(ok)[0]
        ok[todo] = ctx.cover_rows(idx[todo])
        out = np.zeros(self.n, dtype=bool)
        out[idx] = ok
        return out

    def _common_fixpoint(self, c, idx, prev_rows, prev_sc):
        """Least fixpoint for one ¬C_G ψ obligation.

        Returns (own_layer, a2_layer, l_layer): the iteration at which a
        named row, a shared code (through atom agents) or a surviving row
        first gets a G-path to ¬ψ; -1 when never.
        """
        lay = self.lay
        data = self._round
        group = lay.c_group[c]
        named = [j for j in self.a1 if j in group]
        atoms = [a for a in self.reps_for(group) if self.rels[a].kind != "eq"]
        bit = _bit(c)
        notpsi = np.zeros(self.n, dtype=bool)
        notpsi[idx] = ~self.holds(idx, lay.c_child[c])
        negc = ~self.T[:, lay.cforms[c]]
        base_rows = {j: prev_rows[j] & ~bit for j in self.a1}
        base_sc = prev_sc & ~bit
        own_layer = {j: np.full(len(data["rows"][j]), -1, dtype=np.int64) for j in self.a1}
        a2_layer = np.full(1 << self.b, -1, dtype=np.int64)
        l_layer = np.full(self.n, -1, dtype=np.int64)
        cand = idx[negc[self.row_sub[idx]]]
        subs, src = self._subs, self._src
        it = 0
        vals = notpsi
        while True:
            grew = False
            for j in named:
                rows = data["rows"][j]
                hit = self.successors_query(j, rows, rows, vals[rows].astype(np.uint64)) != 0
                new = hit & (own_layer[j] < 0)
                if new.any():
                    own_layer[j][new] = it
                    grew = True
            if atoms:
                hit = np.zeros(len(src), dtype=bool)
                v = vals[idx].astype(np.uint64)
                for a in atoms:
                    hit |= self.successors_query(a, src, idx, v) != 0
                new = hit & (a2_layer[subs] < 0)
                if new.any():
                    a2_layer[subs[new]] = it
                    grew = True
            if not grew:
                break
            row_bits = {j: base_rows[j] | np.where(own_layer[j] >= 0, bit, ZERO) for j in self.a1}
            sc_bits = base_sc | np.where(a2_layer >= 0, bit, ZERO)
            ctx = VectorCtx(self, row_bits, sc_bits)
            todo = cand[l_layer[cand] < 0]
            if len(todo):
                l_layer[todo[ctx.cover_rows(todo)]] = it
            vals = notpsi | (l_layer >= 0)
            it += 1
        return own_layer, a2_layer, l_layer

    def layered_ctx(self, c: int, level: int) -> "VectorCtx":
        """Vector context where obligation ``c`` may only use witnesses of layer <= ``level``."""
        key = (c, level)
        hit = self._ctx_cache.get(key)
        if hit is not None:
            return hit
        own_layer, a2_layer, _ = self._layers[c]
        final_rows, final_sc = self._final
        bit = _bit(c)
        rows = {
            j: (final_rows[j] & ~bit) | np.where((own_layer[j] >= 0) & (own_layer[j] <= level), bit, ZERO)
            for j in self.a1
        }
        scb = (final_sc & ~bit) | np.where((a2_layer >= 0) & (a2_layer <= level), bit, ZERO)
        ctx = VectorCtx(self, rows, scb)
        self._ctx_cache[key] = ctx
        return ctx

    def _anynk(self, j: int, sc: int) -> int:
        rows = self.round_opts(j, sc)
        if not len(rows):
            return 0
        return int(np.bitwise_or.reduce(self._round["nk"][j][self._positions(j, rows)]))

    def acceptable(self, s: int, s2: int) -> bool:
        """Whether named-agent row ``s2`` (extending ``s``) can sit next to ``s`` in a complete state.

        Dynamic program over the pool of agents that can still refute one of
        the formulas F(s, s2) lacking an atom-agent witness; formulas with a
        pool of at least |φ| agents are always satisfiable and dropped. Only
        ¬E obligations are considered; the decision itself uses the exact
        complete-state search instead.
        """
        data = self._round
        sc = int(self.row_sub[s])
        o = self.owners[int(self.row_owner[s])]
        i1 = self.owners[int(self.row_owner[s2])]
        nk_o = int(data["nk"][o][self._at(o, s)])
        key = (sc, o, nk_o, s2)
        hit = self._acc_cache.get(key)
        if hit is not None:
            return hit
        negs = int(self.neg_e_sh[sc]) & ~int(self._cov2_full[sc])
        F = 0
        pool: set[int] = set()
        for e in range(len(self.lay.eforms)):
            if not negs >> e & 1:
                continue
            A = set()
            for i in self.a1:
                if i not in self.lay.e_group[e]:
                    continue
                if i == i1:
                    A.add(i)
                elif i == o:
                    if nk_o >> e & 1:
                        A.add(i)
                elif self._anynk(i, sc) >> e & 1:
                    A.add(i)
            if len(A) < self.length:
                F |= 1 << e
                pool |= A
        acc = int(data["nk"][i1][self._at(i1, s2)]) & F
        if o != i1 and o in pool:
            acc |= nk_o & F
        reach = {acc}
        for i in sorted(pool - {i1, o}):
            rows = self.round_opts(i, sc)
            masks = {int(m) & F for m in data["nk"][i][self._positions(i, rows)]}
            reach = {r | m for r in reach for m in masks}
            if F in reach:
                break
        result = F in reach
        self._acc_cache[key] = result
        return result

    def acceptable_exact(self, s: int, s2: int) -> bool:
        """Direct definition: a choice covering the ¬E obligations exists with ``s`` and ``s2`` both fixed."""
        sc = int(self.row_sub[s])
        o = self.owners[int(self.row_owner[s])]
        j = self.owners[int(self.row_owner[s2])]
        if o == j and s != s2:
            return False
        need = int(self.neg_e_sh[sc]) & ~int(self._cov2_full[sc])
        return self.cover_choice(need, {o: s, j: s2}, sc) is not None

    def cover_choice(self, need: int, forced: dict[int, int], sc: int) -> dict[int, int] | None:
        """Pick rows for some named agents (forced ones fixed) whose ¬E witnesses cover ``need``."""
        wc = self._round["wc"]
        acc = 0
        for j, r in forced.items():
            acc |= int(wc[j][self._at(j, r)])
        rest = need & ~acc
        if rest == 0:
            return dict(forced)
        options = []
        for j in self.a1:
            if j in forced:
                continue
            rows = self.round_opts(j, sc)
            by_mask: dict[int, int] = {}
            for x, m in zip(rows.tolist(), wc[j][self._positions(j, rows)].tolist()):
                m &= rest
                if m and m not in by_mask:
                    by_mask[m] = x
            if by_mask:
                options.append((j, by_mask))
        choice = _cover_dp(rest, options)
        if choice is None:
            return None
        out = dict(forced)
        out.update(choice)
        return out


def _cover_dp(rest: int, options: list[tuple[int, dict[int, int]]]) -> dict[int, int] | None:
    """Choose at most one option per agent so that the chosen masks cover ``rest``."""
    union = 0
    for _, by_mask in options:
        for m in by_mask:
            union |= m
    if union & rest != rest:
        return None
    reach: dict[int, tuple] = {0: ()}
    for j, by_mask in options:
        new = dict(reach)
        for r_mask, path in reach.items():
            for m, x in by_mask.items():
                u = (r_mask | m) & rest
                if u not in new:
                    new[u] = path + ((j, x),)
        reach = new
        if rest in reach:
            return dict(reach[rest])
    return None


class VectorCtx:
    """Complete-state search for one assignment of obligation masks.

    Bits below the number of E formulas are ¬E obligations; the bits above
    them are ¬C obligations. ``row_cbits[j]`` is aligned with agent j's
    surviving rows and ``sc_cbits`` is indexed by shared code.
    """

    def __init__(self, eng: "Engine", row_cbits: dict[int, np.ndarray], sc_cbits: np.ndarray):
        self.e = eng
        self.shift = len(eng.lay.eforms)
        data = eng._round
        self.data = data
        sh = np.uint64(self.shift)
        self.mask = {j: data["wc"][j] | (row_cbits[j] << sh) for j in eng.a1}
        self.sc_cbits = sc_cbits
        self.need_arr = (eng.neg_e_sh & ~eng._cov2_full) | ((eng.neg_c_sh & ~sc_cbits) << sh)
        self._opts: dict[tuple, dict[int, int] | None] = {}
        self._memo: dict[tuple, dict | None] = {}

    def need(self, sc: int) -> int:
        return int(self.need_arr[sc])

    def row_mask(self, j: int, r: int) -> int | None:
        """Obligations of the row's shared code that row ``r`` refutes for agent j."""
        k = self.e._at(j, r)
        return None if k < 0 else int(self.mask[j][k] & self.need_arr[self.e.row_sub[r]])

    def options(self, j: int, sc: int) -> dict[int, int] | None:
        """Distinct masks (with a representative row) among agent j's candidate rows at ``sc``."""
        key = (j, sc)
        if key in self._opts:
            return self._opts[key]
        vsub = self.data["vsub"][j]
        lo, hi = np.searchsorted(vsub, [sc, sc + 1])
        if lo == hi:
            self._opts[key] = None
            return None
        ids = self.data["vsel"][j][lo:hi]
        ms, first = np.unique(self.mask[j][ids] & self.need_arr[sc], return_index=True)
        out = dict(zip(ms.tolist(), self.data["rows"][j][ids[first]].tolist()))
        self._opts[key] = out
        return out

    def cover(self, sc: int, forced: dict[int, int]) -> dict[int, int] | None:
        """A complete state (agent -> row) containing ``forced`` and refuting every obligation, or None."""
        fmasks = {}
        for j, r in forced.items():
            m = self.row_mask(j, r)
            if m is None:
                return None
            fmasks[j] = m
        return self._cover(sc, fmasks, forced)

    def _cover(self, sc: int, fmasks: dict[int, int], forced: dict[int, int]) -> dict[int, int] | None:
        key = (sc, tuple(sorted(fmasks.items())))
        if key in self._memo:
            hit = self._memo[key]
        else:
            hit = self._search(sc, fmasks)
            self._memo[key] = hit
        if hit is None:
            return None
        out = dict(hit)
        out.update(forced)
        return out

    def _search(self, sc: int, fmasks: dict[int, int]) -> dict[int, int] | None:
        acc = 0
        for m in fmasks.values():
            acc |= m
        rest = self.need(sc) & ~acc
        options = []
        defaults = {}
        for j in self.e.a1:
            if j in fmasks:
                continue
            opts = self.options(j, sc)
            if opts is None:
                return None
            defaults[j] = next(iter(opts.values()))
            useful: dict[int, int] = {}
            for m, x in opts.items():
                mm = m & rest
                if mm and mm not in useful:
                    useful[mm] = x
            if useful:
                options.append((j, useful))
        if rest:
            choice = _cover_dp(rest, options)
            if choice is None:
                return None
            defaults.update(choice)
        return defaults

    def _distinct_options(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Sorted (shared code, needed mask) pairs over agent j's candidate rows, without repeats."""
        vsub = self.data["vsub"][j]
        m = self.mask[j][self.data["vsel"][j]] & self.need_arr[vsub]
        order = np.lexsort((m, vsub))
        sc, m = vsub[order], m[order]
        keep = np.ones(len(sc), dtype=bool)
        keep[1:] = (sc[1:] != sc[:-1]) | (m[1:] != m[:-1])
        return sc[keep], m[keep]

    def cover_rows(self, rows: np.ndarray) -> np.ndarray:
        """For each row, whether it sits in some complete state refuting every obligation."""
        e = self.e
        out = np.zeros(len(rows), dtype=bool)
        if not len(rows):
            return out
        oi = e.row_owner[rows].astype(np.int64)
        scs = e.row_sub[rows]
        masks = np.zeros(len(rows), dtype=np.uint64)
        for i, o in enumerate(e.owners):
            sel = np.nonzero(oi == i)[0]
            if len(sel):
                masks[sel] = self.mask[o][e._positions(o, rows[sel])]
        masks &= self.need_arr[scs]
        opts = {j: self._distinct_options(j) for j in e.a1}
        order = np.lexsort((oi, scs))
        bounds = np.flatnonzero(np.diff(scs[order])) + 1
        for group in np.split(order, bounds):
            sc = int(scs[group[0]])
            need = int(self.need_arr[sc])
            per_agent = {}
            for j in e.a1:
                osc, om = opts[j]
                lo, hi = np.searchsorted(osc, [sc, sc + 1])
                per_agent[j] = om[lo:hi].tolist()
            g_oi = oi[group]
            for i in np.unique(g_oi).tolist():
                o = e.owners[i]
                if any(not per_agent[j] for j in e.a1 if j != o):
                    continue
                reach = {0}
                for j in e.a1:
                    if j == o:
                        continue
                    reach = _maximal({a | m for a in reach for m in per_agent[j]})
                sel = group[g_oi == i]
                acc = np.fromiter(reach, dtype=np.uint64, count=len(reach))
                need_u = np.uint64(need)
                out[sel] = (((masks[sel][:, None] | acc[None, :]) & need_u) == need_u).any(axis=1)
        return out


def _maximal(masks: set[int]) -> set[int]:
    """The inclusion-maximal members of a set of bitmasks."""
    if len(masks) <= 8:
        return masks
    ordered = sorted(masks, key=lambda m: -bin(m).count("1"))
    keep: list[int] = []
    for m in ordered:
        if not any(m | k == k for k in keep):
            keep.append(m)
    return set(keep)


# ---------------------------------------------------------------------------
# Public entry points


@dataclass
class SatVerdict:
    sat: bool
    logic: str
    formula: Formula
    translated: Formula
    alphabet: TranslatedAlphabet
    engine: Engine
    stats: dict

    def model(self):
        """Witness structure over the translated alphabet (SAT only)."""
        from .models import extract_model

        return extract_model(self.engine)


def initial_states(phi: Formula, alphabet: TranslatedAlphabet, logic: str, max_states: int = DEFAULT_MAX_STATES) -> Engine:
    return Engine(phi, alphabet, logic, max_states)


def k_relation(engine: Engine, s: int, t: int, agent: int) -> bool:
    return engine.related(agent, s, t)


def eliminate(phi: Formula, alphabet: TranslatedAlphabet, logic: str, max_states: int = DEFAULT_MAX_STATES) -> Engine:
    eng = Engine(phi, alphabet, logic, max_states)
    eng.run()
    return eng


def check_bounds(f: Formula, translated: Formula, alpha: TranslatedAlphabet, eng: Engine) -> None:
    """Runtime assertions of the closure, state-space and alphabet size bounds."""
    n = length(f)
    if len(sub(translated)) > n:
        raise BoundViolation("|Sub| exceeds |φ|")
    if length(translated) != n:
        raise BoundViolation("translation changed the length")
    if eng.logic in ("k", "t"):
        if eng.n_initial > 2**n:
            raise BoundViolation("initial states exceed 2^|φ|")
        if alpha.size > 2**n:
            raise BoundViolation("alphabet exceeds 2^|φ|")
        if alpha.stats.get("o0_maximal", 0) > n * 2**n:
            raise BoundViolation("too many emptiness queries for the maximal sets")
    else:
        per_owner = 1 << (eng.b + max((len(v) for v in eng.ext.values()), default=0))
        if per_owner > 4**n:
            raise BoundViolation("per-owner initial states exceed 2^(2|φ|)")
        if "closure_iterations" in alpha.stats and alpha.stats["closure_iterations"] > alpha.stats["family"]:
            raise BoundViolation("closure needed more than |J| rounds")
    if eng.rounds > eng.n_initial:
        raise BoundViolation("more elimination rounds than initial states")


def decide(
    f: Formula,
    table: GroupTable,
    logic: str,
    max_states: int = DEFAULT_MAX_STATES,
    cache: dict | None = None,
) -> SatVerdict:
    """Satisfiability of ``f`` in the given logic over the table's universe.

    ``cache`` (optional) memoizes translations by the formula's group set.
    """
    from .formula import groups_of, map_groups

    start = time.perf_counter()
    before = table.counters()
    key = None
    if cache is not None:
        key = (logic, frozenset(groups_of(f)), length(f) if logic in ("s5", "kd45") else 0)
    if key is not None and key in cache:
        alpha = cache[key]
        translated = map_groups(f, lambda g: alpha.sigma[g])
    else:
        alpha, translated = translate(f, table, logic)
        if key is not None:
            cache[key] = alpha
    eng = Engine(translated, alpha, logic, max_states)
    sat = eng.run()
    check_bounds(f, translated, alpha, eng)
    after = table.counters()
    stats = dict(eng.stats)
    stats["o_queries"] = after["O"] - before["O"]
    stats["o_prime_queries"] = after["O'"] - before["O'"]
    stats["alphabet"] = alpha.size
    stats["time"] = time.perf_counter() - start
    return SatVerdict(sat, logic, f, translated, alpha, eng, stats)


def validity(f: Formula, table: GroupTable, logic: str, **kw) -> bool:
    return not decide(Not(f), table, logic, **kw).sat


def seems_consistent(engine: Engine, alive: np.ndarray) -> np.ndarray:
    """One round's consistency conditions for every row against ``alive``."""
    return engine.consistent(alive)
