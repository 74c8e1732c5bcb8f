//! DFA compilation by formula progression.
//!
//! A state is the canonical form of the obligation that remains after the
//! consumed prefix; consuming a symbol progresses the obligation. A state
//! accepts iff its obligation holds on the empty remainder, so after reading
//! a whole trace the final state's acceptance flag equals the recursive
//! semantics verdict. Obligations are hash-consed: boolean layers are
//! flattened, sorted and deduplicated over interned node ids, which makes
//! structural equality a pointer comparison and keeps progression memoizable.
//! The explored automaton is then run through partition refinement, yielding
//! the minimal one.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use super::{Formula, Symbol, Trace};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DfaError {
    #[error("state budget of {budget} exceeded during automaton construction")]
    StateBudget { budget: usize },
    #[error("symbol {symbol:#x} outside the alphabet of {num_ap} propositions")]
    SymbolOutOfRange { symbol: Symbol, num_ap: usize },
}

/// Deterministic finite automaton over the alphabet of proposition subsets.
/// The transition table is total: `next[state][symbol]`.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Dfa {
    pub ap: Vec<String>,
    pub initial: usize,
    pub accepting: Vec<bool>,
    /// `next[state][symbol]`, `symbol` a bitmask over `ap` order.
    pub next: Vec<Vec<usize>>,
}

impl Dfa {
    pub fn num_states(&self) -> usize {
        self.next.len()
    }

    pub fn num_symbols(&self) -> usize {
        1usize << self.ap.len()
    }

    pub fn step(&self, state: usize, symbol: Symbol) -> Result<usize, DfaError> {
        if symbol as usize >= self.num_symbols() {
            return Err(DfaError::SymbolOutOfRange {
                symbol,
                num_ap: self.ap.len(),
            });
        }
        Ok(self.next[state][symbol as usize])
    }

    /// Runs the table over a trace and reports acceptance of the final state;
    /// the empty trace is accepted iff the initial state accepts.
    pub fn accepts(&self, trace: &Trace) -> Result<bool, DfaError> {
        let mut s = self.initial;
        for &sym in &trace.symbols {
            s = self.step(s, sym)?;
        }
        Ok(self.accepting[s])
    }

    /// States from which no accepting state is reachable.
    pub fn dead_states(&self) -> Vec<bool> {
        let n = self.num_states();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, row) in self.next.iter().enumerate() {
            for &t in row {
                rev[t].push(s);
            }
        }
        let mut alive = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| self.accepting[s]).collect();
        for &s in &queue {
            alive[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &p in &rev[s] {
                if !alive[p] {
                    alive[p] = true;
                    queue.push_back(p);
                }
            }
        }
        alive.iter().map(|a| !a).collect()
    }

    /// Plain tabular export: proposition order, state flags, and one line per
    /// `(state, symbol, next)` transition with symbols as bitmasks.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        writeln!(out, "ap {}", self.ap.join(" ")).unwrap();
        writeln!(out, "states {}", self.num_states()).unwrap();
        writeln!(out, "initial {}", self.initial).unwrap();
        let acc: Vec<String> = self
            .accepting
            .iter()
            .enumerate()
            .filter(|(_, a)| **a)
            .map(|(i, _)| i.to_string())
            .collect();
        writeln!(out, "accepting {}", acc.join(" ")).unwrap();
        for (s, row) in self.next.iter().enumerate() {
            for (sym, t) in row.iter().enumerate() {
                writeln!(out, "trans {s} {sym} {t}").unwrap();
            }
        }
        out
    }

    /// Language equivalence by synchronized reachability over the pair graph.
    pub fn equivalent(&self, other: &Dfa) -> bool {
        if self.ap.len() != other.ap.len() {
            return false;
        }
        let mut seen = HashMap::new();
        let mut queue = VecDeque::new();
        queue.push_back((self.initial, other.initial));
        seen.insert((self.initial, other.initial), ());
        while let Some((a, b)) = queue.pop_front() {
            if self.accepting[a] != other.accepting[b] {
                return false;
            }
            for sym in 0..self.num_symbols() {
                let pair = (self.next[a][sym], other.next[b][sym]);
                if seen.insert(pair, ()).is_none() {
                    queue.push_back(pair);
                }
            }
        }
        true
    }
}

/// Does the obligation hold on the empty remainder? Strong next and until
/// fail, globally holds.
pub(super) fn holds_on_empty(f: &Formula) -> bool {
    match f {
        Formula::True => true,
        Formula::False | Formula::Atom(_) => false,
        Formula::Not(g) => !holds_on_empty(g),
        Formula::And(gs) => gs.iter().all(|g| holds_on_empty(g)),
        Formula::Or(gs) => gs.iter().any(|g| holds_on_empty(g)),
        Formula::Next(_) | Formula::Until(_, _) | Formula::Eventually(_) => false,
        Formula::Globally(_) => true,
    }
}

// -- interned canonical obligations -----------------------------------------

type Id = usize;

/// How many distinct literals one boolean layer may combine before the
/// truth-table canonicalization refuses (2^22 bits is half a megabyte).
const MAX_BOOL_LITERALS: usize = 22;

/// Shallow node over interned child ids. The boolean layer is a truth table
/// over "opaque" literals (atoms and temporal nodes), so two obligations
/// with the same boolean function over the same literals intern to the same
/// id. Progression never mints new temporal nodes, which keeps the literal
/// universe fixed and the closure finite.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Node {
    True,
    False,
    /// Bit index into the declared proposition order, or `None` for an atom
    /// outside it (always false).
    Atom(Option<u32>),
    /// Boolean function over sorted opaque literal ids; bit `j` of the table
    /// is the value under the assignment where literal `i` takes bit `i` of
    /// `j`. Canonical: every literal is in the support, the table is not
    /// constant, and a plain positive literal is never wrapped.
    Bool {
        lits: Vec<Id>,
        table: Vec<u64>,
    },
    Next(Id),
    Until(Id, Id),
    Eventually(Id),
    Globally(Id),
}

fn table_bit(table: &[u64], j: usize) -> bool {
    table[j >> 6] >> (j & 63) & 1 == 1
}

fn table_blocks(k: usize) -> usize {
    ((1usize << k) + 63) >> 6
}

struct Interner {
    nodes: Vec<Node>,
    index: HashMap<Node, Id>,
    empty_ok: Vec<bool>,
}

const TRUE_ID: Id = 0;
const FALSE_ID: Id = 1;

impl Interner {
    fn new() -> Self {
        let mut it = Interner {
            nodes: Vec::new(),
            index: HashMap::new(),
            empty_ok: Vec::new(),
        };
        it.intern(Node::True);
        it.intern(Node::False);
        it
    }

    fn intern(&mut self, node: Node) -> Id {
        if let Some(&id) = self.index.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        let empty_ok = match &node {
            Node::True | Node::Globally(_) => true,
            Node::False
            | Node::Atom(_)
            | Node::Next(_)
            | Node::Until(_, _)
            | Node::Eventually(_) => false,
            Node::Bool { lits, table } => {
                let mut j = 0usize;
                for (i, &l) in lits.iter().enumerate() {
                    if self.empty_ok[l] {
                        j |= 1 << i;
                    }
                }
                table_bit(table, j)
            }
        };
        self.nodes.push(node.clone());
        self.empty_ok.push(empty_ok);
        self.index.insert(node, id);
        id
    }

    /// Canonicalizes a truth table: prunes literals outside the support,
    /// folds constants, and unwraps a bare positive literal.
    fn mk_bool(&mut self, mut lits: Vec<Id>, mut table: Vec<u64>) -> Result<Id, DfaError> {
        debug_assert!(
            lits.windows(2).all(|w| w[0] < w[1]),
            "literals must be sorted"
        );
        let mut k = lits.len();
        let mut axis = 0;
        while axis < k {
            let stride = 1usize << axis;
            let size = 1usize << k;
            let mut independent = true;
            let mut j = 0;
            'scan: while j < size {
                for low in j..j + stride {
                    if table_bit(&table, low) != table_bit(&table, low + stride) {
                        independent = false;
                        break 'scan;
                    }
                }
                j += 2 * stride;
            }
            if independent {
                // drop the axis, compacting the table
                let mut new_table = vec![0u64; table_blocks(k - 1)];
                let mut out = 0usize;
                let mut j = 0;
                while j < size {
                    for low in j..j + stride {
                        if table_bit(&table, low) {
                            new_table[out >> 6] |= 1 << (out & 63);
                        }
                        out += 1;
                    }
                    j += 2 * stride;
                }
                table = new_table;
                lits.remove(axis);
                k -= 1;
            } else {
                axis += 1;
            }
        }
        if k == 0 {
            return Ok(if table[0] & 1 == 1 { TRUE_ID } else { FALSE_ID });
        }
        if k == 1 && table_bit(&table, 1) && !table_bit(&table, 0) {
            return Ok(lits[0]);
        }
        if k > MAX_BOOL_LITERALS {
            return Err(DfaError::StateBudget {
                budget: MAX_BOOL_LITERALS,
            });
        }
        table.truncate(table_blocks(k));
        Ok(self.intern(Node::Bool { lits, table }))
    }

    /// Support literals of a node when viewed as a boolean function.
    fn support(&self, id: Id) -> Vec<Id> {
        match &self.nodes[id] {
            Node::True | Node::False => Vec::new(),
            Node::Bool { lits, .. } => lits.clone(),
            _ => vec![id],
        }
    }

    /// Value of node `id` under a full assignment `j` of the literal union
    /// `u` (positions of `id`'s own literals are precomputed by the caller
    /// through `u`'s sorted order).
    fn eval_at(&self, id: Id, u: &[Id], j: usize) -> bool {
        match &self.nodes[id] {
            Node::True => true,
            Node::False => false,
            Node::Bool { lits, table } => {
                let mut idx = 0usize;
                for (i, l) in lits.iter().enumerate() {
                    let pos = u.binary_search(l).expect("literal in union");
                    if j >> pos & 1 == 1 {
                        idx |= 1 << i;
                    }
                }
                table_bit(table, idx)
            }
            _ => {
                let pos = u.binary_search(&id).expect("literal in union");
                j >> pos & 1 == 1
            }
        }
    }

    /// Conjunction/disjunction of arbitrary nodes, truth-table canonical.
    fn nary(&mut self, items: Vec<Id>, conjunction: bool) -> Result<Id, DfaError> {
        let (unit, zero) = if conjunction {
            (TRUE_ID, FALSE_ID)
        } else {
            (FALSE_ID, TRUE_ID)
        };
        let mut kept = Vec::with_capacity(items.len());
        for id in items {
            if id == zero {
                return Ok(zero);
            }
            if id != unit {
                kept.push(id);
            }
        }
        kept.sort_unstable();
        kept.dedup();
        match kept.len() {
            0 => return Ok(unit),
            1 => return Ok(kept[0]),
            _ => {}
        }
        let mut union: Vec<Id> = Vec::new();
        for &id in &kept {
            union.extend(self.support(id));
        }
        union.sort_unstable();
        union.dedup();
        let k = union.len();
        if k > MAX_BOOL_LITERALS {
            return Err(DfaError::StateBudget {
                budget: MAX_BOOL_LITERALS,
            });
        }
        let mut table = vec![0u64; table_blocks(k)];
        for j in 0..(1usize << k) {
            let v = if conjunction {
                kept.iter().all(|&id| self.eval_at(id, &union, j))
            } else {
                kept.iter().any(|&id| self.eval_at(id, &union, j))
            };
            if v {
                table[j >> 6] |= 1 << (j & 63);
            }
        }
        self.mk_bool(union, table)
    }

    fn not(&mut self, x: Id) -> Result<Id, DfaError> {
        match &self.nodes[x] {
            Node::True => Ok(FALSE_ID),
            Node::False => Ok(TRUE_ID),
            Node::Bool { lits, table } => {
                let k = lits.len();
                let lits = lits.clone();
                let mut flipped: Vec<u64> = table.iter().map(|b| !b).collect();
                // mask tail bits beyond 2^k
                let valid = 1usize << k;
                let tail = valid & 63;
                if tail != 0 {
                    let last = flipped.len() - 1;
                    flipped[last] &= (1u64 << tail) - 1;
                }
                self.mk_bool(lits, flipped)
            }
            _ => self.mk_bool(vec![x], vec![0b01]),
        }
    }

    fn next_of(&mut self, x: Id) -> Id {
        if x == FALSE_ID {
            FALSE_ID
        } else {
            self.intern(Node::Next(x))
        }
    }

    fn until_of(&mut self, a: Id, b: Id) -> Id {
        if b == FALSE_ID {
            FALSE_ID
        } else if a == TRUE_ID {
            self.eventually_of(b)
        } else {
            self.intern(Node::Until(a, b))
        }
    }

    fn eventually_of(&mut self, x: Id) -> Id {
        match (x, &self.nodes[x]) {
            (FALSE_ID, _) => FALSE_ID,
            (_, Node::Eventually(_)) => x,
            _ => self.intern(Node::Eventually(x)),
        }
    }

    fn globally_of(&mut self, x: Id) -> Id {
        match (x, &self.nodes[x]) {
            (TRUE_ID, _) => TRUE_ID,
            (_, Node::Globally(_)) => x,
            _ => self.intern(Node::Globally(x)),
        }
    }

    fn from_formula(&mut self, f: &Formula, ap: &[String]) -> Result<Id, DfaError> {
        Ok(match f {
            Formula::True => TRUE_ID,
            Formula::False => FALSE_ID,
            Formula::Atom(a) => {
                let bit = ap.iter().position(|x| x == a).map(|i| i as u32);
                self.intern(Node::Atom(bit))
            }
            Formula::Not(g) => {
                let x = self.from_formula(g, ap)?;
                self.not(x)?
            }
            Formula::And(gs) | Formula::Or(gs) => {
                let conjunction = matches!(f, Formula::And(_));
                let mut items = Vec::with_capacity(gs.len());
                for g in gs {
                    items.push(self.from_formula(g, ap)?);
                }
                self.nary(items, conjunction)?
            }
            Formula::Next(g) => {
                let x = self.from_formula(g, ap)?;
                self.next_of(x)
            }
            Formula::Until(a, b) => {
                let x = self.from_formula(a, ap)?;
                let y = self.from_formula(b, ap)?;
                self.until_of(x, y)
            }
            Formula::Eventually(g) => {
                let x = self.from_formula(g, ap)?;
                self.eventually_of(x)
            }
            Formula::Globally(g) => {
                let x = self.from_formula(g, ap)?;
                self.globally_of(x)
            }
        })
    }

    /// The liveness marker `F true`: holds on any nonempty remainder, fails
    /// on the empty one. Progressing a strong next produces it.
    fn nonempty_marker(&mut self) -> Id {
        self.intern(Node::Eventually(TRUE_ID))
    }

    /// One progression step, memoized per `(node, symbol)`.
    fn progress(
        &mut self,
        id: Id,
        symbol: Symbol,
        memo: &mut HashMap<(Id, Symbol), Id>,
    ) -> Result<Id, DfaError> {
        if let Some(&r) = memo.get(&(id, symbol)) {
            return Ok(r);
        }
        let result = match self.nodes[id].clone() {
            Node::True => TRUE_ID,
            Node::False => FALSE_ID,
            Node::Atom(bit) => match bit {
                Some(b) if symbol & (1 << b) != 0 => TRUE_ID,
                _ => FALSE_ID,
            },
            Node::Bool { lits, table } => {
                // substitute progressed literals into the function
                let mut progressed = Vec::with_capacity(lits.len());
                for &l in &lits {
                    progressed.push(self.progress(l, symbol, memo)?);
                }
                let mut union: Vec<Id> = Vec::new();
                for &p in &progressed {
                    union.extend(self.support(p));
                }
                union.sort_unstable();
                union.dedup();
                let k = union.len();
                if k > MAX_BOOL_LITERALS {
                    return Err(DfaError::StateBudget {
                        budget: MAX_BOOL_LITERALS,
                    });
                }
                let mut out = vec![0u64; table_blocks(k)];
                for j in 0..(1usize << k) {
                    let mut idx = 0usize;
                    for (i, &p) in progressed.iter().enumerate() {
                        if self.eval_at(p, &union, j) {
                            idx |= 1 << i;
                        }
                    }
                    if table_bit(&table, idx) {
                        out[j >> 6] |= 1 << (j & 63);
                    }
                }
                self.mk_bool(union, out)?
            }
            Node::Next(x) => {
                let live = self.nonempty_marker();
                self.nary(vec![x, live], true)?
            }
            // progressed temporal nodes reference the original node id, so
            // the closure stays within boolean combinations of subformulas
            Node::Until(a, b) => {
                let pb = self.progress(b, symbol, memo)?;
                let pa = self.progress(a, symbol, memo)?;
                let stay = self.nary(vec![pa, id], true)?;
                self.nary(vec![pb, stay], false)?
            }
            Node::Eventually(x) => {
                let px = self.progress(x, symbol, memo)?;
                self.nary(vec![px, id], false)?
            }
            Node::Globally(x) => {
                let px = self.progress(x, symbol, memo)?;
                self.nary(vec![px, id], true)?
            }
        };
        memo.insert((id, symbol), result);
        Ok(result)
    }
}

/// Compiles a formula to the minimal DFA over the `2^|ap|` alphabet.
pub fn to_dfa(formula: &Formula, ap: &[String], state_budget: usize) -> Result<Dfa, DfaError> {
    let num_symbols = 1usize << ap.len();
    let mut interner = Interner::new();
    let start = interner.from_formula(formula, ap)?;

    let mut index: HashMap<Id, usize> = HashMap::new();
    let mut states: Vec<Id> = Vec::new();
    let mut next: Vec<Vec<usize>> = Vec::new();
    let mut memo: HashMap<(Id, Symbol), Id> = HashMap::new();
    index.insert(start, 0);
    states.push(start);
    let mut frontier = 0usize;
    while frontier < states.len() {
        let f = states[frontier];
        let mut row = Vec::with_capacity(num_symbols);
        for sym in 0..num_symbols {
            let succ = interner.progress(f, sym as Symbol, &mut memo)?;
            let id = match index.get(&succ) {
                Some(&id) => id,
                None => {
                    let id = states.len();
                    if id >= state_budget {
                        return Err(DfaError::StateBudget {
                            budget: state_budget,
                        });
                    }
                    index.insert(succ, id);
                    states.push(succ);
                    id
                }
            };
            row.push(id);
        }
        next.push(row);
        frontier += 1;
    }
    let accepting: Vec<bool> = states.iter().map(|&f| interner.empty_ok[f]).collect();
    let dfa = Dfa {
        ap: ap.to_vec(),
        initial: 0,
        accepting,
        next,
    };
    Ok(minimize(&dfa))
}

/// Hopcroft partition refinement. The input must be total and deterministic;
/// all states are assumed reachable (the progression construction only emits
/// reachable states). Resulting blocks are renumbered by smallest member so
/// the output is deterministic.
pub fn minimize(dfa: &Dfa) -> Dfa {
    let n = dfa.num_states();
    let k = dfa.num_symbols();
    if n == 0 {
        return dfa.clone();
    }

    // reverse edges per symbol
    let mut rev: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; k];
    for (s, row) in dfa.next.iter().enumerate() {
        for (sym, &t) in row.iter().enumerate() {
            rev[sym][t].push(s);
        }
    }

    // initial partition: accepting / rejecting
    let mut block_of: Vec<usize> = dfa.accepting.iter().map(|&a| usize::from(a)).collect();
    let mut blocks: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for (s, &b) in block_of.iter().enumerate() {
        blocks[b].push(s);
    }
    if blocks[0].is_empty() || blocks[1].is_empty() {
        blocks = vec![(0..n).collect()];
        for b in block_of.iter_mut() {
            *b = 0;
        }
    }

    let mut worklist: VecDeque<(usize, usize)> = VecDeque::new();
    for b in 0..blocks.len() {
        for sym in 0..k {
            worklist.push_back((b, sym));
        }
    }

    while let Some((splitter, sym)) = worklist.pop_front() {
        // states with a transition into the splitter block on sym
        let mut incoming: Vec<usize> = Vec::new();
        for &t in &blocks[splitter] {
            incoming.extend(rev[sym][t].iter().copied());
        }
        if incoming.is_empty() {
            continue;
        }
        let mut touched: HashMap<usize, Vec<usize>> = HashMap::new();
        for s in incoming {
            touched.entry(block_of[s]).or_default().push(s);
        }
        let mut touched: Vec<(usize, Vec<usize>)> = touched.into_iter().collect();
        touched.sort_unstable_by_key(|(b, _)| *b);
        for (b, mut hits) in touched {
            hits.sort_unstable();
            hits.dedup();
            if hits.len() == blocks[b].len() {
                continue;
            }
            // split block b into hits / rest
            let rest: Vec<usize> = blocks[b]
                .iter()
                .copied()
                .filter(|s| hits.binary_search(s).is_err())
                .collect();
            let new_id = blocks.len();
            let (small, large) = if hits.len() <= rest.len() {
                (hits, rest)
            } else {
                (rest, hits)
            };
            for &s in &small {
                block_of[s] = new_id;
            }
            blocks[b] = large;
            blocks.push(small);
            for sym2 in 0..k {
                worklist.push_back((new_id, sym2));
            }
        }
    }

    // renumber blocks by smallest member for a deterministic result
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    order.sort_unstable_by_key(|&b| blocks[b].iter().copied().min().unwrap_or(usize::MAX));
    let mut renum = vec![0usize; blocks.len()];
    for (newi, &b) in order.iter().enumerate() {
        renum[b] = newi;
    }

    let m = blocks.len();
    let mut next = vec![vec![0usize; k]; m];
    let mut accepting = vec![false; m];
    for (b, members) in blocks.iter().enumerate() {
        let rep = members[0];
        let nb = renum[b];
        accepting[nb] = dfa.accepting[rep];
        for sym in 0..k {
            next[nb][sym] = renum[block_of[dfa.next[rep][sym]]];
        }
    }
    Dfa {
        ap: dfa.ap.clone(),
        initial: renum[block_of[dfa.initial]],
        accepting,
        next,
    }
}
