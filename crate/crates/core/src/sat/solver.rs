//! Conflict-driven clause-learning solver: two watched literals, VSIDS with
//! a binary heap, phase saving, first-UIP learning with recursive
//! minimisation, Luby restarts and LBD-based clause database reduction.
//! Clauses may be added between calls and each call takes assumptions.

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{check_model, Budget, Lit, Model, SatEngine, SatError, Verdict};

const TRUE: u8 = 1;
const FALSE: u8 = 0;
const UNDEF: u8 = 2;
const NO_REASON: u32 = u32::MAX;
const RESTART_UNIT: u64 = 100;

/// Internal literal: `2 * var0 + negated`.
type ILit = u32;

fn ilit(l: Lit) -> ILit {
    2 * (l.var() - 1) + u32::from(!l.is_positive())
}

fn ivar(l: ILit) -> usize {
    (l >> 1) as usize
}

#[derive(Debug, Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: ILit,
}

#[derive(Debug, Clone)]
struct Clause {
    lits: Vec<ILit>,
    learnt: bool,
    deleted: bool,
    lbd: u32,
    activity: f64,
}

#[derive(Debug, Default, Clone)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<u32>,
}

const NOT_IN_HEAP: u32 = u32::MAX;

impl VarHeap {
    fn grow(&mut self, n: usize) {
        self.pos.resize(n, NOT_IN_HEAP);
    }

    fn contains(&self, v: usize) -> bool {
        self.pos[v] != NOT_IN_HEAP
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.pos[v] = self.heap.len() as u32;
        self.heap.push(v as u32);
        self.up(self.heap.len() - 1, act);
    }

    fn bumped(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()? as usize;
        let last = self.heap.pop().unwrap();
        self.pos[top] = NOT_IN_HEAP;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn better(a: u32, b: u32, act: &[f64]) -> bool {
        let (x, y) = (act[a as usize], act[b as usize]);
        x > y || (x == y && a < b)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if !Self::better(v, self.heap[parent], act) {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.pos[self.heap[i] as usize] = i as u32;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && Self::better(self.heap[r], self.heap[l], act) {
                r
            } else {
                l
            };
            if !Self::better(self.heap[c], v, act) {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i as u32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as u32;
    }
}

/// Counters accumulated over the solver's lifetime.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub solves: u64,
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
}

enum Search {
    Sat,
    Unsat,
    Restart,
    Budget(&'static str),
}

#[derive(Debug, Clone)]
pub struct CdclSolver {
    ok: bool,
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watch>>,
    assign: Vec<u8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    trail: Vec<ILit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f64,
    heap: VarHeap,
    phase: Vec<bool>,
    seen: Vec<u8>,
    max_learnts: f64,
    rng: Option<ChaCha8Rng>,
    original: Vec<Vec<Lit>>,
    stats: SolverStats,
}

impl Default for CdclSolver {
    fn default() -> Self {
        Self::new()
    }
}

impl CdclSolver {
    pub fn new() -> Self {
        CdclSolver {
            ok: true,
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assign: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            heap: VarHeap::default(),
            phase: Vec::new(),
            seen: Vec::new(),
            max_learnts: 2000.0,
            rng: None,
            original: Vec::new(),
            stats: SolverStats::default(),
        }
    }

    /// Decisions pick a uniformly random polarity from `rng` instead of the
    /// saved phase, so repeated queries return diverse models.
    pub fn with_random_polarity(mut self, rng: ChaCha8Rng) -> Self {
        self.rng = Some(rng);
        self
    }

    pub fn num_vars(&self) -> u32 {
        self.assign.len() as u32
    }

    pub fn num_clauses(&self) -> usize {
        self.original.len()
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    fn value(&self, l: ILit) -> u8 {
        let a = self.assign[ivar(l)];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ (l & 1) as u8
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn enqueue(&mut self, l: ILit, reason: u32) {
        let v = ivar(l);
        debug_assert_eq!(self.assign[v], UNDEF);
        self.assign[v] = u8::from(l & 1 == 0);
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn attach(&mut self, cref: u32) {
        let c = &self.clauses[cref as usize];
        let (a, b) = (c.lits[0], c.lits[1]);
        self.watches[a as usize].push(Watch { cref, blocker: b });
        self.watches[b as usize].push(Watch { cref, blocker: a });
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = p ^ 1;
            let mut ws = std::mem::take(&mut self.watches[false_lit as usize]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = Watch {
                        cref: w.cref,
                        blocker: first,
                    };
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let l = self.clauses[cref].lits[k];
                    if self.value(l) != FALSE {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[l as usize].push(Watch {
                            cref: w.cref,
                            blocker: first,
                        });
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = Watch {
                    cref: w.cref,
                    blocker: first,
                };
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(w.cref);
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, w.cref);
                }
            }
            ws.truncate(j);
            self.watches[false_lit as usize] = ws;
            if conflict.is_some() {
                self.qhead = self.trail.len();
                break;
            }
        }
        conflict
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = ivar(l);
            self.phase[v] = l & 1 == 0;
            self.assign[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: usize) {
        let c = &mut self.clauses[cref];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &r in &self.learnts {
                self.clauses[r as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn abstract_level(&self, v: usize) -> u32 {
        1 << (self.level[v] & 31)
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<ILit>, u32) {
        let mut learnt: Vec<ILit> = vec![0];
        let mut path = 0usize;
        let mut p: Option<ILit> = None;
        let mut index = self.trail.len();
        let dl = self.decision_level();
        loop {
            let cref = confl as usize;
            if self.clauses[cref].learnt {
                self.bump_clause(cref);
            }
            let start = usize::from(p.is_some());
            for k in start..self.clauses[cref].lits.len() {
                let q = self.clauses[cref].lits[k];
                let v = ivar(q);
                if self.seen[v] == 0 && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = 1;
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[ivar(self.trail[index])] != 0 {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            confl = self.reason[ivar(pl)];
            self.seen[ivar(pl)] = 0;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = p.unwrap() ^ 1;

        // recursive minimisation
        let to_clear: Vec<ILit> = learnt.clone();
        let levels = learnt[1..]
            .iter()
            .fold(0u32, |acc, &l| acc | self.abstract_level(ivar(l)));
        let mut extra_clear = Vec::new();
        let mut kept = vec![learnt[0]];
        for &l in &learnt[1..] {
            if self.reason[ivar(l)] == NO_REASON || !self.lit_redundant(l, levels, &mut extra_clear)
            {
                kept.push(l);
            }
        }
        for &l in to_clear.iter().chain(&extra_clear) {
            self.seen[ivar(l)] = 0;
        }
        let mut learnt = kept;

        let bt = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for k in 2..learnt.len() {
                if self.level[ivar(learnt[k])] > self.level[ivar(learnt[max_i])] {
                    max_i = k;
                }
            }
            learnt.swap(1, max_i);
            self.level[ivar(learnt[1])]
        };
        (learnt, bt)
    }

    fn lit_redundant(&mut self, p: ILit, levels: u32, clear: &mut Vec<ILit>) -> bool {
        let mut stack = vec![p];
        let top = clear.len();
        while let Some(q) = stack.pop() {
            let r = self.reason[ivar(q)] as usize;
            for k in 1..self.clauses[r].lits.len() {
                let l = self.clauses[r].lits[k];
                let v = ivar(l);
                if self.seen[v] == 0 && self.level[v] > 0 {
                    if self.reason[v] != NO_REASON && (self.abstract_level(v) & levels) != 0 {
                        self.seen[v] = 1;
                        stack.push(l);
                        clear.push(l);
                    } else {
                        for &c in &clear[top..] {
                            self.seen[ivar(c)] = 0;
                        }
                        clear.truncate(top);
                        return false;
                    }
                }
            }
        }
        true
    }

    fn lbd(&self, lits: &[ILit]) -> u32 {
        let mut levels: Vec<u32> = lits.iter().map(|&l| self.level[ivar(l)]).collect();
        levels.sort_unstable();
        levels.dedup();
        levels.len() as u32
    }

    fn locked(&self, cref: u32) -> bool {
        let c = &self.clauses[cref as usize];
        let l = c.lits[0];
        self.value(l) == TRUE && self.reason[ivar(l)] == cref
    }

    fn reduce_db(&mut self) {
        let mut order = std::mem::take(&mut self.learnts);
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&self.clauses[a as usize], &self.clauses[b as usize]);
            cb.lbd
                .cmp(&ca.lbd)
                .then(ca.activity.total_cmp(&cb.activity))
        });
        let half = order.len() / 2;
        let mut keep = Vec::with_capacity(order.len());
        for (k, &cref) in order.iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if k < half && c.lbd > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                keep.push(cref);
            }
        }
        self.learnts = keep;
        for ws in &mut self.watches {
            ws.retain(|w| !self.clauses[w.cref as usize].deleted);
        }
    }

    fn pick_branch(&mut self) -> Option<ILit> {
        loop {
            let v = self.heap.pop(&self.activity)?;
            if self.assign[v] == UNDEF {
                let positive = match &mut self.rng {
                    Some(r) => r.gen::<bool>(),
                    None => self.phase[v],
                };
                return Some(2 * v as u32 + u32::from(!positive));
            }
        }
    }

    fn search(
        &mut self,
        max_conflicts: u64,
        assumptions: &[ILit],
        budget: &Budget,
        start_conflicts: u64,
    ) -> Search {
        let mut conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                conflicts += 1;
                self.stats.conflicts += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Search::Unsat;
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let lbd = self.lbd(&learnt);
                    let cref = self.clauses.len() as u32;
                    let first = learnt[0];
                    self.clauses.push(Clause {
                        lits: learnt,
                        learnt: true,
                        deleted: false,
                        lbd,
                        activity: 0.0,
                    });
                    self.learnts.push(cref);
                    self.attach(cref);
                    self.bump_clause(cref as usize);
                    self.enqueue(first, cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if let Some(m) = budget.max_conflicts {
                    if self.stats.conflicts - start_conflicts >= m {
                        return Search::Budget("conflict limit");
                    }
                }
                if self.stats.conflicts % 64 == 0 {
                    if let Some(d) = budget.deadline {
                        if Instant::now() >= d {
                            return Search::Budget("deadline");
                        }
                    }
                }
            } else {
                if conflicts >= max_conflicts {
                    self.cancel_until(0);
                    return Search::Restart;
                }
                if self.learnts.len() as f64 >= self.max_learnts + self.trail.len() as f64 {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                let mut next = None;
                while (self.decision_level() as usize) < assumptions.len() {
                    let a = assumptions[self.decision_level() as usize];
                    match self.value(a) {
                        TRUE => self.trail_lim.push(self.trail.len()),
                        FALSE => return Search::Unsat,
                        _ => {
                            next = Some(a);
                            break;
                        }
                    }
                }
                let next = match next {
                    Some(a) => a,
                    None => {
                        self.stats.decisions += 1;
                        match self.pick_branch() {
                            Some(l) => l,
                            None => return Search::Sat,
                        }
                    }
                };
                self.trail_lim.push(self.trail.len());
                self.enqueue(next, NO_REASON);
            }
        }
    }

    fn model(&self) -> Model {
        Model::new(self.assign.iter().map(|&a| a == TRUE).collect())
    }
}

fn luby(mut x: u64) -> u64 {
    let (mut size, mut seq) = (1u64, 0u32);
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1 << seq
}

impl SatEngine for CdclSolver {
    fn reserve_vars(&mut self, num_vars: u32) {
        let n = num_vars as usize;
        let old = self.assign.len();
        if n <= old {
            return;
        }
        self.assign.resize(n, UNDEF);
        self.level.resize(n, 0);
        self.reason.resize(n, NO_REASON);
        self.activity.resize(n, 0.0);
        self.phase.resize(n, false);
        self.seen.resize(n, 0);
        self.watches.resize(2 * n, Vec::new());
        self.heap.grow(n);
        for v in old..n {
            self.heap.insert(v, &self.activity);
        }
    }

    fn add_clause(&mut self, lits: &[Lit]) {
        assert!(!lits.is_empty(), "empty clause");
        let max = lits.iter().map(|l| l.var()).max().unwrap();
        self.reserve_vars(max);
        self.original.push(lits.to_vec());
        if !self.ok {
            return;
        }
        self.cancel_until(0);
        let mut c: Vec<ILit> = lits.iter().map(|&l| ilit(l)).collect();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] ^ 1 == w[1]) {
            return;
        }
        if c.iter().any(|&l| self.value(l) == TRUE) {
            return;
        }
        c.retain(|&l| self.value(l) != FALSE);
        match c.len() {
            0 => self.ok = false,
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.ok = false;
                }
            }
            _ => {
                let cref = self.clauses.len() as u32;
                self.clauses.push(Clause {
                    lits: c,
                    learnt: false,
                    deleted: false,
                    lbd: 0,
                    activity: 0.0,
                });
                self.attach(cref);
            }
        }
    }

    fn solve(&mut self, assumptions: &[Lit], budget: Budget) -> Result<Verdict, SatError> {
        self.stats.solves += 1;
        if let Some(m) = assumptions.iter().map(|a| a.var()).max() {
            self.reserve_vars(m);
        }
        if !self.ok {
            return Ok(Verdict::Unsat);
        }
        self.cancel_until(0);
        self.max_learnts = self.max_learnts.max(self.clauses.len() as f64 / 3.0);
        let assume: Vec<ILit> = assumptions.iter().map(|&a| ilit(a)).collect();
        let start = self.stats.conflicts;
        let mut k = 0;
        let outcome = loop {
            match self.search(luby(k) * RESTART_UNIT, &assume, &budget, start) {
                Search::Restart => {
                    self.stats.restarts += 1;
                    k += 1;
                }
                other => break other,
            }
        };
        let result = match outcome {
            Search::Sat => {
                let m = self.model();
                check_model(&self.original, assumptions, &m)?;
                Ok(Verdict::Sat(m))
            }
            Search::Unsat => Ok(Verdict::Unsat),
            Search::Budget(why) => Err(SatError::Budget(why.to_string())),
            Search::Restart => unreachable!(),
        };
        self.cancel_until(0);
        result
    }
}
