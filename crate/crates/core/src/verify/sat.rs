//! Conflict-driven clause-learning SAT solver with an abortable budget.
//!
//! Two-watched-literal propagation, first-UIP learning with local clause
//! minimisation, VSIDS branching with phase saving, Luby restarts and
//! activity-based learnt clause deletion. The budget is checked after every
//! conflict: in per-variable mode each variable of the learnt clause has its
//! conflict counter bumped, and the search gives up as soon as any counter
//! exceeds the limit.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A literal: `2 * var + negated`.
pub type Lit = u32;

#[inline]
pub fn mk_lit(var: u32, negated: bool) -> Lit {
    var << 1 | negated as u32
}

#[inline]
fn lit_var(l: Lit) -> usize {
    (l >> 1) as usize
}

#[inline]
fn lit_neg(l: Lit) -> Lit {
    l ^ 1
}

#[inline]
fn lit_is_neg(l: Lit) -> bool {
    l & 1 == 1
}

/// How the conflict limit is accounted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BudgetMode {
    /// Abort when any single variable has occurred in more than `limit`
    /// learnt clauses.
    #[default]
    PerVariable,
    /// Abort after more than `limit` conflicts in total.
    Global,
}

/// Resource limit for one satisfiability query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub limit: u64,
    pub mode: BudgetMode,
    /// Safety net only; the conflict limit is the real budget.
    pub wall_clock: Option<Duration>,
}

impl Budget {
    pub fn per_variable(limit: u64) -> Budget {
        Budget { limit: limit.max(1), mode: BudgetMode::PerVariable, wall_clock: None }
    }

    pub fn global(limit: u64) -> Budget {
        Budget { limit: limit.max(1), mode: BudgetMode::Global, wall_clock: None }
    }

    pub fn unlimited() -> Budget {
        Budget { limit: u64::MAX, mode: BudgetMode::PerVariable, wall_clock: None }
    }

    pub fn is_unlimited(&self) -> bool {
        self.limit == u64::MAX && self.wall_clock.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    /// A model, indexed by variable.
    Sat(Vec<bool>),
    Unsat,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolverStats {
    pub conflicts: u64,
    pub decisions: u64,
    pub propagations: u64,
    pub restarts: u64,
    /// Largest per-variable conflict counter reached.
    pub max_var_conflicts: u64,
}

const UNDEF: i8 = 0;
const TRUE: i8 = 1;
const FALSE: i8 = -1;
const NO_REASON: u32 = u32::MAX;

// clause header: [len, flags, activity bits], then literals
const HEADER: usize = 3;
const FLAG_LEARNT: u32 = 1;
const FLAG_DELETED: u32 = 2;

#[derive(Debug, Clone, Copy)]
struct Watch {
    cref: u32,
    blocker: Lit,
}

/// Max-heap of variables keyed by activity.
#[derive(Debug, Clone, Default)]
struct VarHeap {
    heap: Vec<u32>,
    index: Vec<i32>,
}

impl VarHeap {
    fn with_vars(n: usize) -> VarHeap {
        VarHeap { heap: Vec::with_capacity(n), index: vec![-1; n] }
    }

    fn contains(&self, v: usize) -> bool {
        self.index[v] >= 0
    }

    fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            if act[self.heap[parent] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[parent];
            self.index[self.heap[i] as usize] = i as i32;
            i = parent;
        }
        self.heap[i] = v;
        self.index[v as usize] = i as i32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let len = self.heap.len();
        loop {
            let left = 2 * i + 1;
            if left >= len {
                break;
            }
            let right = left + 1;
            let child = if right < len && act[self.heap[right] as usize] > act[self.heap[left] as usize] {
                right
            } else {
                left
            };
            if act[self.heap[child] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[child];
            self.index[self.heap[i] as usize] = i as i32;
            i = child;
        }
        self.heap[i] = v;
        self.index[v as usize] = i as i32;
    }

    fn insert(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            return;
        }
        self.heap.push(v as u32);
        let i = self.heap.len() - 1;
        self.index[v] = i as i32;
        self.up(i, act);
    }

    fn increased(&mut self, v: usize, act: &[f64]) {
        if self.contains(v) {
            self.up(self.index[v] as usize, act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<usize> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.index[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.index[last as usize] = 0;
            self.down(0, act);
        }
        Some(top as usize)
    }
}

fn luby(y: f64, mut x: u64) -> f64 {
    let mut size = 1u64;
    let mut seq = 0i32;
    while size < x + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    y.powi(seq)
}

pub struct Solver {
    num_vars: usize,
    arena: Vec<u32>,
    originals: Vec<u32>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watch>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<u32>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    cla_inc: f32,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    var_conflicts: Vec<u64>,
    unsat: bool,
    max_learnts: f64,
    stats: SolverStats,
    restart_base: u64,
}

enum SearchResult {
    Sat,
    Unsat,
    Restart,
    Aborted,
}

impl Solver {
    pub fn new(num_vars: usize) -> Solver {
        Solver::with_seed(num_vars, 0)
    }

    /// The seed perturbs the initial branching order; runs with equal seeds
    /// and inputs are identical.
    pub fn with_seed(num_vars: usize, seed: u64) -> Solver {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let activity: Vec<f64> = (0..num_vars).map(|_| rng.gen::<f64>() * 1e-5).collect();
        let mut heap = VarHeap::with_vars(num_vars);
        for v in 0..num_vars {
            heap.insert(v, &activity);
        }
        Solver {
            num_vars,
            arena: Vec::new(),
            originals: Vec::new(),
            learnts: Vec::new(),
            watches: vec![Vec::new(); 2 * num_vars],
            assigns: vec![UNDEF; num_vars],
            level: vec![0; num_vars],
            reason: vec![NO_REASON; num_vars],
            polarity: vec![true; num_vars],
            activity,
            var_inc: 1.0,
            cla_inc: 1.0,
            heap,
            trail: Vec::with_capacity(num_vars),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: vec![false; num_vars],
            var_conflicts: vec![0; num_vars],
            unsat: false,
            max_learnts: 0.0,
            stats: SolverStats::default(),
            restart_base: 100,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn stats(&self) -> SolverStats {
        self.stats
    }

    #[inline]
    fn value(&self, l: Lit) -> i8 {
        let v = self.assigns[lit_var(l)];
        if lit_is_neg(l) {
            -v
        } else {
            v
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    fn clause_len(&self, cref: u32) -> usize {
        self.arena[cref as usize] as usize
    }

    fn clause_lits(&self, cref: u32) -> &[u32] {
        let start = cref as usize + HEADER;
        &self.arena[start..start + self.clause_len(cref)]
    }

    fn is_learnt(&self, cref: u32) -> bool {
        self.arena[cref as usize + 1] & FLAG_LEARNT != 0
    }

    fn clause_activity(&self, cref: u32) -> f32 {
        f32::from_bits(self.arena[cref as usize + 2])
    }

    fn set_clause_activity(&mut self, cref: u32, a: f32) {
        self.arena[cref as usize + 2] = a.to_bits();
    }

    fn alloc_clause(&mut self, lits: &[Lit], learnt: bool) -> u32 {
        let cref = self.arena.len() as u32;
        self.arena.push(lits.len() as u32);
        self.arena.push(if learnt { FLAG_LEARNT } else { 0 });
        self.arena.push(0f32.to_bits());
        self.arena.extend_from_slice(lits);
        cref
    }

    fn attach(&mut self, cref: u32) {
        let l0 = self.arena[cref as usize + HEADER];
        let l1 = self.arena[cref as usize + HEADER + 1];
        self.watches[lit_neg(l0) as usize].push(Watch { cref, blocker: l1 });
        self.watches[lit_neg(l1) as usize].push(Watch { cref, blocker: l0 });
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = lit_var(l);
        self.assigns[v] = if lit_is_neg(l) { FALSE } else { TRUE };
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    /// Adds a clause at decision level 0. Returns false once the formula is
    /// known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        assert_eq!(self.decision_level(), 0, "clauses are added before solving");
        if self.unsat {
            return false;
        }
        let mut c: Vec<Lit> = lits.to_vec();
        for &l in &c {
            assert!(lit_var(l) < self.num_vars, "literal refers to unknown variable");
        }
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == lit_neg(w[1])) {
            return true;
        }
        if c.iter().any(|&l| self.value(l) == TRUE) {
            return true;
        }
        c.retain(|&l| self.value(l) != FALSE);
        match c.len() {
            0 => {
                self.unsat = true;
                false
            }
            1 => {
                self.enqueue(c[0], NO_REASON);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
                !self.unsat
            }
            _ => {
                let cref = self.alloc_clause(&c, false);
                self.originals.push(cref);
                self.attach(cref);
                true
            }
        }
    }

    /// Unit propagation; returns the conflicting clause, if any.
    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            self.stats.propagations += 1;
            let false_lit = lit_neg(p);
            let mut ws = std::mem::take(&mut self.watches[p as usize]);
            let mut i = 0;
            let mut j = 0;
            'watches: while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == TRUE {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref;
                let base = cref as usize + HEADER;
                if self.arena[base] == false_lit {
                    self.arena.swap(base, base + 1);
                }
                let first = self.arena[base];
                let nw = Watch { cref, blocker: first };
                if first != w.blocker && self.value(first) == TRUE {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.arena[cref as usize] as usize;
                for k in 2..len {
                    let lk = self.arena[base + k];
                    if self.value(lk) != FALSE {
                        self.arena.swap(base + 1, base + k);
                        self.watches[lit_neg(lk) as usize].push(nw);
                        continue 'watches;
                    }
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == FALSE {
                    conflict = Some(cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        j += 1;
                        i += 1;
                    }
                } else {
                    self.enqueue(first, cref);
                }
            }
            ws.truncate(j);
            self.watches[p as usize] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: usize) {
        self.activity[v] += self.var_inc;
        if self.activity[v] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let a = self.clause_activity(cref) + self.cla_inc;
        self.set_clause_activity(cref, a);
        if a > 1e20 {
            for i in 0..self.learnts.len() {
                let c = self.learnts[i];
                let scaled = self.clause_activity(c) * 1e-20;
                self.set_clause_activity(c, scaled);
            }
            self.cla_inc *= 1e-20;
        }
    }

    /// First-UIP conflict analysis. Returns the learnt clause (asserting
    /// literal first, highest remaining level second) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt: Vec<Lit> = vec![0];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let current = self.decision_level();
        loop {
            if self.is_learnt(confl) {
                self.bump_clause(confl);
            }
            let start = if p.is_some() { 1 } else { 0 };
            let len = self.clause_len(confl);
            for k in start..len {
                let q = self.arena[confl as usize + HEADER + k];
                let v = lit_var(q);
                if !self.seen[v] && self.level[v] > 0 {
                    self.bump_var(v);
                    self.seen[v] = true;
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[lit_var(self.trail[index])] {
                    break;
                }
            }
            let lit = self.trail[index];
            let v = lit_var(lit);
            p = Some(lit);
            confl = self.reason[v];
            self.seen[v] = false;
            path -= 1;
            if path == 0 {
                break;
            }
        }
        learnt[0] = lit_neg(p.expect("conflict at level > 0"));

        // local minimisation: drop literals implied by other learnt literals
        let to_clear: Vec<Lit> = learnt.clone();
        let mut kept = 1;
        for i in 1..learnt.len() {
            let l = learnt[i];
            let r = self.reason[lit_var(l)];
            let redundant = r != NO_REASON
                && self.clause_lits(r)[1..].iter().all(|&q| self.seen[lit_var(q)] || self.level[lit_var(q)] == 0);
            if !redundant {
                learnt[kept] = l;
                kept += 1;
            }
        }
        learnt.truncate(kept);
        for l in to_clear {
            self.seen[lit_var(l)] = false;
        }

        let backjump = if learnt.len() == 1 {
            0
        } else {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[lit_var(learnt[i])] > self.level[lit_var(learnt[max_i])] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            self.level[lit_var(learnt[1])]
        };
        (learnt, backjump)
    }

    fn cancel_until(&mut self, level: u32) {
        if self.decision_level() <= level {
            return;
        }
        let lim = self.trail_lim[level as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = lit_var(l);
            self.assigns[v] = UNDEF;
            self.reason[v] = NO_REASON;
            self.polarity[v] = lit_is_neg(l);
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(level as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while !self.heap.is_empty() {
            let v = self.heap.pop(&self.activity)?;
            if self.assigns[v] == UNDEF {
                return Some(mk_lit(v as u32, self.polarity[v]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let first = self.arena[cref as usize + HEADER];
        let v = lit_var(first);
        self.value(first) == TRUE && self.reason[v] == cref
    }

    fn reduce_db(&mut self) {
        let mut learnts = std::mem::take(&mut self.learnts);
        learnts.sort_by(|&a, &b| {
            self.clause_activity(a)
                .partial_cmp(&self.clause_activity(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let half = learnts.len() / 2;
        let mut keep = Vec::with_capacity(learnts.len());
        for (i, &c) in learnts.iter().enumerate() {
            if i < half && self.clause_len(c) > 2 && !self.locked(c) {
                self.arena[c as usize + 1] |= FLAG_DELETED;
            } else {
                keep.push(c);
            }
        }
        self.learnts = keep;
        self.collect_garbage();
    }

    /// Compacts the clause arena and rebuilds watch lists and reasons.
    fn collect_garbage(&mut self) {
        let old = std::mem::take(&mut self.arena);
        let mut arena = Vec::with_capacity(old.len());
        let mut relocate = |c: u32| -> u32 {
            let start = c as usize;
            let len = old[start] as usize;
            let new = arena.len() as u32;
            arena.extend_from_slice(&old[start..start + HEADER + len]);
            new
        };
        let mut forward = std::collections::HashMap::new();
        let originals: Vec<u32> = self
            .originals
            .iter()
            .map(|&c| {
                let n = relocate(c);
                forward.insert(c, n);
                n
            })
            .collect();
        let learnts: Vec<u32> = self
            .learnts
            .iter()
            .map(|&c| {
                let n = relocate(c);
                forward.insert(c, n);
                n
            })
            .collect();
        self.arena = arena;
        self.originals = originals;
        self.learnts = learnts;
        for &l in &self.trail {
            let v = lit_var(l);
            if self.reason[v] != NO_REASON {
                self.reason[v] = forward[&self.reason[v]];
            }
        }
        for w in &mut self.watches {
            w.clear();
        }
        for i in 0..self.originals.len() {
            self.attach(self.originals[i]);
        }
        for i in 0..self.learnts.len() {
            self.attach(self.learnts[i]);
        }
    }

    fn over_budget(&self, budget: &Budget, learnt: &[Lit]) -> bool {
        match budget.mode {
            BudgetMode::PerVariable => learnt.iter().any(|&l| self.var_conflicts[lit_var(l)] > budget.limit),
            BudgetMode::Global => self.stats.conflicts > budget.limit,
        }
    }

    fn search(&mut self, conflicts_before_restart: u64, budget: &Budget, deadline: Option<Instant>) -> SearchResult {
        let mut local_conflicts = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.stats.conflicts += 1;
                local_conflicts += 1;
                if self.decision_level() == 0 {
                    return SearchResult::Unsat;
                }
                let (learnt, backjump) = self.analyze(confl);
                for &l in &learnt {
                    let v = lit_var(l);
                    self.var_conflicts[v] += 1;
                    self.stats.max_var_conflicts = self.stats.max_var_conflicts.max(self.var_conflicts[v]);
                }
                if self.over_budget(budget, &learnt) {
                    return SearchResult::Aborted;
                }
                if let Some(d) = deadline {
                    if self.stats.conflicts.is_multiple_of(64) && Instant::now() >= d {
                        return SearchResult::Aborted;
                    }
                }
                self.cancel_until(backjump);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], NO_REASON);
                } else {
                    let cref = self.alloc_clause(&learnt, true);
                    self.learnts.push(cref);
                    self.attach(cref);
                    self.bump_clause(cref);
                    self.enqueue(learnt[0], cref);
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
            } else {
                if local_conflicts >= conflicts_before_restart {
                    self.cancel_until(0);
                    return SearchResult::Restart;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                    self.max_learnts *= 1.1;
                }
                match self.pick_branch() {
                    None => return SearchResult::Sat,
                    Some(l) => {
                        self.stats.decisions += 1;
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, NO_REASON);
                    }
                }
            }
        }
    }

    /// Runs the search under `budget`. The solver is left at level 0, so
    /// calling `solve` again continues with the learnt clauses retained.
    pub fn solve(&mut self, budget: &Budget) -> Outcome {
        if self.unsat {
            return Outcome::Unsat;
        }
        if self.propagate().is_some() {
            self.unsat = true;
            return Outcome::Unsat;
        }
        self.max_learnts = (self.originals.len() as f64 / 3.0).max(2000.0);
        let deadline = budget.wall_clock.map(|d| Instant::now() + d);
        let mut restarts = 0u64;
        loop {
            let limit = (luby(2.0, restarts) * self.restart_base as f64) as u64;
            match self.search(limit, budget, deadline) {
                SearchResult::Sat => {
                    let model = self.assigns.iter().map(|&a| a == TRUE).collect();
                    self.cancel_until(0);
                    return Outcome::Sat(model);
                }
                SearchResult::Unsat => {
                    self.unsat = true;
                    return Outcome::Unsat;
                }
                SearchResult::Aborted => {
                    self.cancel_until(0);
                    return Outcome::Undecided;
                }
                SearchResult::Restart => {
                    restarts += 1;
                    self.stats.restarts += 1;
                    if let Some(d) = deadline {
                        if Instant::now() >= d {
                            return Outcome::Undecided;
                        }
                    }
                }
            }
        }
    }
}
