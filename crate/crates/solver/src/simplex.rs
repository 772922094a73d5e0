//! Bounded-variable revised primal simplex.
//!
//! Rows `l ≤ Ax ≤ u` get a logical variable each, `Ax − r = 0` with
//! `r ∈ [l, u]`, so the basis always has one column per row. Phase 1 adds an
//! artificial column for every row the starting point violates and drives
//! their sum to zero.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::time::Instant;

use flowgraph_core::lp::{LpInstance, SolveResult, SolveStatus};
use flowgraph_core::Scalar;

use crate::lu::{LuFactors, SparseVec, StepQueue};
use crate::{Pricing, SimplexOptions, SolverError};

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Free and nonbasic, parked at zero.
    Zero,
}

/// Elementary column transform appended after each basis change.
#[derive(Debug, Clone)]
struct Eta {
    slot: usize,
    pivot: f64,
    entries: Vec<(usize, f64)>,
}

/// Product-form update of the factorised basis. Entries are also indexed by
/// slot so that a backward solve with a sparse vector only touches the etas
/// it meets.
#[derive(Debug, Default)]
struct EtaFile {
    etas: Vec<Eta>,
    by_slot: Vec<Vec<(usize, f64)>>,
    touched: Vec<usize>,
    accum: Vec<f64>,
}

impl EtaFile {
    fn new(m: usize) -> Self {
        EtaFile { by_slot: vec![Vec::new(); m], ..Default::default() }
    }

    fn len(&self) -> usize {
        self.etas.len()
    }

    fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    fn clear(&mut self) {
        for &i in &self.touched {
            self.by_slot[i].clear();
        }
        self.touched.clear();
        self.etas.clear();
    }

    fn push(&mut self, slot: usize, pivot: f64, alpha: &SparseVec) {
        let k = self.etas.len();
        let mut entries = Vec::with_capacity(alpha.nz.len());
        for &i in &alpha.nz {
            let a = alpha.val[i];
            if i == slot || a == 0.0 {
                continue;
            }
            entries.push((i, a));
            if self.by_slot[i].is_empty() {
                self.touched.push(i);
            }
            self.by_slot[i].push((k, a));
        }
        self.etas.push(Eta { slot, pivot, entries });
    }

    fn ftran(&self, x: &mut SparseVec) {
        for eta in &self.etas {
            let xr = x.val[eta.slot];
            if xr == 0.0 {
                continue;
            }
            let v = xr / eta.pivot;
            x.set(eta.slot, v);
            for &(i, a) in &eta.entries {
                x.add(i, -a * v);
            }
        }
    }

    fn btran(&mut self, c: &mut SparseVec) {
        if self.etas.is_empty() {
            return;
        }
        self.accum.clear();
        self.accum.resize(self.etas.len(), 0.0);
        for &i in &c.nz {
            let ci = c.val[i];
            if ci != 0.0 {
                for &(k, a) in &self.by_slot[i] {
                    self.accum[k] += a * ci;
                }
            }
        }
        for k in (0..self.etas.len()).rev() {
            let eta = &self.etas[k];
            let old = c.val[eta.slot];
            let v = (old - self.accum[k]) / eta.pivot;
            if v != old {
                c.set(eta.slot, v);
                let delta = v - old;
                for &(k2, a) in &self.by_slot[eta.slot] {
                    if k2 >= k {
                        break;
                    }
                    self.accum[k2] += a * delta;
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

pub(crate) struct Simplex<'a, T> {
    lp: &'a LpInstance<T>,
    opts: &'a SimplexOptions,
    m: usize,
    n: usize,
    col_start: Vec<usize>,
    col_row: Vec<usize>,
    col_val: Vec<f64>,
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    slot_of: Vec<usize>,
    lu: Option<LuFactors>,
    etas: EtaFile,
    d: Vec<f64>,
    /// Devex reference weights; all ones under Dantzig pricing.
    weight: Vec<f64>,
    heap: BinaryHeap<(u64, Reverse<usize>)>,
    rhs: SparseVec,
    alpha: SparseVec,
    rho: SparseVec,
    unit: SparseVec,
    prow: SparseVec,
    queue: StepQueue,
    iterations: u64,
    objective: f64,
    bland: bool,
    best_objective: f64,
    since_progress: u64,
}

impl<'a, T: Scalar> Simplex<'a, T> {
    pub(crate) fn new(lp: &'a LpInstance<T>, opts: &'a SimplexOptions) -> Self {
        let m = lp.n_rows();
        let n = lp.n_vars();
        let mut counts = vec![0usize; n + 1];
        for i in 0..m {
            for &j in lp.row(i).0 {
                counts[j as usize + 1] += 1;
            }
        }
        for j in 0..n {
            counts[j + 1] += counts[j];
        }
        let col_start = counts.clone();
        let mut fill = counts;
        let nnz = col_start[n];
        let mut col_row = vec![0; nnz];
        let mut col_val = vec![0.0; nnz];
        for i in 0..m {
            let (cols, vals) = lp.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let j = j as usize;
                col_row[fill[j]] = i;
                col_val[fill[j]] = v.as_f64();
                fill[j] += 1;
            }
        }
        let mut lower: Vec<f64> = lp.vars.iter().map(|v| v.lower.as_f64()).collect();
        let mut upper: Vec<f64> = lp.vars.iter().map(|v| v.upper.as_f64()).collect();
        lower.extend(lp.rows.iter().map(|r| r.lower.as_f64()));
        upper.extend(lp.rows.iter().map(|r| r.upper.as_f64()));
        let total = n + m;
        Simplex {
            lp,
            opts,
            m,
            n,
            col_start,
            col_row,
            col_val,
            art_row: Vec::new(),
            art_sign: Vec::new(),
            lower,
            upper,
            cost: vec![0.0; total],
            x: vec![0.0; total],
            state: vec![State::Lower; total],
            basis: Vec::with_capacity(m),
            slot_of: vec![NONE; total],
            lu: None,
            etas: EtaFile::new(m),
            d: vec![0.0; total],
            weight: vec![1.0; total],
            heap: BinaryHeap::new(),
            rhs: SparseVec::new(m),
            alpha: SparseVec::new(m),
            rho: SparseVec::new(m),
            unit: SparseVec::new(m),
            prow: SparseVec::new(total),
            queue: StepQueue::new(m),
            iterations: 0,
            objective: 0.0,
            bland: opts.pricing == Pricing::Bland,
            best_objective: f64::INFINITY,
            since_progress: 0,
        }
    }

    fn total(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn column(&self, j: usize, out: &mut Vec<(usize, f64)>) {
        out.clear();
        if j < self.n {
            let (s, e) = (self.col_start[j], self.col_start[j + 1]);
            out.extend(self.col_row[s..e].iter().copied().zip(self.col_val[s..e].iter().copied()));
        } else if j < self.n + self.m {
            out.push((j - self.n, -1.0));
        } else {
            let k = j - self.n - self.m;
            out.push((self.art_row[k], self.art_sign[k]));
        }
    }

    fn load_column(&mut self, j: usize) {
        self.rhs.clear();
        if j < self.n {
            for p in self.col_start[j]..self.col_start[j + 1] {
                self.rhs.add(self.col_row[p], self.col_val[p]);
            }
        } else if j < self.n + self.m {
            self.rhs.add(j - self.n, -1.0);
        } else {
            let k = j - self.n - self.m;
            self.rhs.add(self.art_row[k], self.art_sign[k]);
        }
    }

    fn push_var(&mut self, lower: f64, upper: f64) -> usize {
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.push(0.0);
        self.x.push(0.0);
        self.state.push(State::Lower);
        self.slot_of.push(NONE);
        self.d.push(0.0);
        self.weight.push(1.0);
        self.total() - 1
    }

    /// Nonbasic structurals at a finite bound (zero for free ones), logicals
    /// basic where the row is satisfied, artificials elsewhere.
    fn initial_basis(&mut self) {
        for j in 0..self.n {
            let (l, u) = (self.lower[j], self.upper[j]);
            let (v, s) = if l.is_finite() {
                (l, State::Lower)
            } else if u.is_finite() {
                (u, State::Upper)
            } else {
                (0.0, State::Zero)
            };
            self.x[j] = v;
            self.state[j] = s;
        }
        let mut activity = vec![0.0; self.m];
        for j in 0..self.n {
            if self.x[j] != 0.0 {
                for p in self.col_start[j]..self.col_start[j + 1] {
                    activity[self.col_row[p]] += self.col_val[p] * self.x[j];
                }
            }
        }
        let tol = self.opts.feas_tol;
        let mut arts = Vec::new();
        for (i, &act) in activity.iter().enumerate() {
            let li = self.n + i;
            let (l, u) = (self.lower[li], self.upper[li]);
            self.x[li] = act;
            if act >= l - tol && act <= u + tol {
                self.state[li] = State::Basic;
                self.basis.push(li);
            } else {
                let (bound, st) = if act < l { (l, State::Lower) } else { (u, State::Upper) };
                self.x[li] = bound;
                self.state[li] = st;
                // Ax − r + s·a = 0 with a ≥ 0.
                let gap = bound - act;
                arts.push((i, gap.signum(), gap.abs()));
                self.basis.push(NONE);
            }
        }
        self.art_row.reserve(arts.len());
        for (i, sign, value) in arts {
            self.art_row.push(i);
            self.art_sign.push(sign);
            let a = self.push_var(0.0, f64::INFINITY);
            self.x[a] = value;
            self.state[a] = State::Basic;
            self.basis[i] = a;
        }
        for (s, &j) in self.basis.iter().enumerate() {
            self.slot_of[j] = s;
        }
    }

    fn set_phase_costs(&mut self, phase: Phase) {
        let total = self.total();
        self.cost = vec![0.0; total];
        match phase {
            Phase::One => {
                for a in self.n + self.m..total {
                    self.cost[a] = 1.0;
                }
            }
            Phase::Two => {
                for &(j, c) in &self.lp.objective {
                    self.cost[j] = c.as_f64();
                }
            }
        }
    }

    /// Fresh factorisation, then primal values and reduced costs from scratch.
    fn refactor(&mut self) -> Result<(), SolverError> {
        let mut col = Vec::new();
        let (mut start, mut idx, mut val) = (Vec::with_capacity(self.m + 1), Vec::new(), Vec::new());
        for _attempt in 0..self.m.max(1) + 1 {
            start.clear();
            idx.clear();
            val.clear();
            start.push(0);
            for &j in &self.basis {
                self.column(j, &mut col);
                for &(i, v) in &col {
                    idx.push(i);
                    val.push(v);
                }
                start.push(idx.len());
            }
            match LuFactors::factorize_csc(self.m, &start, &idx, &val) {
                Ok(lu) => {
                    self.lu = Some(lu);
                    self.etas.clear();
                    self.recompute_primal();
                    self.recompute_duals();
                    return Ok(());
                }
                Err(sing) => {
                    log::debug!("basis singular in {} columns, patching with logicals", sing.slots.len());
                    for (&slot, &row) in sing.slots.iter().zip(&sing.rows) {
                        let out = self.basis[slot];
                        self.make_nonbasic_near(out);
                        let logical = self.n + row;
                        self.basis[slot] = logical;
                        self.slot_of[logical] = slot;
                        self.state[logical] = State::Basic;
                    }
                }
            }
        }
        Err(SolverError::Numerical("basis could not be repaired".into()))
    }

    fn make_nonbasic_near(&mut self, j: usize) {
        self.slot_of[j] = NONE;
        let (l, u, v) = (self.lower[j], self.upper[j], self.x[j]);
        let (value, st) = match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if (v - l).abs() <= (u - v).abs() {
                    (l, State::Lower)
                } else {
                    (u, State::Upper)
                }
            }
            (true, false) => (l, State::Lower),
            (false, true) => (u, State::Upper),
            (false, false) => (0.0, State::Zero),
        };
        self.x[j] = value;
        self.state[j] = st;
    }

    fn ftran(&mut self) {
        let lu = self.lu.as_ref().expect("factorised");
        lu.ftran(&mut self.rhs, &mut self.alpha, &mut self.queue);
        self.etas.ftran(&mut self.alpha);
    }

    /// `unit` (slot space) is consumed; the result lands in `rho`.
    fn btran(&mut self) {
        self.etas.btran(&mut self.unit);
        let lu = self.lu.as_ref().expect("factorised");
        lu.btran(&mut self.unit, &mut self.rho, &mut self.queue);
    }

    fn recompute_primal(&mut self) {
        self.rhs.clear();
        let mut col = Vec::new();
        for j in 0..self.total() {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                self.column(j, &mut col);
                for &(i, a) in &col {
                    self.rhs.add(i, -a * self.x[j]);
                }
            }
        }
        self.ftran();
        for s in 0..self.m {
            self.x[self.basis[s]] = self.alpha.val[s];
        }
        self.objective = (0..self.total()).map(|j| self.cost[j] * self.x[j]).sum();
    }

    fn recompute_duals(&mut self) {
        self.unit.clear();
        for s in 0..self.m {
            let c = self.cost[self.basis[s]];
            if c != 0.0 {
                self.unit.add(s, c);
            }
        }
        self.btran();
        let y = &self.rho.val;
        for j in 0..self.n {
            let mut dj = self.cost[j];
            for p in self.col_start[j]..self.col_start[j + 1] {
                dj -= y[self.col_row[p]] * self.col_val[p];
            }
            self.d[j] = dj;
        }
        for (i, yi) in y.iter().enumerate().take(self.m) {
            self.d[self.n + i] = self.cost[self.n + i] + yi;
        }
        for k in 0..self.art_row.len() {
            let a = self.n + self.m + k;
            self.d[a] = self.cost[a] - y[self.art_row[k]] * self.art_sign[k];
        }
        for s in 0..self.m {
            self.d[self.basis[s]] = 0.0;
        }
        self.heap.clear();
        for j in 0..self.total() {
            self.offer(j);
        }
    }

    fn eligible(&self, j: usize) -> bool {
        let tol = self.opts.opt_tol;
        let dj = self.d[j];
        match self.state[j] {
            State::Basic => false,
            State::Lower => dj < -tol && self.upper[j] > self.lower[j],
            State::Upper => dj > tol && self.upper[j] > self.lower[j],
            State::Zero => dj.abs() > tol,
        }
    }

    fn score(&self, j: usize) -> u64 {
        (self.d[j] * self.d[j] / self.weight[j]).to_bits()
    }

    fn offer(&mut self, j: usize) {
        if self.eligible(j) {
            self.heap.push((self.score(j), Reverse(j)));
        }
    }

    fn choose_entering(&mut self) -> Option<usize> {
        if self.bland {
            return (0..self.total()).find(|&j| self.eligible(j));
        }
        while let Some((key, Reverse(j))) = self.heap.pop() {
            if self.eligible(j) && self.score(j) == key {
                return Some(j);
            }
        }
        None
    }

    fn iterate(&mut self, phase: Phase) -> Result<Step, SolverError> {
        let Some(q) = self.choose_entering() else { return Ok(Step::Optimal) };
        let dir = match self.state[q] {
            State::Lower => 1.0,
            State::Upper => -1.0,
            _ => -self.d[q].signum(),
        };
        self.load_column(q);
        self.ftran();
        self.alpha.prune(1e-14);
        // Ratio test: x_B changes by −dir·θ·α.
        let tol = 0.5 * self.opts.feas_tol;
        let piv_tol = self.opts.pivot_tol;
        let range = self.upper[q] - self.lower[q];
        let mut theta_max = f64::INFINITY;
        for &s in &self.alpha.nz {
            let a = self.alpha.val[s];
            if a.abs() < piv_tol {
                continue;
            }
            let j = self.basis[s];
            let delta = -dir * a;
            let r = if delta < 0.0 {
                let l = self.lower[j];
                if !l.is_finite() {
                    continue;
                }
                (self.x[j] - l + if self.bland { 0.0 } else { tol }) / -delta
            } else {
                let u = self.upper[j];
                if !u.is_finite() {
                    continue;
                }
                (u - self.x[j] + if self.bland { 0.0 } else { tol }) / delta
            };
            theta_max = theta_max.min(r);
        }
        let mut leave: Option<(usize, f64)> = None;
        let mut best_key = (f64::NEG_INFINITY, 0usize);
        for &s in &self.alpha.nz {
            let a = self.alpha.val[s];
            if a.abs() < piv_tol {
                continue;
            }
            let j = self.basis[s];
            let delta = -dir * a;
            let r = if delta < 0.0 {
                let l = self.lower[j];
                if !l.is_finite() {
                    continue;
                }
                (self.x[j] - l) / -delta
            } else {
                let u = self.upper[j];
                if !u.is_finite() {
                    continue;
                }
                (u - self.x[j]) / delta
            };
            if r <= theta_max {
                // Bland: smallest variable index among ties; otherwise the
                // largest pivot.
                let key = if self.bland { (-(r.max(0.0)), usize::MAX - j) } else { (a.abs(), usize::MAX - j) };
                if key > best_key {
                    best_key = key;
                    leave = Some((s, r.max(0.0)));
                }
            }
        }

        if range.is_finite() && leave.is_none_or(|(_, r)| range <= r) {
            // Bound flip.
            self.shift(q, dir, range);
            let (v, st) = if dir > 0.0 { (self.upper[q], State::Upper) } else { (self.lower[q], State::Lower) };
            self.x[q] = v;
            self.state[q] = st;
            self.objective += self.d[q] * dir * range;
            self.iterations += 1;
            return Ok(Step::Continue);
        }
        let Some((r, theta)) = leave else {
            if phase == Phase::One {
                return Err(SolverError::Numerical("phase 1 ray".into()));
            }
            return Ok(Step::Unbounded);
        };

        let alpha_r = self.alpha.val[r];
        self.unit.clear();
        self.unit.set(r, 1.0);
        self.btran();
        self.prow.clear();
        for &i in &self.rho.nz {
            let ri = self.rho.val[i];
            if ri == 0.0 {
                continue;
            }
            let (cols, vals) = self.lp.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                self.prow.add(j as usize, ri * v.as_f64());
            }
            self.prow.add(self.n + i, -ri);
        }
        let n_struct = self.n + self.m;
        for k in 0..self.art_row.len() {
            let ri = self.rho.val[self.art_row[k]];
            if ri != 0.0 {
                self.prow.add(n_struct + k, ri * self.art_sign[k]);
            }
        }
        let check = self.prow.val[q];
        if (check - alpha_r).abs() > 1e-7 * (1.0 + alpha_r.abs()) && !self.etas.is_empty() {
            log::debug!("pivot mismatch {check} vs {alpha_r}, refactorising");
            self.refactor()?;
            return Ok(Step::Continue);
        }

        let p = self.basis[r];
        let theta_d = self.d[q] / alpha_r;
        let devex = self.opts.pricing == Pricing::DevexBland;
        let w_q = self.weight[q];
        self.shift(q, dir, theta);
        self.objective += self.d[q] * dir * theta;
        // Leaving variable to the bound it hit.
        let delta_r = -dir * alpha_r;
        let (v, st) = if delta_r < 0.0 { (self.lower[p], State::Lower) } else { (self.upper[p], State::Upper) };
        self.x[p] = v;
        self.state[p] = st;
        self.slot_of[p] = NONE;
        self.basis[r] = q;
        self.slot_of[q] = r;
        self.state[q] = State::Basic;

        for idx in 0..self.prow.nz.len() {
            let j = self.prow.nz[idx];
            if self.state[j] == State::Basic || j == q {
                continue;
            }
            let a = self.prow.val[j];
            if a != 0.0 {
                self.d[j] -= theta_d * a;
                if devex {
                    let ratio = a / alpha_r;
                    self.weight[j] = self.weight[j].max(ratio * ratio * w_q);
                }
                self.offer(j);
            }
        }
        self.d[q] = 0.0;
        self.d[p] = -theta_d;
        if devex {
            self.weight[p] = (w_q / (alpha_r * alpha_r)).max(1.0);
        }
        self.offer(p);

        self.etas.push(r, alpha_r, &self.alpha);
        self.iterations += 1;
        if self.etas.len() >= self.opts.refactor_every {
            self.refactor()?;
        }
        Ok(Step::Continue)
    }

    /// Moves the entering variable by `dir·θ` and the basics along `α`.
    fn shift(&mut self, q: usize, dir: f64, theta: f64) {
        if theta == 0.0 {
            return;
        }
        self.x[q] += dir * theta;
        for &s in &self.alpha.nz {
            let j = self.basis[s];
            self.x[j] -= dir * theta * self.alpha.val[s];
        }
    }

    fn run_phase(&mut self, phase: Phase, limit: u64) -> Result<Step, SolverError> {
        self.best_objective = f64::INFINITY;
        self.since_progress = 0;
        loop {
            if self.iterations >= limit {
                return Err(SolverError::IterationLimit { iterations: self.iterations });
            }
            match self.iterate(phase)? {
                Step::Continue => {}
                done => return Ok(done),
            }
            if self.opts.pricing != Pricing::Bland {
                let scale = 1.0 + self.objective.abs();
                if self.objective < self.best_objective - 1e-12 * scale {
                    self.best_objective = self.objective;
                    self.since_progress = 0;
                    if self.bland {
                        self.bland = false;
                        self.recompute_duals();
                    }
                } else {
                    self.since_progress += 1;
                    if !self.bland && self.since_progress >= self.opts.stall_window {
                        log::debug!("stalled for {} iterations, switching to Bland's rule", self.since_progress);
                        self.bland = true;
                    }
                }
            }
        }
    }

    /// Pivots zero-valued artificials out of the basis where some other
    /// column can take their place.
    fn drive_out_artificials(&mut self) -> Result<(), SolverError> {
        let first_art = self.n + self.m;
        for r in 0..self.m {
            let a = self.basis[r];
            if a < first_art {
                continue;
            }
            self.unit.clear();
            self.unit.set(r, 1.0);
            self.btran();
            let mut best = (0.0f64, NONE);
            for &i in &self.rho.nz {
                let ri = self.rho.val[i];
                if ri == 0.0 {
                    continue;
                }
                let (cols, vals) = self.lp.row(i);
                for (&j, &v) in cols.iter().zip(vals) {
                    let j = j as usize;
                    if self.state[j] != State::Basic {
                        let w = (ri * v.as_f64()).abs();
                        if w > best.0 {
                            best = (w, j);
                        }
                    }
                }
                let l = self.n + i;
                if self.state[l] != State::Basic && ri.abs() > best.0 {
                    best = (ri.abs(), l);
                }
            }
            if best.0 < 1e-7 {
                continue;
            }
            let q = best.1;
            self.load_column(q);
            self.ftran();
            let alpha_r = self.alpha.val[r];
            if alpha_r.abs() < 1e-9 {
                continue;
            }
            self.x[a] = 0.0;
            self.state[a] = State::Lower;
            self.slot_of[a] = NONE;
            self.basis[r] = q;
            self.slot_of[q] = r;
            self.state[q] = State::Basic;
            self.etas.push(r, alpha_r, &self.alpha);
            if self.etas.len() >= self.opts.refactor_every {
                self.refactor()?;
            }
        }
        Ok(())
    }

    pub(crate) fn solve(mut self) -> Result<SolveResult<T>, SolverError> {
        let start = Instant::now();
        let limit = self.opts.max_iterations.unwrap_or(50 * (self.m + self.n) as u64).max(1);
        self.initial_basis();
        self.prow = SparseVec::new(self.total());
        let has_art = !self.art_row.is_empty();
        if has_art {
            self.set_phase_costs(Phase::One);
            self.refactor()?;
            self.run_phase(Phase::One, limit)?;
            self.refactor()?;
            let worst = (self.n + self.m..self.total()).map(|a| self.x[a]).fold(0.0f64, f64::max);
            if worst > self.opts.feas_tol {
                log::debug!("phase 1 ends with artificial value {worst:e}");
                return Ok(SolveResult::without_solution(SolveStatus::Infeasible, self.iterations, start.elapsed().as_secs_f64()));
            }
            for a in self.n + self.m..self.total() {
                self.upper[a] = 0.0;
            }
            self.drive_out_artificials()?;
        }
        self.set_phase_costs(Phase::Two);
        self.bland = self.opts.pricing == Pricing::Bland;
        self.refactor()?;
        let outcome = self.run_phase(Phase::Two, limit)?;
        let elapsed = || start.elapsed().as_secs_f64();
        if let Step::Unbounded = outcome {
            return Ok(SolveResult::without_solution(SolveStatus::Unbounded, self.iterations, elapsed()));
        }
        self.refactor()?;
        let primal: Vec<T> = self.x[..self.n].iter().map(|&v| T::of(v)).collect();
        let objective = self.lp.objective_value(&primal);
        Ok(SolveResult { status: SolveStatus::Optimal, objective, primal: Some(primal), iterations: self.iterations, wall_time_s: elapsed() })
    }
}
