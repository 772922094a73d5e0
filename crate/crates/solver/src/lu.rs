//! Sparse LU factorisation of a simplex basis with Markowitz pivoting, and
//! triangular solves that only touch the steps a sparse right-hand side
//! reaches.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Dense values plus the list of touched positions.
#[derive(Debug, Clone)]
pub struct SparseVec {
    pub val: Vec<f64>,
    pub nz: Vec<usize>,
    flag: Vec<bool>,
}

impl SparseVec {
    pub fn new(n: usize) -> Self {
        SparseVec { val: vec![0.0; n], nz: Vec::new(), flag: vec![false; n] }
    }

    /// Dimension of the dense backing vector.
    pub fn dim(&self) -> usize {
        self.val.len()
    }

    pub fn add(&mut self, i: usize, v: f64) {
        if !self.flag[i] {
            self.flag[i] = true;
            self.nz.push(i);
        }
        self.val[i] += v;
    }

    pub fn set(&mut self, i: usize, v: f64) {
        if !self.flag[i] {
            self.flag[i] = true;
            self.nz.push(i);
        }
        self.val[i] = v;
    }

    pub fn clear(&mut self) {
        for &i in &self.nz {
            self.val[i] = 0.0;
            self.flag[i] = false;
        }
        self.nz.clear();
    }

    /// Zeroes entries below `eps` and drops them from the index list.
    pub fn prune(&mut self, eps: f64) {
        let (val, flag) = (&mut self.val, &mut self.flag);
        self.nz.retain(|&i| {
            if val[i].abs() <= eps {
                val[i] = 0.0;
                flag[i] = false;
                false
            } else {
                true
            }
        });
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nz.iter().map(move |&i| (i, self.val[i]))
    }
}

/// Columns that could not be pivoted, and rows left without a pivot.
#[derive(Debug, Clone, PartialEq)]
pub struct Singular {
    pub slots: Vec<usize>,
    pub rows: Vec<usize>,
}

/// Compressed lists indexed by an outer key.
#[derive(Debug, Clone, Default)]
struct Lists {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Lists {
    fn from_pairs(n: usize, pairs: &[(usize, usize, f64)]) -> Self {
        let mut start = vec![0usize; n + 1];
        for &(k, _, _) in pairs {
            start[k + 1] += 1;
        }
        for k in 0..n {
            start[k + 1] += start[k];
        }
        let mut fill = start.clone();
        let mut idx = vec![0; pairs.len()];
        let mut val = vec![0.0; pairs.len()];
        for &(k, i, v) in pairs {
            idx[fill[k]] = i;
            val[fill[k]] = v;
            fill[k] += 1;
        }
        Lists { start, idx, val }
    }

    fn get(&self, k: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.start[k], self.start[k + 1]);
        self.idx[s..e].iter().copied().zip(self.val[s..e].iter().copied())
    }
}

/// `B = P L U Q` for an m×m basis whose columns are called slots.
#[derive(Debug, Clone)]
pub struct LuFactors {
    m: usize,
    pivot_row: Vec<usize>,
    pivot_slot: Vec<usize>,
    row_step: Vec<usize>,
    slot_step: Vec<usize>,
    diag: Vec<f64>,
    /// Elimination multipliers by step: `b[k] -= l * b[pivot_row]`.
    l_by_step: Lists,
    /// The same multipliers by target row, holding the step.
    l_by_row: Lists,
    /// Off-diagonal pivot-row entries by step, holding the slot.
    u_by_step: Lists,
    /// The same entries by slot, holding the step.
    u_by_slot: Lists,
}

const THRESHOLD: f64 = 0.1;
const SEARCH: usize = 4;
const ZERO: f64 = 1e-11;

impl LuFactors {
    /// Factorises the basis given as one sparse column per slot.
    pub fn factorize(m: usize, columns: &[Vec<(usize, f64)>]) -> Result<LuFactors, Singular> {
        debug_assert_eq!(columns.len(), m);
        let mut start = Vec::with_capacity(m + 1);
        let (mut idx, mut val) = (Vec::new(), Vec::new());
        start.push(0);
        for col in columns {
            for &(i, v) in col {
                idx.push(i);
                val.push(v);
            }
            start.push(idx.len());
        }
        Self::factorize_csc(m, &start, &idx, &val)
    }

    /// [`factorize`](Self::factorize) with the columns in compressed form.
    /// Column and row singletons are pivoted first; the Markowitz search only
    /// sees what is left.
    pub fn factorize_csc(m: usize, start: &[usize], idx: &[usize], val: &[f64]) -> Result<LuFactors, Singular> {
        let mut rstart = vec![0usize; m + 1];
        for k in 0..start[m] {
            if val[k] != 0.0 {
                rstart[idx[k] + 1] += 1;
            }
        }
        for i in 0..m {
            rstart[i + 1] += rstart[i];
        }
        let mut fill = rstart.clone();
        let mut rcol = vec![0usize; rstart[m]];
        let mut rval = vec![0.0f64; rstart[m]];
        for j in 0..m {
            for k in start[j]..start[j + 1] {
                if val[k] != 0.0 {
                    let i = idx[k];
                    rcol[fill[i]] = j;
                    rval[fill[i]] = val[k];
                    fill[i] += 1;
                }
            }
        }
        let mut ccount: Vec<usize> = (0..m).map(|j| (start[j]..start[j + 1]).filter(|&k| val[k] != 0.0).count()).collect();
        let mut rcount: Vec<usize> = vec![0; m];
        let mut row_done = vec![false; m];
        let mut col_done = vec![false; m];
        let mut pivot_row = Vec::with_capacity(m);
        let mut pivot_slot = Vec::with_capacity(m);
        let mut diag = Vec::with_capacity(m);
        let mut l_pairs: Vec<(usize, usize, f64)> = Vec::new();
        let mut u_pairs: Vec<(usize, usize, f64)> = Vec::new();

        // Column singletons: no elimination, the rest of the row goes to U.
        let mut stack: Vec<usize> = (0..m).filter(|&j| ccount[j] == 1).collect();
        while let Some(j) = stack.pop() {
            if col_done[j] || ccount[j] != 1 {
                continue;
            }
            let Some(k) = (start[j]..start[j + 1]).find(|&k| val[k] != 0.0 && !row_done[idx[k]]) else { continue };
            let (i, v) = (idx[k], val[k]);
            if v.abs() <= ZERO {
                continue;
            }
            let step = pivot_row.len();
            pivot_row.push(i);
            pivot_slot.push(j);
            diag.push(v);
            row_done[i] = true;
            col_done[j] = true;
            for p in rstart[i]..rstart[i + 1] {
                let c = rcol[p];
                if col_done[c] {
                    continue;
                }
                u_pairs.push((step, c, rval[p]));
                ccount[c] -= 1;
                if ccount[c] == 1 {
                    stack.push(c);
                }
            }
        }

        // Row singletons: the pivot row has nothing else, so no fill.
        for i in 0..m {
            if !row_done[i] {
                rcount[i] = (rstart[i]..rstart[i + 1]).filter(|&p| !col_done[rcol[p]]).count();
            }
        }
        let mut stack: Vec<usize> = (0..m).filter(|&i| !row_done[i] && rcount[i] == 1).collect();
        while let Some(i) = stack.pop() {
            if row_done[i] || rcount[i] != 1 {
                continue;
            }
            let Some(p) = (rstart[i]..rstart[i + 1]).find(|&p| !col_done[rcol[p]]) else { continue };
            let (j, v) = (rcol[p], rval[p]);
            let cmax = (start[j]..start[j + 1]).filter(|&k| !row_done[idx[k]]).fold(0.0f64, |a, k| a.max(val[k].abs()));
            if v.abs() <= ZERO || v.abs() < THRESHOLD * cmax {
                continue;
            }
            let step = pivot_row.len();
            pivot_row.push(i);
            pivot_slot.push(j);
            diag.push(v);
            row_done[i] = true;
            col_done[j] = true;
            for k in start[j]..start[j + 1] {
                let r = idx[k];
                if row_done[r] || val[k] == 0.0 {
                    continue;
                }
                l_pairs.push((step, r, val[k] / v));
                rcount[r] -= 1;
                if rcount[r] == 1 {
                    stack.push(r);
                }
            }
        }

        // Nucleus, still holding original values.
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); m];
        for j in 0..m {
            if col_done[j] {
                continue;
            }
            for k in start[j]..start[j + 1] {
                let i = idx[k];
                if !row_done[i] && val[k] != 0.0 {
                    rows[i].push((j, val[k]));
                    cols[j].push(i);
                }
            }
        }
        let mut rcount: Vec<usize> = rows.iter().map(Vec::len).collect();
        let mut ccount: Vec<usize> = cols.iter().map(Vec::len).collect();
        let mut col_heap: BinaryHeap<Reverse<(usize, usize)>> = (0..m).filter(|&j| !col_done[j]).map(|j| Reverse((ccount[j], j))).collect();
        let mut row_heap: BinaryHeap<Reverse<(usize, usize)>> = (0..m).filter(|&i| !row_done[i]).map(|i| Reverse((rcount[i], i))).collect();
        let mut work = vec![0.0f64; m];
        let mut in_row = vec![false; m];

        let value = |rows: &Vec<Vec<(usize, f64)>>, i: usize, j: usize| -> Option<f64> {
            rows[i].iter().find(|&&(c, _)| c == j).map(|&(_, v)| v)
        };

        for step in pivot_row.len()..m {
            // Candidate search: cheapest columns and rows by count.
            let mut best: Option<(usize, usize, f64, usize)> = None;
            let mut popped_cols = Vec::new();
            while let Some(Reverse((c, j))) = col_heap.pop() {
                if col_done[j] || c != ccount[j] {
                    continue;
                }
                let entries: Vec<(usize, f64)> = cols[j]
                    .iter()
                    .filter(|&&i| !row_done[i])
                    .filter_map(|&i| value(&rows, i, j).map(|v| (i, v)))
                    .collect();
                let cmax = entries.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
                if cmax <= ZERO {
                    // Structurally or numerically empty: left for the
                    // singular report.
                    continue;
                }
                popped_cols.push((c, j));
                for &(i, v) in &entries {
                    if v.abs() >= THRESHOLD * cmax {
                        let cost = (rcount[i] - 1) * (c - 1);
                        let better = match best {
                            None => true,
                            Some((_, _, bv, bc)) => cost < bc || (cost == bc && v.abs() > bv.abs()),
                        };
                        if better {
                            best = Some((i, j, v, cost));
                        }
                    }
                }
                if matches!(best, Some((_, _, _, 0))) || popped_cols.len() >= SEARCH {
                    break;
                }
            }
            if !matches!(best, Some((_, _, _, 0))) {
                let mut popped_rows = Vec::new();
                while let Some(Reverse((c, i))) = row_heap.pop() {
                    if row_done[i] || c != rcount[i] {
                        continue;
                    }
                    popped_rows.push((c, i));
                    for &(j, v) in &rows[i] {
                        let cost = (c.max(1) - 1) * (ccount[j] - 1);
                        if best.is_some_and(|(_, _, _, bc)| cost >= bc) {
                            continue;
                        }
                        let cmax = cols[j]
                            .iter()
                            .filter(|&&k| !row_done[k])
                            .filter_map(|&k| value(&rows, k, j))
                            .fold(0.0f64, |a, x| a.max(x.abs()));
                        if cmax > ZERO && v.abs() >= THRESHOLD * cmax {
                            best = Some((i, j, v, cost));
                        }
                    }
                    if matches!(best, Some((_, _, _, 0))) || popped_rows.len() >= SEARCH {
                        break;
                    }
                }
                for (c, i) in popped_rows {
                    row_heap.push(Reverse((c, i)));
                }
            }
            for (c, j) in popped_cols {
                col_heap.push(Reverse((c, j)));
            }

            let Some((p, q, piv, _)) = best else {
                let slots = (0..m).filter(|&j| !col_done[j]).collect();
                let rows = (0..m).filter(|&i| !row_done[i]).collect();
                return Err(Singular { slots, rows });
            };

            // Pivot row goes to U.
            pivot_row.push(p);
            pivot_slot.push(q);
            diag.push(piv);
            row_done[p] = true;
            col_done[q] = true;
            let prow = std::mem::take(&mut rows[p]);
            for &(c, v) in &prow {
                if c != q {
                    u_pairs.push((step, c, v));
                }
                ccount[c] -= 1;
                if !col_done[c] {
                    col_heap.push(Reverse((ccount[c], c)));
                }
            }

            // Eliminate column q from the other active rows.
            let targets: Vec<usize> = cols[q].iter().copied().filter(|&k| !row_done[k]).collect();
            for k in targets {
                let Some(pos) = rows[k].iter().position(|&(c, _)| c == q) else { continue };
                let akq = rows[k].swap_remove(pos).1;
                rcount[k] -= 1;
                let l = akq / piv;
                l_pairs.push((step, k, l));
                if prow.len() > 1 {
                    for &(c, v) in &rows[k] {
                        work[c] = v;
                        in_row[c] = true;
                    }
                    for &(c, v) in &prow {
                        if c == q {
                            continue;
                        }
                        if in_row[c] {
                            work[c] -= l * v;
                        } else {
                            rows[k].push((c, -l * v));
                            cols[c].push(k);
                            ccount[c] += 1;
                            rcount[k] += 1;
                            col_heap.push(Reverse((ccount[c], c)));
                        }
                    }
                    for e in rows[k].iter_mut() {
                        if in_row[e.0] {
                            e.1 = work[e.0];
                            in_row[e.0] = false;
                        }
                    }
                }
                row_heap.push(Reverse((rcount[k], k)));
            }
            rows[p] = prow;
        }

        let mut row_step = vec![0; m];
        let mut slot_step = vec![0; m];
        for s in 0..m {
            row_step[pivot_row[s]] = s;
            slot_step[pivot_slot[s]] = s;
        }
        let l_by_step = Lists::from_pairs(m, &l_pairs);
        let l_by_row = Lists::from_pairs(m, &l_pairs.iter().map(|&(s, k, l)| (k, s, l)).collect::<Vec<_>>());
        let u_by_step = Lists::from_pairs(m, &u_pairs);
        let u_by_slot = Lists::from_pairs(m, &u_pairs.iter().map(|&(s, c, v)| (c, s, v)).collect::<Vec<_>>());
        Ok(LuFactors { m, pivot_row, pivot_slot, row_step, slot_step, diag, l_by_step, l_by_row, u_by_step, u_by_slot })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn nonzeros(&self) -> usize {
        self.m + self.l_by_step.idx.len() + self.u_by_step.idx.len()
    }

    /// Solves `B x = b`. `b` is in row space and is consumed; `x` comes back
    /// in slot space.
    ///
    /// Steps are visited in order through a heap while the vector stays
    /// sparse, and by a plain sweep once it fills in.
    pub fn ftran(&self, b: &mut SparseVec, x: &mut SparseVec, queue: &mut StepQueue) {
        x.clear();
        let limit = self.dense_limit();
        // L phase, ascending steps.
        let l_step = |s: usize, b: &mut SparseVec, queue: &mut StepQueue, sweep: bool| {
            let bp = b.val[self.pivot_row[s]];
            if bp == 0.0 {
                return;
            }
            for (k, l) in self.l_by_step.get(s) {
                b.add(k, -l * bp);
                if !sweep {
                    queue.push(self.row_step[k]);
                }
            }
        };
        queue.reset_min();
        for &i in &b.nz {
            queue.push(self.row_step[i]);
        }
        while let Some(s) = queue.pop() {
            l_step(s, b, queue, false);
            if queue.len() > limit {
                queue.clear();
                for s2 in s + 1..self.m {
                    l_step(s2, b, queue, true);
                }
            }
        }
        // U phase, descending steps.
        let u_step = |s: usize, b: &mut SparseVec, x: &mut SparseVec, queue: &mut StepQueue, sweep: bool| {
            let bp = b.val[self.pivot_row[s]];
            if bp == 0.0 {
                return;
            }
            let v = bp / self.diag[s];
            x.set(self.pivot_slot[s], v);
            for (s2, u) in self.u_by_slot.get(self.pivot_slot[s]) {
                b.add(self.pivot_row[s2], -u * v);
                if !sweep {
                    queue.push(s2);
                }
            }
        };
        queue.reset_max();
        for &i in &b.nz {
            queue.push(self.row_step[i]);
        }
        while let Some(s) = queue.pop() {
            u_step(s, b, x, queue, false);
            if queue.len() > limit {
                queue.clear();
                for s2 in (0..s).rev() {
                    u_step(s2, b, x, queue, true);
                }
            }
        }
        b.clear();
    }

    /// Solves `Bᵀ y = c`. `c` is in slot space and is consumed; `y` comes
    /// back in row space.
    pub fn btran(&self, c: &mut SparseVec, y: &mut SparseVec, queue: &mut StepQueue) {
        y.clear();
        let limit = self.dense_limit();
        // Uᵀ phase, ascending steps; z lands in y by pivot row.
        let ut_step = |s: usize, c: &mut SparseVec, y: &mut SparseVec, queue: &mut StepQueue, sweep: bool| {
            let cj = c.val[self.pivot_slot[s]];
            if cj == 0.0 {
                return;
            }
            let z = cj / self.diag[s];
            y.set(self.pivot_row[s], z);
            for (slot, u) in self.u_by_step.get(s) {
                c.add(slot, -u * z);
                if !sweep {
                    queue.push(self.slot_step[slot]);
                }
            }
        };
        queue.reset_min();
        for &j in &c.nz {
            queue.push(self.slot_step[j]);
        }
        while let Some(s) = queue.pop() {
            ut_step(s, c, y, queue, false);
            if queue.len() > limit {
                queue.clear();
                for s2 in s + 1..self.m {
                    ut_step(s2, c, y, queue, true);
                }
            }
        }
        c.clear();
        // Lᵀ phase, descending steps.
        let lt_step = |s: usize, y: &mut SparseVec, queue: &mut StepQueue, sweep: bool| {
            let k = self.pivot_row[s];
            let yk = y.val[k];
            if yk == 0.0 {
                return;
            }
            for (s2, l) in self.l_by_row.get(k) {
                y.add(self.pivot_row[s2], -l * yk);
                if !sweep {
                    queue.push(s2);
                }
            }
        };
        queue.reset_max();
        for &i in &y.nz {
            queue.push(self.row_step[i]);
        }
        while let Some(s) = queue.pop() {
            lt_step(s, y, queue, false);
            if queue.len() > limit {
                queue.clear();
                for s2 in (0..s).rev() {
                    lt_step(s2, y, queue, true);
                }
            }
        }
    }

    fn dense_limit(&self) -> usize {
        (self.m / 16).max(32)
    }
}

/// Ordered set of steps with membership flags, reused across solves.
#[derive(Debug, Clone)]
pub struct StepQueue {
    heap: BinaryHeap<(i64, usize)>,
    queued: Vec<bool>,
    sign: i64,
}

impl StepQueue {
    pub fn new(m: usize) -> Self {
        StepQueue { heap: BinaryHeap::new(), queued: vec![false; m], sign: -1 }
    }

    fn reset_min(&mut self) {
        self.heap.clear();
        self.sign = -1;
    }

    fn reset_max(&mut self) {
        self.heap.clear();
        self.sign = 1;
    }

    fn push(&mut self, s: usize) {
        if !self.queued[s] {
            self.queued[s] = true;
            self.heap.push((self.sign * s as i64, s));
        }
    }

    fn len(&self) -> usize {
        self.heap.len()
    }

    fn clear(&mut self) {
        for (_, s) in self.heap.drain() {
            self.queued[s] = false;
        }
    }

    fn pop(&mut self) -> Option<usize> {
        let (_, s) = self.heap.pop()?;
        self.queued[s] = false;
        Some(s)
    }
}
