//! Jonker-Volgenant linear assignment for dense `n x m` cost matrices, `n <= m`.
//!
//! Square problems run the three classic phases: column reduction with
//! reduction transfer, two rounds of augmenting row reduction, and shortest
//! augmenting paths. Rectangular problems start from zero column duals, which
//! keeps every unassigned column's dual at zero, and skip column reduction.
//!
//! At termination, with `u_i = c(i, x_i) - v(x_i)`, every reduced cost
//! `c(i, j) - u_i - v_j` is non-negative and zero on assigned pairs.

// The scan loops grow `todo` while iterating a range fixed at entry.
#![allow(clippy::mut_range_bound, clippy::needless_range_loop)]

use crate::error::{Error, Result};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;

/// Dense row-major cost matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> CostMatrix<T> {
    /// Requires `rows <= cols` and finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidCost(format!(
                "expected {} entries for {rows}x{cols}, got {}",
                rows * cols,
                data.len()
            )));
        }
        if rows > cols {
            return Err(Error::InvalidCost(format!(
                "more rows ({rows}) than columns ({cols})"
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidCost(format!(
                "non-finite cost at ({}, {})",
                k / cols,
                k % cols
            )));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LapSolution<T> {
    /// Column assigned to each row.
    pub row_to_col: Vec<usize>,
    pub total_cost: T,
    pub row_duals: Vec<T>,
    pub col_duals: Vec<T>,
}

impl<T: Scalar> LapSolution<T> {
    /// Smallest reduced cost over all pairs and largest |reduced cost| over
    /// assigned pairs.
    pub fn duality_slack(&self, cost: &CostMatrix<T>) -> (T, T) {
        let mut min_reduced = T::infinity();
        let mut max_assigned = T::zero();
        for i in 0..cost.rows {
            for j in 0..cost.cols {
                let r = cost.get(i, j) - self.row_duals[i] - self.col_duals[j];
                min_reduced = min_reduced.min(r);
                if self.row_to_col[i] == j {
                    max_assigned = max_assigned.max(r.abs());
                }
            }
        }
        (min_reduced, max_assigned)
    }
}

/// Minimum-cost injective assignment of rows to columns.
pub fn solve_lap<T: Scalar>(cost: &CostMatrix<T>) -> Result<LapSolution<T>> {
    let (n, m) = (cost.rows, cost.cols);
    if n > m {
        return Err(Error::InvalidCost("more rows than columns".into()));
    }
    let mut solver = Solver {
        cost,
        row_col: vec![NONE; n],
        col_row: vec![NONE; m],
        v: vec![T::zero(); m],
    };
    if n > 0 {
        let mut free = if n == m {
            solver.column_reduction()
        } else {
            (0..n).collect()
        };
        for _ in 0..2 {
            if free.is_empty() {
                break;
            }
            free = solver.augmenting_row_reduction(free);
        }
        for &i in &free {
            solver.augment(i);
        }
    }
    let Solver { row_col, v, .. } = solver;
    let row_duals: Vec<T> = (0..n)
        .map(|i| cost.get(i, row_col[i]) - v[row_col[i]])
        .collect();
    let total_cost = (0..n).map(|i| cost.get(i, row_col[i])).sum();
    Ok(LapSolution {
        row_to_col: row_col,
        total_cost,
        row_duals,
        col_duals: v,
    })
}

struct Solver<'a, T> {
    cost: &'a CostMatrix<T>,
    row_col: Vec<usize>,
    col_row: Vec<usize>,
    v: Vec<T>,
}

impl<T: Scalar> Solver<'_, T> {
    /// Column reduction and reduction transfer (square case only). Returns free rows.
    fn column_reduction(&mut self) -> Vec<usize> {
        let n = self.cost.rows;
        let mut unique = vec![true; n];
        for j in (0..n).rev() {
            let mut min = self.cost.get(0, j);
            let mut imin = 0;
            for i in 1..n {
                let c = self.cost.get(i, j);
                if c < min {
                    min = c;
                    imin = i;
                }
            }
            self.v[j] = min;
            if self.row_col[imin] == NONE {
                self.row_col[imin] = j;
                self.col_row[j] = imin;
            } else {
                unique[imin] = false;
            }
        }
        let mut free = Vec::new();
        for i in 0..n {
            if self.row_col[i] == NONE {
                free.push(i);
            } else if unique[i] && n > 1 {
                let j1 = self.row_col[i];
                let row = self.cost.row(i);
                let mut min = T::infinity();
                for (j, &c) in row.iter().enumerate() {
                    if j != j1 {
                        min = min.min(c - self.v[j]);
                    }
                }
                self.v[j1] -= min;
            }
        }
        free
    }

    /// Auction-like pass over free rows. Returns rows still free afterwards.
    fn augmenting_row_reduction(&mut self, mut free: Vec<usize>) -> Vec<usize> {
        let m = self.cost.cols;
        let mut current = 0;
        let mut next_free = 0;
        let mut steps = 0usize;
        while current < free.len() {
            let i = free[current];
            current += 1;
            steps += 1;

            let row = self.cost.row(i);
            let (mut u1, mut j1) = (row[0] - self.v[0], 0);
            let (mut u2, mut j2) = (T::infinity(), NONE);
            for j in 1..m {
                let h = row[j] - self.v[j];
                if h < u2 {
                    if h >= u1 {
                        u2 = h;
                        j2 = j;
                    } else {
                        u2 = u1;
                        j2 = j1;
                        u1 = h;
                        j1 = j;
                    }
                }
            }

            let mut i0 = self.col_row[j1];
            let lowered = j2 != NONE && u1 < u2;
            if steps < current * m {
                if lowered {
                    self.v[j1] -= u2 - u1;
                } else if i0 != NONE && j2 != NONE {
                    j1 = j2;
                    i0 = self.col_row[j1];
                }
                if i0 != NONE {
                    if lowered {
                        current -= 1;
                        free[current] = i0;
                    } else {
                        free[next_free] = i0;
                        next_free += 1;
                    }
                }
            } else if i0 != NONE {
                free[next_free] = i0;
                next_free += 1;
            }

            if i0 != NONE {
                self.row_col[i0] = NONE;
            }
            self.row_col[i] = j1;
            self.col_row[j1] = i;
        }
        free.truncate(next_free);
        free
    }

    /// Dijkstra-style shortest augmenting path from free row `start`.
    fn augment(&mut self, start: usize) {
        let m = self.cost.cols;
        let mut cols: Vec<usize> = (0..m).collect();
        let row = self.cost.row(start);
        let mut dist: Vec<T> = (0..m).map(|j| row[j] - self.v[j]).collect();
        let mut pred = vec![start; m];

        // cols[..scanned]: finalized and scanned; cols[scanned..todo]: at the
        // current minimum, awaiting scan; cols[todo..]: unreached.
        let mut scanned = 0;
        let mut todo = 0;
        let mut min = T::zero();
        let sink = 'search: loop {
            if scanned == todo {
                // Pull every column at the new minimum distance into the todo set.
                min = dist[cols[todo]];
                for k in todo..m {
                    let j = cols[k];
                    let d = dist[j];
                    if d <= min {
                        if d < min {
                            todo = scanned;
                            min = d;
                        }
                        cols.swap(k, todo);
                        todo += 1;
                    }
                }
                for &j in &cols[scanned..todo] {
                    if self.col_row[j] == NONE {
                        break 'search j;
                    }
                }
            }
            let j1 = cols[scanned];
            scanned += 1;
            let i = self.col_row[j1];
            let r = self.cost.row(i);
            let h = r[j1] - self.v[j1] - min;
            for k in todo..m {
                let j = cols[k];
                let reduced = r[j] - self.v[j] - h;
                if reduced < dist[j] {
                    dist[j] = reduced;
                    pred[j] = i;
                    if reduced == min {
                        if self.col_row[j] == NONE {
                            break 'search j;
                        }
                        cols.swap(k, todo);
                        todo += 1;
                    }
                }
            }
        };

        for &j in &cols[..scanned] {
            self.v[j] += dist[j] - min;
        }

        let mut j = sink;
        loop {
            let i = pred[j];
            self.col_row[j] = i;
            let prev = std::mem::replace(&mut self.row_col[i], j);
            if i == start {
                break;
            }
            j = prev;
        }
    }
}
