//! Small exact linear programs: dense two-phase simplex with Bland's rule,
//! and Gaussian elimination.

use num_traits::{Signed, Zero};

use crate::rat::{zero, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Eq,
    Ge,
}

/// `maximize objective·x` subject to the rows and `x ≥ 0`.
#[derive(Debug, Clone, Default)]
pub struct Lp {
    pub vars: usize,
    pub rows: Vec<(Vec<Rat>, Cmp, Rat)>,
    pub objective: Vec<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rat>, value: Rat },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn point(&self) -> Option<&[Rat]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }
}

impl Lp {
    pub fn new(vars: usize) -> Self {
        Self {
            vars,
            rows: Vec::new(),
            objective: vec![zero(); vars],
        }
    }

    pub fn row(&mut self, coeffs: Vec<Rat>, cmp: Cmp, rhs: Rat) -> &mut Self {
        debug_assert_eq!(coeffs.len(), self.vars);
        self.rows.push((coeffs, cmp, rhs));
        self
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(&self.objective)
    }
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<Rat>>,
    basis: Vec<usize>,
    cols: usize,
    vars: usize,
    artificial_from: usize,
}

impl Tableau {
    fn build(lp: &Lp) -> Self {
        let rows: Vec<(Vec<Rat>, Cmp, Rat)> = lp
            .rows
            .iter()
            .map(|(a, cmp, b)| {
                if b.is_negative() {
                    let flip = match cmp {
                        Cmp::Le => Cmp::Ge,
                        Cmp::Ge => Cmp::Le,
                        Cmp::Eq => Cmp::Eq,
                    };
                    (a.iter().map(|v| -v).collect(), flip, -b)
                } else {
                    (a.clone(), *cmp, b.clone())
                }
            })
            .collect();
        let slacks = rows.iter().filter(|r| r.1 != Cmp::Eq).count();
        let artificials = rows.iter().filter(|r| r.1 != Cmp::Le).count();
        let artificial_from = lp.vars + slacks;
        let cols = artificial_from + artificials;
        let mut t = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut s, mut a) = (lp.vars, artificial_from);
        for (coeffs, cmp, rhs) in rows {
            let mut row = coeffs;
            row.resize(cols + 1, zero());
            match cmp {
                Cmp::Le => {
                    row[s] = Rat::from_integer(1.into());
                    basis.push(s);
                    s += 1;
                }
                Cmp::Ge => {
                    row[s] = Rat::from_integer((-1).into());
                    s += 1;
                    row[a] = Rat::from_integer(1.into());
                    basis.push(a);
                    a += 1;
                }
                Cmp::Eq => {
                    row[a] = Rat::from_integer(1.into());
                    basis.push(a);
                    a += 1;
                }
            }
            row[cols] = rhs;
            t.push(row);
        }
        Self {
            t,
            basis,
            cols,
            vars: lp.vars,
            artificial_from,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = self.t[r][c].recip();
        for v in self.t[r].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = self.t[r].clone();
        for (k, row) in self.t.iter_mut().enumerate() {
            if k == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *v -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximises `cost` over columns `< limit`. Returns false if unbounded.
    fn optimise(&mut self, cost: &[Rat], limit: usize) -> bool {
        loop {
            let reduced = |c: usize| -> Rat {
                let mut r = cost[c].clone();
                for (row, &b) in self.t.iter().zip(&self.basis) {
                    if !row[c].is_zero() && !cost[b].is_zero() {
                        r -= &cost[b] * &row[c];
                    }
                }
                r
            };
            let Some(enter) = (0..limit).find(|&c| !self.basis.contains(&c) && reduced(c).is_positive())
            else {
                return true;
            };
            let mut leave: Option<(usize, Rat)> = None;
            for (r, row) in self.t.iter().enumerate() {
                if row[enter].is_positive() {
                    let ratio = &row[self.cols] / &row[enter];
                    let better = match &leave {
                        None => true,
                        Some((lr, best)) => {
                            ratio < *best || (ratio == *best && self.basis[r] < self.basis[*lr])
                        }
                    };
                    if better {
                        leave = Some((r, ratio));
                    }
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return false,
            }
        }
    }

    fn run(mut self, objective: &[Rat]) -> LpOutcome {
        if self.cols > self.artificial_from {
            let mut phase1 = vec![zero(); self.cols];
            for c in phase1.iter_mut().skip(self.artificial_from) {
                *c = Rat::from_integer((-1).into());
            }
            self.optimise(&phase1, self.cols);
            let infeasible = self
                .t
                .iter()
                .zip(&self.basis)
                .any(|(row, &b)| b >= self.artificial_from && !row[self.cols].is_zero());
            if infeasible {
                return LpOutcome::Infeasible;
            }
            // Drive zero-valued artificials out of the basis or drop their rows.
            let mut r = 0;
            while r < self.t.len() {
                if self.basis[r] >= self.artificial_from {
                    match (0..self.artificial_from).find(|&c| !self.t[r][c].is_zero()) {
                        Some(c) => {
                            self.pivot(r, c);
                            r += 1;
                        }
                        None => {
                            self.t.remove(r);
                            self.basis.remove(r);
                        }
                    }
                } else {
                    r += 1;
                }
            }
        }
        let mut cost = vec![zero(); self.cols];
        cost[..self.vars].clone_from_slice(objective);
        if !self.optimise(&cost, self.artificial_from) {
            return LpOutcome::Unbounded;
        }
        let mut x = vec![zero(); self.vars];
        for (row, &b) in self.t.iter().zip(&self.basis) {
            if b < self.vars {
                x[b] = row[self.cols].clone();
            }
        }
        let value = x.iter().zip(objective).map(|(a, b)| a * b).fold(zero(), |s, v| s + v);
        LpOutcome::Optimal { x, value }
    }
}

/// Unique solution of the square system `a · x = b`, if `a` is nonsingular.
pub fn solve_square(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let n = a.len();
    let mut m: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(row, v)| {
            let mut r = row.clone();
            r.push(v.clone());
            r
        })
        .collect();
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, p);
        let inv = m[col][col].recip();
        for v in m[col].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = m[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Rank of a matrix.
pub fn rank(a: &[Vec<Rat>]) -> usize {
    let mut m = a.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot_row = m[rank].clone();
        for row in m.iter_mut().skip(rank + 1) {
            if !row[col].is_zero() {
                let f = &row[col] / &pivot_row[col];
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}
