//! Faces of the arrangement of tightness hyperplanes inside the shrunk
//! simplex, one representative weight vector per face.
//!
//! Every face has an arrangement vertex in its closure, so faces are found
//! by stepping from each vertex in every sign pattern of the hyperplanes
//! through it. Simplex facets bound the search but do not split faces.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::Result;
use crate::instance::Instance;
use crate::lp::{rank, solve_square, Cmp, Lp};
use crate::market::{tight_graph, ShrunkWeights, TightGraph};
use crate::par;
use crate::rat::{int, one, zero, Rat};

use super::{arrangement_vertices, hyperplanes, Hyperplane};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Face {
    pub weights: ShrunkWeights,
    pub graph: TightGraph,
    /// Sign of `w′_a c_aj − w′_b c_bj` for every hyperplane.
    pub signs: Vec<i8>,
}

fn sign(v: &Rat) -> i8 {
    if v.is_positive() {
        1
    } else if v.is_negative() {
        -1
    } else {
        0
    }
}

fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).fold(zero(), |s, (x, y)| s + x * y)
}

fn patterns(k: usize) -> Vec<Vec<i8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|p| {
                [-1i8, 0, 1].into_iter().map(move |s| {
                    let mut q = p.clone();
                    q.push(s);
                    q
                })
            })
            .collect();
    }
    out
}

/// A direction realising `pattern` on the active hyperplanes and pointing
/// into the simplex at active facets; `None` if the pattern is empty there.
fn direction(
    n: usize,
    active: &[Vec<Rat>],
    facets: &[usize],
    pattern: &[i8],
    simple: bool,
) -> Option<Vec<Rat>> {
    if simple {
        let mut a: Vec<Vec<Rat>> = active.to_vec();
        let mut b: Vec<Rat> = pattern.iter().map(|&s| int(s as i64)).collect();
        for &i in facets {
            let mut e = vec![zero(); n];
            e[i] = one();
            a.push(e);
            b.push(one());
        }
        a.push(vec![one(); n]);
        b.push(zero());
        return solve_square(&a, &b);
    }
    // Variables: e = d + 1 ∈ [0, 2]^n and σ; maximise σ.
    let vars = n + 1;
    let mut lp = Lp::new(vars);
    lp.objective[n] = one();
    let shift = |row: &[Rat]| -> Rat { row.iter().fold(zero(), |s, v| s + v) };
    for (h, &s) in active.iter().zip(pattern) {
        let mut row = h.clone();
        let c = shift(h);
        match s {
            0 => {
                row.push(zero());
                lp.row(row, Cmp::Eq, c);
            }
            1 => {
                row.push(-one());
                lp.row(row, Cmp::Ge, c);
            }
            _ => {
                row.push(one());
                lp.row(row, Cmp::Le, c);
            }
        }
    }
    for &i in facets {
        let mut row = vec![zero(); vars];
        row[i] = one();
        row[n] = -one();
        lp.row(row, Cmp::Ge, one());
    }
    for i in 0..n {
        let mut row = vec![zero(); vars];
        row[i] = one();
        lp.row(row, Cmp::Le, int(2));
    }
    let mut sum = vec![one(); vars];
    sum[n] = zero();
    lp.row(sum, Cmp::Eq, int(n as i64));
    let mut cap = vec![zero(); vars];
    cap[n] = one();
    lp.row(cap, Cmp::Le, one());
    let sol = lp.solve();
    let x = sol.point()?;
    if !x[n].is_positive() && pattern.iter().any(|&s| s != 0) {
        return None;
    }
    Some(x[..n].iter().map(|e| e - one()).collect())
}

/// Enumerates the faces of the tightness arrangement in the shrunk simplex
/// `{w′ : w′_i ≥ τ, Σ w′ = 1}`, ordered by sign vector.
pub fn enumerate_cells(inst: &Instance, tau: &Rat, max_candidates: u64) -> Result<Vec<Face>> {
    inst.require_positive()?;
    let hs = hyperplanes(inst);
    let coeffs: Vec<Vec<Rat>> = hs.iter().map(|h| h.coeffs(inst)).collect();
    let vertices = arrangement_vertices(inst, tau, false, max_candidates)?;
    let per_vertex = par::map(&vertices, |v| faces_at(inst, tau, &hs, &coeffs, v));
    let mut seen = BTreeSet::new();
    let mut faces = Vec::new();
    for (signs, w) in per_vertex.into_iter().flatten() {
        if seen.insert(signs.clone()) {
            faces.push((signs, w));
        }
    }
    faces.sort_by(|a, b| a.0.cmp(&b.0));
    faces
        .into_iter()
        .map(|(signs, w)| {
            let graph = tight_graph(inst, &w);
            let weights = ShrunkWeights::from_shrunk(w, tau.clone())?;
            Ok(Face {
                weights,
                graph,
                signs,
            })
        })
        .collect()
}

fn faces_at(
    inst: &Instance,
    tau: &Rat,
    hs: &[Hyperplane],
    coeffs: &[Vec<Rat>],
    v: &[Rat],
) -> Vec<(Vec<i8>, Vec<Rat>)> {
    let n = inst.n();
    if n == 1 {
        return vec![(Vec::new(), v.to_vec())];
    }
    let values: Vec<Rat> = hs.iter().map(|h| h.eval(inst, v)).collect();
    let active: Vec<usize> = (0..hs.len()).filter(|&k| values[k].is_zero()).collect();
    let facets: Vec<usize> = (0..n).filter(|&i| &v[i] == tau).collect();
    let active_rows: Vec<Vec<Rat>> = active.iter().map(|&k| coeffs[k].clone()).collect();
    let simple = n >= 2 && active.len() + facets.len() == n - 1 && {
        let mut all = active_rows.clone();
        for &i in &facets {
            let mut e = vec![zero(); n];
            e[i] = one();
            all.push(e);
        }
        all.push(vec![one(); n]);
        rank(&all) == n
    };
    let mut out = Vec::new();
    for pattern in patterns(active.len()) {
        let Some(dir) = direction(n, &active_rows, &facets, &pattern, simple) else {
            continue;
        };
        let moving = dir.iter().any(|d| !d.is_zero());
        if !moving && active.is_empty() {
            continue;
        }
        let mut limit = one();
        for (k, val) in values.iter().enumerate() {
            let rate = dot(&coeffs[k], &dir);
            if !val.is_zero() && !rate.is_zero() && sign(val) != sign(&rate) {
                limit = limit.min(-(val / &rate));
            }
        }
        for i in 0..n {
            let slack = &v[i] - tau;
            if dir[i].is_negative() && slack.is_positive() {
                limit = limit.min(slack / -&dir[i]);
            }
        }
        let t = limit / int(2);
        let y: Vec<Rat> = v.iter().zip(&dir).map(|(a, d)| a + &t * d).collect();
        if y.iter().any(|c| c < tau) {
            continue;
        }
        let signs: Vec<i8> = hs.iter().map(|h| sign(&h.eval(inst, &y))).collect();
        out.push((signs, y));
    }
    out
}
