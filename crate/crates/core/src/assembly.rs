//! Grid, sparse storage and assembly of the linear system.
//!
//! Unknowns are the interior nodes `l1 + i h`, `i in {1..N-1}^d`, numbered
//! with the first axis varying fastest. The matrix is `A = s C` and the right
//! side `b = s (f_h - sum_{boundary p} C_p g)`, where `s` is the scheme's
//! orientation.
//!
//! Each link coefficient is computed exactly once, by the lower-numbered
//! endpoint, and written into both rows. This makes `A` bitwise symmetric.
//! Coordinates are derived from integer half-indices so the midpoint of a link
//! does not depend on which endpoint computes it.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fields::Problem;
use crate::scheme::{offsets, Scheme, SchemeEvaluator};
use crate::stencil_nd::canonical;

/// Runs independent per-index work. Implementations must return results in
/// index order so that assembled values do not depend on scheduling.
pub trait Executor: Sync {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T>;

    /// `out[i] = f(i)` for every `i`.
    fn fill(&self, out: &mut [f64], f: &(dyn Fn(usize) -> f64 + Sync)) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    /// Seconds since an arbitrary epoch; `0.0` when no clock is available.
    fn now(&self) -> f64 {
        0.0
    }
}

/// Single-threaded executor without a clock.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        (0..n).map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub dim: usize,
    /// Number of cells per axis.
    pub n: usize,
    pub l1: f64,
    pub l2: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, l1: f64, l2: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Usage(format!(
                "grid needs at least 2 cells per axis, got {n}"
            )));
        }
        if dim == 0 {
            return Err(Error::Usage("grid dimension must be positive".into()));
        }
        if !(l1 < l2) {
            return Err(Error::Usage(format!("invalid interval ({l1}, {l2})")));
        }
        let total = (n - 1)
            .checked_pow(dim as u32)
            .filter(|&t| t <= u32::MAX as usize);
        if total.is_none() {
            return Err(Error::Usage("grid too large".into()));
        }
        Ok(Self { dim, n, l1, l2 })
    }

    pub fn for_problem(problem: &Problem, n: usize) -> Result<Self> {
        Self::new(problem.dim, n, problem.l1, problem.l2)
    }

    pub fn h(&self) -> f64 {
        (self.l2 - self.l1) / self.n as f64
    }

    /// Interior nodes per axis.
    pub fn m(&self) -> usize {
        self.n - 1
    }

    pub fn unknowns(&self) -> usize {
        self.m().pow(self.dim as u32)
    }

    /// Coordinate of half-index `k`, i.e. of the point `l1 + k h / 2`.
    pub fn half_coord(&self, k: i64) -> f64 {
        self.l1 + k as f64 * (self.l2 - self.l1) / (2 * self.n) as f64
    }

    /// Grid indices (each in `1..N-1`) of unknown `r`.
    pub fn node(&self, mut r: usize) -> Vec<i64> {
        let m = self.m();
        (0..self.dim)
            .map(|_| {
                let i = r % m;
                r /= m;
                i as i64 + 1
            })
            .collect()
    }

    /// Unknown number of interior grid indices, or `None` on the boundary.
    pub fn index(&self, node: &[i64]) -> Option<usize> {
        let m = self.m() as i64;
        let mut r = 0usize;
        for &i in node.iter().rev() {
            if i < 1 || i > m {
                return None;
            }
            r = r * m as usize + (i - 1) as usize;
        }
        Some(r)
    }

    pub fn point(&self, node: &[i64]) -> Vec<f64> {
        node.iter().map(|&i| self.half_coord(2 * i)).collect()
    }

    /// All nodes, boundary included.
    pub fn all_points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        let side = self.n + 1;
        (0..side.pow(self.dim as u32)).map(move |mut c| {
            (0..self.dim)
                .map(|_| {
                    let i = c % side;
                    c /= side;
                    self.half_coord(2 * i as i64)
                })
                .collect()
        })
    }
}

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<u32>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&(j as u32)) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn row_dot(&self, i: usize, x: &[f64]) -> f64 {
        let (cols, vals) = self.row(i);
        cols.iter().zip(vals).map(|(&c, v)| v * x[c as usize]).sum()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(i, x);
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// First `(i, j)` with `A_ij` and `A_ji` differing in any bit.
    pub fn asymmetry(&self) -> Option<(usize, usize)> {
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, v) in cols.iter().zip(vals) {
                if self.get(j as usize, i).to_bits() != v.to_bits() {
                    return Some((i, j as usize));
                }
            }
        }
        None
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .map(|i| {
                let (cols, _) = self.row(i);
                cols.iter()
                    .map(|&j| (j as usize).abs_diff(i))
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0)
    }
}

/// Assembled system `A u = b` together with its grid and scheme.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub grid: Grid,
    pub scheme: Scheme,
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
}

struct NodeData {
    forward: Vec<f64>,
    boundary: Vec<(usize, f64, f64)>,
    rhs: f64,
}

fn is_forward(p: &[i8]) -> bool {
    p.iter().rev().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Assembles the system on one thread.
pub fn assemble(problem: &Problem, scheme: Scheme, grid: &Grid) -> Result<LinearSystem> {
    assemble_with(problem, scheme, grid, &Sequential)
}

/// Assembles the system, running per-node work through `exec`.
pub fn assemble_with<E: Executor>(
    problem: &Problem,
    scheme: Scheme,
    grid: &Grid,
    exec: &E,
) -> Result<LinearSystem> {
    if grid.dim != problem.dim {
        return Err(Error::Usage("grid and problem dimensions differ".into()));
    }
    let ev = SchemeEvaluator::new(scheme, problem, grid.h())?;
    ev.validate_points(&mut grid.all_points())?;
    let dim = grid.dim;
    let offs: Vec<Vec<i8>> = offsets(dim)
        .into_iter()
        .filter(|p| p.iter().any(|&x| x != 0))
        .collect();
    let structural: Vec<bool> = offs.iter().map(|p| ev.link_is_structural(p)).collect();
    // Position of each offset among the forward ones, and of its negation.
    let mut fwd_slot = vec![usize::MAX; offs.len()];
    let mut nf = 0;
    for (k, p) in offs.iter().enumerate() {
        if is_forward(p) {
            fwd_slot[k] = nf;
            nf += 1;
        }
    }
    let neg: Vec<usize> = offs
        .iter()
        .map(|p| {
            let q: Vec<i8> = p.iter().map(|x| -x).collect();
            offs.iter()
                .position(|r| *r == q)
                .expect("offset set is symmetric")
        })
        .collect();

    let n_unknowns = grid.unknowns();
    let node_work = |r: usize| -> Result<NodeData> {
        let node = grid.node(r);
        let mut forward = vec![0.0; nf];
        let mut boundary = Vec::new();
        let mut mid = vec![0.0; dim];
        let mut q = vec![0i64; dim];
        for (k, p) in offs.iter().enumerate() {
            if !structural[k] {
                continue;
            }
            for ax in 0..dim {
                q[ax] = node[ax] + p[ax] as i64;
            }
            let interior = grid.index(&q).is_some();
            if interior && !is_forward(p) {
                continue;
            }
            for ax in 0..dim {
                mid[ax] = grid.half_coord(2 * node[ax] + p[ax] as i64);
            }
            let c = ev.link(&canonical(p), &mid)?;
            if interior {
                forward[fwd_slot[k]] = c;
            } else {
                let g = problem.boundary_value(&grid.point(&q))?;
                boundary.push((k, c, g));
            }
        }
        let rhs = ev.rhs(&grid.point(&node))?;
        Ok(NodeData {
            forward,
            boundary,
            rhs,
        })
    };
    let nodes: Vec<NodeData> = exec
        .map(n_unknowns, &node_work)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let s = scheme.orientation();
    let rows: Vec<(Vec<(u32, f64)>, f64)> = exec.map(n_unknowns, &|r: usize| {
        let node = grid.node(r);
        let data = &nodes[r];
        let mut entries = Vec::with_capacity(offs.len() + 1);
        let mut q = vec![0i64; dim];
        let mut sum = 0.0;
        let mut bsum = 0.0;
        let mut bi = 0;
        for (k, p) in offs.iter().enumerate() {
            if !structural[k] {
                continue;
            }
            for ax in 0..dim {
                q[ax] = node[ax] + p[ax] as i64;
            }
            match grid.index(&q) {
                Some(col) => {
                    let c = if is_forward(p) {
                        data.forward[fwd_slot[k]]
                    } else {
                        nodes[col].forward[fwd_slot[neg[k]]]
                    };
                    sum += c;
                    entries.push((col as u32, s * c));
                }
                None => {
                    let (kk, c, g) = data.boundary[bi];
                    debug_assert_eq!(kk, k);
                    bi += 1;
                    sum += c;
                    bsum += c * g;
                }
            }
        }
        entries.push((r as u32, -s * sum));
        entries.sort_unstable_by_key(|e| e.0);
        (entries, s * (data.rhs - bsum))
    });

    let mut row_ptr = Vec::with_capacity(n_unknowns + 1);
    row_ptr.push(0);
    let nnz: usize = rows.iter().map(|r| r.0.len()).sum();
    let mut col_idx = Vec::with_capacity(nnz);
    let mut values = Vec::with_capacity(nnz);
    let mut rhs = Vec::with_capacity(n_unknowns);
    for (entries, b) in rows {
        for (c, v) in entries {
            col_idx.push(c);
            values.push(v);
        }
        row_ptr.push(col_idx.len());
        rhs.push(b);
    }
    Ok(LinearSystem {
        grid: *grid,
        scheme,
        matrix: CsrMatrix {
            n: n_unknowns,
            row_ptr,
            col_idx,
            values,
        },
        rhs,
    })
}

/// Dirichlet values at every boundary node, as `(point, g)`.
pub fn dirichlet_values(problem: &Problem, grid: &Grid) -> Result<Vec<(Vec<f64>, f64)>> {
    let side = grid.n as i64 + 1;
    let mut out = Vec::new();
    for c in 0..side.pow(grid.dim as u32) {
        let mut rest = c;
        let node: Vec<i64> = (0..grid.dim)
            .map(|_| {
                let i = rest % side;
                rest /= side;
                i
            })
            .collect();
        if grid.index(&node).is_none() {
            let x = grid.point(&node);
            let g = problem.boundary_value(&x)?;
            out.push((x, g));
        }
    }
    Ok(out)
}

/// Exact solution sampled at the unknowns.
pub fn exact_on_grid(problem: &Problem, grid: &Grid) -> Result<Vec<f64>> {
    let u = problem
        .exact
        .as_ref()
        .ok_or_else(|| Error::Validation(String::from("problem has no exact solution")))?;
    (0..grid.unknowns())
        .map(|r| u.evaluate(&grid.point(&grid.node(r))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{builtin_problem, direct_problem, manufactured_problem};

    #[test]
    fn node_numbering() {
        let g = Grid::new(2, 4, 0.0, 1.0).unwrap();
        assert_eq!(g.unknowns(), 9);
        assert_eq!(g.node(1), vec![2, 1]);
        assert_eq!(g.index(&[2, 1]), Some(1));
        assert_eq!(g.index(&[0, 1]), None);
        assert_eq!(g.point(&[2, 1]), vec![0.5, 0.25]);
    }

    #[test]
    fn single_unknown_1d() {
        let p = direct_problem("t", 1, 0.0, 1.0, "1", "1", "0").unwrap();
        let g = Grid::new(1, 2, 0.0, 1.0).unwrap();
        for m in [2, 4] {
            let sys = assemble(&p, Scheme::OneD(m), &g).unwrap();
            let u = sys.rhs[0] / sys.matrix.values[0];
            assert!((u - 0.125).abs() < 1e-15, "order {m}: {u}");
        }
    }

    #[test]
    fn single_unknown_2d_bilinear() {
        let p = manufactured_problem("t", 2, 0.0, 1.0, "1", "x*y").unwrap();
        let g = Grid::new(2, 2, 0.0, 1.0).unwrap();
        for s in [Scheme::TwoDO4, Scheme::AnyDO4, Scheme::TwoDO6] {
            let sys = assemble(&p, s, &g).unwrap();
            let u = sys.rhs[0] / sys.matrix.values[0];
            assert!((u - 0.25).abs() < 1e-15, "{s}: {u}");
        }
    }

    #[test]
    fn bitwise_symmetry() {
        let p = builtin_problem("example3").unwrap();
        let g = Grid::new(3, 5, -1.0, 1.0).unwrap();
        let sys = assemble(&p, Scheme::ThreeDO4, &g).unwrap();
        assert_eq!(sys.matrix.asymmetry(), None);
        assert_eq!(sys.matrix.nnz(), 27 * 8 + 18 * 24 + 12 * 24 + 8 * 8);
    }
}
