//! Weighted graph-Laplacian Dirichlet solver.
//!
//! Minimizes (1/2) sum_e w_e (f_u - f_v)^2 subject to pinned values, by
//! preconditioned conjugate gradients on the free-node block. This is the
//! single linear kernel behind p=2 energies, effective resistance, IRLS
//! inner steps, and mean exit times.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DirichletSolution {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// Sparse Dirichlet problem over nodes `0..n`.
///
/// `boundary[i] = Some(v)` pins node i to v; free nodes are `None`.
/// `rhs_extra` adds a fixed load vector on free nodes (used by exit times,
/// where the system is L t = mu rather than L t = 0).
pub struct DirichletProblem<'a> {
    pub n: usize,
    pub edges: &'a [(u32, u32, f64)],
    pub boundary: &'a [Option<f64>],
    pub rhs_extra: Option<&'a [f64]>,
}

impl<'a> DirichletProblem<'a> {
    pub fn solve(&self, tol: f64, max_iter: usize, warm_start: Option<&[f64]>) -> Result<DirichletSolution> {
        let n = self.n;
        assert_eq!(self.boundary.len(), n);
        // CSR over all nodes.
        let mut deg = vec![0usize; n];
        for &(u, v, _) in self.edges {
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut off = vec![0usize; n + 1];
        for i in 0..n {
            off[i + 1] = off[i] + deg[i];
        }
        let mut cols = vec![0u32; off[n]];
        let mut wts = vec![0f64; off[n]];
        let mut cursor = off.clone();
        for &(u, v, w) in self.edges {
            cols[cursor[u as usize]] = v;
            wts[cursor[u as usize]] = w;
            cursor[u as usize] += 1;
            cols[cursor[v as usize]] = u;
            wts[cursor[v as usize]] = w;
            cursor[v as usize] += 1;
        }
        let mut diag = vec![0f64; n];
        for i in 0..n {
            for k in off[i]..off[i + 1] {
                diag[i] += wts[k];
            }
        }

        let mut x = vec![0f64; n];
        for i in 0..n {
            x[i] = match self.boundary[i] {
                Some(v) => v,
                None => match warm_start {
                    Some(ws) => ws[i],
                    None => 0.0,
                },
            };
        }

        // b = rhs_extra - L_fb g_b on free nodes; operator is L_ff.
        let is_free: Vec<bool> = self.boundary.iter().map(|b| b.is_none()).collect();
        let apply = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                if !is_free[i] {
                    out[i] = 0.0;
                    continue;
                }
                let mut acc = diag[i] * v[i];
                for k in off[i]..off[i + 1] {
                    let j = cols[k] as usize;
                    if is_free[j] {
                        acc -= wts[k] * v[j];
                    }
                }
                out[i] = acc;
            }
        };

        let mut b = vec![0f64; n];
        for i in 0..n {
            if !is_free[i] {
                continue;
            }
            let mut acc = self.rhs_extra.map_or(0.0, |r| r[i]);
            for k in off[i]..off[i + 1] {
                let j = cols[k] as usize;
                if let Some(g) = self.boundary[j] {
                    acc += wts[k] * g;
                }
            }
            b[i] = acc;
        }

        // PCG with Jacobi preconditioner on the free block.
        let mut x_free: Vec<f64> = (0..n).map(|i| if is_free[i] { x[i] } else { 0.0 }).collect();
        let mut r = vec![0f64; n];
        apply(&x_free, &mut r);
        for i in 0..n {
            r[i] = if is_free[i] { b[i] - r[i] } else { 0.0 };
        }
        let precond = |r: &[f64], z: &mut [f64]| {
            for i in 0..n {
                z[i] = if is_free[i] && diag[i] > 0.0 {
                    r[i] / diag[i]
                } else {
                    0.0
                };
            }
        };
        let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let mut z = vec![0f64; n];
        precond(&r, &mut z);
        let mut p = z.clone();
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let mut ap = vec![0f64; n];
        let mut iterations = 0;
        let mut resid = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        while resid > tol && iterations < max_iter {
            apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                if is_free[i] {
                    x_free[i] += alpha * p[i];
                    r[i] -= alpha * ap[i];
                }
            }
            precond(&r, &mut z);
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                if is_free[i] {
                    p[i] = z[i] + beta * p[i];
                }
            }
            iterations += 1;
            resid = r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm;
        }
        for i in 0..n {
            if is_free[i] {
                x[i] = x_free[i];
            }
        }
        Ok(DirichletSolution {
            values: x,
            iterations,
            residual: resid,
            converged: resid <= tol,
        })
    }
}

/// (1/2) sum over directed pairs = sum over undirected edges of w |df|^p.
pub fn weighted_p_energy(values: &[f64], edges: &[(u32, u32, f64)], p: f64) -> f64 {
    edges
        .iter()
        .map(|&(u, v, w)| {
            let d = (values[u as usize] - values[v as usize]).abs();
            if d == 0.0 {
                0.0
            } else {
                w * d.powf(p)
            }
        })
        .sum()
}

/// Dirichlet form with unit exponent weights (p = 2 case).
pub fn quadratic_energy(values: &[f64], edges: &[(u32, u32, f64)]) -> f64 {
    edges
        .iter()
        .map(|&(u, v, w)| {
            let d = values[u as usize] - values[v as usize];
            w * d * d
        })
        .sum()
}

pub fn solve_or_error(
    n: usize,
    edges: &[(u32, u32, f64)],
    boundary: &[Option<f64>],
    tol: f64,
    max_iter: usize,
) -> Result<DirichletSolution> {
    let sol = DirichletProblem {
        n,
        edges,
        boundary,
        rhs_extra: None,
    }
    .solve(tol, max_iter, None)?;
    if !sol.converged {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    Ok(sol)
}
