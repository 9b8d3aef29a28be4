//! Finite-difference gradients and Hessians on a [`PolarGrid`].
//!
//! Derivatives are taken in the mapped coordinates `(s, φ)` and pulled back
//! through the discrete Jacobian of the node positions, so that affine
//! functions are differentiated exactly on every grid. The angular stencils
//! are fitted to be exact on `1, cos φ, sin φ`; radial stencils are second
//! order, one-sided on the boundary ring. The ring next to the center uses
//! the node across the center (`(−s, φ) ≡ (s, φ + π)`) as its inner neighbor.
//!
//! Every output is linear in the sampled values, so each node stores its
//! neighbor list with the gradient and Hessian weight of every neighbor. The
//! solver reuses these weights to assemble its Jacobian.

use rayon::prelude::*;

use crate::domain::PolarGrid;

/// Radial offsets and weights of one stencil.
type Offsets = Vec<(isize, f64)>;

/// Gradient and Hessian weights for one node; the Hessian is packed as
/// `[xx, xy, yy]`.
#[derive(Debug, Clone, Default)]
pub struct NodeStencil {
    pub neighbors: Vec<usize>,
    pub grad: Vec<[f64; 2]>,
    pub hess: Vec<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Derivs {
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct Differentiator {
    stencils: Vec<NodeStencil>,
}

// indices into the mapped-derivative weight array
const S: usize = 0;
const P: usize = 1;
const SS: usize = 2;
const SP: usize = 3;
const PP: usize = 4;

impl Differentiator {
    pub fn new(grid: &PolarGrid) -> Self {
        let n_r = grid.n_r() as isize;
        let n_phi = grid.n_phi() as isize;
        let ds = grid.ds();
        let h = grid.dphi();
        let d1p = 1.0 / (2.0 * h.sin());
        let d2p = 1.0 / (2.0 * (1.0 - h.cos()));
        let node = |ring: isize, k: isize| -> usize {
            let (ring, k) = if ring < 0 { (-ring - 1, k + n_phi / 2) } else { (ring, k) };
            (ring * n_phi + k.rem_euclid(n_phi)) as usize
        };
        let phi_d1 = [(-1isize, -d1p), (1, d1p)];
        let phi_d2 = [(-1isize, d2p), (0, -2.0 * d2p), (1, d2p)];
        let points = grid.points();

        let stencils = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (j, k) = grid.ring_and_angle(idx);
                let (j, k) = (j as isize, k as isize);
                let (s_d1, s_d2): (Offsets, Offsets) = if j == n_r - 1 {
                    let c1 = 1.0 / (6.0 * ds);
                    let c2 = 1.0 / (12.0 * ds * ds);
                    (
                        vec![(0, 11.0 * c1), (-1, -18.0 * c1), (-2, 9.0 * c1), (-3, -2.0 * c1)],
                        vec![(0, 35.0 * c2), (-1, -104.0 * c2), (-2, 114.0 * c2), (-3, -56.0 * c2), (-4, 11.0 * c2)],
                    )
                } else if j < n_r - 2 {
                    // fourth order in s: the pull-back divides u_s and u_sφ by
                    // s, which would cost an order next to the center
                    let c = 1.0 / (12.0 * ds);
                    (
                        vec![(-2, c), (-1, -8.0 * c), (1, 8.0 * c), (2, -c)],
                        vec![(-1, 1.0 / (ds * ds)), (0, -2.0 / (ds * ds)), (1, 1.0 / (ds * ds))],
                    )
                } else {
                    let c = 1.0 / (12.0 * ds);
                    (
                        vec![(-3, -c), (-2, 6.0 * c), (-1, -18.0 * c), (0, 10.0 * c), (1, 3.0 * c)],
                        vec![(-1, 1.0 / (ds * ds)), (0, -2.0 / (ds * ds)), (1, 1.0 / (ds * ds))],
                    )
                };

                let mut acc: Vec<(usize, [f64; 5])> = Vec::with_capacity(16);
                let mut add = |q: usize, slot: usize, c: f64| {
                    if let Some(e) = acc.iter_mut().find(|e| e.0 == q) {
                        e.1[slot] += c;
                    } else {
                        let mut w = [0.0; 5];
                        w[slot] = c;
                        acc.push((q, w));
                    }
                };
                for &(o, c) in &s_d1 {
                    add(node(j + o, k), S, c);
                }
                for &(o, c) in &s_d2 {
                    add(node(j + o, k), SS, c);
                }
                for &(o, c) in &phi_d1 {
                    add(node(j, k + o), P, c);
                }
                for &(o, c) in &phi_d2 {
                    add(node(j, k + o), PP, c);
                }
                for &(os, cs) in &s_d1 {
                    for &(op, cp) in &phi_d1 {
                        add(node(j + os, k + op), SP, cs * cp);
                    }
                }

                // discrete map derivatives X_a for each of the five operators
                let mut x = [[0.0f64; 2]; 5];
                for (q, w) in &acc {
                    for a in 0..5 {
                        x[a][0] += w[a] * points[*q][0];
                        x[a][1] += w[a] * points[*q][1];
                    }
                }
                // J = [[x1_s, x1_φ], [x2_s, x2_φ]]
                let (j11, j12, j21, j22) = (x[S][0], x[P][0], x[S][1], x[P][1]);
                let det = j11 * j22 - j12 * j21;
                // inv[a][i]: row a = mapped coordinate, column i = physical
                let inv = [[j22 / det, -j12 / det], [-j21 / det, j11 / det]];

                let mut st = NodeStencil {
                    neighbors: Vec::with_capacity(acc.len()),
                    grad: Vec::with_capacity(acc.len()),
                    hess: Vec::with_capacity(acc.len()),
                };
                for (q, w) in &acc {
                    let g = [inv[S][0] * w[S] + inv[P][0] * w[P], inv[S][1] * w[S] + inv[P][1] * w[P]];
                    // mapped Hessian corrected by the map curvature
                    let m_ss = w[SS] - x[SS][0] * g[0] - x[SS][1] * g[1];
                    let m_sp = w[SP] - x[SP][0] * g[0] - x[SP][1] * g[1];
                    let m_pp = w[PP] - x[PP][0] * g[0] - x[PP][1] * g[1];
                    let m = [[m_ss, m_sp], [m_sp, m_pp]];
                    let hij = |i: usize, jj: usize| -> f64 {
                        let mut v = 0.0;
                        for a in 0..2 {
                            for b in 0..2 {
                                v += inv[a][i] * m[a][b] * inv[b][jj];
                            }
                        }
                        v
                    };
                    st.neighbors.push(*q);
                    st.grad.push(g);
                    st.hess.push([hij(0, 0), hij(0, 1), hij(1, 1)]);
                }
                st
            })
            .collect();
        Self { stencils }
    }

    pub fn stencil(&self, idx: usize) -> &NodeStencil {
        &self.stencils[idx]
    }

    pub fn len(&self) -> usize {
        self.stencils.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stencils.is_empty()
    }

    pub fn derivs_at(&self, u: &[f64], idx: usize) -> Derivs {
        let st = &self.stencils[idx];
        let mut d = Derivs::default();
        for (m, &q) in st.neighbors.iter().enumerate() {
            let v = u[q];
            d.grad[0] += st.grad[m][0] * v;
            d.grad[1] += st.grad[m][1] * v;
            d.hess[0] += st.hess[m][0] * v;
            d.hess[1] += st.hess[m][1] * v;
            d.hess[2] += st.hess[m][2] * v;
        }
        d
    }

    pub fn derivs(&self, u: &[f64]) -> Vec<Derivs> {
        assert_eq!(u.len(), self.stencils.len());
        (0..u.len()).into_par_iter().map(|i| self.derivs_at(u, i)).collect()
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<[f64; 2]> {
        self.derivs(u).into_iter().map(|d| d.grad).collect()
    }
}
