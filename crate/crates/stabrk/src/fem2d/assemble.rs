//! P1 assembly of the heat equation on a conforming triangulation: stiffness
//! matrix, row-sum lumped mass, homogeneous Dirichlet elimination, and the
//! fast/slow splitting `A = A_F + A_S` with `A_F = D A`.

use std::f64::consts::PI;

use super::mesh::Mesh;
use crate::error::{Error, Result};
use crate::problems::{csr_radius, SplitSystem};
use crate::sparse::Csr;

#[derive(Debug, Clone, Copy)]
pub enum Forcing {
    Zero,
    /// Source and exact solution of `u = sin^2(pi x1) sin^2(pi x2) sin^2(pi t)`.
    Manufactured,
    /// Static Gaussian source centered at `x0`.
    Gaussian { x0: [f64; 2], sigma: f64 },
}

/// Method-of-lines form `y' = A y + g(t)` of the heat equation, with
/// `A = -M^{-1} K` (lumped mass) on the free vertices and the fast/slow row
/// splitting induced by the mesh's fast set.
pub struct DiscreteHeatSystem {
    pub n: usize,
    pub a: Csr,
    pub a_fast: Csr,
    pub a_slow: Csr,
    /// Lumped mass per free vertex.
    pub mass: Vec<f64>,
    /// Row selector: true where the dof belongs to a fast triangle.
    pub fast_dof: Vec<bool>,
    /// Coordinates of the free vertices, dof order.
    pub coords: Vec<[f64; 2]>,
    pub rho_fast: f64,
    pub rho_slow: f64,
    pub rho_full: f64,
    pub forcing: Forcing,
}

fn manufactured_u(p: [f64; 2], t: f64) -> f64 {
    let s1 = (PI * p[0]).sin();
    let s2 = (PI * p[1]).sin();
    let st = (PI * t).sin();
    s1 * s1 * s2 * s2 * st * st
}

fn manufactured_g(p: [f64; 2], t: f64) -> f64 {
    // du/dt - laplace(u) for the product of squared sines
    let s1 = (PI * p[0]).sin().powi(2);
    let s2 = (PI * p[1]).sin().powi(2);
    let st = (PI * t).sin().powi(2);
    let dudt = PI * (2.0 * PI * t).sin() * s1 * s2;
    let lap = 2.0 * PI * PI * st * ((2.0 * PI * p[0]).cos() * s2 + s1 * (2.0 * PI * p[1]).cos());
    dudt - lap
}

impl DiscreteHeatSystem {
    /// Nodal source values at time `t`.
    pub fn load(&self, t: f64, out: &mut [f64]) {
        match self.forcing {
            Forcing::Zero => out.fill(0.0),
            Forcing::Manufactured => {
                for (i, p) in self.coords.iter().enumerate() {
                    out[i] = manufactured_g(*p, t);
                }
            }
            Forcing::Gaussian { x0, sigma } => {
                for (i, p) in self.coords.iter().enumerate() {
                    let r2 = (p[0] - x0[0]).powi(2) + (p[1] - x0[1]).powi(2);
                    out[i] = (-r2 / (2.0 * sigma * sigma)).exp();
                }
            }
        }
    }

    /// Exact nodal solution (manufactured forcing only).
    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        match self.forcing {
            Forcing::Manufactured => {
                Some(self.coords.iter().map(|&p| manufactured_u(p, t)).collect())
            }
            _ => None,
        }
    }

    /// Mass-weighted L2 distance between a state and the exact solution.
    pub fn error_l2(&self, y: &[f64], t: f64) -> Option<f64> {
        let exact = self.exact(t)?;
        let mut acc = 0.0;
        for i in 0..self.n {
            acc += self.mass[i] * (y[i] - exact[i]).powi(2);
        }
        Some(acc.sqrt())
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match self.forcing {
            // manufactured solution vanishes at t = 0
            _ => vec![0.0; self.n],
        }
    }

    /// Packages the system as a split ODE; the source is counted with the
    /// slow part, radii are the cached assembly-time estimates.
    pub fn split_system(self) -> SplitSystem {
        let n = self.n;
        let y0 = self.initial_state();
        let (rho_f, rho_s, rho_a) = (self.rho_fast, self.rho_slow, self.rho_full);
        let a_fast = self.a_fast.clone();
        let sys2 = std::sync::Arc::new(self);
        let sys_slow = sys2.clone();
        let fast = move |_t: f64, y: &[f64], dy: &mut [f64]| a_fast.matvec(y, dy);
        let mut tmp = vec![0.0; n];
        let slow = move |t: f64, y: &[f64], dy: &mut [f64]| {
            sys_slow.a_slow.matvec(y, dy);
            sys_slow.load(t, &mut tmp);
            for i in 0..n {
                dy[i] += tmp[i];
            }
        };
        SplitSystem::new(
            n,
            y0,
            Box::new(fast),
            Box::new(slow),
            Box::new(move |_t, _y: &[f64]| rho_f),
            Box::new(move |_t, _y: &[f64]| rho_s),
        )
        .with_rho_full(Box::new(move |_t, _y: &[f64]| rho_a))
    }
}

/// Assembles the lumped-mass P1 heat operator and its fast/slow splitting.
pub fn assemble_heat(mesh: &Mesh, forcing: Forcing) -> Result<DiscreteHeatSystem> {
    let nv = mesh.vertices.len();
    // dof numbering over free (non-Dirichlet) vertices
    let mut dof = vec![usize::MAX; nv];
    let mut coords = Vec::new();
    for v in 0..nv {
        if !mesh.boundary[v] {
            dof[v] = coords.len();
            coords.push(mesh.vertices[v]);
        }
    }
    let n = coords.len();

    let mut k_trips: Vec<(usize, usize, f64)> = Vec::new();
    let mut mass = vec![0.0; n];
    let mut fast_dof = vec![false; n];
    for (ti, tri) in mesh.triangles.iter().enumerate() {
        let p: Vec<[f64; 2]> = tri.iter().map(|&v| mesh.vertices[v]).collect();
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        if det <= 0.0 {
            return Err(Error::DegenerateTriangle { index: ti });
        }
        let area = 0.5 * det;
        // P1 gradients: grad phi_i = (b_i, c_i)
        let b = [
            (p[1][1] - p[2][1]) / det,
            (p[2][1] - p[0][1]) / det,
            (p[0][1] - p[1][1]) / det,
        ];
        let c = [
            (p[2][0] - p[1][0]) / det,
            (p[0][0] - p[2][0]) / det,
            (p[1][0] - p[0][0]) / det,
        ];
        for i in 0..3 {
            let di = dof[tri[i]];
            if di == usize::MAX {
                continue;
            }
            mass[di] += area / 3.0;
            if mesh.fast[ti] {
                fast_dof[di] = true;
            }
            for l in 0..3 {
                let dl = dof[tri[l]];
                if dl == usize::MAX {
                    continue;
                }
                k_trips.push((di, dl, area * (b[i] * b[l] + c[i] * c[l])));
            }
        }
    }
    let mut a = Csr::from_triplets(n, &k_trips);
    // A = -M^{-1} K
    let inv_neg: Vec<f64> = mass.iter().map(|m| -1.0 / m).collect();
    a.scale_rows(&inv_neg);
    let a_fast = a.mask_rows(&fast_dof);
    let slow_mask: Vec<bool> = fast_dof.iter().map(|f| !f).collect();
    let a_slow = a.mask_rows(&slow_mask);
    let rho_fast = csr_radius(&a_fast);
    let rho_slow = csr_radius(&a_slow);
    let rho_full = csr_radius(&a);
    Ok(DiscreteHeatSystem {
        n,
        a,
        a_fast,
        a_slow,
        mass,
        fast_dof,
        coords,
        rho_fast,
        rho_slow,
        rho_full,
        forcing,
    })
}
