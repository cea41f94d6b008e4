//! Assembly and solution of `(M + τ S) x = b` for the semi-implicit steps.
//!
//! `M` is the lumped (mixed Voronoi) mass and `S` the cotangent stiffness,
//! `(S x)_i = ½ Σ_j (cot α_ij + cot β_ij)(x_i − x_j)`. Pinned vertices keep
//! their position; their columns are moved to the right-hand side so the
//! system stays symmetric positive definite.

use crate::error::{Error, Result};
use crate::geometry::{FaceCotangents, Mesh, Vec3};

pub(crate) struct SystemMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SystemMatrix {
    /// `M + tau·S` restricted to free vertices; pinned rows become identity.
    pub fn assemble(
        mesh: &Mesh,
        cots: &[FaceCotangents],
        mass: &[f64],
        tau: f64,
        pinned: &[bool],
    ) -> Self {
        let topo = mesh.topology();
        let n = mesh.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for v in 0..n {
            cols.push(v);
            if !pinned[v] {
                cols.extend(topo.neighbors(v).iter().copied().filter(|&w| !pinned[w]));
            }
            row_ptr.push(cols.len());
        }
        let mut vals = vec![0.0; cols.len()];
        let position = |row: usize, col: usize, cols: &[usize], row_ptr: &[usize]| {
            let range = row_ptr[row]..row_ptr[row + 1];
            // diagonal first, then sorted neighbors
            if cols[range.start] == col {
                Some(range.start)
            } else {
                cols[range.start + 1..range.end]
                    .binary_search(&col)
                    .ok()
                    .map(|k| range.start + 1 + k)
            }
        };
        for v in 0..n {
            vals[row_ptr[v]] = if pinned[v] { 1.0 } else { mass[v] };
        }
        for (tri, fc) in mesh.faces().iter().zip(cots) {
            for k in 0..3 {
                let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let w = 0.5 * tau * fc.cot[k];
                if !pinned[i] {
                    vals[row_ptr[i]] += w;
                    if let Some(p) = position(i, j, &cols, &row_ptr) {
                        vals[p] -= w;
                    }
                }
                if !pinned[j] {
                    vals[row_ptr[j]] += w;
                    if let Some(p) = position(j, i, &cols, &row_ptr) {
                        vals[p] -= w;
                    }
                }
            }
        }
        let diag = (0..n).map(|v| vals[row_ptr[v]]).collect();
        Self {
            row_ptr,
            cols,
            vals,
            diag,
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    /// Jacobi-preconditioned conjugate gradients from the initial guess `x`.
    pub fn solve(&self, b: &[f64], x: &mut [f64]) -> Result<usize> {
        let n = b.len();
        if self.diag.iter().any(|&d| !(d > 0.0)) {
            return Err(Error::StepRejected("system matrix has a non-positive diagonal".into()));
        }
        let mut r = vec![0.0; n];
        self.apply(x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        const TOL: f64 = 1e-13;
        for iter in 0..10 * n.max(100) {
            let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if r_norm <= TOL * b_norm {
                return Ok(iter);
            }
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if !(pap > 0.0) {
                return Err(Error::StepRejected("system matrix is not positive definite".into()));
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        Err(Error::StepRejected("conjugate gradients did not converge".into()))
    }

    /// Right-hand side for pinned vertices: their rows fix the value, and
    /// the coupling of free rows to them moves to the right-hand side.
    pub fn solve_positions(
        &self,
        mesh: &Mesh,
        cots: &[FaceCotangents],
        tau: f64,
        rhs: &[Vec3],
        pinned: &[bool],
    ) -> Result<Vec<Vec3>> {
        let n = mesh.len();
        let mut out = vec![Vec3::zeros(); n];
        for axis in 0..3 {
            let mut b: Vec<f64> = rhs.iter().map(|v| v[axis]).collect();
            for v in 0..n {
                if pinned[v] {
                    b[v] = mesh.vertices[v][axis];
                }
            }
            for (tri, fc) in mesh.faces().iter().zip(cots) {
                for k in 0..3 {
                    let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                    let w = 0.5 * tau * fc.cot[k];
                    if !pinned[i] && pinned[j] {
                        b[i] += w * mesh.vertices[j][axis];
                    }
                    if !pinned[j] && pinned[i] {
                        b[j] += w * mesh.vertices[i][axis];
                    }
                }
            }
            let mut x: Vec<f64> = mesh.vertices.iter().map(|v| v[axis]).collect();
            self.solve(&b, &mut x)?;
            for v in 0..n {
                out[v][axis] = x[v];
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_icosphere, face_cotangents, mixed_areas};

    #[test]
    fn cg_solves_assembled_system() {
        let mesh = build_icosphere(1.0, Vec3::zeros(), 2).unwrap();
        let cots = face_cotangents(&mesh).unwrap();
        let mass = mixed_areas(&mesh, &cots);
        let pinned = vec![false; mesh.len()];
        let a = SystemMatrix::assemble(&mesh, &cots, &mass, 0.05, &pinned);
        let b: Vec<f64> = (0..mesh.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut x = vec![0.0; mesh.len()];
        a.solve(&b, &mut x).unwrap();
        let mut ax = vec![0.0; mesh.len()];
        a.apply(&x, &mut ax);
        for (l, r) in ax.iter().zip(&b) {
            assert!((l - r).abs() < 1e-11);
        }
    }

    #[test]
    fn stiffness_rows_sum_to_mass() {
        // S annihilates constants, so (M + τS)·1 = M·1
        let mesh = build_icosphere(1.0, Vec3::zeros(), 1).unwrap();
        let cots = face_cotangents(&mesh).unwrap();
        let mass = mixed_areas(&mesh, &cots);
        let a = SystemMatrix::assemble(&mesh, &cots, &mass, 0.3, &vec![false; mesh.len()]);
        let ones = vec![1.0; mesh.len()];
        let mut y = vec![0.0; mesh.len()];
        a.apply(&ones, &mut y);
        for (yi, mi) in y.iter().zip(&mass) {
            assert!((yi - mi).abs() < 1e-14);
        }
    }
}
