//! Radial grids on R^n (n = 2, 3), quadrature, the finite-difference radial
//! Laplacian and free-resolvent solves.
//!
//! Nodes are graded toward the origin (r_j = R (j/(N+1))^g) so that the 1/r
//! (3D) and log (2D) singularities of the Green functions are resolved.  The
//! 3D operator acts on u = r f (which removes the coordinate singularity);
//! the 2D operator is the finite-volume form of -(1/r)(r f')' with a zero
//! inner flux at the first cell.  Both carry a Dirichlet wall at r = R.

use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid parameter: {0}")]
    BadParameter(String),
    #[error("zero pivot in tridiagonal solve at row {0} (z hits a discrete eigenvalue)")]
    ZeroPivot(usize),
    #[error("grid functions live on different grids")]
    GridMismatch,
}

/// Radial discretization of R^n with quadrature weights for radially
/// symmetric functions: sum w_j f(r_j) ~ int_0^R f(r) c_n r^{n-1} dr.
#[derive(Debug)]
pub struct RadialGrid {
    pub dimension: usize,
    pub radius: f64,
    pub nodes: Vec<f64>,
    /// quadrature weights (used for all integrals and norms)
    pub weights: Vec<f64>,
    /// symmetrizing weights: the FD operator below is exactly symmetric in
    /// the sym-weighted inner product (differs from `weights` only in the
    /// last 3D cell, which carries an extra end correction for quadrature)
    pub sym_weights: Vec<f64>,
    /// discrete delta source at the origin: the solution of (-lap + z)g = s
    /// is the discrete Green function (see the operator module)
    pub source: Vec<f64>,
    // tridiagonal stencil of -lap (3D: acting on u = r f)
    dia: Vec<f64>,
    sub: Vec<f64>,
    sup: Vec<f64>,
}

/// Complex samples on a grid's nodes.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub grid: Arc<RadialGrid>,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(grid: &Arc<RadialGrid>, values: Vec<Complex64>) -> Self {
        assert_eq!(values.len(), grid.nodes.len(), "sample count != node count");
        GridFunction { grid: grid.clone(), values }
    }

    pub fn from_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.nodes.iter().map(|&r| f(r)).collect();
        GridFunction { grid: grid.clone(), values }
    }

    pub fn from_real_fn(grid: &Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |r| Complex64::new(f(r), 0.0))
    }

    pub fn zero(grid: &Arc<RadialGrid>) -> Self {
        GridFunction { grid: grid.clone(), values: vec![Complex64::new(0.0, 0.0); grid.nodes.len()] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// self + c * other
    pub fn axpy(&self, c: Complex64, other: &GridFunction) -> Self {
        GridFunction {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }
}

/// Builds a graded radial grid: r_j = R (j/(N+1))^grading, j = 1..N.
pub fn make_grid(n: usize, radius: f64, size: usize, grading: f64) -> Result<RadialGrid, GridError> {
    if n != 2 && n != 3 {
        return Err(GridError::BadParameter(format!("dimension must be 2 or 3, got {n}")));
    }
    if !(radius > 0.0) {
        return Err(GridError::BadParameter(format!("radius must be positive, got {radius}")));
    }
    if size < 16 {
        return Err(GridError::BadParameter(format!("need at least 16 nodes, got {size}")));
    }
    if !(grading >= 1.0) {
        return Err(GridError::BadParameter(format!("grading must be >= 1, got {grading}")));
    }
    let nn = size;
    let r: Vec<f64> = (1..=nn)
        .map(|j| radius * (j as f64 / (nn as f64 + 1.0)).powf(grading))
        .collect();

    let pi = std::f64::consts::PI;
    let (weights, sym_weights, source, dia, sub, sup);
    if n == 3 {
        // cell spacings with virtual nodes r_0 = 0 and r_{N+1} = R
        let h: Vec<f64> = (0..=nn)
            .map(|j| {
                let lo = if j == 0 { 0.0 } else { r[j - 1] };
                let hi = if j == nn { radius } else { r[j] };
                hi - lo
            })
            .collect();
        let mut d = vec![0.0; nn];
        let mut lo = vec![0.0; nn];
        let mut up = vec![0.0; nn];
        for j in 0..nn {
            let (hm, hp) = (h[j], h[j + 1]);
            d[j] = 2.0 / (hm * hp);
            if j > 0 {
                lo[j] = -2.0 / (hm * (hm + hp));
            }
            if j + 1 < nn {
                up[j] = -2.0 / (hp * (hm + hp));
            }
        }
        let mut ws = vec![0.0; nn];
        for j in 0..nn {
            let rm = if j == 0 { 0.0 } else { r[j - 1] };
            let rp = if j + 1 == nn { radius } else { r[j + 1] };
            ws[j] = 4.0 * pi * r[j] * r[j] * (rp - rm) / 2.0;
        }
        let mut w = ws.clone();
        w[nn - 1] += 4.0 * pi * radius * radius * (radius - r[nn - 1]) / 2.0;
        // source: u(0) = 1/(4 pi) boundary value folded into the first row
        let mut s = vec![0.0; nn];
        s[0] = (1.0 / (4.0 * pi)) * 2.0 / (h[0] * (h[0] + h[1])) / r[0];
        (weights, sym_weights, source, dia, sub, sup) = (w, ws, s, d, lo, up);
    } else {
        // finite volume with faces at cell midpoints, rho_0 = 0, rho_N = R
        let rho: Vec<f64> = (0..=nn)
            .map(|j| {
                if j == 0 {
                    0.0
                } else if j == nn {
                    radius
                } else {
                    (r[j - 1] + r[j]) / 2.0
                }
            })
            .collect();
        let mut d = vec![0.0; nn];
        let mut lo = vec![0.0; nn];
        let mut up = vec![0.0; nn];
        let mut w = vec![0.0; nn];
        for j in 0..nn {
            let cv = (rho[j + 1] * rho[j + 1] - rho[j] * rho[j]) / 2.0;
            w[j] = 2.0 * pi * cv;
            let num_p = if j + 1 < nn {
                rho[j + 1] / (r[j + 1] - r[j])
            } else {
                rho[j + 1] / (radius - r[j])
            };
            let num_m = if j > 0 { rho[j] / (r[j] - r[j - 1]) } else { 0.0 };
            d[j] = (num_p + num_m) / cv;
            if j + 1 < nn {
                up[j] = -num_p / cv;
            }
            if j > 0 {
                lo[j] = -num_m / cv;
            }
        }
        // 2D source: discrete delta, unit mass in the first cell
        let mut s = vec![0.0; nn];
        s[0] = 1.0 / w[0];
        (weights, sym_weights, source, dia, sub, sup) = (w.clone(), w, s, d, lo, up);
    }

    Ok(RadialGrid {
        dimension: n,
        radius,
        nodes: r,
        weights,
        sym_weights,
        source,
        dia,
        sub,
        sup,
    })
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// (-lap + z) f by second-order finite differences (Dirichlet at R).
    pub fn laplacian_apply(&self, f: &GridFunction, z: Complex64) -> GridFunction {
        let nn = self.len();
        assert_eq!(f.len(), nn);
        let g: Vec<Complex64> = if self.dimension == 3 {
            f.values.iter().zip(&self.nodes).map(|(v, &r)| v * r).collect()
        } else {
            f.values.clone()
        };
        let mut out = vec![Complex64::new(0.0, 0.0); nn];
        for j in 0..nn {
            let mut acc = (self.dia[j] + z) * g[j];
            if j > 0 {
                acc += self.sub[j] * g[j - 1];
            }
            if j + 1 < nn {
                acc += self.sup[j] * g[j + 1];
            }
            out[j] = acc;
        }
        if self.dimension == 3 {
            for j in 0..nn {
                out[j] /= self.nodes[j];
            }
        }
        GridFunction { grid: f.grid.clone(), values: out }
    }

    /// Solves (-lap + z) g = f (Thomas algorithm; reports zero pivots).
    pub fn free_resolvent_apply(&self, f: &GridFunction, z: Complex64) -> Result<GridFunction, GridError> {
        let nn = self.len();
        assert_eq!(f.len(), nn);
        let mut rhs: Vec<Complex64> = if self.dimension == 3 {
            f.values.iter().zip(&self.nodes).map(|(v, &r)| v * r).collect()
        } else {
            f.values.clone()
        };
        // forward elimination
        let mut diag: Vec<Complex64> = self.dia.iter().map(|&d| d + z).collect();
        for j in 1..nn {
            let piv = diag[j - 1];
            if piv.norm() < 1e-300 {
                return Err(GridError::ZeroPivot(j - 1));
            }
            let m = self.sub[j] / piv;
            diag[j] -= m * self.sup[j - 1];
            let prev = rhs[j - 1];
            rhs[j] -= m * prev;
        }
        if diag[nn - 1].norm() < 1e-300 {
            return Err(GridError::ZeroPivot(nn - 1));
        }
        // back substitution
        let mut out = vec![Complex64::new(0.0, 0.0); nn];
        out[nn - 1] = rhs[nn - 1] / diag[nn - 1];
        for j in (0..nn - 1).rev() {
            out[j] = (rhs[j] - self.sup[j] * out[j + 1]) / diag[j];
        }
        if self.dimension == 3 {
            for j in 0..nn {
                out[j] /= self.nodes[j];
            }
        }
        Ok(GridFunction { grid: f.grid.clone(), values: out })
    }

    /// L^2 inner product; conjugates the FIRST argument.
    pub fn inner_product(&self, f: &GridFunction, g: &GridFunction) -> Complex64 {
        assert_eq!(f.len(), g.len());
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..f.len() {
            acc += self.weights[j] * f.values[j].conj() * g.values[j];
        }
        acc
    }

    /// Bilinear pairing in the symmetrizing weights, NO conjugation.  The
    /// discrete operator is complex-symmetric in this pairing, which is what
    /// the Krein rank-one term at complex spectral parameter needs.
    pub fn sym_pair(&self, f: &[Complex64], g: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..f.len() {
            acc += self.sym_weights[j] * f[j] * g[j];
        }
        acc
    }

    /// L^p norm by quadrature; p = infinity gives the max over nodes.
    pub fn lp_norm(&self, f: &GridFunction, p: f64) -> f64 {
        assert!(p >= 1.0);
        if p.is_infinite() {
            return f.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        }
        let mut acc = 0.0;
        for j in 0..f.len() {
            acc += self.weights[j] * f.values[j].norm().powf(p);
        }
        acc.powf(1.0 / p)
    }

    pub fn l2_norm(&self, f: &GridFunction) -> f64 {
        let mut acc = 0.0;
        for j in 0..f.len() {
            acc += self.weights[j] * f.values[j].norm_sqr();
        }
        acc.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::bessel_k0;
    use approx::assert_relative_eq;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(make_grid(4, 40.0, 4096, 2.0).is_err());
        assert!(make_grid(3, -1.0, 4096, 2.0).is_err());
        assert!(make_grid(3, 40.0, 8, 2.0).is_err());
    }

    #[test]
    fn nodes_increasing_weights_positive() {
        for n in [2, 3] {
            let g = make_grid(n, 40.0, 256, 2.0).unwrap();
            for j in 1..g.len() {
                assert!(g.nodes[j] > g.nodes[j - 1]);
            }
            assert!(g.nodes[0] > 0.0 && *g.nodes.last().unwrap() <= 40.0);
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
    }

    #[test]
    fn ball_volume_uniform_grid() {
        let g = Arc::new(make_grid(3, 10.0, 16, 1.0).unwrap());
        let one = GridFunction::from_real_fn(&g, |_| 1.0);
        let vol: f64 = g.weights.iter().sum();
        let want = 4.0 / 3.0 * std::f64::consts::PI * 1000.0;
        assert!((vol - want).abs() / want < 0.01);
        assert_relative_eq!(g.l2_norm(&one).powi(2), vol, max_relative = 1e-12);
    }

    #[test]
    fn green_norm_closed_form_3d() {
        // ||G^1||^2 = 1/(8 pi) on the default grid
        let g = Arc::new(make_grid(3, 40.0, 4096, 2.0).unwrap());
        let pi = std::f64::consts::PI;
        let green = GridFunction::from_real_fn(&g, |r| (-r).exp() / (4.0 * pi * r));
        let got = g.l2_norm(&green).powi(2);
        assert_relative_eq!(got, 1.0 / (8.0 * pi), max_relative = 1e-4);
    }

    #[test]
    fn green_norm_closed_form_2d() {
        // ||G^1||^2 = 1/(4 pi)
        let g = Arc::new(make_grid(2, 40.0, 4096, 2.0).unwrap());
        let pi = std::f64::consts::PI;
        let green = GridFunction::from_real_fn(&g, |r| {
            bessel_k0(c(r)).unwrap().re / (2.0 * pi)
        });
        let got = g.l2_norm(&green).powi(2);
        assert_relative_eq!(got, 1.0 / (4.0 * pi), max_relative = 1e-4);
    }

    #[test]
    fn laplacian_on_gaussian_3d() {
        // (-lap + 1) e^{-r^2} = (6 - 4 r^2 + 1) e^{-r^2}
        let g = Arc::new(make_grid(3, 40.0, 4096, 2.0).unwrap());
        let f = GridFunction::from_real_fn(&g, |r| (-r * r).exp());
        let out = g.laplacian_apply(&f, c(1.0));
        let want = GridFunction::from_real_fn(&g, |r| (7.0 - 4.0 * r * r) * (-r * r).exp());
        // weighted L2 error (pointwise rates degrade at the first graded cells)
        let diff = out.axpy(c(-1.0), &want);
        assert!(g.l2_norm(&diff) / g.l2_norm(&want) < 2e-5);
    }

    #[test]
    fn laplacian_zero_is_zero() {
        let g = Arc::new(make_grid(2, 20.0, 128, 2.0).unwrap());
        let z = GridFunction::zero(&g);
        let out = g.laplacian_apply(&z, c(3.0));
        assert!(g.l2_norm(&out) == 0.0);
    }

    #[test]
    fn resolvent_roundtrip_and_refinement() {
        // ||R (L f) - f|| / ||f|| second-order small, halving under N -> 2N
        let mut errs = Vec::new();
        for nn in [2048usize, 4096] {
            let g = Arc::new(make_grid(3, 40.0, nn, 2.0).unwrap());
            let f = GridFunction::from_real_fn(&g, |r| (-r * r).exp());
            let lf = g.laplacian_apply(&f, c(1.0));
            let back = g.free_resolvent_apply(&lf, c(1.0)).unwrap();
            let diff = back.axpy(c(-1.0), &f);
            let sup = diff.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(sup <= 1e-6, "roundtrip sup error {sup}");
            errs.push(g.l2_norm(&diff) / g.l2_norm(&f));
        }
        assert!(errs[1] < errs[0], "no refinement gain: {errs:?}");
    }

    #[test]
    fn resolvent_partial_fraction_identity() {
        // R(1) G^4 = (G^1 - G^4)/3 in 3D
        let g = Arc::new(make_grid(3, 40.0, 4096, 2.0).unwrap());
        let pi = std::f64::consts::PI;
        let gmu = GridFunction::from_real_fn(&g, |r| (-2.0 * r).exp() / (4.0 * pi * r));
        let want = GridFunction::from_real_fn(&g, |r| {
            ((-r).exp() - (-2.0 * r).exp()) / (4.0 * pi * r) / 3.0
        });
        let got = g.free_resolvent_apply(&gmu, c(1.0)).unwrap();
        let diff = got.axpy(c(-1.0), &want);
        assert!(g.l2_norm(&diff) / g.l2_norm(&want) <= 1e-3);
    }

    #[test]
    fn resolvent_complex_shift_roundtrip() {
        let g = Arc::new(make_grid(2, 20.0, 1024, 2.0).unwrap());
        let f = GridFunction::from_real_fn(&g, |r| (-(r / 2.0) * (r / 2.0)).exp());
        let z = Complex64::new(0.0, -2.0);
        let sol = g.free_resolvent_apply(&f, z).unwrap();
        let back = g.laplacian_apply(&sol, z);
        let diff = back.axpy(c(-1.0), &f);
        assert!(g.l2_norm(&diff) / g.l2_norm(&f) < 1e-10);
        let zero = GridFunction::zero(&g);
        let out = g.free_resolvent_apply(&zero, z).unwrap();
        assert!(g.l2_norm(&out) == 0.0);
    }

    #[test]
    fn operator_symmetry() {
        let g = Arc::new(make_grid(3, 20.0, 512, 2.0).unwrap());
        let f = GridFunction::from_real_fn(&g, |r| (-r * r).exp());
        let h = GridFunction::from_real_fn(&g, |r| r * (-(r - 2.0) * (r - 2.0)).exp());
        let lf = g.laplacian_apply(&f, c(1.0));
        let lh = g.laplacian_apply(&h, c(1.0));
        // symmetric in the sym-weighted pairing
        let a = g.sym_pair(&f.values, &lh.values);
        let b = g.sym_pair(&lf.values, &h.values);
        assert!((a - b).norm() <= 1e-8 * g.l2_norm(&f) * g.l2_norm(&h));
        // resolvent symmetry
        let rf = g.free_resolvent_apply(&f, c(1.0)).unwrap();
        let rh = g.free_resolvent_apply(&h, c(1.0)).unwrap();
        let a = g.inner_product(&f, &rh);
        let b = g.inner_product(&rf, &h);
        assert!((a - b).norm() <= 1e-8 * g.l2_norm(&f) * g.l2_norm(&h));
    }

    #[test]
    fn inner_product_conjugates_first_argument() {
        let g = Arc::new(make_grid(2, 20.0, 64, 2.0).unwrap());
        let f = GridFunction::from_fn(&g, |r| Complex64::new(0.0, 1.0) * (-r).exp());
        let ip = g.inner_product(&f, &f);
        assert!(ip.im.abs() < 1e-14 && ip.re > 0.0);
    }

    #[test]
    fn lp_norm_infinity_is_max() {
        let g = Arc::new(make_grid(3, 20.0, 64, 1.0).unwrap());
        let f = GridFunction::from_real_fn(&g, |r| (-(r - 3.0) * (r - 3.0)).exp());
        let m = g.lp_norm(&f, f64::INFINITY);
        assert!(m <= 1.0 && m > 0.9);
    }
}
