//! The point-interaction Hamiltonian H_alpha: Green functions, the boundary
//! coefficient Lambda, eigenpairs, the Krein resolvent, and domain-state
//! algebra.
//!
//! States in D(H_alpha) are stored as psi = phi + q G, with the singular
//! profile G taken to be the DISCRETE Green function G^d (the grid solution
//! of (-lap + lambda) G^d = s for the grid's delta source).  With that
//! choice the resolvent family R(z) = R0(z) + Lambda_d(z) |G^d_z><G^d_zbar|
//! is exactly the resolvent of a symmetric matrix, so Crank-Nicolson steps
//! built from it are unitary to machine precision and the boundary condition
//! q = Lambda_d phi(r_1) closes exactly along trajectories.  Lambda_d is
//! anchored to the continuum coefficient at the gauge point (a Nevanlinna
//! anchor), so everything converges to the paper's operator under grid
//! refinement.

use crate::grid::{GridError, GridFunction, RadialGrid};
use crate::special::{bessel_k0, EULER_GAMMA};
use num_complex::Complex64;
use std::sync::Arc;
use thiserror::Error;

const PI: f64 = std::f64::consts::PI;
/// tolerance on Lambda's denominator before reporting a pole
const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("spectral parameter {0} lies on the branch cut (-inf, 0]")]
    OnBranchCut(Complex64),
    #[error("Lambda denominator {0:e} within pole tolerance")]
    NearPole(f64),
    #[error("gauge {gauge} not admissible (requires > {min})")]
    BadGauge { gauge: f64, min: f64 },
    #[error("{what} {value} outside the admissible range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Cached eigenpair (present iff n = 2, or n = 3 with alpha < 0).
#[derive(Debug)]
pub struct BoundState {
    pub energy: f64,
    /// closed-form eigenfunction samples
    pub psi: GridFunction,
    /// quadrature norm squared of `psi`
    pub norm_sq: f64,
}

/// A state psi = phi + q G^lambda in D(H_alpha), stored as the gauge, the
/// regular-part samples, and the charge.
#[derive(Debug, Clone)]
pub struct DomainState {
    pub gauge: f64,
    pub phi: GridFunction,
    pub q: Complex64,
}

impl DomainState {
    pub fn scaled(&self, c: Complex64) -> Self {
        DomainState { gauge: self.gauge, phi: self.phi.scaled(c), q: self.q * c }
    }

    /// self + c * other (same gauge required: combinations at one gauge stay
    /// in the domain)
    pub fn axpy(&self, c: Complex64, other: &DomainState) -> Self {
        assert_eq!(self.gauge, other.gauge, "cannot combine states at different gauges");
        DomainState {
            gauge: self.gauge,
            phi: self.phi.axpy(c, &other.phi),
            q: self.q + c * other.q,
        }
    }
}

/// The discretized H_alpha.
#[derive(Debug)]
pub struct PointInteractionOp {
    pub alpha: f64,
    /// default gauge lambda_0 (> |E_alpha| with headroom)
    pub gauge: f64,
    pub grid: Arc<RadialGrid>,
    pub bound: Option<BoundState>,
    /// relative boundary-condition tolerance for diagnostics
    pub tol_bc: f64,
    /// discrete Green function at the default gauge
    gd0: Vec<Complex64>,
    /// <s, G^d_{lambda0}> in the symmetrizing pairing
    q0: Complex64,
    /// continuum 1/Lambda at the default gauge (the Nevanlinna anchor)
    lam_inv0: f64,
}

/// Principal square root with the cut on (-inf, 0]; rejects z on the cut.
fn sqrt_off_cut(z: Complex64) -> Result<Complex64, OperatorError> {
    if z.im == 0.0 && z.re <= 0.0 {
        return Err(OperatorError::OnBranchCut(z));
    }
    Ok(z.sqrt())
}

/// The boundary coefficient Lambda_alpha(z), principal branch Re sqrt(z) > 0.
pub fn lambda_coeff(n: usize, alpha: f64, z: Complex64) -> Result<Complex64, OperatorError> {
    let sz = sqrt_off_cut(z)?;
    let den = if n == 3 {
        alpha + sz / (4.0 * PI)
    } else {
        alpha + (EULER_GAMMA + (sz / 2.0).ln()) / (2.0 * PI)
    };
    if den.norm() < POLE_TOL {
        return Err(OperatorError::NearPole(den.norm()));
    }
    Ok(1.0 / den)
}

/// Eigenvalue of H_alpha when the point spectrum is non-empty.
pub fn bound_energy(n: usize, alpha: f64) -> Option<f64> {
    if n == 3 {
        if alpha >= 0.0 {
            None // no point spectrum
        } else {
            Some(-(4.0 * PI * alpha).powi(2))
        }
    } else {
        Some(-4.0 * (-2.0 * (2.0 * PI * alpha + EULER_GAMMA)).exp())
    }
}

/// Samples of the eigenfunction psi_alpha (None iff n = 3, alpha >= 0).
pub fn bound_state(n: usize, alpha: f64, grid: &Arc<RadialGrid>) -> Option<(f64, GridFunction)> {
    let e = bound_energy(n, alpha)?;
    let kappa = (-e).sqrt();
    let psi = if n == 3 {
        // e^{4 pi alpha r}/(4 pi r) with 4 pi alpha = -kappa
        GridFunction::from_real_fn(grid, |r| (-kappa * r).exp() / (4.0 * PI * r))
    } else {
        GridFunction::from_real_fn(grid, |r| {
            bessel_k0(Complex64::new(kappa * r, 0.0)).unwrap().re / (2.0 * PI)
        })
    };
    Some((e, psi))
}

/// Samples of the continuum Green function G_z at the grid nodes.
pub fn green_sample(grid: &Arc<RadialGrid>, z: Complex64, n: usize) -> Result<GridFunction, OperatorError> {
    let sz = sqrt_off_cut(z)?;
    let values: Result<Vec<Complex64>, OperatorError> = grid
        .nodes
        .iter()
        .map(|&r| {
            if n == 3 {
                Ok((-sz * r).exp() / (4.0 * PI * r))
            } else {
                Ok(bessel_k0(sz * r).map_err(|_| OperatorError::OnBranchCut(z))? / (2.0 * PI))
            }
        })
        .collect();
    Ok(GridFunction::new(grid, values?))
}

/// Quadratic least-squares extrapolation of a regular function to r = 0
/// from the first `m` nodes (default 4).
pub fn phi_at_zero(f: &GridFunction) -> Complex64 {
    let m = 4.min(f.len());
    let scale = f.grid.nodes[m - 1];
    // normal equations for c0 + c1 x + c2 x^2, x = r/scale
    let mut a = [[0.0f64; 3]; 3];
    let mut b = [Complex64::new(0.0, 0.0); 3];
    for j in 0..m {
        let x = f.grid.nodes[j] / scale;
        let basis = [1.0, x, x * x];
        for (i, bi) in basis.iter().enumerate() {
            for (k, bk) in basis.iter().enumerate() {
                a[i][k] += bi * bk;
            }
            b[i] += *bi * f.values[j];
        }
    }
    // Gaussian elimination on the 3x3 system
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= m * a[col][k];
            }
            let prev = b[col];
            b[row] -= m * prev;
        }
    }
    for col in (0..3).rev() {
        for k in col + 1..3 {
            let prev = b[k];
            b[col] -= a[col][k] * prev;
        }
        b[col] /= a[col][col];
    }
    b[0]
}

impl PointInteractionOp {
    pub fn new(grid: Arc<RadialGrid>, alpha: f64, gauge: Option<f64>) -> Result<Self, OperatorError> {
        let n = grid.dimension;
        let bound = bound_state(n, alpha, &grid).map(|(e, psi)| {
            let norm_sq = grid.l2_norm(&psi).powi(2);
            BoundState { energy: e, psi, norm_sq }
        });
        let e_abs = bound.as_ref().map(|b| -b.energy).unwrap_or(0.0);
        let gauge = gauge.unwrap_or_else(|| 1.0f64.max(2.0 * e_abs));
        if gauge <= e_abs || gauge <= 0.0 {
            return Err(OperatorError::BadGauge { gauge, min: e_abs });
        }
        let lam0 = lambda_coeff(n, alpha, Complex64::new(gauge, 0.0))?;
        let lam_inv0 = (1.0 / lam0).re;
        let source = GridFunction::new(
            &grid,
            grid.source.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
        );
        let gd0 = grid.free_resolvent_apply(&source, Complex64::new(gauge, 0.0))?;
        let q0 = grid.sym_pair(&source.values, &gd0.values);
        Ok(PointInteractionOp {
            alpha,
            gauge,
            bound,
            tol_bc: 1e-6,
            gd0: gd0.values,
            q0,
            lam_inv0,
            grid,
        })
    }

    pub fn dimension(&self) -> usize {
        self.grid.dimension
    }

    fn source_fn(&self) -> GridFunction {
        GridFunction::new(
            &self.grid,
            self.grid.source.iter().map(|&s| Complex64::new(s, 0.0)).collect(),
        )
    }

    /// Discrete Green function at spectral parameter z together with the
    /// discrete boundary coefficient Lambda_d(z) (Nevanlinna-anchored at the
    /// default gauge: Lambda_d(z)^{-1} = Lambda(l0)^{-1} + <s,G^d_{l0}> - <s,G^d_z>).
    pub fn discrete_green(&self, z: Complex64) -> Result<(Complex64, GridFunction), OperatorError> {
        sqrt_off_cut(z)?;
        let gdz = self.grid.free_resolvent_apply(&self.source_fn(), z)?;
        let qz = self.grid.sym_pair(&self.source_fn().values, &gdz.values);
        let den = self.lam_inv0 + self.q0 - qz;
        if den.norm() < POLE_TOL {
            return Err(OperatorError::NearPole(den.norm()));
        }
        Ok((1.0 / den, gdz))
    }

    /// Discrete Green function at the default gauge.
    pub fn gd0(&self) -> GridFunction {
        GridFunction::new(&self.grid, self.gd0.clone())
    }

    /// Krein resolvent: (H + z)^{-1} f = R0(z) f + Lambda_d(z) <G_zbar| f> G_z.
    /// The rank-one pairing carries NO conjugation (|G_z><G_zbar| convention).
    /// Output is a DomainState at the default gauge.
    pub fn krein_resolvent_apply(&self, f: &GridFunction, z: Complex64) -> Result<DomainState, OperatorError> {
        let (lam, gdz) = self.discrete_green(z)?;
        let r0f = self.grid.free_resolvent_apply(f, z)?;
        let q = lam * self.grid.sym_pair(&gdz.values, &f.values);
        // phi at the default gauge: R0(z) f + q (G^d_z - G^d_{lambda0})
        let mut phi = r0f.values;
        for j in 0..phi.len() {
            phi[j] += q * (gdz.values[j] - self.gd0[j]);
        }
        Ok(DomainState { gauge: self.gauge, phi: GridFunction::new(&self.grid, phi), q })
    }

    /// Pointwise assembly psi = phi + q G^d at the state's gauge.
    pub fn synthesize(&self, s: &DomainState) -> GridFunction {
        let gd = if s.gauge == self.gauge {
            None
        } else {
            Some(
                self.grid
                    .free_resolvent_apply(&self.source_fn(), Complex64::new(s.gauge, 0.0))
                    .expect("gauge resolvent"),
            )
        };
        let gd = gd.as_ref().map(|g| &g.values[..]).unwrap_or(&self.gd0);
        let values = s
            .phi
            .values
            .iter()
            .zip(gd)
            .map(|(p, g)| p + s.q * g)
            .collect();
        GridFunction::new(&self.grid, values)
    }

    /// Relative boundary-condition residual |q - Lambda phi(0)| / (|q| + |Lambda phi(0)| + eps).
    pub fn bc_residual(&self, s: &DomainState) -> f64 {
        let lam = match lambda_coeff(self.dimension(), self.alpha, Complex64::new(s.gauge, 0.0)) {
            Ok(l) => l,
            Err(_) => return f64::INFINITY,
        };
        let target = lam * phi_at_zero(&s.phi);
        (s.q - target).norm() / (s.q.norm() + target.norm() + 1e-30)
    }

    /// H_alpha psi = (-lap + lambda) phi - lambda psi.  The singular part is
    /// never differentiated.
    pub fn h_apply(&self, s: &DomainState) -> GridFunction {
        let res = self.bc_residual(s);
        if res > 10.0 * self.tol_bc {
            eprintln!("warning: h_apply on state with bc residual {res:.3e}");
        }
        let lam = Complex64::new(s.gauge, 0.0);
        let lphi = self.grid.laplacian_apply(&s.phi, lam);
        let psi = self.synthesize(s);
        lphi.axpy(-lam, &psi)
    }

    /// Gauge change: phi^mu = phi^lambda + q (G^lambda - G^mu), same charge.
    /// Uses discrete Green differences, so synthesize is preserved exactly.
    pub fn rebase(&self, s: &DomainState, mu: f64) -> Result<DomainState, OperatorError> {
        let e_abs = self.bound.as_ref().map(|b| -b.energy).unwrap_or(0.0);
        if mu <= e_abs || mu <= 0.0 {
            return Err(OperatorError::BadGauge { gauge: mu, min: e_abs });
        }
        if mu == s.gauge {
            return Ok(s.clone());
        }
        let src = self.source_fn();
        let gd_old = if s.gauge == self.gauge {
            self.gd0()
        } else {
            self.grid.free_resolvent_apply(&src, Complex64::new(s.gauge, 0.0))?
        };
        let gd_new = if mu == self.gauge {
            self.gd0()
        } else {
            self.grid.free_resolvent_apply(&src, Complex64::new(mu, 0.0))?
        };
        let values = s
            .phi
            .values
            .iter()
            .zip(gd_old.values.iter().zip(&gd_new.values))
            .map(|(p, (go, gn))| p + s.q * (go - gn))
            .collect();
        Ok(DomainState { gauge: mu, phi: GridFunction::new(&self.grid, values), q: s.q })
    }

    /// Projection onto the absolutely continuous subspace:
    /// P_ac f = f - <psi_a, f> psi_a / ||psi_a||^2; identity with no bound state.
    pub fn pac_project(&self, f: &GridFunction) -> GridFunction {
        match &self.bound {
            None => f.clone(),
            Some(b) => {
                let c = self.grid.inner_product(&b.psi, f) / b.norm_sq;
                f.axpy(-c, &b.psi)
            }
        }
    }

    /// The eigenpair as a DomainState: q = 1 and phi = G^{|E|} - G^{lambda0}
    /// from the closed forms (psi_alpha = G^{|E_alpha|} in both dimensions).
    pub fn bound_domain_state(&self) -> Option<DomainState> {
        let b = self.bound.as_ref()?;
        let kappa = (-b.energy).sqrt();
        let sl = self.gauge.sqrt();
        let n = self.dimension();
        let phi = GridFunction::from_fn(&self.grid, |r| {
            if n == 3 {
                Complex64::new(((-kappa * r).exp() - (-sl * r).exp()) / (4.0 * PI * r), 0.0)
            } else {
                (bessel_k0(Complex64::new(kappa * r, 0.0)).unwrap()
                    - bessel_k0(Complex64::new(sl * r, 0.0)).unwrap())
                    / (2.0 * PI)
            }
        });
        Some(DomainState { gauge: self.gauge, phi, q: Complex64::new(1.0, 0.0) })
    }
}
