//! Fractional powers of (H + lambda) and (-lap + lambda) via the spectral
//! integral
//!
//!   (y + lambda)^{-s/2} = (sin(s pi/2)/pi) int_0^inf t^{-s/2} (y + lambda + t)^{-1} dt,
//!
//! plus the embedding / Gagliardo-Nirenberg ratio reports built on them.
//! The t-integral uses the substitution t = e^u on u in [-30, 30] with a
//! composite Gauss-Legendre rule and analytic corrections for both tails
//! (without the lower-tail correction the s -> 2 limit loses several digits).

use crate::grid::{GridFunction, RadialGrid};
use crate::operator::{DomainState, OperatorError, PointInteractionOp};
use num_complex::Complex64;
use std::sync::Arc;

const U_CUT: f64 = 30.0;

/// Quadrature for the spectral-shift integral at exponent s in (0, 2).
#[derive(Debug)]
pub struct FracQuadrature {
    pub s: f64,
    /// shift values t_i
    pub nodes: Vec<f64>,
    /// weights including the sin(s pi/2)/pi prefactor and the substitution
    pub weights: Vec<f64>,
    /// coefficient of the identity (upper tail, integrand ~ t^{-s/2 - 1})
    pub upper_tail: f64,
    /// coefficient of the resolvent at t = 0 (lower tail)
    pub lower_tail: f64,
}

impl FracQuadrature {
    pub fn new(s: f64, panels: usize) -> Self {
        assert!(s > 0.0 && s < 2.0, "exponent must lie in (0, 2)");
        let pref = (s * std::f64::consts::FRAC_PI_2).sin() / std::f64::consts::PI;
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (u, w) in crate::special::gauss_legendre(-U_CUT, U_CUT, panels) {
            let t = u.exp();
            nodes.push(t);
            weights.push(pref * w * t.powf(1.0 - s / 2.0));
        }
        // int_{tmax}^inf t^{-s/2-1} dt = (2/s) tmax^{-s/2}
        let upper_tail = pref * (2.0 / s) * (-U_CUT * s / 2.0).exp();
        // int_0^{tmin} t^{-s/2} dt = tmin^{1-s/2} / (1 - s/2)
        let lower_tail = pref * (-U_CUT * (1.0 - s / 2.0)).exp() / (1.0 - s / 2.0);
        FracQuadrature { s, nodes, weights, upper_tail, lower_tail }
    }

    /// Scalar self-test value: quadrature applied to (y + lambda + t)^{-1};
    /// should reproduce (y + lambda)^{-s/2}.
    pub fn scalar_eval(&self, y: f64, lambda: f64) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += w / (y + lambda + t);
        }
        acc + self.upper_tail + self.lower_tail / (y + lambda)
    }

    /// Scalar check for the positive power (y + lambda)^{s'/2} with
    /// s' = 2 - s, realized as (y+lambda) * (y+lambda)^{-s/2}-type integral:
    /// sum w_i (y+lambda)/(y+lambda+t_i) + tails.
    pub fn scalar_eval_positive(&self, y: f64, lambda: f64) -> f64 {
        let mut acc = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * (1.0 - t / (y + lambda + t));
        }
        acc + self.upper_tail * (y + lambda) + self.lower_tail
    }
}

/// (H + lambda)^{-s/2} f at the operator's default gauge.
pub fn frac_resolvent_apply(
    op: &PointInteractionOp,
    f: &GridFunction,
    s: f64,
) -> Result<GridFunction, OperatorError> {
    let quad = FracQuadrature::new(s, 48);
    let mut acc = f.scaled(Complex64::new(quad.upper_tail, 0.0));
    for (t, w) in quad.nodes.iter().zip(&quad.weights) {
        let term = op.krein_resolvent_apply(f, Complex64::new(op.gauge + t, 0.0))?;
        acc = acc.axpy(Complex64::new(*w, 0.0), &op.synthesize(&term));
    }
    let r0 = op.krein_resolvent_apply(f, Complex64::new(op.gauge, 0.0))?;
    Ok(acc.axpy(Complex64::new(quad.lower_tail, 0.0), &op.synthesize(&r0)))
}

/// (-lap + lambda)^{-s/2} f (free version).
pub fn free_frac_apply(
    grid: &Arc<RadialGrid>,
    f: &GridFunction,
    s: f64,
    lambda: f64,
) -> Result<GridFunction, OperatorError> {
    let quad = FracQuadrature::new(s, 48);
    let mut acc = f.scaled(Complex64::new(quad.upper_tail, 0.0));
    for (t, w) in quad.nodes.iter().zip(&quad.weights) {
        let term = grid.free_resolvent_apply(f, Complex64::new(lambda + t, 0.0))?;
        acc = acc.axpy(Complex64::new(*w, 0.0), &term);
    }
    let r0 = grid.free_resolvent_apply(f, Complex64::new(lambda, 0.0))?;
    Ok(acc.axpy(Complex64::new(quad.lower_tail, 0.0), &r0))
}

/// ||psi||_{D^{1/2}} = (Re <psi, (H + lambda) psi>)^{1/2}; clamps tiny
/// negative round-off to zero.
pub fn dhalf_norm(op: &PointInteractionOp, s: &DomainState) -> f64 {
    let psi = op.synthesize(s);
    let hpsi = op.h_apply(s);
    let val = op.grid.inner_product(&psi, &hpsi).re + s.gauge * op.grid.l2_norm(&psi).powi(2);
    if val < 0.0 {
        if val < -1e-10 * op.grid.l2_norm(&psi).powi(2) {
            eprintln!("warning: dhalf_norm clamped a negative value {val:.3e}");
        }
        0.0
    } else {
        val.sqrt()
    }
}

/// ||(-lap + lambda)^{s/2} f|| for s in (0, 1), computed as
/// ||(-lap + lambda) (-lap + lambda)^{-(2-s)/2} f||.
pub fn sobolev_norm(
    grid: &Arc<RadialGrid>,
    f: &GridFunction,
    s: f64,
    lambda: f64,
) -> Result<f64, OperatorError> {
    assert!(s > 0.0 && s < 1.0);
    let half = free_frac_apply(grid, f, 2.0 - s, lambda)?;
    Ok(grid.l2_norm(&grid.laplacian_apply(&half, Complex64::new(lambda, 0.0))))
}

/// ||(H + lambda)^{s/2} psi|| for s in (0, 1), via
/// (H+lambda)(H+lambda+t)^{-1} = I - t (H+lambda+t)^{-1}.
pub fn ds_norm(op: &PointInteractionOp, state: &DomainState, s: f64) -> Result<f64, OperatorError> {
    assert!(s > 0.0 && s < 1.0);
    let quad = FracQuadrature::new(2.0 - s, 48);
    let psi = op.synthesize(state);
    let mut acc = GridFunction::zero(&op.grid);
    for (t, w) in quad.nodes.iter().zip(&quad.weights) {
        let rt = op.krein_resolvent_apply(&psi, Complex64::new(op.gauge + t, 0.0))?;
        let term = psi.axpy(Complex64::new(-t, 0.0), &op.synthesize(&rt));
        acc = acc.axpy(Complex64::new(*w, 0.0), &term);
    }
    // upper tail multiplies (H + lambda) psi, lower tail multiplies psi
    let hl = op.h_apply(state).axpy(Complex64::new(state.gauge, 0.0), &psi);
    acc = acc.axpy(Complex64::new(quad.upper_tail, 0.0), &hl);
    acc = acc.axpy(Complex64::new(quad.lower_tail, 0.0), &psi);
    Ok(op.grid.l2_norm(&acc))
}

/// One row of the inequality report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IneqRow {
    pub q: f64,
    pub s_used: f64,
    /// ||psi||_q / (||psi||^{1-s} dhalf^s)  (Gagliardo-Nirenberg form)
    pub gn_ratio: f64,
    /// ||psi||_q / ||(H+lambda)^{s/2} psi||  (embedding form)
    pub embedding_ratio: f64,
    pub flagged_slow: bool,
}

/// Empirical Gagliardo-Nirenberg / embedding ratios for the requested L^q
/// targets.  Descriptive only: the paper's constants are unquantified.
pub fn inequality_report(
    op: &PointInteractionOp,
    state: &DomainState,
    targets: &[f64],
) -> Result<Vec<IneqRow>, OperatorError> {
    let n = op.dimension() as f64;
    let cap = if op.dimension() == 2 { 1.0 } else { 0.5 };
    let psi = op.synthesize(state);
    let l2 = op.grid.l2_norm(&psi);
    let dh = dhalf_norm(op, state);
    let mut rows = Vec::new();
    for &q in targets {
        if q < 2.0 || (op.dimension() == 3 && q >= 3.0) {
            return Err(OperatorError::OutOfRange { what: "Lebesgue index q", value: q });
        }
        let flagged_slow = op.dimension() == 3 && q > 2.9;
        let s_c = n * (0.5 - 1.0 / q);
        // representative exponent inside [s_c, cap)
        let s_used = if s_c >= cap { s_c } else { 0.5 * (s_c + cap) };
        let lq = op.grid.lp_norm(&psi, q);
        let gn_ratio = if s_used == 0.0 {
            lq / l2
        } else {
            lq / (l2.powf(1.0 - s_used) * dh.powf(s_used))
        };
        let embedding_ratio = if s_used > 0.0 && s_used < 1.0 {
            lq / ds_norm(op, state, s_used)?
        } else {
            lq / l2
        };
        rows.push(IneqRow { q, s_used, gn_ratio, embedding_ratio, flagged_slow });
    }
    Ok(rows)
}
