//! Null-space projection algorithm. Stream 1 is confined to the null space
//! of the direct Bob and Eve links, so it reaches the users only through the
//! IRS; stream 2 is confined to the null space of the Alice-IRS and
//! Alice-Eve links, so only Bob hears it, over the direct path.
//!
//! `w1` is updated by Dinkelbach iterations whose parametric subproblems are
//! convexified by linearizing the numerator and solved with a dual bisection.
//! `w2` is a quadratic maximization over a projected ball. The phases
//! minimize a ratio of two quadratic forms on the unit torus through a
//! bisection on the ratio value with majorize-minimize inner steps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, hermitian_eigenvalues, hermitian_part, identity, inv_hpd, nullspace_projector,
    quad_form, CMat, CVec, ONE,
};
use crate::model::{ChannelSet, SystemConfig};
use crate::rates::{zero_phase, PhaseBlocks, Precoders, SignalModel};

/// Ridge added to every dual-bisection system.
pub const QCQP_RIDGE: f64 = 1e-10;
/// Upper limit of the multiplier search.
pub const QCQP_LAMBDA_MAX: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NspOptions {
    pub max_outer: usize,
    /// Stop threshold on `|w^H A w - nu w^H B w|`.
    pub dinkelbach_tol: f64,
    pub max_dinkelbach: usize,
    /// Linearization steps per Dinkelbach iteration.
    pub max_ccp: usize,
    /// Stop threshold on the objective gain of the `w2` ascent.
    pub w2_tol: f64,
    pub max_w2_iters: usize,
    /// Stop threshold on `|phi(mu)|`.
    pub mu_tol: f64,
    /// Stop threshold on the bisection interval width.
    pub mu_width: f64,
    pub max_bisect: usize,
    /// Stop threshold on the decrease of the majorized objective.
    pub mm_tol: f64,
    pub max_mm_iters: usize,
}

impl Default for NspOptions {
    fn default() -> Self {
        NspOptions {
            max_outer: 50,
            dinkelbach_tol: 1e-8,
            max_dinkelbach: 500,
            max_ccp: 200,
            w2_tol: 1e-8,
            max_w2_iters: 5000,
            mu_tol: 1e-6,
            mu_width: 1e-9,
            max_bisect: 100,
            mm_tol: 1e-9,
            max_mm_iters: 5000,
        }
    }
}

impl NspOptions {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("max_outer", self.max_outer),
            ("max_dinkelbach", self.max_dinkelbach),
            ("max_ccp", self.max_ccp),
            ("max_w2_iters", self.max_w2_iters),
            ("max_bisect", self.max_bisect),
            ("max_mm_iters", self.max_mm_iters),
        ];
        for (k, v) in counts {
            if v == 0 {
                return Err(Error::config(k, "must be positive"));
            }
        }
        let tols = [
            ("dinkelbach_tol", self.dinkelbach_tol),
            ("w2_tol", self.w2_tol),
            ("mu_tol", self.mu_tol),
            ("mu_width", self.mu_width),
            ("mm_tol", self.mm_tol),
        ];
        for (k, v) in tols {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(k, "must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NspState {
    #[serde(with = "crate::rates::cvec_serde")]
    pub w1: CVec,
    #[serde(with = "crate::rates::cvec_serde")]
    pub w2: CVec,
    pub prec: Precoders,
    pub rs_trace: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Largest final `|w^H A1 w - nu w^H B1 w|` over all `w1` updates.
    pub dinkelbach_residual: f64,
}

impl NspState {
    pub fn secrecy_rate(&self) -> f64 {
        self.rs_trace.last().copied().unwrap_or(0.0)
    }
}

fn stack(a: &CMat, b: &CMat) -> CMat {
    let mut s = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    s.rows_mut(0, a.nrows()).copy_from(a);
    s.rows_mut(a.nrows(), b.nrows()).copy_from(b);
    s
}

fn projector_of(h: &CMat) -> Result<CMat> {
    let n = h.ncols();
    let (p, rank) = nullspace_projector(h);
    if rank >= n {
        return Err(Error::EmptyNullSpace { rank });
    }
    Ok(p)
}

/// `P1` nulls `[H_AB^H; H_AE^H]`, `P2` nulls `[H_AI; H_AE^H]`.
pub fn ns_projectors(ch: &ChannelSet) -> Result<(CMat, CMat)> {
    let h_ae_h = ch.h_ae.adjoint();
    let p1 = projector_of(&stack(&ch.h_ab.adjoint(), &h_ae_h))?;
    let p2 = projector_of(&stack(&ch.h_ai, &h_ae_h))?;
    Ok((p1, p2))
}

/// Maximizes `2 Re(b^H w) - w^H a w` subject to `w^H q w <= 1` for PSD `a`
/// and a projector `q`, by bisection on the multiplier of the constraint.
pub fn dual_qcqp_solve(a: &CMat, b: &CVec, q: &CMat) -> Result<CVec> {
    QcqpSolver::new(a, q).solve(b)
}

/// [`dual_qcqp_solve`] prepared for one `(a, q)` pair and many right-hand
/// sides. When `a` lives on `range(q)` the KKT system decouples in the
/// eigenbasis of `a` restricted to that range and every multiplier trial
/// costs `O(N)`; otherwise each trial refactors the full system.
#[derive(Debug, Clone)]
pub struct QcqpSolver {
    a: CMat,
    q: CMat,
    split: Option<Split>,
}

#[derive(Debug, Clone)]
struct Split {
    /// Eigenvectors of `a` on `range(q)` as columns, in ambient coordinates.
    basis: CMat,
    values: Vec<f64>,
}

impl QcqpSolver {
    pub fn new(a: &CMat, q: &CMat) -> Self {
        let scale = crate::linalg::fro(a).max(1.0);
        let qaq = q * a * q;
        let split = if crate::linalg::fro(&(a - &qaq)) <= 1e-12 * scale {
            let range = crate::linalg::row_space_basis(q);
            let reduced = hermitian_part(&(range.adjoint() * a * &range));
            let (values, vecs) = crate::linalg::hermitian_eigh(&reduced);
            Some(Split {
                basis: range * vecs,
                values: values.into_iter().map(|v| v.max(0.0)).collect(),
            })
        } else {
            None
        };
        QcqpSolver {
            a: a.clone(),
            q: q.clone(),
            split,
        }
    }

    pub fn solve(&self, b: &CVec) -> Result<CVec> {
        match &self.split {
            Some(sp) => self.solve_split(sp, b),
            None => self.solve_dense(b),
        }
    }

    fn solve_split(&self, sp: &Split, b: &CVec) -> Result<CVec> {
        let c = sp.basis.adjoint() * b;
        let mag: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        let constraint = |lambda: f64| -> f64 {
            mag.iter()
                .zip(&sp.values)
                .map(|(m, d)| m / (d + lambda + QCQP_RIDGE).powi(2))
                .sum()
        };
        let lambda = bisect_multiplier(constraint)?;
        let coef = CVec::from_iterator(
            c.len(),
            c.iter()
                .zip(&sp.values)
                .map(|(z, d)| z / (d + lambda + QCQP_RIDGE)),
        );
        let inside = &sp.basis * coef;
        // Components of b outside range(q) see only the ridge. At rounding
        // level they are dropped rather than amplified by 1 / ridge.
        let rest = b - &sp.basis * &c;
        if rest.norm() <= 1e-9 * b.norm() {
            return Ok(inside);
        }
        Ok(inside + rest.unscale(QCQP_RIDGE))
    }

    fn solve_dense(&self, b: &CVec) -> Result<CVec> {
        let n = b.len();
        let ridge = identity(n).scale(QCQP_RIDGE);
        let solve = |lambda: f64| -> Result<CVec> {
            let m = &self.a + self.q.scale(lambda) + &ridge;
            Ok(cholesky(&m)?.solve(b))
        };
        let mut failure = None;
        let lambda = bisect_multiplier(|lambda| match solve(lambda) {
            Ok(w) => quad_form(&self.q, &w),
            Err(e) => {
                failure = Some(e);
                0.0
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        solve(lambda)
    }
}

/// Smallest `lambda >= 0` with `constraint(lambda) <= 1`, for a
/// non-increasing `constraint`.
fn bisect_multiplier(mut constraint: impl FnMut(f64) -> f64) -> Result<f64> {
    if constraint(0.0) <= 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while constraint(hi) > 1.0 {
        lo = hi;
        hi *= 2.0;
        if hi > QCQP_LAMBDA_MAX {
            return Err(Error::Bracket(hi));
        }
    }
    for _ in 0..200 {
        let c = constraint(hi);
        if 1.0 - c < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if constraint(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(hi)
}

/// Working matrices of one NSP iteration.
#[derive(Debug, Clone)]
pub struct NspBlocks {
    pub p1: CMat,
    pub p2: CMat,
    /// Bob's channel of stream 1 (IRS path only), `K x N`.
    pub a1: CMat,
    /// Bob's channel of stream 2 (direct path only).
    pub a2: CMat,
    /// Eve's channel of stream 1 (IRS path only).
    pub a3: CMat,
}

impl NspBlocks {
    pub fn new(model: &SignalModel, p1: &CMat, p2: &CMat, theta: &CVec) -> Self {
        let irs_b = crate::linalg::scale_cols(&model.h_ib_h, theta) * &model.h_ai;
        let irs_e = crate::linalg::scale_cols(&model.h_ie_h, theta) * &model.h_ai;
        NspBlocks {
            a1: (irs_b * p1).scale(model.amp1 * model.irs_bob),
            a2: (&model.h_ab_h * p2).scale(model.amp2 * model.direct_bob),
            a3: (irs_e * p1).scale(model.amp1 * model.irs_eve),
            p1: p1.clone(),
            p2: p2.clone(),
        }
    }

    /// `(A1~, B1~)`: numerator and denominator of the `w1` ratio.
    pub fn w1_pencil(&self, w2: &CVec, b_inv: &CMat) -> Result<(CMat, CMat)> {
        let k = self.a1.nrows();
        let c2 = &self.a2 * w2;
        let inner = inv_hpd(&(identity(k) + &c2 * c2.adjoint()))?;
        let num = hermitian_part(&(&self.p1 + self.a1.adjoint() * inner * &self.a1));
        let den = hermitian_part(&(&self.p1 + self.a3.adjoint() * b_inv * &self.a3));
        Ok((num, den))
    }

    /// `A2~`, the quadratic form maximized by `w2`.
    pub fn w2_form(&self, w1: &CVec) -> Result<CMat> {
        let k = self.a1.nrows();
        let c1 = &self.a1 * w1;
        let inner = inv_hpd(&(identity(k) + &c1 * c1.adjoint()))?;
        Ok(hermitian_part(&(&self.p2 + self.a2.adjoint() * inner * &self.a2)))
    }
}

/// Result of one `w1` update.
#[derive(Debug, Clone)]
pub struct W1Update {
    pub w1: CVec,
    pub nu: f64,
    /// `|w^H A w - nu w^H B w|` at termination.
    pub residual: f64,
    pub iterations: usize,
}

fn p_normalize(w: &CVec, p: &CMat) -> CVec {
    let pw = p * w;
    let n = pw.norm();
    if n > 0.0 {
        pw.unscale(n)
    } else {
        pw
    }
}

/// Dinkelbach maximization of `w^H num w / w^H den w` over `range(p)`,
/// starting from `w`.
pub fn update_w1(num: &CMat, den: &CMat, p: &CMat, w: &CVec, opts: &NspOptions) -> Result<W1Update> {
    let ratio = |x: &CVec| quad_form(num, x) / quad_form(den, x);
    let mut w = p_normalize(w, p);
    if w.norm() == 0.0 {
        return Err(Error::Numerical("w1 start has no component in the null space".into()));
    }
    // Smallest eigenvalues of both forms on range(p). Moving `s p` from the
    // linearized part to the exact part leaves the gap unchanged and keeps
    // both parts PSD, but makes the surrogate much tighter when the two
    // forms are close to `p`.
    let range = crate::linalg::row_space_basis(p);
    let floor = |a: &CMat| {
        hermitian_eigenvalues(&hermitian_part(&(range.adjoint() * a * &range)))
            .first()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
    };
    let (num_floor, den_floor) = (floor(num), floor(den));
    let mut nu = ratio(&w);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_dinkelbach {
        iterations += 1;
        let shift = num_floor.min(nu * den_floor);
        let convex = num - p.scale(shift);
        let solver = QcqpSolver::new(&(den.scale(nu) - p.scale(shift)), p);
        let gap = |x: &CVec| quad_form(num, x) - nu * quad_form(den, x);
        let mut x = w.clone();
        let mut fx = gap(&x);
        for _ in 0..opts.max_ccp {
            let next = solver.solve(&(&convex * &x))?;
            let fnext = gap(&next);
            let moved = (&next - &x).norm();
            let gain = fnext - fx;
            x = next;
            fx = fnext;
            if moved < 1e-13 || gain.abs() < 1e-16 {
                break;
            }
        }
        residual = fx.abs();
        let cand = p_normalize(&x, p);
        if cand.norm() > 0.0 && ratio(&cand) >= nu {
            w = cand;
        }
        if residual < opts.dinkelbach_tol {
            break;
        }
        nu = ratio(&w);
    }
    Ok(W1Update {
        nu: ratio(&w),
        w1: w,
        residual,
        iterations,
    })
}

/// Ascent of `w^H form w` over `w^H p w <= 1`, starting from `w`.
pub fn update_w2(form: &CMat, p: &CMat, w: &CVec, opts: &NspOptions) -> Result<CVec> {
    let solver = QcqpSolver::new(&CMat::zeros(form.nrows(), form.ncols()), p);
    let mut x = p_normalize(w, p);
    if x.norm() == 0.0 {
        return Err(Error::Numerical("w2 start has no component in the null space".into()));
    }
    let mut val = quad_form(form, &x);
    for _ in 0..opts.max_w2_iters {
        let next = p_normalize(&solver.solve(&(form * &x))?, p);
        let v = quad_form(form, &next);
        if v < val {
            break;
        }
        let gain = v - val;
        x = next;
        val = v;
        if gain < opts.w2_tol {
            break;
        }
    }
    Ok(x)
}

/// `T_B~ = I/M + T_B1^H (I + h_B2 h_B2^H)^{-1} T_B1` and
/// `B_E~ = I/M + T_E1^H B^{-1} T_E1` for NSP-structured precoders.
pub fn phase_blocks(pb: &PhaseBlocks) -> Result<(CMat, CMat)> {
    let m = pb.m();
    let k = pb.t_b1.nrows();
    let base = identity(m).unscale(m as f64);
    let inner = inv_hpd(&(identity(k) + &pb.h_b2 * pb.h_b2.adjoint()))?;
    let tb = hermitian_part(&(&base + pb.t_b1.adjoint() * inner * &pb.t_b1));
    let be = hermitian_part(&(&base + pb.t_e1.adjoint() * &pb.b_inv * &pb.t_e1));
    Ok((tb, be))
}

/// Majorize-minimize descent of `theta^H (B_E~ - mu T_B~) theta` over the
/// unit torus from `theta_prev`.
pub fn theta_star_of_mu(
    tb: &CMat,
    be: &CMat,
    mu: f64,
    theta_prev: &CVec,
    opts: &NspOptions,
) -> CVec {
    let psi = hermitian_part(&(be - tb.scale(mu)));
    let eig = hermitian_eigenvalues(&psi);
    let (lo, hi) = (eig[0], eig[eig.len() - 1]);
    let mut theta = theta_prev.clone();
    if hi - lo < 1e-12 {
        return theta;
    }
    let mut obj = quad_form(&psi, &theta);
    for _ in 0..opts.max_mm_iters {
        let delta = theta.scale(hi) - &psi * &theta;
        let next = CVec::from_iterator(
            theta.len(),
            delta.iter().zip(theta.iter()).map(|(d, t)| {
                let r = d.norm();
                if r > 0.0 {
                    d / r
                } else {
                    *t
                }
            }),
        );
        let v = quad_form(&psi, &next);
        if v > obj {
            break;
        }
        let drop = obj - v;
        theta = next;
        obj = v;
        if drop < opts.mm_tol {
            break;
        }
    }
    theta
}

/// `phi(mu) = theta^H (B_E~ - mu T_B~) theta` at `theta_star_of_mu`.
pub fn phi_of_mu(tb: &CMat, be: &CMat, mu: f64, theta_prev: &CVec, opts: &NspOptions) -> (f64, CVec) {
    let th = theta_star_of_mu(tb, be, mu, theta_prev, opts);
    (quad_form(be, &th) - mu * quad_form(tb, &th), th)
}

fn phase_ratio(tb: &CMat, be: &CMat, th: &CVec) -> f64 {
    quad_form(be, th) / quad_form(tb, th)
}

/// Bisection on `mu` for the root of `phi`. Returns the phase vector with
/// the smallest ratio `theta^H B_E~ theta / theta^H T_B~ theta` seen,
/// `theta_prev` included.
pub fn update_theta_nsp(tb: &CMat, be: &CMat, theta_prev: &CVec, opts: &NspOptions) -> Result<CVec> {
    let mut best = theta_prev.clone();
    let mut best_ratio = phase_ratio(tb, be, theta_prev);
    let (phi0, th0) = phi_of_mu(tb, be, 0.0, theta_prev, opts);
    if !(phi0 > 0.0) {
        return Err(Error::Numerical(format!("phi(0) = {phi0} is not positive")));
    }
    let r0 = phase_ratio(tb, be, &th0);
    if r0 < best_ratio {
        best_ratio = r0;
        best = th0;
    }
    let (mut lo, mut hi) = (0.0, best_ratio);
    for _ in 0..opts.max_bisect {
        if hi - lo < opts.mu_width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (phi, th) = phi_of_mu(tb, be, mid, &best, opts);
        let r = phase_ratio(tb, be, &th);
        if r < best_ratio {
            best_ratio = r;
            best = th;
        }
        if phi.abs() < opts.mu_tol {
            break;
        }
        if phi > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(best)
}

/// First nonzero projection of a canonical basis vector, normalized.
pub fn initial_w(p: &CMat) -> CVec {
    let n = p.nrows();
    for i in 0..n {
        let col = p.column(i).into_owned();
        if col.norm() > 1e-8 {
            return col.normalize();
        }
    }
    let mut e = CVec::zeros(n);
    e[0] = ONE;
    e
}

fn precoders(p1: &CMat, p2: &CMat, w1: &CVec, w2: &CVec, theta: &CVec) -> Precoders {
    Precoders::new(p_normalize(w1, p1), p_normalize(w2, p2), theta.clone())
}

pub fn run_nsp_model(model: &SignalModel, ch: &ChannelSet, opts: &NspOptions, epsilon: f64) -> Result<NspState> {
    opts.validate()?;
    let (p1, p2) = ns_projectors(ch)?;
    let mut w1 = initial_w(&p1);
    let mut w2 = initial_w(&p2);
    let mut theta = zero_phase(model.m);
    if model.reflects() && model.amp1 > 0.0 {
        let prec = precoders(&p1, &p2, &w1, &w2, &theta);
        let (tb, be) = phase_blocks(&model.phase_blocks(&prec.v1, &prec.v2))?;
        theta = update_theta_nsp(&tb, &be, &theta, opts)?;
    }
    let mut rs_trace = vec![model.secrecy_rate(&precoders(&p1, &p2, &w1, &w2, &theta))];
    let mut residual: f64 = 0.0;
    let mut converged = false;
    let mut iterations_used = 0;
    while iterations_used < opts.max_outer {
        iterations_used += 1;
        let blocks = NspBlocks::new(model, &p1, &p2, &theta);
        if model.amp1 > 0.0 {
            let (num, den) = blocks.w1_pencil(&w2, &model.b_inv)?;
            let up = update_w1(&num, &den, &p1, &w1, opts)?;
            residual = residual.max(up.residual);
            w1 = up.w1;
        }
        if model.amp2 > 0.0 {
            w2 = update_w2(&blocks.w2_form(&w1)?, &p2, &w2, opts)?;
        }
        if model.reflects() && model.amp1 > 0.0 {
            let prec = precoders(&p1, &p2, &w1, &w2, &theta);
            let pb = model.phase_blocks(&prec.v1, &prec.v2);
            let (tb, be) = phase_blocks(&pb)?;
            theta = update_theta_nsp(&tb, &be, &theta, opts)?;
        }
        let sr = model.secrecy_rate(&precoders(&p1, &p2, &w1, &w2, &theta));
        let prev = *rs_trace.last().unwrap_or(&0.0);
        rs_trace.push(sr);
        if sr - prev <= epsilon {
            converged = true;
            break;
        }
    }
    Ok(NspState {
        prec: precoders(&p1, &p2, &w1, &w2, &theta),
        w1,
        w2,
        rs_trace,
        iterations_used,
        converged,
        dinkelbach_residual: residual,
    })
}

pub fn run_nsp(cfg: &SystemConfig, ch: &ChannelSet, opts: &NspOptions) -> Result<NspState> {
    cfg.validate()?;
    let model = SignalModel::new(cfg, ch)?;
    run_nsp_model(&model, ch, opts, cfg.epsilon)
}
