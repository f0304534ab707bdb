//! General alternating iteration: closed-form beamformer updates through
//! generalized Rayleigh quotients, and gradient ascent on the IRS phases with
//! a backtracking line search and unit-modulus reprojection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cholesky, hermitian_eigenvalues, hermitian_eigh, hermitian_part, identity, inv_hpd,
    quad_form, unit_modulus, CMat, CVec, ZERO,
};
use crate::model::{ChannelSet, SystemConfig};
use crate::rates::{zero_phase, PhaseBlocks, Precoders, SignalModel};

/// Smallest admissible eigenvalue of a Rayleigh-quotient denominator.
pub const MIN_DENOMINATOR_EIG: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaOptions {
    pub max_outer: usize,
    /// Cap on gradient-ascent iterations per phase update.
    pub max_ga_iters: usize,
    /// The phase ascent stops once an accepted step gains less than this
    /// many bits.
    pub ga_tol: f64,
    pub ls_shrink: f64,
    pub ls_c1: f64,
    pub ls_alpha0: f64,
    /// Line-search accuracy; the schedule tries at most `ceil(log2(1/kappa))`
    /// shrinks.
    pub kappa: f64,
}

impl Default for GaOptions {
    fn default() -> Self {
        GaOptions {
            max_outer: 50,
            max_ga_iters: 20_000,
            ga_tol: 1e-9,
            ls_shrink: 0.5,
            ls_c1: 1e-4,
            ls_alpha0: 1.0,
            kappa: 1e-4,
        }
    }
}

impl GaOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, r: &str| Err(Error::config(k, r));
        if self.max_outer == 0 {
            return bad("max_outer", "must be positive");
        }
        if self.max_ga_iters == 0 {
            return bad("max_ga_iters", "must be positive");
        }
        if !(self.ga_tol > 0.0 && self.ga_tol.is_finite()) {
            return bad("ga_tol", "must be positive");
        }
        if !(self.ls_shrink > 0.0 && self.ls_shrink < 1.0) {
            return bad("ls_shrink", "must lie in (0, 1)");
        }
        if !(self.ls_c1 > 0.0 && self.ls_c1 < 1.0) {
            return bad("ls_c1", "must lie in (0, 1)");
        }
        if !(self.ls_alpha0 > 0.0 && self.ls_alpha0.is_finite()) {
            return bad("ls_alpha0", "must be positive");
        }
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return bad("kappa", "must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn max_shrinks(&self) -> usize {
        (1.0 / self.kappa).log2().ceil() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaiState {
    pub prec: Precoders,
    /// Secrecy rate at the initial point followed by one value per outer
    /// iteration.
    pub rs_trace: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
}

impl GaiState {
    pub fn secrecy_rate(&self) -> f64 {
        self.rs_trace.last().copied().unwrap_or(0.0)
    }
}

/// Principal generalized eigenvector of the pencil `(a, b)` and its
/// eigenvalue, the maximum of `x^H a x / x^H b x`.
pub fn rayleigh_ritz_max(a: &CMat, b: &CMat) -> Result<(CVec, f64)> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n || b.shape() != (n, n) {
        return Err(Error::Numerical(format!(
            "pencil shapes {:?} and {:?} are not square and equal",
            a.shape(),
            b.shape()
        )));
    }
    let min = hermitian_eigenvalues(b)[0];
    if !(min >= MIN_DENOMINATOR_EIG) {
        return Err(Error::SingularDenominator(min));
    }
    let l = cholesky(b)?.l();
    // C = L^{-1} A L^{-H}, formed with two triangular solves.
    let la = l
        .solve_lower_triangular(&hermitian_part(a))
        .ok_or_else(|| Error::SingularDenominator(min))?;
    let c = l
        .solve_lower_triangular(&la.adjoint())
        .ok_or_else(|| Error::SingularDenominator(min))?
        .adjoint();
    let (values, vectors) = hermitian_eigh(&c);
    let y = vectors.column(n - 1).into_owned();
    let v = l
        .adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::SingularDenominator(min))?;
    Ok((canonical_phase(&v.normalize()), values[n - 1]))
}

/// Rotates `v` so that its largest-magnitude entry is real and positive.
fn canonical_phase(v: &CVec) -> CVec {
    let (mut best, mut arg) = (0.0, ZERO);
    for z in v.iter() {
        if z.norm() > best * (1.0 + 1e-12) {
            best = z.norm();
            arg = *z;
        }
    }
    if best == 0.0 {
        return v.clone();
    }
    v * (arg.conj() / best)
}

/// `I + H^H (D + c c^H)^{-1} H` with `c = H_other v_other`: the generalized
/// quadratic form of one stream given the other.
fn stream_form(h: &CMat, base: &CMat, other: &CVec) -> Result<CMat> {
    let n = h.ncols();
    let inner = inv_hpd(&(base + other * other.adjoint()))?;
    Ok(hermitian_part(&(identity(n) + h.adjoint() * inner * h)))
}

/// Closed-form update of `v1` with `v2` and `theta` fixed.
pub fn update_v1(model: &SignalModel, prec: &Precoders) -> Result<CVec> {
    let h_b = model.composite_bob(&prec.theta);
    let h_e = model.composite_eve(&prec.theta);
    let k = model.k;
    let cb = stream_form(&h_b.scale(model.amp1), &identity(k), &(&h_b * &prec.v2).scale(model.amp2))?;
    let ce = stream_form(&h_e.scale(model.amp1), &model.b, &(&h_e * &prec.v2).scale(model.amp2))?;
    Ok(rayleigh_ritz_max(&cb, &ce)?.0)
}

/// Closed-form update of `v2` with `v1` and `theta` fixed.
pub fn update_v2(model: &SignalModel, prec: &Precoders) -> Result<CVec> {
    let h_b = model.composite_bob(&prec.theta);
    let h_e = model.composite_eve(&prec.theta);
    let k = model.k;
    let cb = stream_form(&h_b.scale(model.amp2), &identity(k), &(&h_b * &prec.v1).scale(model.amp1))?;
    let ce = stream_form(&h_e.scale(model.amp2), &model.b, &(&h_e * &prec.v1).scale(model.amp1))?;
    Ok(rayleigh_ritz_max(&cb, &ce)?.0)
}

/// Numerator `f`, denominator `g` and ratio `f / g` of the phase objective.
/// `log2(f / g)` equals `R_B - R_E` exactly on the unit torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseObjective {
    pub f: f64,
    pub g: f64,
    pub ratio: f64,
}

impl PhaseObjective {
    /// `R_B - R_E` in bits, without the clamp at zero.
    pub fn log2_ratio(&self) -> f64 {
        self.ratio.log2()
    }
}

struct Terms {
    t1: CVec,
    t2: CVec,
    w1: CVec,
    w2: CVec,
    f: f64,
    g: f64,
    q1: f64,
    q2: f64,
    b12: num_complex::Complex64,
}

fn terms(theta: &CVec, pb: &PhaseBlocks) -> Terms {
    let out = pb.outputs(theta);
    let (t1, t2, e1, e2) = (out.t_b1, out.t_b2, out.t_e1, out.t_e2);
    let n1 = t1.norm_squared();
    let n2 = t2.norm_squared();
    let f = (1.0 + n1) * (1.0 + n2) - t1.dotc(&t2).norm_sqr();
    let w1 = &pb.b_inv * &e1;
    let w2 = &pb.b_inv * &e2;
    let q1 = e1.dotc(&w1).re;
    let q2 = e2.dotc(&w2).re;
    let b12 = e1.dotc(&w2);
    let g = (1.0 + q1) * (1.0 + q2) - b12.norm_sqr();
    Terms { t1, t2, w1, w2, f, g, q1, q2, b12 }
}

pub fn sr_objective_theta(theta: &CVec, pb: &PhaseBlocks) -> Result<PhaseObjective> {
    let t = terms(theta, pb);
    if !(t.g > 0.0) || !t.f.is_finite() {
        return Err(Error::Numerical(format!(
            "phase objective denominator is {} (numerator {})",
            t.g, t.f
        )));
    }
    Ok(PhaseObjective {
        f: t.f,
        g: t.g,
        ratio: t.f / t.g,
    })
}

/// Gradient of `f / g` with respect to `conj(theta)`. For a real
/// perturbation `d`, the first-order change is `2 Re(grad^H d)`.
pub fn sr_gradient_theta(theta: &CVec, pb: &PhaseBlocks) -> CVec {
    let Terms { t1, t2, w1, w2, f, g, q1, q2, b12 } = terms(theta, pb);
    let n1 = t1.norm_squared();
    let n2 = t2.norm_squared();
    let a12 = t1.dotc(&t2);
    let th1 = pb.t_b1.adjoint();
    let th2 = pb.t_b2.adjoint();
    let df = (&th1 * &t1).scale(1.0 + n2) + (&th2 * &t2).scale(1.0 + n1)
        - (&th1 * &t2) * a12.conj()
        - (&th2 * &t1) * a12;
    let te1 = pb.t_e1.adjoint();
    let te2 = pb.t_e2.adjoint();
    let dg = (&te1 * &w1).scale(1.0 + q2) + (&te2 * &w2).scale(1.0 + q1)
        - (&te1 * &w2) * b12.conj()
        - (&te2 * &w1) * b12;
    (df.scale(g) - dg.scale(f)).unscale(g * g)
}

/// Outcome of one phase-ascent run.
#[derive(Debug, Clone)]
pub struct GaOutcome {
    pub theta: CVec,
    /// `log2(f / g)` at the start and after each accepted step.
    pub trace: Vec<f64>,
}

/// Gradient ascent on `f / g` over the unit torus, starting from `theta`.
///
/// Each iteration tries `theta + alpha * grad`, reprojected to unit modulus,
/// and accepts it when the ratio strictly increases and meets the
/// sufficient-ascent test; otherwise `alpha` shrinks. The trial `alpha` is
/// the Barzilai-Borwein step of the last two iterates, or on the first
/// iteration `ls_alpha0` over the largest gradient modulus. Stops when an
/// accepted step gains less than `ga_tol` bits or no step size succeeds.
pub fn ga_optimize_theta(theta: &CVec, pb: &PhaseBlocks, opts: &GaOptions) -> Result<GaOutcome> {
    let mut cur = unit_modulus(theta, &zero_phase(theta.len()), 0.0);
    let mut val = sr_objective_theta(&cur, pb)?.ratio;
    let mut trace = vec![val.log2()];
    let shrinks = opts.max_shrinks();
    let mut last: Option<(CVec, CVec)> = None;
    for _ in 0..opts.max_ga_iters {
        let grad = sr_gradient_theta(&cur, pb);
        let scale = grad.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(scale > 0.0) || !scale.is_finite() {
            break;
        }
        let mut alpha = opts.ls_alpha0 / scale;
        if let Some((px, pg)) = &last {
            let s = &cur - px;
            let y = &grad - pg;
            let sy = s.dotc(&y).re;
            if sy < 0.0 {
                alpha = s.norm_squared() / -sy;
            }
        }
        let mut accepted = None;
        for _ in 0..=shrinks {
            let cand = unit_modulus(&(&cur + grad.scale(alpha)), &cur, 0.0);
            let v = sr_objective_theta(&cand, pb)?.ratio;
            let pred = 2.0 * grad.dotc(&(&cand - &cur)).re;
            if v > val && v - val >= opts.ls_c1 * pred.max(0.0) {
                accepted = Some((cand, v));
                break;
            }
            alpha *= opts.ls_shrink;
        }
        let Some((cand, v)) = accepted else { break };
        let gain = v.log2() - val.log2();
        last = Some((cur, grad));
        cur = cand;
        val = v;
        trace.push(val.log2());
        if gain < opts.ga_tol {
            break;
        }
    }
    Ok(GaOutcome { theta: cur, trace })
}

/// Deterministic starting point: zero phases and the two dominant right
/// singular vectors of Bob's composite channel.
pub fn initial_precoders(model: &SignalModel) -> Precoders {
    initial_precoders_at(model, zero_phase(model.m))
}

/// Starting beamformers for a given reflection vector.
pub fn initial_precoders_at(model: &SignalModel, theta: CVec) -> Precoders {
    let h_b = model.composite_bob(&theta);
    let n = model.n;
    let gram = hermitian_part(&(h_b.adjoint() * &h_b));
    let (values, vectors) = hermitian_eigh(&gram);
    let basis = |i: usize| {
        let mut e = CVec::zeros(n);
        e[i.min(n - 1)] = crate::linalg::ONE;
        e
    };
    let (v1, v2) = if !(values[n - 1] > 0.0) {
        (basis(0), basis(1))
    } else if n == 1 {
        let v = vectors.column(0).into_owned();
        (v.clone(), v)
    } else {
        (
            canonical_phase(&vectors.column(n - 1).into_owned()),
            canonical_phase(&vectors.column(n - 2).into_owned()),
        )
    };
    Precoders::new(v1, v2, theta)
}

/// One round of beamformer updates. A stream with zero power keeps its
/// beamformer.
pub fn optimize_beamformers(model: &SignalModel, prec: &Precoders) -> Result<Precoders> {
    let mut p = prec.clone();
    if model.amp1 > 0.0 {
        p.v1 = update_v1(model, &p)?;
    }
    if model.amp2 > 0.0 {
        p.v2 = update_v2(model, &p)?;
    }
    Ok(p)
}

/// Alternating maximization from `init`. With `phases` false the IRS phases
/// stay fixed and only the beamformers move.
pub fn run_gai_from(
    model: &SignalModel,
    init: Precoders,
    opts: &GaOptions,
    epsilon: f64,
    phases: bool,
) -> Result<GaiState> {
    opts.validate()?;
    let mut prec = init;
    let mut rs_trace = vec![model.secrecy_rate(&prec)];
    let mut converged = false;
    let mut iterations_used = 0;
    while iterations_used < opts.max_outer {
        iterations_used += 1;
        prec = optimize_beamformers(model, &prec)?;
        if phases && model.reflects() {
            let pb = model.phase_blocks(&prec.v1, &prec.v2);
            prec.theta = ga_optimize_theta(&prec.theta, &pb, opts)?.theta;
        }
        let sr = model.secrecy_rate(&prec);
        let prev = *rs_trace.last().unwrap_or(&0.0);
        rs_trace.push(sr);
        if sr - prev <= epsilon {
            converged = true;
            break;
        }
    }
    Ok(GaiState {
        prec,
        rs_trace,
        iterations_used,
        converged,
    })
}

pub fn run_gai(cfg: &SystemConfig, channels: &ChannelSet, opts: &GaOptions) -> Result<GaiState> {
    cfg.validate()?;
    let model = SignalModel::new(cfg, channels)?;
    run_gai_from(&model, initial_precoders(&model), opts, cfg.epsilon, true)
}

/// `v^H a v / v^H b v`.
pub fn rayleigh_quotient(a: &CMat, b: &CMat, v: &CVec) -> f64 {
    quad_form(a, v) / quad_form(b, v)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::linalg::{c, cis};
    use crate::model::build_system;
    use crate::rates::secrecy_rate;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn rand_cvec(rng: &mut ChaCha8Rng, n: usize) -> CVec {
        CVec::from_fn(n, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    pub(crate) fn rand_cmat(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> CMat {
        CMat::from_fn(r, cols, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    pub(crate) fn rand_phases(rng: &mut ChaCha8Rng, m: usize) -> CVec {
        CVec::from_fn(m, |_, _| cis(rng.random::<f64>() * std::f64::consts::TAU))
    }

    pub(crate) fn rand_blocks(rng: &mut ChaCha8Rng, k: usize, m: usize) -> PhaseBlocks {
        let w = rand_cmat(rng, k, k);
        let b = identity(k) + &w * w.adjoint();
        PhaseBlocks {
            t_b1: rand_cmat(rng, k, m),
            t_b2: rand_cmat(rng, k, m),
            t_e1: rand_cmat(rng, k, m),
            t_e2: rand_cmat(rng, k, m),
            h_b1: rand_cvec(rng, k),
            h_b2: rand_cvec(rng, k),
            h_e1: rand_cvec(rng, k),
            h_e2: rand_cvec(rng, k),
            g1: rand_cvec(rng, m),
            g2: rand_cvec(rng, m),
            b_inv: inv_hpd(&b).unwrap(),
        }
    }

    fn default_model() -> (SystemConfig, SignalModel) {
        let cfg = SystemConfig::default();
        let (_, ch) = build_system(&cfg).unwrap();
        let model = SignalModel::new(&cfg, &ch).unwrap();
        (cfg, model)
    }

    #[test]
    fn rayleigh_diagonal() {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0, 0.0), c(1.0, 0.0)]));
        let (v, q) = rayleigh_ritz_max(&a, &identity(2)).unwrap();
        assert!((q - 2.0).abs() < 1e-12);
        assert!((v[0].norm() - 1.0).abs() < 1e-12);
        assert!(v[1].norm() < 1e-12);
    }

    #[test]
    fn rayleigh_identity_pencil() {
        let (v, q) = rayleigh_ritz_max(&identity(3), &identity(3)).unwrap();
        assert!((q - 1.0).abs() < 1e-14);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rayleigh_rejects_singular_denominator() {
        let b = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0, 0.0), c(1e-13, 0.0)]));
        assert!(matches!(
            rayleigh_ritz_max(&identity(2), &b),
            Err(Error::SingularDenominator(_))
        ));
    }

    #[test]
    fn rayleigh_quotient_is_attained_and_not_exceeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 4;
        let x = rand_cmat(&mut rng, n, n);
        let y = rand_cmat(&mut rng, n, n);
        let a = &x * x.adjoint();
        let b = identity(n) + &y * y.adjoint();
        let (v, q) = rayleigh_ritz_max(&a, &b).unwrap();
        assert!((rayleigh_quotient(&a, &b, &v) - q).abs() < 1e-10 * q);
        for _ in 0..20_000 {
            let u = rand_cvec(&mut rng, n).normalize();
            assert!(rayleigh_quotient(&a, &b, &u) <= q + 1e-9);
        }
    }

    #[test]
    fn objective_matches_rates() {
        let (cfg, model) = default_model();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let prec = Precoders::new(
                rand_cvec(&mut rng, cfg.n).normalize(),
                rand_cvec(&mut rng, cfg.n).normalize(),
                rand_phases(&mut rng, cfg.m),
            );
            let dm = model.derive(&prec);
            let obj = sr_objective_theta(&prec.theta, &dm.phase).unwrap();
            let diff = model.rate_bob(&prec) - model.rate_eve(&prec);
            if diff > 0.0 {
                assert!((obj.log2_ratio() - diff).abs() < 1e-9);
                assert!((obj.log2_ratio().max(0.0) - secrecy_rate(&dm, &prec)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn objective_without_phase_blocks_is_constant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pb = rand_blocks(&mut rng, 3, 4);
        for t in [&mut pb.t_b1, &mut pb.t_b2, &mut pb.t_e1, &mut pb.t_e2] {
            t.fill(ZERO);
        }
        let f = (1.0 + pb.h_b1.norm_squared()) * (1.0 + pb.h_b2.norm_squared())
            - pb.h_b1.dotc(&pb.h_b2).norm_sqr();
        let a = sr_objective_theta(&rand_phases(&mut rng, 4), &pb).unwrap();
        let b = sr_objective_theta(&rand_phases(&mut rng, 4), &pb).unwrap();
        assert!((a.f - f).abs() < 1e-12 && (a.ratio - b.ratio).abs() < 1e-12);
        assert!(sr_gradient_theta(&rand_phases(&mut rng, 4), &pb).norm() == 0.0);
    }

    #[test]
    fn objective_single_antenna_single_stream() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut pb = rand_blocks(&mut rng, 1, 3);
        pb.t_b2.fill(ZERO);
        pb.h_b2.fill(ZERO);
        let th = rand_phases(&mut rng, 3);
        let t = (&pb.t_b1 * &th + &pb.h_b1)[0];
        let obj = sr_objective_theta(&th, &pb).unwrap();
        assert!((obj.f - (1.0 + t.norm_sqr())).abs() < 1e-12);
    }

    fn fd_check(pb: &PhaseBlocks, th: &CVec) {
        let grad = sr_gradient_theta(th, pb);
        let h = 1e-6;
        let ratio = |x: &CVec| sr_objective_theta(x, pb).unwrap().ratio;
        let scale = grad.iter().map(|z| z.norm()).fold(0.0, f64::max);
        for i in 0..th.len() {
            for (dir, part) in [(c(1.0, 0.0), 2.0 * grad[i].re), (c(0.0, 1.0), 2.0 * grad[i].im)] {
                let mut p = th.clone();
                let mut m = th.clone();
                p[i] += dir * h;
                m[i] -= dir * h;
                let fd = (ratio(&p) - ratio(&m)) / (2.0 * h);
                let err = (fd - part).abs() / part.abs().max(2.0 * scale).max(1e-300);
                assert!(err < 1e-5, "coord {i}: fd {fd} vs analytic {part}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let pb = rand_blocks(&mut rng, 3, 5);
            fd_check(&pb, &rand_phases(&mut rng, 5));
        }
    }

    #[test]
    fn gradient_scalar_case() {
        // M = K = 1, second streams off: r(x) = (1 + |a x + h|^2) / (1 + w |e x + u|^2).
        let (a, h, e, u, w) = (c(0.7, -0.2), c(0.1, 0.4), c(-0.3, 0.5), c(0.2, 0.1), 0.8);
        let pb = PhaseBlocks {
            t_b1: CMat::from_element(1, 1, a),
            t_b2: CMat::zeros(1, 1),
            t_e1: CMat::from_element(1, 1, e),
            t_e2: CMat::zeros(1, 1),
            h_b1: CVec::from_element(1, h),
            h_b2: CVec::zeros(1),
            h_e1: CVec::from_element(1, u),
            h_e2: CVec::zeros(1),
            g1: CVec::zeros(1),
            g2: CVec::zeros(1),
            b_inv: CMat::from_element(1, 1, c(w, 0.0)),
        };
        let x = cis(0.9);
        let tb = a * x + h;
        let te = e * x + u;
        let f = 1.0 + tb.norm_sqr();
        let g = 1.0 + w * te.norm_sqr();
        let expect = (a.conj() * tb * g - e.conj() * te * w * f) / (g * g);
        let grad = sr_gradient_theta(&CVec::from_element(1, x), &pb);
        assert!((grad[0] - expect).norm() < 1e-14);
    }

    #[test]
    fn update_v1_without_eve_is_principal_eigenvector() {
        let cfg = SystemConfig::default();
        let (_, mut ch) = build_system(&cfg).unwrap();
        ch.g_ae = 0.0;
        ch.g_aie = 0.0;
        let model = SignalModel::new(&cfg, &ch).unwrap();
        let prec = initial_precoders(&model);
        let v1 = update_v1(&model, &prec).unwrap();
        let h_b = model.composite_bob(&prec.theta);
        let cb = stream_form(&h_b.scale(model.amp1), &identity(cfg.k), &(&h_b * &prec.v2).scale(model.amp2)).unwrap();
        let (_, vecs) = hermitian_eigh(&cb);
        let top = vecs.column(cfg.n - 1).into_owned();
        assert!((top.dotc(&v1).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn beamformer_updates_never_lower_the_rate() {
        let (cfg, model) = default_model();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let mut prec = Precoders::new(
                rand_cvec(&mut rng, cfg.n).normalize(),
                rand_cvec(&mut rng, cfg.n).normalize(),
                rand_phases(&mut rng, cfg.m),
            );
            let before = model.rate_bob(&prec) - model.rate_eve(&prec);
            prec.v1 = update_v1(&model, &prec).unwrap();
            let mid = model.rate_bob(&prec) - model.rate_eve(&prec);
            prec.v2 = update_v2(&model, &prec).unwrap();
            let after = model.rate_bob(&prec) - model.rate_eve(&prec);
            assert!(mid >= before - 1e-9 && after >= mid - 1e-9);
            assert!(prec.is_feasible(1e-9));
        }
    }

    #[test]
    fn scaled_pencil_gives_same_direction() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let x = rand_cmat(&mut rng, 5, 5);
        let a = &x * x.adjoint();
        let b = identity(5) + rand_cmat(&mut rng, 5, 2) * rand_cmat(&mut rng, 5, 2).adjoint();
        let b = hermitian_part(&(&b * b.adjoint()));
        let (v, _) = rayleigh_ritz_max(&a, &b).unwrap();
        let (w, _) = rayleigh_ritz_max(&a.scale(7.5), &b.scale(7.5)).unwrap();
        assert!((v.dotc(&w).norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_power_stream_keeps_beamformer() {
        let cfg = SystemConfig {
            beta1: 0.8,
            beta2: 0.0,
            ..SystemConfig::default()
        };
        let (_, ch) = build_system(&cfg).unwrap();
        let model = SignalModel::new(&cfg, &ch).unwrap();
        let init = initial_precoders(&model);
        let out = optimize_beamformers(&model, &init).unwrap();
        assert_eq!(out.v2, init.v2);
    }

    #[test]
    fn ga_is_monotone_and_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pb = rand_blocks(&mut rng, 2, 6);
        let th = rand_phases(&mut rng, 6);
        let out = ga_optimize_theta(&th, &pb, &GaOptions::default()).unwrap();
        for w in out.trace.windows(2) {
            assert!(w[1] > w[0]);
        }
        assert!(out.theta.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn ga_stays_at_stationary_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let pb = rand_blocks(&mut rng, 1, 2);
        let start = rand_phases(&mut rng, 2);
        let opt = ga_optimize_theta(&start, &pb, &GaOptions::default()).unwrap();
        let again = ga_optimize_theta(&opt.theta, &pb, &GaOptions::default()).unwrap();
        let v0 = sr_objective_theta(&opt.theta, &pb).unwrap().ratio;
        let v1 = sr_objective_theta(&again.theta, &pb).unwrap().ratio;
        assert!((v1 - v0).abs() <= 1e-9 * v0);
        assert!((&again.theta - &opt.theta).norm() < 1e-3);
    }

    #[test]
    fn run_gai_without_power_is_zero() {
        let cfg = SystemConfig {
            beta1: 0.0,
            beta2: 0.0,
            ..SystemConfig::default()
        };
        let (_, ch) = build_system(&cfg).unwrap();
        let st = run_gai(&cfg, &ch, &GaOptions::default()).unwrap();
        assert!(st.converged);
        assert_eq!(st.iterations_used, 1);
        assert!(st.rs_trace.iter().all(|&r| r == 0.0));
    }

    #[test]
    fn run_gai_default_converges() {
        for m in [10, 20] {
            let cfg = SystemConfig {
                m,
                ..SystemConfig::default()
            };
            let (_, ch) = build_system(&cfg).unwrap();
            let st = run_gai(&cfg, &ch, &GaOptions::default()).unwrap();
            assert!(st.converged && st.iterations_used <= 10, "M={m}: {:?}", st.rs_trace);
            for w in st.rs_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-9);
            }
            assert!(st.prec.is_feasible(1e-9));
        }
    }
}
