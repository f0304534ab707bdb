//! Signal-model evaluators shared by every optimizer: the artificial-noise
//! projector, the noise-normalized effective channels, the Eve interference
//! matrix `B`, and the Bob/Eve/secrecy rates.
//!
//! [`SignalModel`] caches everything that depends only on the configuration
//! and the channels. [`DerivedModel`] is a full snapshot for one set of
//! precoders and carries every intermediate block by name.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    hermitian_part, identity, inv_hpd, log2_det_hpd, nullspace_projector, scale_cols, CMat,
    CVec, ONE,
};
use crate::model::{ChannelSet, SystemConfig};

/// Transmit beamformers of the two confidential streams and the IRS
/// reflection vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precoders {
    #[serde(with = "cvec_serde")]
    pub v1: CVec,
    #[serde(with = "cvec_serde")]
    pub v2: CVec,
    #[serde(with = "cvec_serde")]
    pub theta: CVec,
}

impl Precoders {
    pub fn new(v1: CVec, v2: CVec, theta: CVec) -> Self {
        Precoders { v1, v2, theta }
    }

    /// Largest violation of the unit-norm and unit-modulus constraints.
    pub fn feasibility_gap(&self) -> f64 {
        let norms = (self.v1.norm() - 1.0).abs().max((self.v2.norm() - 1.0).abs());
        self.theta
            .iter()
            .map(|t| (t.norm() - 1.0).abs())
            .fold(norms, f64::max)
    }

    pub fn is_feasible(&self, tol: f64) -> bool {
        self.feasibility_gap() <= tol
    }
}

/// `I_N - H_CM^H (H_CM H_CM^H)^+ H_CM` with `H_CM = [H_AI; H_AB^H]`.
pub fn an_projector(h_ai: &CMat, h_ab: &CMat) -> CMat {
    let n = h_ai.ncols();
    let h_ab_h = h_ab.adjoint();
    let mut stack = CMat::zeros(h_ai.nrows() + h_ab_h.nrows(), n);
    stack.rows_mut(0, h_ai.nrows()).copy_from(h_ai);
    stack.rows_mut(h_ai.nrows(), h_ab_h.nrows()).copy_from(&h_ab_h);
    nullspace_projector(&stack).0
}

/// The received-signal vectors of the four (user, stream) pairs:
/// `t_b1 = H_B1 v1`, `t_b2 = H_B2 v2`, `t_e1 = H_E1 v1`, `t_e2 = H_E2 v2`.
#[derive(Debug, Clone)]
pub struct StreamOutputs {
    pub t_b1: CVec,
    pub t_b2: CVec,
    pub t_e1: CVec,
    pub t_e2: CVec,
}

/// Configuration- and channel-dependent constants of the signal model.
#[derive(Debug, Clone)]
pub struct SignalModel {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    /// `sqrt(beta_i Ps) / sigma` for the two streams.
    pub amp1: f64,
    pub amp2: f64,
    /// `sqrt(g)` of the reflected (IRS) and direct paths. The reflected
    /// gains are zero when reflection is disabled.
    pub irs_bob: f64,
    pub irs_eve: f64,
    pub direct_bob: f64,
    pub direct_eve: f64,
    pub h_ai: CMat,
    /// `H_IB^H`, `K x M`.
    pub h_ib_h: CMat,
    pub h_ie_h: CMat,
    /// `H_AB^H`, `K x N`.
    pub h_ab_h: CMat,
    pub h_ae_h: CMat,
    pub p_an: CMat,
    pub b: CMat,
    pub b_inv: CMat,
    log2_det_b: f64,
    reflect: bool,
}

impl SignalModel {
    pub fn new(cfg: &SystemConfig, ch: &ChannelSet) -> Result<Self> {
        check_power_split(cfg)?;
        let sigma2 = cfg.noise_watts();
        let ps = cfg.ps_watts();
        let sigma = sigma2.sqrt();
        let (n, m, k) = (ch.n(), ch.m(), ch.k());
        if (n, m, k) != (cfg.n, cfg.m, cfg.k) {
            return Err(Error::config(
                "N",
                format!(
                    "channel set is {n}x{m}x{k} but config asks for {}x{}x{}",
                    cfg.n, cfg.m, cfg.k
                ),
            ));
        }
        let p_an = an_projector(&ch.h_ai, &ch.h_ab);
        let h_ae_h = ch.h_ae.adjoint();
        let an_scale = cfg.beta_an().max(0.0) * ps * ch.g_ae / sigma2;
        // P_AN is an orthogonal projector, so P_AN P_AN^H = P_AN.
        let b = hermitian_part(
            &(identity(k) + (&h_ae_h * &p_an * &ch.h_ae).scale(an_scale)),
        );
        let b_inv = inv_hpd(&b)?;
        let log2_det_b = log2_det_hpd(&b)?;
        Ok(SignalModel {
            n,
            m,
            k,
            amp1: (cfg.beta1 * ps).sqrt() / sigma,
            amp2: (cfg.beta2 * ps).sqrt() / sigma,
            irs_bob: ch.g_aib.sqrt(),
            irs_eve: ch.g_aie.sqrt(),
            direct_bob: ch.g_ab.sqrt(),
            direct_eve: ch.g_ae.sqrt(),
            h_ai: ch.h_ai.clone(),
            h_ib_h: ch.h_ib.adjoint(),
            h_ie_h: ch.h_ie.adjoint(),
            h_ab_h: ch.h_ab.adjoint(),
            h_ae_h,
            p_an,
            b,
            b_inv,
            log2_det_b,
            reflect: true,
        })
    }

    /// Same model with every IRS-reflected summand removed, i.e. `Theta = 0`.
    /// `P_AN` and `B` are unchanged.
    pub fn without_reflection(&self) -> Self {
        SignalModel {
            irs_bob: 0.0,
            irs_eve: 0.0,
            reflect: false,
            ..self.clone()
        }
    }

    pub fn reflects(&self) -> bool {
        self.reflect
    }

    /// `sqrt(g_AIB) H_IB^H Theta H_AI + sqrt(g_AB) H_AB^H` (unscaled `H_B`).
    pub fn composite_bob(&self, theta: &CVec) -> CMat {
        scale_cols(&self.h_ib_h, theta).scale(self.irs_bob) * &self.h_ai
            + self.h_ab_h.scale(self.direct_bob)
    }

    /// `sqrt(g_AIE) H_IE^H Theta H_AI + sqrt(g_AE) H_AE^H` (unscaled `H_E`).
    pub fn composite_eve(&self, theta: &CVec) -> CMat {
        scale_cols(&self.h_ie_h, theta).scale(self.irs_eve) * &self.h_ai
            + self.h_ae_h.scale(self.direct_eve)
    }

    /// Receive vectors of both streams at both users, computed without
    /// forming any `K x N` composite.
    pub fn stream_outputs(&self, prec: &Precoders) -> StreamOutputs {
        let th = &prec.theta;
        let g1 = (&self.h_ai * &prec.v1).component_mul(th);
        let g2 = (&self.h_ai * &prec.v2).component_mul(th);
        let at = |amp: f64, irs: f64, h_i: &CMat, dir: f64, h_d: &CMat, g: &CVec, v: &CVec| {
            ((h_i * g).scale(irs) + (h_d * v).scale(dir)).scale(amp)
        };
        StreamOutputs {
            t_b1: at(self.amp1, self.irs_bob, &self.h_ib_h, self.direct_bob, &self.h_ab_h, &g1, &prec.v1),
            t_b2: at(self.amp2, self.irs_bob, &self.h_ib_h, self.direct_bob, &self.h_ab_h, &g2, &prec.v2),
            t_e1: at(self.amp1, self.irs_eve, &self.h_ie_h, self.direct_eve, &self.h_ae_h, &g1, &prec.v1),
            t_e2: at(self.amp2, self.irs_eve, &self.h_ie_h, self.direct_eve, &self.h_ae_h, &g2, &prec.v2),
        }
    }

    pub fn rates_from_outputs(&self, out: &StreamOutputs) -> (f64, f64) {
        let rb = log2_det_gram(&identity(self.k), &out.t_b1, &out.t_b2);
        let re = log2_det_gram(&self.b, &out.t_e1, &out.t_e2) - self.log2_det_b;
        (rb.max(0.0), re.max(0.0))
    }

    pub fn rate_bob(&self, prec: &Precoders) -> f64 {
        self.rates_from_outputs(&self.stream_outputs(prec)).0
    }

    pub fn rate_eve(&self, prec: &Precoders) -> f64 {
        self.rates_from_outputs(&self.stream_outputs(prec)).1
    }

    /// `max(0, R_B - R_E)`.
    pub fn secrecy_rate(&self, prec: &Precoders) -> f64 {
        let (rb, re) = self.rates_from_outputs(&self.stream_outputs(prec));
        (rb - re).max(0.0)
    }

    /// `T`, `h` and `g` blocks that make every receive vector affine in the
    /// reflection vector: `H_X v = T_X theta + h_X`.
    pub fn phase_blocks(&self, v1: &CVec, v2: &CVec) -> PhaseBlocks {
        let g1 = &self.h_ai * v1;
        let g2 = &self.h_ai * v2;
        PhaseBlocks {
            t_b1: scale_cols(&self.h_ib_h, &g1).scale(self.amp1 * self.irs_bob),
            t_b2: scale_cols(&self.h_ib_h, &g2).scale(self.amp2 * self.irs_bob),
            t_e1: scale_cols(&self.h_ie_h, &g1).scale(self.amp1 * self.irs_eve),
            t_e2: scale_cols(&self.h_ie_h, &g2).scale(self.amp2 * self.irs_eve),
            h_b1: (&self.h_ab_h * v1).scale(self.amp1 * self.direct_bob),
            h_b2: (&self.h_ab_h * v2).scale(self.amp2 * self.direct_bob),
            h_e1: (&self.h_ae_h * v1).scale(self.amp1 * self.direct_eve),
            h_e2: (&self.h_ae_h * v2).scale(self.amp2 * self.direct_eve),
            g1,
            g2,
            b_inv: self.b_inv.clone(),
        }
    }

    /// Full snapshot of every derived block at `prec`.
    pub fn derive(&self, prec: &Precoders) -> DerivedModel {
        let h_b = self.composite_bob(&prec.theta);
        let h_e = self.composite_eve(&prec.theta);
        DerivedModel {
            p_an: self.p_an.clone(),
            b: self.b.clone(),
            b_inv: self.b_inv.clone(),
            h_b1: h_b.scale(self.amp1),
            h_b2: h_b.scale(self.amp2),
            h_e1: h_e.scale(self.amp1),
            h_e2: h_e.scale(self.amp2),
            h_b,
            h_e,
            phase: self.phase_blocks(&prec.v1, &prec.v2),
        }
    }
}

/// The evaluators accept `beta1 + beta2 = 1` (no artificial noise), which a
/// full [`SystemConfig::validate`] rejects.
fn check_power_split(cfg: &SystemConfig) -> Result<()> {
    for (key, b) in [("beta1", cfg.beta1), ("beta2", cfg.beta2)] {
        if !(b >= 0.0 && b <= 1.0) {
            return Err(Error::config(key, format!("must lie in [0, 1], got {b}")));
        }
    }
    if cfg.beta1 + cfg.beta2 > 1.0 + 1e-12 {
        return Err(Error::config("beta2", "beta1 + beta2 must not exceed 1"));
    }
    for (key, v) in [("Ps_dbm", cfg.ps_dbm), ("sigma2_dbm", cfg.sigma2_dbm)] {
        if !v.is_finite() {
            return Err(Error::config(key, "must be finite"));
        }
    }
    Ok(())
}

/// `log2 det(base + x x^H + y y^H)` for Hermitian positive-definite `base`.
fn log2_det_gram(base: &CMat, x: &CVec, y: &CVec) -> f64 {
    let a = base + x * x.adjoint() + y * y.adjoint();
    // base >= I, so the factorization only fails on NaN input.
    log2_det_hpd(&a).unwrap_or(f64::NAN)
}

/// Blocks of the reflection-vector parametrization of the four receive
/// vectors (`K x M` matrices `T`, `K`-vectors `h`, `M`-vectors `g`), plus
/// `B^{-1}` for Eve's weighting.
#[derive(Debug, Clone)]
pub struct PhaseBlocks {
    pub t_b1: CMat,
    pub t_b2: CMat,
    pub t_e1: CMat,
    pub t_e2: CMat,
    pub h_b1: CVec,
    pub h_b2: CVec,
    pub h_e1: CVec,
    pub h_e2: CVec,
    pub g1: CVec,
    pub g2: CVec,
    pub b_inv: CMat,
}

impl PhaseBlocks {
    pub fn m(&self) -> usize {
        self.t_b1.ncols()
    }

    /// `(T_B1 theta + h_B1, T_B2 theta + h_B2, T_E1 theta + h_E1, T_E2 theta + h_E2)`.
    pub fn outputs(&self, theta: &CVec) -> StreamOutputs {
        StreamOutputs {
            t_b1: &self.t_b1 * theta + &self.h_b1,
            t_b2: &self.t_b2 * theta + &self.h_b2,
            t_e1: &self.t_e1 * theta + &self.h_e1,
            t_e2: &self.t_e2 * theta + &self.h_e2,
        }
    }
}

/// Every intermediate quantity of the signal model at one set of precoders.
#[derive(Debug, Clone)]
pub struct DerivedModel {
    pub p_an: CMat,
    /// `I_K + (beta3 Ps g_AE / sigma^2) H_AE^H P_AN P_AN^H H_AE`.
    pub b: CMat,
    pub b_inv: CMat,
    /// Unscaled composites `H_B`, `H_E`.
    pub h_b: CMat,
    pub h_e: CMat,
    pub h_b1: CMat,
    pub h_b2: CMat,
    pub h_e1: CMat,
    pub h_e2: CMat,
    pub phase: PhaseBlocks,
}

/// Builds a [`SignalModel`] and snapshots it at `prec`.
pub fn derived_model(cfg: &SystemConfig, ch: &ChannelSet, prec: &Precoders) -> Result<DerivedModel> {
    Ok(SignalModel::new(cfg, ch)?.derive(prec))
}

/// `log2 det(I_K + H_B1 v1 v1^H H_B1^H + H_B2 v2 v2^H H_B2^H)`.
pub fn rate_bob(dm: &DerivedModel, prec: &Precoders) -> f64 {
    let k = dm.b.nrows();
    let x = &dm.h_b1 * &prec.v1;
    let y = &dm.h_b2 * &prec.v2;
    log2_det_gram(&identity(k), &x, &y).max(0.0)
}

/// `log2 det(I_K + (H_E1 v1 v1^H H_E1^H + H_E2 v2 v2^H H_E2^H) B^{-1})`,
/// evaluated as `log2 det(B + ...) - log2 det(B)`.
pub fn rate_eve(dm: &DerivedModel, prec: &Precoders) -> f64 {
    let x = &dm.h_e1 * &prec.v1;
    let y = &dm.h_e2 * &prec.v2;
    let base = log2_det_hpd(&dm.b).unwrap_or(f64::NAN);
    (log2_det_gram(&dm.b, &x, &y) - base).max(0.0)
}

pub fn secrecy_rate(dm: &DerivedModel, prec: &Precoders) -> f64 {
    (rate_bob(dm, prec) - rate_eve(dm, prec)).max(0.0)
}

/// All-ones reflection vector (zero phase on every element).
pub fn zero_phase(m: usize) -> CVec {
    DVector::from_element(m, ONE)
}

/// Serde adapter storing a complex vector as `[[re, im], ...]`.
pub mod cvec_serde {
    use super::CVec;
    use crate::linalg::c;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVec::from_iterator(pairs.len(), pairs.iter().map(|p| c(p[0], p[1]))))
    }
}

/// Serde adapter storing a complex matrix as rows of `[re, im]` pairs.
pub mod cmat_serde {
    use super::CMat;
    use crate::linalg::c;
    use serde::{de::Error as _, Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = m
            .row_iter()
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("ragged matrix"));
        }
        Ok(CMat::from_fn(nrows, ncols, |i, j| c(rows[i][j][0], rows[i][j][1])))
    }
}
