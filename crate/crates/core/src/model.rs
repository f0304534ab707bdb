//! System configuration, planar node geometry, ULA steering vectors and the
//! line-of-sight channel set.
//!
//! Alice sits at the origin. Every other node is placed from a distance and
//! a counter-clockwise angle measured from the +x axis, and every array (the
//! IRS included) is a half-wavelength ULA aligned with the x axis. The
//! steering angle an array sees for a link is the angle between its axis and
//! the direction towards the peer node, so it lies in `[0, pi]` and the
//! receive-side angle of a link is always `pi` minus the transmit-side one.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cis, CMat, CVec};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Element spacing of every array, in wavelengths.
pub const ELEMENT_SPACING: f64 = 0.5;

/// Closest a receiver may sit to the IRS before the cascaded gain blows up.
pub const MIN_LINK_DISTANCE: f64 = 1e-9;

/// All scalar parameters of one simulation point.
///
/// Field names in the serialized form follow the usual notation of the
/// model (`N`, `M`, `K`, `d_AI`, `theta_AB`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    /// Transmit antennas at Alice.
    #[serde(rename = "N")]
    pub n: usize,
    /// IRS elements.
    #[serde(rename = "M")]
    pub m: usize,
    /// Receive antennas at Bob and at Eve.
    #[serde(rename = "K")]
    pub k: usize,
    /// Total transmit power, dBm.
    #[serde(rename = "Ps_dbm")]
    pub ps_dbm: f64,
    /// Noise power per receive antenna, dBm.
    pub sigma2_dbm: f64,
    /// Power fraction of confidential stream 1.
    pub beta1: f64,
    /// Power fraction of confidential stream 2.
    pub beta2: f64,
    pub carrier_hz: f64,
    #[serde(rename = "d_AI")]
    pub d_ai: f64,
    #[serde(rename = "d_AB")]
    pub d_ab: f64,
    #[serde(rename = "d_AE")]
    pub d_ae: f64,
    /// Departure angles at Alice, radians in `[0, pi)`.
    #[serde(rename = "theta_AI")]
    pub theta_ai: f64,
    #[serde(rename = "theta_AB")]
    pub theta_ab: f64,
    #[serde(rename = "theta_AE")]
    pub theta_ae: f64,
    /// Outer stopping threshold on the secrecy-rate increment (bits/s/Hz).
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n: 16,
            m: 20,
            k: 4,
            ps_dbm: 30.0,
            sigma2_dbm: -40.0,
            beta1: 0.4,
            beta2: 0.4,
            carrier_hz: DEFAULT_CARRIER_HZ,
            d_ai: 10.0,
            d_ab: 100.0,
            d_ae: 50.0,
            theta_ai: PI / 6.0,
            theta_ab: 11.0 * PI / 36.0,
            theta_ae: PI / 3.0,
            epsilon: 1e-4,
            seed: 0,
        }
    }
}

/// Default carrier frequency.
pub const DEFAULT_CARRIER_HZ: f64 = 1.0e8;

impl SystemConfig {
    /// Checks every invariant and names the first offending key.
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [("N", self.n), ("M", self.m), ("K", self.k)] {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        let finite = [
            ("Ps_dbm", self.ps_dbm),
            ("sigma2_dbm", self.sigma2_dbm),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("carrier_hz", self.carrier_hz),
            ("d_AI", self.d_ai),
            ("d_AB", self.d_ab),
            ("d_AE", self.d_ae),
            ("theta_AI", self.theta_ai),
            ("theta_AB", self.theta_ab),
            ("theta_AE", self.theta_ae),
            ("epsilon", self.epsilon),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::config(key, format!("must be finite, got {v}")));
            }
        }
        for (key, d) in [("d_AI", self.d_ai), ("d_AB", self.d_ab), ("d_AE", self.d_ae)] {
            if d <= 0.0 {
                return Err(Error::config(key, format!("distance must be > 0, got {d}")));
            }
        }
        for (key, t) in [
            ("theta_AI", self.theta_ai),
            ("theta_AB", self.theta_ab),
            ("theta_AE", self.theta_ae),
        ] {
            if !(0.0..PI).contains(&t) {
                return Err(Error::config(key, format!("angle must lie in [0, pi), got {t}")));
            }
        }
        if self.beta1 < 0.0 {
            return Err(Error::config("beta1", "must be >= 0"));
        }
        if self.beta2 < 0.0 {
            return Err(Error::config("beta2", "must be >= 0"));
        }
        if self.beta1 + self.beta2 >= 1.0 {
            return Err(Error::config(
                "beta2",
                format!(
                    "beta1 + beta2 must be < 1, got {} + {} = {}",
                    self.beta1,
                    self.beta2,
                    self.beta1 + self.beta2
                ),
            ));
        }
        if self.carrier_hz <= 0.0 {
            return Err(Error::config("carrier_hz", "must be > 0"));
        }
        if self.epsilon <= 0.0 {
            return Err(Error::config("epsilon", "must be > 0"));
        }
        Ok(())
    }

    /// Power fraction left for artificial noise.
    pub fn beta_an(&self) -> f64 {
        1.0 - self.beta1 - self.beta2
    }

    pub fn ps_watts(&self) -> f64 {
        dbm_to_watts(self.ps_dbm)
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.sigma2_dbm)
    }
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

/// ULA response `[a]_i = exp(-j 2 pi (i-1) spacing cos(theta))`.
pub fn steering_vector(n: usize, theta: f64, spacing_over_lambda: f64) -> Result<CVec> {
    if n == 0 {
        return Err(Error::EmptyArray);
    }
    let step = -2.0 * PI * spacing_over_lambda * theta.cos();
    Ok(CVec::from_iterator(n, (0..n).map(|i| cis(step * i as f64))))
}

/// Free-space power gain `(c / (4 pi d f))^2`.
pub fn path_loss(distance: f64, frequency: f64) -> Result<f64> {
    if !(distance > 0.0 && frequency > 0.0) {
        return Err(Error::InvalidPathLoss {
            distance,
            frequency,
        });
    }
    let amp = SPEED_OF_LIGHT / (4.0 * PI * distance * frequency);
    Ok(amp * amp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn polar(r: f64, angle: f64) -> Self {
        Point {
            x: r * angle.cos(),
            y: r * angle.sin(),
        }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }
}

/// Distance plus the steering angles seen by the transmitting and the
/// receiving array of one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub distance: f64,
    pub departure: f64,
    pub arrival: f64,
}

impl Link {
    fn between(from: &Point, to: &Point) -> Link {
        let dx = to.x - from.x;
        let d = from.distance(to);
        let departure = (dx / d).clamp(-1.0, 1.0).acos();
        Link {
            distance: d,
            departure,
            arrival: PI - departure,
        }
    }

    fn from_alice(distance: f64, angle: f64) -> Link {
        Link {
            distance,
            departure: angle,
            arrival: PI - angle,
        }
    }
}

/// Node placement and per-link geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub alice: Point,
    pub irs: Point,
    pub bob: Point,
    pub eve: Point,
    pub ai: Link,
    pub ab: Link,
    pub ae: Link,
    pub ib: Link,
    pub ie: Link,
    /// Perpendicular distance from Eve to the line through Alice and the
    /// IRS. Equals the spacing of the two lines when that line is parallel
    /// to the Bob-Eve line.
    pub d_v: f64,
}

/// Geometry of the scenario in which the IRS slides along a line through
/// Alice drawn parallel to the Bob-Eve line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParallelLines {
    /// Angle between the Alice-Bob and Alice-Eve directions.
    pub theta_bae: f64,
    pub d_be: f64,
    /// Departure angle at Alice that makes the IRS line parallel to Bob-Eve.
    pub theta_ai: f64,
    /// Distance between the two parallel lines.
    pub d_v: f64,
    /// Distance along the IRS line from Alice to the foot of Eve.
    pub d_sa_e: f64,
    /// Distance along the IRS line from Alice to the foot of Bob.
    pub d_sa_b: f64,
}

pub fn parallel_lines(cfg: &SystemConfig) -> ParallelLines {
    let theta_bae = cfg.theta_ae - cfg.theta_ab;
    let d_be = (cfg.d_ab * cfg.d_ab + cfg.d_ae * cfg.d_ae
        - 2.0 * cfg.d_ab * cfg.d_ae * theta_bae.cos())
    .sqrt();
    let theta_ai = cfg.theta_ab - (cfg.d_ae / d_be * theta_bae.sin()).asin();
    let d_v = cfg.d_ae * (cfg.theta_ae - theta_ai).sin();
    ParallelLines {
        theta_bae,
        d_be,
        theta_ai,
        d_v,
        d_sa_e: (cfg.d_ae * cfg.d_ae - d_v * d_v).sqrt(),
        d_sa_b: (cfg.d_ab * cfg.d_ab - d_v * d_v).sqrt(),
    }
}

pub fn build_geometry(cfg: &SystemConfig) -> Result<Geometry> {
    cfg.validate()?;
    let alice = Point { x: 0.0, y: 0.0 };
    let irs = Point::polar(cfg.d_ai, cfg.theta_ai);
    let bob = Point::polar(cfg.d_ab, cfg.theta_ab);
    let eve = Point::polar(cfg.d_ae, cfg.theta_ae);
    for (name, p) in [("Bob", &bob), ("Eve", &eve)] {
        let d = irs.distance(p);
        if d < MIN_LINK_DISTANCE {
            return Err(Error::DegenerateGeometry(format!(
                "IRS coincides with {name} (distance {d:e} m)"
            )));
        }
    }
    Ok(Geometry {
        alice,
        irs,
        bob,
        eve,
        ai: Link::from_alice(cfg.d_ai, cfg.theta_ai),
        ab: Link::from_alice(cfg.d_ab, cfg.theta_ab),
        ae: Link::from_alice(cfg.d_ae, cfg.theta_ae),
        ib: Link::between(&irs, &bob),
        ie: Link::between(&irs, &eve),
        d_v: cfg.d_ae * (cfg.theta_ae - cfg.theta_ai).sin().abs(),
    })
}

/// The five channel matrices and four path-loss coefficients.
///
/// Shapes follow the received-signal model: `H_AI` is `M x N`; `H_AB`,
/// `H_AE` are `N x K` (used as `H^H`); `H_IB`, `H_IE` are `M x K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub h_ai: CMat,
    pub h_ab: CMat,
    pub h_ae: CMat,
    pub h_ib: CMat,
    pub h_ie: CMat,
    pub g_ab: f64,
    pub g_ae: f64,
    pub g_aib: f64,
    pub g_aie: f64,
}

impl ChannelSet {
    pub fn n(&self) -> usize {
        self.h_ai.ncols()
    }

    pub fn m(&self) -> usize {
        self.h_ai.nrows()
    }

    pub fn k(&self) -> usize {
        self.h_ab.ncols()
    }
}

fn los(rx: usize, rx_angle: f64, tx: usize, tx_angle: f64) -> Result<CMat> {
    let a_r = steering_vector(rx, rx_angle, ELEMENT_SPACING)?;
    let a_t = steering_vector(tx, tx_angle, ELEMENT_SPACING)?;
    Ok(&a_r * a_t.adjoint())
}

pub fn build_channels(cfg: &SystemConfig, geo: &Geometry) -> Result<ChannelSet> {
    let (n, m, k, f) = (cfg.n, cfg.m, cfg.k, cfg.carrier_hz);
    // H^H = a_rx a_tx^H for the Alice->user and IRS->user links.
    let h_ab = los(k, geo.ab.arrival, n, geo.ab.departure)?.adjoint();
    let h_ae = los(k, geo.ae.arrival, n, geo.ae.departure)?.adjoint();
    let h_ib = los(k, geo.ib.arrival, m, geo.ib.departure)?.adjoint();
    let h_ie = los(k, geo.ie.arrival, m, geo.ie.departure)?.adjoint();
    let h_ai = los(m, geo.ai.arrival, n, geo.ai.departure)?;
    let g_ai = path_loss(geo.ai.distance, f)?;
    Ok(ChannelSet {
        h_ai,
        h_ab,
        h_ae,
        h_ib,
        h_ie,
        g_ab: path_loss(geo.ab.distance, f)?,
        g_ae: path_loss(geo.ae.distance, f)?,
        g_aib: g_ai * path_loss(geo.ib.distance, f)?,
        g_aie: g_ai * path_loss(geo.ie.distance, f)?,
    })
}

/// Geometry and channels in one step.
pub fn build_system(cfg: &SystemConfig) -> Result<(Geometry, ChannelSet)> {
    let geo = build_geometry(cfg)?;
    let ch = build_channels(cfg, &geo)?;
    Ok((geo, ch))
}
