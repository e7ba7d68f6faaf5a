//! Flat-fading uplink model: per-robot channel gains, Shannon capacity with
//! unit bandwidth and unit noise, and the power adaptation needed to meet a
//! rate target under a per-robot power cap.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{RobotId, POWER_TOLERANCE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

impl ChannelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Rayleigh => "rayleigh",
        }
    }
}

impl FromStr for ChannelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelKind::Awgn),
            "rayleigh" => Ok(ChannelKind::Rayleigh),
            other => Err(format!(
                "unknown channel kind `{other}` (expected awgn | rayleigh)"
            )),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("nominal SNR must be positive and finite, got {0}")]
    Snr(f64),
    #[error("rate target must be positive and finite, got {0}")]
    Rate(f64),
    #[error("power margin must be non-negative, got {0}")]
    Margin(f64),
}

/// `log2(1 + alpha * p)`.
pub fn capacity(alpha: f64, p: f64) -> f64 {
    (alpha * p).ln_1p() / std::f64::consts::LN_2
}

/// Smallest power with `capacity(alpha, p) >= rate`; infinite when the gain
/// is zero and the rate positive.
pub fn required_power(alpha: f64, rate: f64) -> f64 {
    snr_threshold_power(alpha, rate.exp2() - 1.0)
}

fn snr_threshold_power(alpha: f64, threshold: f64) -> f64 {
    if threshold <= 0.0 {
        0.0
    } else if alpha <= 0.0 {
        f64::INFINITY
    } else {
        threshold / alpha
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    /// Linear SNR at the reference power for unit gain.
    pub nominal_snr: f64,
    /// Spectral efficiency every transmitting robot must sustain.
    pub rate_target: f64,
    /// Relative rate margin applied on top of `rate_target`.
    pub margin: f64,
    /// `2^(rate_target * (1 + margin)) - 1`, kept exact at the reference point.
    threshold: f64,
}

impl ChannelModel {
    pub fn new(
        kind: ChannelKind,
        nominal_snr: f64,
        rate_target: f64,
    ) -> Result<Self, ChannelError> {
        Self::with_margin(kind, nominal_snr, rate_target, 0.0)
    }

    pub fn with_margin(
        kind: ChannelKind,
        nominal_snr: f64,
        rate_target: f64,
        margin: f64,
    ) -> Result<Self, ChannelError> {
        if !(nominal_snr.is_finite() && nominal_snr > 0.0) {
            return Err(ChannelError::Snr(nominal_snr));
        }
        if !(rate_target.is_finite() && rate_target > 0.0) {
            return Err(ChannelError::Rate(rate_target));
        }
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(ChannelError::Margin(margin));
        }
        let reference_rate = nominal_snr.ln_1p() / std::f64::consts::LN_2;
        let effective = rate_target * (1.0 + margin);
        // Snap to the nominal SNR so the reference power comes out exact.
        let threshold =
            if margin == 0.0 && (effective - reference_rate).abs() <= 1e-12 * reference_rate {
                nominal_snr
            } else {
                effective.exp2() - 1.0
            };
        Ok(ChannelModel {
            kind,
            nominal_snr,
            rate_target,
            margin,
            threshold,
        })
    }

    /// Rate target equal to the capacity at the nominal SNR, so the unit-gain
    /// reference power is exactly `nominal_snr`.
    pub fn at_reference(kind: ChannelKind, nominal_snr: f64) -> Result<Self, ChannelError> {
        Self::new(
            kind,
            nominal_snr,
            nominal_snr.ln_1p() / std::f64::consts::LN_2,
        )
    }

    pub fn from_snr_db(kind: ChannelKind, snr_db: f64) -> Result<Self, ChannelError> {
        Self::at_reference(kind, 10f64.powf(snr_db / 10.0))
    }

    /// Power that meets the target at unit gain.
    pub fn reference_power(&self) -> f64 {
        self.threshold
    }

    pub fn required_power(&self, alpha: f64) -> f64 {
        snr_threshold_power(alpha, self.threshold)
    }

    pub fn draw<R: Rng + ?Sized>(&self, n_robots: usize, rng: &mut R) -> ChannelDraw {
        let gains = match self.kind {
            ChannelKind::Awgn => vec![1.0; n_robots],
            ChannelKind::Rayleigh => (0..n_robots).map(|_| Exp1.sample(rng)).collect(),
        };
        ChannelDraw { gains }
    }

    /// `E[min(required_power(alpha), cap)]` over the gain distribution.
    pub fn mean_truncated_power(&self, cap: f64) -> f64 {
        let t = self.threshold;
        match self.kind {
            ChannelKind::Awgn => t.min(cap),
            ChannelKind::Rayleigh => {
                if cap <= 0.0 {
                    return 0.0;
                }
                // alpha ~ Exp(1): cap * P(alpha < t/cap) + t * E1(t/cap).
                let x = t / cap;
                cap * (-(-x).exp_m1()) + t * exp_integral_e1(x)
            }
        }
    }
}

/// Exponential integral `E1(x) = int_x^inf e^-t / t dt` for `x > 0`.
pub fn exp_integral_e1(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_9;
    assert!(x > 0.0, "E1 needs x > 0");
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 1..200 {
            term *= -x / k as f64;
            let delta = term / k as f64;
            sum += delta;
            if delta.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER - x.ln() - sum
    } else {
        // Modified Lentz on the continued fraction for E1.
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        h * (-x).exp()
    }
}

/// Channel gains of all robots for one task.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub gains: Vec<f64>,
}

impl ChannelDraw {
    pub fn awgn(n_robots: usize) -> Self {
        ChannelDraw {
            gains: vec![1.0; n_robots],
        }
    }
}

/// Robots whose required power exceeds their cap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Infeasible {
    pub robots: Vec<RobotId>,
}

/// Adapted transmit powers for every member of `subset`, or the members in
/// capacity outage.
pub fn feasible_subset<'a>(
    draw: &ChannelDraw,
    subset: impl IntoIterator<Item = &'a RobotId>,
    model: &ChannelModel,
    caps: &[f64],
) -> Result<BTreeMap<RobotId, f64>, Infeasible> {
    let mut powers = BTreeMap::new();
    let mut outage = Vec::new();
    for &robot in subset {
        let need = model.required_power(draw.gains[robot]);
        let cap = caps[robot];
        if need <= cap * (1.0 + POWER_TOLERANCE) {
            powers.insert(robot, need.min(cap));
        } else {
            outage.push(robot);
        }
    }
    if outage.is_empty() {
        Ok(powers)
    } else {
        Err(Infeasible { robots: outage })
    }
}
