//! EXP3 over a fixed set of arms with binary losses.
//!
//! Pulls are two-phase: [`Exp3::pull`] samples an arm and snapshots the
//! probabilities it was drawn from; the loss arrives later through
//! [`Exp3::record_loss`], typically when the participant asks for the next
//! hint or the session ends. At most one pull is outstanding at a time.
//!
//! Weights are kept as logarithms so long loss streaks cannot underflow;
//! probabilities are computed with a max-shifted exponentiation.

use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BanditError {
    #[error("need at least two arms, got {0}")]
    TooFewArms(usize),
    #[error("horizon must be positive")]
    InvalidHorizon,
    #[error("step size must be positive and finite")]
    InvalidStepSize,
    #[error("a pull is already outstanding")]
    PullOutstanding,
    #[error("no outstanding pull to resolve")]
    NoOutstandingPull,
    #[error("outstanding pull is arm {pulled}, not arm {given}")]
    WrongArm { pulled: usize, given: usize },
    #[error("arm index {0} out of range")]
    ArmOutOfRange(usize),
}

/// Binary loss: 0 when the hint helped, 1 otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Loss {
    Zero,
    One,
}

impl Loss {
    pub fn value(self) -> f64 {
        match self {
            Loss::Zero => 0.0,
            Loss::One => 1.0,
        }
    }
}

impl From<Loss> for u8 {
    fn from(l: Loss) -> u8 {
        match l {
            Loss::Zero => 0,
            Loss::One => 1,
        }
    }
}

impl TryFrom<u8> for Loss {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Loss::Zero),
            1 => Ok(Loss::One),
            other => Err(format!("loss must be 0 or 1, got {other}")),
        }
    }
}

impl From<bool> for Loss {
    /// `true` means the pull failed.
    fn from(failed: bool) -> Self {
        if failed {
            Loss::One
        } else {
            Loss::Zero
        }
    }
}

/// `sqrt(2 ln k / (T k))`.
pub fn step_size(arms: usize, horizon: u32) -> f64 {
    let k = arms as f64;
    (2.0 * k.ln() / (f64::from(horizon) * k)).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PullRecord {
    /// 1-based pull index.
    pub t: u64,
    pub arm: usize,
    pub probs: Vec<f64>,
    pub loss: Option<Loss>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3 {
    eta: f64,
    log_weights: Vec<f64>,
    resolved: u64,
    history: Vec<PullRecord>,
}

impl Exp3 {
    /// Unit weights and the step size tuned for `horizon` pulls.
    pub fn new(arms: usize, horizon: u32) -> Result<Self, BanditError> {
        if horizon == 0 {
            return Err(BanditError::InvalidHorizon);
        }
        Self::with_step_size(arms, step_size(arms, horizon))
    }

    pub fn with_step_size(arms: usize, eta: f64) -> Result<Self, BanditError> {
        if arms < 2 {
            return Err(BanditError::TooFewArms(arms));
        }
        if !(eta.is_finite() && eta > 0.0) {
            return Err(BanditError::InvalidStepSize);
        }
        Ok(Self {
            eta,
            log_weights: vec![0.0; arms],
            resolved: 0,
            history: Vec::new(),
        })
    }

    pub fn arms(&self) -> usize {
        self.log_weights.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Number of resolved pulls.
    pub fn t(&self) -> u64 {
        self.resolved
    }

    pub fn history(&self) -> &[PullRecord] {
        &self.history
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Raw weights; may underflow to zero after long loss streaks even
    /// though the log-weights stay finite.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = self.log_weights.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = shifted.iter().sum();
        shifted.into_iter().map(|w| w / sum).collect()
    }

    pub fn outstanding(&self) -> Option<&PullRecord> {
        self.history.last().filter(|p| p.loss.is_none())
    }

    /// Draws an arm from the current probabilities without recording it.
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let all = vec![true; self.arms()];
        self.sample_among(rng, &all).expect("every arm allowed")
    }

    /// Draws from the probabilities renormalized over `allowed` arms. One
    /// uniform variate is consumed per call.
    ///
    /// The renormalization happens in log space, so allowed arms whose
    /// probability underflowed next to a disallowed dominant arm can still
    /// be drawn.
    pub fn sample_among(&self, rng: &mut impl Rng, allowed: &[bool]) -> Option<usize> {
        let u: f64 = rng.random();
        let max = self
            .log_weights
            .iter()
            .zip(allowed)
            .filter(|(_, a)| **a)
            .map(|(l, _)| *l)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return None;
        }
        let shifted: Vec<f64> = self
            .log_weights
            .iter()
            .zip(allowed)
            .map(|(l, a)| if *a { (l - max).exp() } else { 0.0 })
            .collect();
        let sum: f64 = shifted.iter().sum();
        let mut acc = 0.0;
        let mut last = None;
        for (i, w) in shifted.iter().enumerate() {
            if !allowed[i] {
                continue;
            }
            acc += w / sum;
            last = Some(i);
            if u < acc {
                return Some(i);
            }
        }
        last
    }

    /// Marks `arm` as pulled, snapshotting the current probabilities.
    /// Returns the 1-based pull index.
    pub fn begin_pull(&mut self, arm: usize) -> Result<u64, BanditError> {
        if arm >= self.arms() {
            return Err(BanditError::ArmOutOfRange(arm));
        }
        if self.outstanding().is_some() {
            return Err(BanditError::PullOutstanding);
        }
        let t = self.resolved + 1;
        self.history.push(PullRecord {
            t,
            arm,
            probs: self.probabilities(),
            loss: None,
        });
        Ok(t)
    }

    /// Samples an arm and marks it pulled.
    pub fn pull(&mut self, rng: &mut impl Rng) -> Result<usize, BanditError> {
        if self.outstanding().is_some() {
            return Err(BanditError::PullOutstanding);
        }
        let arm = self.sample(rng);
        self.begin_pull(arm)?;
        Ok(arm)
    }

    /// Resolves the outstanding pull: the pulled arm's weight is multiplied
    /// by `exp(-eta * loss / p)` where `p` is its probability at pull time.
    pub fn record_loss(&mut self, arm: usize, loss: Loss) -> Result<(), BanditError> {
        let eta = self.eta;
        let pull = self
            .history
            .last_mut()
            .filter(|p| p.loss.is_none())
            .ok_or(BanditError::NoOutstandingPull)?;
        if pull.arm != arm {
            return Err(BanditError::WrongArm {
                pulled: pull.arm,
                given: arm,
            });
        }
        pull.loss = Some(loss);
        let p = pull.probs[arm];
        // A forced pull of an arm whose probability underflowed to zero
        // would otherwise send its log-weight to -inf.
        self.log_weights[arm] = (self.log_weights[arm] - eta * loss.value() / p).max(f64::MIN);
        self.resolved += 1;
        Ok(())
    }

    /// Serializable view with arm labels.
    pub fn snapshot<L: ToString>(&self, label: impl Fn(usize) -> L) -> BanditSnapshot {
        BanditSnapshot {
            arms: (0..self.arms()).map(|i| label(i).to_string()).collect(),
            eta: self.eta,
            weights: self.weights(),
            log_weights: self.log_weights.clone(),
            probabilities: self.probabilities(),
            pulls: self
                .history
                .iter()
                .map(|p| PullSnapshot {
                    t: p.t,
                    arm: label(p.arm).to_string(),
                    probs: p.probs.clone(),
                    loss: p.loss,
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullSnapshot {
    pub t: u64,
    pub arm: String,
    pub probs: Vec<f64>,
    /// `null` for a pull not yet resolved.
    pub loss: Option<Loss>,
}

/// JSON form of the bandit stored in session records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditSnapshot {
    /// Arm labels in index order.
    pub arms: Vec<String>,
    pub eta: f64,
    pub weights: Vec<f64>,
    pub log_weights: Vec<f64>,
    /// Normalized weights.
    pub probabilities: Vec<f64>,
    pub pulls: Vec<PullSnapshot>,
}
