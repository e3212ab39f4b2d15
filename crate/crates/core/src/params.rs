use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Tail weight tolerated by every truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Loss fraction for an attenuation given in dB.
pub fn db_to_gamma(db: f64) -> f64 {
    1.0 - 10f64.powf(-db / 10.0)
}

/// Per-segment loss when a total loss `gamma_total` is split into `segments`
/// equal pieces.
pub fn segment_gamma(gamma_total: f64, segments: u32) -> f64 {
    assert!(segments >= 1);
    // 1 - (1-G)^(1/N) without cancellation for small G
    -((1.0 - gamma_total).ln() / segments as f64).exp_m1()
}

/// Numerical truncations. `None` means "use the default rule for this alpha".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cutoffs {
    pub fock_dim: Option<usize>,
    pub total_count: Option<usize>,
    pub loss_order: Option<usize>,
    pub tail_tol: f64,
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs {
            fock_dim: None,
            total_count: None,
            loss_order: None,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl Cutoffs {
    pub fn default_fock_dim(alpha: f64) -> usize {
        (alpha * alpha + 8.0 * alpha + 20.0).ceil() as usize
    }

    pub fn default_total_count(alpha: f64) -> usize {
        let a2 = alpha * alpha;
        (4.0 * a2 + 12.0 * (a2 + 1.0).sqrt() + 20.0).ceil() as usize
    }

    pub fn default_loss_order(gamma: f64, alpha: f64) -> usize {
        let mean = gamma * alpha * alpha;
        (mean + 10.0 * (mean + 1.0).sqrt() + 10.0).ceil() as usize
    }
}

/// Code order, amplitude and loss: the configuration every routine consumes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodeParams {
    pub order: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub cutoffs: Cutoffs,
}

impl CodeParams {
    /// Validated constructor for telecorrection work (`L >= 1`).
    pub fn new(order: u32, alpha: f64, gamma: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter("code order L must be >= 1".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::InvalidParameter(format!("loss must lie in [0,1), got {gamma}")));
        }
        Ok(CodeParams { order, alpha, gamma, cutoffs: Cutoffs::default() })
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        let mut c = Self::new(self.order, self.alpha, gamma)?;
        c.cutoffs = self.cutoffs;
        Ok(c)
    }

    pub fn with_cutoffs(mut self, cutoffs: Cutoffs) -> Self {
        self.cutoffs = cutoffs;
        self
    }

    /// Amplitude after loss, `sqrt(1-Gamma) alpha`; also the ancilla amplitude.
    pub fn damped_alpha(&self) -> f64 {
        (1.0 - self.gamma).sqrt() * self.alpha
    }

    /// Number of coherent components, `2L+2`.
    pub fn legs(&self) -> usize {
        2 * self.order as usize + 2
    }

    pub fn fock_dim(&self) -> usize {
        self.cutoffs.fock_dim.unwrap_or_else(|| Cutoffs::default_fock_dim(self.alpha))
    }

    pub fn total_count(&self) -> usize {
        self.cutoffs.total_count.unwrap_or_else(|| Cutoffs::default_total_count(self.alpha))
    }

    pub fn loss_order(&self) -> usize {
        self.cutoffs
            .loss_order
            .unwrap_or_else(|| Cutoffs::default_loss_order(self.gamma, self.alpha))
    }
}
