//! Virtual queue state tracking scaled cumulative violations.

use crate::error::Error;
use crate::linalg;
use crate::Result;

/// Virtual queue per constraint row, together with its lookahead companion.
///
/// `q` accumulates `gamma * [g_t(x_t)]_+`; `q_hat` is `q` plus one more scaled
/// violation term and is what the next proximal step weights. Updates are
/// functional — each step produces a fresh value — so a trace can store every
/// intermediate state and be replayed exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualQueue {
    q: Vec<f64>,
    q_hat: Vec<f64>,
}

impl VirtualQueue {
    /// The zero queue over `m` rows.
    pub fn zero(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid_input("VirtualQueue", "zero rows"));
        }
        Ok(VirtualQueue {
            q: vec![0.0; m],
            q_hat: vec![0.0; m],
        })
    }

    /// Number of rows.
    pub fn m(&self) -> usize {
        self.q.len()
    }

    /// Queue entries.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// Lookahead entries (`q` plus one extra scaled violation).
    pub fn q_hat(&self) -> &[f64] {
        &self.q_hat
    }

    /// Next state: `q' = q + gamma * viol`, `q_hat' = q' + gamma * hat_viol`.
    ///
    /// `viol` is the realized violation at the played point; `hat_viol` is the
    /// violation the caller wants weighted one step ahead (the same vector for
    /// the no-prediction engine, the lookahead point's violation for the
    /// predictive one).
    pub fn advance(&self, gamma: f64, viol: &[f64], hat_viol: &[f64]) -> Result<Self> {
        if viol.len() != self.q.len() || hat_viol.len() != self.q.len() {
            return Err(Error::DimensionMismatch {
                context: "VirtualQueue::advance",
                expected: self.q.len(),
                got: viol.len().max(hat_viol.len()),
            });
        }
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::invalid_parameter("gamma", format!("{gamma}")));
        }
        if viol.iter().chain(hat_viol).any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::invalid_input(
                "VirtualQueue::advance",
                "violations must be nonnegative and finite",
            ));
        }
        let q = linalg::axpy(&self.q, gamma, viol);
        let q_hat = linalg::axpy(&q, gamma, hat_viol);
        Ok(VirtualQueue { q, q_hat })
    }

    /// 1-norm of the queue.
    pub fn q_norm1(&self) -> f64 {
        linalg::norm1(&self.q)
    }
}
