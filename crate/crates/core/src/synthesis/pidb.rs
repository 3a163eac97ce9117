use crate::model::{LinearFeedback, SignConvention};
use crate::numkit::Matrix;
use crate::{Error, Result};

/// Proportional, integral, derivative and barrier gains with the embedded
/// coordinates each one multiplies.
#[derive(Debug, Clone, PartialEq)]
pub struct PidbGains {
    pub kp: f64,
    pub ki: f64,
    pub kd: f64,
    pub kb: f64,
    /// Indices of the (P, I, D, B) coordinates in the embedded state.
    pub indices: [usize; 4],
    pub state_dim: usize,
}

impl PidbGains {
    /// Gains laid out for the cruise-control state `(v_l, v_f, D, e, v̇_f, z)`.
    pub fn cruise(kp: f64, ki: f64, kd: f64, kb: f64) -> Self {
        Self {
            kp,
            ki,
            kd,
            kb,
            indices: [1, 3, 4, 5],
            state_dim: 6,
        }
    }

    pub fn with_layout(mut self, indices: [usize; 4], state_dim: usize) -> Self {
        self.indices = indices;
        self.state_dim = state_dim;
        self
    }
}

/// Sparse single-row gain for `u = −(K_P x_p + K_I x_i + K_D x_d + K_B x_b)`.
pub fn assemble_pidb(gains: &PidbGains) -> Result<LinearFeedback> {
    let idx = gains.indices;
    if let Some(bad) = idx.iter().find(|&&i| i >= gains.state_dim) {
        return Err(Error::Dimension(format!(
            "PIDB index {bad} outside an embedded state of dimension {}",
            gains.state_dim
        )));
    }
    for i in 0..4 {
        for j in i + 1..4 {
            if idx[i] == idx[j] {
                return Err(Error::InvalidParameter(format!(
                    "PIDB terms {i} and {j} both use coordinate {}",
                    idx[i]
                )));
            }
        }
    }
    let mut k = Matrix::zeros(1, gains.state_dim);
    for (i, g) in idx.iter().zip([gains.kp, gains.ki, gains.kd, gains.kb]) {
        k[(0, *i)] = g;
    }
    Ok(LinearFeedback::new(k, SignConvention::Negative))
}
