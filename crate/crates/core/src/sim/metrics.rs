use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What happened in one communication round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    /// 1-based.
    pub round_index: usize,
    pub test_loss: f64,
    pub test_accuracy: f64,
    /// Megabytes (10^6 bytes) delivered to the server this round.
    pub comm_mb: f64,
    pub num_selected: usize,
    pub num_final_received: usize,
    /// Interrupted users whose latest intermediate was aggregated instead.
    pub num_intermediate_used: usize,
    pub num_interrupted: usize,
    pub num_cancelled_transmissions: usize,
}

/// Mean of `comm_mb` over rounds.
pub fn average_comm_overhead(metrics: &[RoundMetrics]) -> Result<f64> {
    if metrics.is_empty() {
        return Err(Error::Empty("no round metrics"));
    }
    Ok(metrics.iter().map(|m| m.comm_mb).sum::<f64>() / metrics.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round(mb: f64) -> RoundMetrics {
        RoundMetrics {
            round_index: 1,
            test_loss: 0.0,
            test_accuracy: 0.0,
            comm_mb: mb,
            num_selected: 0,
            num_final_received: 0,
            num_intermediate_used: 0,
            num_interrupted: 0,
            num_cancelled_transmissions: 0,
        }
    }

    #[test]
    fn mean_overhead() {
        assert_eq!(average_comm_overhead(&[round(2.0), round(2.0), round(2.0)]).unwrap(), 2.0);
        assert_eq!(average_comm_overhead(&[round(1.0), round(2.0), round(3.0)]).unwrap(), 2.0);
        assert!(average_comm_overhead(&[]).is_err());
    }
}
