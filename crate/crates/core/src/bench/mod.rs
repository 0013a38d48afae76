//! Monte Carlo risk harness: runs estimators on simulated data and tabulates
//! mean `l_p` losses against the true signal.

pub mod config;
pub mod run;
pub mod table;

pub use config::{BenchConfig, EstimatorSpec, ExperimentConfig, NoiseKind, NoiseSpec, SignalSpec};
pub use run::{
    mean_and_se, run_config, run_experiment, run_replications, summarize, EstimateOutcome,
    Replication, RiskRow, RiskTable, RunOptions,
};
pub use table::{read_table, read_table_from, write_table, write_table_to, HEADER};

use crate::error::{Error, Result};

/// `sum_i |a_i - b_i|^p` (the p-th power of the l_p distance).
pub fn lp_loss(a: &[f64], b: &[f64], p: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("lengths {} and {} differ", a.len(), b.len())));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Argument(format!("exponent {p} must be >= 1")));
    }
    let terms = a.iter().zip(b).map(|(x, y)| {
        let d = (x - y).abs();
        if p == 2.0 {
            d * d
        } else if p == 1.0 {
            d
        } else {
            d.powf(p)
        }
    });
    Ok(crate::scalar::stable_sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lp_examples() {
        assert_eq!(lp_loss(&[1.0, 2.0], &[1.0, 2.0], 1.5).unwrap(), 0.0);
        assert_eq!(lp_loss(&[0.0, 0.0], &[1.0, 1.0], 1.0).unwrap(), 2.0);
        assert_eq!(lp_loss(&[0.0, 0.0], &[3.0, 4.0], 2.0).unwrap(), 25.0);
        assert!(matches!(lp_loss(&[0.0], &[1.0, 2.0], 2.0), Err(Error::Dimension(_))));
        assert!(lp_loss(&[0.0], &[1.0], 0.5).is_err());
    }
}
