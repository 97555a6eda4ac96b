//! Per-node regression metrics, per simulation and averaged over a test set.
//!
//! `SS_tot` uses deviations from the mean of the *actual* values, the usual
//! coefficient of determination.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::mesh::Graph;
use crate::numerics::{Mode, Prng};
use crate::train::Regressor;
use crate::{Error, Result};

fn check_lengths(actual: &[f64], predicted: &[f64], min: usize) -> Result<()> {
    if actual.len() != predicted.len() {
        return Err(Error::Config(format!(
            "length mismatch: {} actual vs {} predicted",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.len() < min {
        return Err(Error::Config(format!("need at least {min} values, got {}", actual.len())));
    }
    Ok(())
}

/// `(1/n) sum (predicted - actual)^2`.
pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    check_lengths(actual, predicted, 1)?;
    let ss: f64 = actual.iter().zip(predicted).map(|(y, p)| (p - y) * (p - y)).sum();
    Ok(ss / actual.len() as f64)
}

pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    Ok(libm::sqrt(mse(actual, predicted)?))
}

/// Coefficient of determination. When the actual values are constant
/// (`SS_tot == 0`) the score is 1 for a perfect fit and `-inf` otherwise,
/// with `degenerate` set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RSquared {
    pub value: f64,
    pub degenerate: bool,
}

pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<RSquared> {
    check_lengths(actual, predicted, 2)?;
    let mean = actual.iter().sum::<f64>() / actual.len() as f64;
    let ss_res: f64 = actual.iter().zip(predicted).map(|(y, p)| (p - y) * (p - y)).sum();
    let ss_tot: f64 = actual.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        let value = if ss_res == 0.0 { 1.0 } else { f64::NEG_INFINITY };
        return Ok(RSquared { value, degenerate: true });
    }
    Ok(RSquared { value: 1.0 - ss_res / ss_tot, degenerate: false })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimMetrics {
    pub sim_id: String,
    pub mse: f64,
    pub rmse: f64,
    pub r2: RSquared,
}

impl SimMetrics {
    pub fn compute(sim_id: &str, actual: &[f64], predicted: &[f64]) -> Result<Self> {
        let mse = mse(actual, predicted)?;
        Ok(SimMetrics { sim_id: sim_id.into(), mse, rmse: libm::sqrt(mse), r2: r2(actual, predicted)? })
    }
}

/// Per-simulation metrics with arithmetic-mean aggregates.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_sim: Vec<SimMetrics>,
    pub mean_mse: f64,
    pub mean_rmse: f64,
    pub mean_r2: f64,
}

impl EvalReport {
    pub fn from_sims(per_sim: Vec<SimMetrics>) -> Result<Self> {
        if per_sim.is_empty() {
            return Err(Error::Config("no simulations to report".into()));
        }
        let n = per_sim.len() as f64;
        let mean_mse = per_sim.iter().map(|s| s.mse).sum::<f64>() / n;
        let mean_rmse = per_sim.iter().map(|s| s.rmse).sum::<f64>() / n;
        let mean_r2 = per_sim.iter().map(|s| s.r2.value).sum::<f64>() / n;
        Ok(EvalReport { per_sim, mean_mse, mean_rmse, mean_r2 })
    }

    pub fn any_degenerate(&self) -> bool {
        self.per_sim.iter().any(|s| s.r2.degenerate)
    }
}

/// Eval-mode predictions for each `(sim_id, graph)` scored against the
/// graph targets.
pub fn evaluate<'a, M: Regressor>(
    model: &M,
    graphs: impl IntoIterator<Item = (&'a str, &'a Graph)>,
) -> Result<EvalReport> {
    let mut rng = Prng::new(0);
    let mut per_sim = Vec::new();
    for (id, graph) in graphs {
        let target = graph.target().ok_or(Error::MissingTarget)?;
        let pred = model.predict(graph, Mode::Eval, &mut rng)?;
        per_sim.push(SimMetrics::compute(id, target.data(), pred.data())?);
    }
    EvalReport::from_sims(per_sim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        assert_eq!(mse(&[1.0, 3.0], &[1.0, 3.0]).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(mse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
    }

    #[test]
    fn r2_hand_values() {
        assert_eq!(r2(&[1.0, 3.0], &[1.0, 3.0]).unwrap().value, 1.0);
        assert_eq!(r2(&[1.0, 3.0], &[2.0, 2.0]).unwrap().value, 0.0);
        let y = [0.5, 2.0, 7.25, -1.0, 3.3];
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_eq!(r2(&y, &[mean; 5]).unwrap().value, 0.0);
    }

    #[test]
    fn r2_is_not_symmetric() {
        // Swapped, the "actual" values [2, 2] are constant.
        let swapped = r2(&[2.0, 2.0], &[1.0, 3.0]).unwrap();
        assert!(swapped.degenerate);
        assert_eq!(swapped.value, f64::NEG_INFINITY);
        assert_ne!(swapped, r2(&[1.0, 3.0], &[2.0, 2.0]).unwrap());
    }

    #[test]
    fn degenerate_perfect() {
        let r = r2(&[4.0, 4.0], &[4.0, 4.0]).unwrap();
        assert_eq!(r, RSquared { value: 1.0, degenerate: true });
    }

    #[test]
    fn errors() {
        assert!(mse(&[], &[]).is_err());
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(r2(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn report_aggregates() {
        let a = SimMetrics::compute("a", &[1.0, 3.0], &[2.0, 2.0]).unwrap();
        let single = EvalReport::from_sims(alloc::vec![a.clone()]).unwrap();
        assert_eq!((single.mean_rmse, single.mean_r2), (a.rmse, a.r2.value));
        let b = SimMetrics::compute("b", &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]).unwrap();
        let both = EvalReport::from_sims(alloc::vec![a, b]).unwrap();
        assert_eq!(both.mean_rmse, 0.5);
        assert_eq!(both.mean_r2, 0.5);
        assert!(EvalReport::from_sims(alloc::vec![]).is_err());
    }
}
