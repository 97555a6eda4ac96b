//! CSV and table renderings of metrics and loss histories.

use std::fmt::Write as _;

use meshgnn_core::metrics::EvalReport;
use meshgnn_core::train::LossHistory;

/// `sim_id,mse,rmse,r2` rows followed by a `mean` summary row.
pub fn eval_csv(report: &EvalReport) -> String {
    let mut out = String::from("sim_id,mse,rmse,r2\n");
    for s in &report.per_sim {
        let _ = writeln!(out, "{},{},{},{}", s.sim_id, s.mse, s.rmse, s.r2.value);
    }
    let _ = writeln!(out, "mean,{},{},{}", report.mean_mse, report.mean_rmse, report.mean_r2);
    out
}

pub fn eval_table(report: &EvalReport) -> String {
    let mut out = format!("{:<12} {:>14} {:>12} {:>10}\n", "simulation", "mse", "rmse", "r2");
    let row = |out: &mut String, id: &str, mse: f64, rmse: f64, r2: f64| {
        let _ = writeln!(out, "{id:<12} {mse:>14.6} {rmse:>12.6} {r2:>10.4}");
    };
    for s in &report.per_sim {
        row(&mut out, &s.sim_id, s.mse, s.rmse, s.r2.value);
    }
    row(&mut out, "mean", report.mean_mse, report.mean_rmse, report.mean_r2);
    if report.any_degenerate() {
        out.push_str("note: some simulations have constant targets; their r2 is degenerate\n");
    }
    out
}

/// `epoch,train_mse,test_mse`, epochs numbered from 1; `test_mse` is empty
/// when there is no test set.
pub fn loss_history_csv(history: &LossHistory) -> String {
    let mut out = String::from("epoch,train_mse,test_mse\n");
    for (i, (train, test)) in history.train.iter().zip(&history.test).enumerate() {
        let _ = write!(out, "{},{},", i + 1, train);
        if let Some(t) = test {
            let _ = write!(out, "{t}");
        }
        out.push('\n');
    }
    out
}

/// One row of a model comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub model: String,
    pub rmse: f64,
    pub r2: f64,
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from("model,rmse,r2\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", r.model, r.rmse, r.r2);
    }
    out
}

pub fn benchmark_table(rows: &[BenchmarkRow]) -> String {
    let mut out = format!("{:<10} {:>12} {:>10}\n", "model", "test rmse", "test r2");
    for r in rows {
        let _ = writeln!(out, "{:<10} {:>12.4} {:>10.4}", r.model, r.rmse, r.r2);
    }
    out
}
