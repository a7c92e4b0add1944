use serde::{Deserialize, Serialize};

/// Final test errors of repeated training runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub label: String,
    pub param_count: usize,
    pub seeds: Vec<u64>,
    /// Mean per-function L² relative error of each trial.
    pub errors: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation; absent for a single trial.
    pub std: Option<f64>,
    pub final_losses: Vec<f64>,
    /// `(epoch, loss)` samples per trial.
    pub loss_history: Vec<Vec<(usize, f64)>>,
}

impl TrialReport {
    pub fn new(
        label: &str,
        param_count: usize,
        seeds: Vec<u64>,
        errors: Vec<f64>,
        final_losses: Vec<f64>,
        loss_history: Vec<Vec<(usize, f64)>>,
    ) -> Self {
        let n = errors.len() as f64;
        let mean = errors.iter().sum::<f64>() / n;
        let std = (errors.len() >= 2)
            .then(|| (errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0)).sqrt());
        Self {
            label: label.to_string(),
            param_count,
            seeds,
            errors,
            mean,
            std,
            final_losses,
            loss_history,
        }
    }

    /// One row per trial: `trial,seed,l2_relative_error,final_loss`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,seed,l2_relative_error,final_loss\n");
        for (k, ((s, e), l)) in self.seeds.iter().zip(&self.errors).zip(&self.final_losses).enumerate() {
            out += &format!("{k},{s},{e:e},{l:e}\n");
        }
        out
    }

    /// `trial,epoch,loss` rows.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("trial,epoch,loss\n");
        for (k, h) in self.loss_history.iter().enumerate() {
            for (epoch, loss) in h {
                out += &format!("{k},{epoch},{loss:e}\n");
            }
        }
        out
    }

    /// `mean ± std` in percent.
    pub fn summary(&self) -> String {
        match self.std {
            Some(s) => format!("{:.2} ± {:.2} %", 100.0 * self.mean, 100.0 * s),
            None => format!("{:.2} %", 100.0 * self.mean),
        }
    }
}
