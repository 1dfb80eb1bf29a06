//! Bayesian naive Bayes over binary context features.
//!
//! The class prior and every per-class feature probability carry a
//! Beta(α, β) prior. Under parameter independence and conjugacy the
//! posterior is a set of counts, and single-case prediction uses the
//! posterior means `(count + α) / (total + α + β)`.

use super::TargetDistribution;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Beta prior hyperparameters shared by all parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NbPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl Default for NbPrior {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
        }
    }
}

impl NbPrior {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "naive Bayes prior needs alpha, beta > 0 (got {}, {})",
                self.alpha, self.beta
            )));
        }
        Ok(())
    }

    /// Posterior mean of a Bernoulli parameter after `ones` successes in `total` trials.
    fn mean(&self, ones: u64, total: u64) -> f64 {
        (ones as f64 + self.alpha) / (total as f64 + self.alpha + self.beta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveBayesModel {
    prior: NbPrior,
    /// cases per target value
    class_counts: [u64; 2],
    /// `feature_ones[a][f]`: cases with target `a` and feature `f` = 1
    feature_ones: [Vec<u64>; 2],
}

impl NaiveBayesModel {
    /// A prior-only model.
    pub fn empty(n_features: usize, prior: NbPrior) -> Self {
        Self {
            prior,
            class_counts: [0, 0],
            feature_ones: [vec![0; n_features], vec![0; n_features]],
        }
    }

    /// Fits on every case of `cases`.
    pub fn fit(cases: &Dataset, prior: NbPrior) -> Self {
        let all: Vec<usize> = (0..cases.n_cases()).collect();
        Self::fit_rows(cases, &all, prior)
    }

    /// Fits on the cases of `cases` at `rows`.
    pub fn fit_rows(cases: &Dataset, rows: &[usize], prior: NbPrior) -> Self {
        let schema = cases.schema();
        let ctx = schema.context_indices();
        let mut model = Self::empty(ctx.len(), prior);
        for &r in rows {
            let row = cases.row(r);
            let a = usize::from(row[schema.target_index()]);
            model.class_counts[a] += 1;
            for (f, &c) in ctx.iter().enumerate() {
                model.feature_ones[a][f] += u64::from(row[c]);
            }
        }
        model
    }

    pub fn n_features(&self) -> usize {
        self.feature_ones[0].len()
    }

    pub fn n_cases(&self) -> u64 {
        self.class_counts[0] + self.class_counts[1]
    }

    pub fn add(&mut self, context: &[u8], target: u8) -> Result<()> {
        self.check(context)?;
        let a = usize::from(target.min(1));
        self.class_counts[a] += 1;
        for (slot, &c) in self.feature_ones[a].iter_mut().zip(context) {
            *slot += u64::from(c);
        }
        Ok(())
    }

    /// Undoes a previous [`add`](Self::add) of the same case.
    pub fn remove(&mut self, context: &[u8], target: u8) -> Result<()> {
        self.check(context)?;
        let a = usize::from(target.min(1));
        let underflow = || Error::InvalidConfig("removing a case that was never added".into());
        self.class_counts[a] = self.class_counts[a].checked_sub(1).ok_or_else(underflow)?;
        for (slot, &c) in self.feature_ones[a].iter_mut().zip(context) {
            *slot = slot.checked_sub(u64::from(c)).ok_or_else(underflow)?;
        }
        Ok(())
    }

    fn check(&self, context: &[u8]) -> Result<()> {
        if context.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                expected: self.n_features(),
                actual: context.len(),
            });
        }
        Ok(())
    }

    /// Posterior mean of p(target = 1).
    pub fn class_prior(&self) -> f64 {
        self.prior.mean(self.class_counts[1], self.n_cases())
    }

    pub fn predict(&self, context: &[u8]) -> Result<TargetDistribution> {
        self.check(context)?;
        let p1 = self.class_prior();
        let mut log = [(1.0 - p1).ln(), p1.ln()];
        for (a, lp) in log.iter_mut().enumerate() {
            let total = self.class_counts[a];
            for (&ones, &c) in self.feature_ones[a].iter().zip(context) {
                let theta = self.prior.mean(ones, total);
                *lp += if c == 1 {
                    theta.ln()
                } else {
                    (1.0 - theta).ln()
                };
            }
        }
        let m = log[0].max(log[1]);
        let w = [(log[0] - m).exp(), (log[1] - m).exp()];
        let z = w[0] + w[1];
        Ok([w[0] / z, w[1] / z])
    }
}
