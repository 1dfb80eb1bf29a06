//! Seeded generator for binary case data with planted conditional anomalies.
//!
//! Context bits are drawn from per-attribute marginals, optionally with a
//! parent → child dependency layer; the target is drawn from a logistic model
//! of the context; then exactly `round(rate · n)` cases chosen uniformly
//! without replacement get their target flipped and are marked anomalous.
//!
//! The default coefficients are arbitrary fixed values. They are shaped like
//! the pneumonia admission problem (19 clinical findings, hospitalization as
//! target) but make no claim to resemble any real patient population.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AttributeSchema, Dataset};
use crate::error::{Error, Result};

pub const PORT_CONTEXT_NAMES: [&str; 19] = [
    "age_gt_50",
    "gender_male",
    "congestive_heart_failure",
    "cerebrovascular_disease",
    "neoplastic_disease",
    "renal_disease",
    "liver_disease",
    "altered_mental_status",
    "pulse_ge_125",
    "respiratory_rate_ge_30",
    "systolic_bp_lt_90",
    "temperature_abnormal",
    "bun_ge_30",
    "glucose_ge_250",
    "hematocrit_lt_30",
    "sodium_lt_130",
    "pao2_lt_60",
    "arterial_ph_lt_7_35",
    "pleural_effusion",
];

pub const PORT_TARGET_NAME: &str = "hospitalization";

/// Child attribute drawn conditionally on a parent attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Dependency {
    pub parent: usize,
    pub child: usize,
    /// P(child = 1 | parent = 1)
    pub p_if_parent: f64,
    /// P(child = 1 | parent = 0)
    pub p_if_not_parent: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_cases: usize,
    pub context_names: Vec<String>,
    pub target_name: String,
    /// P(attribute = 1) for attributes that are not dependency children.
    pub marginals: Vec<f64>,
    pub dependencies: Vec<Dependency>,
    pub intercept: f64,
    /// Logistic weight of each context attribute on the target.
    pub weights: Vec<f64>,
    pub anomaly_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self::port_like(2300, 0.1, 0)
    }
}

impl SyntheticConfig {
    /// PORT-shaped default: 19 context findings, a hospitalization target
    /// driven by a handful of them, and an irrelevant correlated cluster.
    pub fn port_like(n_cases: usize, anomaly_rate: f64, seed: u64) -> Self {
        #[rustfmt::skip]
        let marginals = vec![
            0.60, // age_gt_50
            0.50, // gender_male
            0.15, // congestive_heart_failure
            0.10, // cerebrovascular_disease
            0.10, // neoplastic_disease
            0.10, // renal_disease (child of bun_ge_30)
            0.20, // liver_disease (child of gender_male)
            0.15, // altered_mental_status
            0.15, // pulse_ge_125 (child of gender_male)
            0.15, // respiratory_rate_ge_30
            0.08, // systolic_bp_lt_90
            0.20, // temperature_abnormal (child of gender_male)
            0.25, // bun_ge_30
            0.20, // glucose_ge_250 (child of gender_male)
            0.20, // hematocrit_lt_30 (child of gender_male)
            0.20, // sodium_lt_130 (child of gender_male)
            0.20, // pao2_lt_60
            0.10, // arterial_ph_lt_7_35
            0.20, // pleural_effusion (child of gender_male)
        ];
        #[rustfmt::skip]
        let weights = vec![
            2.0,  // age_gt_50
            0.0,  // gender_male
            1.5,  // congestive_heart_failure
            0.0,
            2.0,  // neoplastic_disease
            1.5,  // renal_disease
            0.0,
            2.5,  // altered_mental_status
            0.0,
            2.5,  // respiratory_rate_ge_30
            3.0,  // systolic_bp_lt_90
            0.0,
            2.0,  // bun_ge_30
            0.0,
            0.0,
            0.0,
            3.0,  // pao2_lt_60
            2.5,  // arterial_ph_lt_7_35
            0.0,
        ];
        let cluster = |child| Dependency {
            parent: 1,
            child,
            p_if_parent: 0.6,
            p_if_not_parent: 0.05,
        };
        let dependencies = vec![
            Dependency {
                parent: 12,
                child: 5,
                p_if_parent: 0.3,
                p_if_not_parent: 0.05,
            },
            cluster(6),
            cluster(8),
            cluster(11),
            cluster(13),
            cluster(14),
            cluster(15),
            cluster(18),
        ];
        Self {
            n_cases,
            context_names: PORT_CONTEXT_NAMES.iter().map(|s| s.to_string()).collect(),
            target_name: PORT_TARGET_NAME.to_string(),
            marginals,
            dependencies,
            intercept: -4.0,
            weights,
            anomaly_rate,
            seed,
        }
    }

    /// Schema of the PORT-shaped data: 19 context attributes, target last.
    pub fn port_schema() -> AttributeSchema {
        let mut names: Vec<String> = PORT_CONTEXT_NAMES.iter().map(|s| s.to_string()).collect();
        names.push(PORT_TARGET_NAME.to_string());
        AttributeSchema::with_target(names, PORT_TARGET_NAME).expect("static schema")
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.context_names.len();
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_cases == 0 {
            return bad("n_cases must be positive".into());
        }
        if self.marginals.len() != d || self.weights.len() != d {
            return bad(format!(
                "expected {d} marginals and weights, got {} and {}",
                self.marginals.len(),
                self.weights.len()
            ));
        }
        if let Some(p) = self.marginals.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return bad(format!("marginal {p} outside (0, 1)"));
        }
        if !(0.0..0.5).contains(&self.anomaly_rate) {
            return bad(format!(
                "anomaly_rate {} outside [0, 0.5)",
                self.anomaly_rate
            ));
        }
        if !self.intercept.is_finite() || self.weights.iter().any(|w| !w.is_finite()) {
            return bad("logistic coefficients must be finite".into());
        }
        let mut is_child = vec![false; d];
        for dep in &self.dependencies {
            if dep.parent >= d || dep.child >= d || dep.parent == dep.child {
                return bad(format!(
                    "invalid dependency {} -> {}",
                    dep.parent, dep.child
                ));
            }
            if is_child[dep.child] {
                return bad(format!("attribute {} has two parents", dep.child));
            }
            is_child[dep.child] = true;
            for p in [dep.p_if_parent, dep.p_if_not_parent] {
                if !(p > 0.0 && p < 1.0) {
                    return bad(format!("conditional probability {p} outside (0, 1)"));
                }
            }
        }
        if let Some(dep) = self.dependencies.iter().find(|dep| is_child[dep.parent]) {
            return bad(format!(
                "dependency parent {} is itself a child; only two levels allowed",
                dep.parent
            ));
        }
        let mut names = self.context_names.clone();
        names.push(self.target_name.clone());
        AttributeSchema::with_target(names, &self.target_name)?;
        Ok(())
    }

    fn schema(&self) -> AttributeSchema {
        let mut names = self.context_names.clone();
        names.push(self.target_name.clone());
        AttributeSchema::with_target(names, &self.target_name).expect("validated")
    }

    /// Number of planted anomalies, `round(rate · n)`.
    pub fn n_anomalies(&self) -> usize {
        (self.anomaly_rate * self.n_cases as f64).round() as usize
    }

    fn conditional(&self, context: &[u8]) -> f64 {
        let z = self.intercept
            + context
                .iter()
                .zip(&self.weights)
                .map(|(&c, w)| f64::from(c) * w)
                .sum::<f64>();
        1.0 / (1.0 + (-z).exp())
    }
}

/// Planted-anomaly labels and the generator's true conditionals.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub case_ids: Vec<String>,
    pub anomaly_flags: Vec<bool>,
    /// p*(target = 1 | context) under the generator; unaffected by the flip.
    pub true_conditional: Vec<f64>,
    /// Target as sampled, before any flip.
    pub sampled_target: Vec<u8>,
}

impl GroundTruth {
    pub fn n_flagged(&self) -> usize {
        self.anomaly_flags.iter().filter(|&&f| f).count()
    }

    pub fn flag_of(&self, id: &str) -> Option<bool> {
        self.case_ids
            .iter()
            .position(|c| c == id)
            .map(|i| self.anomaly_flags[i])
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut wtr = csv::Writer::from_path(path)?;
        wtr.write_record(["id", "anomaly", "true_conditional", "sampled_target"])?;
        for i in 0..self.case_ids.len() {
            wtr.write_record([
                self.case_ids[i].clone(),
                u8::from(self.anomaly_flags[i]).to_string(),
                format!("{:.16e}", self.true_conditional[i]),
                self.sampled_target[i].to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    /// Reads a truth file. Only `id` and `anomaly` are required.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let header: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let col = |name: &str| header.iter().position(|h| h == name);
        let id_col = col("id").ok_or_else(|| Error::Schema("truth file lacks `id`".into()))?;
        let flag_col =
            col("anomaly").ok_or_else(|| Error::Schema("truth file lacks `anomaly`".into()))?;
        let p_col = col("true_conditional");
        let t_col = col("sampled_target");
        let mut truth = GroundTruth {
            case_ids: Vec::new(),
            anomaly_flags: Vec::new(),
            true_conditional: Vec::new(),
            sampled_target: Vec::new(),
        };
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let get = |c: usize| rec.get(c).unwrap_or("").trim();
            let flag = match get(flag_col) {
                "0" => false,
                "1" => true,
                v => {
                    return Err(Error::NonBinary {
                        row: r + 1,
                        column: "anomaly".into(),
                        value: v.into(),
                    })
                }
            };
            truth.case_ids.push(get(id_col).to_string());
            truth.anomaly_flags.push(flag);
            truth
                .true_conditional
                .push(p_col.and_then(|c| get(c).parse().ok()).unwrap_or(f64::NAN));
            truth
                .sampled_target
                .push(t_col.and_then(|c| get(c).parse().ok()).unwrap_or(0));
        }
        Ok(truth)
    }
}

/// Generates a dataset and its planted-anomaly ground truth.
///
/// Output is a pure function of `config` (including its seed).
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<(Dataset, GroundTruth)> {
    config.validate()?;
    let d = config.context_names.len();
    let n = config.n_cases;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut parent_of: Vec<Option<&Dependency>> = vec![None; d];
    for dep in &config.dependencies {
        parent_of[dep.child] = Some(dep);
    }

    let mut rows = Vec::with_capacity(n);
    let mut true_conditional = Vec::with_capacity(n);
    let mut sampled_target = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = vec![0u8; d + 1];
        for j in 0..d {
            if parent_of[j].is_none() {
                row[j] = u8::from(rng.random::<f64>() < config.marginals[j]);
            }
        }
        for j in 0..d {
            if let Some(dep) = parent_of[j] {
                let p = if row[dep.parent] == 1 {
                    dep.p_if_parent
                } else {
                    dep.p_if_not_parent
                };
                row[j] = u8::from(rng.random::<f64>() < p);
            }
        }
        let p = config.conditional(&row[..d]);
        let t = u8::from(rng.random::<f64>() < p);
        row[d] = t;
        rows.push(row);
        true_conditional.push(p);
        sampled_target.push(t);
    }

    let mut anomaly_flags = vec![false; n];
    for i in rand::seq::index::sample(&mut rng, n, config.n_anomalies()) {
        anomaly_flags[i] = true;
        rows[i][d] = 1 - rows[i][d];
    }

    let width = n.to_string().len();
    let case_ids: Vec<String> = (1..=n).map(|i| format!("c{i:0width$}")).collect();
    let dataset = Dataset::new(config.schema(), rows, case_ids.clone())?;
    Ok((
        dataset,
        GroundTruth {
            case_ids,
            anomaly_flags,
            true_conditional,
            sampled_target,
        },
    ))
}
