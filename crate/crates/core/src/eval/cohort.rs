use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, GroundTruth};
use crate::detector::{flag, DEFAULT_THRESHOLD};
use crate::error::{Error, Result};
use crate::predict::{NaiveBayesModel, NbPrior};

/// Evaluated cases with their anomaly labels, in database order.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub case_ids: Vec<String>,
    pub labels: Vec<bool>,
    /// How many members were picked because the screening detector flagged them.
    pub n_screened: usize,
    pub warnings: Vec<String>,
}

impl Cohort {
    pub fn len(&self) -> usize {
        self.case_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.case_ids.is_empty()
    }

    /// Cohort of the given cases with labels looked up in `truth`.
    pub fn from_ids(case_ids: Vec<String>, truth: &GroundTruth) -> Result<Self> {
        let lookup: HashMap<&str, bool> = truth
            .case_ids
            .iter()
            .map(String::as_str)
            .zip(truth.anomaly_flags.iter().copied())
            .collect();
        let labels = case_ids
            .iter()
            .map(|id| {
                lookup.get(id.as_str()).copied().ok_or_else(|| {
                    Error::InvalidConfig(format!("case `{id}` missing from ground truth"))
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            case_ids,
            labels,
            n_screened: 0,
            warnings: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CohortOptions {
    pub n_flagged: usize,
    pub n_random: usize,
    pub threshold: f64,
    pub prior: NbPrior,
    pub seed: u64,
}

impl Default for CohortOptions {
    fn default() -> Self {
        Self {
            n_flagged: 21,
            n_random: 79,
            threshold: DEFAULT_THRESHOLD,
            prior: NbPrior::default(),
            seed: 0,
        }
    }
}

/// Screens every case with a leave-one-out global naive Bayes detector, keeps
/// up to `n_flagged` flagged cases (lowest posterior first) and fills the rest
/// of the cohort with uniform draws from the unflagged cases.
pub fn select_cohort(
    database: &Dataset,
    truth: &GroundTruth,
    opts: &CohortOptions,
) -> Result<Cohort> {
    let n = database.n_cases();
    let size = opts.n_flagged + opts.n_random;
    if n < size {
        return Err(Error::TooFewCases {
            needed: size,
            actual: n,
        });
    }
    opts.prior.validate()?;

    let schema = database.schema();
    let mut model = NaiveBayesModel::fit(database, opts.prior);
    let mut posteriors = Vec::with_capacity(n);
    for i in 0..n {
        let row = database.row(i);
        let context: Vec<u8> = schema.context_indices().iter().map(|&c| row[c]).collect();
        let target = row[schema.target_index()];
        model.remove(&context, target)?;
        posteriors.push(model.predict(&context)?[usize::from(target)]);
        model.add(&context, target)?;
    }

    let mut flagged: Vec<usize> = (0..n)
        .filter(|&i| flag(posteriors[i], opts.threshold))
        .collect();
    flagged.sort_by(|&a, &b| posteriors[a].total_cmp(&posteriors[b]).then(a.cmp(&b)));
    flagged.truncate(opts.n_flagged);

    let mut warnings = Vec::new();
    if flagged.len() < opts.n_flagged {
        warnings.push(format!(
            "screening flagged {} cases, fewer than the {} requested; filling randomly",
            flagged.len(),
            opts.n_flagged
        ));
    }

    let unflagged: Vec<usize> = (0..n)
        .filter(|&i| !flag(posteriors[i], opts.threshold))
        .collect();
    let n_draw = size - flagged.len();
    if unflagged.len() < n_draw {
        return Err(Error::TooFewCases {
            needed: n_draw,
            actual: unflagged.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut members = flagged.clone();
    members.extend(
        rand::seq::index::sample(&mut rng, unflagged.len(), n_draw)
            .into_iter()
            .map(|j| unflagged[j]),
    );
    members.sort_unstable();

    let ids: Vec<String> = members
        .iter()
        .map(|&i| database.case_ids()[i].clone())
        .collect();
    let mut cohort = Cohort::from_ids(ids, truth)?;
    cohort.n_screened = flagged.len();
    cohort.warnings = warnings;
    Ok(cohort)
}
