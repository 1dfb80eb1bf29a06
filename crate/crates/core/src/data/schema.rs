use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Column name reserved for case identifiers in CSV files.
pub const ID_COLUMN: &str = "id";

/// Names and roles of the binary attributes of a dataset.
///
/// Every attribute is either a context attribute or the (single) target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    names: Vec<String>,
    context: Vec<usize>,
    target: usize,
}

impl AttributeSchema {
    pub fn new(names: Vec<String>, context: Vec<usize>, target: usize) -> Result<Self> {
        let d = names.len();
        let mut seen = HashSet::new();
        for name in &names {
            if name.trim().is_empty() {
                return Err(Error::Schema("attribute names must be nonempty".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Schema(format!("duplicate attribute `{name}`")));
            }
        }
        if target >= d {
            return Err(Error::Schema(format!("target index {target} out of range")));
        }
        let mut covered = vec![false; d];
        covered[target] = true;
        for &c in &context {
            if c >= d {
                return Err(Error::Schema(format!("context index {c} out of range")));
            }
            if covered[c] {
                return Err(Error::Schema(format!(
                    "attribute `{}` assigned twice",
                    names[c]
                )));
            }
            covered[c] = true;
        }
        if let Some(i) = covered.iter().position(|&c| !c) {
            return Err(Error::Schema(format!(
                "attribute `{}` is neither context nor target",
                names[i]
            )));
        }
        Ok(Self {
            names,
            context,
            target,
        })
    }

    /// Schema where every attribute other than `target` is context, in column order.
    pub fn with_target(names: Vec<String>, target: &str) -> Result<Self> {
        let t = names
            .iter()
            .position(|n| n == target)
            .ok_or_else(|| Error::Schema(format!("target column `{target}` not found")))?;
        let context = (0..names.len()).filter(|&i| i != t).collect();
        Self::new(names, context, t)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_attributes(&self) -> usize {
        self.names.len()
    }

    pub fn context_indices(&self) -> &[usize] {
        &self.context
    }

    pub fn n_context(&self) -> usize {
        self.context.len()
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn target_name(&self) -> &str {
        &self.names[self.target]
    }
}

/// Role assignment read from a `key = value` text file:
///
/// ```text
/// # comments are allowed
/// target = hospitalization
/// context = age_gt_50, renal_disease
/// ```
///
/// Without a `context` key, every column other than the target and `id` is context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaSpec {
    pub target: String,
    pub context: Option<Vec<String>>,
}

impl SchemaSpec {
    pub fn target(name: impl Into<String>) -> Self {
        Self {
            target: name.into(),
            context: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut target = None;
        let mut context = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Schema(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            match key.trim() {
                "target" => target = Some(value.trim().to_string()),
                "context" => {
                    context = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().to_string())
                            .filter(|s| !s.is_empty())
                            .collect(),
                    )
                }
                other => {
                    return Err(Error::Schema(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        let target = target.ok_or_else(|| Error::Schema("missing `target` key".into()))?;
        Ok(Self { target, context })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Resolves the spec against a CSV header.
    ///
    /// Returns the schema, the header position of each schema attribute, and
    /// the position of the `id` column if present.
    pub(crate) fn resolve(
        &self,
        header: &[String],
    ) -> Result<(AttributeSchema, Vec<usize>, Option<usize>)> {
        let id_col = header.iter().position(|h| h == ID_COLUMN);
        if self.target == ID_COLUMN {
            return Err(Error::Schema("the `id` column cannot be the target".into()));
        }
        if !header.contains(&self.target) {
            return Err(Error::Schema(format!(
                "target column `{}` not found in header",
                self.target
            )));
        }
        let keep: Vec<usize> = match &self.context {
            None => (0..header.len()).filter(|&i| Some(i) != id_col).collect(),
            Some(ctx) => {
                let mut wanted: HashSet<&str> = ctx.iter().map(String::as_str).collect();
                for name in ctx {
                    if !header.contains(name) {
                        return Err(Error::Schema(format!(
                            "context column `{name}` not found in header"
                        )));
                    }
                }
                wanted.insert(self.target.as_str());
                (0..header.len())
                    .filter(|&i| wanted.contains(header[i].as_str()))
                    .collect()
            }
        };
        let names: Vec<String> = keep.iter().map(|&i| header[i].clone()).collect();
        let schema = AttributeSchema::with_target(names, &self.target)?;
        Ok((schema, keep, id_col))
    }
}
