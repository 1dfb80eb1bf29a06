use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use super::schema::{AttributeSchema, SchemaSpec, ID_COLUMN};
use crate::error::{Error, Result};

/// One case: a binary value per schema attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<u8>,
}

impl Instance {
    pub fn new(values: Vec<u8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidConfig(format!(
                "instance values must be 0 or 1, found {v}"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[u8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Splits an instance into its context vector (schema order) and target value.
pub fn project(instance: &Instance, schema: &AttributeSchema) -> Result<(Vec<u8>, u8)> {
    if instance.len() != schema.n_attributes() {
        return Err(Error::DimensionMismatch {
            expected: schema.n_attributes(),
            actual: instance.len(),
        });
    }
    let v = instance.values();
    let context = schema.context_indices().iter().map(|&i| v[i]).collect();
    Ok((context, v[schema.target_index()]))
}

/// An immutable n × d binary table with one identifier per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: AttributeSchema,
    // row-major, n × d
    cells: Vec<u8>,
    case_ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(schema: AttributeSchema, rows: Vec<Vec<u8>>, case_ids: Vec<String>) -> Result<Self> {
        let d = schema.n_attributes();
        if rows.len() != case_ids.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                actual: case_ids.len(),
            });
        }
        let mut cells = Vec::with_capacity(rows.len() * d);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            for (c, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::NonBinary {
                        row: r + 1,
                        column: schema.names()[c].clone(),
                        value: v.to_string(),
                    });
                }
            }
            cells.extend_from_slice(row);
        }
        Self::from_parts(schema, cells, case_ids)
    }

    fn from_parts(schema: AttributeSchema, cells: Vec<u8>, case_ids: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(case_ids.len());
        for (i, id) in case_ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::DuplicateId(id.clone()));
            }
        }
        Ok(Self {
            schema,
            cells,
            case_ids,
            index,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn n_cases(&self) -> usize {
        self.case_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.case_ids.is_empty()
    }

    pub fn case_ids(&self) -> &[String] {
        &self.case_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let d = self.schema.n_attributes();
        &self.cells[i * d..(i + 1) * d]
    }

    pub fn instance(&self, i: usize) -> Instance {
        Instance {
            values: self.row(i).to_vec(),
        }
    }

    pub fn target(&self, i: usize) -> u8 {
        self.row(i)[self.schema.target_index()]
    }

    pub fn targets(&self) -> Vec<u8> {
        (0..self.n_cases()).map(|i| self.target(i)).collect()
    }

    pub fn context(&self, i: usize) -> Vec<f64> {
        let row = self.row(i);
        self.schema
            .context_indices()
            .iter()
            .map(|&c| f64::from(row[c]))
            .collect()
    }

    /// The n × d_c real matrix of context vectors.
    pub fn context_matrix(&self) -> DMatrix<f64> {
        let ctx = self.schema.context_indices();
        DMatrix::from_fn(self.n_cases(), ctx.len(), |i, j| {
            f64::from(self.row(i)[ctx[j]])
        })
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.schema.n_attributes();
        let mut cells = Vec::with_capacity(indices.len() * d);
        let mut ids = Vec::with_capacity(indices.len());
        for &i in indices {
            cells.extend_from_slice(self.row(i));
            ids.push(self.case_ids[i].clone());
        }
        Self::from_parts(self.schema.clone(), cells, ids).expect("subset of unique ids")
    }

    /// A copy with row `i` removed.
    pub fn without(&self, i: usize) -> Dataset {
        let keep: Vec<usize> = (0..self.n_cases()).filter(|&r| r != i).collect();
        self.subset(&keep)
    }

    /// A copy with the rows whose ids are in `ids` removed.
    pub fn without_ids<S: AsRef<str>>(&self, ids: &[S]) -> Dataset {
        let drop: std::collections::HashSet<&str> = ids.iter().map(|s| s.as_ref()).collect();
        let keep: Vec<usize> = (0..self.n_cases())
            .filter(|&r| !drop.contains(self.case_ids[r].as_str()))
            .collect();
        self.subset(&keep)
    }

    /// A copy with row `i` overwritten.
    pub fn with_row(&self, i: usize, values: &[u8]) -> Result<Dataset> {
        let mut rows: Vec<Vec<u8>> = (0..self.n_cases()).map(|r| self.row(r).to_vec()).collect();
        rows[i] = values.to_vec();
        Dataset::new(self.schema.clone(), rows, self.case_ids.clone())
    }

    pub fn load_csv(path: impl AsRef<Path>, spec: &SchemaSpec) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, spec)
    }

    pub fn read_csv<R: Read>(reader: R, spec: &SchemaSpec) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let (schema, columns, id_col) = spec.resolve(&header)?;

        let mut cells = Vec::new();
        let mut ids = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            let record = record?;
            let row_no = r + 1;
            for (&col, name) in columns.iter().zip(schema.names()) {
                let raw = record.get(col).unwrap_or("").trim();
                let v = match raw {
                    "0" => 0,
                    "1" => 1,
                    _ => {
                        return Err(Error::NonBinary {
                            row: row_no,
                            column: name.clone(),
                            value: raw.to_string(),
                        })
                    }
                };
                cells.push(v);
            }
            ids.push(match id_col {
                Some(c) => record.get(c).unwrap_or("").trim().to_string(),
                None => row_no.to_string(),
            });
        }
        Self::from_parts(schema, cells, ids)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv_to(std::io::BufWriter::new(file))
    }

    pub fn write_csv_to<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec![ID_COLUMN.to_string()];
        header.extend(self.schema.names().iter().cloned());
        wtr.write_record(&header)?;
        for i in 0..self.n_cases() {
            let mut rec = vec![self.case_ids[i].clone()];
            rec.extend(self.row(i).iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}
