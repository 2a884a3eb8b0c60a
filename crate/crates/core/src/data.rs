//! Categorical sample storage.
//!
//! Samples are held variable-major: the `n_samples` codes of one variable are
//! one contiguous run, so building a contingency table walks each involved
//! column sequentially instead of striding across rows.

use std::collections::HashMap;
use std::io::{Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed delimited text at row {row}: {message}")]
    Format { row: u64, message: String },
    #[error("row {row} has {found} fields, expected {expected}")]
    Ragged { row: u64, expected: usize, found: usize },
    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: u64, column: usize },
    #[error("invalid dataset shape: {0}")]
    Shape(String),
    #[error("variable index {index} out of range for {n_vars} variables")]
    IndexOutOfRange { index: usize, n_vars: usize },
    #[error("code {code} of variable {var} is not below its cardinality {cardinality}")]
    InvalidCode { var: usize, code: u32, cardinality: usize },
}

/// Options for [`load_dataset`].
#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    pub has_header: bool,
    pub delimiter: u8,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            has_header: true,
            delimiter: b',',
        }
    }
}

/// An unsigned integer type usable as a category code.
pub trait Code: Copy + Send + Sync + 'static {
    fn index(self) -> usize;
}

impl Code for u8 {
    #[inline(always)]
    fn index(self) -> usize {
        self as usize
    }
}

impl Code for u16 {
    #[inline(always)]
    fn index(self) -> usize {
        self as usize
    }
}

impl Code for u32 {
    #[inline(always)]
    fn index(self) -> usize {
        self as usize
    }
}

/// Code storage, one width per dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
enum CodeStore {
    U8(Vec<u8>),
    U16(Vec<u16>),
    U32(Vec<u32>),
}

/// Borrowed view of one variable's column.
#[derive(Debug, Clone, Copy)]
pub enum Column<'a> {
    U8(&'a [u8]),
    U16(&'a [u16]),
    U32(&'a [u32]),
}

impl<'a> Column<'a> {
    pub fn len(&self) -> usize {
        match self {
            Column::U8(c) => c.len(),
            Column::U16(c) => c.len(),
            Column::U32(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, sample: usize) -> usize {
        match self {
            Column::U8(c) => c[sample] as usize,
            Column::U16(c) => c[sample] as usize,
            Column::U32(c) => c[sample] as usize,
        }
    }

    pub fn to_vec(&self) -> Vec<u32> {
        match self {
            Column::U8(c) => c.iter().map(|&v| v as u32).collect(),
            Column::U16(c) => c.iter().map(|&v| v as u32).collect(),
            Column::U32(c) => c.to_vec(),
        }
    }

    /// Width in bytes of one stored code.
    pub fn code_width(&self) -> usize {
        match self {
            Column::U8(_) => 1,
            Column::U16(_) => 2,
            Column::U32(_) => 4,
        }
    }
}

/// Immutable, column-major matrix of encoded categorical samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n_vars: usize,
    n_samples: usize,
    var_names: Vec<String>,
    cardinalities: Vec<usize>,
    labels: Vec<Vec<String>>,
    values: CodeStore,
}

impl Dataset {
    /// Builds a dataset from per-variable code columns.
    ///
    /// `labels`, when given, maps each code of each variable back to its text
    /// label; otherwise codes are labelled by their decimal value.
    pub fn from_columns(
        var_names: Vec<String>,
        cardinalities: Vec<usize>,
        labels: Option<Vec<Vec<String>>>,
        columns: Vec<Vec<u32>>,
    ) -> Result<Dataset, DataError> {
        let n_vars = columns.len();
        if n_vars < 2 {
            return Err(DataError::Shape(format!("need at least 2 variables, got {n_vars}")));
        }
        if var_names.len() != n_vars || cardinalities.len() != n_vars {
            return Err(DataError::Shape(format!(
                "{n_vars} columns but {} names and {} cardinalities",
                var_names.len(),
                cardinalities.len()
            )));
        }
        let n_samples = columns[0].len();
        if n_samples < 1 {
            return Err(DataError::Shape("need at least 1 sample".into()));
        }
        if n_samples > u32::MAX as usize {
            return Err(DataError::Shape(format!(
                "{n_samples} samples exceed the supported maximum"
            )));
        }
        for (var, col) in columns.iter().enumerate() {
            if col.len() != n_samples {
                return Err(DataError::Shape(format!(
                    "column {var} has {} samples, expected {n_samples}",
                    col.len()
                )));
            }
            let cardinality = cardinalities[var];
            if cardinality == 0 {
                return Err(DataError::Shape(format!("variable {var} has cardinality 0")));
            }
            if let Some(&code) = col.iter().find(|&&c| c as usize >= cardinality) {
                return Err(DataError::InvalidCode { var, code, cardinality });
            }
        }
        let labels = match labels {
            Some(l) => {
                if l.len() != n_vars || l.iter().zip(&cardinalities).any(|(l, &c)| l.len() != c) {
                    return Err(DataError::Shape("label tables do not match cardinalities".into()));
                }
                l
            }
            None => cardinalities
                .iter()
                .map(|&c| (0..c).map(|k| k.to_string()).collect())
                .collect(),
        };

        let max_card = cardinalities.iter().copied().max().unwrap_or(1);
        let flat = columns.into_iter().flatten();
        let values = if max_card <= u8::MAX as usize + 1 {
            CodeStore::U8(flat.map(|c| c as u8).collect())
        } else if max_card <= u16::MAX as usize + 1 {
            CodeStore::U16(flat.map(|c| c as u16).collect())
        } else {
            CodeStore::U32(flat.collect())
        };

        Ok(Dataset {
            n_vars,
            n_samples,
            var_names,
            cardinalities,
            labels,
            values,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn var_names(&self) -> &[String] {
        &self.var_names
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn cardinality(&self, var: usize) -> usize {
        self.cardinalities[var]
    }

    /// Label table of `var`, indexed by code.
    pub fn labels(&self, var: usize) -> &[String] {
        &self.labels[var]
    }

    pub fn code_width(&self) -> usize {
        match self.values {
            CodeStore::U8(_) => 1,
            CodeStore::U16(_) => 2,
            CodeStore::U32(_) => 4,
        }
    }

    /// The contiguous column of `var`. No copy is made.
    pub fn column_values(&self, var: usize) -> Result<Column<'_>, DataError> {
        self.check_var(var)?;
        Ok(self.column(var))
    }

    pub(crate) fn check_var(&self, var: usize) -> Result<(), DataError> {
        if var >= self.n_vars {
            Err(DataError::IndexOutOfRange {
                index: var,
                n_vars: self.n_vars,
            })
        } else {
            Ok(())
        }
    }

    #[inline]
    pub(crate) fn column(&self, var: usize) -> Column<'_> {
        let range = var * self.n_samples..(var + 1) * self.n_samples;
        match &self.values {
            CodeStore::U8(v) => Column::U8(&v[range]),
            CodeStore::U16(v) => Column::U16(&v[range]),
            CodeStore::U32(v) => Column::U32(&v[range]),
        }
    }

    /// Decoded text row `sample`, mostly for diagnostics.
    pub fn row_labels(&self, sample: usize) -> Vec<&str> {
        (0..self.n_vars)
            .map(|v| self.labels[v][self.column(v).get(sample)].as_str())
            .collect()
    }

    /// Writes a header-bearing delimited file that [`load_dataset`] reads back.
    pub fn write_delimited<W: Write>(&self, writer: W, delimiter: u8) -> Result<(), DataError> {
        let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(writer);
        let to_io = |e: csv::Error| DataError::Io(std::io::Error::other(e));
        w.write_record(&self.var_names).map_err(to_io)?;
        let columns: Vec<Column<'_>> = (0..self.n_vars).map(|v| self.column(v)).collect();
        let mut row: Vec<&str> = Vec::with_capacity(self.n_vars);
        for s in 0..self.n_samples {
            row.clear();
            row.extend(
                columns
                    .iter()
                    .enumerate()
                    .map(|(v, c)| self.labels[v][c.get(s)].as_str()),
            );
            w.write_record(&row).map_err(to_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads complete categorical samples from delimited text.
///
/// Category codes are assigned per column in first-appearance order of the
/// raw labels.
pub fn load_dataset<R: Read>(source: R, options: &LoadOptions) -> Result<Dataset, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .delimiter(options.delimiter)
        .from_reader(source);

    let mut var_names: Option<Vec<String>> = None;
    let mut width: Option<usize> = None;
    let mut columns: Vec<Vec<u32>> = Vec::new();
    let mut lookup: Vec<HashMap<String, u32>> = Vec::new();
    let mut labels: Vec<Vec<String>> = Vec::new();

    for (idx, record) in reader.records().enumerate() {
        let row = idx as u64 + 1;
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => DataError::Io(std::io::Error::other(e)),
            _ => DataError::Format {
                row,
                message: e.to_string(),
            },
        })?;
        match width {
            None => {
                let w = record.len();
                width = Some(w);
                columns = vec![Vec::new(); w];
                lookup = vec![HashMap::new(); w];
                labels = vec![Vec::new(); w];
                if options.has_header {
                    var_names = Some(record.iter().map(str::to_owned).collect());
                    continue;
                }
            }
            Some(w) if record.len() != w => {
                return Err(DataError::Ragged {
                    row,
                    expected: w,
                    found: record.len(),
                });
            }
            Some(_) => {}
        }
        for (column, field) in record.iter().enumerate() {
            if field.is_empty() {
                return Err(DataError::MissingValue { row, column });
            }
            let table = &mut lookup[column];
            let code = match table.get(field) {
                Some(&c) => c,
                None => {
                    let c = labels[column].len() as u32;
                    table.insert(field.to_owned(), c);
                    labels[column].push(field.to_owned());
                    c
                }
            };
            columns[column].push(code);
        }
    }

    let width = width.unwrap_or(0);
    if width < 2 {
        return Err(DataError::Shape(format!("need at least 2 columns, got {width}")));
    }
    if columns[0].is_empty() {
        return Err(DataError::Shape("need at least 1 data row".into()));
    }
    let var_names = var_names.unwrap_or_else(|| (0..width).map(|i| format!("V{i}")).collect());
    let cardinalities = labels.iter().map(Vec::len).collect();
    Dataset::from_columns(var_names, cardinalities, Some(labels), columns)
}
