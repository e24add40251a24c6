//! Typed CSV tables with fixed headers.
//!
//! Data files start with the exact schema header. Lines beginning with `#`
//! are comments; written outputs use them for the config digest and the
//! assumption list.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Reflectivity,
    Spectrum,
    Stark,
    BiasCurrent,
    PowerCurrent,
    Flux,
    FarField,
}

impl Schema {
    pub const ALL: [Schema; 7] = [
        Schema::Reflectivity,
        Schema::Spectrum,
        Schema::Stark,
        Schema::BiasCurrent,
        Schema::PowerCurrent,
        Schema::Flux,
        Schema::FarField,
    ];

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Schema::Reflectivity => &["energy_meV", "reflectivity"],
            Schema::Spectrum => &["energy_meV", "intensity"],
            Schema::Stark => &["bias_V", "peak_meV"],
            Schema::BiasCurrent => &["bias_V", "current_mA"],
            Schema::PowerCurrent => &["current_mA", "power_uW"],
            Schema::Flux => &["J_kA_cm2", "flux_norm"],
            Schema::FarField => &["x_mm", "y_mm", "intensity"],
        }
    }

    pub fn header(self) -> String {
        self.columns().join(",")
    }

    pub fn id(self) -> &'static str {
        match self {
            Schema::Reflectivity => "reflectivity",
            Schema::Spectrum => "spectrum",
            Schema::Stark => "stark",
            Schema::BiasCurrent => "bias_current",
            Schema::PowerCurrent => "li",
            Schema::Flux => "flux",
            Schema::FarField => "farfield",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|s| s.id() == id)
            .ok_or_else(|| Error::Input(format!("unknown schema id `{id}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementTable {
    pub schema: Schema,
    pub source: PathBuf,
    columns: Vec<Vec<f64>>,
}

impl MeasurementTable {
    pub fn row_count(&self) -> usize {
        self.columns[0].len()
    }

    pub fn column(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn column_named(&self, name: &str) -> Option<&[f64]> {
        let k = self.schema.columns().iter().position(|c| *c == name)?;
        Some(&self.columns[k])
    }

    /// Fails unless column `index` strictly increases down the table.
    pub fn require_increasing(&self, index: usize) -> Result<()> {
        let col = &self.columns[index];
        match col.windows(2).position(|w| !(w[1] > w[0])) {
            None => Ok(()),
            Some(k) => Err(Error::Parse {
                path: self.source.display().to_string(),
                row: k + 2,
                column: index + 1,
                message: format!("`{}` must be strictly increasing", self.schema.columns()[index]),
            }),
        }
    }
}

/// Reads a CSV whose first non-comment row is exactly the schema header.
pub fn ingest_csv(path: impl AsRef<Path>, schema: Schema) -> Result<MeasurementTable> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|e| Error::Input(format!("{shown}: {e}")))?;
    parse_csv(&bytes, schema, path)
}

pub fn parse_csv(bytes: &[u8], schema: Schema, source: &Path) -> Result<MeasurementTable> {
    let shown = source.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::None)
        .from_reader(bytes);
    let found = reader
        .headers()
        .map_err(|e| Error::Input(format!("{shown}: {e}")))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    let expected = schema.header();
    if found != expected {
        return Err(Error::Schema {
            path: shown,
            expected,
            found,
        });
    }
    let width = schema.columns().len();
    let mut columns = vec![Vec::new(); width];
    for (k, record) in reader.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| Error::Parse {
            path: shown.clone(),
            row,
            column: 0,
            message: e.to_string(),
        })?;
        if record.len() != width {
            return Err(Error::Parse {
                path: shown.clone(),
                row,
                column: record.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        for (c, cell) in record.iter().enumerate() {
            let parse_error = |message: String| Error::Parse {
                path: shown.clone(),
                row,
                column: c + 1,
                message,
            };
            let value: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_error(format!("cannot parse `{cell}` as a number")))?;
            if !value.is_finite() {
                return Err(parse_error(format!("non-finite value `{cell}`")));
            }
            columns[c].push(value);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::Input(format!("{shown}: no data rows")));
    }
    Ok(MeasurementTable {
        schema,
        source: source.to_path_buf(),
        columns,
    })
}

/// Comment lines placed ahead of every written CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutputMeta {
    pub config_digest: String,
    pub assumed: Vec<String>,
}

impl OutputMeta {
    fn write_comments(&self, out: &mut String) {
        writeln!(out, "# config_sha256: {}", self.config_digest).unwrap();
        writeln!(out, "# assumed: {}", self.assumed.join(";")).unwrap();
    }

    /// Reads the digest back from a written CSV.
    pub fn digest_of(text: &str) -> Option<&str> {
        text.lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix("# config_sha256: "))
    }
}

/// Shortest representation that parses back to the same double.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Renders comment lines, the header and rows with round-trip floats.
pub fn render_csv<'a, I>(header: &[&str], rows: I, meta: &OutputMeta) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = String::new();
    meta.write_comments(&mut out);
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv<'a, I>(path: impl AsRef<Path>, header: &[&str], rows: I, meta: &OutputMeta) -> Result<()>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    std::fs::write(path, render_csv(header, rows, meta))?;
    Ok(())
}
