//! Shared report plumbing: JSON documents and CSV traces with a metadata
//! header naming the experiment.

use serde::Serialize;

/// Metadata carried by every emitted file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub experiment: String,
    pub theorem: String,
    pub cone: String,
    pub operator: String,
    pub seed: u64,
}

impl Provenance {
    /// `#`-prefixed header lines for CSV traces.
    pub fn csv_header(&self) -> String {
        format!(
            "# experiment={}\n# theorem={}\n# cone={}\n# operator={}\n# seed={}\n",
            self.experiment, self.theorem, self.cone, self.operator, self.seed
        )
    }
}

/// CSV text from a header row and numeric rows.
pub fn csv_table(prov: &Provenance, columns: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = prov.csv_header();
    out.push_str(&columns.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
