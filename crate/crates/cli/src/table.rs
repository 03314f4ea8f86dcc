//! Column-oriented result records and their CSV / JSON serialization.

use std::io::Write;

use serde::Serialize;

use crate::config::{Format, SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Analytic,
    Oracle,
}

/// One observed value with the coordinates that identify it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub observable: String,
    pub sites: usize,
    pub gamma: f64,
    pub n0: Option<usize>,
    /// `site:strength` pairs joined by `;`.
    pub defects: String,
    pub q: Option<f64>,
    pub t: Option<f64>,
    pub site: Option<usize>,
    pub value: f64,
    pub provenance: Provenance,
    pub abs_diff: Option<f64>,
}

/// Shared coordinates for a batch of records.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords {
    pub sites: usize,
    pub gamma: f64,
    pub n0: Option<usize>,
    pub defects: String,
    pub q: Option<f64>,
}

impl Coords {
    pub fn new(sites: usize, gamma: f64, n0: Option<usize>) -> Self {
        Coords {
            sites,
            gamma,
            n0,
            defects: String::new(),
            q: None,
        }
    }

    pub fn with_defects(mut self, defects: &[(usize, f64)]) -> Self {
        self.defects = defects
            .iter()
            .map(|(s, q)| format!("{s}:{q}"))
            .collect::<Vec<_>>()
            .join(";");
        self.q = defects.first().map(|d| d.1).filter(|q| q.is_finite());
        self
    }

    pub fn record(
        &self,
        observable: &str,
        t: Option<f64>,
        site: Option<usize>,
        value: f64,
    ) -> Record {
        Record {
            observable: observable.to_string(),
            sites: self.sites,
            gamma: self.gamma,
            n0: self.n0,
            defects: self.defects.clone(),
            q: self.q,
            t,
            site,
            value,
            provenance: Provenance::Analytic,
            abs_diff: None,
        }
    }

    pub fn oracle(
        &self,
        observable: &str,
        t: Option<f64>,
        site: Option<usize>,
        value: f64,
    ) -> Record {
        Record {
            provenance: Provenance::Oracle,
            ..self.record(observable, t, site, value)
        }
    }

    /// An analytic record and its oracle partner, both carrying |a − o|.
    pub fn pair(
        &self,
        observable: &str,
        t: Option<f64>,
        site: Option<usize>,
        analytic: f64,
        oracle: f64,
    ) -> [Record; 2] {
        let diff = (analytic - oracle).abs();
        let mut a = self.record(observable, t, site, analytic);
        let mut o = self.oracle(observable, t, site, oracle);
        a.abs_diff = Some(diff);
        o.abs_diff = Some(diff);
        [a, o]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ResultTable {
    pub records: Vec<Record>,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    schema_version: u32,
    mode: &'a str,
    records: &'a [Record],
}

impl ResultTable {
    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = Record>) {
        self.records.extend(rs);
    }

    pub fn append(&mut self, other: ResultTable) {
        self.records.extend(other.records);
    }

    /// Largest recorded analytic/oracle difference.
    pub fn max_abs_diff(&self) -> f64 {
        self.records
            .iter()
            .filter_map(|r| r.abs_diff)
            .fold(0.0, f64::max)
    }

    pub fn write<W: Write>(&self, w: W, format: Format, mode: &str) -> std::io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w, mode),
        }
    }

    fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        if self.records.is_empty() {
            wr.write_record([
                "observable",
                "sites",
                "gamma",
                "n0",
                "defects",
                "q",
                "t",
                "site",
                "value",
                "provenance",
                "abs_diff",
            ])?;
        }
        for r in &self.records {
            wr.serialize(r)?;
        }
        wr.flush()
    }

    fn write_json<W: Write>(&self, mut w: W, mode: &str) -> std::io::Result<()> {
        let doc = JsonDocument {
            schema_version: SCHEMA_VERSION,
            mode,
            records: &self.records,
        };
        serde_json::to_writer_pretty(&mut w, &doc)?;
        w.write_all(b"\n")
    }
}
