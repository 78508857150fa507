//! Per-iteration run records and their tab-separated export.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::FeatureDescriptor;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub objective: f64,
    pub active_count: usize,
    pub accepted: Option<FeatureDescriptor>,
    /// Largest Λ of the scoring pass; absent for the initial fit.
    pub best_violation: Option<f64>,
    pub kappa: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    iteration: usize,
    objective: f64,
    active_count: usize,
    accepted: String,
    best_violation: Option<f64>,
    kappa: Option<f64>,
}

impl RunTrace {
    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(self
            .records
            .last()
            .is_none_or(|r| r.iteration < record.iteration));
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn kappas(&self) -> Vec<f64> {
        self.records.iter().filter_map(|r| r.kappa).collect()
    }

    pub fn write_tsv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
        for r in &self.records {
            w.serialize(Row {
                iteration: r.iteration,
                objective: r.objective,
                active_count: r.active_count,
                accepted: r.accepted.as_ref().map(|d| d.to_string()).unwrap_or_default(),
                best_violation: r.best_violation,
                kappa: r.kappa,
            })?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_tsv<R: Read>(input: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(input);
        let mut trace = RunTrace::default();
        for row in rd.deserialize::<Row>() {
            let row = row?;
            if trace
                .records
                .last()
                .is_some_and(|r| r.iteration >= row.iteration)
            {
                return Err(Error::format("trace", "iterations must increase"));
            }
            let accepted = if row.accepted.is_empty() {
                None
            } else {
                Some(row.accepted.parse()?)
            };
            trace.records.push(TraceRecord {
                iteration: row.iteration,
                objective: row.objective,
                active_count: row.active_count,
                accepted,
                best_violation: row.best_violation,
                kappa: row.kappa,
            });
        }
        Ok(trace)
    }
}
