//! One flat record per run, written as CSV or JSON.
//!
//! CSV columns follow the field order of [`RunRecord`]:
//! `preset,problem,solver,m,final_time,n,r,kappa,gamma,dt,c,nu,beta,mu,p,repeat,rel_l2,l_inf,wall_time_s,update_count,warnings,timestamp`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::preset::SolverKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub preset: String,
    pub problem: String,
    pub solver: SolverKind,
    pub m: usize,
    pub final_time: f64,
    pub n: usize,
    pub r: f64,
    pub kappa: u32,
    pub gamma: f64,
    pub dt: f64,
    pub c: f64,
    pub nu: f64,
    pub beta: f64,
    pub mu: f64,
    pub p: f64,
    pub repeat: usize,
    pub rel_l2: f64,
    pub l_inf: f64,
    /// Median over `repeat` solves.
    pub wall_time_s: f64,
    pub update_count: usize,
    pub warnings: usize,
    pub timestamp: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

pub fn write_records<W: Write>(
    records: &[RunRecord],
    format: OutputFormat,
    out: W,
) -> std::io::Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            for r in records {
                w.serialize(r)?;
            }
            w.flush()
        }
        OutputFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)?;
            writeln!(out)
        }
    }
}

pub fn read_csv(text: &str) -> Result<Vec<RunRecord>, csv::Error> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect()
}
