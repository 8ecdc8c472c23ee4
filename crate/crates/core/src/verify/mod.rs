//! Desk-scale experiments for the inequalities and iterations of the theory.
//!
//! Constants are measured, never assumed: every experiment reports the
//! smallest constant consistent with the data and the harness checks its
//! stability under refinement and parameter sweeps.

pub mod degiorgi;
pub mod gain;
pub mod gn;
pub mod local;
pub mod transfer;

use serde::Serialize;

use crate::error::Result;
use crate::field::{Box3, Field, PhaseFn};
use crate::numerics::fmt_f64;

pub use degiorgi::{degiorgi_run, end_to_end, fast_convergence_lemma, DeGiorgiState, DgMode, EndToEndReport, FastLemma, StartValue};
pub use gain::{subsolution_gain_experiment, GainReport};
pub use gn::{gn_experiment, GnReport};
pub use local::{energy_experiment, localized_gain_experiment, EnergyReport, LocalGainReport};
pub use transfer::{dyadic_h_set, transfer_experiment, TransferReport};

/// How a subsolution input was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputKind {
    SolverTruncation,
    Manufactured,
}

impl InputKind {
    pub fn tag(self) -> &'static str {
        match self {
            InputKind::SolverTruncation => "solver-truncation",
            InputKind::Manufactured => "manufactured",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub quantity: String,
    pub value: f64,
    pub predicted: String,
    pub measured: f64,
    pub pass: bool,
    pub tolerance: f64,
}

/// A flat experiment report, one row per checked or recorded quantity.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub const CSV_HEADER: &'static str = "quantity,value,predicted,measured,pass,tolerance,config_hash,version";

    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            rows: Vec::new(),
        }
    }

    pub fn check(
        &mut self,
        quantity: impl Into<String>,
        value: f64,
        predicted: impl Into<String>,
        measured: f64,
        pass: bool,
        tolerance: f64,
    ) {
        self.rows.push(Row {
            quantity: quantity.into(),
            value,
            predicted: predicted.into(),
            measured,
            pass,
            tolerance,
        });
    }

    /// A recorded value with nothing to compare against.
    pub fn record(&mut self, quantity: impl Into<String>, value: f64) {
        self.check(quantity, value, "", value, true, 0.0);
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> Vec<&Row> {
        self.rows.iter().filter(|r| !r.pass).collect()
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    /// Appends `other` with every quantity renamed to `{prefix}_{quantity}`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: Report) {
        self.rows.extend(other.rows.into_iter().map(|r| Row {
            quantity: format!("{prefix}_{}", r.quantity),
            ..r
        }));
    }

    pub fn to_csv(&self, config_hash: &str, version: &str) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.quantity,
                fmt_f64(r.value),
                r.predicted,
                fmt_f64(r.measured),
                r.pass,
                fmt_f64(r.tolerance),
                config_hash,
                version
            ));
        }
        s
    }
}

/// Samples a phase function at the cell centres of a grid.
pub fn sample(f: &dyn PhaseFn, bbox: Box3, shape: [usize; 3]) -> Result<Field> {
    Field::from_fn(bbox, shape, |t, x, v| f.at(t, x, v))
}

/// max/min of positive finite values; `None` if any entry is not.
pub(crate) fn spread(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() || xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return None;
    }
    let mx = xs.iter().cloned().fold(f64::MIN, f64::max);
    let mn = xs.iter().cloned().fold(f64::MAX, f64::min);
    Some(mx / mn)
}
