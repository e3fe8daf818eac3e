//! Panel CSV input and output.
//!
//! Long format with a required header: `date,lead,nights_share,gbv_share`.
//! One row per (date, lead); zero rows may be omitted and read back as
//! zero mass. Leads beyond the support bound are rejected by default; a
//! lenient mode drops them, renormalizes the day, and reports how many
//! rows were dropped.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};
use crate::num::Real;
use crate::pmf::{DailyPmf, Metric, PairedDay, MAX_LEAD, SUPPORT_LEN};

pub const PANEL_HEADER: &str = "date,lead,nights_share,gbv_share";

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    /// Downgrade leads beyond the support bound from an error to a drop
    /// plus renormalization.
    pub lenient_leads: bool,
}

#[derive(Clone, Debug)]
pub struct PanelRead<F: Real = f64> {
    pub days: Vec<PairedDay<F>>,
    /// Rows dropped under [`ReadOptions::lenient_leads`].
    pub dropped_overflow_rows: usize,
}

pub fn read_panel_csv<F: Real>(path: impl AsRef<Path>, opts: &ReadOptions) -> Result<PanelRead<F>> {
    let text = std::fs::read_to_string(path)?;
    parse_panel(&text, opts)
}

pub fn parse_panel<F: Real>(text: &str, opts: &ReadOptions) -> Result<PanelRead<F>> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((_, line)) => break line,
            None => return Err(Error::EmptyInput),
        }
    };
    let mut diagnostics: Vec<String> = Vec::new();
    if header.trim() != PANEL_HEADER {
        return Err(Error::InvalidPanel(vec![format!(
            "line 1: expected header `{PANEL_HEADER}`, got `{}`",
            header.trim()
        )]));
    }

    struct DayAccum {
        nights: Vec<f64>,
        gbv: Vec<f64>,
        seen: Vec<bool>,
        dropped: usize,
    }
    let mut days: BTreeMap<NaiveDate, DayAccum> = BTreeMap::new();
    let mut dropped = 0usize;

    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            diagnostics.push(format!(
                "line {line_no}: expected 4 fields, got {}",
                fields.len()
            ));
            continue;
        }
        let date: NaiveDate = match fields[0].trim().parse() {
            Ok(d) => d,
            Err(_) => {
                diagnostics.push(format!("line {line_no}: bad date `{}`", fields[0]));
                continue;
            }
        };
        let lead: usize = match fields[1].trim().parse() {
            Ok(l) => l,
            Err(_) => {
                diagnostics.push(format!("line {line_no}: bad lead `{}`", fields[1]));
                continue;
            }
        };
        let nights: f64 = match fields[2].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                diagnostics.push(format!("line {line_no}: bad nights_share `{}`", fields[2]));
                continue;
            }
        };
        let gbv: f64 = match fields[3].trim().parse() {
            Ok(v) => v,
            Err(_) => {
                diagnostics.push(format!("line {line_no}: bad gbv_share `{}`", fields[3]));
                continue;
            }
        };
        let entry = days.entry(date).or_insert_with(|| DayAccum {
            nights: vec![0.0; SUPPORT_LEN],
            gbv: vec![0.0; SUPPORT_LEN],
            seen: vec![false; SUPPORT_LEN],
            dropped: 0,
        });
        if lead > MAX_LEAD {
            if opts.lenient_leads {
                dropped += 1;
                entry.dropped += 1;
            } else {
                diagnostics.push(format!(
                    "line {line_no}: lead {lead} beyond the {MAX_LEAD}-day support"
                ));
            }
            continue;
        }
        if entry.seen[lead] {
            diagnostics.push(format!(
                "line {line_no}: duplicate row for {date} lead {lead}"
            ));
            continue;
        }
        entry.seen[lead] = true;
        entry.nights[lead] = nights;
        entry.gbv[lead] = gbv;
    }

    let mut out = Vec::with_capacity(days.len());
    for (date, mut accum) in days {
        if accum.dropped > 0 {
            renormalize_in_place(&mut accum.nights);
            renormalize_in_place(&mut accum.gbv);
        }
        let nights = DailyPmf::new(date, Metric::Nights, to_scalar(&accum.nights));
        let gbv = DailyPmf::new(date, Metric::Gbv, to_scalar(&accum.gbv));
        match (nights, gbv) {
            (Ok(n), Ok(g)) => match PairedDay::new(n, g) {
                Ok(day) => out.push(day),
                Err(e) => diagnostics.push(format!("{date}: {e}")),
            },
            (n, g) => {
                if let Err(e) = n {
                    diagnostics.push(format!("{date} nights: {e}"));
                }
                if let Err(e) = g {
                    diagnostics.push(format!("{date} gbv: {e}"));
                }
            }
        }
    }

    if !diagnostics.is_empty() {
        return Err(Error::InvalidPanel(diagnostics));
    }
    if out.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(PanelRead {
        days: out,
        dropped_overflow_rows: dropped,
    })
}

fn renormalize_in_place(mass: &mut [f64]) {
    let total: f64 = mass.iter().sum();
    if total > 0.0 {
        for v in mass.iter_mut() {
            *v /= total;
        }
    }
}

fn to_scalar<F: Real>(mass: &[f64]) -> Vec<F> {
    mass.iter().map(|&v| F::cst(v)).collect()
}

/// Serializes a panel in the standard input format. Rows where both
/// shares are zero are omitted.
pub fn panel_to_csv<F: Real>(days: &[PairedDay<F>]) -> String {
    let mut out = String::from(PANEL_HEADER);
    out.push('\n');
    for day in days {
        for lead in 0..SUPPORT_LEN {
            let n = day.nights.mass()[lead];
            let g = day.gbv.mass()[lead];
            if n == F::zero() && g == F::zero() {
                continue;
            }
            out.push_str(&format!("{},{},{},{}\n", day.date, lead, n, g));
        }
    }
    out
}

pub fn write_panel_csv<F: Real>(path: impl AsRef<Path>, days: &[PairedDay<F>]) -> Result<()> {
    std::fs::write(path, panel_to_csv(days))?;
    Ok(())
}
