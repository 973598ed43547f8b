//! Convergence studies: one solve per resolution and scheme, errors at the
//! final level, least-squares orders.

use std::path::{Path, PathBuf};

use log::info;
use serde_json::{json, Value};
use transport_core::io::fmt_f64;
use transport_core::reference::fit_order;
use transport_core::{Error, Result};

use crate::config::{Resolved, Scheme};
use crate::pipeline::{check, opt, solve, Artifacts, ERROR_COLUMNS};

/// One row of the convergence table.
#[derive(Debug, Clone)]
pub struct StudyRow {
    pub scheme: Scheme,
    pub h: f64,
    pub tau: f64,
    pub errors: [Option<f64>; 8],
}

/// Fitted order per error column, `None` when any sample is missing or
/// not positive.
pub fn fitted_orders(rows: &[&StudyRow]) -> [Option<f64>; 8] {
    let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
    std::array::from_fn(|k| {
        let errs: Option<Vec<f64>> = rows.iter().map(|r| r.errors[k].filter(|e| *e > 0.0)).collect();
        errs.and_then(|e| fit_order(&hs, &e).ok())
    })
}

pub fn study(cfg: &Resolved, resolutions: &[u32], dir: &Path) -> Result<PathBuf> {
    if resolutions.len() < 2 {
        return Err(Error::Config("study.resolutions: at least two resolutions are needed".into()));
    }
    let schemes = if cfg.study.schemes.is_empty() { vec![cfg.scheme] } else { cfg.study.schemes.clone() };
    // Every resolution passes the gates before anything runs.
    for &scheme in &schemes {
        for &n in resolutions {
            check(&cfg.with_spacing(1.0 / n as f64, scheme))?;
        }
    }
    let mut art = Artifacts::create(dir)?;
    let mut rows = Vec::new();
    let mut summaries: Vec<Value> = Vec::new();
    for &scheme in &schemes {
        for &n in resolutions {
            let mut r = cfg.with_spacing(1.0 / n as f64, scheme);
            r.output.snapshot_every = 0;
            info!("study: {} at h = 1/{n}", scheme.as_str());
            let outcome = solve(&r, None, true)?;
            let last = outcome.errors.last().copied().unwrap_or_default();
            rows.push(StudyRow { scheme, h: r.h, tau: outcome.tau, errors: last.values() });
            summaries.push(outcome.summary);
        }
    }
    art.write("convergence.csv", |w| {
        let orders: Vec<String> = ERROR_COLUMNS.iter().map(|c| format!("{c}_order")).collect();
        writeln!(w, "scheme,h,tau,{},{}", ERROR_COLUMNS.join(","), orders.join(","))?;
        for &scheme in &schemes {
            let mine: Vec<&StudyRow> = rows.iter().filter(|r| r.scheme == scheme).collect();
            let fit = fitted_orders(&mine);
            let fit: Vec<String> = fit.iter().map(|v| opt(*v)).collect();
            for r in &mine {
                let errs: Vec<String> = r.errors.iter().map(|v| opt(*v)).collect();
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    scheme.as_str(),
                    fmt_f64(r.h),
                    fmt_f64(r.tau),
                    errs.join(","),
                    fit.join(",")
                )?;
            }
        }
        Ok(())
    })?;
    art.write_json("study.json", &json!({ "name": cfg.name, "resolutions": resolutions, "runs": summaries }))?;
    art.finish()
}
