//! CSV rendering of trial and aggregate results.
//!
//! Numbers are written with nine significant digits in the style of C's
//! `%.9g`, lines end in `\n`, and the output depends only on the values, so
//! a fixed config reproduces files byte for byte.

use std::fmt::Write as _;

use crate::engine::{AggregateResult, TrialResult};

pub const ROUNDS_HEADER: &str = "trial,t,arm,reward,cum_reward,avg_reward_per_round,delta_reg";
pub const SUMMARY_HEADER: &str = "t,mean_avg_reward,std_avg_reward,mean_delta_reg";

const SIGNIFICANT: i32 = 9;

/// Formats `x` like `printf("%.9g", x)`.
pub fn format_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    // The exponent after rounding to nine digits decides the notation.
    let sci = format!("{:.*e}", (SIGNIFICANT - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIGNIFICANT).contains(&exp) {
        let decimals = (SIGNIFICANT - 1 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn rounds_csv(trials: &[TrialResult]) -> String {
    let rows: usize = trials.iter().map(|t| t.rows.len()).sum();
    let mut out = String::with_capacity(64 * (rows + 1));
    out.push_str(ROUNDS_HEADER);
    out.push('\n');
    for trial in trials {
        for r in &trial.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                trial.trial,
                r.t,
                r.arm,
                format_g9(r.reward),
                format_g9(r.cum_reward),
                format_g9(r.avg_reward),
                format_g9(r.delta_reg)
            )
            .expect("writing to a String");
        }
    }
    out
}

pub fn summary_csv(aggregate: &AggregateResult) -> String {
    let mut out = String::with_capacity(48 * (aggregate.mean_avg_reward.len() + 1));
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for (i, ((m, s), d)) in aggregate
        .mean_avg_reward
        .iter()
        .zip(&aggregate.std_avg_reward)
        .zip(&aggregate.mean_delta_reg)
        .enumerate()
    {
        writeln!(
            out,
            "{},{},{},{}",
            i + 1,
            format_g9(*m),
            format_g9(*s),
            format_g9(*d)
        )
        .expect("writing to a String");
    }
    out
}

#[cfg(feature = "cli")]
pub use files::*;

#[cfg(feature = "cli")]
mod files {
    use std::io::Write;
    use std::path::{Path, PathBuf};

    use super::{rounds_csv, summary_csv};
    use crate::engine::Experiment;

    /// An I/O failure together with the path involved.
    #[derive(Debug, thiserror::Error)]
    #[error("{}: {source}", path.display())]
    pub struct OutputError {
        pub path: PathBuf,
        #[source]
        pub source: std::io::Error,
    }

    fn at(path: &Path) -> impl FnOnce(std::io::Error) -> OutputError + '_ {
        move |source| OutputError {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Writes each `(path, contents)` pair to a temporary file beside its
    /// target and renames them into place only after all writes succeed.
    pub fn write_all_atomic(files: &[(PathBuf, String)]) -> Result<(), OutputError> {
        let mut staged = Vec::with_capacity(files.len());
        for (path, contents) in files {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            std::fs::create_dir_all(dir).map_err(at(dir))?;
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(at(dir))?;
            tmp.write_all(contents.as_bytes()).map_err(at(path))?;
            tmp.as_file().sync_all().map_err(at(path))?;
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            tmp.persist(path).map_err(|e| OutputError {
                path: path.clone(),
                source: e.error,
            })?;
        }
        Ok(())
    }

    /// Paths `<dir>/<stem>_rounds.csv` and `<dir>/<stem>_summary.csv`.
    pub fn csv_paths(dir: &Path, stem: &str) -> (PathBuf, PathBuf) {
        (
            dir.join(format!("{stem}_rounds.csv")),
            dir.join(format!("{stem}_summary.csv")),
        )
    }

    /// Writes both CSVs for an experiment and returns their paths.
    pub fn export_csv(
        experiment: &Experiment,
        dir: &Path,
        stem: &str,
    ) -> Result<(PathBuf, PathBuf), OutputError> {
        let (rounds, summary) = csv_paths(dir, stem);
        write_all_atomic(&[
            (rounds.clone(), rounds_csv(&experiment.trials)),
            (summary.clone(), summary_csv(&experiment.aggregate)),
        ])?;
        Ok((rounds, summary))
    }
}
