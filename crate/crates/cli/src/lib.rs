//! Plumbing for the command line harness: grid parsing, text renderings of
//! masks and coordinate sets, CSV tables for sweep reports, and the wrapper
//! envelope every verification run is emitted in.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;

use harperlab_core::sweeps::{
    CleanedSweep, Corollary2Sweep, DualitySweep, GridEntry, HarperSampledSweep, HarperSweep,
    KkSweep, LymSweep, MonotoneSweep, RefinedSweep, SegmentDualityReport, StabilityGridSweep,
};

/// Inclusive upper bounds parsed from a grid string like `n<=40,r<=5`.
pub fn parse_grid(s: &str) -> Result<BTreeMap<String, u64>> {
    let mut out = BTreeMap::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (key, bound) = part
            .split_once("<=")
            .or_else(|| part.split_once('≤'))
            .ok_or_else(|| anyhow!("grid entry `{part}` is not of the form name<=bound"))?;
        let key = key.trim().to_ascii_lowercase();
        let bound: u64 = bound
            .trim()
            .parse()
            .with_context(|| format!("grid bound in `{part}`"))?;
        if out.insert(key.clone(), bound).is_some() {
            bail!("grid names `{key}` twice");
        }
    }
    if out.is_empty() {
        bail!("empty grid");
    }
    Ok(out)
}

/// Pull one bound out of a parsed grid, with a default, rejecting unknown
/// names so typos do not silently widen a sweep.
pub fn grid_bound(grid: &BTreeMap<String, u64>, key: &str, default: u64) -> u64 {
    grid.get(key).copied().unwrap_or(default)
}

pub fn check_grid_keys(grid: &BTreeMap<String, u64>, allowed: &[&str]) -> Result<()> {
    for key in grid.keys() {
        if !allowed.contains(&key.as_str()) {
            bail!("unknown grid name `{key}`; expected one of {allowed:?}");
        }
    }
    Ok(())
}

/// 1-based coordinate list `2,4,5` -> ascending coords.
pub fn parse_coords(s: &str) -> Result<Vec<u32>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        out.push(part.parse::<u32>().with_context(|| format!("coordinate `{part}`"))?);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Render a mask as its 1-based coordinate set, `{1,3}` style.
pub fn coords_text(mask: u64) -> String {
    let mut parts = Vec::new();
    let mut rest = mask;
    while rest != 0 {
        parts.push((rest.trailing_zeros() + 1).to_string());
        rest &= rest - 1;
    }
    format!("{{{}}}", parts.join(","))
}

/// One emitted verification run: the envelope is stable so downstream
/// tooling can key on `target`, `result`, and `pass`.
#[derive(Serialize)]
pub struct VerificationRun {
    pub target: String,
    pub scope: serde_json::Value,
    /// "pass" or "fail" for exhaustive scopes, "evidence" or "fail" for
    /// sampled ones.
    pub result: String,
    pub pass: bool,
    pub report: serde_json::Value,
}

impl VerificationRun {
    pub fn new<T: Serialize>(
        target: &str,
        scope: serde_json::Value,
        exhaustive: bool,
        pass: bool,
        report: &T,
    ) -> Result<Self> {
        let result = match (pass, exhaustive) {
            (true, true) => "pass",
            (true, false) => "evidence",
            (false, _) => "fail",
        };
        Ok(VerificationRun {
            target: target.to_string(),
            scope,
            result: result.to_string(),
            pass,
            report: serde_json::to_value(report)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// A sweep rendered as comma separated rows, one line per tuple.
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Sweep reports that admit a per-tuple tabular form.
pub trait CsvReport {
    fn csv(&self) -> CsvTable;
}

/// Stack same-shaped tables into one, a row block per source.
pub fn concat_csv(tables: impl IntoIterator<Item = CsvTable>) -> Result<CsvTable> {
    let mut iter = tables.into_iter();
    let mut first = iter.next().ok_or_else(|| anyhow!("no tables to join"))?;
    for t in iter {
        if t.header != first.header {
            bail!("sweep tables disagree on columns");
        }
        first.rows.extend(t.rows);
    }
    Ok(first)
}

impl CsvReport for HarperSweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec!["n", "l", "brute_min", "profile", "witness", "matches"],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        self.n.to_string(),
                        r.l.to_string(),
                        r.brute_min.to_string(),
                        r.profile.to_string(),
                        format!("{:#x}", r.witness),
                        r.matches.to_string(),
                    ]
                })
                .collect(),
        }
    }
}

impl CsvReport for HarperSampledSweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec!["n", "samples", "violations", "first_violation"],
            rows: vec![vec![
                self.n.to_string(),
                self.samples.to_string(),
                self.violations.to_string(),
                self.first_violation.map_or_else(String::new, |v| v.to_string()),
            ]],
        }
    }
}

impl CsvReport for KkSweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec![
                "n",
                "r",
                "m",
                "min_shadow",
                "segment_shadow",
                "cascade",
                "witness",
                "kk_ok",
                "lym_ok",
            ],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        self.n.to_string(),
                        self.r.to_string(),
                        r.m.to_string(),
                        r.min_shadow.to_string(),
                        r.segment_shadow.to_string(),
                        r.cascade.to_string(),
                        format!("{:#x}", r.witness),
                        r.kk_ok.to_string(),
                        r.lym_ok.to_string(),
                    ]
                })
                .collect(),
        }
    }
}

impl CsvReport for LymSweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec![
                "n",
                "r",
                "samples",
                "lower_violations",
                "upper_violations",
                "first_violation",
            ],
            rows: vec![vec![
                self.n.to_string(),
                self.r.to_string(),
                self.samples.to_string(),
                self.lower_violations.to_string(),
                self.upper_violations.to_string(),
                self.first_violation.map_or_else(String::new, |v| v.to_string()),
            ]],
        }
    }
}

impl CsvReport for Corollary2Sweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec!["n", "k", "checked", "violations", "min_slack", "witness"],
            rows: vec![vec![
                self.n.to_string(),
                self.k.to_string(),
                self.checked.to_string(),
                self.violations.to_string(),
                self.min_slack.clone(),
                format!("{:#x}", self.witness),
            ]],
        }
    }
}

impl CsvReport for RefinedSweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec![
                "n",
                "r",
                "i",
                "lo",
                "hi",
                "sizes",
                "bound_ok",
                "endpoint_equality",
                "dominates_lym",
                "cascade_ok",
            ],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.r.to_string(),
                        r.i.to_string(),
                        r.lo.clone(),
                        r.hi.clone(),
                        r.sizes.to_string(),
                        r.bound_ok.to_string(),
                        r.endpoint_equality.to_string(),
                        r.dominates_lym.to_string(),
                        r.cascade_ok.to_string(),
                    ]
                })
                .collect(),
        }
    }
}

impl CsvReport for MonotoneSweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec!["n", "r", "i_max", "factors_ok", "weighted_identity"],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.r.to_string(),
                        r.i_max.to_string(),
                        r.factors_ok.to_string(),
                        r.weighted_identity.to_string(),
                    ]
                })
                .collect(),
        }
    }
}

impl CsvReport for CleanedSweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec!["n", "r", "checked", "all_ok", "min_slack", "argmin_a"],
            rows: self
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.r.to_string(),
                        r.checked.to_string(),
                        r.all_ok.to_string(),
                        r.min_slack.clone(),
                        r.argmin_a.to_string(),
                    ]
                })
                .collect(),
        }
    }
}

impl CsvReport for DualitySweep {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec!["kind", "n", "r", "samples_or_checked", "violations", "ok"],
            rows: vec![vec![
                "families".to_string(),
                self.n.to_string(),
                self.r.to_string(),
                self.samples.to_string(),
                self.violations.to_string(),
                (self.violations == 0).to_string(),
            ]],
        }
    }
}

impl CsvReport for SegmentDualityReport {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec!["kind", "n", "r", "samples_or_checked", "violations", "ok"],
            rows: vec![vec![
                "segments".to_string(),
                self.n.to_string(),
                String::new(),
                self.checked.to_string(),
                self.first_mismatch.clone().unwrap_or_default(),
                self.all_ok.to_string(),
            ]],
        }
    }
}

impl CsvReport for GridEntry {
    fn csv(&self) -> CsvTable {
        CsvTable {
            header: vec![
                "n",
                "k",
                "p_int",
                "p",
                "hypothesis_ok",
                "satisfied",
                "outliers_exact",
                "center_recovered",
                "accounting_ok",
                "claim1_ok",
            ],
            rows: vec![vec![
                self.n.to_string(),
                self.k.to_string(),
                self.p_int.to_string(),
                self.p.clone(),
                self.report.hypothesis_ok.to_string(),
                self.report.satisfied.to_string(),
                self.outliers_exact.to_string(),
                self.center_recovered.to_string(),
                self.report.accounting_ok.to_string(),
                self.report.claim1_ok.to_string(),
            ]],
        }
    }
}

impl CsvReport for StabilityGridSweep {
    fn csv(&self) -> CsvTable {
        let mut rows = Vec::new();
        for entry in &self.entries {
            rows.extend(entry.csv().rows);
        }
        CsvTable {
            header: vec![
                "n",
                "k",
                "p_int",
                "p",
                "hypothesis_ok",
                "satisfied",
                "outliers_exact",
                "center_recovered",
                "accounting_ok",
                "claim1_ok",
            ],
            rows,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_strings_parse_both_ascii_and_unicode() {
        let grid = parse_grid("n<=40,r<=5").unwrap();
        assert_eq!(grid.get("n"), Some(&40));
        assert_eq!(grid.get("r"), Some(&5));
        let grid = parse_grid("N ≤ 12").unwrap();
        assert_eq!(grid.get("n"), Some(&12));
        assert!(parse_grid("n=40").is_err());
        assert!(parse_grid("").is_err());
        assert!(parse_grid("n<=4,n<=5").is_err());
        check_grid_keys(&parse_grid("n<=4").unwrap(), &["n", "r"]).unwrap();
        assert!(check_grid_keys(&parse_grid("q<=4").unwrap(), &["n", "r"]).is_err());
    }

    #[test]
    fn coordinate_round_trip() {
        assert_eq!(parse_coords("2,4,5").unwrap(), vec![2, 4, 5]);
        assert_eq!(parse_coords("5, 2, 4,4").unwrap(), vec![2, 4, 5]);
        assert!(parse_coords("2,x").is_err());
        assert_eq!(coords_text(0b1010), "{2,4}");
        assert_eq!(coords_text(0), "{}");
    }

    #[test]
    fn concat_requires_matching_headers() {
        let a = CsvTable { header: vec!["a"], rows: vec![vec!["1".into()]] };
        let b = CsvTable { header: vec!["a"], rows: vec![vec!["2".into()]] };
        let joined = concat_csv([a, b]).unwrap();
        assert_eq!(joined.rows.len(), 2);
        let c = CsvTable { header: vec!["z"], rows: vec![] };
        let d = CsvTable { header: vec!["a"], rows: vec![] };
        assert!(concat_csv([c, d]).is_err());
        assert!(concat_csv(Vec::new()).is_err());
    }

    #[test]
    fn csv_rendering_is_line_per_row() {
        let table = CsvTable {
            header: vec!["a", "b"],
            rows: vec![
                vec!["1".into(), "2".into()],
                vec!["3".into(), "4".into()],
            ],
        };
        assert_eq!(table.render(), "a,b\n1,2\n3,4\n");
    }

    #[test]
    fn envelope_marks_sampled_passes_as_evidence() {
        let run = VerificationRun::new(
            "x",
            serde_json::json!({"mode": "sampled"}),
            false,
            true,
            &serde_json::json!({}),
        )
        .unwrap();
        assert_eq!(run.result, "evidence");
        let run = VerificationRun::new("x", serde_json::json!({}), true, false, &serde_json::json!({}))
            .unwrap();
        assert_eq!(run.result, "fail");
        assert!(run.to_json().unwrap().ends_with('\n'));
    }
}
