//! Criteria-weighted conformity scoring and ranking of modeling-approach
//! assessments.
//!
//! Each approach gets a conformity value in [0, 1] per criterion; an
//! approach's total is the weighted sum of its values. Ranking is by total,
//! descending, with ties grouped and reported rather than broken — deciding
//! among tied approaches is a qualitative judgement, not arithmetic.

mod files;

pub use files::{parse_assessments, parse_criteria};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use thiserror::Error;

/// A benchmark criterion and its importance.
#[derive(Debug, Clone, PartialEq)]
pub struct Criterion {
    pub name: String,
    pub weight: f64,
}

impl Criterion {
    pub fn new(name: impl Into<String>, weight: f64) -> Result<Criterion, ScoreError> {
        let name = name.into();
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(ScoreError::BadWeight { criterion: name, weight });
        }
        Ok(Criterion { name, weight })
    }
}

/// One approach's conformity values, keyed by criterion name.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub approach: String,
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ScoreError {
    #[error("criterion `{criterion}` has non-positive weight {weight}")]
    BadWeight { criterion: String, weight: f64 },
    #[error("no criteria configured")]
    EmptyCriteria,
    #[error("duplicate criterion `{0}`")]
    DuplicateCriterion(String),
    #[error("duplicate approach `{0}`")]
    DuplicateApproach(String),
    #[error("approach `{approach}`: unknown criterion `{criterion}`")]
    UnknownCriterion { approach: String, criterion: String },
    #[error("approach `{approach}`: missing value for criterion `{criterion}`")]
    MissingCriterion { approach: String, criterion: String },
    #[error("approach `{approach}`: value {value} for `{criterion}` is outside [0, 1]")]
    ValueOutOfRange { approach: String, criterion: String, value: f64 },
    #[error("{0}")]
    Parse(String),
}

/// One scored approach.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreEntry {
    pub approach: String,
    pub total: f64,
    /// 1-based competition rank (ties share a rank).
    pub rank: usize,
    /// Index into [`ScoreBoard::tie_groups`].
    pub group: usize,
}

/// Scores ranked descending, ties grouped explicitly.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBoard {
    pub entries: Vec<ScoreEntry>,
    /// Approach names per tie group, best group first.
    pub tie_groups: Vec<Vec<String>>,
    pub max_possible: f64,
}

impl ScoreBoard {
    pub fn total_of(&self, approach: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.approach == approach).map(|e| e.total)
    }

    /// Names in the best tie group.
    pub fn top_group(&self) -> &[String] {
        self.tie_groups.first().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Aligned human-readable table.
    pub fn render_table(&self) -> String {
        let name_width = self
            .entries
            .iter()
            .map(|e| e.approach.len())
            .chain(["approach".len()])
            .max()
            .unwrap_or(8);
        let mut out = String::new();
        let _ = writeln!(out, "{:<5} {:<name_width$} {:>8}", "rank", "approach", "total");
        for entry in &self.entries {
            let tie = if self.tie_groups[entry.group].len() > 1 { "=" } else { " " };
            let _ = writeln!(
                out,
                "{:<5} {:<name_width$} {:>8}",
                format!("{}{tie}", entry.rank),
                entry.approach,
                format_total(entry.total),
            );
        }
        let _ = writeln!(out, "(maximum possible total: {})", format_total(self.max_possible));
        out
    }

    /// Machine-readable lines: `rank<TAB>approach<TAB>total<TAB>tie_group`.
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for entry in &self.entries {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}",
                entry.rank,
                entry.approach,
                format_total(entry.total),
                entry.group + 1
            );
        }
        out
    }
}

fn format_total(total: f64) -> String {
    format!("{total}")
}

fn check_inputs(criteria: &[Criterion], assessments: &[Assessment]) -> Result<(), ScoreError> {
    if criteria.is_empty() {
        return Err(ScoreError::EmptyCriteria);
    }
    let mut names = BTreeSet::new();
    for criterion in criteria {
        if !(criterion.weight > 0.0) || !criterion.weight.is_finite() {
            return Err(ScoreError::BadWeight {
                criterion: criterion.name.clone(),
                weight: criterion.weight,
            });
        }
        if !names.insert(criterion.name.as_str()) {
            return Err(ScoreError::DuplicateCriterion(criterion.name.clone()));
        }
    }
    let mut approaches = BTreeSet::new();
    for assessment in assessments {
        if !approaches.insert(assessment.approach.as_str()) {
            return Err(ScoreError::DuplicateApproach(assessment.approach.clone()));
        }
        for (criterion, value) in &assessment.values {
            if !names.contains(criterion.as_str()) {
                return Err(ScoreError::UnknownCriterion {
                    approach: assessment.approach.clone(),
                    criterion: criterion.clone(),
                });
            }
            if !(0.0..=1.0).contains(value) || !value.is_finite() {
                return Err(ScoreError::ValueOutOfRange {
                    approach: assessment.approach.clone(),
                    criterion: criterion.clone(),
                    value: *value,
                });
            }
        }
        for criterion in criteria {
            if !assessment.values.contains_key(&criterion.name) {
                return Err(ScoreError::MissingCriterion {
                    approach: assessment.approach.clone(),
                    criterion: criterion.name.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Weighted totals and descending ranking with explicit tie groups.
pub fn score(criteria: &[Criterion], assessments: &[Assessment]) -> Result<ScoreBoard, ScoreError> {
    check_inputs(criteria, assessments)?;
    let max_possible: f64 = criteria.iter().map(|c| c.weight).sum();

    let mut totals: Vec<(String, f64)> = assessments
        .iter()
        .map(|assessment| {
            // Summed in criterion order, so equal value vectors produce
            // bitwise-equal totals and ties are exact.
            let total = criteria
                .iter()
                .map(|criterion| assessment.values[&criterion.name] * criterion.weight)
                .sum::<f64>();
            (assessment.approach.clone(), total)
        })
        .collect();
    totals.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut entries: Vec<ScoreEntry> = Vec::with_capacity(totals.len());
    let mut tie_groups: Vec<Vec<String>> = Vec::new();
    for (index, (approach, total)) in totals.iter().enumerate() {
        let same_as_previous =
            index > 0 && totals[index - 1].1.total_cmp(total).is_eq();
        if !same_as_previous {
            tie_groups.push(Vec::new());
        }
        let group = tie_groups.len() - 1;
        tie_groups[group].push(approach.clone());
        let rank = index + 1 - (tie_groups[group].len() - 1);
        entries.push(ScoreEntry { approach: approach.clone(), total: *total, rank, group });
    }
    Ok(ScoreBoard { entries, tie_groups, max_possible })
}

/// How the top of the ranking responds to weight perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub criterion: String,
    pub up_top: Vec<String>,
    pub down_top: Vec<String>,
    pub up_changed: bool,
    pub down_changed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub perturbation: f64,
    pub baseline_top: Vec<String>,
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "baseline top group: {} (perturbation +/-{}%)",
            self.baseline_top.join(", "),
            self.perturbation * 100.0
        );
        for row in &self.rows {
            let describe = |changed: bool, top: &[String]| {
                if changed {
                    format!("changes -> {}", top.join(", "))
                } else {
                    "unchanged".to_owned()
                }
            };
            let _ = writeln!(
                out,
                "{}: up {}; down {}",
                row.criterion,
                describe(row.up_changed, &row.up_top),
                describe(row.down_changed, &row.down_top),
            );
        }
        out
    }
}

/// Rescales one criterion's weight by (1 +/- perturbation) and reports
/// whether the top tie group changes.
pub fn sensitivity(
    criteria: &[Criterion],
    assessments: &[Assessment],
    perturbation: f64,
) -> Result<SensitivityReport, ScoreError> {
    if !(perturbation > 0.0) || !perturbation.is_finite() {
        return Err(ScoreError::Parse(format!(
            "perturbation must be positive, got {perturbation}"
        )));
    }
    let baseline = score(criteria, assessments)?;
    let baseline_top = baseline.top_group().to_vec();
    let mut rows = Vec::with_capacity(criteria.len());
    for index in 0..criteria.len() {
        let scaled = |factor: f64| -> Result<Vec<String>, ScoreError> {
            let mut perturbed = criteria.to_vec();
            perturbed[index].weight *= factor;
            Ok(score(&perturbed, assessments)?.top_group().to_vec())
        };
        let up_top = scaled(1.0 + perturbation)?;
        let down_top = scaled(1.0 - perturbation)?;
        rows.push(SensitivityRow {
            criterion: criteria[index].name.clone(),
            up_changed: up_top != baseline_top,
            down_changed: down_top != baseline_top,
            up_top,
            down_top,
        });
    }
    Ok(SensitivityReport { perturbation, baseline_top, rows })
}

/// The built-in criterion set: decision-making authority 3, structure
/// information 3, existence of ports 4, port modification 1.
pub fn paper_preset() -> Vec<Criterion> {
    vec![
        Criterion { name: "decision_authority".into(), weight: 3.0 },
        Criterion { name: "structure_information".into(), weight: 3.0 },
        Criterion { name: "ports".into(), weight: 4.0 },
        Criterion { name: "port_modification".into(), weight: 1.0 },
    ]
}

/// Case/punctuation-insensitive approach-name key (`Cell-DEVS` and
/// `celldevs` match; the Greek rho spells out).
fn normalize_approach(name: &str) -> String {
    name.chars()
        .flat_map(|c| match c {
            'ρ' => "rho".chars().collect::<Vec<_>>(),
            c if c.is_ascii_alphanumeric() => vec![c.to_ascii_lowercase()],
            _ => Vec::new(),
        })
        .collect()
}

/// Constraint check against the published comparison: the six surveyed
/// approaches must be present with totals in [5.5, 10.25]; DynDEVS must
/// outscore Cell-DEVS; EDEVS, Cell-DEVS, and SysML must tie.
pub fn paper_check(board: &ScoreBoard) -> Result<(), Vec<String>> {
    const BAND: (f64, f64) = (5.5, 10.25);
    const SURVEYED: [&str; 6] =
        ["variabledevs", "dyndevs", "rhodevs", "edevs", "celldevs", "sysml"];

    let mut by_key: BTreeMap<String, f64> = BTreeMap::new();
    for entry in &board.entries {
        by_key.insert(normalize_approach(&entry.approach), entry.total);
    }

    let mut violations = Vec::new();
    for name in SURVEYED {
        match by_key.get(name) {
            None => violations.push(format!("missing surveyed approach `{name}`")),
            Some(&total) if total < BAND.0 || total > BAND.1 => violations.push(format!(
                "`{name}` total {total} outside the surveyed band [{}, {}]",
                BAND.0, BAND.1
            )),
            Some(_) => {}
        }
    }
    if let (Some(&dyn_devs), Some(&cell_devs)) = (by_key.get("dyndevs"), by_key.get("celldevs")) {
        if dyn_devs <= cell_devs {
            violations.push(format!(
                "DynDEVS ({dyn_devs}) must outscore Cell-DEVS ({cell_devs})"
            ));
        }
    }
    if let (Some(&edevs), Some(&cell_devs), Some(&sysml)) =
        (by_key.get("edevs"), by_key.get("celldevs"), by_key.get("sysml"))
    {
        if edevs != cell_devs || cell_devs != sysml {
            violations.push(format!(
                "EDEVS ({edevs}), Cell-DEVS ({cell_devs}), and SysML ({sysml}) must tie"
            ));
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assess(name: &str, values: [f64; 4]) -> Assessment {
        let criteria = paper_preset();
        Assessment {
            approach: name.to_owned(),
            values: criteria
                .iter()
                .zip(values)
                .map(|(c, v)| (c.name.clone(), v))
                .collect(),
        }
    }

    #[test]
    fn preset_weights_sum_to_eleven_and_all_ones_score_eleven() {
        let criteria = paper_preset();
        assert_eq!(criteria.iter().map(|c| c.weight).sum::<f64>(), 11.0);
        let board = score(&criteria, &[assess("full", [1.0, 1.0, 1.0, 1.0])]).unwrap();
        assert_eq!(board.total_of("full"), Some(11.0));
        assert_eq!(board.max_possible, 11.0);
        let zero = score(&criteria, &[assess("none", [0.0; 4])]).unwrap();
        assert_eq!(zero.total_of("none"), Some(0.0));
    }

    #[test]
    fn worked_example_weighted_sum() {
        // (0.5, 0.5, 1, 0) against weights (3, 3, 4, 1): 1.5 + 1.5 + 4 + 0.
        let board = score(&paper_preset(), &[assess("mix", [0.5, 0.5, 1.0, 0.0])]).unwrap();
        assert_eq!(board.total_of("mix"), Some(7.0));
    }

    #[test]
    fn identical_vectors_form_one_tie_group() {
        let board = score(
            &paper_preset(),
            &[
                assess("a", [0.5, 1.0, 0.75, 0.0]),
                assess("b", [0.5, 1.0, 0.75, 0.0]),
                assess("c", [0.5, 1.0, 0.75, 0.0]),
            ],
        )
        .unwrap();
        assert_eq!(board.tie_groups.len(), 1);
        assert_eq!(board.tie_groups[0].len(), 3);
        assert!(board.entries.iter().all(|e| e.rank == 1));
    }

    #[test]
    fn ranking_is_descending_with_competition_ranks() {
        let board = score(
            &paper_preset(),
            &[
                assess("low", [0.0, 0.0, 0.5, 0.0]),
                assess("high", [1.0, 1.0, 1.0, 1.0]),
                assess("mid1", [0.5, 0.5, 0.5, 0.5]),
                assess("mid2", [0.5, 0.5, 0.5, 0.5]),
            ],
        )
        .unwrap();
        let ranked: Vec<(&str, usize)> =
            board.entries.iter().map(|e| (e.approach.as_str(), e.rank)).collect();
        assert_eq!(ranked, vec![("high", 1), ("mid1", 2), ("mid2", 2), ("low", 4)]);
    }

    #[test]
    fn validation_errors() {
        let criteria = paper_preset();
        let mut bad = assess("bad", [1.5, 0.0, 0.0, 0.0]);
        assert!(matches!(
            score(&criteria, &[bad.clone()]),
            Err(ScoreError::ValueOutOfRange { .. })
        ));
        bad.values.insert(criteria[0].name.clone(), 0.5);
        bad.values.insert("mystery".into(), 0.5);
        assert!(matches!(
            score(&criteria, &[bad.clone()]),
            Err(ScoreError::UnknownCriterion { .. })
        ));
        bad.values.remove("mystery");
        bad.values.remove("ports");
        assert!(matches!(score(&criteria, &[bad]), Err(ScoreError::MissingCriterion { .. })));
        assert!(Criterion::new("x", 0.0).is_err());
        assert!(matches!(score(&[], &[]), Err(ScoreError::EmptyCriteria)));
    }

    #[test]
    fn sensitivity_examples() {
        let criteria = paper_preset();
        // All approaches identical: the fully tied top group never changes.
        let tied = vec![assess("a", [0.5; 4]), assess("b", [0.5; 4])];
        let report = sensitivity(&criteria, &tied, 0.25).unwrap();
        assert!(report.rows.iter().all(|r| !r.up_changed && !r.down_changed));

        // One approach dominating every criterion stays on top under any
        // positive rescaling.
        let dominated = vec![assess("top", [1.0; 4]), assess("rest", [0.2, 0.3, 0.1, 0.0])];
        let report = sensitivity(&criteria, &dominated, 0.9).unwrap();
        assert!(report.rows.iter().all(|r| !r.up_changed && !r.down_changed));
        assert_eq!(report.baseline_top, vec!["top".to_owned()]);
    }

    #[test]
    fn uniform_weight_scaling_preserves_ranking_and_scales_totals() {
        let criteria = paper_preset();
        let assessments = vec![
            assess("a", [0.9, 0.1, 0.4, 1.0]),
            assess("b", [0.3, 0.8, 0.6, 0.2]),
            assess("c", [0.3, 0.8, 0.6, 0.2]),
        ];
        let baseline = score(&criteria, &assessments).unwrap();
        let scaled_criteria: Vec<Criterion> = criteria
            .iter()
            .map(|c| Criterion { name: c.name.clone(), weight: c.weight * 2.5 })
            .collect();
        let scaled = score(&scaled_criteria, &assessments).unwrap();
        assert_eq!(baseline.tie_groups, scaled.tie_groups);
        for (a, b) in baseline.entries.iter().zip(&scaled.entries) {
            assert_eq!(a.approach, b.approach);
            assert!((b.total - a.total * 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn paper_check_accepts_and_rejects() {
        let criteria = paper_preset();
        let satisfying = vec![
            assess("Variable-DEVS", [0.0, 0.5, 1.0, 0.0]), // 5.5
            assess("DynDEVS", [1.0, 1.0, 0.5, 0.0]),       // 8
            assess("rhoDEVS", [1.0, 1.0, 0.75, 1.0]),      // 10
            assess("EDEVS", [0.0, 1.0, 1.0, 0.0]),         // 7
            assess("Cell-DEVS", [0.0, 1.0, 1.0, 0.0]),     // 7
            assess("SysML", [0.0, 1.0, 1.0, 0.0]),         // 7
            assess("DSDEVS", [0.0, 1.0, 0.0, 0.0]),        // extras are fine
        ];
        let board = score(&criteria, &satisfying).unwrap();
        assert!(paper_check(&board).is_ok());

        // DynDEVS must outscore Cell-DEVS.
        let mut flipped = satisfying.clone();
        flipped[1] = assess("DynDEVS", [0.0, 1.0, 0.75, 0.0]); // 6 < 7
        let board = score(&criteria, &flipped).unwrap();
        let violations = paper_check(&board).unwrap_err();
        assert!(violations.iter().any(|v| v.contains("outscore")), "{violations:?}");

        // Totals must stay inside the surveyed band.
        let mut outside = satisfying.clone();
        outside[0] = assess("Variable-DEVS", [0.0, 0.0, 1.0, 0.0]); // 4 < 5.5
        let board = score(&criteria, &outside).unwrap();
        let violations = paper_check(&board).unwrap_err();
        assert!(violations.iter().any(|v| v.contains("band")), "{violations:?}");

        // All six surveyed approaches must be present.
        let board = score(&criteria, &satisfying[..5]).unwrap();
        assert!(paper_check(&board).is_err());
    }

    #[test]
    fn name_normalization_matches_variant_spellings() {
        assert_eq!(normalize_approach("Cell-DEVS"), "celldevs");
        assert_eq!(normalize_approach("ρDEVS"), "rhodevs");
        assert_eq!(normalize_approach("rho_devs"), "rhodevs");
    }
}
