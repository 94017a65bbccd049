use std::fmt::Write as _;

use rayon::prelude::*;

use super::check::check_relation;
use super::generate::{apply_transform, generate_source_input};
use super::subject::Subject;
use super::{Arg, Category, MetamorphicRelation, MtConfig, MtError};

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Pass,
    Fail(String),
    Skip(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrVerdict {
    pub relation: MetamorphicRelation,
    pub seed: u64,
    pub outcome: Outcome,
}

impl MrVerdict {
    pub fn passed(&self) -> bool {
        self.outcome == Outcome::Pass
    }

    /// Present exactly when the case failed.
    pub fn detail(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Fail(d) => Some(d),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub subject: String,
    pub verdicts: Vec<MrVerdict>,
    /// Label per category that had at least one relation in the campaign.
    pub labels: Vec<(Category, bool)>,
}

impl CampaignResult {
    pub fn label(&self, category: Category) -> Option<bool> {
        self.labels
            .iter()
            .find(|(c, _)| *c == category)
            .map(|(_, l)| *l)
    }
}

/// Runs `config.trials` trials of every relation. Trial `t` uses seed
/// `seed + t`; a category is positive iff every executed case of each of its
/// variants passed and each variant executed at least once.
pub fn run_campaign(
    subject: &dyn Subject,
    relations: &[MetamorphicRelation],
    config: &MtConfig,
    seed: u64,
) -> Result<CampaignResult, MtError> {
    config.validate()?;
    let mut verdicts = Vec::with_capacity(config.trials * relations.len());
    for t in 0..config.trials {
        let case_seed = seed.wrapping_add(t as u64);
        let source = generate_source_input(subject.signature(), case_seed, config)?;
        let source_out = subject.run(&source);
        for &relation in relations {
            let outcome = run_case(subject, relation, &source, &source_out, case_seed, config);
            verdicts.push(MrVerdict {
                relation,
                seed: case_seed,
                outcome,
            });
        }
    }
    let mut labels = Vec::new();
    for category in Category::ALL {
        let variants: Vec<MetamorphicRelation> = relations
            .iter()
            .copied()
            .filter(|r| r.category() == category)
            .collect();
        if variants.is_empty() {
            continue;
        }
        let positive = variants.iter().all(|&r| {
            let mut executed = verdicts
                .iter()
                .filter(|v| v.relation == r && !matches!(v.outcome, Outcome::Skip(_)))
                .peekable();
            executed.peek().is_some() && executed.all(MrVerdict::passed)
        });
        labels.push((category, positive));
    }
    Ok(CampaignResult {
        subject: subject.name().to_string(),
        verdicts,
        labels,
    })
}

fn run_case(
    subject: &dyn Subject,
    relation: MetamorphicRelation,
    source: &[Arg],
    source_out: &Result<crate::matrix::Matrix, String>,
    seed: u64,
    config: &MtConfig,
) -> Outcome {
    let follow_up = match apply_transform(relation, source, seed, config) {
        Ok((f, _)) => f,
        Err(skip) => return Outcome::Skip(skip.0),
    };
    let source_out = match source_out {
        Ok(m) => m,
        Err(e) => return Outcome::Fail(format!("fault on source input: {e}")),
    };
    match subject.run(&follow_up) {
        Err(e) => Outcome::Fail(format!("fault on follow-up input: {e}")),
        Ok(out) => match check_relation(relation, source_out, &out) {
            None => Outcome::Pass,
            Some(d) => Outcome::Fail(d),
        },
    }
}

/// Campaigns for many subjects in parallel; results keep the input order.
pub fn run_campaigns(
    subjects: &[&dyn Subject],
    relations: &[MetamorphicRelation],
    config: &MtConfig,
    seed: u64,
) -> Result<Vec<CampaignResult>, MtError> {
    subjects
        .par_iter()
        .map(|s| run_campaign(*s, relations, config, seed))
        .collect()
}

fn clean(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

/// One line per case plus a summary block.
pub fn format_report(results: &[CampaignResult], config: &MtConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# inputs: {}", config.describe());
    let _ = writeln!(out, "subject,category,variant,seed,result,detail");
    for r in results {
        for v in &r.verdicts {
            let (result, detail) = match &v.outcome {
                Outcome::Pass => ("pass", None),
                Outcome::Fail(d) => ("fail", Some(d)),
                Outcome::Skip(d) => ("skip", Some(d)),
            };
            let _ = write!(
                out,
                "{},{},{},{},{}",
                r.subject,
                v.relation.category(),
                v.relation.variant(),
                v.seed,
                result
            );
            if let Some(d) = detail {
                let _ = write!(out, ",{}", clean(d));
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "# summary: subject,category,label,passed,failed,skipped");
    for r in results {
        for (c, label) in &r.labels {
            let of = |want: fn(&Outcome) -> bool| {
                r.verdicts
                    .iter()
                    .filter(|v| v.relation.category() == *c && want(&v.outcome))
                    .count()
            };
            let _ = writeln!(
                out,
                "# {},{},{},{},{},{}",
                r.subject,
                c,
                if *label { 1 } else { -1 },
                of(|o| *o == Outcome::Pass),
                of(|o| matches!(o, Outcome::Fail(_))),
                of(|o| matches!(o, Outcome::Skip(_)))
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRow {
    pub function: String,
    pub category: Category,
    pub positive: bool,
}

pub fn format_label_csv(rows: &[LabelRow]) -> String {
    let mut out = String::from("function,MR,label\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{}",
            r.function,
            r.category,
            if r.positive { 1 } else { -1 }
        );
    }
    out
}

/// Reads `function,MR,label` rows; extra columns are ignored.
pub fn parse_label_csv(text: &str) -> Result<Vec<LabelRow>, MtError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| MtError::Format {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| MtError::Format {
                line: 1,
                message: format!("missing `{name}` column"),
            })
    };
    let (fc, mc, lc) = (col("function")?, col("MR")?, col("label")?);
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| MtError::Format {
            line,
            message: e.to_string(),
        })?;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let category = field(mc)
            .parse()
            .map_err(|message| MtError::Format { line, message })?;
        let positive = match field(lc) {
            "1" | "+1" => true,
            "-1" => false,
            other => {
                return Err(MtError::Format {
                    line,
                    message: format!("label {other:?} is not 1 or -1"),
                })
            }
        };
        rows.push(LabelRow {
            function: field(fc).to_string(),
            category,
            positive,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mt::{fault_subjects, reference_subjects};

    fn small() -> MtConfig {
        MtConfig {
            trials: 20,
            ..MtConfig::default()
        }
    }

    #[test]
    fn scalar_multiply_is_multiplicative() {
        let refs = reference_subjects();
        let s = refs.iter().find(|s| s.name() == "scalar_multiply").unwrap();
        let r = run_campaign(s, &MetamorphicRelation::ALL, &small(), 11).unwrap();
        assert_eq!(r.label(Category::Multiplicative), Some(true));
        assert_eq!(r.verdicts.len(), 20 * 8);
        assert!(r.verdicts.iter().all(|v| v.passed() == v.detail().is_none() || matches!(v.outcome, Outcome::Skip(_))));
    }

    #[test]
    fn subtract_fails_additive_and_multiplicative() {
        let refs = reference_subjects();
        let s = refs.iter().find(|s| s.name() == "subtract").unwrap();
        let r = run_campaign(s, &MetamorphicRelation::ALL, &small(), 3).unwrap();
        assert_eq!(r.labels, vec![
            (Category::Permutative, true),
            (Category::Additive, false),
            (Category::Multiplicative, false),
        ]);
    }

    #[test]
    fn faulty_multiply_is_negative() {
        let faults = fault_subjects();
        let s = faults.iter().find(|s| s.name() == "multiply_inner_bound").unwrap();
        let rels = MetamorphicRelation::for_category(Category::Multiplicative);
        let r = run_campaign(s, &rels, &small(), 5).unwrap();
        assert_eq!(r.labels, vec![(Category::Multiplicative, false)]);
        assert!(r.verdicts[0].detail().unwrap().contains("fault"));
    }

    #[test]
    fn campaigns_are_reproducible() {
        let refs = reference_subjects();
        let subjects: Vec<&dyn Subject> = refs.iter().map(|s| s as &dyn Subject).collect();
        let a = run_campaigns(&subjects, &MetamorphicRelation::ALL, &small(), 9).unwrap();
        let b = run_campaigns(&subjects, &MetamorphicRelation::ALL, &small(), 9).unwrap();
        assert_eq!(format_report(&a, &small()), format_report(&b, &small()));
    }

    #[test]
    fn report_and_label_formats() {
        let refs = reference_subjects();
        let s = &refs[0];
        let r = run_campaign(s, &[MetamorphicRelation::AddScalar], &small(), 0).unwrap();
        let text = format_report(std::slice::from_ref(&r), &small());
        assert!(text.contains("\nadd,Additive,scalar,0,pass\n"));
        assert!(text.contains("# add,Additive,1,20,0,0"));

        let rows = vec![
            LabelRow { function: "f".into(), category: Category::Additive, positive: true },
            LabelRow { function: "g".into(), category: Category::Permutative, positive: false },
        ];
        let csv = format_label_csv(&rows);
        assert_eq!(csv, "function,MR,label\nf,Additive,1\ng,Permutative,-1\n");
        assert_eq!(parse_label_csv(&csv).unwrap(), rows);
        assert!(parse_label_csv("function,MR,label\nf,Additive,0\n").is_err());
        assert!(parse_label_csv("function,label\nf,1\n").is_err());
    }
}
