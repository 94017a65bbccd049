//! Metamorphic testing: relations, follow-up construction, output checks and
//! campaigns that turn verdicts into per-category labels.

mod campaign;
mod check;
mod generate;
mod subject;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

pub use campaign::{
    format_label_csv, format_report, parse_label_csv, run_campaign, run_campaigns, CampaignResult,
    LabelRow, MrVerdict, Outcome,
};
pub use check::check_relation;
pub use generate::{apply_transform, generate_source_input, make_case, MrCase, Skip};
pub use subject::{
    fault_subjects, mini_subjects, reference_subjects, MiniSubject, NativeSubject, ParamKind,
    ShapeRule, Signature, Subject,
};

#[derive(Debug, Error)]
pub enum MtError {
    #[error("unconstructible signature: {0}")]
    Unconstructible(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
}

/// High-level MR category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Permutative,
    Additive,
    Multiplicative,
}

impl Category {
    pub const ALL: [Category; 3] = [
        Category::Permutative,
        Category::Additive,
        Category::Multiplicative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Permutative => "Permutative",
            Category::Additive => "Additive",
            Category::Multiplicative => "Multiplicative",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .iter()
            .copied()
            .find(|c| c.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown MR category {s:?}"))
    }
}

/// Expected change in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputCheck {
    SizePreserved,
    ElementwiseGeq,
    ElementwiseGt,
}

/// One input transformation together with the output check it implies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MetamorphicRelation {
    PermuteAll,
    PermuteRows,
    PermuteColumns,
    AddScalar,
    AddMatrix,
    AddSubset,
    MulScalar,
    MulSubset,
}

impl MetamorphicRelation {
    pub const ALL: [MetamorphicRelation; 8] = [
        MetamorphicRelation::PermuteAll,
        MetamorphicRelation::PermuteRows,
        MetamorphicRelation::PermuteColumns,
        MetamorphicRelation::AddScalar,
        MetamorphicRelation::AddMatrix,
        MetamorphicRelation::AddSubset,
        MetamorphicRelation::MulScalar,
        MetamorphicRelation::MulSubset,
    ];

    pub fn category(self) -> Category {
        use MetamorphicRelation::*;
        match self {
            PermuteAll | PermuteRows | PermuteColumns => Category::Permutative,
            AddScalar | AddMatrix | AddSubset => Category::Additive,
            MulScalar | MulSubset => Category::Multiplicative,
        }
    }

    pub fn variant(self) -> &'static str {
        use MetamorphicRelation::*;
        match self {
            PermuteAll => "all-elements",
            PermuteRows => "rows",
            PermuteColumns => "columns",
            AddScalar | MulScalar => "scalar",
            AddMatrix => "matrix-add",
            AddSubset | MulSubset => "subset",
        }
    }

    /// Output check; the multiplicative subset variant uses non-decrease.
    pub fn check(self) -> OutputCheck {
        match self {
            MetamorphicRelation::MulScalar => OutputCheck::ElementwiseGt,
            MetamorphicRelation::MulSubset => OutputCheck::ElementwiseGeq,
            other => match other.category() {
                Category::Permutative => OutputCheck::SizePreserved,
                _ => OutputCheck::ElementwiseGeq,
            },
        }
    }

    pub fn for_category(category: Category) -> Vec<MetamorphicRelation> {
        Self::ALL
            .iter()
            .copied()
            .filter(|r| r.category() == category)
            .collect()
    }
}

impl fmt::Display for MetamorphicRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.category(), self.variant())
    }
}

/// A subject argument.
#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Matrix(Matrix),
    Int(i64),
    Real(f64),
}

impl Arg {
    pub fn as_matrix(&self) -> Option<&Matrix> {
        match self {
            Arg::Matrix(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtConfig {
    pub min_dim: usize,
    pub max_dim: usize,
    pub min_value: f64,
    pub max_value: f64,
    /// Addend for the additive scalar and subset transforms.
    pub addend: f64,
    /// Factor for the multiplicative transforms.
    pub factor: f64,
    pub trials: usize,
}

impl Default for MtConfig {
    fn default() -> Self {
        MtConfig {
            min_dim: 2,
            max_dim: 6,
            min_value: 1.0,
            max_value: 10.0,
            addend: 3.0,
            factor: 2.0,
            trials: 100,
        }
    }
}

impl MtConfig {
    pub fn validate(&self) -> Result<(), MtError> {
        let bad = |m: &str| Err(MtError::Config(m.to_string()));
        if self.min_dim == 0 || self.min_dim > self.max_dim {
            return bad("dimension range must satisfy 1 <= min <= max");
        }
        if !(self.min_value > 0.0 && self.min_value <= self.max_value && self.max_value.is_finite()) {
            return bad("value range must be positive and finite");
        }
        if self.addend.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return bad("addend must be positive");
        }
        if self.factor.partial_cmp(&1.0) != Some(std::cmp::Ordering::Greater) || !self.factor.is_finite() {
            return bad("factor must exceed 1");
        }
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        format!(
            "entries uniform in [{}, {}], dims in [{}, {}], addend {}, factor {}, trials {}",
            self.min_value, self.max_value, self.min_dim, self.max_dim, self.addend, self.factor, self.trials
        )
    }
}
