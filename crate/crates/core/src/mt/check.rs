use super::{MetamorphicRelation, OutputCheck};
use crate::matrix::Matrix;

const TOLERANCE: f64 = 1e-9;
const ZERO: f64 = 1e-12;

/// `None` when the relation's output check holds, otherwise a description of
/// the first violation.
pub fn check_relation(
    relation: MetamorphicRelation,
    source: &Matrix,
    follow_up: &Matrix,
) -> Option<String> {
    if source.shape() != follow_up.shape() {
        return Some(format!(
            "size {}x{} became {}x{}",
            source.rows(),
            source.cols(),
            follow_up.rows(),
            follow_up.cols()
        ));
    }
    let check = relation.check();
    if check == OutputCheck::SizePreserved {
        return None;
    }
    for (i, (&s, &f)) in source.data().iter().zip(follow_up.data()).enumerate() {
        let ok = match check {
            OutputCheck::ElementwiseGt if s.abs() > ZERO => f > s + TOLERANCE,
            _ => f >= s - TOLERANCE,
        };
        if !ok {
            let (r, c) = (i / source.cols(), i % source.cols());
            return Some(format!("({r}; {c}) source {s} follow-up {f}"));
        }
    }
    None
}
