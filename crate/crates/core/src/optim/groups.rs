//! Hybrid grouping: true matrices go to the matrix optimizer, vectors and
//! scalars (any parameter with a unit dimension) go to AdamW.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};

use super::OptimizerKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShapeClass {
    Matrix2D,
    Vector1D,
}

impl ShapeClass {
    pub fn of(rows: usize, cols: usize) -> Self {
        if rows.min(cols) >= 2 {
            ShapeClass::Matrix2D
        } else {
            ShapeClass::Vector1D
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamGroup {
    pub name: String,
    pub shape_class: ShapeClass,
    pub optimizer: OptimizerKind,
}

/// Assigns an optimizer to each named parameter by shape alone.
///
/// With a matrix-only optimizer (AdaMuon, Muon) vectors fall back to AdamW;
/// with AdamW or SGD-momentum every parameter uses that optimizer.
pub fn assign_param_groups(
    params: &[(String, (usize, usize))],
    optimizer: OptimizerKind,
) -> Result<Vec<ParamGroup>> {
    assign_param_groups_with(params, optimizer, &HashMap::new())
}

/// Like [`assign_param_groups`], with explicit per-name overrides (e.g. to
/// send an embedding matrix to AdamW). Overriding a vector onto a
/// matrix-only optimizer is rejected.
pub fn assign_param_groups_with(
    params: &[(String, (usize, usize))],
    optimizer: OptimizerKind,
    overrides: &HashMap<String, OptimizerKind>,
) -> Result<Vec<ParamGroup>> {
    let mut seen = HashSet::new();
    for (name, _) in params {
        if !seen.insert(name.as_str()) {
            return Err(Error::DuplicateName(name.clone()));
        }
    }
    for name in overrides.keys() {
        if !seen.contains(name.as_str()) {
            return Err(Error::ParamMismatch(format!(
                "override for unknown parameter `{name}`"
            )));
        }
    }

    params
        .iter()
        .map(|(name, (rows, cols))| {
            let shape_class = ShapeClass::of(*rows, *cols);
            let default = match shape_class {
                ShapeClass::Vector1D if optimizer.is_matrix_only() => OptimizerKind::AdamW,
                _ => optimizer,
            };
            let chosen = overrides.get(name).copied().unwrap_or(default);
            if chosen.is_matrix_only() && shape_class != ShapeClass::Matrix2D {
                return Err(Error::ParamMismatch(format!(
                    "`{name}` ({rows}x{cols}) cannot use {chosen}"
                )));
            }
            Ok(ParamGroup {
                name: name.clone(),
                shape_class,
                optimizer: chosen,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(name: &str, r: usize, c: usize) -> (String, (usize, usize)) {
        (name.to_string(), (r, c))
    }

    #[test]
    fn weights_and_biases_split() {
        let groups =
            assign_param_groups(&[p("w1", 64, 64), p("b1", 1, 64)], OptimizerKind::AdaMuon)
                .unwrap();
        assert_eq!(groups[0].optimizer, OptimizerKind::AdaMuon);
        assert_eq!(groups[0].shape_class, ShapeClass::Matrix2D);
        assert_eq!(groups[1].optimizer, OptimizerKind::AdamW);
        assert_eq!(groups[1].shape_class, ShapeClass::Vector1D);
    }

    #[test]
    fn all_vectors_use_adamw() {
        let params = [p("a", 1, 3), p("b", 5, 1), p("c", 1, 1)];
        for g in assign_param_groups(&params, OptimizerKind::Muon).unwrap() {
            assert_eq!(g.optimizer, OptimizerKind::AdamW);
        }
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(assign_param_groups(&[], OptimizerKind::AdaMuon)
            .unwrap()
            .is_empty());
        assert!(matches!(
            assign_param_groups(&[p("w", 2, 2), p("w", 3, 3)], OptimizerKind::AdaMuon),
            Err(Error::DuplicateName(n)) if n == "w"
        ));
    }

    #[test]
    fn non_matrix_optimizer_applies_everywhere() {
        let groups =
            assign_param_groups(&[p("w", 4, 4), p("b", 1, 4)], OptimizerKind::SgdMomentum).unwrap();
        assert!(groups
            .iter()
            .all(|g| g.optimizer == OptimizerKind::SgdMomentum));
    }

    #[test]
    fn overrides() {
        let params = [p("emb", 10, 4), p("w", 4, 4), p("b", 1, 4)];
        let mut ov = HashMap::new();
        ov.insert("emb".to_string(), OptimizerKind::AdamW);
        let groups = assign_param_groups_with(&params, OptimizerKind::AdaMuon, &ov).unwrap();
        assert_eq!(groups[0].optimizer, OptimizerKind::AdamW);
        assert_eq!(groups[1].optimizer, OptimizerKind::AdaMuon);
        ov.insert("b".to_string(), OptimizerKind::Muon);
        assert!(assign_param_groups_with(&params, OptimizerKind::AdaMuon, &ov).is_err());
    }
}
