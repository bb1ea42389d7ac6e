//! Post-double-selection of penalized controls followed by the ordered
//! probit on the focal columns plus the selected controls.

use nalgebra::DMatrix;

use crate::features::DesignMatrix;
use crate::lasso::{pds_select, PdsOptions, PdsSelection};
use crate::linalg::find_collinear;
use crate::probit::{fit_ordered_probit, OrderedFit, OrderedOptions};
use crate::{Error, Result};

#[derive(Debug, Clone, Default)]
pub struct EstimationOptions {
    pub pds: PdsOptions,
    pub ordered: OrderedOptions,
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub fit: OrderedFit,
    pub selection: PdsSelection,
    /// Penalized candidates that selection eliminated.
    pub lasso_dropped: Vec<String>,
    /// Selected controls removed to restore full column rank.
    pub collinear_dropped: Vec<String>,
    /// The matrix the ordered probit was fitted on.
    pub matrix: DesignMatrix,
}

impl Estimate {
    pub fn coef(&self, name: &str) -> Option<(f64, f64)> {
        self.fit.coef(name)
    }
}

/// Runs PDS with the unpenalized columns as focal regressors and returns the
/// selection and the reduced matrix (focal columns plus selected controls,
/// in original column order).
pub fn select_controls(matrix: &DesignMatrix, options: &PdsOptions) -> Result<(PdsSelection, DesignMatrix)> {
    let y: Vec<f64> = matrix.y.iter().map(|&v| v as f64).collect();
    let focal_idx: Vec<usize> = (0..matrix.ncols()).filter(|&j| !matrix.penalized[j]).collect();
    let control_idx: Vec<usize> = (0..matrix.ncols()).filter(|&j| matrix.penalized[j]).collect();
    let focal: Vec<(String, Vec<f64>)> = focal_idx
        .iter()
        .map(|&j| (matrix.names[j].clone(), matrix.x.column(j).iter().copied().collect()))
        .collect();
    let controls: DMatrix<f64> = matrix.x.select_columns(&control_idx);
    let control_names: Vec<String> = control_idx.iter().map(|&j| matrix.names[j].clone()).collect();
    let selection = pds_select(&y, &focal, &controls, &control_names, &matrix.cluster_id, options)?;
    let keep: Vec<String> = matrix
        .names
        .iter()
        .zip(&matrix.penalized)
        .filter(|(n, p)| !**p || selection.union.contains(n))
        .map(|(n, _)| n.clone())
        .collect();
    let reduced = matrix.select(&keep)?;
    Ok((selection, reduced))
}

/// Removes selected controls until no column is a linear combination of
/// the others plus the constant. Focal columns are never removed.
pub fn drop_collinear_controls(matrix: &DesignMatrix) -> Result<(DesignMatrix, Vec<String>)> {
    let mut m = matrix.clone();
    let mut dropped = Vec::new();
    while let Some((j, partners, _)) = find_collinear(&m.x, true) {
        let victim = if m.penalized[j] {
            j
        } else if let Some(&k) = partners.iter().rev().find(|&&k| m.penalized[k]) {
            k
        } else {
            let with: Vec<&str> = partners.iter().map(|&k| m.names[k].as_str()).collect();
            return Err(Error::Collinear {
                column: m.names[j].clone(),
                with: if with.is_empty() { "constant".into() } else { with.join(", ") },
            });
        };
        let name = m.names[victim].clone();
        m = m.drop_columns(std::slice::from_ref(&name))?;
        m.notes.push(format!("dropped selected control `{name}`: collinear with retained columns"));
        dropped.push(name);
    }
    Ok((m, dropped))
}

/// Selection, rank repair and the ordered-probit fit.
pub fn select_and_fit(matrix: &DesignMatrix, options: &EstimationOptions) -> Result<Estimate> {
    let (selection, reduced) = select_controls(matrix, &options.pds)?;
    let (reduced, collinear_dropped) = drop_collinear_controls(&reduced)?;
    let fit = fit_ordered_probit(&reduced, &options.ordered)?;
    let lasso_dropped = selection
        .control_names
        .iter()
        .filter(|n| !selection.union.contains(n))
        .cloned()
        .collect();
    Ok(Estimate { fit, selection, lasso_dropped, collinear_dropped, matrix: reduced })
}
