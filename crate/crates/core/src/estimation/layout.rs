use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::likelihood::NaturalGradient;
use crate::model::{InnovationModel, ModelParams, MultiCountSeries, ThinningMatrix};

/// Which thinning probabilities are free parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThinningStructure {
    /// Every `α_ij` is estimated (`n²` parameters).
    Full,
    /// Only `α_ii`; the series are independent INAR(1) processes.
    Diagonal,
    /// `A = 0`: independent Poisson (or Poisson regression) series.
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum InnovationLayout {
    Constant,
    Regression { covariates: Vec<String> },
}

/// Kind of a packed parameter, which fixes its optimizer transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    /// Thinning probability; logit in optimizer space.
    Alpha,
    /// Constant innovation mean; log in optimizer space.
    Lambda,
    /// Regression coefficient; untransformed.
    Beta,
}

/// Packing of model parameters into a flat vector `θ`.
///
/// Order: the free `α_ij` row-major, then for each series either `λ_i`
/// (constant mode) or `β_i0, …, β_ip` (regression mode).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub n: usize,
    pub structure: ThinningStructure,
    pub innovations: InnovationLayout,
}

const ALPHA_CLAMP: f64 = 1e-10;

impl ParameterLayout {
    pub fn new(n: usize, structure: ThinningStructure, innovations: InnovationLayout) -> Self {
        Self {
            n,
            structure,
            innovations,
        }
    }

    pub fn constant(n: usize, structure: ThinningStructure) -> Self {
        Self::new(n, structure, InnovationLayout::Constant)
    }

    pub fn regression(n: usize, structure: ThinningStructure, covariates: Vec<String>) -> Self {
        Self::new(n, structure, InnovationLayout::Regression { covariates })
    }

    /// Free `(i, j)` thinning slots in packing order.
    pub fn alpha_slots(&self) -> Vec<(usize, usize)> {
        let n = self.n;
        match self.structure {
            ThinningStructure::Full => (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect(),
            ThinningStructure::Diagonal => (0..n).map(|i| (i, i)).collect(),
            ThinningStructure::None => Vec::new(),
        }
    }

    /// Innovation parameters per series.
    pub fn innovation_width(&self) -> usize {
        match &self.innovations {
            InnovationLayout::Constant => 1,
            InnovationLayout::Regression { covariates } => covariates.len() + 1,
        }
    }

    pub fn len(&self) -> usize {
        self.alpha_slots().len() + self.n * self.innovation_width()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kinds(&self) -> Vec<ParamKind> {
        let mut kinds = vec![ParamKind::Alpha; self.alpha_slots().len()];
        let inn = match self.innovations {
            InnovationLayout::Constant => ParamKind::Lambda,
            InnovationLayout::Regression { .. } => ParamKind::Beta,
        };
        kinds.extend(std::iter::repeat_n(inn, self.n * self.innovation_width()));
        kinds
    }

    /// Human-readable parameter names, 1-based (`alpha_12`, `lambda_1`, `beta_10`).
    pub fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .alpha_slots()
            .into_iter()
            .map(|(i, j)| format!("alpha_{}{}", i + 1, j + 1))
            .collect();
        for i in 0..self.n {
            match self.innovations {
                InnovationLayout::Constant => names.push(format!("lambda_{}", i + 1)),
                InnovationLayout::Regression { .. } => {
                    names.extend((0..self.innovation_width()).map(|k| format!("beta_{}{k}", i + 1)))
                }
            }
        }
        names
    }

    pub fn pack(&self, params: &ModelParams) -> Result<Vec<f64>> {
        if params.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: params.dim(),
            });
        }
        let slots = self.alpha_slots();
        for i in 0..self.n {
            for j in 0..self.n {
                if !slots.contains(&(i, j)) && params.thinning.get(i, j) != 0.0 {
                    return Err(Error::domain(format!(
                        "alpha_{}{} is non-zero but not free in a {:?} layout",
                        i + 1,
                        j + 1,
                        self.structure
                    )));
                }
            }
        }
        let mut theta: Vec<f64> = slots.iter().map(|&(i, j)| params.thinning.get(i, j)).collect();
        match (&self.innovations, &params.innovations) {
            (InnovationLayout::Constant, InnovationModel::Constant { lambda }) => {
                theta.extend_from_slice(lambda)
            }
            (
                InnovationLayout::Regression { covariates },
                InnovationModel::Regression {
                    beta,
                    covariates: names,
                },
            ) if covariates == names => theta.extend(beta.iter().flatten()),
            _ => return Err(Error::domain("innovation model does not match the layout")),
        }
        Ok(theta)
    }

    pub fn unpack(&self, theta: &[f64]) -> Result<ModelParams> {
        if theta.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                found: theta.len(),
            });
        }
        let slots = self.alpha_slots();
        let mut entries = vec![0.0; self.n * self.n];
        for (&(i, j), &a) in slots.iter().zip(theta) {
            entries[i * self.n + j] = a;
        }
        let rest = &theta[slots.len()..];
        let innovations = match &self.innovations {
            InnovationLayout::Constant => InnovationModel::Constant {
                lambda: rest.to_vec(),
            },
            InnovationLayout::Regression { covariates } => InnovationModel::Regression {
                beta: rest.chunks(self.innovation_width()).map(<[f64]>::to_vec).collect(),
                covariates: covariates.clone(),
            },
        };
        ModelParams::new(ThinningMatrix::new(self.n, entries)?, innovations)
    }

    /// Maps `θ` to the unconstrained optimizer space.
    pub fn to_internal(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.kinds())
            .map(|(&x, kind)| match kind {
                ParamKind::Alpha => {
                    let a = x.clamp(ALPHA_CLAMP, 1.0 - ALPHA_CLAMP);
                    (a / (1.0 - a)).ln()
                }
                ParamKind::Lambda => x.max(f64::MIN_POSITIVE).ln(),
                ParamKind::Beta => x,
            })
            .collect()
    }

    pub fn from_internal(&self, internal: &[f64]) -> Vec<f64> {
        internal
            .iter()
            .zip(self.kinds())
            .map(|(&u, kind)| match kind {
                ParamKind::Alpha => 1.0 / (1.0 + (-u).exp()),
                ParamKind::Lambda => u.exp(),
                ParamKind::Beta => u,
            })
            .collect()
    }

    /// `dθ_k/du_k` at `θ`.
    pub fn internal_jacobian(&self, theta: &[f64]) -> Vec<f64> {
        theta
            .iter()
            .zip(self.kinds())
            .map(|(&x, kind)| match kind {
                ParamKind::Alpha => x * (1.0 - x),
                ParamKind::Lambda => x,
                ParamKind::Beta => 1.0,
            })
            .collect()
    }

    /// Picks the free components of a natural-parameter gradient.
    pub fn gradient_to_theta(&self, grad: &NaturalGradient) -> Vec<f64> {
        let mut g: Vec<f64> = self
            .alpha_slots()
            .iter()
            .map(|&(i, j)| grad.alpha[i * self.n + j])
            .collect();
        g.extend(grad.innovation.iter().flatten());
        g
    }

    /// Checks that `data` can be fitted with this layout.
    pub fn check_data(&self, data: &MultiCountSeries) -> Result<()> {
        if data.dim() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                found: data.dim(),
            });
        }
        if let InnovationLayout::Regression { covariates } = &self.innovations {
            match data.covariates() {
                Some(c) if c.names() == covariates.as_slice() => {}
                Some(c) => {
                    return Err(Error::domain(format!(
                        "data covariates {:?} do not match layout {:?}",
                        c.names(),
                        covariates
                    )))
                }
                None => return Err(Error::domain("regression layout needs covariates")),
            }
        }
        Ok(())
    }

    /// Starting point: `α_ij = 0.1 δ_ij + 0.05` on the free slots, and
    /// `λ_i = max(0.1, x̄_i (1 - Σ_j α_ij))` (or `β_i0 = ln λ_i`, other `β = 0`).
    pub fn default_init(&self, data: &MultiCountSeries) -> Vec<f64> {
        let slots = self.alpha_slots();
        let mut theta: Vec<f64> = slots
            .iter()
            .map(|&(i, j)| if i == j { 0.15 } else { 0.05 })
            .collect();
        for i in 0..self.n {
            let row_sum: f64 = slots
                .iter()
                .zip(&theta)
                .filter(|((r, _), _)| *r == i)
                .map(|(_, a)| a)
                .sum();
            let lambda = (data.column_mean(i) * (1.0 - row_sum)).max(0.1);
            match self.innovations {
                InnovationLayout::Constant => theta.push(lambda),
                InnovationLayout::Regression { .. } => {
                    theta.push(lambda.ln());
                    theta.extend(std::iter::repeat_n(0.0, self.innovation_width() - 1));
                }
            }
        }
        theta
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MinarModel;

    #[test]
    fn parameter_counts() {
        assert_eq!(ParameterLayout::constant(3, ThinningStructure::Full).len(), 12);
        assert_eq!(ParameterLayout::constant(3, ThinningStructure::Diagonal).len(), 6);
        assert_eq!(ParameterLayout::constant(3, ThinningStructure::None).len(), 3);
        let names = vec!["weekday".to_string(), "cos".into(), "sin".into()];
        assert_eq!(ParameterLayout::regression(3, ThinningStructure::Full, names.clone()).len(), 21);
        assert_eq!(ParameterLayout::regression(3, ThinningStructure::Diagonal, names).len(), 15);
    }

    #[test]
    fn pack_unpack_round_trip() {
        let m = MinarModel::study_model();
        let layout = ParameterLayout::constant(3, ThinningStructure::Full);
        let theta = layout.pack(m.params()).unwrap();
        assert_eq!(theta, vec![0.3, 0.1, 0.2, 0.2, 0.4, 0.2, 0.3, 0.2, 0.2, 1.0, 1.0, 1.0]);
        assert_eq!(&layout.unpack(&theta).unwrap(), m.params());
    }

    #[test]
    fn diagonal_layout_rejects_cross_terms() {
        let m = MinarModel::study_model();
        let layout = ParameterLayout::constant(3, ThinningStructure::Diagonal);
        assert!(layout.pack(m.params()).is_err());
    }

    #[test]
    fn transforms() {
        let layout = ParameterLayout::constant(1, ThinningStructure::Diagonal);
        assert_eq!(layout.to_internal(&[0.5, 1.0]), vec![0.0, 0.0]);
        assert_eq!(layout.from_internal(&[0.0, 0.0]), vec![0.5, 1.0]);
        let theta = [0.27, 3.4];
        let back = layout.from_internal(&layout.to_internal(&theta));
        assert!((back[0] - theta[0]).abs() < 1e-15 && (back[1] - theta[1]).abs() < 1e-14);
    }

    #[test]
    fn unpack_wrong_length() {
        let layout = ParameterLayout::constant(2, ThinningStructure::Full);
        assert!(matches!(layout.unpack(&[0.1; 5]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn names_follow_packing_order() {
        let layout = ParameterLayout::regression(2, ThinningStructure::Diagonal, vec!["w".into()]);
        assert_eq!(
            layout.names(),
            vec!["alpha_11", "alpha_22", "beta_10", "beta_11", "beta_20", "beta_21"]
        );
    }

    #[test]
    fn layout_json_shape() {
        let layout = ParameterLayout::constant(3, ThinningStructure::Full);
        let s = serde_json::to_string(&layout).unwrap();
        assert_eq!(s, r#"{"n":3,"structure":"full","innovations":{"mode":"constant"}}"#);
    }
}
