//! Unified fit/predict layer: OLS, ridge, lasso, CART trees, bagged and
//! boosted ensembles, penalized logistic regression, and a linear SVM.

mod coordinate;
mod ensemble;
mod linear;
mod svm;
mod tree;

pub use coordinate::{lasso_kkt_gradients, lasso_lambda_max};
pub use tree::{Tree, TreeParams};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SfcaError};

/// Method families of the comparison tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Ols,
    Ridge,
    Lasso,
    RTree,
    RTreeBag,
    RTreeBoost,
    CTreeBag,
    CTreeBoost,
    LogrRidge,
    LogrLasso,
    SvmLinear,
}

impl Family {
    pub fn is_classifier(self) -> bool {
        matches!(
            self,
            Family::CTreeBag
                | Family::CTreeBoost
                | Family::LogrRidge
                | Family::LogrLasso
                | Family::SvmLinear
        )
    }

    /// Report label, matching the comparison-table naming.
    pub fn label(self) -> &'static str {
        match self {
            Family::Ols => "ols",
            Family::Ridge => "ridge",
            Family::Lasso => "lasso",
            Family::RTree => "r-tree",
            Family::RTreeBag => "r-tree(bg)",
            Family::RTreeBoost => "r-tree(bs)",
            Family::CTreeBag => "c-tree(bg)",
            Family::CTreeBoost => "c-tree(bs)",
            Family::LogrRidge => "logr(ridge)",
            Family::LogrLasso => "logr(lasso)",
            Family::SvmLinear => "svm",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Some(match s {
            "ols" => Family::Ols,
            "ridge" => Family::Ridge,
            "lasso" => Family::Lasso,
            "r-tree" => Family::RTree,
            "r-tree(bg)" => Family::RTreeBag,
            "r-tree(bs)" => Family::RTreeBoost,
            "c-tree(bg)" => Family::CTreeBag,
            "c-tree(bs)" => Family::CTreeBoost,
            "logr(ridge)" => Family::LogrRidge,
            "logr(lasso)" => Family::LogrLasso,
            "svm" => Family::SvmLinear,
            _ => return None,
        })
    }
}

/// Hyperparameters for one learner instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub family: Family,
    /// Penalty strength for ridge/lasso/logistic/SVM.
    pub lambda: f64,
    /// Trees in a bagged ensemble or rounds of boosting.
    pub tree_count: usize,
    /// 0 means unlimited depth.
    pub max_depth: usize,
    pub min_leaf: usize,
    pub learning_rate: f64,
    /// Row fraction per boosting round.
    pub subsample: f64,
    /// Use per-row sample weights when provided.
    pub weighted: bool,
    pub seed: u64,
}

impl ModelSpec {
    pub fn new(family: Family) -> Self {
        let mut spec = ModelSpec {
            family,
            lambda: 0.01,
            tree_count: 1,
            max_depth: 0,
            min_leaf: 5,
            learning_rate: 0.1,
            subsample: 1.0,
            weighted: false,
            seed: 0,
        };
        match family {
            Family::RTreeBag | Family::CTreeBag => spec.tree_count = 200,
            Family::RTreeBoost | Family::CTreeBoost => {
                spec.tree_count = 300;
                spec.max_depth = 4;
                spec.subsample = 0.8;
            }
            _ => {}
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda < 0.0 {
            return Err(SfcaError::InvalidModelSpec(format!(
                "lambda {} < 0",
                self.lambda
            )));
        }
        if self.tree_count < 1 {
            return Err(SfcaError::InvalidModelSpec("tree_count < 1".into()));
        }
        if self.min_leaf < 1 {
            return Err(SfcaError::InvalidModelSpec("min_leaf < 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(SfcaError::InvalidModelSpec(format!(
                "learning_rate {} outside (0,1]",
                self.learning_rate
            )));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(SfcaError::InvalidModelSpec(format!(
                "subsample {} outside (0,1]",
                self.subsample
            )));
        }
        Ok(())
    }
}

/// Learned parameters, one variant per estimator shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelParams {
    Linear {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    Logistic {
        intercept: f64,
        coefficients: Vec<f64>,
    },
    Svm {
        intercept: f64,
        coefficients: Vec<f64>,
        platt_a: f64,
        platt_b: f64,
    },
    Tree(Tree),
    Forest {
        trees: Vec<Tree>,
        classification: bool,
    },
    Boosted {
        init: f64,
        trees: Vec<Tree>,
        learning_rate: f64,
        classification: bool,
        /// Full-training-set loss after each round (diagnostics).
        train_loss: Vec<f64>,
    },
}

/// An immutable trained learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModel {
    pub family: Family,
    pub params: ModelParams,
    pub feature_names: Vec<String>,
    pub seed: u64,
    /// Format version for save/load.
    pub version: u32,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

impl FittedModel {
    pub fn save_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load_json(text: &str) -> Result<FittedModel> {
        let model: FittedModel = serde_json::from_str(text)?;
        if model.version != MODEL_FORMAT_VERSION {
            return Err(SfcaError::ModelFormat(format!(
                "unsupported model format version {}",
                model.version
            )));
        }
        Ok(model)
    }
}

/// Column standardization summary from [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardization {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
    /// Columns with zero variance (left centered, scale 1).
    pub constant_columns: Vec<bool>,
}

/// Per-column weighted mean-0 / sd-1 transform. Zero-variance columns are
/// centered only, with scale 1 and a flag.
pub fn standardize(x: &[Vec<f64>], weights: Option<&[f64]>) -> (Vec<Vec<f64>>, Standardization) {
    let n = x.len();
    let m = x.first().map(|r| r.len()).unwrap_or(0);
    let w_total: f64 = match weights {
        Some(w) => w.iter().sum(),
        None => n as f64,
    };
    let wi = |i: usize| weights.map(|w| w[i]).unwrap_or(1.0);
    let mut means = vec![0.0; m];
    let mut scales = vec![1.0; m];
    let mut constant = vec![false; m];
    for j in 0..m {
        let mean: f64 = (0..n).map(|i| wi(i) * x[i][j]).sum::<f64>() / w_total;
        let var: f64 = (0..n)
            .map(|i| wi(i) * (x[i][j] - mean) * (x[i][j] - mean))
            .sum::<f64>()
            / w_total;
        means[j] = mean;
        if var.sqrt() > 1e-12 {
            scales[j] = var.sqrt();
        } else {
            constant[j] = true;
        }
    }
    let out = x
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| (v - means[j]) / scales[j])
                .collect()
        })
        .collect();
    (
        out,
        Standardization {
            means,
            scales,
            constant_columns: constant,
        },
    )
}

/// Undo [`standardize`].
pub fn destandardize(xs: &[Vec<f64>], st: &Standardization) -> Vec<Vec<f64>> {
    xs.iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, &v)| v * st.scales[j] + st.means[j])
                .collect()
        })
        .collect()
}

fn check_fit_inputs(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
) -> Result<()> {
    if x.len() != y.len() {
        return Err(SfcaError::DimensionMismatch(format!(
            "{} design rows vs {} targets",
            x.len(),
            y.len()
        )));
    }
    if x.is_empty() {
        return Err(SfcaError::DimensionMismatch("empty design".into()));
    }
    let m = x[0].len();
    if x.iter().any(|r| r.len() != m) {
        return Err(SfcaError::DimensionMismatch("ragged design rows".into()));
    }
    if let Some(w) = weights {
        if w.len() != y.len() {
            return Err(SfcaError::DimensionMismatch(format!(
                "{} weights vs {} targets",
                w.len(),
                y.len()
            )));
        }
        if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(SfcaError::InvalidModelSpec(
                "weights must be positive and finite".into(),
            ));
        }
    }
    Ok(())
}

/// Fit a model. Classification families expect targets in {0,1}.
pub fn fit(
    spec: &ModelSpec,
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    feature_names: &[String],
) -> Result<FittedModel> {
    spec.validate()?;
    check_fit_inputs(x, y, weights)?;
    let weights = if spec.weighted { weights } else { None };
    let params = match spec.family {
        Family::Ols => linear::fit_ols(x, y, weights)?,
        Family::Ridge => linear::fit_ridge(x, y, weights, spec.lambda)?,
        Family::Lasso => coordinate::fit_lasso(x, y, weights, spec.lambda)?,
        Family::LogrRidge => coordinate::fit_logistic_ridge(x, y, weights, spec.lambda)?,
        Family::LogrLasso => coordinate::fit_logistic_lasso(x, y, weights, spec.lambda)?,
        Family::SvmLinear => svm::fit_linear_svm(x, y, weights, spec)?,
        Family::RTree | Family::CTreeBag | Family::RTreeBag => {
            ensemble::fit_bagging(x, y, weights, spec)?
        }
        Family::RTreeBoost | Family::CTreeBoost => ensemble::fit_boosting(x, y, weights, spec)?,
    };
    Ok(FittedModel {
        family: spec.family,
        params,
        feature_names: feature_names.to_vec(),
        seed: spec.seed,
        version: MODEL_FORMAT_VERSION,
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Deterministic scores: raw values for regression families, class-1
/// probabilities in [0,1] for classifiers.
pub fn predict(model: &FittedModel, x: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = model.feature_names.len();
    if x.iter().any(|r| r.len() != m) {
        return Err(SfcaError::SchemaMismatch(format!(
            "prediction rows must have {m} features"
        )));
    }
    let dot = |int: f64, coef: &[f64], row: &[f64]| -> f64 {
        int + coef.iter().zip(row).map(|(c, v)| c * v).sum::<f64>()
    };
    Ok(match &model.params {
        ModelParams::Linear {
            intercept,
            coefficients,
        } => x.iter().map(|r| dot(*intercept, coefficients, r)).collect(),
        ModelParams::Logistic {
            intercept,
            coefficients,
        } => x
            .iter()
            .map(|r| sigmoid(dot(*intercept, coefficients, r)))
            .collect(),
        ModelParams::Svm {
            intercept,
            coefficients,
            platt_a,
            platt_b,
        } => x
            .iter()
            .map(|r| sigmoid(platt_a * dot(*intercept, coefficients, r) + platt_b))
            .collect(),
        ModelParams::Tree(tree) => x.iter().map(|r| tree.predict(r)).collect(),
        ModelParams::Forest {
            trees,
            classification,
        } => x
            .iter()
            .map(|r| {
                if *classification {
                    // Mean vote fraction.
                    let votes = trees
                        .iter()
                        .filter(|t| t.predict(r) >= 0.5)
                        .count();
                    votes as f64 / trees.len() as f64
                } else {
                    trees.iter().map(|t| t.predict(r)).sum::<f64>() / trees.len() as f64
                }
            })
            .collect(),
        ModelParams::Boosted {
            init,
            trees,
            learning_rate,
            classification,
            ..
        } => x
            .iter()
            .map(|r| {
                let f = init
                    + learning_rate
                        * trees.iter().map(|t| t.predict(r)).sum::<f64>();
                if *classification {
                    sigmoid(f)
                } else {
                    f
                }
            })
            .collect(),
    })
}
