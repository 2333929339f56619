use serde::{Deserialize, Serialize};

use super::{graph_model, FieldExpr, PeriodicAffine, SlowFastModel, TrigPoly2};
use crate::{Error, Result};

/// Centered coefficient matrices of a trigonometric polynomial; see
/// [`TrigPoly2::from_matrices`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoefficientMatrices {
    #[serde(default)]
    pub cos: Vec<Vec<f64>>,
    #[serde(default)]
    pub sin: Vec<Vec<f64>>,
}

impl CoefficientMatrices {
    fn to_poly(&self) -> Result<TrigPoly2> {
        TrigPoly2::from_matrices(&self.cos, &self.sin)
    }
}

/// JSON form of a user model. Either `f` (general model) or `phi`
/// (graph model `f = sin(y - phi(x))`) must be present; `g` defaults to 1.
///
/// ```json
/// { "label": "tilted", "f": { "sin": [[0,0,0],[0,0,0],[1,0,0]] } }
/// ```
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub f: Option<CoefficientMatrices>,
    #[serde(default)]
    pub g: Option<CoefficientMatrices>,
    #[serde(default)]
    pub phi: Option<String>,
}

impl ModelDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn to_model(&self) -> Result<SlowFastModel> {
        let slow = self.g.as_ref().map(CoefficientMatrices::to_poly).transpose()?;
        let mut model = match (&self.f, &self.phi) {
            (Some(_), Some(_)) => {
                return Err(Error::Document("give either \"f\" or \"phi\", not both".into()))
            }
            (None, None) => return Err(Error::Document("missing \"f\" or \"phi\"".into())),
            (None, Some(phi)) => graph_model(phi.parse::<PeriodicAffine>()?, slow)?,
            (Some(f), None) => {
                let fast = f.to_poly()?;
                if fast.terms().is_empty() {
                    return Err(Error::Document("\"f\" has no nonzero coefficients".into()));
                }
                let slow = slow.unwrap_or_else(|| TrigPoly2::constant(1.0));
                SlowFastModel::new("user", FieldExpr::Trig(fast), FieldExpr::Trig(slow))
            }
        };
        if let Some(label) = &self.label {
            model.set_label(label.clone());
        }
        Ok(model)
    }
}
