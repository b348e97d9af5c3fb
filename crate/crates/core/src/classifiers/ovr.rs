use serde::{Deserialize, Serialize};

use super::{fit, Fitted, ModelError, ModelSpec, TrainData};

/// One binary inner model per class; the decision value of class `c` is the
/// inner model's positive-class score. With exactly two classes a single
/// inner model is trained on the original labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsRest {
    pub n_classes: usize,
    /// `None` for classes with no training samples.
    pub members: Vec<Option<Fitted>>,
}

impl OneVsRest {
    pub(crate) fn fit(data: &TrainData<'_>, inner: &ModelSpec) -> Result<Self, ModelError> {
        if data.n_classes == 2 {
            let m = fit(inner, data.x, data.y, 2)?;
            return Ok(OneVsRest {
                n_classes: 2,
                members: vec![Some(m)],
            });
        }
        let members = (0..data.n_classes)
            .map(|c| {
                let y: Vec<usize> = data.y.iter().map(|&l| usize::from(l == c)).collect();
                if y.iter().all(|&v| v == 0) {
                    return Ok(None);
                }
                fit(inner, data.x, &y, 2).map(Some)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(OneVsRest {
            n_classes: data.n_classes,
            members,
        })
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        if self.n_classes == 2 && self.members.len() == 1 {
            if let Some(m) = &self.members[0] {
                return m.scores(x);
            }
        }
        self.members
            .iter()
            .map(|m| m.as_ref().map_or(f64::NEG_INFINITY, |m| m.scores(x)[1]))
            .collect()
    }
}
