use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Activation, Dense, Mlp};

/// A named parameter array: shape plus row-major values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// JSON form of one network: `dense{i}.weight` (`[outputs, inputs]`) and `dense{i}.bias` (`[outputs]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDoc {
    pub output_activation: Activation,
    pub layers: BTreeMap<String, Tensor>,
}

impl Mlp {
    pub fn to_doc(&self) -> NetworkDoc {
        let mut layers = BTreeMap::new();
        for (i, l) in self.layers.iter().enumerate() {
            layers.insert(
                format!("dense{i}.weight"),
                Tensor {
                    shape: vec![l.outputs, l.inputs],
                    data: l.weights.clone(),
                },
            );
            layers.insert(
                format!("dense{i}.bias"),
                Tensor {
                    shape: vec![l.outputs],
                    data: l.bias.clone(),
                },
            );
        }
        NetworkDoc {
            output_activation: self.output_activation,
            layers,
        }
    }

    pub fn from_doc(doc: &NetworkDoc) -> Result<Self> {
        let count = doc.layers.len() / 2;
        if count == 0 || doc.layers.len() != 2 * count {
            return Err(Error::Checkpoint(format!(
                "expected weight/bias pairs, found {} tensors",
                doc.layers.len()
            )));
        }
        let mut layers = Vec::with_capacity(count);
        for i in 0..count {
            let get = |suffix: &str| {
                doc.layers
                    .get(&format!("dense{i}.{suffix}"))
                    .ok_or_else(|| Error::Checkpoint(format!("missing tensor dense{i}.{suffix}")))
            };
            let (w, b) = (get("weight")?, get("bias")?);
            let (outputs, inputs) = match w.shape.as_slice() {
                [o, i] => (*o, *i),
                s => {
                    return Err(Error::Checkpoint(format!(
                        "dense{i}.weight has shape {s:?}"
                    )))
                }
            };
            if w.data.len() != outputs * inputs || b.shape != [outputs] || b.data.len() != outputs {
                return Err(Error::Checkpoint(format!(
                    "dense{i}: inconsistent tensor sizes"
                )));
            }
            if let Some(prev) = layers.last().map(|l: &Dense| l.outputs) {
                if prev != inputs {
                    return Err(Error::Checkpoint(format!(
                        "dense{i} expects {inputs} inputs but previous layer has {prev} outputs"
                    )));
                }
            }
            layers.push(Dense {
                inputs,
                outputs,
                weights: w.data.clone(),
                bias: b.data.clone(),
            });
        }
        Ok(Self {
            layers,
            output_activation: doc.output_activation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::MlpSpec;
    use crate::seeded_rng;

    #[test]
    fn json_round_trip_is_exact() {
        let net = Mlp::init(
            &MlpSpec::new(5, &[7, 3], 2, Activation::Tanh),
            &mut seeded_rng(3, 0),
        )
        .unwrap();
        let text = serde_json::to_string(&net.to_doc()).unwrap();
        let back = Mlp::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn broken_chain_is_rejected() {
        let net = Mlp::init(
            &MlpSpec::new(5, &[7], 2, Activation::Tanh),
            &mut seeded_rng(3, 0),
        )
        .unwrap();
        let mut doc = net.to_doc();
        doc.layers.get_mut("dense1.weight").unwrap().shape = vec![2, 6];
        doc.layers
            .get_mut("dense1.weight")
            .unwrap()
            .data
            .truncate(12);
        assert!(matches!(Mlp::from_doc(&doc), Err(Error::Checkpoint(_))));
        doc.layers.remove("dense1.bias");
        assert!(Mlp::from_doc(&doc).is_err());
    }
}
