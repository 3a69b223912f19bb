//! JSON form of a Kraus map.
//!
//! ```json
//! {"dim": 2, "operators": [
//!   {"label": {"kind": "jump", "k": 0}, "re": [[1, 0], [0, 1]], "im": [[0, 0], [0, 0]],
//!    "sigma_e": 0.0, "dphi": null}
//! ]}
//! ```

use crate::error::{ChannelError, Result};
use crate::kraus::{KrausLabel, KrausMap, KrausOperator};
use qtherm_core::{CMatrix, C64};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Serialize, Deserialize)]
struct OperatorRepr {
    label: KrausLabel,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    #[serde(default)]
    sigma_e: Option<f64>,
    #[serde(default)]
    dphi: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    dim: usize,
    operators: Vec<OperatorRepr>,
}

fn to_repr(map: &KrausMap) -> MapRepr {
    let d = map.dim();
    MapRepr {
        dim: d,
        operators: map
            .ops()
            .iter()
            .map(|op| OperatorRepr {
                label: op.label,
                re: (0..d).map(|i| (0..d).map(|j| op.matrix[(i, j)].re).collect()).collect(),
                im: (0..d).map(|i| (0..d).map(|j| op.matrix[(i, j)].im).collect()).collect(),
                sigma_e: op.sigma_e,
                dphi: op.dphi,
            })
            .collect(),
    }
}

fn from_repr(r: MapRepr) -> Result<KrausMap> {
    let d = r.dim;
    let mut ops = Vec::with_capacity(r.operators.len());
    for (k, op) in r.operators.into_iter().enumerate() {
        let shape_ok = |m: &Vec<Vec<f64>>| m.len() == d && m.iter().all(|row| row.len() == d);
        if !shape_ok(&op.re) || !shape_ok(&op.im) {
            return Err(ChannelError::Format(format!("operator {k} is not {d}x{d}")));
        }
        let matrix = CMatrix::from_fn(d, d, |i, j| C64::new(op.re[i][j], op.im[i][j]));
        ops.push(KrausOperator {
            matrix,
            label: op.label,
            sigma_e: op.sigma_e,
            dphi: op.dphi,
        });
    }
    KrausMap::new(ops)
}

impl Serialize for KrausMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_repr(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for KrausMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MapRepr::deserialize(d)?;
        from_repr(r).map_err(serde::de::Error::custom)
    }
}

impl KrausMap {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("finite map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ChannelError::Format(e.to_string()))
    }
}
