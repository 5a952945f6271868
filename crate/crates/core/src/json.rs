//! JSON wire formats. Complex numbers are `[re, im]` pairs; matrices are
//! row-major.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finder::{FeasibilityReport, Verdict};
use crate::fock::DetectorModel;
use crate::group::{FiniteGroup, LabelAction};
use crate::linalg::ComplexMatrix;
use crate::povm::{Bb84Povm, Label};
use crate::squash::SquashMap;

/// Square matrices carry `dim`; rectangular ones carry `rows` and `cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub entries: Vec<[f64; 2]>,
}

fn pairs(v: &[Complex64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

fn complexes(v: &[[f64; 2]]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

impl From<&ComplexMatrix> for MatrixJson {
    fn from(m: &ComplexMatrix) -> Self {
        let (dim, rows, cols) = if m.is_square() {
            (Some(m.rows()), None, None)
        } else {
            (None, Some(m.rows()), Some(m.cols()))
        };
        MatrixJson {
            dim,
            rows,
            cols,
            entries: pairs(m.entries()),
        }
    }
}

impl TryFrom<&MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(j: &MatrixJson) -> Result<Self> {
        let (rows, cols) = match (j.dim, j.rows, j.cols) {
            (Some(d), None, None) => (d, d),
            (None, Some(r), Some(c)) => (r, c),
            (Some(d), Some(r), Some(c)) if r == d && c == d => (d, d),
            _ => {
                return Err(Error::InvalidShape(
                    "matrix needs either \"dim\" or both \"rows\" and \"cols\"".into(),
                ))
            }
        };
        ComplexMatrix::from_vec(rows, cols, complexes(&j.entries))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmElementsJson {
    pub z0: MatrixJson,
    pub z1: MatrixJson,
    pub x0: MatrixJson,
    pub x1: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PovmJson {
    pub dim: usize,
    pub elements: PovmElementsJson,
}

impl From<&Bb84Povm> for PovmJson {
    fn from(p: &Bb84Povm) -> Self {
        let m = |s: &str| MatrixJson::from(p.element(Label::parse(s).expect("label")));
        PovmJson {
            dim: p.dim(),
            elements: PovmElementsJson {
                z0: m("z0"),
                z1: m("z1"),
                x0: m("x0"),
                x1: m("x1"),
            },
        }
    }
}

impl TryFrom<&PovmJson> for Bb84Povm {
    type Error = Error;

    fn try_from(j: &PovmJson) -> Result<Self> {
        let e = &j.elements;
        let m = |x: &MatrixJson| ComplexMatrix::try_from(x);
        let p = Bb84Povm::new(m(&e.z0)?, m(&e.z1)?, m(&e.x0)?, m(&e.x1)?)?;
        if p.dim() != j.dim {
            return Err(Error::DimensionMismatch {
                expected: j.dim,
                got: p.dim(),
            });
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupJson {
    pub order: usize,
    pub cayley: Vec<Vec<usize>>,
    pub identity: usize,
}

impl From<&FiniteGroup> for GroupJson {
    fn from(g: &FiniteGroup) -> Self {
        GroupJson {
            order: g.order(),
            cayley: g.cayley().to_vec(),
            identity: g.identity(),
        }
    }
}

impl TryFrom<&GroupJson> for FiniteGroup {
    type Error = Error;

    fn try_from(j: &GroupJson) -> Result<Self> {
        let g = FiniteGroup::new(j.cayley.clone(), j.identity)?;
        if g.order() != j.order {
            return Err(Error::InvalidGroup(format!(
                "declared order {} but the table has {} rows",
                j.order,
                g.order()
            )));
        }
        Ok(g)
    }
}

/// One entry per group element: the images of `["z0", "x0", "z1", "x1"]`.
pub type ActionJson = Vec<[String; 4]>;

pub fn action_to_json(a: &LabelAction) -> ActionJson {
    a.perms()
        .iter()
        .map(|p| p.map(|c| Label::from_cycle_index(c).name().to_string()))
        .collect()
}

pub fn action_from_json(group: &FiniteGroup, j: &ActionJson) -> Result<LabelAction> {
    let mut perms = Vec::with_capacity(j.len());
    for images in j {
        let mut perm = [0; 4];
        for (slot, name) in perm.iter_mut().zip(images) {
            *slot = Label::parse(name)
                .ok_or_else(|| Error::InvalidAction(format!("unknown label {name:?}")))?
                .cycle_index();
        }
        perms.push(perm);
    }
    LabelAction::new(group, perms)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SquashJson {
    pub in_dim: usize,
    pub kraus: Vec<MatrixJson>,
}

impl From<&SquashMap> for SquashJson {
    fn from(f: &SquashMap) -> Self {
        SquashJson {
            in_dim: f.in_dim(),
            kraus: f.kraus().iter().map(MatrixJson::from).collect(),
        }
    }
}

impl TryFrom<&SquashJson> for SquashMap {
    type Error = Error;

    fn try_from(j: &SquashJson) -> Result<Self> {
        let kraus = j
            .kraus
            .iter()
            .map(ComplexMatrix::try_from)
            .collect::<Result<Vec<_>>>()?;
        let f = SquashMap::new(kraus)?;
        if f.in_dim() != j.in_dim {
            return Err(Error::DimensionMismatch {
                expected: j.in_dim,
                got: f.in_dim(),
            });
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StatesJson {
    pub z0: Vec<[f64; 2]>,
    pub z1: Vec<[f64; 2]>,
    pub x0: Vec<[f64; 2]>,
    pub x1: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectorJson {
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    pub dim: usize,
    pub povm: PovmJson,
    #[serde(rename = "U_N")]
    pub u_n: MatrixJson,
    pub states: StatesJson,
}

impl From<&DetectorModel> for DetectorJson {
    fn from(m: &DetectorModel) -> Self {
        let s = |name: &str| pairs(m.state(Label::parse(name).expect("label")));
        DetectorJson {
            n: m.sector.photons().to_vec(),
            dim: m.sector.dim(),
            povm: PovmJson::from(&m.povm),
            u_n: MatrixJson::from(&m.u_n),
            states: StatesJson {
                z0: s("z0"),
                z1: s("z1"),
                x0: s("x0"),
                x1: s("x1"),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessJson {
    pub theta: f64,
    pub value: f64,
    pub state: MatrixJson,
}

/// `gap` is `null` when no iteration ran.
#[derive(Debug, Clone, Serialize)]
pub struct ReportJson {
    pub verdict: Verdict,
    pub gap: Option<f64>,
    pub iterations: usize,
    pub witness: Option<WitnessJson>,
    pub squash: Option<SquashJson>,
}

impl From<&FeasibilityReport> for ReportJson {
    fn from(r: &FeasibilityReport) -> Self {
        ReportJson {
            verdict: r.verdict,
            gap: r.gap.is_finite().then_some(r.gap),
            iterations: r.iterations,
            witness: r.witness.as_ref().map(|w| WitnessJson {
                theta: w.theta,
                value: w.value,
                state: MatrixJson::from(&w.state()),
            }),
            squash: r.squash.as_ref().map(SquashJson::from),
        }
    }
}

pub fn povm_from_str(s: &str) -> Result<Bb84Povm> {
    let j: PovmJson = serde_json::from_str(s)?;
    Bb84Povm::try_from(&j)
}

pub fn povm_to_string(p: &Bb84Povm) -> String {
    to_pretty(&PovmJson::from(p))
}

pub fn squash_from_str(s: &str) -> Result<SquashMap> {
    let j: SquashJson = serde_json::from_str(s)?;
    SquashMap::try_from(&j)
}

pub fn squash_to_string(f: &SquashMap) -> String {
    to_pretty(&SquashJson::from(f))
}

pub fn group_from_str(s: &str) -> Result<FiniteGroup> {
    let j: GroupJson = serde_json::from_str(s)?;
    FiniteGroup::try_from(&j)
}

pub fn action_from_str(group: &FiniteGroup, s: &str) -> Result<LabelAction> {
    let j: ActionJson = serde_json::from_str(s)?;
    action_from_json(group, &j)
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("wire types serialize");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{build_detector, FockSector};
    use crate::linalg::pauli;

    #[test]
    fn matrix_round_trip_square_and_rect() {
        let y = pauli::y();
        let j = MatrixJson::from(&y);
        assert_eq!(j.dim, Some(2));
        assert_eq!(ComplexMatrix::try_from(&j).unwrap(), y);
        let r = ComplexMatrix::from_fn(2, 3, |a, b| Complex64::new(a as f64, b as f64));
        let j = MatrixJson::from(&r);
        assert_eq!((j.rows, j.cols, j.dim), (Some(2), Some(3), None));
        assert_eq!(ComplexMatrix::try_from(&j).unwrap(), r);
    }

    #[test]
    fn matrix_shape_errors() {
        let j: MatrixJson = serde_json::from_str(r#"{"entries": [[1, 0]]}"#).unwrap();
        assert!(matches!(ComplexMatrix::try_from(&j), Err(Error::InvalidShape(_))));
        let j: MatrixJson = serde_json::from_str(r#"{"dim": 2, "entries": [[1, 0]]}"#).unwrap();
        assert!(ComplexMatrix::try_from(&j).is_err());
    }

    #[test]
    fn povm_round_trip_is_exact() {
        let p = build_detector(&FockSector::new(vec![2, 1]).unwrap()).unwrap().povm;
        let back = povm_from_str(&povm_to_string(&p)).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn povm_dim_mismatch() {
        let mut j = PovmJson::from(&Bb84Povm::ideal_qubit());
        j.dim = 3;
        assert!(matches!(Bb84Povm::try_from(&j), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn group_and_action_round_trip() {
        let g = FiniteGroup::cyclic(4).unwrap();
        let back = group_from_str(&to_pretty(&GroupJson::from(&g))).unwrap();
        assert_eq!(back, g);
        let a = LabelAction::canonical_c4(&g).unwrap();
        let j = action_to_json(&a);
        assert_eq!(j[1], ["x0", "z1", "x1", "z0"].map(String::from));
        assert_eq!(action_from_json(&g, &j).unwrap(), a);
    }

    #[test]
    fn bad_group_and_action() {
        let bad = r#"{"order": 2, "cayley": [[0, 1], [0, 1]], "identity": 0}"#;
        assert!(matches!(group_from_str(bad), Err(Error::InvalidGroup(_))));
        let g = FiniteGroup::cyclic(2).unwrap();
        let unknown = r#"[["z0","x0","z1","x1"],["y0","x0","z1","x1"]]"#;
        assert!(matches!(action_from_str(&g, unknown), Err(Error::InvalidAction(_))));
    }

    #[test]
    fn squash_round_trip() {
        let f = SquashMap::identity();
        assert_eq!(squash_from_str(&squash_to_string(&f)).unwrap().kraus(), f.kraus());
    }

    #[test]
    fn detector_json_fields() {
        let m = build_detector(&FockSector::single_mode(2).unwrap()).unwrap();
        let v = serde_json::to_value(DetectorJson::from(&m)).unwrap();
        assert_eq!(v["N"], serde_json::json!([2]));
        assert_eq!(v["dim"], 3);
        assert_eq!(v["U_N"]["dim"], 3);
        assert_eq!(v["states"]["z0"].as_array().unwrap().len(), 3);
    }
}
