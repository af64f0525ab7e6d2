use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cuts::Cut;
use crate::error::{Error, Result};

/// Tolerance below which a value counts as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Primal feasibility tolerance for rows and bounds.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// A single `coefs · x <= rhs` row. Coefficients are sparse `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

impl Row {
    pub fn new(coefs: Vec<(usize, f64)>, rhs: f64) -> Self {
        Row { coefs, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// Relation of a row as written in an instance file. Rows are stored as `<=`
/// after loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// `min c·x  s.t.  A x <= b,  lo <= x <= hi,  x_j integer for j in integers`.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpInstance {
    pub name: String,
    pub n: usize,
    pub c: Vec<f64>,
    pub rows: Vec<Row>,
    /// Sorted, deduplicated.
    pub integers: Vec<usize>,
    pub bounds: Vec<(f64, f64)>,
}

impl MilpInstance {
    /// Builds an instance with default bounds `[0, +inf)` and validates it.
    pub fn new(
        name: impl Into<String>,
        c: Vec<f64>,
        rows: Vec<Row>,
        integers: Vec<usize>,
    ) -> Result<Self> {
        let n = c.len();
        Self::with_bounds(name, c, rows, integers, vec![(0.0, f64::INFINITY); n])
    }

    pub fn with_bounds(
        name: impl Into<String>,
        c: Vec<f64>,
        rows: Vec<Row>,
        mut integers: Vec<usize>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        integers.sort_unstable();
        integers.dedup();
        let inst = MilpInstance {
            name: name.into(),
            n: c.len(),
            c,
            rows,
            integers,
            bounds,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.c.len() != self.n {
            return bad(format!(
                "objective has {} entries, n = {}",
                self.c.len(),
                self.n
            ));
        }
        if self.bounds.len() != self.n {
            return bad(format!("{} bounds for n = {}", self.bounds.len(), self.n));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return bad("non-finite objective coefficient".into());
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return bad(format!("row {i} has non-finite rhs"));
            }
            for &(j, a) in &row.coefs {
                if j >= self.n {
                    return bad(format!("row {i} references column {j} >= n"));
                }
                if !a.is_finite() {
                    return bad(format!("row {i} has a non-finite coefficient"));
                }
            }
        }
        if self.integers.len() > self.n || self.integers.iter().any(|&j| j >= self.n) {
            return bad("integer index out of range".into());
        }
        if self.integers.windows(2).any(|w| w[0] >= w[1]) {
            return bad("integer set must be sorted and distinct".into());
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if !lo.is_finite() {
                return bad(format!("variable {j} needs a finite lower bound"));
            }
            if lo > hi || hi.is_nan() {
                return bad(format!("variable {j} has lower > upper"));
            }
        }
        Ok(())
    }

    pub fn is_integer(&self, j: usize) -> bool {
        self.integers.binary_search(&j).is_ok()
    }

    /// Dense membership mask over the `n` variables.
    pub fn integer_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &j in &self.integers {
            mask[j] = true;
        }
        mask
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Rows and bounds hold within `tol`, integrality within [`INTEGRALITY_TOL`].
    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n
            && self
                .bounds
                .iter()
                .zip(x)
                .all(|(&(lo, hi), &v)| v >= lo - tol && v <= hi + tol)
            && self.rows.iter().all(|r| r.activity(x) <= r.rhs + tol)
            && self
                .integers
                .iter()
                .all(|&j| (x[j] - x[j].round()).abs() <= INTEGRALITY_TOL)
    }

    /// Appends the cuts as `<=` rows, preserving their order.
    pub fn add_rows(&self, cuts: &[Cut]) -> Result<MilpInstance> {
        let mut out = self.clone();
        for cut in cuts {
            if let Some(&(j, _)) = cut.alpha.iter().find(|&&(j, _)| j >= self.n) {
                return Err(Error::DimensionMismatch(format!(
                    "cut {} references column {j} but n = {}",
                    cut.id, self.n
                )));
            }
            out.rows.push(Row::new(cut.alpha.clone(), cut.beta));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&InstanceFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(text)?;
        file.into_instance()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A bound in the file format: a number, or the string `"inf"`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum FileBound {
    Num(f64),
    Str(InfTag),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl FileBound {
    fn encode(v: f64) -> Self {
        if v == f64::INFINITY {
            FileBound::Str(InfTag::Inf)
        } else {
            FileBound::Num(v)
        }
    }

    fn decode(self) -> f64 {
        match self {
            FileBound::Num(v) => v,
            FileBound::Str(InfTag::Inf) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FileRow {
    coefs: Vec<(usize, f64)>,
    rhs: f64,
    rel: Relation,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceFile {
    name: String,
    n: usize,
    m: usize,
    c: Vec<f64>,
    rows: Vec<FileRow>,
    integers: Vec<usize>,
    bounds: Vec<(FileBound, FileBound)>,
}

impl From<&MilpInstance> for InstanceFile {
    fn from(inst: &MilpInstance) -> Self {
        InstanceFile {
            name: inst.name.clone(),
            n: inst.n,
            m: inst.m(),
            c: inst.c.clone(),
            rows: inst
                .rows
                .iter()
                .map(|r| FileRow {
                    coefs: r.coefs.clone(),
                    rhs: r.rhs,
                    rel: Relation::Le,
                })
                .collect(),
            integers: inst.integers.clone(),
            bounds: inst
                .bounds
                .iter()
                .map(|&(lo, hi)| (FileBound::encode(lo), FileBound::encode(hi)))
                .collect(),
        }
    }
}

impl InstanceFile {
    fn into_instance(self) -> Result<MilpInstance> {
        if self.m != self.rows.len() {
            return Err(Error::InvalidInstance(format!(
                "header says m = {} but {} rows present",
                self.m,
                self.rows.len()
            )));
        }
        let negate = |coefs: &[(usize, f64)]| coefs.iter().map(|&(j, a)| (j, -a)).collect();
        let mut rows = Vec::with_capacity(self.rows.len());
        for r in self.rows {
            match r.rel {
                Relation::Le => rows.push(Row::new(r.coefs, r.rhs)),
                Relation::Ge => rows.push(Row::new(negate(&r.coefs), -r.rhs)),
                Relation::Eq => {
                    rows.push(Row::new(negate(&r.coefs), -r.rhs));
                    rows.push(Row::new(r.coefs, r.rhs));
                }
            }
        }
        let bounds = self
            .bounds
            .into_iter()
            .map(|(lo, hi)| (lo.decode(), hi.decode()))
            .collect();
        let inst = MilpInstance {
            name: self.name,
            n: self.n,
            c: self.c,
            rows,
            integers: self.integers,
            bounds,
        };
        inst.validate()?;
        Ok(inst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::{Cut, CutOrigin};

    fn cut(id: u64, alpha: Vec<(usize, f64)>, beta: f64) -> Cut {
        Cut {
            alpha,
            beta,
            origin: CutOrigin {
                source_row: 0,
                round: 0,
            },
            id,
        }
    }

    fn small() -> MilpInstance {
        MilpInstance::with_bounds(
            "small",
            vec![-1.0, -2.0, 0.5],
            vec![
                Row::new(vec![(0, 1.0), (1, 1.0)], 3.0),
                Row::new(vec![(1, 2.0), (2, -1.0)], 4.5),
            ],
            vec![2, 0],
            vec![(0.0, 1.0), (0.0, f64::INFINITY), (-1.0, 2.0)],
        )
        .unwrap()
    }

    #[test]
    fn add_rows_appends_in_order() {
        let inst = small();
        let a = cut(0, vec![(0, 1.0)], 0.0);
        let b = cut(1, vec![(1, 1.0), (2, 1.0)], 2.0);
        let ab = inst.add_rows(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab.m(), inst.m() + 2);
        assert_eq!(ab.rows[inst.m()].coefs, a.alpha);
        assert_eq!(&ab.rows[..inst.m()], &inst.rows[..]);
        let ba = inst.add_rows(&[b, a]).unwrap();
        assert_eq!(ab.rows[inst.m()], ba.rows[inst.m() + 1]);
        assert_eq!(ab.rows[inst.m() + 1], ba.rows[inst.m()]);
        assert_eq!(inst.add_rows(&[]).unwrap(), inst);
    }

    #[test]
    fn add_rows_rejects_out_of_range_cut() {
        let err = small()
            .add_rows(&[cut(0, vec![(3, 1.0)], 1.0)])
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let inst = small();
        let text = inst.to_json().unwrap();
        assert!(text.contains("\"inf\""));
        let back = MilpInstance::from_json(&text).unwrap();
        assert_eq!(back, inst);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn ge_and_eq_rows_are_normalized() {
        let text = r#"{"name":"t","n":2,"m":2,
            "c":[1.0,1.0],
            "rows":[{"coefs":[[0,1.0]],"rhs":1.0,"rel":">="},
                    {"coefs":[[0,1.0],[1,1.0]],"rhs":2.0,"rel":"="}],
            "integers":[],"bounds":[[0.0,"inf"],[0.0,"inf"]]}"#;
        let inst = MilpInstance::from_json(text).unwrap();
        assert_eq!(inst.m(), 3);
        assert_eq!(inst.rows[0], Row::new(vec![(0, -1.0)], -1.0));
        assert_eq!(inst.rows[1], Row::new(vec![(0, -1.0), (1, -1.0)], -2.0));
        assert_eq!(inst.rows[2], Row::new(vec![(0, 1.0), (1, 1.0)], 2.0));
    }

    #[test]
    fn validation_catches_bad_instances() {
        let bad_col =
            MilpInstance::new("x", vec![1.0], vec![Row::new(vec![(1, 1.0)], 1.0)], vec![]);
        assert!(bad_col.is_err());
        let bad_bounds =
            MilpInstance::with_bounds("x", vec![1.0], vec![], vec![], vec![(2.0, 1.0)]);
        assert!(bad_bounds.is_err());
        let bad_header =
            r#"{"name":"t","n":1,"m":3,"c":[1.0],"rows":[],"integers":[],"bounds":[[0.0,1.0]]}"#;
        assert!(MilpInstance::from_json(bad_header).is_err());
    }
}
