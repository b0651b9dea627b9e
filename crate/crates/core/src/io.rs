//! File schemas. Complex numbers are `[re, im]` pairs and matrices are
//! row-major nested arrays; an `r × 0` or `0 × c` matrix is written as `r`
//! empty rows or as `[]` respectively (the declared dimensions disambiguate).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::aip::{encode_nevanlinna_pick, AipData};
use crate::colligation::Colligation;
use crate::linalg;
use crate::rational::RationalMatrixFunction;
use crate::{Error, Mat64, Result};

pub type Rows = Vec<Vec<Complex64>>;

pub fn to_rows(a: &Mat64) -> Rows {
    (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect()).collect()
}

/// Reads a `rows × cols` matrix; `field` names the entry in error messages.
pub fn from_rows(rows: &Rows, nrows: usize, ncols: usize, field: &str) -> Result<Mat64> {
    let empty = rows.is_empty() && (nrows == 0 || ncols == 0);
    if !empty && rows.len() != nrows {
        return Err(Error::invalid(format!("{field}: expected {nrows} rows, found {}", rows.len())));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::invalid(format!("{field}: row {i} has {} entries, expected {ncols}", r.len())));
    }
    Ok(Mat64::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

/// Problem data with optional run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    #[serde(rename = "M")]
    pub m: Rows,
    #[serde(rename = "N")]
    pub n_matrix: Rows,
    #[serde(rename = "C1")]
    pub c1: Rows,
    #[serde(rename = "C2")]
    pub c2: Rows,
    #[serde(rename = "P")]
    pub p_matrix: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Complex64>,
    /// Negative index `κ̃` allowed for solutions; defaults to that of `P`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<ParameterSpec>,
    /// Point conditions `s(z_j) = w_j` the data are known to encode; solutions
    /// are checked against them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpolation: Option<PointConditions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn from_data(data: &AipData<f64>) -> Self {
        Self {
            n: data.dim(),
            p: data.out_dim(),
            q: data.in_dim(),
            m: to_rows(&data.m),
            n_matrix: to_rows(&data.n),
            c1: to_rows(&data.c1),
            c2: to_rows(&data.c2),
            p_matrix: to_rows(&data.p),
            anchor: data.anchor,
            kappa: data.kappa_target,
            epsilon: None,
            interpolation: None,
            grid: None,
            tol: None,
            seed: None,
        }
    }

    /// Scalar Nevanlinna–Pick data, with the point conditions attached.
    pub fn nevanlinna_pick(nodes: &[Complex64], values: &[Complex64]) -> Result<Self> {
        let mut file = Self::from_data(&encode_nevanlinna_pick(nodes, values)?);
        file.interpolation = Some(PointConditions {
            nodes: nodes.to_vec(),
            values: values.iter().map(|w| vec![vec![*w]]).collect(),
        });
        Ok(file)
    }

    /// Builds the problem data. Assumptions are not checked here; see
    /// [`crate::aip::validate`].
    pub fn to_data(&self) -> Result<AipData<f64>> {
        let (n, p, q) = (self.n, self.p, self.q);
        let mut data = AipData::new(
            from_rows(&self.m, n, n, "M")?,
            from_rows(&self.n_matrix, n, n, "N")?,
            from_rows(&self.c1, p, n, "C1")?,
            from_rows(&self.c2, q, n, "C2")?,
            from_rows(&self.p_matrix, n, n, "P")?,
        )?;
        if let Some(a) = self.anchor {
            data = data.with_anchor(a);
        }
        if let Some(k) = self.kappa {
            data = data.with_kappa_target(k);
        }
        Ok(data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointConditions {
    pub nodes: Vec<Complex64>,
    /// One `p × q` matrix per node.
    pub values: Vec<Rows>,
}

impl PointConditions {
    /// `‖s(z_j) − w_j‖` per node; `None` where `s` cannot be evaluated.
    pub fn residuals(&self, s: &RationalMatrixFunction<f64>) -> Result<Vec<Option<f64>>> {
        if self.nodes.len() != self.values.len() {
            return Err(Error::invalid("interpolation: as many values as nodes are required"));
        }
        let (p, q) = (s.out_dim(), s.in_dim());
        let mut out = Vec::with_capacity(self.nodes.len());
        for (z, w) in self.nodes.iter().zip(&self.values) {
            let w = from_rows(w, p, q, "interpolation value")?;
            out.push(s.evaluate(*z).ok().map(|v| linalg::norm2(&(v - w))));
        }
        Ok(out)
    }
}

/// Schur-class parameter `ε`: a constant matrix or a realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParameterSpec {
    Constant { value: Rows },
    Realization(FunctionFile),
}

impl ParameterSpec {
    pub fn to_function(&self, p: usize, q: usize) -> Result<RationalMatrixFunction<f64>> {
        match self {
            ParameterSpec::Constant { value } => Ok(RationalMatrixFunction::constant(from_rows(value, p, q, "epsilon")?)),
            ParameterSpec::Realization(f) => {
                if (f.p, f.q) != (p, q) {
                    return Err(Error::invalid(format!("epsilon must be {p}x{q}")));
                }
                f.to_function()
            }
        }
    }
}

/// `s(λ) = H + (λ−c)G(I − (λ−c)T)⁻¹F` with `p × q` values and state
/// dimension `d`; the center `c` defaults to `0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionFile {
    pub p: usize,
    pub q: usize,
    pub d: usize,
    #[serde(rename = "T")]
    pub t: Rows,
    #[serde(rename = "F")]
    pub f: Rows,
    #[serde(rename = "G")]
    pub g: Rows,
    #[serde(rename = "H")]
    pub h: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Complex64>,
}

impl FunctionFile {
    pub fn from_function(s: &RationalMatrixFunction<f64>) -> Self {
        let c = s.center();
        Self {
            p: s.out_dim(),
            q: s.in_dim(),
            d: s.state_dim(),
            t: to_rows(s.t()),
            f: to_rows(s.f()),
            g: to_rows(s.g()),
            h: to_rows(s.h()),
            center: (c != Complex64::new(0.0, 0.0)).then_some(c),
        }
    }

    pub fn to_function(&self) -> Result<RationalMatrixFunction<f64>> {
        let (p, q, d) = (self.p, self.q, self.d);
        RationalMatrixFunction::with_center(
            from_rows(&self.t, d, d, "T")?,
            from_rows(&self.f, d, q, "F")?,
            from_rows(&self.g, p, d, "G")?,
            from_rows(&self.h, p, q, "H")?,
            self.center.unwrap_or_default(),
        )
    }
}

/// A function file together with the state Gram matrix `X`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColligationFile {
    #[serde(flatten)]
    pub function: FunctionFile,
    #[serde(rename = "X")]
    pub x: Rows,
}

impl ColligationFile {
    pub fn from_colligation(c: &Colligation<f64>) -> Self {
        Self {
            function: FunctionFile::from_function(&c.characteristic_function()),
            x: to_rows(c.gram()),
        }
    }

    pub fn to_colligation(&self) -> Result<Colligation<f64>> {
        let f = &self.function;
        if f.center.is_some_and(|c| c != Complex64::new(0.0, 0.0)) {
            return Err(Error::invalid("colligation files are centered at 0"));
        }
        let s = f.to_function()?;
        Colligation::new(from_rows(&self.x, f.d, f.d, "X")?, s.t().clone(), s.f().clone(), s.g().clone(), s.h().clone())
    }
}
