use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recurrent cell family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ArchKind {
    #[serde(rename = "MGU")]
    Mgu,
    #[serde(rename = "GRU")]
    Gru,
}

impl ArchKind {
    /// Number of gated sub-structures per layer, i.e. the coefficient on the
    /// recurrent summand of the parameter count.
    pub fn gate_count(self) -> usize {
        match self {
            ArchKind::Mgu => 2,
            ArchKind::Gru => 3,
        }
    }
}

impl std::fmt::Display for ArchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ArchKind::Mgu => "MGU",
            ArchKind::Gru => "GRU",
        })
    }
}

/// Architecture description: cell kind and layer widths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArchSpec {
    pub kind: ArchKind,
    pub n_u: usize,
    pub n_y: usize,
    pub layer_sizes: Vec<usize>,
}

impl ArchSpec {
    pub fn new(kind: ArchKind, n_u: usize, n_y: usize, layer_sizes: impl Into<Vec<usize>>) -> Self {
        Self {
            kind,
            n_u,
            n_y,
            layer_sizes: layer_sizes.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_u == 0 || self.n_y == 0 {
            return Err(Error::Precondition("n_u and n_y must be positive".into()));
        }
        if self.layer_sizes.is_empty() {
            return Err(Error::Precondition("at least one recurrent layer is required".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::Precondition("every layer needs at least one hidden unit".into()));
        }
        Ok(())
    }

    /// Input width of layer `l` (0-based): `n_u` for the first layer, the
    /// previous layer's width otherwise.
    pub fn layer_input_width(&self, l: usize) -> usize {
        if l == 0 {
            self.n_u
        } else {
            self.layer_sizes[l - 1]
        }
    }
}

/// Parameters of one MGU layer. `c` denotes the candidate hidden state.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerParams {
    pub w_f: DMatrix<f64>,
    pub r_f: DMatrix<f64>,
    pub b_f: DVector<f64>,
    pub w_c: DMatrix<f64>,
    pub r_c: DMatrix<f64>,
    pub b_c: DVector<f64>,
}

impl LayerParams {
    pub fn zeros(n_h: usize, n_in: usize) -> Self {
        Self {
            w_f: DMatrix::zeros(n_h, n_in),
            r_f: DMatrix::zeros(n_h, n_h),
            b_f: DVector::zeros(n_h),
            w_c: DMatrix::zeros(n_h, n_in),
            r_c: DMatrix::zeros(n_h, n_h),
            b_c: DVector::zeros(n_h),
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.b_f.len()
    }

    pub fn n_input(&self) -> usize {
        self.w_f.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_hidden(), self.n_input());
        check_shape("W_f", &self.w_f, n, m)?;
        check_shape("R_f", &self.r_f, n, n)?;
        check_shape("W_c", &self.w_c, n, m)?;
        check_shape("R_c", &self.r_c, n, n)?;
        if self.b_c.len() != n {
            return Err(Error::shape("b_c", n, self.b_c.len()));
        }
        check_finite("MGU layer", self.slices())
    }

    pub fn slices(&self) -> [&[f64]; 6] {
        [
            self.w_f.as_slice(),
            self.r_f.as_slice(),
            self.b_f.as_slice(),
            self.w_c.as_slice(),
            self.r_c.as_slice(),
            self.b_c.as_slice(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w_f.as_mut_slice(),
            self.r_f.as_mut_slice(),
            self.b_f.as_mut_slice(),
            self.w_c.as_mut_slice(),
            self.r_c.as_mut_slice(),
            self.b_c.as_mut_slice(),
        ]
    }
}

/// Parameters of one GRU layer (update gate `z`, reset gate `r`, candidate `c`).
#[derive(Clone, Debug, PartialEq)]
pub struct GruLayerParams {
    pub w_z: DMatrix<f64>,
    pub r_z: DMatrix<f64>,
    pub b_z: DVector<f64>,
    pub w_r: DMatrix<f64>,
    pub r_r: DMatrix<f64>,
    pub b_r: DVector<f64>,
    pub w_c: DMatrix<f64>,
    pub r_c: DMatrix<f64>,
    pub b_c: DVector<f64>,
}

impl GruLayerParams {
    pub fn zeros(n_h: usize, n_in: usize) -> Self {
        Self {
            w_z: DMatrix::zeros(n_h, n_in),
            r_z: DMatrix::zeros(n_h, n_h),
            b_z: DVector::zeros(n_h),
            w_r: DMatrix::zeros(n_h, n_in),
            r_r: DMatrix::zeros(n_h, n_h),
            b_r: DVector::zeros(n_h),
            w_c: DMatrix::zeros(n_h, n_in),
            r_c: DMatrix::zeros(n_h, n_h),
            b_c: DVector::zeros(n_h),
        }
    }

    pub fn n_hidden(&self) -> usize {
        self.b_z.len()
    }

    pub fn n_input(&self) -> usize {
        self.w_z.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n_hidden(), self.n_input());
        for (name, w, r, b) in [
            ("z", &self.w_z, &self.r_z, &self.b_z),
            ("r", &self.w_r, &self.r_r, &self.b_r),
            ("c", &self.w_c, &self.r_c, &self.b_c),
        ] {
            check_shape(&format!("W_{name}"), w, n, m)?;
            check_shape(&format!("R_{name}"), r, n, n)?;
            if b.len() != n {
                return Err(Error::shape(format!("b_{name}"), n, b.len()));
            }
        }
        check_finite("GRU layer", self.slices())
    }

    pub fn slices(&self) -> [&[f64]; 9] {
        [
            self.w_z.as_slice(),
            self.r_z.as_slice(),
            self.b_z.as_slice(),
            self.w_r.as_slice(),
            self.r_r.as_slice(),
            self.b_r.as_slice(),
            self.w_c.as_slice(),
            self.r_c.as_slice(),
            self.b_c.as_slice(),
        ]
    }

    pub fn slices_mut(&mut self) -> [&mut [f64]; 9] {
        [
            self.w_z.as_mut_slice(),
            self.r_z.as_mut_slice(),
            self.b_z.as_mut_slice(),
            self.w_r.as_mut_slice(),
            self.r_r.as_mut_slice(),
            self.b_r.as_mut_slice(),
            self.w_c.as_mut_slice(),
            self.r_c.as_mut_slice(),
            self.b_c.as_mut_slice(),
        ]
    }
}

/// Stacked recurrent layers; a network is homogeneous in its cell kind.
#[derive(Clone, Debug, PartialEq)]
pub enum Layers {
    Mgu(Vec<LayerParams>),
    Gru(Vec<GruLayerParams>),
}

/// Full network parameter set: recurrent layers plus the linear readout
/// `y_k = W_y h_{k+1}^(L) + b_y`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkParams {
    pub n_u: usize,
    pub n_y: usize,
    pub layers: Layers,
    pub w_y: DMatrix<f64>,
    pub b_y: DVector<f64>,
}

impl NetworkParams {
    /// All-zero parameters for the given architecture.
    pub fn zeros(spec: &ArchSpec) -> Result<Self> {
        spec.validate()?;
        let widths = (0..spec.layer_sizes.len()).map(|l| (spec.layer_sizes[l], spec.layer_input_width(l)));
        let layers = match spec.kind {
            ArchKind::Mgu => Layers::Mgu(widths.map(|(h, i)| LayerParams::zeros(h, i)).collect()),
            ArchKind::Gru => Layers::Gru(widths.map(|(h, i)| GruLayerParams::zeros(h, i)).collect()),
        };
        let last = *spec.layer_sizes.last().expect("validated non-empty");
        Ok(Self {
            n_u: spec.n_u,
            n_y: spec.n_y,
            layers,
            w_y: DMatrix::zeros(spec.n_y, last),
            b_y: DVector::zeros(spec.n_y),
        })
    }

    pub fn arch_kind(&self) -> ArchKind {
        match self.layers {
            Layers::Mgu(_) => ArchKind::Mgu,
            Layers::Gru(_) => ArchKind::Gru,
        }
    }

    pub fn num_layers(&self) -> usize {
        match &self.layers {
            Layers::Mgu(l) => l.len(),
            Layers::Gru(l) => l.len(),
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        match &self.layers {
            Layers::Mgu(l) => l.iter().map(LayerParams::n_hidden).collect(),
            Layers::Gru(l) => l.iter().map(GruLayerParams::n_hidden).collect(),
        }
    }

    pub fn spec(&self) -> ArchSpec {
        ArchSpec::new(self.arch_kind(), self.n_u, self.n_y, self.layer_sizes())
    }

    /// MGU layers, or an unsupported-architecture error for GRU networks.
    pub fn mgu_layers(&self) -> Result<&[LayerParams]> {
        match &self.layers {
            Layers::Mgu(l) => Ok(l),
            Layers::Gru(_) => Err(Error::UnsupportedArch(
                "operation is defined for MGU networks only".into(),
            )),
        }
    }

    pub fn mgu_layers_mut(&mut self) -> Result<&mut [LayerParams]> {
        match &mut self.layers {
            Layers::Mgu(l) => Ok(l),
            Layers::Gru(_) => Err(Error::UnsupportedArch(
                "operation is defined for MGU networks only".into(),
            )),
        }
    }

    /// Checks the cascade routing widths, every array shape, and finiteness.
    pub fn validate(&self) -> Result<()> {
        let spec = self.spec();
        spec.validate()?;
        for l in 0..self.num_layers() {
            let (n_in, expected) = match &self.layers {
                Layers::Mgu(v) => {
                    v[l].validate()?;
                    (v[l].n_input(), spec.layer_input_width(l))
                }
                Layers::Gru(v) => {
                    v[l].validate()?;
                    (v[l].n_input(), spec.layer_input_width(l))
                }
            };
            if n_in != expected {
                return Err(Error::shape(format!("layer {} input width", l + 1), expected, n_in));
            }
        }
        let last = *spec.layer_sizes.last().expect("validated non-empty");
        check_shape("W_y", &self.w_y, self.n_y, last)?;
        if self.b_y.len() != self.n_y {
            return Err(Error::shape("b_y", self.n_y, self.b_y.len()));
        }
        check_finite("readout", [self.w_y.as_slice(), self.b_y.as_slice()])
    }

    /// Every parameter array in canonical order: per layer, then `W_y`, `b_y`.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = match &self.layers {
            Layers::Mgu(v) => v.iter().flat_map(|l| l.slices()).collect(),
            Layers::Gru(v) => v.iter().flat_map(|l| l.slices()).collect(),
        };
        out.push(self.w_y.as_slice());
        out.push(self.b_y.as_slice());
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = match &mut self.layers {
            Layers::Mgu(v) => v.iter_mut().flat_map(|l| l.slices_mut()).collect(),
            Layers::Gru(v) => v.iter_mut().flat_map(|l| l.slices_mut()).collect(),
        };
        out.push(self.w_y.as_mut_slice());
        out.push(self.b_y.as_mut_slice());
        out
    }

    pub fn num_values(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    /// Flattened copy of all parameters in canonical order.
    pub fn to_flat(&self) -> Vec<f64> {
        self.slices().concat()
    }

    /// Overwrites all parameters from a flat vector produced by [`Self::to_flat`].
    pub fn set_flat(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.num_values() {
            return Err(Error::shape("flat parameter vector", self.num_values(), values.len()));
        }
        let mut offset = 0;
        for s in self.slices_mut() {
            let n = s.len();
            s.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Same shapes, every entry zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for s in z.slices_mut() {
            s.fill(0.0);
        }
        z
    }
}

fn check_shape(name: &str, m: &DMatrix<f64>, rows: usize, cols: usize) -> Result<()> {
    if m.shape() != (rows, cols) {
        return Err(Error::shape(
            name,
            format!("{rows}x{cols}"),
            format!("{}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn check_finite<'a>(what: &str, arrays: impl IntoIterator<Item = &'a [f64]>) -> Result<()> {
    if arrays.into_iter().flatten().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { what: what.into() })
    }
}

/// Number of trainable parameters:
/// `n_y (n_h^(L) + 1) + g * sum_l n_h^(l) (n_in^(l) + n_h^(l) + 1)` with `g` the gate count.
pub fn param_count(spec: &ArchSpec) -> Result<usize> {
    spec.validate()?;
    let recurrent: usize = spec
        .layer_sizes
        .iter()
        .enumerate()
        .map(|(l, &h)| h * (spec.layer_input_width(l) + h + 1))
        .sum();
    let last = *spec.layer_sizes.last().expect("validated non-empty");
    Ok(spec.n_y * (last + 1) + spec.kind.gate_count() * recurrent)
}
