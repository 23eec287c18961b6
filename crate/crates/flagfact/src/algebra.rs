//! Concrete unital involutive algebra instances and their elements.
//!
//! Four instance kinds are supported: dense matrices with the
//! conjugate-transpose involution, dense matrices with an indefinite
//! involution x -> J x^H J, matrix-valued loops sampled on a uniform
//! grid of the circle (all operations pointwise), and block matrices
//! over another instance. Every element carries its parent instance;
//! mixing parents is an error.
//!
//! Internally each element is stored in flattened form: a single dense
//! matrix, or one dense matrix per grid sample for loop-based instances.
//! Block instances flatten recursively, which is what makes inversion
//! and spectra available for them.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::dense::{self, CMat};
use crate::error::{FlagFactError, Result};
use crate::tol::ToleranceConfig;

/// Structure of an algebra instance.
#[derive(Debug, Clone, PartialEq)]
pub enum AlgebraKind {
    DenseStandard {
        dim: usize,
    },
    DenseIndefinite {
        dim: usize,
        /// Diagonal +-1 signature of the involution x -> J x^H J.
        signature: Vec<i8>,
    },
    Loop {
        matdim: usize,
        gridsize: usize,
    },
    Block {
        blockcount: usize,
        inner: Arc<AlgebraInstance>,
    },
}

#[derive(Debug, Clone)]
pub struct AlgebraInstance {
    pub kind: AlgebraKind,
    pub tol: ToleranceConfig,
}

impl PartialEq for AlgebraInstance {
    fn eq(&self, other: &Self) -> bool {
        // tolerance policy does not change the algebra
        self.kind == other.kind
    }
}

/// Involution of the flattened representation.
#[derive(Debug, Clone, PartialEq)]
pub enum FlatInvolution {
    /// Conjugate transpose (also pointwise for loops).
    Standard,
    /// x -> J x^H J with J the given diagonal of +-1 entries.
    Signature(Vec<f64>),
}

impl AlgebraInstance {
    pub fn dense_standard(dim: usize) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(FlagFactError::Invalid("dim must be positive".into()));
        }
        Ok(Arc::new(Self {
            kind: AlgebraKind::DenseStandard { dim },
            tol: ToleranceConfig::default(),
        }))
    }

    pub fn dense_indefinite(dim: usize, signature: Vec<i8>) -> Result<Arc<Self>> {
        if dim == 0 {
            return Err(FlagFactError::Invalid("dim must be positive".into()));
        }
        if signature.len() != dim {
            return Err(FlagFactError::Invalid(format!(
                "signature length {} does not match dim {dim}",
                signature.len()
            )));
        }
        if signature.iter().any(|s| *s != 1 && *s != -1) {
            return Err(FlagFactError::Invalid(
                "signature entries must be +1 or -1".into(),
            ));
        }
        Ok(Arc::new(Self {
            kind: AlgebraKind::DenseIndefinite { dim, signature },
            tol: ToleranceConfig::default(),
        }))
    }

    pub fn loop_algebra(matdim: usize, gridsize: usize) -> Result<Arc<Self>> {
        if matdim == 0 {
            return Err(FlagFactError::Invalid("matdim must be positive".into()));
        }
        if gridsize == 0 || !gridsize.is_power_of_two() {
            return Err(FlagFactError::Invalid(format!(
                "gridsize must be a power of two, got {gridsize}"
            )));
        }
        Ok(Arc::new(Self {
            kind: AlgebraKind::Loop { matdim, gridsize },
            tol: ToleranceConfig::default(),
        }))
    }

    pub fn block(blockcount: usize, inner: Arc<AlgebraInstance>) -> Result<Arc<Self>> {
        if blockcount == 0 {
            return Err(FlagFactError::Invalid("blockcount must be positive".into()));
        }
        let tol = inner.tol;
        Ok(Arc::new(Self {
            kind: AlgebraKind::Block { blockcount, inner },
            tol,
        }))
    }

    pub fn with_tolerances(self: &Arc<Self>, tol: ToleranceConfig) -> Result<Arc<Self>> {
        tol.validate()?;
        Ok(Arc::new(Self {
            kind: self.kind.clone(),
            tol,
        }))
    }

    /// Dimension of a single flattened matrix.
    pub fn flat_dim(&self) -> usize {
        match &self.kind {
            AlgebraKind::DenseStandard { dim } => *dim,
            AlgebraKind::DenseIndefinite { dim, .. } => *dim,
            AlgebraKind::Loop { matdim, .. } => *matdim,
            AlgebraKind::Block { blockcount, inner } => blockcount * inner.flat_dim(),
        }
    }

    /// Grid size when the flattened representation is a loop, else None.
    pub fn loop_gridsize(&self) -> Option<usize> {
        match &self.kind {
            AlgebraKind::Loop { gridsize, .. } => Some(*gridsize),
            AlgebraKind::Block { inner, .. } => inner.loop_gridsize(),
            _ => None,
        }
    }

    pub fn flat_involution(&self) -> FlatInvolution {
        match &self.kind {
            AlgebraKind::DenseStandard { .. } | AlgebraKind::Loop { .. } => {
                FlatInvolution::Standard
            }
            AlgebraKind::DenseIndefinite { signature, .. } => {
                FlatInvolution::Signature(signature.iter().map(|s| *s as f64).collect())
            }
            AlgebraKind::Block { blockcount, inner } => match inner.flat_involution() {
                FlatInvolution::Standard => FlatInvolution::Standard,
                FlatInvolution::Signature(j) => {
                    let mut tiled = Vec::with_capacity(j.len() * blockcount);
                    for _ in 0..*blockcount {
                        tiled.extend_from_slice(&j);
                    }
                    FlatInvolution::Signature(tiled)
                }
            },
        }
    }

    /// Whether self-adjoint elements provably have real spectrum by the
    /// structure of the instance (used to gate canonicalization; the
    /// sampling-based witness test is the empirical counterpart).
    pub fn hermitian_by_construction(&self) -> bool {
        match &self.kind {
            AlgebraKind::DenseStandard { .. } | AlgebraKind::Loop { .. } => true,
            AlgebraKind::DenseIndefinite { signature, .. } => {
                signature.iter().all(|s| *s == 1) || signature.iter().all(|s| *s == -1)
            }
            AlgebraKind::Block { inner, .. } => inner.hermitian_by_construction(),
        }
    }

    pub fn one(self: &Arc<Self>) -> Element {
        let n = self.flat_dim();
        let data = match self.loop_gridsize() {
            None => FlatData::Dense(dense::identity(n)),
            Some(m) => FlatData::Loop(vec![dense::identity(n); m]),
        };
        Element {
            instance: self.clone(),
            data,
        }
    }

    pub fn zero(self: &Arc<Self>) -> Element {
        let n = self.flat_dim();
        let data = match self.loop_gridsize() {
            None => FlatData::Dense(dense::zeros(n)),
            Some(m) => FlatData::Loop(vec![dense::zeros(n); m]),
        };
        Element {
            instance: self.clone(),
            data,
        }
    }

    /// z times the unit.
    pub fn scalar(self: &Arc<Self>, z: Complex64) -> Element {
        self.one().scale(z)
    }
}

/// Flattened element payload.
#[derive(Debug, Clone)]
pub enum FlatData {
    Dense(CMat),
    Loop(Vec<CMat>),
}

/// A member of a concrete algebra instance.
#[derive(Debug, Clone)]
pub struct Element {
    instance: Arc<AlgebraInstance>,
    data: FlatData,
}

/// Approximate spectrum: eigenvalues for dense-flattened instances,
/// union of pointwise eigenvalues for loop-flattened ones.
#[derive(Debug, Clone)]
pub struct SpectrumApprox {
    pub points: Vec<Complex64>,
    pub method: SpectrumMethod,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumMethod {
    Eigenvalues,
    PointwiseUnion,
}

impl SpectrumApprox {
    /// Largest imaginary part in absolute value.
    pub fn max_imag(&self) -> f64 {
        self.points.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    /// Distance from the given value to the spectrum.
    pub fn distance_to(&self, z: Complex64) -> f64 {
        self.points
            .iter()
            .fold(f64::INFINITY, |m, p| m.min((p - z).norm()))
    }

    /// Smallest real part.
    pub fn min_real(&self) -> f64 {
        self.points.iter().fold(f64::INFINITY, |m, z| m.min(z.re))
    }
}

fn check_same(a: &Element, b: &Element) -> Result<()> {
    if a.instance.as_ref() == b.instance.as_ref() {
        Ok(())
    } else {
        Err(FlagFactError::InstanceMismatch)
    }
}

impl Element {
    pub fn instance(&self) -> &Arc<AlgebraInstance> {
        &self.instance
    }

    pub fn data(&self) -> &FlatData {
        &self.data
    }

    pub fn tol(&self) -> &ToleranceConfig {
        &self.instance.tol
    }

    /// Build a dense (or dense-flattened block) element from its matrix.
    pub fn from_matrix(instance: &Arc<AlgebraInstance>, m: CMat) -> Result<Self> {
        let n = instance.flat_dim();
        if instance.loop_gridsize().is_some() {
            return Err(FlagFactError::Shape(
                "instance flattens to a loop; use from_samples".into(),
            ));
        }
        if m.nrows() != n || m.ncols() != n {
            return Err(FlagFactError::Shape(format!(
                "expected {n}x{n} matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if !dense::all_finite(&m) {
            return Err(FlagFactError::Invalid("matrix has non-finite entries".into()));
        }
        Ok(Self {
            instance: instance.clone(),
            data: FlatData::Dense(m),
        })
    }

    /// Build a loop-flattened element from its grid samples.
    pub fn from_samples(instance: &Arc<AlgebraInstance>, samples: Vec<CMat>) -> Result<Self> {
        let n = instance.flat_dim();
        let m = instance.loop_gridsize().ok_or_else(|| {
            FlagFactError::Shape("instance does not flatten to a loop".into())
        })?;
        if samples.len() != m {
            return Err(FlagFactError::Shape(format!(
                "expected {m} samples, got {}",
                samples.len()
            )));
        }
        for s in &samples {
            if s.nrows() != n || s.ncols() != n {
                return Err(FlagFactError::Shape(format!(
                    "expected {n}x{n} samples, got {}x{}",
                    s.nrows(),
                    s.ncols()
                )));
            }
            if !dense::all_finite(s) {
                return Err(FlagFactError::Invalid(
                    "sample has non-finite entries".into(),
                ));
            }
        }
        Ok(Self {
            instance: instance.clone(),
            data: FlatData::Loop(samples),
        })
    }

    /// Loop element from a function of (sample index, angle).
    pub fn loop_from_fn(
        instance: &Arc<AlgebraInstance>,
        f: impl Fn(usize, f64) -> CMat,
    ) -> Result<Self> {
        let m = instance
            .loop_gridsize()
            .ok_or_else(|| FlagFactError::Shape("not a loop instance".into()))?;
        let samples = (0..m)
            .map(|j| f(j, 2.0 * std::f64::consts::PI * j as f64 / m as f64))
            .collect();
        Self::from_samples(instance, samples)
    }

    /// Assemble a block-instance element from a square grid of inner elements.
    pub fn from_blocks(instance: &Arc<AlgebraInstance>, blocks: &[Vec<Element>]) -> Result<Self> {
        let AlgebraKind::Block { blockcount, inner } = &instance.kind else {
            return Err(FlagFactError::Shape("not a block instance".into()));
        };
        let nb = *blockcount;
        if blocks.len() != nb || blocks.iter().any(|row| row.len() != nb) {
            return Err(FlagFactError::Shape(format!(
                "expected {nb}x{nb} block grid"
            )));
        }
        for row in blocks {
            for b in row {
                if b.instance.as_ref() != inner.as_ref() {
                    return Err(FlagFactError::InstanceMismatch);
                }
            }
        }
        let d = inner.flat_dim();
        let total = nb * d;
        let data = match instance.loop_gridsize() {
            None => {
                let mut m = dense::zeros(total);
                for (i, row) in blocks.iter().enumerate() {
                    for (j, b) in row.iter().enumerate() {
                        let FlatData::Dense(bm) = &b.data else {
                            unreachable!()
                        };
                        m.view_mut((i * d, j * d), (d, d)).copy_from(bm);
                    }
                }
                FlatData::Dense(m)
            }
            Some(grid) => {
                let mut samples = vec![dense::zeros(total); grid];
                for (i, row) in blocks.iter().enumerate() {
                    for (j, b) in row.iter().enumerate() {
                        let FlatData::Loop(bs) = &b.data else {
                            unreachable!()
                        };
                        for (t, s) in bs.iter().enumerate() {
                            samples[t].view_mut((i * d, j * d), (d, d)).copy_from(s);
                        }
                    }
                }
                FlatData::Loop(samples)
            }
        };
        Ok(Self {
            instance: instance.clone(),
            data,
        })
    }

    /// Extract block (i, j) of a block-instance element.
    pub fn block(&self, i: usize, j: usize) -> Result<Element> {
        let AlgebraKind::Block { blockcount, inner } = &self.instance.kind else {
            return Err(FlagFactError::Shape("not a block instance".into()));
        };
        if i >= *blockcount || j >= *blockcount {
            return Err(FlagFactError::Shape("block index out of range".into()));
        }
        let d = inner.flat_dim();
        let data = match &self.data {
            FlatData::Dense(m) => FlatData::Dense(m.view((i * d, j * d), (d, d)).into_owned()),
            FlatData::Loop(samples) => FlatData::Loop(
                samples
                    .iter()
                    .map(|s| s.view((i * d, j * d), (d, d)).into_owned())
                    .collect(),
            ),
        };
        Ok(Element {
            instance: inner.clone(),
            data,
        })
    }

    fn map2(&self, other: &Element, f: impl Fn(&CMat, &CMat) -> CMat) -> Result<Element> {
        check_same(self, other)?;
        let data = match (&self.data, &other.data) {
            (FlatData::Dense(a), FlatData::Dense(b)) => FlatData::Dense(f(a, b)),
            (FlatData::Loop(a), FlatData::Loop(b)) => {
                FlatData::Loop(a.iter().zip(b.iter()).map(|(x, y)| f(x, y)).collect())
            }
            _ => return Err(FlagFactError::InstanceMismatch),
        };
        Ok(Element {
            instance: self.instance.clone(),
            data,
        })
    }

    fn map1(&self, f: impl Fn(&CMat) -> CMat) -> Element {
        let data = match &self.data {
            FlatData::Dense(a) => FlatData::Dense(f(a)),
            FlatData::Loop(a) => FlatData::Loop(a.iter().map(f).collect()),
        };
        Element {
            instance: self.instance.clone(),
            data,
        }
    }

    pub fn add(&self, other: &Element) -> Result<Element> {
        self.map2(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        self.map2(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Element) -> Result<Element> {
        self.map2(other, |a, b| a * b)
    }

    pub fn scale(&self, z: Complex64) -> Element {
        self.map1(|a| a.map(|w| w * z))
    }

    pub fn neg(&self) -> Element {
        self.scale(Complex64::new(-1.0, 0.0))
    }

    /// Involution of the parent instance.
    pub fn adjoint(&self) -> Element {
        match self.instance.flat_involution() {
            FlatInvolution::Standard => self.map1(|a| a.adjoint()),
            FlatInvolution::Signature(j) => self.map1(|a| {
                let mut m = a.adjoint();
                for r in 0..m.nrows() {
                    for c in 0..m.ncols() {
                        m[(r, c)] *= dense::cr(j[r] * j[c]);
                    }
                }
                m
            }),
        }
    }

    /// Frobenius norm; for loop-flattened elements the maximum over samples.
    pub fn norm(&self) -> f64 {
        match &self.data {
            FlatData::Dense(a) => a.norm(),
            FlatData::Loop(a) => a.iter().fold(0.0, |m, s| m.max(s.norm())),
        }
    }

    pub fn dist(&self, other: &Element) -> Result<f64> {
        Ok(self.sub(other)?.norm())
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.norm() <= tol
    }

    /// Relative closeness test against another element, scaled by
    /// max(1, norms).
    pub fn approx_eq(&self, other: &Element, rel: f64) -> Result<bool> {
        let d = self.dist(other)?;
        Ok(d <= rel * self.norm().max(other.norm()).max(1.0))
    }

    pub fn is_self_adjoint(&self) -> bool {
        let adj = self.adjoint();
        let d = self.sub(&adj).map(|e| e.norm()).unwrap_or(f64::INFINITY);
        d <= self.tol().rel_residual * self.norm().max(1.0)
    }

    /// Smallest/largest singular value over the flattened representation,
    /// plus the worst grid sample when applicable.
    pub fn sv_extremes(&self) -> (f64, f64, Option<usize>) {
        match &self.data {
            FlatData::Dense(a) => {
                let (lo, hi) = dense::sv_extremes(a);
                (lo, hi, None)
            }
            FlatData::Loop(samples) => {
                let mut lo = f64::INFINITY;
                let mut hi: f64 = 0.0;
                let mut worst = 0usize;
                for (idx, s) in samples.iter().enumerate() {
                    let (l, h) = dense::sv_extremes(s);
                    if l < lo {
                        lo = l;
                        worst = idx;
                    }
                    hi = hi.max(h);
                }
                (lo, hi, Some(worst))
            }
        }
    }

    /// Inverse, guarded by the relative smallest-singular-value threshold.
    pub fn invert(&self) -> Result<Element> {
        let (lo, hi, worst) = self.sv_extremes();
        if !(lo > self.tol().inv_threshold * hi.max(1e-300)) {
            return Err(FlagFactError::NotInvertible {
                sigma_min: lo,
                grid_index: worst,
            });
        }
        let data = match &self.data {
            FlatData::Dense(a) => FlatData::Dense(dense::inverse(a).ok_or_else(|| {
                FlagFactError::NotInvertible {
                    sigma_min: lo,
                    grid_index: None,
                }
            })?),
            FlatData::Loop(samples) => {
                let mut out = Vec::with_capacity(samples.len());
                for (idx, s) in samples.iter().enumerate() {
                    out.push(dense::inverse(s).ok_or(FlagFactError::NotInvertible {
                        sigma_min: lo,
                        grid_index: Some(idx),
                    })?);
                }
                FlatData::Loop(out)
            }
        };
        Ok(Element {
            instance: self.instance.clone(),
            data,
        })
    }

    pub fn is_invertible(&self) -> bool {
        let (lo, hi, _) = self.sv_extremes();
        lo > self.tol().inv_threshold * hi.max(1e-300)
    }

    /// Approximate spectrum.
    pub fn spectrum(&self) -> Result<SpectrumApprox> {
        let margin = self.tol().spec_margin;
        match &self.data {
            FlatData::Dense(a) => {
                let mut points = dense::eigenvalues(a)
                    .ok_or_else(|| FlagFactError::Numerical("eigenvalue iteration failed".into()))?;
                dense::dedup_points(&mut points, margin * a.norm().max(1.0) * 1e-3);
                Ok(SpectrumApprox {
                    points,
                    method: SpectrumMethod::Eigenvalues,
                })
            }
            FlatData::Loop(samples) => {
                let mut points = Vec::new();
                for s in samples {
                    points.extend(dense::eigenvalues(s).ok_or_else(|| {
                        FlagFactError::Numerical("eigenvalue iteration failed".into())
                    })?);
                }
                let scale = self.norm().max(1.0);
                dense::dedup_points(&mut points, margin * scale * 1e-3);
                Ok(SpectrumApprox {
                    points,
                    method: SpectrumMethod::PointwiseUnion,
                })
            }
        }
    }

    /// Matrix exponential (pointwise for loop-flattened elements).
    pub fn exp(&self) -> Element {
        self.map1(dense::expm)
    }

    /// Fraction of Fourier energy in the trailing band |f| > m/4,
    /// maximized over nothing: a single global ratio per element.
    /// Only meaningful for loop-flattened elements.
    pub fn trailing_band_fraction(&self) -> Option<f64> {
        let FlatData::Loop(samples) = &self.data else {
            return None;
        };
        let m = samples.len();
        let n = samples[0].nrows();
        let mut planner = FftPlanner::<f64>::new();
        let fft = planner.plan_fft_forward(m);
        let mut total = 0.0f64;
        let mut trailing = 0.0f64;
        let cut = m / 4;
        for i in 0..n {
            for j in 0..n {
                let mut buf: Vec<Complex64> = samples.iter().map(|s| s[(i, j)]).collect();
                fft.process(&mut buf);
                for (t, coeff) in buf.iter().enumerate() {
                    let f_signed = if t <= m / 2 { t as i64 } else { t as i64 - m as i64 };
                    let e = coeff.norm_sqr();
                    total += e;
                    if f_signed.unsigned_abs() as usize > cut {
                        trailing += e;
                    }
                }
            }
        }
        if total <= 0.0 {
            Some(0.0)
        } else {
            Some(trailing / total)
        }
    }
}

// ---------------------------------------------------------------------------
// Corner (compressed) algebra operations
// ---------------------------------------------------------------------------

/// Check p x p = x within tolerance.
pub fn corner_check(x: &Element, p: &Element) -> Result<()> {
    check_same(x, p)?;
    let pxp = p.mul(x)?.mul(p)?;
    let residual = pxp.sub(x)?.norm();
    if residual <= x.tol().rel_residual * x.norm().max(1.0) {
        Ok(())
    } else {
        Err(FlagFactError::NotInCorner { residual })
    }
}

/// Inclusion of the corner into the ambient algebra (identity on elements).
pub fn corner_embed_iota0(x: &Element, p: &Element) -> Result<Element> {
    corner_check(x, p)?;
    Ok(x.clone())
}

/// Monoid embedding x -> x + (1 - p).
pub fn corner_embed_iota1(x: &Element, p: &Element) -> Result<Element> {
    corner_check(x, p)?;
    let one = x.instance().one();
    x.add(&one.sub(p)?)
}

/// Smallest/largest singular value of the corner compression of x,
/// measured in an orthonormal basis of Ran(p). Returns the worst grid
/// sample index for loop-flattened elements.
pub fn corner_sv(x: &Element, p: &Element) -> Result<(f64, f64, Option<usize>)> {
    check_same(x, p)?;
    fn one_sample(xm: &CMat, pm: &CMat) -> (f64, f64) {
        let rank = dense::idempotent_rank(pm);
        if rank == 0 {
            return (1.0, 1.0); // zero corner: trivially invertible
        }
        let u = dense::range_basis(pm, rank);
        let compressed = u.adjoint() * xm * &u;
        dense::sv_extremes(&compressed)
    }
    match (x.data(), p.data()) {
        (FlatData::Dense(xm), FlatData::Dense(pm)) => {
            let (lo, hi) = one_sample(xm, pm);
            Ok((lo, hi, None))
        }
        (FlatData::Loop(xs), FlatData::Loop(ps)) => {
            let mut lo = f64::INFINITY;
            let mut hi: f64 = 0.0;
            let mut worst = 0usize;
            for (idx, (xm, pm)) in xs.iter().zip(ps.iter()).enumerate() {
                let (l, h) = one_sample(xm, pm);
                if l < lo {
                    lo = l;
                    worst = idx;
                }
                hi = hi.max(h);
            }
            Ok((lo, hi, Some(worst)))
        }
        _ => Err(FlagFactError::InstanceMismatch),
    }
}

/// Inverse of x inside the corner algebra pAp (unit p), via the exact
/// ambient identity (x + a(1-p))^{-1} - a^{-1}(1-p).
pub fn corner_inverse(x: &Element, p: &Element) -> Result<Element> {
    check_same(x, p)?;
    let (lo, hi, worst) = corner_sv(x, p)?;
    if !(lo > x.tol().inv_threshold * hi.max(1e-300)) {
        return Err(FlagFactError::NotInvertible {
            sigma_min: lo,
            grid_index: worst,
        });
    }
    let alpha = x.norm().max(1.0);
    let one = x.instance().one();
    let complement = one.sub(p)?;
    let shifted = x.add(&complement.scale(dense::cr(alpha)))?;
    let inv = shifted.invert()?;
    inv.sub(&complement.scale(dense::cr(1.0 / alpha)))
}

/// Spectrum of x relative to the corner algebra pAp.
///
/// Computed from the ambient spectrum of iota1(x) by removing the forced
/// point 1 and re-adding it exactly when x - p is singular in the corner.
/// For p = 1 the corner is the whole algebra and this is just spectrum(x).
pub fn corner_spectrum(x: &Element, p: &Element) -> Result<SpectrumApprox> {
    check_same(x, p)?;
    let one = x.instance().one();
    let tol = x.tol();
    if p.dist(&one)? <= tol.rel_residual * one.norm() {
        corner_check(x, p)?;
        return x.spectrum();
    }
    let emb = corner_embed_iota1(x, p)?;
    let mut spec = emb.spectrum()?;
    let unit_tol = tol.spec_margin * emb.norm().max(1.0);
    spec.points
        .retain(|z| (z - Complex64::new(1.0, 0.0)).norm() > unit_tol);
    // is x - p singular inside the corner?
    let shifted = x.sub(p)?;
    let (lo, hi, _) = corner_sv(&shifted, p)?;
    if !(lo > tol.inv_threshold * hi.max(1.0)) {
        spec.points.push(Complex64::new(1.0, 0.0));
    }
    Ok(spec)
}

// ---------------------------------------------------------------------------
// Hermitian witness sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum WitnessViolation {
    /// A self-adjoint sample with spectrum off the real axis.
    ImaginarySpectrum { trial: usize, max_imag: f64 },
    /// A self-adjoint sample whose square has -1 in its spectrum.
    MinusOneInSquare { trial: usize, distance: f64 },
}

#[derive(Debug, Clone)]
pub struct HermitianWitnessReport {
    pub trials: usize,
    pub violations: Vec<WitnessViolation>,
    /// First violating element, kept for inspection.
    pub witness: Option<Element>,
}

impl HermitianWitnessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sample random self-adjoint elements and test the two spectral
/// criteria for being hermitian: real spectrum, and -1 never in the
/// spectrum of a square.
pub fn hermitian_witness(
    instance: &Arc<AlgebraInstance>,
    trials: usize,
    seed: u64,
) -> Result<HermitianWitnessReport> {
    if trials == 0 {
        return Err(FlagFactError::Invalid("trials must be >= 1".into()));
    }
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let mut witness = None;
    for trial in 0..trials {
        let x = crate::sample::random_element(instance, &mut rng);
        let sym = x.add(&x.adjoint())?.scale(dense::cr(0.5));
        let skew = x.sub(&x.adjoint())?.scale(dense::I);
        for a in [sym, skew] {
            let margin = a.tol().spec_margin * a.norm().max(1.0);
            let spec = a.spectrum()?;
            if spec.max_imag() > margin {
                if witness.is_none() {
                    witness = Some(a.clone());
                }
                violations.push(WitnessViolation::ImaginarySpectrum {
                    trial,
                    max_imag: spec.max_imag(),
                });
                continue;
            }
            let sq = a.mul(&a)?;
            let sq_spec = sq.spectrum()?;
            let d = sq_spec.distance_to(Complex64::new(-1.0, 0.0));
            if d <= a.tol().spec_margin * sq.norm().max(1.0) {
                if witness.is_none() {
                    witness = Some(a.clone());
                }
                violations.push(WitnessViolation::MinusOneInSquare { trial, distance: d });
            }
        }
    }
    Ok(HermitianWitnessReport {
        trials,
        violations,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::{c, cr, I};

    fn m2() -> Arc<AlgebraInstance> {
        AlgebraInstance::dense_standard(2).unwrap()
    }

    fn m2_indef() -> Arc<AlgebraInstance> {
        AlgebraInstance::dense_indefinite(2, vec![1, -1]).unwrap()
    }

    fn elem(inst: &Arc<AlgebraInstance>, rows: &[f64]) -> Element {
        let n = inst.flat_dim();
        Element::from_matrix(inst, CMat::from_fn(n, n, |i, j| cr(rows[i * n + j]))).unwrap()
    }

    #[test]
    fn unit_is_self_adjoint() {
        for inst in [m2(), m2_indef()] {
            let one = inst.one();
            assert!(one.is_self_adjoint());
            assert!(one.adjoint().approx_eq(&one, 1e-15).unwrap());
        }
    }

    #[test]
    fn indefinite_adjoint_matches_hand_computation() {
        // J = diag(1,-1), x = [[0,1],[-1,0]]: J x^H J = x
        let inst = m2_indef();
        let x = elem(&inst, &[0.0, 1.0, -1.0, 0.0]);
        assert!(x.adjoint().approx_eq(&x, 1e-14).unwrap());
        assert!(x.is_self_adjoint());
        // and in the standard instance the same matrix is skew-adjoint
        let std_inst = m2();
        let y = elem(&std_inst, &[0.0, 1.0, -1.0, 0.0]);
        assert!(y.adjoint().approx_eq(&y.neg(), 1e-14).unwrap());
    }

    #[test]
    fn loop_adjoint_is_pointwise_conjugate_transpose() {
        let inst = AlgebraInstance::loop_algebra(2, 8).unwrap();
        let x = Element::loop_from_fn(&inst, |_, th| {
            CMat::from_fn(2, 2, |i, j| {
                if i == 0 && j == 0 {
                    Complex64::from_polar(1.0, th)
                } else if i == j {
                    cr(1.0)
                } else {
                    cr(0.0)
                }
            })
        })
        .unwrap();
        let adj = x.adjoint();
        let expected = Element::loop_from_fn(&inst, |_, th| {
            CMat::from_fn(2, 2, |i, j| {
                if i == 0 && j == 0 {
                    Complex64::from_polar(1.0, -th)
                } else if i == j {
                    cr(1.0)
                } else {
                    cr(0.0)
                }
            })
        })
        .unwrap();
        assert!(adj.approx_eq(&expected, 1e-14).unwrap());
    }

    #[test]
    fn invert_unit_and_hand_inverse() {
        let inst = m2();
        assert!(inst.one().invert().unwrap().approx_eq(&inst.one(), 1e-14).unwrap());
        let x = elem(&inst, &[2.0, 1.0, 1.0, 1.0]);
        let expected = elem(&inst, &[1.0, -1.0, -1.0, 2.0]);
        let inv = x.invert().unwrap();
        assert!(inv.approx_eq(&expected, 1e-12).unwrap());
        // oracle: multiply back to the unit
        assert!(x.mul(&inv).unwrap().approx_eq(&inst.one(), 1e-12).unwrap());
        assert!(inv.mul(&x).unwrap().approx_eq(&inst.one(), 1e-12).unwrap());
    }

    #[test]
    fn loop_inversion_pointwise_and_failure_at_zero_sample() {
        let inst = AlgebraInstance::loop_algebra(1, 16).unwrap();
        let x = Element::loop_from_fn(&inst, |_, th| {
            CMat::from_fn(1, 1, |_, _| Complex64::from_polar(1.0, th))
        })
        .unwrap();
        let inv = x.invert().unwrap();
        let expected = Element::loop_from_fn(&inst, |_, th| {
            CMat::from_fn(1, 1, |_, _| Complex64::from_polar(1.0, -th))
        })
        .unwrap();
        assert!(inv.approx_eq(&expected, 1e-14).unwrap());

        // e^{i theta} - 1 vanishes at theta = 0 (grid sample 0)
        let y = Element::loop_from_fn(&inst, |_, th| {
            CMat::from_fn(1, 1, |_, _| Complex64::from_polar(1.0, th) - cr(1.0))
        })
        .unwrap();
        match y.invert() {
            Err(FlagFactError::NotInvertible { grid_index, .. }) => {
                assert_eq!(grid_index, Some(0));
            }
            other => panic!("expected NotInvertible, got {other:?}"),
        }
    }

    #[test]
    fn spectrum_examples() {
        let inst = m2();
        let one_spec = inst.one().spectrum().unwrap();
        assert_eq!(one_spec.points.len(), 1);
        assert!((one_spec.points[0] - cr(1.0)).norm() < 1e-12);

        // the non-hermitian witness: self-adjoint in the indefinite instance
        // with spectrum {i, -i}
        let ind = m2_indef();
        let a = elem(&ind, &[0.0, 1.0, -1.0, 0.0]);
        assert!(a.is_self_adjoint());
        let spec = a.spectrum().unwrap();
        assert_eq!(spec.points.len(), 2);
        assert!(spec.points.iter().any(|z| (z - I).norm() < 1e-12));
        assert!(spec.points.iter().any(|z| (z + I).norm() < 1e-12));

        // loop k=1: spectrum of e^{i theta} approximates the unit circle
        let li = AlgebraInstance::loop_algebra(1, 32).unwrap();
        let x = Element::loop_from_fn(&li, |_, th| {
            CMat::from_fn(1, 1, |_, _| Complex64::from_polar(1.0, th))
        })
        .unwrap();
        let s = x.spectrum().unwrap();
        assert_eq!(s.method, SpectrumMethod::PointwiseUnion);
        assert_eq!(s.points.len(), 32);
        for z in &s.points {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn block_instance_flattening_roundtrip() {
        let inner = m2();
        let outer = AlgebraInstance::block(2, inner.clone()).unwrap();
        let a = elem(&inner, &[1.0, 2.0, 3.0, 4.0]);
        let b = elem(&inner, &[0.0, 1.0, -1.0, 0.0]);
        let zero = inner.zero();
        let one = inner.one();
        let g = Element::from_blocks(&outer, &[vec![one.clone(), a.clone()], vec![zero.clone(), b.clone()]])
            .unwrap();
        assert!(g.block(0, 1).unwrap().approx_eq(&a, 1e-15).unwrap());
        assert!(g.block(1, 1).unwrap().approx_eq(&b, 1e-15).unwrap());
        // blockwise adjoint + block transpose
        let gadj = g.adjoint();
        assert!(gadj
            .block(1, 0)
            .unwrap()
            .approx_eq(&a.adjoint(), 1e-15)
            .unwrap());
    }

    #[test]
    fn block_over_indefinite_adjoint() {
        let inner = m2_indef();
        let outer = AlgebraInstance::block(2, inner.clone()).unwrap();
        let a = elem(&inner, &[1.0, 2.0, 3.0, 4.0]);
        let g = Element::from_blocks(
            &outer,
            &[
                vec![inner.zero(), a.clone()],
                vec![inner.zero(), inner.zero()],
            ],
        )
        .unwrap();
        let gadj = g.adjoint();
        assert!(gadj
            .block(1, 0)
            .unwrap()
            .approx_eq(&a.adjoint(), 1e-15)
            .unwrap());
        assert!(gadj.block(0, 1).unwrap().is_zero(1e-15));
    }

    #[test]
    fn corner_examples_rank_one() {
        let inst = m2();
        let p = elem(&inst, &[1.0, 0.0, 0.0, 0.0]);
        // x = p: corner spectrum {1}, sigma(iota0) = {0, 1}
        let cs = corner_spectrum(&p, &p).unwrap();
        assert_eq!(cs.points.len(), 1);
        assert!((cs.points[0] - cr(1.0)).norm() < 1e-10);
        let amb = corner_embed_iota0(&p, &p).unwrap().spectrum().unwrap();
        let expect = vec![cr(0.0), cr(1.0)];
        assert!(dense::hausdorff(&amb.points, &expect) < 1e-10);

        // x = 2p: corner {2}, sigma(iota1) = {2, 1}
        let x = p.scale(cr(2.0));
        let cs2 = corner_spectrum(&x, &p).unwrap();
        assert_eq!(cs2.points.len(), 1);
        assert!((cs2.points[0] - cr(2.0)).norm() < 1e-10);
        let emb = corner_embed_iota1(&x, &p).unwrap().spectrum().unwrap();
        let expect2 = vec![cr(1.0), cr(2.0)];
        assert!(dense::hausdorff(&emb.points, &expect2) < 1e-10);
    }

    #[test]
    fn corner_full_projection_is_whole_algebra() {
        let inst = m2();
        let one = inst.one();
        let x = elem(&inst, &[3.0, 1.0, 0.0, 5.0]);
        let cs = corner_spectrum(&x, &one).unwrap();
        let s = x.spectrum().unwrap();
        assert!(dense::hausdorff(&cs.points, &s.points) < 1e-12);
    }

    #[test]
    fn corner_rejects_outside_elements() {
        let inst = m2();
        let p = elem(&inst, &[1.0, 0.0, 0.0, 0.0]);
        let x = elem(&inst, &[0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            corner_embed_iota0(&x, &p),
            Err(FlagFactError::NotInCorner { .. })
        ));
    }

    #[test]
    fn corner_inverse_solves_in_corner() {
        let inst = AlgebraInstance::dense_standard(3).unwrap();
        let p = elem(&inst, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let x = elem(&inst, &[2.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let y = corner_inverse(&x, &p).unwrap();
        let xy = x.mul(&y).unwrap();
        assert!(xy.approx_eq(&p, 1e-12).unwrap());
        let yx = y.mul(&x).unwrap();
        assert!(yx.approx_eq(&p, 1e-12).unwrap());
        // and the inverse stays inside the corner
        corner_check(&y, &p).unwrap();
    }

    #[test]
    fn hermitian_witness_standard_passes_indefinite_fails() {
        let std_report = hermitian_witness(&m2(), 12, 42).unwrap();
        assert!(std_report.passed());

        let ind_report = hermitian_witness(&m2_indef(), 12, 42).unwrap();
        assert!(!ind_report.passed());

        let loop_inst = AlgebraInstance::loop_algebra(2, 16).unwrap();
        let loop_report = hermitian_witness(&loop_inst, 6, 7).unwrap();
        assert!(loop_report.passed());
    }

    #[test]
    fn trailing_band_fraction_of_bandlimited_data() {
        let inst = AlgebraInstance::loop_algebra(1, 64).unwrap();
        let x = Element::loop_from_fn(&inst, |_, th| {
            CMat::from_fn(1, 1, |_, _| {
                cr(3.0) + Complex64::from_polar(0.5, th) + Complex64::from_polar(0.25, -2.0 * th)
            })
        })
        .unwrap();
        let frac = x.trailing_band_fraction().unwrap();
        assert!(frac < 1e-20, "band-limited data has no trailing energy, got {frac}");
        let sq = x.mul(&x).unwrap();
        assert!(sq.trailing_band_fraction().unwrap() < 1e-20);
        let inv = x.invert().unwrap();
        assert!(inv.trailing_band_fraction().unwrap() < inst.tol.loop_smoothness);
    }

    #[test]
    fn instance_mismatch_detected() {
        let a = m2().one();
        let b = AlgebraInstance::dense_standard(3).unwrap().one();
        assert!(matches!(a.add(&b), Err(FlagFactError::InstanceMismatch)));
        let c1 = m2_indef().one();
        assert!(matches!(a.mul(&c1), Err(FlagFactError::InstanceMismatch)));
    }

    #[test]
    fn scalar_and_finite_guards() {
        let inst = m2();
        let z = inst.scalar(c(0.0, 2.0));
        assert!((z.norm() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let bad = CMat::from_fn(2, 2, |_, _| c(f64::NAN, 0.0));
        assert!(Element::from_matrix(&inst, bad).is_err());
    }
}
