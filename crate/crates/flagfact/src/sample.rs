//! Seeded random generation of elements and structured samples.
//!
//! Everything here is deterministic in the seed: fixed iteration order,
//! one ChaCha stream, no data-dependent draws except the documented
//! shift escalation for invertible samples.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AlgebraInstance, Element};
use crate::dense::{cr, CMat, I};
use crate::error::Result;
use crate::flags::{Flag, Idempotent};

pub type SampleRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex normal: re, im independent N(0, 1/2).
pub fn random_complex(rng: &mut SampleRng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) / 2f64.sqrt()
}

fn random_matrix(n: usize, rng: &mut SampleRng) -> CMat {
    CMat::from_fn(n, n, |_, _| random_complex(rng))
}

/// Random element of the instance. Dense-flattened instances get i.i.d.
/// complex normal entries; loop-flattened ones are synthesized from
/// band-limited Fourier data (|f| <= max(1, m/16), geometrically decaying)
/// so that the smoothness diagnostic stays meaningful.
pub fn random_element(instance: &Arc<AlgebraInstance>, rng: &mut SampleRng) -> Element {
    let band = instance.loop_gridsize().map(|m| (m / 16).max(1)).unwrap_or(0);
    random_band_limited(instance, band, rng)
}

/// Random element with an explicit Fourier band limit for loop-flattened
/// instances. The band is ignored for dense-flattened ones.
pub fn random_band_limited(
    instance: &Arc<AlgebraInstance>,
    band: usize,
    rng: &mut SampleRng,
) -> Element {
    let n = instance.flat_dim();
    match instance.loop_gridsize() {
        None => Element::from_matrix(instance, random_matrix(n, rng)).expect("shape"),
        Some(m) => {
            let band = band.clamp(1, m / 2 - 1);
            // frequency coefficients per entry, f = -band..=band
            let mut coeffs = vec![vec![Complex64::default(); 2 * band + 1]; n * n];
            for entry in coeffs.iter_mut() {
                for (fi, slot) in entry.iter_mut().enumerate() {
                    let f = fi as i64 - band as i64;
                    let scale = 0.5f64.powi(f.unsigned_abs() as i32);
                    *slot = random_complex(rng) * cr(scale);
                }
            }
            let samples = (0..m)
                .map(|t| {
                    let theta = 2.0 * std::f64::consts::PI * t as f64 / m as f64;
                    CMat::from_fn(n, n, |i, j| {
                        let entry = &coeffs[i * n + j];
                        let mut acc = Complex64::default();
                        for (fi, c0) in entry.iter().enumerate() {
                            let f = fi as i64 - band as i64;
                            acc += c0 * Complex64::from_polar(1.0, f as f64 * theta);
                        }
                        acc
                    })
                })
                .collect();
            Element::from_samples(instance, samples).expect("shape")
        }
    }
}

/// (x + x^*)/2 for a random x.
pub fn random_self_adjoint(instance: &Arc<AlgebraInstance>, rng: &mut SampleRng) -> Element {
    let x = random_element(instance, rng);
    x.add(&x.adjoint()).expect("same instance").scale(cr(0.5))
}

/// Random invertible element: x + shift * 1 with the shift escalated until
/// the relative smallest singular value clears 10x the inversion threshold.
pub fn random_invertible(instance: &Arc<AlgebraInstance>, rng: &mut SampleRng) -> Element {
    let x = random_element(instance, rng);
    let one = instance.one();
    let step = x.norm().max(1.0) / (instance.flat_dim() as f64).sqrt();
    let mut shift = 0.0f64;
    loop {
        let candidate = if shift == 0.0 {
            x.clone()
        } else {
            x.add(&one.scale(cr(shift))).expect("same instance")
        };
        let (lo, hi, _) = candidate.sv_extremes();
        if lo > 10.0 * instance.tol.inv_threshold * hi.max(1.0) {
            return candidate;
        }
        shift = if shift == 0.0 { step } else { shift * 2.0 };
    }
}

/// Random unitary exp(i h) with h self-adjoint. Works uniformly across
/// involutions: for the indefinite instance this produces J-unitaries.
pub fn random_unitary(instance: &Arc<AlgebraInstance>, rng: &mut SampleRng) -> Element {
    let h = random_self_adjoint(instance, rng);
    let scaled = h.scale(cr(0.8 / h.norm().max(1.0)));
    scaled.scale(I).exp()
}

/// Self-adjoint idempotent of the given flat rank: a coordinate projection
/// conjugated by a random unitary of the instance.
pub fn random_selfadjoint_projection(
    instance: &Arc<AlgebraInstance>,
    rank: usize,
    rng: &mut SampleRng,
) -> Result<Idempotent> {
    let u = random_unitary(instance, rng);
    let uinv = u.invert()?;
    let e = coordinate_projection(instance, rank);
    Idempotent::new(u.mul(&e)?.mul(&uinv)?)
}

/// Oblique (generally non-self-adjoint) idempotent v e v^{-1}.
pub fn random_oblique_idempotent(
    instance: &Arc<AlgebraInstance>,
    rank: usize,
    rng: &mut SampleRng,
) -> Result<Idempotent> {
    let v = random_invertible(instance, rng);
    let vinv = v.invert()?;
    let e = coordinate_projection(instance, rank);
    Idempotent::new(v.mul(&e)?.mul(&vinv)?)
}

/// Leading coordinate projection with the given number of flat unit slots.
pub fn coordinate_projection(instance: &Arc<AlgebraInstance>, ones: usize) -> Element {
    let n = instance.flat_dim();
    let mat = CMat::from_fn(n, n, |i, j| if i == j && i < ones { cr(1.0) } else { cr(0.0) });
    match instance.loop_gridsize() {
        None => Element::from_matrix(instance, mat).expect("shape"),
        Some(m) => Element::from_samples(instance, vec![mat; m]).expect("shape"),
    }
}

/// Standard flag at the given cuts, conjugated by one random unitary.
/// The chain stays self-adjoint and strictly increasing.
pub fn random_selfadjoint_flag(
    instance: &Arc<AlgebraInstance>,
    cuts: &[usize],
    rng: &mut SampleRng,
) -> Result<Flag> {
    let base = Flag::standard(instance, cuts)?;
    let u = random_unitary(instance, rng);
    let uinv = u.invert()?;
    let chain = base
        .chain()
        .iter()
        .map(|p| Idempotent::new(u.mul(p.element())?.mul(&uinv)?))
        .collect::<Result<Vec<_>>>()?;
    Flag::new(instance, chain)
}

/// Random element of the flag stabilizer: sum over j <= k of e_j x e_k.
pub fn random_triangular(flag: &Flag, rng: &mut SampleRng) -> Result<Element> {
    filtered_random(flag, rng, |j, k| j <= k)
}

/// Random block-diagonal element.
pub fn random_block_diagonal(flag: &Flag, rng: &mut SampleRng) -> Result<Element> {
    filtered_random(flag, rng, |j, k| j == k)
}

/// Unit upper-triangular sample: 1 + strictly upper part of a random element.
pub fn random_unipotent_upper(flag: &Flag, rng: &mut SampleRng) -> Result<Element> {
    let n = filtered_random(flag, rng, |j, k| j < k)?;
    flag.instance().one().add(&n)
}

/// Unit lower-triangular sample: 1 + strictly lower part of a random element.
pub fn random_unipotent_lower(flag: &Flag, rng: &mut SampleRng) -> Result<Element> {
    let n = filtered_random(flag, rng, |j, k| j > k)?;
    flag.instance().one().add(&n)
}

fn filtered_random(
    flag: &Flag,
    rng: &mut SampleRng,
    keep: impl Fn(usize, usize) -> bool,
) -> Result<Element> {
    let x = random_element(flag.instance(), rng);
    let diffs = flag.diffs()?;
    let mut acc = flag.instance().zero();
    for (j, ej) in diffs.iter().enumerate() {
        for (k, ek) in diffs.iter().enumerate() {
            if keep(j, k) {
                acc = acc.add(&ej.mul(&x)?.mul(ek)?)?;
            }
        }
    }
    Ok(acc)
}

/// Random positive invertible block-diagonal element for a self-adjoint
/// flag on an instance whose flattened involution is the standard one:
/// the truncation of w w^* + 1/2.
pub fn random_positive_block_diagonal(flag: &Flag, rng: &mut SampleRng) -> Result<Element> {
    let w = random_element(flag.instance(), rng);
    let spd = w
        .mul(&w.adjoint())?
        .add(&flag.instance().one().scale(cr(0.5)))?;
    crate::flags::diagonal_truncation(&spd, flag)
}

/// Random member of U_{1,1}: exp of a random J-skew element of the 2x2
/// block instance, J = diag(1, -1) blockwise.
pub fn random_u11(block2: &Arc<AlgebraInstance>, rng: &mut SampleRng) -> Result<Element> {
    let j = u11_signature(block2)?;
    let y = random_element(block2, rng);
    let y = y.scale(cr(0.6 / y.norm().max(1.0)));
    // x = (y - J y^* J)/2 satisfies x = -J x^* J
    let jyj = j.mul(&y.adjoint())?.mul(&j)?;
    let x = y.sub(&jyj)?.scale(cr(0.5));
    Ok(x.exp())
}

/// The block signature J = diag(1, -1) of a 2x2 block instance.
pub fn u11_signature(block2: &Arc<AlgebraInstance>) -> Result<Element> {
    use crate::algebra::AlgebraKind;
    let AlgebraKind::Block { blockcount, inner } = &block2.kind else {
        return Err(crate::error::FlagFactError::Shape(
            "expected a 2x2 block instance".into(),
        ));
    };
    if *blockcount != 2 {
        return Err(crate::error::FlagFactError::Shape(
            "expected a 2x2 block instance".into(),
        ));
    }
    let one = inner.one();
    let zero = inner.zero();
    Element::from_blocks(
        block2,
        &[
            vec![one.clone(), zero.clone()],
            vec![zero, one.neg()],
        ],
    )
}
