//! Idempotents, flags, diagonal truncation and the triangular /
//! block-diagonal / unipotent membership tests.

use std::sync::Arc;

use crate::algebra::{AlgebraInstance, AlgebraKind, Element};
use crate::dense::cr;
use crate::error::{FlagFactError, Result};

/// An idempotent element p = p^2, with a certificate recording whether
/// p = p^* also holds. Both regimes are used: factorizations require
/// self-adjoint flags, while group orbits produce oblique idempotents.
#[derive(Debug, Clone)]
pub struct Idempotent {
    element: Element,
    selfadjoint: bool,
}

impl Idempotent {
    pub fn new(element: Element) -> Result<Self> {
        let sq = element.mul(&element)?;
        let residual = sq.sub(&element)?.norm();
        let tol = element.tol().rel_residual * element.norm().powi(2).max(1.0);
        if residual > tol {
            return Err(FlagFactError::Invalid(format!(
                "not an idempotent: |p^2 - p| = {residual:.3e}"
            )));
        }
        let selfadjoint = element.is_self_adjoint();
        Ok(Self {
            element,
            selfadjoint,
        })
    }

    pub fn element(&self) -> &Element {
        &self.element
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    pub fn instance(&self) -> &Arc<AlgebraInstance> {
        self.element.instance()
    }
}

/// p <= q in the idempotent order: qp = p.
pub fn leq(p: &Idempotent, q: &Idempotent) -> Result<bool> {
    let qp = q.element().mul(p.element())?;
    let d = qp.sub(p.element())?.norm();
    Ok(d <= p.element().tol().rel_residual * p.element().norm().max(1.0))
}

/// p ~ q: pq = q and qp = p (equivalently pA = qA).
pub fn equivalent(p: &Idempotent, q: &Idempotent) -> Result<bool> {
    let tol = p.element().tol().rel_residual;
    let scale = p.element().norm().max(q.element().norm()).max(1.0);
    let pq = p.element().mul(q.element())?;
    let qp = q.element().mul(p.element())?;
    Ok(pq.sub(q.element())?.norm() <= tol * scale && qp.sub(p.element())?.norm() <= tol * scale)
}

/// For equivalent idempotents, the invertible s = pq + (1-p)(1-q)
/// conjugating q onto p. Satisfies s = 1 + (q - p) and s^{-1} = 1 - (q - p).
pub fn similarity(p: &Idempotent, q: &Idempotent) -> Result<Element> {
    if !equivalent(p, q)? {
        return Err(FlagFactError::NotEquivalent);
    }
    let one = p.instance().one();
    let pq = p.element().mul(q.element())?;
    let cp = one.sub(p.element())?;
    let cq = one.sub(q.element())?;
    pq.add(&cp.mul(&cq)?)
}

/// The unique self-adjoint idempotent equivalent to e,
/// p = e (1 - (e^* - e))^{-1}. Inversion fails exactly when the ambient
/// algebra is not hermitian enough for the construction.
pub fn selfadjointify(e: &Idempotent) -> Result<Idempotent> {
    let one = e.instance().one();
    let skew = e.element().adjoint().sub(e.element())?;
    let t = one.sub(&skew)?;
    let tinv = t.invert()?;
    let p = e.element().mul(&tinv)?;
    let rel = e.element().tol().rel_residual;
    let scale = p.norm().max(1.0);
    // certify p = p* = p^2, ep = p, pe = e
    let checks = [
        p.sub(&p.adjoint())?.norm(),
        p.mul(&p)?.sub(&p)?.norm(),
        e.element().mul(&p)?.sub(&p)?.norm(),
        p.mul(e.element())?.sub(e.element())?.norm(),
    ];
    if checks.iter().any(|r| *r > 100.0 * rel * scale.powi(2)) {
        return Err(FlagFactError::Numerical(format!(
            "self-adjointification residuals too large: {checks:?}"
        )));
    }
    Idempotent::new(p)
}

/// A strictly increasing chain of idempotents 0 = p_0 < p_1 < ... < p_n = 1,
/// stored without the implicit endpoints.
#[derive(Debug, Clone)]
pub struct Flag {
    instance: Arc<AlgebraInstance>,
    chain: Vec<Idempotent>,
    selfadjoint: bool,
}

impl Flag {
    /// The trivial flag 0 < 1.
    pub fn trivial(instance: &Arc<AlgebraInstance>) -> Self {
        Self {
            instance: instance.clone(),
            chain: Vec::new(),
            selfadjoint: true,
        }
    }

    pub fn new(instance: &Arc<AlgebraInstance>, chain: Vec<Idempotent>) -> Result<Self> {
        let rel = instance.tol.rel_residual;
        for p in &chain {
            if p.instance().as_ref() != instance.as_ref() {
                return Err(FlagFactError::InstanceMismatch);
            }
        }
        // strictly above 0 and strictly below 1
        if let Some(first) = chain.first() {
            if first.element().norm() <= rel {
                return Err(FlagFactError::InvalidFlag(
                    "first chain member coincides with 0".into(),
                ));
            }
        }
        if let Some(last) = chain.last() {
            if last.element().dist(&instance.one())? <= rel {
                return Err(FlagFactError::InvalidFlag(
                    "last chain member coincides with 1".into(),
                ));
            }
        }
        for w in chain.windows(2) {
            if !leq(&w[0], &w[1])? {
                return Err(FlagFactError::InvalidFlag(
                    "chain is not increasing (qp = p fails)".into(),
                ));
            }
            if w[1].element().dist(w[0].element())? <= rel {
                return Err(FlagFactError::InvalidFlag(
                    "chain is not strict (consecutive members coincide)".into(),
                ));
            }
        }
        let selfadjoint = chain.iter().all(|p| p.is_selfadjoint());
        Ok(Self {
            instance: instance.clone(),
            chain,
            selfadjoint,
        })
    }

    pub fn from_elements(instance: &Arc<AlgebraInstance>, elements: Vec<Element>) -> Result<Self> {
        let chain = elements
            .into_iter()
            .map(Idempotent::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(instance, chain)
    }

    /// Leading-corner identity projections at the given cut positions.
    ///
    /// Cuts count diagonal slots: matrix rows for dense and loop
    /// instances, blocks for block instances.
    pub fn standard(instance: &Arc<AlgebraInstance>, cuts: &[usize]) -> Result<Self> {
        let (slots, stride) = match &instance.kind {
            AlgebraKind::DenseStandard { dim } | AlgebraKind::DenseIndefinite { dim, .. } => {
                (*dim, 1)
            }
            AlgebraKind::Loop { matdim, .. } => (*matdim, 1),
            AlgebraKind::Block { blockcount, inner } => (*blockcount, inner.flat_dim()),
        };
        let mut prev = 0usize;
        for &c in cuts {
            if c <= prev || c >= slots {
                return Err(FlagFactError::BadPartition(format!(
                    "cut positions must be strictly increasing inside 1..{}",
                    slots
                )));
            }
            prev = c;
        }
        let chain = cuts
            .iter()
            .map(|&c| {
                let ones = c * stride;
                let p = leading_projection(instance, ones);
                Idempotent::new(p)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(instance, chain)
    }

    pub fn instance(&self) -> &Arc<AlgebraInstance> {
        &self.instance
    }

    pub fn chain(&self) -> &[Idempotent] {
        &self.chain
    }

    /// Number of diagonal blocks (chain length + 1).
    pub fn block_count(&self) -> usize {
        self.chain.len() + 1
    }

    pub fn is_selfadjoint(&self) -> bool {
        self.selfadjoint
    }

    /// Projections including the endpoints 0 and 1.
    pub fn projections_with_endpoints(&self) -> Vec<Element> {
        let mut out = Vec::with_capacity(self.chain.len() + 2);
        out.push(self.instance.zero());
        out.extend(self.chain.iter().map(|p| p.element().clone()));
        out.push(self.instance.one());
        out
    }

    /// Consecutive differences e_k = p_k - p_{k-1}, k = 1..=n.
    pub fn diffs(&self) -> Result<Vec<Element>> {
        let ps = self.projections_with_endpoints();
        ps.windows(2).map(|w| w[1].sub(&w[0])).collect()
    }

    /// The complement flag 0 = 1-p_n < 1-p_{n-1} < ... < 1-p_0 = 1.
    pub fn complement(&self) -> Result<Flag> {
        let one = self.instance.one();
        let chain = self
            .chain
            .iter()
            .rev()
            .map(|p| Idempotent::new(one.sub(p.element())?))
            .collect::<Result<Vec<_>>>()?;
        Flag::new(&self.instance, chain)
    }
}

fn leading_projection(instance: &Arc<AlgebraInstance>, ones: usize) -> Element {
    let n = instance.flat_dim();
    let mat = crate::dense::CMat::from_fn(n, n, |i, j| {
        if i == j && i < ones {
            cr(1.0)
        } else {
            cr(0.0)
        }
    });
    match instance.loop_gridsize() {
        None => Element::from_matrix(instance, mat).expect("projection shape"),
        Some(m) => {
            Element::from_samples(instance, vec![mat; m]).expect("projection shape")
        }
    }
}

fn check_flag_instance(x: &Element, flag: &Flag) -> Result<()> {
    if x.instance().as_ref() == flag.instance().as_ref() {
        Ok(())
    } else {
        Err(FlagFactError::InstanceMismatch)
    }
}

/// Diagonal truncation: x -> sum_k (p_k - p_{k-1}) x (p_k - p_{k-1}).
pub fn diagonal_truncation(x: &Element, flag: &Flag) -> Result<Element> {
    check_flag_instance(x, flag)?;
    let diffs = flag.diffs()?;
    let mut acc = x.instance().zero();
    for e in &diffs {
        acc = acc.add(&e.mul(x)?.mul(e)?)?;
    }
    Ok(acc)
}

/// Membership in the flag stabilizer Delta(flag): x p_k = p_k x p_k for all k.
pub fn is_triangular(x: &Element, flag: &Flag) -> Result<bool> {
    check_flag_instance(x, flag)?;
    let tol = x.tol().rel_residual * x.norm().max(1.0);
    for p in flag.chain() {
        let xp = x.mul(p.element())?;
        let pxp = p.element().mul(&xp)?;
        if xp.sub(&pxp)?.norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Membership in the range of the truncation, D(flag): x p_k = p_k x.
pub fn is_block_diagonal(x: &Element, flag: &Flag) -> Result<bool> {
    check_flag_instance(x, flag)?;
    let tol = x.tol().rel_residual * x.norm().max(1.0);
    for p in flag.chain() {
        let xp = x.mul(p.element())?;
        let px = p.element().mul(x)?;
        if xp.sub(&px)?.norm() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Membership in the unipotent group N(flag): triangular with truncation 1.
pub fn is_unipotent(x: &Element, flag: &Flag) -> Result<bool> {
    if !is_triangular(x, flag)? {
        return Ok(false);
    }
    let tol = x.tol().rel_residual * x.norm().max(1.0);
    let phi = diagonal_truncation(x, flag)?;
    Ok(phi.dist(&x.instance().one())? <= tol)
}
