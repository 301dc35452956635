//! Bony decomposition `f g = f < g + f o g + f > g`, the commutator `com`
//! and the paralinearization remainder.

use crate::error::{Error, Result};
use crate::littlewood_paley::{BlockStack, DyadicPartition};
use crate::nonlinearity::NonlinearitySpec;
use crate::spectral::{compose_pair, multiply, RealField};

/// The three Bony pieces of one product.
#[derive(Clone, Debug)]
pub struct BonyTriple {
    /// `f < g = sum_j S_{j-2} f Delta_j g`, with `S_{j-2} = sum_{i <= j-2} Delta_i`.
    pub lt: RealField,
    /// `f o g = sum_{|i-j| <= 1} Delta_i f Delta_j g`.
    pub res: RealField,
    /// `f > g = g < f`.
    pub gt: RealField,
}

impl BonyTriple {
    pub fn sum(&self) -> Result<RealField> {
        self.lt.add(&self.res)?.add(&self.gt)
    }
}

/// Oversampled values of `f < g` from block stacks.
pub fn para_fine(sf: &BlockStack, sg: &BlockStack) -> Vec<f64> {
    let nl = sf.levels.len();
    let len = sf.levels[0].len();
    let mut low = vec![0.0; len];
    let mut out = vec![0.0; len];
    // Block index s = j + 1; S_{j-2} collects slots 0..=s-2.
    for s in 2..nl {
        low.iter_mut().zip(&sf.levels[s - 2]).for_each(|(a, b)| *a += b);
        out.iter_mut().zip(low.iter().zip(&sg.levels[s])).for_each(|(o, (a, b))| *o += a * b);
    }
    out
}

/// Oversampled values of `f o g` from block stacks.
pub fn res_fine(sf: &BlockStack, sg: &BlockStack) -> Vec<f64> {
    let nl = sf.levels.len();
    let len = sf.levels[0].len();
    let mut out = vec![0.0; len];
    let mut near = vec![0.0; len];
    for s in 0..nl {
        near.iter_mut().for_each(|v| *v = 0.0);
        for t in s.saturating_sub(1)..(s + 2).min(nl) {
            near.iter_mut().zip(&sg.levels[t]).for_each(|(a, b)| *a += b);
        }
        out.iter_mut().zip(sf.levels[s].iter().zip(&near)).for_each(|(o, (a, b))| *o += a * b);
    }
    out
}

fn check(p: &DyadicPartition, f: &RealField, g: &RealField) -> Result<()> {
    for h in [f, g] {
        if h.grid() != p.grid() {
            return Err(Error::GridMismatch(h.grid().n(), p.grid().n()));
        }
    }
    Ok(())
}

/// Truncate two oversampled arrays to coarse fields with one transform.
pub(crate) fn fields_from_fine(p: &DyadicPartition, a: &[f64], b: &[f64]) -> (RealField, RealField) {
    let g = p.grid();
    let (sa, sb) = g.truncate_fine_pair(a, b);
    RealField::pair_from_spectral(g, sa, sb)
}

pub(crate) fn field_from_fine(p: &DyadicPartition, a: &[f64]) -> RealField {
    RealField::from_spectral_trusted(p.grid(), p.grid().truncate_fine(a))
}

/// Paraproduct `f < g`.
pub fn paraproduct(p: &DyadicPartition, f: &RealField, g: &RealField) -> Result<RealField> {
    check(p, f, g)?;
    let (sf, sg) = (BlockStack::new(p, f)?, BlockStack::new(p, g)?);
    Ok(field_from_fine(p, &para_fine(&sf, &sg)))
}

/// Resonant product `f o g`.
pub fn resonant(p: &DyadicPartition, f: &RealField, g: &RealField) -> Result<RealField> {
    check(p, f, g)?;
    let (sf, sg) = (BlockStack::new(p, f)?, BlockStack::new(p, g)?);
    Ok(field_from_fine(p, &res_fine(&sf, &sg)))
}

/// All three Bony pieces.
pub fn bony(p: &DyadicPartition, f: &RealField, g: &RealField) -> Result<BonyTriple> {
    check(p, f, g)?;
    let (sf, sg) = (BlockStack::new(p, f)?, BlockStack::new(p, g)?);
    let (lt, gt) = fields_from_fine(p, &para_fine(&sf, &sg), &para_fine(&sg, &sf));
    let res = field_from_fine(p, &res_fine(&sf, &sg));
    Ok(BonyTriple { lt, res, gt })
}

/// `com(f, g, h) = (f < g) o h - f (g o h)`.
pub fn commutator(p: &DyadicPartition, f: &RealField, g: &RealField, h: &RealField) -> Result<RealField> {
    check(p, f, g)?;
    check(p, h, h)?;
    let fg = paraproduct(p, f, g)?;
    let (sfg, sg, sh) = (BlockStack::new(p, &fg)?, BlockStack::new(p, g)?, BlockStack::new(p, h)?);
    let (a, b) = fields_from_fine(p, &res_fine(&sfg, &sh), &res_fine(&sg, &sh));
    a.sub(&multiply(f, &b)?)
}

/// `R(u) = F(u) - F'(u) < u`, with `F` and `F'` composed on the oversampled grid.
pub fn paralinearization_remainder(p: &DyadicPartition, nl: &NonlinearitySpec, u: &RealField) -> Result<RealField> {
    check(p, u, u)?;
    let (fu, dfu) = compose_pair(u, |x| nl.value(x), |x| nl.d1(x))?;
    fu.sub(&paraproduct(p, &dfu, u)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{Grid, C64};
    use proptest::prelude::*;

    fn field(g: &Grid, seed: u64, decay: f64) -> RealField {
        let c = (0..g.len())
            .map(|i| {
                let (k1, k2) = g.freq(i);
                let (a, b) = crate::rng::counter_gaussian_pair(seed, 11, k1, k2);
                C64::new(a, b) * (1.0 + (k1 * k1 + k2 * k2) as f64).powf(-decay / 2.0)
            })
            .collect();
        RealField::from_spectral(g, c).unwrap()
    }

    /// Direct spectral oracle: convolve block coefficients pair by pair.
    fn para_oracle(p: &DyadicPartition, f: &RealField, g: &RealField) -> RealField {
        let mut acc = RealField::zeros(p.grid());
        for j in p.levels() {
            let dg = p.block(g, j).unwrap();
            for i in p.levels().filter(|&i| i <= j - 2) {
                acc = acc.add(&multiply(&p.block(f, i).unwrap(), &dg).unwrap()).unwrap();
            }
        }
        acc
    }

    #[test]
    fn paraproduct_matches_pairwise_oracle() {
        let g = Grid::new(32).unwrap();
        for p in [DyadicPartition::sharp(&g), DyadicPartition::smooth(&g)] {
            let f = field(&g, 1, 1.0);
            let h = field(&g, 2, 0.5);
            let a = paraproduct(&p, &f, &h).unwrap();
            let b = para_oracle(&p, &f, &h);
            assert!(a.max_diff(&b).unwrap() < 1e-14 * a.grid_sup(), "{:?}", p.mode());
        }
    }

    #[test]
    fn constant_paraproduct() {
        // Constants live in block -1, so 1 < g drops the blocks j <= 0 of g.
        let g = Grid::new(32).unwrap();
        let p = DyadicPartition::sharp(&g);
        let h = field(&g, 3, 0.0);
        let one = RealField::constant(&g, 1.0);
        let a = paraproduct(&p, &one, &h).unwrap();
        let want = p.localize_high(&h, 0.0).unwrap();
        assert!(a.max_diff(&want).unwrap() < 1e-13);
        assert!(paraproduct(&p, &h, &one).unwrap().grid_sup() < 1e-15);
    }

    #[test]
    fn commutator_of_constants_vanishes() {
        let g = Grid::new(32).unwrap();
        let p = DyadicPartition::sharp(&g);
        let c = RealField::constant(&g, 2.5);
        let h = field(&g, 4, 0.0);
        let k = field(&g, 5, 1.0);
        // With f constant (f < g) o h = c (Delta_{>0} g) o h while f (g o h) keeps all of g.
        let com = commutator(&p, &c, &k, &h).unwrap();
        let low = p.localize_low(&k, 0.0).unwrap();
        let want = resonant(&p, &low, &h).unwrap().scale(-2.5);
        assert!(com.max_diff(&want).unwrap() < 1e-12 * want.grid_sup());
    }

    #[test]
    fn paralinearization_of_linear_map() {
        // F(u) = 2u: R(u) = 2u - 2 < u = 2 Delta_{<=0} u.
        let g = Grid::new(32).unwrap();
        let p = DyadicPartition::sharp(&g);
        let u = field(&g, 6, 1.5);
        let r = paralinearization_remainder(&p, &NonlinearitySpec::linear(2.0), &u).unwrap();
        let want = p.localize_low(&u, 0.0).unwrap().scale(2.0);
        assert!(r.max_diff(&want).unwrap() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(20))]

        #[test]
        fn bony_identity(s1 in 0u64..100_000, s2 in 0u64..100_000, smooth in any::<bool>()) {
            let g = Grid::new(32).unwrap();
            let p = if smooth { DyadicPartition::smooth(&g) } else { DyadicPartition::sharp(&g) };
            let f = field(&g, s1, 0.5);
            let h = field(&g, s2, 1.5);
            let t = bony(&p, &f, &h).unwrap();
            let prod = multiply(&f, &h).unwrap();
            prop_assert!(t.sum().unwrap().max_diff(&prod).unwrap() < 1e-13 * (1.0 + prod.grid_sup()));
            let sw = bony(&p, &h, &f).unwrap();
            prop_assert!(sw.lt.max_diff(&t.gt).unwrap() < 1e-13);
            prop_assert!(sw.res.max_diff(&t.res).unwrap() < 1e-13);
        }

        #[test]
        fn paraproduct_is_bilinear(s1 in 0u64..1000, s2 in 0u64..1000, s3 in 0u64..1000, a in -2.0f64..2.0) {
            let g = Grid::new(16).unwrap();
            let p = DyadicPartition::sharp(&g);
            let (f, h, k) = (field(&g, s1, 1.0), field(&g, s2, 1.0), field(&g, s3, 1.0));
            let lhs = paraproduct(&p, &f.lincomb(a, &k, 1.0).unwrap(), &h).unwrap();
            let rhs = paraproduct(&p, &f, &h).unwrap().lincomb(a, &paraproduct(&p, &k, &h).unwrap(), 1.0).unwrap();
            prop_assert!(lhs.max_diff(&rhs).unwrap() < 1e-12);
        }
    }
}
