//! Involution kernels for locally constant potentials and the bilateral
//! extension of the Gibbs state.
//!
//! A bilateral point is written `(y | x)`: the sequence `... y_2 y_1 x_1 x_2 ...`
//! read outward from the junction. `y` is an admissible sequence of the
//! transpose model, `x` of the base model, and the junction requires
//! `y_1 -> x_1` in the base.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::linalg::{log_sum_exp, sup_norm};
use crate::measure::CylinderMeasure;
use crate::model::{enumerate_words, SubshiftModel, Word};
use crate::potential::Potential;
use crate::transfer::{
    assemble_operator, eigendata, eigenmeasure_cylinders, gibbs_cylinders, SpectralData,
};
use crate::{Error, Result};

/// A model together with its transpose (`a -> b` allowed iff `b -> a` is).
#[derive(Debug, Clone)]
pub struct TransposeModel {
    base: SubshiftModel,
    dual: SubshiftModel,
}

impl TransposeModel {
    pub fn new(base: &SubshiftModel) -> Self {
        Self {
            base: base.clone(),
            dual: base.transposed(),
        }
    }

    pub fn base(&self) -> &SubshiftModel {
        &self.base
    }

    pub fn dual(&self) -> &SubshiftModel {
        &self.dual
    }
}

#[derive(Debug, Clone)]
pub struct InvolutionData {
    transpose: TransposeModel,
    potential: Potential,
    kernel_depth: usize,
    kernel: BTreeMap<(Word, Word), f64>,
    dual_potential: Potential,
    spectra: Option<(SpectralData, SpectralData)>,
    c: Option<f64>,
}

/// `W(y|x) = sum_{n=1}^{k-1} g(y_n .. y_1, x_1 .. x_{k-n})`, the sum of `g`
/// over windows straddling the junction.
fn kernel_value(g: &Potential, y: &[usize], x: &[usize]) -> f64 {
    let k = g.depth();
    let mut total = 0.0;
    let mut window = Vec::with_capacity(k);
    for n in 1..k {
        window.clear();
        window.extend(y[..n].iter().rev());
        window.extend(&x[..k - n]);
        total += g.eval(&window);
    }
    total
}

/// Tabulate the kernel on junction-admissible `(k - 1, k - 1)` word pairs and
/// the dual potential `phi*(y) = g(y_k .. y_1)` on the transpose model.
pub fn build_kernel(model: &SubshiftModel, phi: &Potential) -> Result<InvolutionData> {
    phi.check_against(model)?;
    let g = phi.lift(model, phi.depth().max(2))?;
    let k = g.depth();
    let transpose = TransposeModel::new(model);
    let ys = enumerate_words(transpose.dual(), k - 1)?;
    let xs = enumerate_words(model, k - 1)?;
    let mut kernel = BTreeMap::new();
    for y in &ys {
        for x in &xs {
            if model.allows(y.first(), x.first()) {
                kernel.insert((y.clone(), x.clone()), kernel_value(&g, &y.0, &x.0));
            }
        }
    }
    let dual_potential = Potential::from_fn(
        transpose.dual(),
        k,
        format!("dual of {}", g.label()),
        |w| g.value(&w.reversed()),
    )?;
    Ok(InvolutionData {
        transpose,
        potential: g,
        kernel_depth: k - 1,
        kernel,
        dual_potential,
        spectra: None,
        c: None,
    })
}

impl InvolutionData {
    pub fn transpose(&self) -> &TransposeModel {
        &self.transpose
    }

    /// Depth-`k` potential on the base model (depth 1 lifted to 2).
    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn kernel_depth(&self) -> usize {
        self.kernel_depth
    }

    pub fn kernel(&self) -> &BTreeMap<(Word, Word), f64> {
        &self.kernel
    }

    pub fn dual_potential(&self) -> &Potential {
        &self.dual_potential
    }

    /// `W(y|x)` for words with at least `k - 1` symbols each.
    pub fn w(&self, y: &[usize], x: &[usize]) -> Result<f64> {
        let d = self.kernel_depth;
        let key = (Word(y[..d].to_vec()), Word(x[..d].to_vec()));
        self.kernel.get(&key).copied().ok_or_else(|| {
            Error::InadmissibleConfiguration(format!(
                "({} | {})",
                self.transpose.dual().format_word(&key.0),
                self.transpose.base().format_word(&key.1)
            ))
        })
    }

    /// Eigendata of `phi` and of `phi*`, then the normalizing constant
    /// `c = log sum_{y,x} rho*(y) rho(x) 1[y_1 -> x_1] exp W(y|x)`.
    pub fn attach_eigendata(&mut self, tol: f64, max_iter: usize) -> Result<()> {
        let base = eigendata(self.transpose.base(), &self.potential, tol, max_iter)?;
        let dual = eigendata(self.transpose.dual(), &self.dual_potential, tol, max_iter)?;
        let mut terms = Vec::with_capacity(self.kernel.len());
        for ((y, x), w) in &self.kernel {
            let (_, ry) = dual.state_value(y).ok_or(Error::EigendataMissing)?;
            let (_, rx) = base.state_value(x).ok_or(Error::EigendataMissing)?;
            if ry > 0.0 && rx > 0.0 {
                terms.push(ry.ln() + rx.ln() + w);
            }
        }
        let c = log_sum_exp(&terms);
        if !c.is_finite() {
            return Err(Error::NonFinite(format!("normalizing constant {c}")));
        }
        self.spectra = Some((base, dual));
        self.c = Some(c);
        Ok(())
    }

    pub fn c(&self) -> Result<f64> {
        self.c.ok_or(Error::EigendataMissing)
    }

    /// `(base, dual)` eigendata.
    pub fn spectra(&self) -> Result<(&SpectralData, &SpectralData)> {
        self.spectra
            .as_ref()
            .map(|(a, b)| (a, b))
            .ok_or(Error::EigendataMissing)
    }

    /// Largest `|(phi* + W)(a y | x) - (phi + W)(y | a x)|` over every
    /// admissible local configuration `y_{k-1} .. y_1 a x_1 .. x_{k-1}`.
    pub fn kernel_identity_deviation(&self) -> Result<f64> {
        let base = self.transpose.base();
        let d = self.kernel_depth;
        let mut worst: f64 = 0.0;
        for z in enumerate_words(base, 2 * d + 1)? {
            let y: Vec<usize> = z.0[..d].iter().rev().copied().collect();
            let a = z.0[d];
            let x = &z.0[d + 1..];
            let mut ay = vec![a];
            ay.extend(&y);
            let mut ax = vec![a];
            ax.extend(x);
            let lhs = self.dual_potential.eval(&ay) + self.w(&ay, x)?;
            let rhs = self.potential.eval(&ax) + self.w(&y, &ax)?;
            worst = worst.max((lhs - rhs).abs());
        }
        Ok(worst)
    }
}

/// Largest deviation in the transpose-operator identity
/// `L_{phi*}(1[A(., x_1)] e^{W(.|x)})(y) = L_phi(1[A(y_1, .)] e^{W(y|.)})(x)`
/// over state pairs: all of them when there are at most 64 states on each
/// side, otherwise `samples` pairs drawn with a fixed seed.
pub fn verify_transpose_lemma(
    model: &SubshiftModel,
    inv: &InvolutionData,
    samples: usize,
) -> Result<f64> {
    let dual_model = inv.transpose.dual();
    let p = model.apriori();
    let d = inv.kernel_depth;
    let ys = enumerate_words(dual_model, d)?;
    let xs = enumerate_words(model, d)?;
    let pairs: Vec<(usize, usize)> = if ys.len() <= 64 && xs.len() <= 64 {
        (0..ys.len())
            .flat_map(|i| (0..xs.len()).map(move |j| (i, j)))
            .collect()
    } else {
        let mut rng = StdRng::seed_from_u64(0x5eed);
        (0..samples)
            .map(|_| (rng.gen_range(0..ys.len()), rng.gen_range(0..xs.len())))
            .collect()
    };
    let mut worst: f64 = 0.0;
    for (i, j) in pairs {
        let (y, x) = (&ys[i].0, &xs[j].0);
        let mut lhs = 0.0;
        for a in dual_model.admissibility().section(y[0]) {
            if model.allows(*a, x[0]) {
                let mut ay = vec![*a];
                ay.extend(y);
                lhs += p.weight(*a) * (inv.dual_potential.eval(&ay) + inv.w(&ay, x)?).exp();
            }
        }
        let mut rhs = 0.0;
        for a in model.admissibility().section(x[0]) {
            if model.allows(y[0], *a) {
                let mut ax = vec![*a];
                ax.extend(x);
                rhs += p.weight(*a) * (inv.potential.eval(&ax) + inv.w(y, &ax)?).exp();
            }
        }
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// `f(x) = sum_y rho*(y) 1[y_1 -> x_1] exp(W(y|x) - c)` on base states.
    pub f: Vec<f64>,
    /// The same construction with the roles exchanged, on dual states.
    pub f_dual: Vec<f64>,
    pub lambda: f64,
    pub lambda_dual: f64,
    /// `||L f - lambda f||_inf / ||f||_inf`
    pub residual: f64,
    pub dual_residual: f64,
    /// `|rho(f) - 1|`
    pub normalization: f64,
    pub dual_normalization: f64,
    /// Sup distance to the power-iteration eigenfunctions.
    pub deviation: f64,
    pub dual_deviation: f64,
}

/// Recover `f_phi` from the dual eigenmeasure and the kernel, and `f_phi*`
/// symmetrically, and compare both with power iteration.
pub fn reconstruct_eigenfunction(model: &SubshiftModel, inv: &InvolutionData) -> Result<Reconstruction> {
    let (base, dual) = inv.spectra()?;
    let c = inv.c()?;
    let mut f = vec![0.0; base.states().len()];
    let mut f_dual = vec![0.0; dual.states().len()];
    for ((y, x), w) in &inv.kernel {
        let iy = dual.states().binary_search(y).map_err(|_| Error::EigendataMissing)?;
        let ix = base.states().binary_search(x).map_err(|_| Error::EigendataMissing)?;
        let e = (w - c).exp();
        f[ix] += dual.eigenmeasure_base()[iy] * e;
        f_dual[iy] += base.eigenmeasure_base()[ix] * e;
    }
    let residual_of = |m: &SubshiftModel, g: &Potential, v: &[f64], lambda: f64| -> Result<f64> {
        let op = assemble_operator(m, g)?;
        let lv = op.apply(v);
        let diff: Vec<f64> = lv.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
        Ok(sup_norm(&diff) / sup_norm(v))
    };
    let dev = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let rho_dot = |r: &[f64], v: &[f64]| r.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    Ok(Reconstruction {
        residual: residual_of(model, &inv.potential, &f, base.lambda())?,
        dual_residual: residual_of(inv.transpose.dual(), &inv.dual_potential, &f_dual, dual.lambda())?,
        normalization: (rho_dot(base.eigenmeasure_base(), &f) - 1.0).abs(),
        dual_normalization: (rho_dot(dual.eigenmeasure_base(), &f_dual) - 1.0).abs(),
        deviation: dev(&f, base.eigenfunction()),
        dual_deviation: dev(&f_dual, dual.eigenfunction()),
        lambda: base.lambda(),
        lambda_dual: dual.lambda(),
        f,
        f_dual,
    })
}

/// Bilateral Gibbs measure on `(y-word, x-word)` cylinders of lengths
/// `(D*, D)`: mass `1[y_1 -> x_1] exp(W - c) rho*([y]) rho([x])`.
#[derive(Debug, Clone)]
pub struct BilateralMeasure {
    depths: (usize, usize),
    masses: BTreeMap<(Word, Word), f64>,
}

pub fn bilateral_measure(
    model: &SubshiftModel,
    inv: &InvolutionData,
    depths: (usize, usize),
) -> Result<BilateralMeasure> {
    let (base, dual) = inv.spectra()?;
    let c = inv.c()?;
    let d = inv.kernel_depth;
    let need = d.max(1);
    if depths.0 < need || depths.1 < need {
        return Err(Error::DepthTooSmall {
            required: need,
            got: depths.0.min(depths.1),
        });
    }
    let rho_y = eigenmeasure_cylinders(inv.transpose.dual(), &inv.dual_potential, dual, depths.0)?;
    let rho_x = eigenmeasure_cylinders(model, &inv.potential, base, depths.1)?;
    let mut masses = BTreeMap::new();
    for (y, my) in rho_y.level(depths.0) {
        for (x, mx) in rho_x.level(depths.1) {
            if model.allows(y.first(), x.first()) {
                let w = inv.w(&y.0, &x.0)?;
                masses.insert((y.clone(), x.clone()), (w - c).exp() * my * mx);
            }
        }
    }
    Ok(BilateralMeasure { depths, masses })
}

impl BilateralMeasure {
    pub fn depths(&self) -> (usize, usize) {
        self.depths
    }

    pub fn masses(&self) -> &BTreeMap<(Word, Word), f64> {
        &self.masses
    }

    pub fn total_mass(&self) -> f64 {
        self.masses.values().sum()
    }

    /// Projection onto the future coordinates `x`.
    pub fn x_marginal(&self, model: &SubshiftModel) -> Result<CylinderMeasure> {
        let mut top = BTreeMap::new();
        for ((_, x), m) in &self.masses {
            *top.entry(x.clone()).or_insert(0.0) += m;
        }
        CylinderMeasure::from_top_level(model, self.depths.1, top, true)
    }

    /// Projection onto the past coordinates `y`, a measure on the transpose model.
    pub fn y_marginal(&self, dual_model: &SubshiftModel) -> Result<CylinderMeasure> {
        let mut top = BTreeMap::new();
        for ((y, _), m) in &self.masses {
            *top.entry(y.clone()).or_insert(0.0) += m;
        }
        CylinderMeasure::from_top_level(dual_model, self.depths.0, top, true)
    }

    /// `mu^(phi^)` where `phi^(y|x) = phi(x)`.
    pub fn integrate_future(&self, phi: &Potential) -> Result<f64> {
        if phi.depth() > self.depths.1 {
            return Err(Error::DepthTooSmall {
                required: phi.depth(),
                got: self.depths.1,
            });
        }
        Ok(self.masses.iter().map(|((_, x), m)| m * phi.eval(&x.0)).sum())
    }
}

#[derive(Debug, Clone)]
pub struct MarginalCheck {
    pub total_mass: f64,
    /// TV between the `x`-marginal and `mu_phi` at depth `D`.
    pub x_tv: f64,
    /// TV between the `y`-marginal and `mu_phi*` at depth `D*`.
    pub y_tv: f64,
}

pub fn check_marginals(
    model: &SubshiftModel,
    inv: &InvolutionData,
    bilateral: &BilateralMeasure,
) -> Result<MarginalCheck> {
    let (base, dual) = inv.spectra()?;
    let (dy, dx) = bilateral.depths();
    let mu = gibbs_cylinders(model, &inv.potential, base, dx)?;
    let mu_dual = gibbs_cylinders(inv.transpose.dual(), &inv.dual_potential, dual, dy)?;
    Ok(MarginalCheck {
        total_mass: bilateral.total_mass(),
        x_tv: bilateral.x_marginal(model)?.total_variation(&mu, dx)?,
        y_tv: bilateral
            .y_marginal(inv.transpose.dual())?
            .total_variation(&mu_dual, dy)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::catalog::*;
    use crate::{DEFAULT_MAX_ITER, DEFAULT_TOL};

    fn built(model: &SubshiftModel, phi: &Potential) -> InvolutionData {
        let mut inv = build_kernel(model, phi).unwrap();
        inv.attach_eigendata(DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        inv
    }

    #[test]
    fn depth_two_kernel_shape() {
        let m = golden_mean();
        let phi = Potential::pair_coordinate_sum(&m, 1.0).unwrap();
        let inv = build_kernel(&m, &phi).unwrap();
        assert_eq!(inv.kernel().len(), 3);
        for ((y, x), w) in inv.kernel() {
            assert_eq!(*w, phi.value(&Word(vec![y.first(), x.first()])));
        }
        for (w, v) in inv.dual_potential().entries() {
            assert_eq!(v, phi.value(&w.reversed()));
        }
        assert!(matches!(
            inv.w(&[1], &[1]),
            Err(Error::InadmissibleConfiguration(_))
        ));
        assert!(inv.kernel_identity_deviation().unwrap() <= 1e-14);
    }

    #[test]
    fn zero_potential_full_shift() {
        let m = full_shift(3);
        let inv = built(&m, &Potential::zero(&m, 2).unwrap());
        assert!(inv.kernel().values().all(|&w| w == 0.0));
        assert!(inv.c().unwrap().abs() < 1e-14);
        assert!(verify_transpose_lemma(&m, &inv, 0).unwrap() < 1e-15);
        let r = reconstruct_eigenfunction(&m, &inv).unwrap();
        assert!(r.f.iter().all(|v| (v - 1.0).abs() < 1e-12));
        let b = bilateral_measure(&m, &inv, (1, 1)).unwrap();
        for ((_, x), mass) in b.masses() {
            assert_eq!(x.len(), 1);
            assert!((mass - 1.0 / 9.0).abs() < 1e-14);
        }
    }

    #[test]
    fn golden_mean_reconstruction() {
        let m = golden_mean();
        let inv = built(&m, &Potential::pair_coordinate_sum(&m, 1.0).unwrap());
        assert!(verify_transpose_lemma(&m, &inv, 0).unwrap() <= 1e-14);
        let r = reconstruct_eigenfunction(&m, &inv).unwrap();
        assert!((r.lambda - r.lambda_dual).abs() < 1e-10);
        assert!(r.deviation < 1e-10, "{}", r.deviation);
        assert!(r.normalization < 1e-10);
        assert!(r.residual < 1e-10);
        let b = bilateral_measure(&m, &inv, (3, 3)).unwrap();
        let chk = check_marginals(&m, &inv, &b).unwrap();
        assert!((chk.total_mass - 1.0).abs() < 1e-12);
        assert!(chk.x_tv < 1e-10 && chk.y_tv < 1e-10);
    }

    #[test]
    fn depth_three_kernel_identity_and_reconstruction() {
        let m = two_loops();
        let phi = Potential::from_fn(&m, 3, "mixed", |w| {
            0.3 * w.0[0] as f64 - 0.2 * (w.0[1] * w.0[2]) as f64 + 0.1
        })
        .unwrap();
        let inv = built(&m, &phi);
        assert_eq!(inv.kernel_depth(), 2);
        assert!(inv.kernel_identity_deviation().unwrap() <= 1e-14);
        assert!(verify_transpose_lemma(&m, &inv, 0).unwrap() <= 1e-12);
        let r = reconstruct_eigenfunction(&m, &inv).unwrap();
        assert!(r.deviation < 1e-10 && r.dual_deviation < 1e-10);
        let b = bilateral_measure(&m, &inv, (2, 4)).unwrap();
        let chk = check_marginals(&m, &inv, &b).unwrap();
        assert!(chk.x_tv < 1e-10 && chk.y_tv < 1e-10);
    }
}
