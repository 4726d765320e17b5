//! Generators for the benchmark instance families, the separation check for
//! the star family, and the Bernoulli KL divergence.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::{best_nu, loss, Hypothesis, HypothesisClass, LabeledDistribution, MdlInstance, NEG, POS};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example1Case {
    /// Agreement-region error `ν' − ε`.
    A,
    /// Agreement-region error `ν' + ε`.
    B,
}

/// A named instance family with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Prop1 { k: usize, eps: f64 },
    StarLb { k: usize, theta: usize, i: usize, j: usize },
    AgnosticLb { k: usize, nu: f64, eps: f64, flipped: Option<usize> },
    Example1 { nu_prime: f64, eps: f64, case: Example1Case },
    Random { m: usize, hypotheses: usize, k: usize, noisy: bool, seed: u64 },
}

impl FamilySpec {
    pub fn tag(&self) -> &'static str {
        match self {
            FamilySpec::Prop1 { .. } => "prop1",
            FamilySpec::StarLb { .. } => "star-lb",
            FamilySpec::AgnosticLb { .. } => "agnostic-lb",
            FamilySpec::Example1 { .. } => "example1",
            FamilySpec::Random { .. } => "random",
        }
    }

    pub fn generate(&self) -> Result<MdlInstance> {
        match *self {
            FamilySpec::Prop1 { k, eps } => gen_prop1(k, eps),
            FamilySpec::StarLb { k, theta, i, j } => gen_star_lb(k, theta, i, j),
            FamilySpec::AgnosticLb { k, nu, eps, flipped } => gen_agnostic_lb(k, nu, eps, flipped),
            FamilySpec::Example1 { nu_prime, eps, case } => gen_example1(nu_prime, eps, case),
            FamilySpec::Random { m, hypotheses, k, noisy, seed } => gen_random(m, hypotheses, k, noisy, seed),
        }
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0,1), got {v}")))
    }
}

fn single_flips(base: &Hypothesis) -> Result<Vec<Hypothesis>> {
    let mut out = vec![base.clone()];
    for x in 0..base.num_points() {
        out.push(base.with_flips(&[x])?);
    }
    Ok(out)
}

/// Points `x0..xk`; the all-negative hypothesis plus single flips of
/// `x1..xk`; `D_i` puts `1−ε` on `(x0,−1)` and `ε` on `(x_i,+1)`.
pub fn gen_prop1(k: usize, eps: f64) -> Result<MdlInstance> {
    if k == 0 {
        return Err(invalid("prop1 needs k >= 1"));
    }
    check_open_unit("eps", eps)?;
    let m = k + 1;
    let hstar = Hypothesis::constant(m, NEG)?;
    let mut hyps = vec![hstar.clone()];
    for x in 1..m {
        hyps.push(hstar.with_flips(&[x])?);
    }
    let mut eta = vec![1.0; m];
    eta[0] = 0.0;
    let dists = (1..m)
        .map(|i| {
            let mut marginal = vec![0.0; m];
            marginal[0] = 1.0 - eps;
            marginal[i] = eps;
            LabeledDistribution::new(marginal, eta.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    MdlInstance::new(HypothesisClass::new(hyps)?, dists, Some(eps))
}

/// Index of the labeling hypothesis of star-family instance `(i, j)`:
/// `(i−1)ϑ + j`, or 0 (the all-negative hypothesis) when `j = 0`.
pub fn star_lb_labeler(theta: usize, i: usize, j: usize) -> usize {
    if j == 0 {
        0
    } else {
        (i - 1) * theta + j
    }
}

/// `kϑ` points in `k` blocks; class = all-negative plus every single flip;
/// `D_b` uniform on block `b`; labels from hypothesis `(i−1)ϑ + j`.
/// `i` is 1-based, `j = 0` labels everything negative.
pub fn gen_star_lb(k: usize, theta: usize, i: usize, j: usize) -> Result<MdlInstance> {
    if k == 0 || theta == 0 {
        return Err(invalid("star-lb needs k >= 1 and theta >= 1"));
    }
    if !(1..=k).contains(&i) || j > theta {
        return Err(invalid(format!("star-lb instance (i={i}, j={j}) outside i in 1..={k}, j in 0..={theta}")));
    }
    let m = k * theta;
    let class = HypothesisClass::new(single_flips(&Hypothesis::constant(m, NEG)?)?)?;
    let labeler = class.hypothesis(star_lb_labeler(theta, i, j));
    let eta: Vec<f64> = (0..m).map(|x| if labeler.predict(x) == POS { 1.0 } else { 0.0 }).collect();
    let dists = (0..k)
        .map(|b| {
            let block: Vec<usize> = (b * theta..(b + 1) * theta).collect();
            LabeledDistribution::uniform_on(&block, eta.clone())
        })
        .collect::<Result<Vec<_>>>()?;
    MdlInstance::new(class, dists, Some(0.0))
}

/// Point indices of the agnostic family: `x1 = 0`, `x2 = 1`, `z_i = 1 + i`.
pub const AGNOSTIC_X1: usize = 0;
pub const AGNOSTIC_X2: usize = 1;

/// Two hypotheses (`h1` all negative, `h2` positive on `x1, x2`) and `k`
/// distributions. `D1 = ν·(x1,−) + (1−ν)·(z1,−)`; for `i ≥ 2`,
/// `D_i = ν/2·(x2,+) + (1−ν/2)·z_i` with `Pr[+|z_i] = (ν−4ε)/(2−ν)`, or
/// `(ν+4ε)/(2−ν)` for the flipped index (1-based, in `2..=k`).
pub fn gen_agnostic_lb(k: usize, nu: f64, eps: f64, flipped: Option<usize>) -> Result<MdlInstance> {
    if k < 2 {
        return Err(invalid("agnostic-lb needs k >= 2"));
    }
    check_open_unit("eps", eps)?;
    if !(nu >= 8.0 * eps && nu <= 0.5) {
        return Err(invalid(format!("agnostic-lb needs 8*eps <= nu <= 1/2, got nu={nu}, eps={eps}")));
    }
    if let Some(f) = flipped {
        if !(2..=k).contains(&f) {
            return Err(invalid(format!("flipped index {f} outside 2..={k}")));
        }
    }
    let m = k + 2;
    let z = |i: usize| 1 + i;
    let h1 = Hypothesis::constant(m, NEG)?;
    let h2 = h1.with_flips(&[AGNOSTIC_X1, AGNOSTIC_X2])?;
    let class = HypothesisClass::new(vec![h1, h2])?;
    let p = (nu - 4.0 * eps) / (2.0 - nu);
    let q = (nu + 4.0 * eps) / (2.0 - nu);

    let mut dists = Vec::with_capacity(k);
    let mut marginal = vec![0.0; m];
    marginal[AGNOSTIC_X1] = nu;
    marginal[z(1)] = 1.0 - nu;
    dists.push(LabeledDistribution::new(marginal, vec![0.0; m])?);
    for i in 2..=k {
        let mut marginal = vec![0.0; m];
        let mut eta = vec![0.0; m];
        marginal[AGNOSTIC_X2] = nu / 2.0;
        eta[AGNOSTIC_X2] = 1.0;
        marginal[z(i)] = 1.0 - nu / 2.0;
        eta[z(i)] = if flipped == Some(i) { q } else { p };
        dists.push(LabeledDistribution::new(marginal, eta)?);
    }
    MdlInstance::new(class, dists, None)
}

/// Two hypotheses on four points `a1, a2, b, c` (`h1` all negative, `h2`
/// positive on `a1` and `b`). `D1 = 2ν'·(a1,−) + (1−2ν')·(a2,−)`;
/// `D2 = ν'·(b,+) + (1−ν')·c` with the error on `c` set to `ν' ∓ ε`.
pub fn gen_example1(nu_prime: f64, eps: f64, case: Example1Case) -> Result<MdlInstance> {
    check_open_unit("eps", eps)?;
    if !(nu_prime - eps >= 0.0) || !(2.0 * nu_prime <= 1.0) || !(2.0 * nu_prime + eps <= 1.0) {
        return Err(invalid(format!(
            "example1 needs eps <= nu' <= 1/2 and 2nu' + eps <= 1, got nu'={nu_prime}, eps={eps}"
        )));
    }
    let (a1, a2, b, c) = (0, 1, 2, 3);
    let h1 = Hypothesis::constant(4, NEG)?;
    let h2 = h1.with_flips(&[a1, b])?;
    let class = HypothesisClass::new(vec![h1, h2])?;
    let mut m1 = vec![0.0; 4];
    m1[a1] = 2.0 * nu_prime;
    m1[a2] = 1.0 - 2.0 * nu_prime;
    let d1 = LabeledDistribution::new(m1, vec![0.0; 4])?;
    let agr_err = match case {
        Example1Case::A => nu_prime - eps,
        Example1Case::B => nu_prime + eps,
    };
    let mut m2 = vec![0.0; 4];
    let mut eta2 = vec![0.0; 4];
    m2[b] = nu_prime;
    eta2[b] = 1.0;
    m2[c] = 1.0 - nu_prime;
    eta2[c] = (agr_err / (1.0 - nu_prime)).min(1.0);
    let d2 = LabeledDistribution::new(m2, eta2)?;
    MdlInstance::new(class, vec![d1, d2], None)
}

/// Random instance: `hypotheses` distinct labelings of `m` points, `k`
/// random marginals, and either random label noise or labels from a random
/// class member.
pub fn gen_random(m: usize, hypotheses: usize, k: usize, noisy: bool, seed: u64) -> Result<MdlInstance> {
    if m == 0 || m > 20 || k == 0 || hypotheses == 0 || hypotheses > 1usize << m {
        return Err(invalid(format!(
            "random family needs 1 <= m <= 20, k >= 1, 1 <= |H| <= 2^m; got m={m}, |H|={hypotheses}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut codes: Vec<u32> = (0..1u32 << m).collect();
    codes.shuffle(&mut rng);
    let hyps = codes[..hypotheses]
        .iter()
        .map(|&c| Hypothesis::new((0..m).map(|x| if c >> x & 1 == 1 { POS } else { NEG }).collect()))
        .collect::<Result<Vec<_>>>()?;
    let class = HypothesisClass::new(hyps)?;
    let labeler = rng.gen_range(0..class.len());
    let mut dists = Vec::with_capacity(k);
    for _ in 0..k {
        let raw: Vec<f64> = (0..m).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen::<f64>() + 1e-3 }).collect();
        let raw = if raw.iter().all(|&v| v == 0.0) { vec![1.0; m] } else { raw };
        let total: f64 = raw.iter().sum();
        let marginal = raw.iter().map(|v| v / total).collect();
        let eta = (0..m)
            .map(|x| {
                if noisy {
                    rng.gen::<f64>()
                } else if class.hypothesis(labeler).predict(x) == POS {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        dists.push(LabeledDistribution::new(marginal, eta)?);
    }
    MdlInstance::new(class, dists, None)
}

/// A labeling and the two `(i, j)` instances it is ε-optimal on.
pub type Witness = (Hypothesis, (usize, usize), (usize, usize));

/// Outcome of the pairwise separation check on a star family.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    /// Exhaustive verdict over all labelings; `None` when `kϑ > 14`.
    pub exhaustive: Option<bool>,
    /// `1/ϑ > 2ε`.
    pub analytic: bool,
    /// A labeling that is ε-optimal on two instances, with their `(i, j)`.
    pub witness: Option<Witness>,
    pub labelings_checked: u64,
}

impl SeparationReport {
    pub fn agree(&self) -> Option<bool> {
        self.exhaustive.map(|e| e == self.analytic)
    }
}

pub const SEPARATION_MAX_POINTS: usize = 14;

/// Checks that no labeling of the `kϑ` points is ε-optimal on two distinct
/// members of the star family. `members` lists `(i, j)` pairs; empty means
/// every `(i, j)` with `j ≥ 1`.
pub fn verify_separation(k: usize, theta: usize, members: &[(usize, usize)], eps: f64) -> Result<SeparationReport> {
    check_open_unit("eps", eps)?;
    let members: Vec<(usize, usize)> = if members.is_empty() {
        (1..=k).flat_map(|i| (1..=theta).map(move |j| (i, j))).collect()
    } else {
        members.to_vec()
    };
    for (a, pa) in members.iter().enumerate() {
        if members[..a].contains(pa) {
            return Err(invalid(format!("instance {pa:?} listed twice")));
        }
    }
    if members.len() < 2 {
        return Err(invalid("separation needs at least two distinct instances"));
    }
    let instances = members.iter().map(|&(i, j)| gen_star_lb(k, theta, i, j)).collect::<Result<Vec<_>>>()?;
    let analytic = 1.0 / theta as f64 > 2.0 * eps;
    let m = k * theta;
    if m > SEPARATION_MAX_POINTS {
        return Ok(SeparationReport { exhaustive: None, analytic, witness: None, labelings_checked: 0 });
    }
    let optima: Vec<f64> = instances.iter().map(|inst| best_nu(inst).1).collect();
    let mut checked = 0u64;
    for code in 0..1u32 << m {
        let h = Hypothesis::new((0..m).map(|x| if code >> x & 1 == 1 { POS } else { NEG }).collect())?;
        checked += 1;
        let mut first_hit: Option<usize> = None;
        for (a, inst) in instances.iter().enumerate() {
            let mut worst = 0.0f64;
            for d in inst.distributions() {
                worst = worst.max(loss(&h, d)?);
            }
            if worst <= optima[a] + eps {
                if let Some(f) = first_hit {
                    return Ok(SeparationReport {
                        exhaustive: Some(false),
                        analytic,
                        witness: Some((h, members[f], members[a])),
                        labelings_checked: checked,
                    });
                }
                first_hit = Some(a);
            }
        }
    }
    Ok(SeparationReport { exhaustive: Some(true), analytic, witness: None, labelings_checked: checked })
}

/// `KL(Ber(p) ‖ Ber(q))` in closed form.
pub fn kl_bernoulli(p: f64, q: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    check_open_unit("q", q)?;
    Ok(p * (p / q).ln() + (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln())
}

/// `∫_p^q (x−p)/(x(1−x)) dx` by adaptive Simpson quadrature; equals
/// `KL(Ber(p) ‖ Ber(q))`.
pub fn kl_bernoulli_integral(p: f64, q: f64) -> Result<f64> {
    check_open_unit("p", p)?;
    check_open_unit("q", q)?;
    let f = |x: f64| (x - p) / (x * (1.0 - x));
    Ok(adaptive_simpson(&f, p, q, 1e-13, 50))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let c = 0.5 * (a + b);
    let (fa, fb, fc) = (f(a), f(b), f(c));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fc + fb);
    simpson_step(f, a, b, fa, fb, fc, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fb: f64,
    fc: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let c = 0.5 * (a + b);
    let (d, e) = (0.5 * (a + c), 0.5 * (c + b));
    let (fd, fe) = (f(d), f(e));
    let left = (c - a) / 6.0 * (fa + 4.0 * fd + fc);
    let right = (b - c) / 6.0 * (fc + 4.0 * fe + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, c, fa, fc, fd, left, tol / 2.0, depth - 1)
        + simpson_step(f, c, b, fc, fb, fe, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::worst_loss;

    #[test]
    fn prop1_shape() {
        let inst = gen_prop1(3, 0.05).unwrap();
        assert_eq!(inst.num_points(), 4);
        assert_eq!(inst.class().len(), 4);
        for d in inst.distributions() {
            assert_eq!(loss(inst.class().hypothesis(0), d).unwrap(), 0.05);
        }
        assert_eq!(best_nu(&inst), (0, 0.05));
    }

    #[test]
    fn star_lb_realizable() {
        for (i, j) in [(1, 1), (2, 3), (3, 2), (1, 0)] {
            let inst = gen_star_lb(3, 3, i, j).unwrap();
            let (h, nu) = best_nu(&inst);
            assert_eq!(nu, 0.0);
            assert_eq!(h, star_lb_labeler(3, i, j));
        }
        assert!(gen_star_lb(2, 2, 3, 1).is_err());
        assert!(gen_star_lb(2, 2, 1, 3).is_err());
    }

    #[test]
    fn agnostic_ranges() {
        assert!(gen_agnostic_lb(4, 0.3, 0.05, None).is_err());
        assert!(gen_agnostic_lb(4, 0.6, 0.05, None).is_err());
        assert!(gen_agnostic_lb(1, 0.4, 0.05, None).is_err());
        assert!(gen_agnostic_lb(4, 0.4, 0.05, Some(1)).is_err());
        assert!(gen_agnostic_lb(4, 0.4, 0.05, Some(4)).is_ok());
    }

    #[test]
    fn example1_losses() {
        let (nu, eps) = (0.2, 0.02);
        let a = gen_example1(nu, eps, Example1Case::A).unwrap();
        let [h1, h2] = [a.class().hypothesis(0), a.class().hypothesis(1)];
        let d = a.distributions();
        assert_eq!(loss(h1, &d[0]).unwrap(), 0.0);
        assert_eq!(loss(h2, &d[0]).unwrap(), 2.0 * nu);
        assert!((loss(h1, &d[1]).unwrap() - (2.0 * nu - eps)).abs() < 1e-15);
        assert!((loss(h2, &d[1]).unwrap() - (nu - eps)).abs() < 1e-15);
        assert_eq!(best_nu(&a).0, 0);
        let b = gen_example1(nu, eps, Example1Case::B).unwrap();
        assert_eq!(best_nu(&b).0, 1);
        assert!((worst_loss(b.class().hypothesis(0), &b).unwrap() - (2.0 * nu + eps)).abs() < 1e-15);
    }

    #[test]
    fn separation_small_cases() {
        let r = verify_separation(2, 2, &[], 0.2).unwrap();
        assert_eq!(r.exhaustive, Some(true));
        assert!(r.analytic);
        assert_eq!(r.labelings_checked, 16);
        let boundary = verify_separation(2, 2, &[], 0.25).unwrap();
        assert!(!boundary.analytic);
        assert_eq!(boundary.exhaustive, Some(true));
        let broken = verify_separation(2, 2, &[], 0.5).unwrap();
        assert_eq!(broken.exhaustive, Some(false));
        assert!(broken.witness.is_some());
        assert!(verify_separation(2, 2, &[(1, 1), (1, 1)], 0.1).is_err());
        assert_eq!(verify_separation(4, 4, &[], 0.1).unwrap().exhaustive, None);
    }

    #[test]
    fn kl_values() {
        assert_eq!(kl_bernoulli(0.3, 0.3).unwrap(), 0.0);
        let expected = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        assert!((kl_bernoulli(0.5, 0.25).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.14384).abs() < 1e-5);
        assert!(kl_bernoulli(0.0, 0.5).is_err());
        assert!(kl_bernoulli(0.5, 1.0).is_err());
        assert!((kl_bernoulli_integral(0.5, 0.25).unwrap() - expected).abs() < 1e-12);
    }
}
