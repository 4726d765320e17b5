//! Exact complexity measures over finite classes: VC dimension, star number
//! and the disagreement coefficient.

use crate::domain::{disagreement, exact_sum, Hypothesis, HypothesisClass, Label, LabeledDistribution, MdlInstance};
use crate::error::{invalid, Error, Result};

/// Outcome of a capped VC-dimension search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VcDimension {
    Exact(usize),
    /// Some set of `cap` points is shattered; larger sizes were not searched.
    AtLeast(usize),
}

impl VcDimension {
    /// The certified lower bound (the exact value when not capped).
    pub fn value(self) -> usize {
        match self {
            VcDimension::Exact(d) | VcDimension::AtLeast(d) => d,
        }
    }
}

impl std::fmt::Display for VcDimension {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VcDimension::Exact(d) => write!(f, "{d}"),
            VcDimension::AtLeast(d) => write!(f, ">={d}"),
        }
    }
}

/// Calls `visit` on every `s`-subset of `0..n` in lexicographic order until it
/// returns true. Returns whether any call did.
fn any_combination(n: usize, s: usize, mut visit: impl FnMut(&[usize]) -> bool) -> bool {
    if s > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        if visit(&idx) {
            return true;
        }
        let Some(pos) = (0..s).rev().find(|&p| idx[p] < p + n - s) else {
            return false;
        };
        idx[pos] += 1;
        for j in pos + 1..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn shatters(class: &HypothesisClass, points: &[usize]) -> bool {
    let needed = 1usize << points.len();
    if class.len() < needed {
        return false;
    }
    let mut seen = vec![false; needed];
    let mut distinct = 0;
    for h in class.hypotheses() {
        let mut pattern = 0usize;
        for (b, &x) in points.iter().enumerate() {
            if h.predict(x) > 0 {
                pattern |= 1 << b;
            }
        }
        if !seen[pattern] {
            seen[pattern] = true;
            distinct += 1;
            if distinct == needed {
                return true;
            }
        }
    }
    false
}

/// Largest `s ≤ cap` such that some `s`-point subset is shattered.
pub fn vc_dimension(class: &HypothesisClass, cap: usize) -> Result<VcDimension> {
    if cap > 24 {
        return Err(invalid(format!("vc cap {cap} too large for exhaustive search")));
    }
    let m = class.num_points();
    // a class of size n cannot shatter more than floor(log2 n) points
    let info_limit = (usize::BITS - 1 - class.len().leading_zeros()) as usize;
    let limit = m.min(info_limit);
    let mut best = 0;
    for s in 1..=limit.min(cap) {
        if any_combination(m, s, |pts| shatters(class, pts)) {
            best = s;
        } else {
            return Ok(VcDimension::Exact(best));
        }
    }
    if best == cap && cap < limit {
        Ok(VcDimension::AtLeast(cap))
    } else {
        Ok(VcDimension::Exact(best))
    }
}

/// Result of a star-number computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StarNumber {
    pub value: usize,
    /// Set when the exact search was skipped and `value` is a greedy lower bound.
    pub lower_bound_only: bool,
}

/// Default number of candidate points up to which the star search is exact.
pub const DEFAULT_STAR_CAP: usize = 128;

/// Star number of `class` with respect to the reference `hstar`.
///
/// Candidate points are those where some class member disagrees with the
/// reference. With at most `cap` candidates (and at most 128) the search is an
/// exact branch-and-bound; otherwise a greedy star set is returned with
/// `lower_bound_only` set.
pub fn star_number(class: &HypothesisClass, hstar: &Hypothesis, cap: usize) -> Result<StarNumber> {
    if hstar.num_points() != class.num_points() {
        return Err(Error::DimensionMismatch { expected: class.num_points(), found: hstar.num_points() });
    }
    let m = class.num_points();
    let candidates: Vec<usize> =
        (0..m).filter(|&x| class.hypotheses().iter().any(|h| h.predict(x) != hstar.predict(x))).collect();
    if candidates.is_empty() {
        return Ok(StarNumber { value: 0, lower_bound_only: false });
    }
    if candidates.len() > cap.min(128) {
        return Ok(StarNumber { value: greedy_star(class, hstar, &candidates), lower_bound_only: true });
    }
    // disagreement sets with hstar, over candidate positions
    let masks: Vec<u128> = class
        .hypotheses()
        .iter()
        .map(|h| {
            candidates
                .iter()
                .enumerate()
                .filter(|(_, &x)| h.predict(x) != hstar.predict(x))
                .fold(0u128, |acc, (b, _)| acc | (1u128 << b))
        })
        .filter(|&mask| mask != 0)
        .collect();
    let mut search = StarSearch { masks: &masks, n: candidates.len(), best: 0 };
    search.extend(0, 0, 0);
    Ok(StarNumber { value: search.best, lower_bound_only: false })
}

struct StarSearch<'a> {
    masks: &'a [u128],
    n: usize,
    best: usize,
}

impl StarSearch<'_> {
    /// A set is a star set iff each member has a witness whose disagreement
    /// set meets the chosen set in exactly that member.
    fn is_star(&self, chosen: u128) -> bool {
        let mut covered = 0u128;
        for &mask in self.masks {
            let hit = mask & chosen;
            if hit != 0 && hit & (hit - 1) == 0 {
                covered |= hit;
            }
        }
        covered == chosen
    }

    fn extend(&mut self, chosen: u128, size: usize, next: usize) {
        if size > self.best {
            self.best = size;
        }
        for b in next..self.n {
            if size + (self.n - b) <= self.best {
                return;
            }
            let with = chosen | (1u128 << b);
            // subsets of star sets are star sets, so infeasible branches die here
            if self.is_star(with) {
                self.extend(with, size + 1, b + 1);
            }
        }
    }
}

fn greedy_star(class: &HypothesisClass, hstar: &Hypothesis, candidates: &[usize]) -> usize {
    let mut chosen: Vec<usize> = Vec::new();
    let valid = |set: &[usize]| {
        set.iter().all(|&x| {
            class.hypotheses().iter().any(|h| set.iter().all(|&z| (h.predict(z) != hstar.predict(z)) == (z == x)))
        })
    };
    for &x in candidates {
        chosen.push(x);
        if !valid(&chosen) {
            chosen.pop();
        }
    }
    chosen.len()
}

/// Unqualified star number: the maximum over every class member used as the
/// reference.
pub fn star_number_max(class: &HypothesisClass, cap: usize) -> Result<StarNumber> {
    let mut out = StarNumber { value: 0, lower_bound_only: false };
    for h in class.hypotheses() {
        let s = star_number(class, h, cap)?;
        out.value = out.value.max(s.value);
        out.lower_bound_only |= s.lower_bound_only;
    }
    Ok(out)
}

/// Mass of the disagreement region of closed balls around a reference, at
/// every distinct radius realized by the class.
#[derive(Debug, Clone, PartialEq)]
pub struct DisagreementProfile {
    pub reference: Hypothesis,
    /// Strictly increasing.
    pub radii: Vec<f64>,
    /// `masses[j]` is `Pr[DIS(B(h*, radii[j]))]`; non-decreasing.
    pub masses: Vec<f64>,
}

impl DisagreementProfile {
    pub fn new(d: &LabeledDistribution, class: &HypothesisClass, hstar: &Hypothesis) -> Result<Self> {
        let mut by_radius: Vec<(f64, usize)> = class
            .hypotheses()
            .iter()
            .enumerate()
            .map(|(j, h)| disagreement(hstar, h, d).map(|r| (r, j)))
            .collect::<Result<_>>()?;
        by_radius.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let m = class.num_points();
        let mut first: Vec<Option<Label>> = vec![None; m];
        let mut split = vec![false; m];
        let mut radii = Vec::new();
        let mut masses = Vec::new();
        let mut pos = 0;
        while pos < by_radius.len() {
            let r = by_radius[pos].0;
            while pos < by_radius.len() && by_radius[pos].0 == r {
                let h = class.hypothesis(by_radius[pos].1);
                for x in 0..m {
                    match first[x] {
                        None => first[x] = Some(h.predict(x)),
                        Some(l) if l != h.predict(x) => split[x] = true,
                        _ => {}
                    }
                }
                pos += 1;
            }
            radii.push(r);
            masses.push(exact_sum((0..m).filter(|&x| split[x]).map(|x| d.marginal()[x])));
        }
        Ok(DisagreementProfile { reference: hstar.clone(), radii, masses })
    }

    /// DIS mass of the closed ball of radius `r`.
    pub fn mass_at(&self, r: f64) -> f64 {
        let count = self.radii.partition_point(|&rad| rad <= r);
        if count == 0 {
            0.0
        } else {
            self.masses[count - 1]
        }
    }

    /// `sup_{r ≥ r0} Pr[DIS(B(h*, r))] / r`, evaluated at `r0` and at every
    /// realized radius above it.
    pub fn coefficient(&self, r0: f64) -> Result<f64> {
        if !(r0 > 0.0) {
            return Err(invalid(format!("disagreement coefficient needs r0 > 0, got {r0}")));
        }
        let mut best = self.mass_at(r0) / r0;
        for (&r, &mass) in self.radii.iter().zip(&self.masses) {
            if r > r0 {
                best = best.max(mass / r);
            }
        }
        assert!(best <= (1.0 + 1e-9) / r0, "coefficient {best} exceeds 1/r0 at r0 = {r0}");
        Ok(best)
    }
}

pub fn disagreement_coefficient(
    d: &LabeledDistribution,
    class: &HypothesisClass,
    hstar: &Hypothesis,
    r0: f64,
) -> Result<f64> {
    DisagreementProfile::new(d, class, hstar)?.coefficient(r0)
}

/// Largest disagreement coefficient across the instance's distributions.
pub fn theta_max(inst: &MdlInstance, hstar: &Hypothesis, r0: f64) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for d in inst.distributions() {
        best = best.max(disagreement_coefficient(d, inst.class(), hstar, r0)?);
    }
    Ok(best)
}
