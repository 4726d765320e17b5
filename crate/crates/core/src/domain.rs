//! Finite-support domain types and exact error/disagreement metrics.
//!
//! Points of the feature space are indices `0..m`. Labels are `-1`/`+1`
//! stored as `i8`. Distributions are kept factorized as a marginal pmf over
//! points plus the conditional probability of label `+1` at each point; the
//! joint pmf is derived on demand.

use crate::error::{check_index, Error, Result};

pub type Label = i8;

pub const NEG: Label = -1;
pub const POS: Label = 1;

/// Slack allowed on the total mass of a marginal pmf.
pub const PMF_TOLERANCE: f64 = 1e-12;

/// Tolerance for comparing a declared optimal error against the computed one.
pub const NU_TOLERANCE: f64 = 1e-9;

/// Neumaier compensated summation. All masses and losses go through this so
/// that sums of round decimals come out correctly rounded.
pub fn exact_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

fn check_label(v: i64) -> Result<Label> {
    match v {
        -1 => Ok(NEG),
        1 => Ok(POS),
        other => Err(Error::InvalidLabel(other)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSpace(usize);

impl FeatureSpace {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidParameter("feature space must have at least one point".into()));
        }
        Ok(FeatureSpace(size))
    }

    pub fn size(self) -> usize {
        self.0
    }
}

/// A total labeling of the feature space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Hypothesis {
    labels: Vec<Label>,
}

impl Hypothesis {
    pub fn new(labels: Vec<Label>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidParameter("hypothesis over an empty feature space".into()));
        }
        for &l in &labels {
            check_label(l as i64)?;
        }
        Ok(Hypothesis { labels })
    }

    /// Builds a hypothesis from wide integers, rejecting anything but `±1`.
    pub fn from_ints(values: &[i64]) -> Result<Self> {
        let labels = values.iter().map(|&v| check_label(v)).collect::<Result<Vec<_>>>()?;
        Hypothesis::new(labels)
    }

    pub fn constant(m: usize, label: Label) -> Result<Self> {
        Hypothesis::new(vec![label; m])
    }

    /// Copy of `self` with the labels at `points` negated.
    pub fn with_flips(&self, points: &[usize]) -> Result<Self> {
        let mut labels = self.labels.clone();
        for &x in points {
            check_index("point", x, labels.len())?;
            labels[x] = -labels[x];
        }
        Ok(Hypothesis { labels })
    }

    #[inline]
    pub fn predict(&self, x: usize) -> Label {
        self.labels[x]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn num_points(&self) -> usize {
        self.labels.len()
    }

    pub fn negated(&self) -> Hypothesis {
        Hypothesis { labels: self.labels.iter().map(|l| -l).collect() }
    }
}

/// An ordered list of distinct hypotheses over a common feature space. The
/// order is the canonical tie-break order everywhere in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisClass {
    space: FeatureSpace,
    hypotheses: Vec<Hypothesis>,
}

impl HypothesisClass {
    pub fn new(hypotheses: Vec<Hypothesis>) -> Result<Self> {
        let first = hypotheses.first().ok_or(Error::EmptyClass)?;
        let space = FeatureSpace::new(first.num_points())?;
        let mut seen = std::collections::HashMap::with_capacity(hypotheses.len());
        for (i, h) in hypotheses.iter().enumerate() {
            if h.num_points() != space.size() {
                return Err(Error::DimensionMismatch { expected: space.size(), found: h.num_points() });
            }
            if let Some(&j) = seen.get(h.labels()) {
                return Err(Error::DuplicateHypothesis { first: j, second: i });
            }
            seen.insert(h.labels(), i);
        }
        Ok(HypothesisClass { space, hypotheses })
    }

    pub fn space(&self) -> FeatureSpace {
        self.space
    }

    pub fn num_points(&self) -> usize {
        self.space.size()
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    pub fn get(&self, index: usize) -> Result<&Hypothesis> {
        check_index("hypothesis", index, self.hypotheses.len())?;
        Ok(&self.hypotheses[index])
    }

    /// Unchecked access for hot loops; callers hold indices produced by this class.
    #[inline]
    pub fn hypothesis(&self, index: usize) -> &Hypothesis {
        &self.hypotheses[index]
    }

    pub fn hypotheses(&self) -> &[Hypothesis] {
        &self.hypotheses
    }

    pub fn index_of(&self, h: &Hypothesis) -> Option<usize> {
        self.hypotheses.iter().position(|g| g == h)
    }

    pub fn full_version_space(&self) -> VersionSpace {
        VersionSpace { members: (0..self.len()).collect() }
    }
}

/// A subset of a hypothesis class, held as a sorted set of class indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VersionSpace {
    members: Vec<usize>,
}

impl VersionSpace {
    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        VersionSpace { members: indices }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.binary_search(&index).is_ok()
    }

    pub fn is_subset_of(&self, other: &VersionSpace) -> bool {
        self.members.iter().all(|&i| other.contains(i))
    }

    pub fn first(&self) -> Option<usize> {
        self.members.first().copied()
    }

    pub fn retain(&self, mut keep: impl FnMut(usize) -> bool) -> VersionSpace {
        VersionSpace { members: self.members.iter().copied().filter(|&i| keep(i)).collect() }
    }

    /// DIS/AGR split of the feature space induced by this version space.
    pub fn region_map(&self, class: &HypothesisClass) -> Result<RegionMap> {
        disagreement_region(class, self)
    }
}

/// Per-point view of a version space: `None` marks the disagreement region,
/// `Some(label)` the unanimous label on the agreement region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    unanimous: Vec<Option<Label>>,
}

impl RegionMap {
    pub fn from_labels(unanimous: Vec<Option<Label>>) -> Self {
        RegionMap { unanimous }
    }

    pub fn num_points(&self) -> usize {
        self.unanimous.len()
    }

    #[inline]
    pub fn in_disagreement(&self, x: usize) -> bool {
        self.unanimous[x].is_none()
    }

    /// The common label of the version space at `x`, if `x` is in AGR.
    #[inline]
    pub fn agreed_label(&self, x: usize) -> Option<Label> {
        self.unanimous[x]
    }

    pub fn disagreement_points(&self) -> Vec<usize> {
        (0..self.unanimous.len()).filter(|&x| self.unanimous[x].is_none()).collect()
    }

    pub fn agreement_points(&self) -> Vec<usize> {
        (0..self.unanimous.len()).filter(|&x| self.unanimous[x].is_some()).collect()
    }

    pub fn disagreement_mass(&self, d: &LabeledDistribution) -> f64 {
        exact_sum((0..self.unanimous.len()).filter(|&x| self.unanimous[x].is_none()).map(|x| d.marginal()[x]))
    }

    pub fn agreement_mass(&self, d: &LabeledDistribution) -> f64 {
        exact_sum((0..self.unanimous.len()).filter(|&x| self.unanimous[x].is_some()).map(|x| d.marginal()[x]))
    }
}

/// A distribution over `X × {-1,+1}` stored as marginal plus `P(y=+1 | x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDistribution {
    marginal: Vec<f64>,
    eta_plus: Vec<f64>,
}

impl LabeledDistribution {
    pub fn new(marginal: Vec<f64>, eta_plus: Vec<f64>) -> Result<Self> {
        if marginal.is_empty() {
            return Err(Error::InvalidDistribution("empty marginal".into()));
        }
        if marginal.len() != eta_plus.len() {
            return Err(Error::DimensionMismatch { expected: marginal.len(), found: eta_plus.len() });
        }
        for (x, &p) in marginal.iter().enumerate() {
            if !p.is_finite() || p < 0.0 {
                return Err(Error::InvalidDistribution(format!("marginal[{x}] = {p} is not a probability")));
            }
        }
        for (x, &e) in eta_plus.iter().enumerate() {
            if !(0.0..=1.0).contains(&e) {
                return Err(Error::InvalidDistribution(format!("eta_plus[{x}] = {e} outside [0,1]")));
            }
        }
        let total = exact_sum(marginal.iter().copied());
        if (total - 1.0).abs() > PMF_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("marginal sums to {total}")));
        }
        Ok(LabeledDistribution { marginal, eta_plus })
    }

    /// Uniform marginal over `support`, labels from `eta_plus`.
    pub fn uniform_on(support: &[usize], eta_plus: Vec<f64>) -> Result<Self> {
        let m = eta_plus.len();
        if support.is_empty() {
            return Err(Error::InvalidDistribution("uniform over an empty support".into()));
        }
        let mut marginal = vec![0.0; m];
        let p = 1.0 / support.len() as f64;
        for &x in support {
            check_index("point", x, m)?;
            marginal[x] = p;
        }
        LabeledDistribution::new(marginal, eta_plus)
    }

    /// Convex combination of distributions over a shared feature space. The
    /// conditional label probability at each point is the mass-weighted one.
    pub fn mixture(parts: &[(&LabeledDistribution, f64)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidDistribution("empty mixture".into()))?;
        let m = first.0.num_points();
        let mut marginal = vec![0.0; m];
        let mut plus = vec![0.0; m];
        for x in 0..m {
            let mut mass = Vec::with_capacity(parts.len());
            let mut pos = Vec::with_capacity(parts.len());
            for (d, w) in parts {
                if d.num_points() != m {
                    return Err(Error::DimensionMismatch { expected: m, found: d.num_points() });
                }
                mass.push(w * d.marginal[x]);
                pos.push(w * d.marginal[x] * d.eta_plus[x]);
            }
            marginal[x] = exact_sum(mass);
            plus[x] = exact_sum(pos);
        }
        let eta_plus = marginal
            .iter()
            .zip(&plus)
            .enumerate()
            .map(|(x, (&mx, &px))| {
                if mx > 0.0 {
                    (px / mx).clamp(0.0, 1.0)
                } else {
                    // unsupported point: keep the first component's conditional
                    first.0.eta_plus[x]
                }
            })
            .collect();
        LabeledDistribution::new(marginal, eta_plus)
    }

    pub fn num_points(&self) -> usize {
        self.marginal.len()
    }

    pub fn marginal(&self) -> &[f64] {
        &self.marginal
    }

    pub fn eta_plus(&self) -> &[f64] {
        &self.eta_plus
    }

    /// Joint probability `D(x, y)`.
    pub fn joint(&self, x: usize, y: Label) -> f64 {
        if y == POS {
            self.marginal[x] * self.eta_plus[x]
        } else {
            self.marginal[x] * (1.0 - self.eta_plus[x])
        }
    }

    pub fn mass_where(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        exact_sum((0..self.marginal.len()).filter(|&x| pred(x)).map(|x| self.marginal[x]))
    }

    /// True when every supported point carries a deterministic label.
    pub fn is_noiseless(&self) -> bool {
        self.marginal.iter().zip(&self.eta_plus).all(|(&m, &e)| m == 0.0 || e == 0.0 || e == 1.0)
    }
}

/// `k` distributions over a common feature space plus a finite class.
#[derive(Debug, Clone, PartialEq)]
pub struct MdlInstance {
    class: HypothesisClass,
    distributions: Vec<LabeledDistribution>,
    declared_nu: Option<f64>,
}

impl MdlInstance {
    pub fn new(
        class: HypothesisClass,
        distributions: Vec<LabeledDistribution>,
        declared_nu: Option<f64>,
    ) -> Result<Self> {
        if distributions.is_empty() {
            return Err(Error::InvalidParameter("an instance needs at least one distribution".into()));
        }
        let m = class.num_points();
        for d in &distributions {
            if d.num_points() != m {
                return Err(Error::DimensionMismatch { expected: m, found: d.num_points() });
            }
        }
        let inst = MdlInstance { class, distributions, declared_nu };
        if let Some(declared) = declared_nu {
            let (_, computed) = best_nu(&inst);
            if !declared.is_finite() || (declared - computed).abs() > NU_TOLERANCE {
                return Err(Error::NuMismatch { declared, computed });
            }
        }
        Ok(inst)
    }

    pub fn class(&self) -> &HypothesisClass {
        &self.class
    }

    pub fn distributions(&self) -> &[LabeledDistribution] {
        &self.distributions
    }

    pub fn distribution(&self, i: usize) -> Result<&LabeledDistribution> {
        check_index("distribution", i, self.distributions.len())?;
        Ok(&self.distributions[i])
    }

    pub fn k(&self) -> usize {
        self.distributions.len()
    }

    pub fn num_points(&self) -> usize {
        self.class.num_points()
    }

    pub fn declared_nu(&self) -> Option<f64> {
        self.declared_nu
    }

    /// The uniform average of the instance's distributions.
    pub fn average_distribution(&self) -> Result<LabeledDistribution> {
        let w = 1.0 / self.k() as f64;
        let parts: Vec<_> = self.distributions.iter().map(|d| (d, w)).collect();
        LabeledDistribution::mixture(&parts)
    }

    pub fn is_noiseless(&self) -> bool {
        self.distributions.iter().all(LabeledDistribution::is_noiseless)
    }
}

/// Anything that predicts `+1` at each point with some probability. Pure
/// hypotheses use rates in `{0, 1}`; mixtures use the fraction of their
/// support voting `+1`.
pub trait Classifier {
    fn num_points(&self) -> usize;
    fn plus_rate(&self, x: usize) -> f64;
}

impl Classifier for Hypothesis {
    fn num_points(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    fn plus_rate(&self, x: usize) -> f64 {
        if self.labels[x] == POS {
            1.0
        } else {
            0.0
        }
    }
}

/// Uniform randomization over a multiset of class members, stored as
/// distinct indices with multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizedHypothesis {
    members: Vec<usize>,
    multiplicity: Vec<u64>,
}

impl RandomizedHypothesis {
    /// Uniform over `support` (duplicates count with multiplicity).
    pub fn uniform(support: &[usize]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidParameter("randomized hypothesis with empty support".into()));
        }
        let mut sorted = support.to_vec();
        sorted.sort_unstable();
        let mut members = Vec::new();
        let mut multiplicity: Vec<u64> = Vec::new();
        for h in sorted {
            if members.last() == Some(&h) {
                *multiplicity.last_mut().unwrap() += 1;
            } else {
                members.push(h);
                multiplicity.push(1);
            }
        }
        Ok(RandomizedHypothesis { members, multiplicity })
    }

    pub fn pure(index: usize) -> Self {
        RandomizedHypothesis { members: vec![index], multiplicity: vec![1] }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn multiplicity(&self) -> &[u64] {
        &self.multiplicity
    }

    pub fn support_size(&self) -> u64 {
        self.multiplicity.iter().sum()
    }

    /// Fraction of the support equal to class member `index`.
    pub fn weight_of(&self, index: usize) -> f64 {
        match self.members.binary_search(&index) {
            Ok(pos) => self.multiplicity[pos] as f64 / self.support_size() as f64,
            Err(_) => 0.0,
        }
    }

    pub fn resolve(&self, class: &HypothesisClass) -> Result<Mixture> {
        let total = self.support_size() as f64;
        let m = class.num_points();
        let mut votes = vec![0u64; m];
        for (&h, &c) in self.members.iter().zip(&self.multiplicity) {
            let hyp = class.get(h)?;
            for (x, v) in votes.iter_mut().enumerate() {
                if hyp.predict(x) == POS {
                    *v += c;
                }
            }
        }
        Ok(Mixture { plus_rate: votes.into_iter().map(|v| v as f64 / total).collect() })
    }
}

/// A randomized hypothesis resolved against its class.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    plus_rate: Vec<f64>,
}

impl Classifier for Mixture {
    fn num_points(&self) -> usize {
        self.plus_rate.len()
    }

    #[inline]
    fn plus_rate(&self, x: usize) -> f64 {
        self.plus_rate[x]
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b })
    }
}

/// 0-1 loss of `h` under `d`.
pub fn loss<C: Classifier + ?Sized>(h: &C, d: &LabeledDistribution) -> Result<f64> {
    check_dims(d.num_points(), h.num_points())?;
    Ok(exact_sum((0..d.num_points()).map(|x| {
        let p = h.plus_rate(x);
        let e = d.eta_plus[x];
        d.marginal[x] * (p * (1.0 - e) + (1.0 - p) * e)
    })))
}

/// Largest per-distribution loss.
pub fn worst_loss<C: Classifier + ?Sized>(h: &C, inst: &MdlInstance) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for d in inst.distributions() {
        worst = worst.max(loss(h, d)?);
    }
    Ok(worst)
}

/// Probability under `d`'s marginal that independent draws of `a` and `b`
/// disagree.
pub fn disagreement<A, B>(a: &A, b: &B, d: &LabeledDistribution) -> Result<f64>
where
    A: Classifier + ?Sized,
    B: Classifier + ?Sized,
{
    check_dims(d.num_points(), a.num_points())?;
    check_dims(d.num_points(), b.num_points())?;
    Ok(exact_sum((0..d.num_points()).map(|x| {
        let p = a.plus_rate(x);
        let q = b.plus_rate(x);
        d.marginal[x] * (p * (1.0 - q) + (1.0 - p) * q)
    })))
}

/// The max-over-distributions disagreement metric.
pub fn max_disagreement<A, B>(a: &A, b: &B, inst: &MdlInstance) -> Result<f64>
where
    A: Classifier + ?Sized,
    B: Classifier + ?Sized,
{
    let mut worst = 0.0f64;
    for d in inst.distributions() {
        worst = worst.max(disagreement(a, b, d)?);
    }
    Ok(worst)
}

/// DIS/AGR split of the feature space for a non-empty version space.
pub fn disagreement_region(class: &HypothesisClass, v: &VersionSpace) -> Result<RegionMap> {
    let first = v.first().ok_or(Error::EmptyVersionSpace)?;
    for &i in v.members() {
        check_index("hypothesis", i, class.len())?;
    }
    let reference = class.hypothesis(first);
    let unanimous = (0..class.num_points())
        .map(|x| {
            let label = reference.predict(x);
            v.members().iter().all(|&i| class.hypothesis(i).predict(x) == label).then_some(label)
        })
        .collect();
    Ok(RegionMap { unanimous })
}

/// Exact minimizer of the worst-case loss over the class; ties go to the
/// lowest index.
pub fn best_nu(inst: &MdlInstance) -> (usize, f64) {
    best_nu_within(inst, &inst.class().full_version_space()).expect("class is non-empty")
}

/// [`best_nu`] restricted to a version space.
pub fn best_nu_within(inst: &MdlInstance, v: &VersionSpace) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for &i in v.members() {
        let l = worst_loss(inst.class().get(i)?, inst)?;
        if best.is_none_or(|(_, b)| l < b) {
            best = Some((i, l));
        }
    }
    best.ok_or(Error::EmptyVersionSpace)
}
