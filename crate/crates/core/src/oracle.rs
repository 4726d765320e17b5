//! Metered access to the instance: free unlabeled draws, counted label
//! queries, and the label-efficient samplers built on them.
//!
//! Every distribution `i` owns ChaCha stream `i` of the run seed; stream `k`
//! is reserved for learner-side randomness (mixture picks, resampling stored
//! pools). Both unlabeled draws and label answers for distribution `i` come
//! from stream `i`, in call order.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::active_df::AbstainingClassifier;
use crate::domain::{Label, MdlInstance, RegionMap, NEG, POS};
use crate::error::{check_index, Error, Result};

/// One answered label query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryRecord {
    pub dist: usize,
    pub point: usize,
    pub label: Label,
}

/// Per-run label and unlabeled-draw counters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryLedger {
    labels: Vec<u64>,
    unlabeled: Vec<u64>,
    transcript: Option<Vec<QueryRecord>>,
}

impl QueryLedger {
    pub fn new(k: usize, record_transcript: bool) -> Self {
        QueryLedger { labels: vec![0; k], unlabeled: vec![0; k], transcript: record_transcript.then(Vec::new) }
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn unlabeled(&self) -> &[u64] {
        &self.unlabeled
    }

    pub fn total_labels(&self) -> u64 {
        self.labels.iter().sum()
    }

    pub fn total_unlabeled(&self) -> u64 {
        self.unlabeled.iter().sum()
    }

    /// Label queries in call order; the cumulative count of entry `j` is `j + 1`.
    pub fn transcript(&self) -> Option<&[QueryRecord]> {
        self.transcript.as_deref()
    }
}

/// Labeled pair `(point, label)`.
pub type Example = (usize, Label);

/// Which distribution a passive routine sees when it asks for an example
/// from `D_i`.
#[derive(Debug, Clone, Copy)]
pub enum SampleSource<'a> {
    /// Fresh labeled draws from `D_i`.
    Direct,
    /// Query only inside the disagreement region of a version space; impute
    /// the unanimous label elsewhere.
    Induced(&'a RegionMap),
    /// Query only where the classifier abstains; use its prediction elsewhere.
    Imputed(&'a AbstainingClassifier),
    /// Query inside `DIS(V0)`; elsewhere resample the stored agreement pool
    /// of distribution `i`.
    Surrogate { region: &'a RegionMap, pools: &'a [Vec<Example>] },
}

/// Oracles `EX_i` and `O_i` for one run.
#[derive(Debug, Clone)]
pub struct OracleSet<'a> {
    instance: &'a MdlInstance,
    samplers: Vec<Option<WeightedIndex<f64>>>,
    streams: Vec<ChaCha8Rng>,
    ledger: QueryLedger,
}

impl<'a> OracleSet<'a> {
    pub fn new(instance: &'a MdlInstance, seed: u64) -> Self {
        Self::with_transcript(instance, seed, false)
    }

    pub fn with_transcript(instance: &'a MdlInstance, seed: u64, record: bool) -> Self {
        let k = instance.k();
        let samplers = instance.distributions().iter().map(|d| WeightedIndex::new(d.marginal()).ok()).collect();
        let streams = (0..=k)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(s as u64);
                rng
            })
            .collect();
        OracleSet { instance, samplers, streams, ledger: QueryLedger::new(k, record) }
    }

    pub fn instance(&self) -> &'a MdlInstance {
        self.instance
    }

    pub fn k(&self) -> usize {
        self.instance.k()
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    /// Randomness that is not attributable to any distribution's oracle.
    pub fn learner_rng(&mut self) -> &mut ChaCha8Rng {
        let k = self.instance.k();
        &mut self.streams[k]
    }

    /// `x ~ D_{i,X}`.
    pub fn draw_unlabeled(&mut self, i: usize) -> Result<usize> {
        check_index("distribution", i, self.k())?;
        let sampler = self.samplers[i]
            .as_ref()
            .ok_or_else(|| Error::InvalidDistribution(format!("distribution {i} has no sampleable mass")))?;
        let x = sampler.sample(&mut self.streams[i]);
        self.ledger.unlabeled[i] += 1;
        Ok(x)
    }

    /// `y ~ Pr_{D_i}(y | x)`; costs one label.
    pub fn query_label(&mut self, i: usize, x: usize) -> Result<Label> {
        check_index("distribution", i, self.k())?;
        let d = &self.instance.distributions()[i];
        check_index("point", x, d.num_points())?;
        let y = if self.streams[i].gen_bool(d.eta_plus()[x]) { POS } else { NEG };
        self.ledger.labels[i] += 1;
        if let Some(t) = self.ledger.transcript.as_mut() {
            t.push(QueryRecord { dist: i, point: x, label: y });
        }
        Ok(y)
    }

    /// A fresh labeled example from `D_i`.
    pub fn sample_labeled(&mut self, i: usize) -> Result<Example> {
        let x = self.draw_unlabeled(i)?;
        Ok((x, self.query_label(i, x)?))
    }

    /// An exact draw from the induced distribution of a version space.
    pub fn sample_induced(&mut self, i: usize, region: &RegionMap) -> Result<Example> {
        let x = self.draw_unlabeled(i)?;
        match region.agreed_label(x) {
            Some(y) => Ok((x, y)),
            None => Ok((x, self.query_label(i, x)?)),
        }
    }

    /// An exact draw from `D_i` with labels imputed by `f` where it commits.
    pub fn sample_imputed(&mut self, i: usize, f: &AbstainingClassifier) -> Result<Example> {
        let x = self.draw_unlabeled(i)?;
        match f.predict(x) {
            0 => Ok((x, self.query_label(i, x)?)),
            y => Ok((x, y)),
        }
    }

    /// A draw from the surrogate distribution: fresh labels on `DIS(V0)`, a
    /// uniform element of `pool` otherwise.
    pub fn sample_surrogate(&mut self, i: usize, region: &RegionMap, pool: &[Example]) -> Result<Example> {
        let x = self.draw_unlabeled(i)?;
        if region.in_disagreement(x) {
            Ok((x, self.query_label(i, x)?))
        } else if pool.is_empty() {
            // only reachable when AGR(V0) has positive mass
            Err(Error::EmptyPool { dist: i })
        } else {
            let j = self.learner_rng().gen_range(0..pool.len());
            Ok(pool[j])
        }
    }

    /// `n` labeled draws from `D_i` conditioned on `AGR(V0)`, by rejection.
    pub fn sample_conditional_agreement(&mut self, i: usize, region: &RegionMap, n: usize) -> Result<Vec<Example>> {
        let d = self.instance.distribution(i)?;
        if !(region.agreement_mass(d) > 0.0) {
            return Err(Error::DegenerateAgreement { dist: i });
        }
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x = self.draw_unlabeled(i)?;
            if !region.in_disagreement(x) {
                out.push((x, self.query_label(i, x)?));
            }
        }
        Ok(out)
    }

    /// One example from distribution `i` as seen through `source`.
    pub fn sample(&mut self, source: SampleSource<'_>, i: usize) -> Result<Example> {
        match source {
            SampleSource::Direct => self.sample_labeled(i),
            SampleSource::Induced(region) => self.sample_induced(i, region),
            SampleSource::Imputed(f) => self.sample_imputed(i, f),
            SampleSource::Surrogate { region, pools } => {
                let pool = pools.get(i).ok_or(Error::EmptyPool { dist: i })?;
                self.sample_surrogate(i, region, pool)
            }
        }
    }
}

/// Closed-form joint pmfs of the sampler output distributions, indexed as
/// `[2 * x + (y == +1)]`.
pub mod closed_form {
    use super::*;
    use crate::domain::LabeledDistribution;

    fn slot(x: usize, y: Label) -> usize {
        2 * x + usize::from(y == POS)
    }

    pub fn joint(d: &LabeledDistribution) -> Vec<f64> {
        let mut p = vec![0.0; 2 * d.num_points()];
        for x in 0..d.num_points() {
            p[slot(x, POS)] = d.joint(x, POS);
            p[slot(x, NEG)] = d.joint(x, NEG);
        }
        p
    }

    pub fn induced(d: &LabeledDistribution, region: &RegionMap) -> Vec<f64> {
        let mut p = vec![0.0; 2 * d.num_points()];
        for x in 0..d.num_points() {
            match region.agreed_label(x) {
                Some(y) => p[slot(x, y)] = d.marginal()[x],
                None => {
                    p[slot(x, POS)] = d.joint(x, POS);
                    p[slot(x, NEG)] = d.joint(x, NEG);
                }
            }
        }
        p
    }

    pub fn imputed(d: &LabeledDistribution, f: &AbstainingClassifier) -> Vec<f64> {
        let mut p = vec![0.0; 2 * d.num_points()];
        for x in 0..d.num_points() {
            match f.predict(x) {
                0 => {
                    p[slot(x, POS)] = d.joint(x, POS);
                    p[slot(x, NEG)] = d.joint(x, NEG);
                }
                y => p[slot(x, y)] = d.marginal()[x],
            }
        }
        p
    }

    /// `D'_i = D_i` on `DIS(V0)` plus `Pr[AGR(V0)]` times the empirical
    /// distribution of the pool.
    pub fn surrogate(d: &LabeledDistribution, region: &RegionMap, pool: &[Example]) -> Vec<f64> {
        let mut p = vec![0.0; 2 * d.num_points()];
        for x in region.disagreement_points() {
            p[slot(x, POS)] = d.joint(x, POS);
            p[slot(x, NEG)] = d.joint(x, NEG);
        }
        let agr = region.agreement_mass(d);
        for &(x, y) in pool {
            p[slot(x, y)] += agr / pool.len() as f64;
        }
        p
    }

    /// Empirical joint of observed pairs in the same layout.
    pub fn empirical(m: usize, draws: &[Example]) -> Vec<f64> {
        let mut p = vec![0.0; 2 * m];
        for &(x, y) in draws {
            p[slot(x, y)] += 1.0;
        }
        let n = draws.len().max(1) as f64;
        p.iter_mut().for_each(|v| *v /= n);
        p
    }

    pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
        0.5 * a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum::<f64>()
    }
}
