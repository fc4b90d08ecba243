//! Grid Bayes filter over the target location.
//!
//! Mass lives on free cells only. Every measurement update adds log
//! likelihoods to log mass and exponentiates once, so long runs of weak
//! evidence do not underflow.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::grounding::{GroundingError, GroundingModel, LikelihoodField};
use crate::map::{occupancy_grid, GridSpec, WorldMap};
use crate::math::{exp, log};
use crate::parser::SpatialObservation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FilterError {
    #[error("map has no free cells")]
    NoFreeCells,
    #[error("transition kernel row {row} sums to {sum}")]
    NonStochastic { row: usize, sum: f64 },
    #[error("expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("likelihood annihilates the prior; update skipped")]
    DegenerateUpdate,
    #[error("grounding: {0}")]
    Grounding(#[from] GroundingError),
}

/// One detector reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorObservation {
    pub robot: Point,
    pub detected: bool,
    pub step: usize,
}

/// `p(z | target at x)` for robot measurements.
pub trait SensorModel {
    fn likelihood(&self, z: &SensorObservation, x: Point) -> f64;
}

/// Omnidirectional detector with fixed true-positive and true-negative
/// rates inside a range, and no knowledge beyond it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeDetector {
    pub true_positive: f64,
    pub true_negative: f64,
    pub range: f64,
}

impl Default for RangeDetector {
    fn default() -> Self {
        Self { true_positive: 0.8, true_negative: 0.8, range: 25.0 }
    }
}

impl RangeDetector {
    pub fn in_range(&self, robot: Point, target: Point) -> bool {
        robot.dist(target) <= self.range
    }

    /// Probability of a positive reading given the target location.
    pub fn p_detect(&self, robot: Point, target: Point) -> f64 {
        if self.in_range(robot, target) {
            self.true_positive
        } else {
            1.0 - self.true_negative
        }
    }
}

impl SensorModel for RangeDetector {
    fn likelihood(&self, z: &SensorObservation, x: Point) -> f64 {
        let p = self.p_detect(z.robot, x);
        if z.detected {
            p
        } else {
            1.0 - p
        }
    }
}

/// Motion model for the prediction step, indexed over free cells in
/// row-major order.
#[derive(Debug, Clone, PartialEq)]
pub enum TransitionKernel {
    /// Static target.
    Identity,
    /// Row-stochastic `n × n` matrix, `k[i * n + j] = p(j | i)`.
    Dense { n: usize, k: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefGrid {
    spec: GridSpec,
    free: Vec<bool>,
    mass: Vec<f64>,
    /// Updates skipped because they would have zeroed the posterior.
    pub skipped_updates: usize,
}

impl BeliefGrid {
    /// Uniform prior over the free cells of `map`.
    pub fn init_prior(spec: &GridSpec, map: &WorldMap) -> Result<Self, FilterError> {
        let free: Vec<bool> = occupancy_grid(map, spec).iter().map(|o| !o).collect();
        Self::uniform(spec, free)
    }

    pub fn uniform(spec: &GridSpec, free: Vec<bool>) -> Result<Self, FilterError> {
        if free.len() != spec.len() {
            return Err(FilterError::ShapeMismatch { expected: spec.len(), got: free.len() });
        }
        let n = free.iter().filter(|f| **f).count();
        if n == 0 {
            return Err(FilterError::NoFreeCells);
        }
        let mass = free.iter().map(|&f| if f { 1.0 / n as f64 } else { 0.0 }).collect();
        Ok(Self { spec: *spec, free, mass, skipped_updates: 0 })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn free(&self) -> &[bool] {
        &self.free
    }

    pub fn free_count(&self) -> usize {
        self.free.iter().filter(|f| **f).count()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Chapman-Kolmogorov step: `mass' = Kᵀ mass`.
    pub fn predict(&mut self, kernel: &TransitionKernel) -> Result<(), FilterError> {
        let (n, k) = match kernel {
            TransitionKernel::Identity => return Ok(()),
            TransitionKernel::Dense { n, k } => (*n, k),
        };
        let idx: Vec<usize> = (0..self.mass.len()).filter(|&i| self.free[i]).collect();
        if n != idx.len() || k.len() != n * n {
            return Err(FilterError::ShapeMismatch { expected: idx.len() * idx.len(), got: k.len() });
        }
        for row in 0..n {
            let sum: f64 = k[row * n..(row + 1) * n].iter().sum();
            if (sum - 1.0).abs() > 1e-9 || k[row * n..(row + 1) * n].iter().any(|v| *v < 0.0) {
                return Err(FilterError::NonStochastic { row, sum });
            }
        }
        let mut out = vec![0.0; n];
        for (i, &ci) in idx.iter().enumerate() {
            let m = self.mass[ci];
            for j in 0..n {
                out[j] += k[i * n + j] * m;
            }
        }
        let total: f64 = out.iter().sum();
        for (j, &cj) in idx.iter().enumerate() {
            self.mass[cj] = out[j] / total;
        }
        Ok(())
    }

    /// Multiplies in the product of several per-cell likelihood vectors
    /// with one normalization. On failure the belief is untouched and the
    /// skip is counted.
    pub fn update_product(&mut self, likelihoods: &[&[f64]]) -> Result<(), FilterError> {
        for l in likelihoods {
            if l.len() != self.mass.len() {
                return Err(FilterError::ShapeMismatch { expected: self.mass.len(), got: l.len() });
            }
        }
        let mut logm: Vec<f64> = self
            .mass
            .iter()
            .zip(&self.free)
            .map(|(&m, &f)| if f && m > 0.0 { log(m) } else { f64::NEG_INFINITY })
            .collect();
        for l in likelihoods {
            for (lm, &v) in logm.iter_mut().zip(l.iter()) {
                if *lm != f64::NEG_INFINITY {
                    *lm = if v > 0.0 { *lm + log(v) } else { f64::NEG_INFINITY };
                }
            }
        }
        let top = logm.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            self.skipped_updates += 1;
            return Err(FilterError::DegenerateUpdate);
        }
        let w: Vec<f64> = logm.iter().map(|&v| if v == f64::NEG_INFINITY { 0.0 } else { exp(v - top) }).collect();
        let total: f64 = w.iter().sum();
        if !(total.is_finite() && total > 0.0) {
            self.skipped_updates += 1;
            return Err(FilterError::DegenerateUpdate);
        }
        for (m, v) in self.mass.iter_mut().zip(w) {
            *m = v / total;
        }
        Ok(())
    }

    pub fn update_likelihood(&mut self, likelihood: &[f64]) -> Result<(), FilterError> {
        self.update_product(&[likelihood])
    }

    pub fn update_sensor(&mut self, z: &SensorObservation, sensor: &dyn SensorModel) -> Result<(), FilterError> {
        let l: Vec<f64> = (0..self.spec.len()).map(|i| sensor.likelihood(z, self.spec.center_of(i))).collect();
        self.update_likelihood(&l)
    }

    /// Fuses one grounded observation; negation uses the complement field.
    pub fn update_field(&mut self, field: &LikelihoodField, negated: bool) -> Result<(), FilterError> {
        if field.spec != self.spec {
            return Err(FilterError::ShapeMismatch { expected: self.spec.len(), got: field.values.len() });
        }
        if negated {
            self.update_likelihood(&field.complement().values)
        } else {
            self.update_likelihood(&field.values)
        }
    }

    /// Grounds every observation of one sentence and fuses their product.
    /// Returns the fields actually applied, complemented where negated.
    pub fn update_language(
        &mut self,
        observations: &[SpatialObservation],
        map: &WorldMap,
        grounder: &dyn GroundingModel,
    ) -> Result<Vec<LikelihoodField>, FilterError> {
        let mut fields = Vec::with_capacity(observations.len());
        for o in observations {
            let f = grounder.ground_field(map, &o.landmark_id, o.relation, &self.spec)?;
            fields.push(if o.negated { f.complement() } else { f });
        }
        let views: Vec<&[f64]> = fields.iter().map(|f| f.values.as_slice()).collect();
        self.update_product(&views)?;
        Ok(fields)
    }

    /// Most probable free cell; ties go to the lowest row-major index.
    pub fn map_estimate(&self) -> (usize, Point) {
        let mut best = usize::MAX;
        for i in 0..self.mass.len() {
            if self.free[i] && (best == usize::MAX || self.mass[i] > self.mass[best]) {
                best = i;
            }
        }
        (best, self.spec.center_of(best))
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.mass.iter().filter(|m| **m > 0.0).map(|&m| m * log(m)).sum::<f64>()
    }

    /// Row-major mass, averaged into blocks so neither side exceeds
    /// `max_side`.
    pub fn downsampled(&self, max_side: usize) -> (usize, usize, Vec<f64>) {
        let f = self.spec.rows.max(self.spec.cols).div_ceil(max_side.max(1)).max(1);
        let (rows, cols) = (self.spec.rows.div_ceil(f), self.spec.cols.div_ceil(f));
        let mut out = vec![0.0; rows * cols];
        for r in 0..self.spec.rows {
            for c in 0..self.spec.cols {
                out[(r / f) * cols + c / f] += self.mass[self.spec.index(r, c)];
            }
        }
        (rows, cols, out)
    }
}

/// Serializable copy of a belief for rendering and export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefSnapshot {
    pub rows: usize,
    pub cols: usize,
    pub resolution: f64,
    pub map_cell: usize,
    pub entropy: f64,
    pub mass: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl From<&BeliefGrid> for BeliefSnapshot {
    fn from(b: &BeliefGrid) -> Self {
        BeliefSnapshot {
            rows: b.spec.rows,
            cols: b.spec.cols,
            resolution: b.spec.resolution,
            map_cell: b.map_estimate().0,
            entropy: b.entropy(),
            mass: b.mass.clone(),
            note: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expert::ExpertModel;
    use crate::map::synth::demo_map;
    use crate::parser::{parse, Lexicon};
    use crate::relation::Relation;
    use proptest::prelude::*;

    fn open(rows: usize, cols: usize) -> BeliefGrid {
        BeliefGrid::uniform(&GridSpec::new(rows, cols, 1.0), vec![true; rows * cols]).unwrap()
    }

    #[test]
    fn uniform_prior_and_its_entropy() {
        let map = demo_map();
        let spec = GridSpec::covering(&map, 1.0);
        let b = BeliefGrid::init_prior(&spec, &map).unwrap();
        let n = b.free_count();
        assert!(n < spec.len());
        for i in 0..spec.len() {
            let expect = if b.free()[i] { 1.0 / n as f64 } else { 0.0 };
            assert_eq!(b.mass()[i], expect);
        }
        assert!((b.entropy() - log(n as f64)).abs() < 1e-9);
        assert_eq!(b.map_estimate().0, 0);
        assert_eq!(
            BeliefGrid::uniform(&GridSpec::new(2, 2, 1.0), vec![false; 4]),
            Err(FilterError::NoFreeCells)
        );
    }

    #[test]
    fn entropy_of_a_small_distribution() {
        let mut b = open(1, 3);
        b.mass = vec![0.5, 0.25, 0.25];
        assert!((b.entropy() - 1.0397207708399179).abs() < 1e-12);
        b.mass = vec![0.0, 1.0, 0.0];
        assert_eq!(b.entropy(), 0.0);
        assert_eq!(b.map_estimate().0, 1);
    }

    #[test]
    fn two_cell_bayes_rule() {
        let mut b = open(1, 2);
        b.update_likelihood(&[0.8, 0.2]).unwrap();
        assert!((b.mass()[0] - 0.8).abs() < 1e-15 && (b.mass()[1] - 0.2).abs() < 1e-15);
        let before = b.clone();
        b.update_likelihood(&[0.3, 0.3]).unwrap();
        for (x, y) in b.mass().iter().zip(before.mass()) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_update_is_skipped_and_counted() {
        let mut b = open(1, 3);
        let before = b.mass().to_vec();
        assert_eq!(b.update_likelihood(&[0.0, 0.0, 0.0]), Err(FilterError::DegenerateUpdate));
        assert_eq!(b.mass(), &before[..]);
        assert_eq!(b.skipped_updates, 1);
        assert!(matches!(b.update_likelihood(&[0.5]), Err(FilterError::ShapeMismatch { .. })));
    }

    #[test]
    fn no_detection_scales_near_and_far_cells() {
        let mut b = open(1, 40);
        let z = SensorObservation { robot: Point::new(0.5, 0.5), detected: false, step: 0 };
        b.update_sensor(&z, &RangeDetector::default()).unwrap();
        // centers 0.5..=25.5 are within 25 m: 26 cells at 0.2, 14 at 0.8
        let total = 26.0 * 0.2 + 14.0 * 0.8;
        assert!((b.mass()[0] - 0.2 / total).abs() < 1e-15);
        assert!((b.mass()[39] - 0.8 / total).abs() < 1e-15);
    }

    #[test]
    fn prediction_kernels() {
        let mut b = open(1, 3);
        b.mass = vec![0.7, 0.2, 0.1];
        b.predict(&TransitionKernel::Identity).unwrap();
        assert_eq!(b.mass(), &[0.7, 0.2, 0.1]);
        // symmetric diffusion: stay 0.9 in the middle, 0.1 leaks to each neighbour
        let k = vec![0.9, 0.1, 0.0, 0.1, 0.8, 0.1, 0.0, 0.1, 0.9];
        b.predict(&TransitionKernel::Dense { n: 3, k }).unwrap();
        let expect = [0.7 * 0.9 + 0.2 * 0.1, 0.7 * 0.1 + 0.2 * 0.8 + 0.1 * 0.1, 0.2 * 0.1 + 0.1 * 0.9];
        for (x, y) in b.mass().iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
        b.predict(&TransitionKernel::Dense { n: 3, k: vec![1.0 / 3.0; 9] }).unwrap();
        assert!(b.mass().iter().all(|m| (m - 1.0 / 3.0).abs() < 1e-15));
        let bad = TransitionKernel::Dense { n: 3, k: vec![0.5; 9] };
        assert!(matches!(b.predict(&bad), Err(FilterError::NonStochastic { row: 0, .. })));
    }

    #[test]
    fn negated_constant_field_leaves_belief_uniform() {
        let spec = GridSpec::new(4, 4, 1.0);
        let mut b = open(4, 4);
        let field = LikelihoodField { spec, relation: Relation::Near, landmark_id: "b1".into(), values: vec![0.99; 16] };
        b.update_field(&field, true).unwrap();
        assert!(b.mass().iter().all(|m| (m - 1.0 / 16.0).abs() < 1e-15));
    }

    fn sentence(b: &mut BeliefGrid, text: &str, model: &ExpertModel) -> Vec<LikelihoodField> {
        let map = demo_map();
        let obs = parse(text, &Lexicon::from_map(&map)).unwrap();
        b.update_language(&obs, &map, model).unwrap()
    }

    fn median(xs: &[f64]) -> f64 {
        let mut v = xs.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        v[v.len() / 2]
    }

    #[test]
    fn three_sentences_on_the_demo_map_concentrate_the_posterior() {
        let map = demo_map();
        let spec = GridSpec::covering(&map, 1.0);
        let model = ExpertModel::default();
        let mut b = BeliefGrid::init_prior(&spec, &map).unwrap();
        let mut entropies = vec![b.entropy()];
        let mut fields = Vec::new();
        for s in ["you can find the bag around building 4", "the bag is close to building 6", "the bag's not in front of building 5"] {
            fields.extend(sentence(&mut b, s, &model));
            entropies.push(b.entropy());
        }
        assert!(entropies.windows(2).all(|w| w[1] < w[0]), "{entropies:?}");
        let (cell, _) = b.map_estimate();
        let free: Vec<usize> = (0..spec.len()).filter(|&i| b.free()[i]).collect();
        for f in &fields {
            let vals: Vec<f64> = free.iter().map(|&i| f.values[i]).collect();
            let m = median(&vals);
            // a field saturated at its ceiling over most of the map has median == max
            let top = vals.iter().copied().fold(0.0, f64::max);
            assert!(f.values[cell] > m || (m == top && f.values[cell] == top), "{:?} at MAP", f.relation);
        }
    }

    fn random_field(spec: GridSpec, vals: Vec<f64>) -> LikelihoodField {
        LikelihoodField { spec, relation: Relation::Near, landmark_id: "b1".into(), values: vals }
    }

    #[derive(Debug, Clone)]
    enum Step {
        Sensor { robot: (f64, f64), detected: bool },
        Language { values: Vec<f64>, negated: bool },
    }

    fn step_strategy() -> impl Strategy<Value = Step> {
        prop_oneof![
            ((0.0f64..8.0, 0.0f64..8.0), any::<bool>()).prop_map(|(robot, detected)| Step::Sensor { robot, detected }),
            (proptest::collection::vec(0.01f64..0.99, 64), any::<bool>())
                .prop_map(|(values, negated)| Step::Language { values, negated }),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        /// The recursive filter against Bayes' rule on the full joint:
        /// prior times every likelihood, normalized once at the end.
        #[test]
        fn filter_matches_joint_enumeration(
            free in proptest::collection::vec(prop::bool::weighted(0.85), 64),
            steps in proptest::collection::vec(step_strategy(), 1..=6),
            range in 1.0f64..6.0,
        ) {
            prop_assume!(free.iter().any(|f| *f));
            let spec = GridSpec::new(8, 8, 1.0);
            let sensor = RangeDetector { range, ..RangeDetector::default() };
            let mut b = BeliefGrid::uniform(&spec, free.clone()).unwrap();
            let mut joint: Vec<f64> = free.iter().map(|&f| if f { 1.0 } else { 0.0 }).collect();
            for (k, s) in steps.iter().enumerate() {
                match s {
                    Step::Sensor { robot, detected } => {
                        let z = SensorObservation { robot: Point::new(robot.0, robot.1), detected: *detected, step: k };
                        b.update_sensor(&z, &sensor).unwrap();
                        for (i, j) in joint.iter_mut().enumerate() {
                            let c = spec.center_of(i);
                            let inside = (c.x - robot.0).hypot(c.y - robot.1) <= range;
                            let pd = if inside { 0.8 } else { 0.2 };
                            *j *= if *detected { pd } else { 1.0 - pd };
                        }
                    }
                    Step::Language { values, negated } => {
                        b.update_field(&random_field(spec, values.clone()), *negated).unwrap();
                        for (j, v) in joint.iter_mut().zip(values) {
                            *j *= if *negated { 1.0 - v } else { *v };
                        }
                    }
                }
                prop_assert!((b.total() - 1.0).abs() < 1e-9);
            }
            let z: f64 = joint.iter().sum();
            for (m, j) in b.mass().iter().zip(&joint) {
                prop_assert!((m - j / z).abs() < 1e-12, "{} vs {}", m, j / z);
            }
        }

        #[test]
        fn language_updates_commute(
            a in proptest::collection::vec(0.01f64..0.99, 64),
            c in proptest::collection::vec(0.01f64..0.99, 64),
            na in any::<bool>(),
            nc in any::<bool>(),
        ) {
            let spec = GridSpec::new(8, 8, 1.0);
            let (fa, fc) = (random_field(spec, a), random_field(spec, c));
            let mut x = open(8, 8);
            let mut y = open(8, 8);
            x.update_field(&fa, na).unwrap();
            x.update_field(&fc, nc).unwrap();
            y.update_field(&fc, nc).unwrap();
            y.update_field(&fa, na).unwrap();
            for (p, q) in x.mass().iter().zip(y.mass()) {
                prop_assert!((p - q).abs() < 1e-12);
            }
        }

        #[test]
        fn map_estimate_ignores_positive_rescaling(vals in proptest::collection::vec(0.01f64..10.0, 16), k in 0.1f64..100.0) {
            let mut a = open(4, 4);
            let mut b = open(4, 4);
            a.update_likelihood(&vals).unwrap();
            let scaled: Vec<f64> = vals.iter().map(|v| v * k).collect();
            b.update_likelihood(&scaled).unwrap();
            prop_assert_eq!(a.map_estimate().0, b.map_estimate().0);
        }
    }
}
