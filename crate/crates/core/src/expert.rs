//! Rule-based likelihoods per relation, their maximum-likelihood fit, and
//! the uniform chance baseline.
//!
//! Every form is built from the signed distance `d` to the landmark and its
//! diameter `D`. The proximity sigmoid is `s = σ((ρD − d)/τ)`:
//!
//! | relation | value |
//! |---|---|
//! | near, close_to, by, next_to, beside | `s` |
//! | at | `s`, or `1` when `d ≤ 0` |
//! | far_from | `1 − s` |
//! | in_front_of | `s · max_e exp(κ(cos θ_e − 1))` |
//! | behind | as in_front_of with every front direction reversed |
//! | around | `exp(−(d − w)² / 2τ²)` outside, floor inside |
//!
//! `θ_e` is the angle between entrance `e`'s outward normal and `x − e`.
//! Landmarks without entrances drop the angular factor. All values are
//! clamped to `[ε, 1 − ε]`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cell::RefCell;

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::geometry::Point;
use crate::grounding::{GroundingError, GroundingModel, LikelihoodField, DEFAULT_FLOOR};
use crate::map::{occupancy_grid, GridSpec, Landmark, WorldMap};
use crate::math::{clamp, exp, log, sigmoid};
use crate::relation::Relation;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExpertError {
    #[error("invalid parameter {name} = {value} for {relation}")]
    InvalidParams { relation: Relation, name: &'static str, value: f64 },
    #[error("probability floor {0} outside (0, 0.05]")]
    InvalidFloor(f64),
    #[error("single-class labels for {0}")]
    Degenerate(Relation),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("unknown map {0:?}")]
    UnknownMap(String),
    #[error("unknown landmark {0:?}")]
    UnknownLandmark(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationParams {
    /// Proximity scale as a multiple of the landmark diameter.
    pub rho: f64,
    /// Softness in meters.
    pub tau: f64,
    /// Angular concentration (in_front_of and behind only).
    pub kappa: f64,
    /// Annulus radius in meters (around only).
    pub width: f64,
}

impl RelationParams {
    pub const fn new(rho: f64, tau: f64, kappa: f64, width: f64) -> Self {
        Self { rho, tau, kappa, width }
    }

    pub fn default_for(relation: Relation) -> Self {
        match relation {
            Relation::At => Self::new(0.05, 1.0, 0.0, 1.0),
            Relation::Near => Self::new(0.5, 3.0, 0.0, 1.0),
            Relation::CloseTo => Self::new(0.4, 2.5, 0.0, 1.0),
            Relation::FarFrom => Self::new(1.0, 5.0, 0.0, 1.0),
            Relation::InFrontOf => Self::new(0.6, 3.0, 2.0, 1.0),
            Relation::Behind => Self::new(0.6, 3.0, 2.0, 1.0),
            Relation::NextTo => Self::new(0.25, 2.0, 0.0, 1.0),
            Relation::Beside => Self::new(0.25, 2.0, 0.0, 1.0),
            Relation::By => Self::new(0.3, 2.0, 0.0, 1.0),
            Relation::Around => Self::new(1.0, 3.0, 0.0, 5.0),
        }
    }

    fn validate(&self, relation: Relation) -> Result<(), ExpertError> {
        let bad = |name, value| Err(ExpertError::InvalidParams { relation, name, value });
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return bad("rho", self.rho);
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return bad("tau", self.tau);
        }
        if !(self.kappa.is_finite() && self.kappa >= 0.0) {
            return bad("kappa", self.kappa);
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return bad("width", self.width);
        }
        Ok(())
    }
}

/// Parameters for all relations plus the shared probability floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertParams {
    pub floor: f64,
    pub relations: BTreeMap<Relation, RelationParams>,
}

impl Default for ExpertParams {
    fn default() -> Self {
        Self {
            floor: DEFAULT_FLOOR,
            relations: Relation::ALL.iter().map(|&r| (r, RelationParams::default_for(r))).collect(),
        }
    }
}

impl ExpertParams {
    pub fn get(&self, relation: Relation) -> RelationParams {
        self.relations.get(&relation).copied().unwrap_or_else(|| RelationParams::default_for(relation))
    }

    pub fn set(&mut self, relation: Relation, p: RelationParams) {
        self.relations.insert(relation, p);
    }

    pub fn validate(&self) -> Result<(), ExpertError> {
        if !(self.floor > 0.0 && self.floor <= 0.05) {
            return Err(ExpertError::InvalidFloor(self.floor));
        }
        for (&r, p) in &self.relations {
            p.validate(r)?;
        }
        Ok(())
    }
}

/// Geometry of a location relative to one landmark; everything the
/// likelihood forms read.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Features {
    pub d: f64,
    pub diameter: f64,
    /// Largest `cos θ_e` over entrances, `None` without entrances.
    pub front_cos: Option<f64>,
    /// Largest `cos θ_e` with reversed normals.
    pub back_cos: Option<f64>,
}

impl Features {
    pub fn new(x: Point, lm: &Landmark) -> Self {
        Self::with_fronts(x, lm, &lm.front_directions())
    }

    /// As [`Features::new`] with precomputed front directions.
    pub fn with_fronts(x: Point, lm: &Landmark, fronts: &[Point]) -> Self {
        let mut front: Option<f64> = None;
        let mut back: Option<f64> = None;
        for (e, n) in lm.entrances.iter().zip(fronts) {
            // at the entrance itself the direction is undefined; count it as in front
            let c = (x - *e).normalized().map_or(1.0, |v| v.dot(*n));
            front = Some(front.map_or(c, |f| f.max(c)));
            back = Some(back.map_or(-c, |b| b.max(-c)));
        }
        Self { d: lm.signed_distance(x), diameter: lm.diameter(), front_cos: front, back_cos: back }
    }
}

/// Unclamped value and its gradient with respect to
/// `(ln ρ or ln w, ln τ, ln κ)`.
fn raw_and_grad(relation: Relation, p: &RelationParams, f: &Features, eps: f64) -> (f64, [f64; 3]) {
    let z = (p.rho * f.diameter - f.d) / p.tau;
    let s = sigmoid(z);
    let ds = s * (1.0 - s);
    let dz = [p.rho * f.diameter / p.tau, -z];
    let angular = |cos: Option<f64>| match cos {
        Some(c) => {
            let a = exp(p.kappa * (c - 1.0));
            (s * a, [a * ds * dz[0], a * ds * dz[1], s * a * p.kappa * (c - 1.0)])
        }
        None => (s, [ds * dz[0], ds * dz[1], 0.0]),
    };
    match relation {
        Relation::At if f.d <= 0.0 => (1.0, [0.0; 3]),
        Relation::FarFrom => (1.0 - s, [-ds * dz[0], -ds * dz[1], 0.0]),
        Relation::InFrontOf => angular(f.front_cos),
        Relation::Behind => angular(f.back_cos),
        Relation::Around => {
            if f.d <= 0.0 {
                return (eps, [0.0; 3]);
            }
            let u = (f.d - p.width) / p.tau;
            let v = exp(-0.5 * u * u);
            (v, [v * u * p.width / p.tau, v * u * u, 0.0])
        }
        _ => (s, [ds * dz[0], ds * dz[1], 0.0]),
    }
}

/// Value before the floor clamp.
pub fn raw_likelihood(relation: Relation, p: &RelationParams, f: &Features) -> f64 {
    raw_and_grad(relation, p, f, 0.0).0
}

pub fn likelihood_from_features(relation: Relation, params: &ExpertParams, f: &Features) -> f64 {
    let eps = params.floor;
    clamp(raw_and_grad(relation, &params.get(relation), f, eps).0, eps, 1.0 - eps)
}

/// Probability that `relation` to `lm` describes location `x`.
pub fn expert_likelihood(
    relation: Relation,
    x: Point,
    lm: &Landmark,
    params: &ExpertParams,
) -> Result<f64, ExpertError> {
    params.validate()?;
    Ok(likelihood_from_features(relation, params, &Features::new(x, lm)))
}

/// The expert model evaluated over every cell of `spec`. Occupied cells
/// get the floor, except cells inside the landmark itself for "at".
pub fn ground_field(
    relation: Relation,
    landmark_id: &str,
    map: &WorldMap,
    spec: &GridSpec,
    params: &ExpertParams,
) -> Result<LikelihoodField, ExpertError> {
    params.validate()?;
    let lm = map.landmark(landmark_id).ok_or_else(|| ExpertError::UnknownLandmark(landmark_id.into()))?;
    let fronts = lm.front_directions();
    let occ = occupancy_grid(map, spec);
    let eps = params.floor;
    let values = (0..spec.len())
        .map(|i| {
            let c = spec.center_of(i);
            if !occ[i] {
                likelihood_from_features(relation, params, &Features::with_fronts(c, lm, &fronts))
            } else if relation == Relation::At && lm.contains(c) {
                1.0 - eps
            } else {
                eps
            }
        })
        .collect();
    Ok(LikelihoodField { spec: *spec, relation, landmark_id: landmark_id.into(), values })
}

/// Which log-parameters a relation's form depends on.
fn active_slots(relation: Relation) -> &'static [usize] {
    match relation {
        Relation::InFrontOf | Relation::Behind => &[0, 1, 2],
        _ => &[0, 1],
    }
}

fn to_log(relation: Relation, p: &RelationParams) -> [f64; 3] {
    let first = if relation == Relation::Around { p.width } else { p.rho };
    // κ = 0 has no log; start the search from a small positive value
    [log(first), log(p.tau), log(p.kappa.max(1e-3))]
}

fn from_log(relation: Relation, base: &RelationParams, theta: &[f64; 3]) -> RelationParams {
    let mut p = *base;
    if relation == Relation::Around {
        p.width = exp(theta[0]);
    } else {
        p.rho = exp(theta[0]);
    }
    p.tau = exp(theta[1]);
    if active_slots(relation).contains(&2) {
        p.kappa = exp(theta[2]);
    }
    p
}

/// Mean Bernoulli log-likelihood of `labels` and its gradient in log-space.
fn objective(
    relation: Relation,
    p: &RelationParams,
    eps: f64,
    samples: &[(Features, bool)],
) -> (f64, [f64; 3]) {
    let mut ll = 0.0;
    let mut g = [0.0; 3];
    for (f, y) in samples {
        let (raw, dg) = raw_and_grad(relation, p, f, eps);
        let clamped = !(eps..=1.0 - eps).contains(&raw);
        let v = clamp(raw, eps, 1.0 - eps);
        let (l, w) = if *y { (log(v), 1.0 / v) } else { (log(1.0 - v), -1.0 / (1.0 - v)) };
        ll += l;
        if !clamped {
            for k in 0..3 {
                g[k] += w * dg[k];
            }
        }
    }
    let n = samples.len() as f64;
    (ll / n, [g[0] / n, g[1] / n, g[2] / n])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { max_iters: 5000, grad_tol: 1e-6 }
    }
}

/// Outcome of fitting one relation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationFit {
    pub relation: Relation,
    pub samples: usize,
    pub iterations: usize,
    pub converged: bool,
    pub log_likelihood: f64,
    /// Objective after every accepted step, starting with the initial value.
    pub trace: Vec<f64>,
}

/// Gradient ascent with backtracking for one relation's log-parameters.
pub fn fit_relation(
    relation: Relation,
    init: &RelationParams,
    eps: f64,
    samples: &[(Features, bool)],
    cfg: &FitConfig,
) -> (RelationParams, RelationFit) {
    let slots = active_slots(relation);
    let mut theta = to_log(relation, init);
    let mut p = from_log(relation, init, &theta);
    let (mut ll, mut g) = objective(relation, &p, eps, samples);
    let mut trace = alloc::vec![ll];
    let mut step = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iters {
        let gnorm = slots.iter().map(|&k| g[k].abs()).fold(0.0, f64::max);
        if gnorm < cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let g2: f64 = slots.iter().map(|&k| g[k] * g[k]).sum();
        let mut accepted = false;
        for _ in 0..60 {
            let mut cand = theta;
            for &k in slots {
                cand[k] += step * g[k];
            }
            let cp = from_log(relation, init, &cand);
            let (cll, cg) = objective(relation, &cp, eps, samples);
            if cll.is_finite() && cll >= ll + 1e-4 * step * g2 {
                theta = cand;
                p = cp;
                ll = cll;
                g = cg;
                trace.push(ll);
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // no ascent direction left at machine precision
            converged = true;
            break;
        }
    }
    let fit = RelationFit { relation, samples: samples.len(), iterations, converged, log_likelihood: ll, trace };
    (p, fit)
}

/// Fits every relation present in `data` independently, starting from
/// `init`. Relations absent from the data keep their `init` values.
pub fn fit_expert_params(
    data: &Dataset,
    init: &ExpertParams,
    cfg: &FitConfig,
) -> Result<(ExpertParams, Vec<RelationFit>), ExpertError> {
    init.validate()?;
    if data.is_empty() {
        return Err(ExpertError::EmptyDataset);
    }
    let mut grouped: BTreeMap<Relation, Vec<(Features, bool)>> = BTreeMap::new();
    let mut fronts: BTreeMap<(&str, &str), Vec<Point>> = BTreeMap::new();
    for pt in &data.points {
        let map = data.maps.get(&pt.map_id).ok_or_else(|| ExpertError::UnknownMap(pt.map_id.clone()))?;
        let lm = map.landmark(&pt.landmark_id).ok_or_else(|| ExpertError::UnknownLandmark(pt.landmark_id.clone()))?;
        let fr = fronts.entry((&pt.map_id, &pt.landmark_id)).or_insert_with(|| lm.front_directions());
        grouped.entry(pt.relation).or_default().push((Features::with_fronts(pt.location, lm, fr), pt.positive()));
    }
    for (&r, s) in &grouped {
        let pos = s.iter().filter(|(_, y)| *y).count();
        if pos == 0 || pos == s.len() {
            return Err(ExpertError::Degenerate(r));
        }
    }
    let mut out = init.clone();
    let mut fits = Vec::new();
    for (r, s) in grouped {
        let (p, fit) = fit_relation(r, &init.get(r), init.floor, &s, cfg);
        out.set(r, p);
        fits.push(fit);
    }
    out.validate()?;
    Ok((out, fits))
}

/// The expert family as a [`GroundingModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertModel {
    pub params: ExpertParams,
}

impl ExpertModel {
    pub fn new(params: ExpertParams) -> Result<Self, ExpertError> {
        params.validate()?;
        Ok(Self { params })
    }
}

impl Default for ExpertModel {
    fn default() -> Self {
        Self { params: ExpertParams::default() }
    }
}

impl GroundingModel for ExpertModel {
    fn name(&self) -> String {
        "expert".into()
    }

    fn predict_many(
        &self,
        map: &WorldMap,
        landmark_id: &str,
        relation: Relation,
        locations: &[Point],
    ) -> Result<Vec<f64>, GroundingError> {
        let lm = map.landmark(landmark_id).ok_or_else(|| GroundingError::UnknownLandmark(landmark_id.into()))?;
        let fronts = lm.front_directions();
        Ok(locations
            .iter()
            .map(|&x| likelihood_from_features(relation, &self.params, &Features::with_fronts(x, lm, &fronts)))
            .collect())
    }

    fn floor(&self) -> f64 {
        self.params.floor
    }

    fn ground_field(
        &self,
        map: &WorldMap,
        landmark_id: &str,
        relation: Relation,
        spec: &GridSpec,
    ) -> Result<LikelihoodField, GroundingError> {
        ground_field(relation, landmark_id, map, spec, &self.params).map_err(|e| match e {
            ExpertError::UnknownLandmark(id) => GroundingError::UnknownLandmark(id),
            other => GroundingError::Model(alloc::format!("{other}")),
        })
    }
}

/// One U(0,1) draw, never exactly 0 or 1.
pub fn chance_likelihood<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Uniform random predictions, one fresh draw per queried location.
#[derive(Debug)]
pub struct ChanceModel {
    rng: RefCell<crate::rng::Rng>,
}

impl ChanceModel {
    pub fn new(seed: u64) -> Self {
        Self { rng: RefCell::new(crate::rng::seeded(seed, crate::rng::stream::CHANCE)) }
    }
}

impl GroundingModel for ChanceModel {
    fn name(&self) -> String {
        "chance".into()
    }

    fn predict_many(
        &self,
        _map: &WorldMap,
        _landmark_id: &str,
        _relation: Relation,
        locations: &[Point],
    ) -> Result<Vec<f64>, GroundingError> {
        let mut rng = self.rng.borrow_mut();
        Ok(locations.iter().map(|_| chance_likelihood(&mut *rng)).collect())
    }
}
