//! Collaborative target search on a grid: a robot with a noisy detector,
//! security cameras watched by a (scripted) human observer, and a belief
//! that fuses whichever sources the mode allows.

use alloc::collections::BinaryHeap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use crate::corpus::{render, CorpusConfig, Structure, Voice};
use crate::expert::{likelihood_from_features, ExpertParams, Features};
use crate::filter::{BeliefGrid, FilterError, RangeDetector, SensorObservation};
use crate::geometry::Point;
use crate::grounding::GroundingModel;
use crate::map::{occupancy_grid, GridSpec, SecurityCamera, WorldMap};
use crate::math::{atan2, mean, sample_sd};
use crate::parser::{parse, Lexicon, ObservationTuple, ParseError};
use crate::relation::Relation;
use crate::rng::{seeded, stream};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error("no path from {start:?} to {goal:?}")]
    NoPath { start: (usize, usize), goal: (usize, usize) },
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
}

/// Detector reading for a robot at `robot` and the true target at `target`.
pub fn simulate_detection<R: rand::Rng + ?Sized>(
    robot: Point,
    target: Point,
    detector: &RangeDetector,
    step: usize,
    rng: &mut R,
) -> SensorObservation {
    let u: f64 = rng.gen();
    SensorObservation { robot, detected: u < detector.p_detect(robot, target), step }
}

/// Inside the cone, within range, and with a clear line of sight.
pub fn camera_visible(map: &WorldMap, cam: &SecurityCamera, target: Point) -> bool {
    let v = target - cam.position;
    let d = v.norm();
    if d > cam.range {
        return false;
    }
    if d > 0.0 {
        let mut off = atan2(v.y, v.x) - cam.heading;
        while off > core::f64::consts::PI {
            off -= 2.0 * core::f64::consts::PI;
        }
        while off < -core::f64::consts::PI {
            off += 2.0 * core::f64::consts::PI;
        }
        if off.abs() > cam.fov / 2.0 {
            return false;
        }
    }
    !map.segment_blocked(cam.position, target)
}

pub fn visible_to_any(map: &WorldMap, target: Point) -> bool {
    map.cameras.iter().any(|c| camera_visible(map, c, target))
}

/// Path cost split into axial and diagonal move counts, so costs compare
/// exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MoveCount {
    pub axial: usize,
    pub diagonal: usize,
}

impl MoveCount {
    pub fn cost(&self) -> f64 {
        self.axial as f64 + self.diagonal as f64 * SQRT_2
    }

    pub fn of_path(path: &[(usize, usize)]) -> Self {
        let mut out = MoveCount::default();
        for w in path.windows(2) {
            if w[0].0 != w[1].0 && w[0].1 != w[1].1 {
                out.diagonal += 1;
            } else {
                out.axial += 1;
            }
        }
        out
    }
}

/// 8-connected moves from `(r, c)` over free cells. Diagonals may not cut
/// an occupied corner.
pub fn moves<'a>(
    spec: &'a GridSpec,
    occupied: &'a [bool],
    r: usize,
    c: usize,
) -> impl Iterator<Item = ((usize, usize), f64)> + 'a {
    spec.neighbours(r, c).filter_map(move |(nr, nc)| {
        if occupied[spec.index(nr, nc)] {
            return None;
        }
        if nr != r && nc != c {
            if occupied[spec.index(nr, c)] || occupied[spec.index(r, nc)] {
                return None;
            }
            Some(((nr, nc), SQRT_2))
        } else {
            Some(((nr, nc), 1.0))
        }
    })
}

fn octile(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dr = a.0.abs_diff(b.0) as f64;
    let dc = a.1.abs_diff(b.1) as f64;
    dr.max(dc) + (SQRT_2 - 1.0) * dr.min(dc)
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    cell: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        // min-heap on f, then prefer deeper nodes, then index
        o.f.total_cmp(&self.f).then(self.g.total_cmp(&o.g)).then(o.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// A* with the octile heuristic. Returns the cell path including both ends.
pub fn plan_path(
    spec: &GridSpec,
    occupied: &[bool],
    start: (usize, usize),
    goal: (usize, usize),
) -> Result<Vec<(usize, usize)>, SearchError> {
    let no_path = SearchError::NoPath { start, goal };
    let s = spec.index(start.0, start.1);
    let t = spec.index(goal.0, goal.1);
    if occupied[s] || occupied[t] {
        return Err(no_path);
    }
    let mut g = vec![f64::INFINITY; spec.len()];
    let mut parent = vec![usize::MAX; spec.len()];
    let mut closed = vec![false; spec.len()];
    let mut open = BinaryHeap::new();
    g[s] = 0.0;
    open.push(Open { f: octile(start, goal), g: 0.0, cell: s });
    while let Some(Open { g: gc, cell, .. }) = open.pop() {
        if closed[cell] {
            continue;
        }
        if cell == t {
            let mut path = vec![goal];
            let mut c = t;
            while c != s {
                c = parent[c];
                path.push(spec.row_col(c));
            }
            path.reverse();
            return Ok(path);
        }
        closed[cell] = true;
        let (r, c) = spec.row_col(cell);
        for ((nr, nc), w) in moves(spec, occupied, r, c) {
            let n = spec.index(nr, nc);
            let ng = gc + w;
            if !closed[n] && ng < g[n] {
                g[n] = ng;
                parent[n] = cell;
                open.push(Open { f: ng + octile((nr, nc), goal), g: ng, cell: n });
            }
        }
    }
    Err(no_path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SearchMode {
    HumanRobot,
    RobotOnly,
    HumanOnly,
    Uninformed,
}

impl SearchMode {
    pub const ALL: [SearchMode; 4] = [SearchMode::HumanRobot, SearchMode::RobotOnly, SearchMode::HumanOnly, SearchMode::Uninformed];

    pub fn uses_sensor(self) -> bool {
        matches!(self, SearchMode::HumanRobot | SearchMode::RobotOnly)
    }

    pub fn uses_human(self) -> bool {
        matches!(self, SearchMode::HumanRobot | SearchMode::HumanOnly)
    }

    pub fn name(self) -> &'static str {
        match self {
            SearchMode::HumanRobot => "human-robot",
            SearchMode::RobotOnly => "robot-only",
            SearchMode::HumanOnly => "human-only",
            SearchMode::Uninformed => "uninformed",
        }
    }
}

impl core::str::FromStr for SearchMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SearchMode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| format!("unknown mode {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanConfig {
    /// Steps between chances to speak.
    pub cadence: usize,
    /// Probability of a negative remark when the target is not on camera.
    pub negative_prob: f64,
    /// Denials are only made when the phrase's likelihood at the target is
    /// at most one minus this.
    pub clarity: f64,
    /// Positive remarks need at least this likelihood at the target.
    #[serde(default = "default_positive_min")]
    pub positive_min: f64,
    /// With the target on camera, remarks aim to pull belief mass within
    /// this many meters of it.
    #[serde(default = "default_focus_radius")]
    pub focus_radius: f64,
    pub target_noun: String,
}

fn default_focus_radius() -> f64 {
    25.0
}

fn default_positive_min() -> f64 {
    0.6
}

impl Default for HumanConfig {
    fn default() -> Self {
        Self { cadence: 10, negative_prob: 0.5, clarity: 0.9, positive_min: default_positive_min(), focus_radius: default_focus_radius(), target_noun: "bag".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub map_id: String,
    pub seed: u64,
    pub start: (usize, usize),
    pub target: (usize, usize),
    pub mode: SearchMode,
    pub max_steps: usize,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub detector: RangeDetector,
    #[serde(default)]
    pub human: HumanConfig,
}

fn default_resolution() -> f64 {
    1.0
}

impl ScenarioConfig {
    pub const DEFAULT_MAX_STEPS: usize = 10_000;

    pub fn spec(&self, map: &WorldMap) -> GridSpec {
        GridSpec::covering(map, self.resolution)
    }

    pub fn validate(&self, map: &WorldMap) -> Result<(), SearchError> {
        let bad = |m: String| Err(SearchError::InvalidConfig(m));
        if self.map_id != map.id {
            return bad(format!("scenario is for map {:?}, got {:?}", self.map_id, map.id));
        }
        if !(self.resolution > 0.0) || self.max_steps == 0 || self.human.cadence == 0 {
            return bad("resolution, max_steps and cadence must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.human.negative_prob) || !(self.detector.range > 0.0) {
            return bad("probabilities must lie in [0, 1] and range must be positive".into());
        }
        let spec = self.spec(map);
        for (name, (r, c)) in [("start", self.start), ("target", self.target)] {
            if r >= spec.rows || c >= spec.cols {
                return bad(format!("{name} cell ({r}, {c}) outside the {}x{} grid", spec.rows, spec.cols));
            }
            if map.occupied(spec.center(r, c)) {
                return bad(format!("{name} cell ({r}, {c}) is occupied"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchEvent {
    Utterance {
        step: usize,
        sentence: String,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        parsed: Vec<ObservationTuple>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        error: Option<String>,
    },
    Plan { step: usize, goal: (usize, usize), cost: f64 },
    Detection { step: usize, robot: (usize, usize), detected: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub success: bool,
    pub steps: usize,
    /// Belief entropy after each step.
    pub entropy: Vec<f64>,
    pub events: Vec<SearchEvent>,
}

/// What the scripted observer says, with the tuple it encodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Utterance {
    pub sentence: String,
    pub tuple: ObservationTuple,
}

fn landmark_name<'a>(lexicon: &'a Lexicon, id: &str) -> Option<&'a str> {
    lexicon.entries().find(|(_, i)| *i == id).map(|(n, _)| n)
}

fn likelihood_at(map: &WorldMap, lm_index: usize, rel: Relation, x: Point, params: &ExpertParams) -> f64 {
    let lm = &map.landmarks[lm_index];
    likelihood_from_features(rel, params, &Features::new(x, lm))
}

/// The positive statement a camera-watching observer makes: the
/// (landmark, relation) pair with the highest expert likelihood at the
/// target. "far from" is left out since it does not localize. Ties go to
/// the closer landmark, then the earlier relation.
pub fn best_description(map: &WorldMap, target: Point, params: &ExpertParams) -> Option<(usize, Relation, f64)> {
    let mut best: Option<(usize, Relation, f64, f64)> = None;
    for (i, lm) in map.landmarks.iter().enumerate() {
        let d = lm.signed_distance(target);
        for rel in Relation::ALL {
            if rel == Relation::FarFrom {
                continue;
            }
            let p = likelihood_at(map, i, rel, target, params);
            let better = match best {
                None => true,
                Some((_, _, bp, bd)) => p > bp || (p == bp && d < bd),
            };
            if better {
                best = Some((i, rel, p, d));
            }
        }
    }
    best.map(|(i, r, p, _)| (i, r, p))
}

/// The scripted observer. Holds the expert field of every
/// (landmark, relation) pair over the free cells, and its own picture of
/// the robot's belief: the flat prior times everything it has said. It
/// never sees sensor data, so the fused and human-only modes hear the same
/// remarks under shared seeds.
#[derive(Debug, Clone)]
pub struct ScriptedHuman<'a> {
    map: &'a WorldMap,
    lexicon: Lexicon,
    params: &'a ExpertParams,
    pub cfg: HumanConfig,
    centers: Vec<Point>,
    /// `(landmark index, relation, likelihood per free cell)`.
    fields: Vec<(usize, Relation, Vec<f64>)>,
    /// Normalized mass per free cell.
    model: Vec<f64>,
}

impl<'a> ScriptedHuman<'a> {
    pub fn new(map: &'a WorldMap, spec: &GridSpec, params: &'a ExpertParams, cfg: HumanConfig) -> Self {
        let occupied = occupancy_grid(map, spec);
        let free: Vec<usize> = (0..spec.len()).filter(|&i| !occupied[i]).collect();
        let mut fields = Vec::new();
        for (li, lm) in map.landmarks.iter().enumerate() {
            let fronts = lm.front_directions();
            let feats: Vec<Features> = free.iter().map(|&i| Features::with_fronts(spec.center_of(i), lm, &fronts)).collect();
            for rel in Relation::ALL.into_iter().filter(|r| *r != Relation::FarFrom) {
                fields.push((li, rel, feats.iter().map(|f| likelihood_from_features(rel, params, f)).collect()));
            }
        }
        let centers = free.iter().map(|&i| spec.center_of(i)).collect();
        let model = vec![1.0 / free.len().max(1) as f64; free.len()];
        Self { map, lexicon: Lexicon::from_map(map), params, cfg, centers, fields, model }
    }

    /// The observer's picture of the belief, one entry per free cell in
    /// row-major order.
    pub fn model(&self) -> &[f64] {
        &self.model
    }

    fn field(&self, li: usize, rel: Relation) -> Option<&[f64]> {
        self.fields.iter().find(|(i, r, _)| *i == li && *r == rel).map(|(_, _, f)| f.as_slice())
    }

    /// Folds a remark into the observer's picture.
    pub fn tell(&mut self, li: usize, rel: Relation, negated: bool) {
        let Some(field) = self.field(li, rel) else { return };
        let updated: Vec<f64> = self.model.iter().zip(field).map(|(m, l)| m * if negated { 1.0 - l } else { *l }).collect();
        let total: f64 = updated.iter().sum();
        if total > 0.0 {
            self.model = updated.into_iter().map(|m| m / total).collect();
        }
    }

    /// The true remark, positive or negated, that moves the pictured MAP
    /// cell closest to the target (any distance within `focus_radius`
    /// counts as on target), then leaves the most mass within
    /// `focus_radius` of it. Ties go to the earlier landmark and relation,
    /// positive first.
    pub fn best_guidance(&self, target: Point) -> Option<(usize, Relation, bool)> {
        let dist: Vec<f64> = self.centers.iter().map(|c| c.dist(target).max(self.cfg.focus_radius)).collect();
        let mut best: Option<(usize, Relation, bool, f64, f64)> = None;
        for (li, rel, field) in &self.fields {
            let v = likelihood_at(self.map, *li, *rel, target, self.params);
            for negated in [false, true] {
                let clear = if negated { v <= 1.0 - self.cfg.clarity } else { v >= self.cfg.positive_min };
                if !clear {
                    continue;
                }
                let (mut inside, mut total) = (0.0, 0.0);
                let (mut peak, mut peak_dist) = (f64::NEG_INFINITY, f64::INFINITY);
                for ((&w, l), &d) in self.model.iter().zip(field).zip(&dist) {
                    let m = w * if negated { 1.0 - l } else { *l };
                    total += m;
                    if d <= self.cfg.focus_radius {
                        inside += m;
                    }
                    if m > peak {
                        peak = m;
                        peak_dist = d;
                    }
                }
                if total <= 0.0 {
                    continue;
                }
                let share = inside / total;
                if best.is_none_or(|b| peak_dist < b.3 || (peak_dist == b.3 && share > b.4)) {
                    best = Some((*li, *rel, negated, peak_dist, share));
                }
            }
        }
        best.map(|(i, r, n, _, _)| (i, r, n))
    }

    /// The clearly false (landmark, relation) pair whose region carries
    /// the most pictured mass.
    pub fn best_denial(&self, target: Point) -> Option<(usize, Relation)> {
        let mut best: Option<(usize, Relation, f64)> = None;
        for (li, rel, field) in &self.fields {
            if likelihood_at(self.map, *li, *rel, target, self.params) > 1.0 - self.cfg.clarity {
                continue;
            }
            let m: f64 = self.model.iter().zip(field).map(|(w, l)| w * l).sum();
            if best.is_none_or(|b| m > b.2) {
                best = Some((*li, *rel, m));
            }
        }
        best.map(|(i, r, _)| (i, r))
    }

    /// One observer turn: with the target on camera, the most helpful
    /// clearly true remark; otherwise a denial with probability
    /// `negative_prob`. All draws happen on every turn so the
    /// observer stream stays aligned across modes.
    pub fn speak<R: rand::Rng + ?Sized>(&mut self, target: Point, rng: &mut R) -> Option<Utterance> {
        let coin = rng.gen_bool(self.cfg.negative_prob);
        let structure_u: f64 = rng.gen();
        let voice_u: f64 = rng.gen();
        let render_seed: u64 = rng.gen();
        let guided = visible_to_any(self.map, target).then(|| self.best_guidance(target)).flatten();
        let (lm, relation, negated) = if let Some(g) = guided {
            g
        } else if coin {
            let (i, r) = self.best_denial(target)?;
            (i, r, true)
        } else {
            return None;
        };
        let id = &self.map.landmarks[lm].id;
        let name = landmark_name(&self.lexicon, id)?;
        let tuple = ObservationTuple { target: self.cfg.target_noun.clone(), relation, landmark: id.clone(), negated };
        let corpus = CorpusConfig::typo_free();
        let structure = if structure_u < corpus.subject_predicate { Structure::SubjectPredicate } else { Structure::Existential };
        let voice = if structure == Structure::SubjectPredicate && voice_u >= corpus.active_voice { Voice::Passive } else { Voice::Active };
        let sentence = render(&mut seeded(render_seed, stream::CORPUS), &corpus, &tuple, name, structure, voice);
        self.tell(lm, relation, negated);
        Some(Utterance { sentence, tuple })
    }
}

/// A scenario in progress. [`Search::step`] advances one second;
/// [`Search::hear`] fuses an operator sentence between steps.
///
/// Each step the robot advances one cell along its plan, the detector
/// fires, sensor modes fuse the reading, the scripted observer (if any)
/// speaks every `cadence` steps starting at step 1, and the robot replans
/// to the MAP cell when the goal moved or it left the plan. Success is a
/// positive reading with the target in range. Uninformed mode never
/// updates, so the robot walks to the tie-break cell of the flat prior and
/// waits there.
#[derive(Debug)]
pub struct Search<'a> {
    map: &'a WorldMap,
    cfg: ScenarioConfig,
    spec: GridSpec,
    occupied: Vec<bool>,
    belief: BeliefGrid,
    lexicon: Lexicon,
    human: Option<ScriptedHuman<'a>>,
    target: Point,
    detector_rng: crate::rng::Rng,
    human_rng: crate::rng::Rng,
    robot: (usize, usize),
    plan: Vec<(usize, usize)>,
    goal: Option<(usize, usize)>,
    entropy: f64,
    result: SearchResult,
}

/// Why a sentence changed nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, thiserror::Error)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum Rejection {
    #[error("{error}")]
    Parse { error: ParseError },
    #[error("{} mode does not fuse language", mode.name())]
    NotFused { mode: SearchMode },
}

/// Outcome of a sentence: the fused tuples or why nothing was fused.
pub type Heard = Result<Vec<ObservationTuple>, Rejection>;

impl<'a> Search<'a> {
    /// With `scripted` false no observer speaks, whatever the mode.
    pub fn new(map: &'a WorldMap, cfg: &ScenarioConfig, params: &'a ExpertParams, scripted: bool) -> Result<Self, SearchError> {
        cfg.validate(map)?;
        let spec = cfg.spec(map);
        let occupied = occupancy_grid(map, &spec);
        let belief = BeliefGrid::uniform(&spec, occupied.iter().map(|o| !o).collect())?;
        let human = (scripted && cfg.mode.uses_human()).then(|| ScriptedHuman::new(map, &spec, params, cfg.human.clone()));
        let entropy = belief.entropy();
        let mut s = Search {
            map,
            cfg: cfg.clone(),
            spec,
            occupied,
            belief,
            lexicon: Lexicon::from_map(map),
            human,
            target: spec.center(cfg.target.0, cfg.target.1),
            detector_rng: seeded(cfg.seed, stream::DETECTOR),
            human_rng: seeded(cfg.seed, stream::HUMAN),
            robot: cfg.start,
            plan: Vec::new(),
            goal: None,
            entropy,
            result: SearchResult { success: false, steps: 0, entropy: Vec::new(), events: Vec::new() },
        };
        s.replan(0)?;
        Ok(s)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn belief(&self) -> &BeliefGrid {
        &self.belief
    }

    pub fn robot(&self) -> (usize, usize) {
        self.robot
    }

    pub fn target(&self) -> Point {
        self.target
    }

    /// Remaining cells of the current plan, starting at the robot.
    pub fn plan(&self) -> &[(usize, usize)] {
        &self.plan
    }

    pub fn result(&self) -> &SearchResult {
        &self.result
    }

    pub fn into_result(self) -> SearchResult {
        self.result
    }

    pub fn finished(&self) -> bool {
        self.result.success || self.result.steps >= self.cfg.max_steps
    }

    /// Current belief entropy in nats.
    pub fn entropy(&self) -> f64 {
        self.entropy
    }

    fn replan(&mut self, step: usize) -> Result<(), SearchError> {
        let want = self.spec.row_col(self.belief.map_estimate().0);
        if self.goal != Some(want) || self.plan.first() != Some(&self.robot) {
            match plan_path(&self.spec, &self.occupied, self.robot, want) {
                Ok(p) => {
                    self.result.events.push(SearchEvent::Plan { step, goal: want, cost: MoveCount::of_path(&p).cost() });
                    self.plan = p;
                }
                // unreachable MAP cell: hold position
                Err(SearchError::NoPath { .. }) => self.plan = vec![self.robot],
                Err(e) => return Err(e),
            }
            self.goal = Some(want);
        }
        Ok(())
    }

    /// Parses and fuses `sentence`, logging it at the current step. Parse
    /// errors and modes without language fusion leave the belief unchanged.
    fn fuse_sentence(&mut self, sentence: String, grounder: &dyn GroundingModel) -> Result<Heard, SearchError> {
        let step = self.result.steps;
        if !self.cfg.mode.uses_human() {
            let why = Rejection::NotFused { mode: self.cfg.mode };
            self.result.events.push(SearchEvent::Utterance { step, sentence, parsed: Vec::new(), error: Some(format!("{why}")) });
            return Ok(Err(why));
        }
        match parse(&sentence, &self.lexicon) {
            Ok(obs) => {
                match self.belief.update_language(&obs, self.map, grounder) {
                    Ok(_) => self.entropy = self.belief.entropy(),
                    Err(FilterError::DegenerateUpdate) => {}
                    Err(e) => return Err(e.into()),
                }
                let parsed: Vec<ObservationTuple> = obs.iter().map(|o| o.tuple()).collect();
                self.result.events.push(SearchEvent::Utterance { step, sentence, parsed: parsed.clone(), error: None });
                Ok(Ok(parsed))
            }
            Err(error) => {
                self.result.events.push(SearchEvent::Utterance { step, sentence, parsed: Vec::new(), error: Some(format!("{error}")) });
                Ok(Err(Rejection::Parse { error }))
            }
        }
    }

    /// Operator sentence between steps; the robot replans right away.
    pub fn hear(&mut self, sentence: &str, grounder: &dyn GroundingModel) -> Result<Heard, SearchError> {
        let heard = self.fuse_sentence(sentence.into(), grounder)?;
        let step = self.result.steps;
        self.replan(step)?;
        Ok(heard)
    }

    /// One time step. Returns whether the search has finished.
    pub fn step(&mut self, grounder: &dyn GroundingModel) -> Result<bool, SearchError> {
        if self.finished() {
            return Ok(true);
        }
        let step = self.result.steps + 1;
        if self.plan.len() > 1 {
            self.plan.remove(0);
            self.robot = self.plan[0];
        }

        let here = self.spec.center(self.robot.0, self.robot.1);
        let z = simulate_detection(here, self.target, &self.cfg.detector, step, &mut self.detector_rng);
        self.result.events.push(SearchEvent::Detection { step, robot: self.robot, detected: z.detected });
        self.result.steps = step;
        if z.detected && self.cfg.detector.in_range(here, self.target) {
            self.result.success = true;
            self.result.entropy.push(self.entropy);
            return Ok(true);
        }
        if self.cfg.mode.uses_sensor() {
            match self.belief.update_sensor(&z, &self.cfg.detector) {
                Ok(()) => self.entropy = self.belief.entropy(),
                Err(FilterError::DegenerateUpdate) => {}
                Err(e) => return Err(e.into()),
            }
        }

        if (step - 1) % self.cfg.human.cadence == 0 {
            let spoken = match &mut self.human {
                Some(h) => h.speak(self.target, &mut self.human_rng),
                None => None,
            };
            if let Some(u) = spoken {
                let _ = self.fuse_sentence(u.sentence, grounder)?;
            }
        }

        self.result.entropy.push(self.entropy);
        self.replan(step)?;
        Ok(self.finished())
    }
}

/// Runs one scenario with the scripted observer to success or the step cap.
pub fn run_scenario(
    map: &WorldMap,
    cfg: &ScenarioConfig,
    grounder: &dyn GroundingModel,
    params: &ExpertParams,
) -> Result<SearchResult, SearchError> {
    let mut search = Search::new(map, cfg, params, true)?;
    while !search.step(grounder)? {}
    Ok(search.into_result())
}

/// Draws `n` start/target pairs on free, mutually reachable cells of
/// `maps` (round robin), at least `min_separation` meters apart, one
/// scenario per pair and mode.
pub fn random_scenarios<R: rand::Rng + ?Sized>(
    rng: &mut R,
    maps: &[WorldMap],
    n: usize,
    modes: &[SearchMode],
    max_steps: usize,
    min_separation: f64,
    human: &HumanConfig,
) -> Vec<ScenarioConfig> {
    let mut out = Vec::with_capacity(n * modes.len());
    let grids: Vec<(GridSpec, Vec<bool>)> = maps
        .iter()
        .map(|m| {
            let spec = GridSpec::covering(m, 1.0);
            let occ = occupancy_grid(m, &spec);
            (spec, occ)
        })
        .collect();
    for k in 0..n {
        let mi = k % maps.len();
        let (spec, occ) = &grids[mi];
        let free: Vec<usize> = (0..spec.len()).filter(|&i| !occ[i]).collect();
        let seed: u64 = rng.gen();
        let (start, target) = loop {
            let s = spec.row_col(free[rng.gen_range(0..free.len())]);
            let t = spec.row_col(free[rng.gen_range(0..free.len())]);
            let apart = spec.center(s.0, s.1).dist(spec.center(t.0, t.1));
            if s != t && apart >= min_separation && plan_path(spec, occ, s, t).is_ok() {
                break (s, t);
            }
        };
        for &mode in modes {
            out.push(ScenarioConfig {
                map_id: maps[mi].id.clone(),
                seed,
                start,
                target,
                mode,
                max_steps,
                resolution: 1.0,
                detector: RangeDetector::default(),
                human: human.clone(),
            });
        }
    }
    out
}

/// Per-mode aggregate. Failures count as `cap` steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSummary {
    pub mode: SearchMode,
    pub runs: usize,
    pub successes: usize,
    pub mean_steps: f64,
    pub sd_steps: f64,
    /// Step counts with failures at the cap, in scenario order.
    pub steps: Vec<f64>,
    /// `(step limit, fraction of runs succeeding within it)`.
    pub curve: Vec<(usize, f64)>,
}

/// Summaries in [`SearchMode::ALL`] order for the modes present.
pub fn summarize(results: &[(ScenarioConfig, SearchResult)]) -> Vec<ModeSummary> {
    let mut out = Vec::new();
    for mode in SearchMode::ALL {
        let runs: Vec<&(ScenarioConfig, SearchResult)> = results.iter().filter(|(c, _)| c.mode == mode).collect();
        if runs.is_empty() {
            continue;
        }
        let cap = runs.iter().map(|(c, _)| c.max_steps).max().unwrap_or(0);
        let steps: Vec<f64> = runs.iter().map(|(c, r)| if r.success { r.steps } else { c.max_steps } as f64).collect();
        let mut hits = vec![0usize; cap + 1];
        for (_, r) in &runs {
            if r.success {
                hits[r.steps] += 1;
            }
        }
        let mut curve = Vec::with_capacity(cap);
        let mut acc = 0;
        for (limit, h) in hits.iter().enumerate().skip(1) {
            acc += h;
            curve.push((limit, acc as f64 / runs.len() as f64));
        }
        out.push(ModeSummary {
            mode,
            runs: runs.len(),
            successes: runs.iter().filter(|(_, r)| r.success).count(),
            mean_steps: mean(&steps),
            sd_steps: sample_sd(&steps),
            steps,
            curve,
        });
    }
    out
}
