//! Interactive search sessions: an operator feeds sentences while the
//! robot steps. A session is a command log applied to a fresh search, so
//! replaying the log rebuilds it exactly.

use groundfuse_core::expert::{ExpertModel, ExpertParams};
use groundfuse_core::filter::BeliefSnapshot;
use groundfuse_core::geometry::Point;
use groundfuse_core::map::{occupancy_grid, GridSpec, SecurityCamera, WorldMap};
use groundfuse_core::parser::ObservationTuple;
use groundfuse_core::rng::{seeded, stream};
use groundfuse_core::search::{
    camera_visible, plan_path, HumanConfig, Rejection, ScenarioConfig, Search, SearchEvent, SearchMode,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Heatmaps are averaged down to at most this many cells per side.
pub const HEATMAP_MAX_SIDE: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRequest {
    pub map_id: String,
    #[serde(default = "default_mode")]
    pub mode: SearchMode,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Drawn from the seed when absent.
    #[serde(default)]
    pub start: Option<(usize, usize)>,
    #[serde(default)]
    pub target: Option<(usize, usize)>,
    #[serde(default)]
    pub max_steps: Option<usize>,
    /// Let the scripted observer speak as well as the operator.
    #[serde(default)]
    pub scripted_human: bool,
}

fn default_mode() -> SearchMode {
    SearchMode::HumanRobot
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Command {
    Sentence { text: String },
    Step { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub rows: usize,
    pub cols: usize,
    /// Mass per block, row-major.
    pub mass: Vec<f64>,
    /// Full-resolution MAP cell.
    pub map_cell: (usize, usize),
    pub map_point: Point,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceReply {
    pub accepted: bool,
    pub tuples: Vec<ObservationTuple>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<Rejection>,
    pub entropy: f64,
    pub belief: Heatmap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepReply {
    pub step: usize,
    pub robot: (usize, usize),
    pub success: bool,
    pub finished: bool,
    pub entropy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub map_id: String,
    pub mode: SearchMode,
    pub seed: u64,
    pub step: usize,
    pub finished: bool,
    pub success: bool,
    pub robot: (usize, usize),
    pub robot_point: Point,
    pub plan: Vec<(usize, usize)>,
    pub cameras: Vec<SecurityCamera>,
    /// The target, only while some camera sees it.
    pub target: Option<Point>,
    pub belief: Heatmap,
    /// Entropy after creation and after every command.
    pub entropy: Vec<f64>,
    pub events: Vec<SearchEvent>,
}

#[derive(Debug)]
pub struct Session {
    request: SessionRequest,
    seed: u64,
    map: &'static WorldMap,
    search: Search<'static>,
    grounder: ExpertModel,
    log: Vec<Command>,
    entropy: Vec<f64>,
}

/// Free start and target cells at least 20 m apart with a path between
/// them.
fn draw_pair(map: &WorldMap, spec: &GridSpec, seed: u64) -> Result<((usize, usize), (usize, usize)), String> {
    let occ = occupancy_grid(map, spec);
    let free: Vec<usize> = (0..spec.len()).filter(|&i| !occ[i]).collect();
    if free.len() < 2 {
        return Err(format!("map {:?} has too little free space", map.id));
    }
    let mut rng = seeded(seed, stream::SCENARIO);
    for _ in 0..1000 {
        let a = spec.row_col(free[rng.gen_range(0..free.len())]);
        let b = spec.row_col(free[rng.gen_range(0..free.len())]);
        if spec.center(a.0, a.1).dist(spec.center(b.0, b.1)) >= 20.0 && plan_path(spec, &occ, a, b).is_ok() {
            return Ok((a, b));
        }
    }
    Err(format!("no reachable start/target pair on map {:?}", map.id))
}

impl Session {
    pub fn new(
        maps: &'static [WorldMap],
        params: &'static ExpertParams,
        request: SessionRequest,
        default_seed: u64,
    ) -> Result<Self, String> {
        let map = maps.iter().find(|m| m.id == request.map_id).ok_or_else(|| format!("unknown map {:?}", request.map_id))?;
        let seed = request.seed.unwrap_or(default_seed);
        let spec = GridSpec::covering(map, 1.0);
        let (start, target) = match (request.start, request.target) {
            (Some(s), Some(t)) => (s, t),
            (s, t) => {
                let (a, b) = draw_pair(map, &spec, seed)?;
                (s.unwrap_or(a), t.unwrap_or(b))
            }
        };
        let cfg = ScenarioConfig {
            map_id: map.id.clone(),
            seed,
            start,
            target,
            mode: request.mode,
            max_steps: request.max_steps.unwrap_or(ScenarioConfig::DEFAULT_MAX_STEPS),
            resolution: 1.0,
            detector: Default::default(),
            human: HumanConfig::default(),
        };
        let search = Search::new(map, &cfg, params, request.scripted_human).map_err(|e| e.to_string())?;
        let grounder = ExpertModel::new(params.clone()).map_err(|e| e.to_string())?;
        let entropy = vec![search.entropy()];
        Ok(Session { request, seed, map, search, grounder, log: Vec::new(), entropy })
    }

    /// Rebuilds a session from its request and command log.
    pub fn replay(
        maps: &'static [WorldMap],
        params: &'static ExpertParams,
        request: SessionRequest,
        default_seed: u64,
        log: &[Command],
    ) -> Result<Self, String> {
        let mut s = Session::new(maps, params, request, default_seed)?;
        for c in log {
            s.apply(c.clone())?;
        }
        Ok(s)
    }

    pub fn request(&self) -> &SessionRequest {
        &self.request
    }

    pub fn log(&self) -> &[Command] {
        &self.log
    }

    pub fn search(&self) -> &Search<'static> {
        &self.search
    }

    pub fn apply(&mut self, command: Command) -> Result<CommandReply, String> {
        let reply = match &command {
            Command::Sentence { text } => CommandReply::Sentence(self.sentence_inner(text)?),
            Command::Step { count } => CommandReply::Step(self.step_inner(*count)?),
        };
        self.log.push(command);
        self.entropy.push(self.search.entropy());
        Ok(reply)
    }

    pub fn sentence(&mut self, text: &str) -> Result<SentenceReply, String> {
        match self.apply(Command::Sentence { text: text.into() })? {
            CommandReply::Sentence(r) => Ok(r),
            CommandReply::Step(_) => unreachable!("sentence command"),
        }
    }

    pub fn step(&mut self, count: usize) -> Result<StepReply, String> {
        match self.apply(Command::Step { count })? {
            CommandReply::Step(r) => Ok(r),
            CommandReply::Sentence(_) => unreachable!("step command"),
        }
    }

    fn sentence_inner(&mut self, text: &str) -> Result<SentenceReply, String> {
        let heard = self.search.hear(text, &self.grounder).map_err(|e| e.to_string())?;
        let (accepted, tuples, error) = match heard {
            Ok(t) => (true, t, None),
            Err(e) => (false, Vec::new(), Some(e)),
        };
        Ok(SentenceReply { accepted, tuples, error, entropy: self.search.entropy(), belief: self.heatmap() })
    }

    fn step_inner(&mut self, count: usize) -> Result<StepReply, String> {
        for _ in 0..count {
            if self.search.step(&self.grounder).map_err(|e| e.to_string())? {
                break;
            }
        }
        let r = self.search.result();
        Ok(StepReply {
            step: r.steps,
            robot: self.search.robot(),
            success: r.success,
            finished: self.search.finished(),
            entropy: self.search.entropy(),
        })
    }

    pub fn heatmap(&self) -> Heatmap {
        let b = self.search.belief();
        let (rows, cols, mass) = b.downsampled(HEATMAP_MAX_SIDE);
        let (idx, map_point) = b.map_estimate();
        Heatmap { rows, cols, mass, map_cell: b.spec().row_col(idx), map_point, entropy: self.search.entropy() }
    }

    pub fn snapshot(&self) -> BeliefSnapshot {
        BeliefSnapshot::from(self.search.belief())
    }

    pub fn state(&self) -> SessionState {
        let r = self.search.result();
        let robot = self.search.robot();
        let target = self.search.target();
        let seen = self.map.cameras.iter().any(|c| camera_visible(self.map, c, target));
        SessionState {
            map_id: self.map.id.clone(),
            mode: self.search.config().mode,
            seed: self.seed,
            step: r.steps,
            finished: self.search.finished(),
            success: r.success,
            robot,
            robot_point: self.search.spec().center(robot.0, robot.1),
            plan: self.search.plan().to_vec(),
            cameras: self.map.cameras.clone(),
            target: seen.then_some(target),
            belief: self.heatmap(),
            entropy: self.entropy.clone(),
            events: r.events.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CommandReply {
    Sentence(SentenceReply),
    Step(StepReply),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets;
    use std::sync::OnceLock;

    fn world() -> (&'static [WorldMap], &'static ExpertParams) {
        static MAPS: OnceLock<Vec<WorldMap>> = OnceLock::new();
        static PARAMS: OnceLock<ExpertParams> = OnceLock::new();
        (MAPS.get_or_init(assets::bundled_maps), PARAMS.get_or_init(ExpertParams::default))
    }

    fn demo(seed: u64) -> SessionRequest {
        SessionRequest {
            map_id: "demo".into(),
            mode: SearchMode::HumanRobot,
            seed: Some(seed),
            start: None,
            target: None,
            max_steps: None,
            scripted_human: false,
        }
    }

    #[test]
    fn unknown_relation_is_a_structured_rejection() {
        let (maps, params) = world();
        let mut s = Session::new(maps, params, demo(1), 0).unwrap();
        let before = s.snapshot();
        let r = s.sentence("xyzzy building 4").unwrap();
        assert!(!r.accepted);
        let json = serde_json::to_value(&r.error).unwrap();
        assert_eq!(json["reason"], "parse");
        assert_eq!(json["error"]["kind"], "UnknownRelation", "{json}");
        assert_eq!(s.snapshot().mass, before.mass);
    }

    #[test]
    fn replaying_the_log_reproduces_the_belief() {
        let (maps, params) = world();
        let mut s = Session::new(maps, params, demo(4), 0).unwrap();
        s.sentence("the bag is near building 4").unwrap();
        s.step(7).unwrap();
        s.sentence("it is not behind building 5").unwrap();
        s.sentence("gibberish").unwrap();
        s.step(3).unwrap();
        let again = Session::replay(maps, params, s.request().clone(), 0, s.log()).unwrap();
        assert_eq!(again.snapshot(), s.snapshot());
        assert_eq!(again.state(), s.state());
    }

    #[test]
    fn sessions_are_independent() {
        let (maps, params) = world();
        let mut a = Session::new(maps, params, demo(1), 0).unwrap();
        let b = Session::new(maps, params, demo(2), 0).unwrap();
        let b_before = b.state();
        a.sentence("the bag is near building 6").unwrap();
        a.step(5).unwrap();
        assert_eq!(b.state(), b_before);
    }

    #[test]
    fn target_shown_only_when_on_camera() {
        let (maps, params) = world();
        let map = &maps[0];
        for seed in 0..10 {
            let s = Session::new(maps, params, demo(seed), 0).unwrap();
            let st = s.state();
            let t = s.search().target();
            let visible = map.cameras.iter().any(|c| camera_visible(map, c, t));
            assert_eq!(st.target.is_some(), visible);
        }
    }

    #[test]
    fn robot_only_sessions_ignore_sentences() {
        let (maps, params) = world();
        let mut s = Session::new(maps, params, SessionRequest { mode: SearchMode::RobotOnly, ..demo(1) }, 0).unwrap();
        let r = s.sentence("the bag is near building 4").unwrap();
        assert!(!r.accepted);
        assert_eq!(r.error, Some(Rejection::NotFused { mode: SearchMode::RobotOnly }));
    }
}
