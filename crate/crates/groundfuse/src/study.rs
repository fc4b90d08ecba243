//! Batch search study: scenario generation, parallel runs, per-mode
//! statistics, Welch tests against human-robot mode and curve dominance.

use groundfuse_core::expert::ExpertModel;
use groundfuse_core::map::WorldMap;
use groundfuse_core::rng::{seeded, stream};
use groundfuse_core::search::{
    random_scenarios, summarize, HumanConfig, ModeSummary, ScenarioConfig, SearchError, SearchMode, SearchResult,
};
use serde::{Deserialize, Serialize};

use crate::parallel::run_batch;
use crate::stats::{welch, WelchTest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub seed: u64,
    /// Start/target pairs; each is run once per mode.
    pub scenarios: usize,
    pub max_steps: usize,
    pub min_separation: f64,
    pub modes: Vec<SearchMode>,
    pub human: HumanConfig,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            scenarios: 100,
            max_steps: 2000,
            min_separation: 50.0,
            modes: SearchMode::ALL.to_vec(),
            human: HumanConfig::default(),
        }
    }
}

impl StudyConfig {
    pub fn scenario_configs(&self, maps: &[WorldMap]) -> Vec<ScenarioConfig> {
        let mut rng = seeded(self.seed, stream::SCENARIO);
        random_scenarios(&mut rng, maps, self.scenarios, &self.modes, self.max_steps, self.min_separation, &self.human)
    }
}

/// Limits at which `mode`'s success fraction exceeds human-robot's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub mode: SearchMode,
    pub violations: usize,
    /// `(limit, human-robot fraction, other fraction)` of the first violation.
    pub first: Option<(usize, f64, f64)>,
    pub last: Option<(usize, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTest {
    pub mode: SearchMode,
    pub test: WelchTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub summaries: Vec<ModeSummary>,
    /// Human-robot steps against each other mode.
    pub tests: Vec<ModeTest>,
    pub dominance: Vec<Dominance>,
}

impl StudyReport {
    pub fn summary(&self, mode: SearchMode) -> Option<&ModeSummary> {
        self.summaries.iter().find(|s| s.mode == mode)
    }

    pub fn test(&self, mode: SearchMode) -> Option<&WelchTest> {
        self.tests.iter().find(|t| t.mode == mode).map(|t| &t.test)
    }

    pub fn dominance(&self, mode: SearchMode) -> Option<&Dominance> {
        self.dominance.iter().find(|d| d.mode == mode)
    }

    /// Tab-separated per-mode table.
    pub fn table(&self) -> String {
        let mut s = String::from("mode\truns\tsuccesses\tmean_steps\tsd_steps\twelch_t\twelch_p\tcurve_violations\n");
        for m in &self.summaries {
            let t = self.test(m.mode);
            let d = self.dominance(m.mode);
            s.push_str(&format!(
                "{}\t{}\t{}\t{:.2}\t{:.2}\t{}\t{}\t{}\n",
                m.mode.name(),
                m.runs,
                m.successes,
                m.mean_steps,
                m.sd_steps,
                t.map_or("-".into(), |t| format!("{:.4}", t.t)),
                t.map_or("-".into(), |t| format!("{:.4e}", t.p)),
                d.map_or("-".into(), |d| d.violations.to_string()),
            ));
        }
        s
    }

    /// One row per step limit, one column per mode.
    pub fn curves_tsv(&self) -> String {
        let mut s = String::from("step_limit");
        for m in &self.summaries {
            s.push('\t');
            s.push_str(m.mode.name());
        }
        s.push('\n');
        let len = self.summaries.iter().map(|m| m.curve.len()).max().unwrap_or(0);
        for i in 0..len {
            s.push_str(&(i + 1).to_string());
            for m in &self.summaries {
                let v = m.curve.get(i).or(m.curve.last()).map_or(0.0, |c| c.1);
                s.push_str(&format!("\t{v:.4}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn dominance(reference: &ModeSummary, other: &ModeSummary) -> Dominance {
    let bad: Vec<(usize, f64, f64)> =
        reference.curve.iter().zip(&other.curve).filter(|(a, b)| a.1 < b.1).map(|(a, b)| (a.0, a.1, b.1)).collect();
    Dominance { mode: other.mode, violations: bad.len(), first: bad.first().copied(), last: bad.last().copied() }
}

pub fn report(results: &[(ScenarioConfig, SearchResult)]) -> StudyReport {
    let summaries = summarize(results);
    let mut tests = Vec::new();
    let mut dom = Vec::new();
    if let Some(hr) = summaries.iter().find(|s| s.mode == SearchMode::HumanRobot) {
        for other in summaries.iter().filter(|s| s.mode != SearchMode::HumanRobot) {
            if hr.steps.len() >= 2 && other.steps.len() >= 2 {
                tests.push(ModeTest { mode: other.mode, test: welch(&hr.steps, &other.steps) });
            }
            dom.push(dominance(hr, other));
        }
    }
    StudyReport { summaries, tests, dominance: dom }
}

/// Runs the study with the expert grounding model.
pub fn run_study(
    maps: &[WorldMap],
    cfg: &StudyConfig,
    expert: &ExpertModel,
) -> Result<(Vec<(ScenarioConfig, SearchResult)>, StudyReport), SearchError> {
    let scenarios = cfg.scenario_configs(maps);
    let results = run_batch(maps, &scenarios, expert, &expert.params)?;
    let rep = report(&results);
    Ok((results, rep))
}
