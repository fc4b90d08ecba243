//! Thread-parallel gradient backend and scenario runner. Results match the
//! serial paths bit for bit: work items are computed independently and
//! combined in input order.

use groundfuse_core::grounding::GroundingModel;
use groundfuse_core::lgn::data::TrainGroup;
use groundfuse_core::lgn::train::{group_gradient, reduce, BatchGradient, GradientBackend};
use groundfuse_core::lgn::{LgnError, LgnModel};
use groundfuse_core::map::WorldMap;
use groundfuse_core::search::{run_scenario, ScenarioConfig, SearchError, SearchResult};
use groundfuse_core::ExpertParams;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, Default)]
pub struct RayonBackend;

impl GradientBackend for RayonBackend {
    fn gradient(&self, model: &LgnModel, batch: &[&TrainGroup]) -> Result<BatchGradient, LgnError> {
        let parts = batch.par_iter().map(|g| group_gradient(model, g)).collect::<Result<Vec<_>, _>>()?;
        Ok(reduce(parts, model.params.len()))
    }
}

/// Runs every scenario against the map with its `map_id`.
pub fn run_batch<G: GroundingModel + Sync>(
    maps: &[WorldMap],
    scenarios: &[ScenarioConfig],
    grounder: &G,
    params: &ExpertParams,
) -> Result<Vec<(ScenarioConfig, SearchResult)>, SearchError> {
    scenarios
        .par_iter()
        .map(|cfg| {
            let map = maps
                .iter()
                .find(|m| m.id == cfg.map_id)
                .ok_or_else(|| SearchError::InvalidConfig(format!("unknown map {:?}", cfg.map_id)))?;
            Ok((cfg.clone(), run_scenario(map, cfg, grounder, params)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use groundfuse_core::lgn::data::TrainSet;
    use groundfuse_core::lgn::synth::{synthesize_stage2, SynthConfig};
    use groundfuse_core::lgn::train::SerialBackend;
    use groundfuse_core::lgn::LgnConfig;
    use groundfuse_core::rng::{seeded, stream};

    #[test]
    fn rayon_gradient_equals_serial() {
        let cfg = LgnConfig { features: 2, map_embed: 4, rel_embed: 3, hidden: 4, roi: 3, resolution: 2.0, ..LgnConfig::default() };
        let model = LgnModel::init(cfg, &mut seeded(1, stream::INIT)).unwrap();
        let synth = SynthConfig { locations: 3, ..SynthConfig::default() };
        let data = synthesize_stage2(&mut seeded(2, stream::SYNTH), 3, 4, &synth);
        let set = TrainSet::from_synth(&data, &cfg).unwrap();
        let batch: Vec<&TrainGroup> = set.groups.iter().collect();
        let a = SerialBackend.gradient(&model, &batch).unwrap();
        let b = RayonBackend.gradient(&model, &batch).unwrap();
        assert_eq!(a, b);
    }
}
