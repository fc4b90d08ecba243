//! Maps shipped with the crate. The city maps were produced by
//! `groundfuse gen-data maps` with the settings in [`city_config`].

use groundfuse_core::map::synth::{random_map, MapSynthConfig};
use groundfuse_core::map::WorldMap;
use groundfuse_core::rng::{seeded, stream};

const DEMO: &str = include_str!("../maps/demo.json");
const CITIES: [&str; 3] = [
    include_str!("../maps/city-a.json"),
    include_str!("../maps/city-b.json"),
    include_str!("../maps/city-c.json"),
];

pub const CITY_IDS: [&str; 3] = ["city-a", "city-b", "city-c"];
pub const CITY_SEED: u64 = 2024;

/// Three-building map used for the interactive fusion example.
pub fn demo_map() -> WorldMap {
    serde_json::from_str(DEMO).expect("bundled demo map parses")
}

pub fn city_maps() -> Vec<WorldMap> {
    CITIES.iter().map(|s| serde_json::from_str(s).expect("bundled city map parses")).collect()
}

/// Every bundled map, demo first.
pub fn bundled_maps() -> Vec<WorldMap> {
    let mut out = vec![demo_map()];
    out.extend(city_maps());
    out
}

pub fn city_config() -> MapSynthConfig {
    MapSynthConfig { landmarks: (30, 40), cameras: 30, ..MapSynthConfig::search_scale(128.0) }
}

/// Maps drawn from one stream in order, named by `ids`.
pub fn generate_maps(seed: u64, ids: &[&str], cfg: &MapSynthConfig) -> Vec<WorldMap> {
    let mut rng = seeded(seed, stream::MAPS);
    ids.iter().map(|id| random_map(&mut rng, id, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_maps_are_valid_and_reproducible() {
        let maps = bundled_maps();
        assert_eq!(maps.len(), 4);
        for m in &maps {
            m.validate().unwrap();
        }
        assert_eq!(demo_map(), groundfuse_core::map::synth::demo_map());
        assert_eq!(city_maps(), generate_maps(CITY_SEED, &CITY_IDS, &city_config()));
    }
}
