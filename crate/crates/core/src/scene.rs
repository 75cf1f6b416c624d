//! Scene files: structured-text (JSON) descriptions of a domain, its
//! resolution, condenser plates and the metric pair. Unknown fields are
//! rejected and every containment invariant is re-checked on load.
//!
//! ```json
//! {
//!   "domain": { "kind": "disk", "params": { "center": {"x":0,"y":0}, "radius": 1.0 } },
//!   "resolution": 0.015625,
//!   "refine": 1,
//!   "plates": [
//!     { "role": "boundary_plate" },
//!     { "role": "inner_continuum", "geometry": [ { "disk": { "center": {"x":0,"y":0}, "radius": 0.2 } } ] }
//!   ],
//!   "metric": {
//!     "f": [ { "disk": { "center": {"x":0,"y":0}, "radius": 0.15 } } ],
//!     "v": { "kind": "disk", "params": { "center": {"x":0,"y":0}, "radius": 0.3 } }
//!   },
//!   "seed": 1
//! }
//! ```

use crate::capacity::Condenser;
use crate::capmetric::{MetricBudget, MetricConfig, MetricContext};
use crate::error::{Error, Result};
use crate::geometry::{
    build_mask, rasterize_plate, DomainSpec, PlatePrimitive, PlateSpec, Region,
};
use serde::{Deserialize, Serialize};

fn default_seed() -> u64 {
    1
}

fn default_coarse() -> u32 {
    2
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSection {
    /// Geometry of the continuum F.
    pub f: Vec<PlatePrimitive>,
    /// Region V with F inside V and V compactly inside the domain.
    pub v: Region,
    #[serde(default = "default_coarse")]
    pub coarse_factor: u32,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    pub curve_vertices: usize,
    pub perturb_iters: usize,
    pub max_accepts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub domain: DomainSpec,
    pub resolution: f64,
    #[serde(default)]
    pub refine: u32,
    #[serde(default)]
    pub plates: Vec<PlateSpec>,
    #[serde(default)]
    pub metric: Option<MetricSection>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub budget: Option<BudgetSection>,
}

impl SceneFile {
    pub fn parse(text: &str, origin: &str) -> Result<SceneFile> {
        let scene: SceneFile = serde_json::from_str(text).map_err(|e| Error::Scene {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        scene.validate(origin)?;
        Ok(scene)
    }

    pub fn load(path: &std::path::Path) -> Result<(SceneFile, String)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Scene {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let scene = Self::parse(&text, &path.display().to_string())?;
        Ok((scene, text))
    }

    /// Geometry-level validation: the mask builds at the requested
    /// resolution and every plate rasterizes with its invariants intact.
    pub fn validate(&self, origin: &str) -> Result<()> {
        let ctx = |field: &str, e: Error| Error::Scene {
            path: format!("{origin}:{field}"),
            message: e.to_string(),
        };
        self.domain.validate().map_err(|e| ctx("domain", e))?;
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::Scene {
                path: format!("{origin}:resolution"),
                message: "resolution must be positive".to_string(),
            });
        }
        let mask =
            build_mask(&self.domain, self.resolution).map_err(|e| ctx("resolution", e))?;
        for (k, plate) in self.plates.iter().enumerate() {
            rasterize_plate(plate, &mask)
                .map_err(|e| ctx(&format!("plates[{k}]"), e))?;
        }
        if let Some(m) = &self.metric {
            let f = PlateSpec::inner(m.f.clone());
            let cells = rasterize_plate(&f, &mask).map_err(|e| ctx("metric.f", e))?;
            for c in cells.iter() {
                if !m.v.contains(mask.center(c as usize)) {
                    return Err(Error::Scene {
                        path: format!("{origin}:metric.v"),
                        message: "F is not contained in V at this resolution".to_string(),
                    });
                }
            }
        }
        Ok(())
    }

    /// The condenser formed by the first two plates.
    pub fn condenser(&self) -> Result<Condenser> {
        if self.plates.len() < 2 {
            return Err(Error::invalid(
                "scene",
                "capacity runs need two plates (plate0, plate1)",
            ));
        }
        Ok(Condenser {
            domain: self.domain.clone(),
            plate0: self.plates[0].clone(),
            plate1: self.plates[1].clone(),
        })
    }

    pub fn metric_config(&self) -> Result<MetricConfig> {
        let m = self.metric.as_ref().ok_or_else(|| {
            Error::invalid("scene", "this subcommand needs a metric section (F, V)")
        })?;
        let mut config = MetricConfig::new(
            self.domain.clone(),
            PlateSpec::inner(m.f.clone()),
            m.v,
            self.resolution,
        );
        config.coarse_factor = m.coarse_factor;
        config.seed = self.seed;
        if let Some(b) = self.budget {
            config.budget = MetricBudget {
                curve_vertices: b.curve_vertices,
                perturb_iters: b.perturb_iters,
                max_accepts: b.max_accepts,
            };
        }
        Ok(config)
    }

    pub fn metric_context(&self) -> Result<MetricContext> {
        MetricContext::new(self.metric_config()?)
    }
}

/// FNV-1a 64-bit content hash used to fingerprint scenes in manifests.
pub fn scene_hash(bytes: &[u8]) -> String {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    format!("{h:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{
        "domain": { "kind": "disk", "params": { "center": {"x": 0.0, "y": 0.0}, "radius": 1.0 } },
        "resolution": 0.03125,
        "refine": 1,
        "plates": [
            { "role": "boundary_plate" },
            { "role": "inner_continuum", "geometry": [ { "disk": { "center": {"x": 0.0, "y": 0.0}, "radius": 0.2 } } ] }
        ],
        "metric": {
            "f": [ { "disk": { "center": {"x": 0.0, "y": 0.0}, "radius": 0.15 } } ],
            "v": { "kind": "disk", "params": { "center": {"x": 0.0, "y": 0.0}, "radius": 0.3 } }
        },
        "seed": 7
    }"#;

    #[test]
    fn good_scene_parses_and_validates() {
        let scene = SceneFile::parse(GOOD, "test").unwrap();
        assert_eq!(scene.seed, 7);
        assert_eq!(scene.refine, 1);
        assert!(scene.condenser().is_ok());
        assert!(scene.metric_config().is_ok());
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = GOOD.replace("\"seed\": 7", "\"seed\": 7, \"wat\": 1");
        match SceneFile::parse(&bad, "test") {
            Err(Error::Scene { message, .. }) => {
                assert!(message.contains("wat"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn containment_violations_rejected() {
        // F pokes out of V
        let bad = GOOD.replace("\"radius\": 0.3", "\"radius\": 0.1");
        match SceneFile::parse(&bad, "test") {
            Err(Error::Scene { path, .. }) => assert!(path.contains("metric")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(scene_hash(b"abc"), scene_hash(b"abc"));
        assert_ne!(scene_hash(b"abc"), scene_hash(b"abd"));
    }
}
