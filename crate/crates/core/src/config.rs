use serde::{Deserialize, Serialize};

use crate::session::{CompositionParams, StageKind};

/// Cardinalities used when sampling or requesting a hierarchy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HierarchyShape {
    pub sub_styles: usize,
    pub categories: Vec<String>,
    pub sub_elements: usize,
}

impl Default for HierarchyShape {
    fn default() -> Self {
        HierarchyShape {
            sub_styles: 3,
            categories: ["color", "fabric", "silhouette", "detail"].map(String::from).to_vec(),
            sub_elements: 3,
        }
    }
}

/// Bounds on caption suggestions for the design stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CaptionShape {
    pub max_categories: usize,
    pub max_sub_elements: usize,
}

impl Default for CaptionShape {
    fn default() -> Self {
        CaptionShape { max_categories: 6, max_sub_elements: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompositionConfig {
    pub tile_count: u32,
    pub variant_count: u32,
    pub fashion_ratio: f64,
    pub count_step: u32,
    pub ratio_step: f64,
    pub max_count: u32,
}

impl Default for CompositionConfig {
    fn default() -> Self {
        CompositionConfig {
            tile_count: 6,
            variant_count: 4,
            fashion_ratio: 0.5,
            count_step: 2,
            ratio_step: 0.25,
            max_count: 16,
        }
    }
}

impl CompositionConfig {
    pub fn initial(&self, stage: StageKind) -> CompositionParams {
        match stage {
            StageKind::Moodboard => CompositionParams::Moodboard {
                tile_count: self.tile_count,
                fashion_ratio: self.fashion_ratio,
            },
            StageKind::Design => CompositionParams::Design {
                variant_count: self.variant_count,
                fashion_ratio: self.fashion_ratio,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorkflowConfig {
    pub hierarchy: HierarchyShape,
    pub caption: CaptionShape,
    pub composition: CompositionConfig,
    /// Pixel size requested for every generated image.
    pub image_size: (u32, u32),
    /// Mixed into generated session ids.
    pub id_namespace: String,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        WorkflowConfig {
            hierarchy: HierarchyShape::default(),
            caption: CaptionShape::default(),
            composition: CompositionConfig::default(),
            image_size: (256, 256),
            id_namespace: "clay".into(),
        }
    }
}

impl WorkflowConfig {
    pub fn validate(&self) -> Result<(), String> {
        let h = &self.hierarchy;
        if h.sub_styles == 0 || h.sub_elements == 0 || h.categories.is_empty() {
            return Err("hierarchy cardinalities must be at least 1".into());
        }
        if self.caption.max_categories == 0 || self.caption.max_sub_elements == 0 {
            return Err("caption cardinalities must be at least 1".into());
        }
        let c = &self.composition;
        if c.tile_count == 0 || c.variant_count == 0 || c.max_count == 0 {
            return Err("composition counts must be at least 1".into());
        }
        if c.tile_count > c.max_count || c.variant_count > c.max_count {
            return Err("default counts exceed max_count".into());
        }
        if !(0.0..=1.0).contains(&c.fashion_ratio) || !(0.0..=1.0).contains(&c.ratio_step) {
            return Err("fashion ratio and its step must lie in [0, 1]".into());
        }
        if self.image_size.0 == 0 || self.image_size.1 == 0 {
            return Err("image size must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = WorkflowConfig::default();
        c.validate().unwrap();
        assert_eq!(c.hierarchy.sub_styles, 3);
        assert_eq!(c.hierarchy.categories, ["color", "fabric", "silhouette", "detail"]);
        assert_eq!(c.hierarchy.sub_elements, 3);
        assert_eq!(c.composition.initial(StageKind::Moodboard).count(), 6);
        assert_eq!(c.composition.initial(StageKind::Design).count(), 4);
        assert_eq!(c.composition.fashion_ratio, 0.5);
        assert_eq!((c.composition.count_step, c.composition.ratio_step), (2, 0.25));
    }

    #[test]
    fn partial_documents_fill_defaults() {
        let c: WorkflowConfig = serde_json::from_str(r#"{"composition": {"tile_count": 8}}"#).unwrap();
        assert_eq!(c.composition.tile_count, 8);
        assert_eq!(c.composition.variant_count, 4);
        assert_eq!(c.hierarchy.sub_styles, 3);
    }
}
