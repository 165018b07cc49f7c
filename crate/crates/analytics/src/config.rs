use serde::{Deserialize, Serialize};
use thiserror::Error;

use metahint_core::AssignmentId;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid analytics config: {0}")]
pub struct InvalidConfig(pub String);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalyticsConfig {
    /// Contemplation durations above this many seconds are dropped.
    pub contemplation_cutoff_secs: f64,
    /// Easiest and hardest questions labeled per assignment.
    pub difficulty_group_size_per_assignment: usize,
    /// Share of students in each of the Higher and Lower groups.
    pub competency_fraction: f64,
    /// Assignment whose attempts define competency; its questions are left out
    /// of competency-filtered breakdowns.
    pub excluded_assignment_for_competency: AssignmentId,
}

impl Default for AnalyticsConfig {
    fn default() -> Self {
        Self {
            contemplation_cutoff_secs: 3600.0,
            difficulty_group_size_per_assignment: 1,
            competency_fraction: 1.0 / 3.0,
            excluded_assignment_for_competency: AssignmentId::new("A1").expect("non-empty"),
        }
    }
}

impl AnalyticsConfig {
    pub fn validate(&self) -> Result<(), InvalidConfig> {
        if !(self.contemplation_cutoff_secs > 0.0) || !self.contemplation_cutoff_secs.is_finite() {
            return Err(InvalidConfig("contemplation_cutoff_secs must be positive".into()));
        }
        if self.difficulty_group_size_per_assignment == 0 {
            return Err(InvalidConfig("difficulty_group_size_per_assignment must be at least 1".into()));
        }
        if !(self.competency_fraction > 0.0 && self.competency_fraction <= 0.5) {
            return Err(InvalidConfig("competency_fraction must lie in (0, 0.5]".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        AnalyticsConfig::default().validate().unwrap();
    }

    #[test]
    #[allow(clippy::field_reassign_with_default)]
    fn bounds() {
        let mut c = AnalyticsConfig::default();
        c.competency_fraction = 0.6;
        assert!(c.validate().is_err());
        c.competency_fraction = 0.5;
        c.contemplation_cutoff_secs = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_input_keeps_defaults() {
        let c: AnalyticsConfig = serde_json::from_str(r#"{"contemplation_cutoff_secs": 1800}"#).unwrap();
        assert_eq!(c.contemplation_cutoff_secs, 1800.0);
        assert_eq!(c.excluded_assignment_for_competency.as_str(), "A1");
    }
}
