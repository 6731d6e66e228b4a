use crate::activation::ActivationKind;

/// Prefix replacement: the first `early_layers` slots get `early`, the rest `rest`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveConfig {
    pub early_layers: usize,
    pub early: ActivationKind,
    pub rest: ActivationKind,
}

impl Default for NaiveConfig {
    fn default() -> Self {
        Self {
            early_layers: 3,
            early: ActivationKind::Relu,
            rest: ActivationKind::Silu,
        }
    }
}

pub fn naive_assignment(layers: usize, config: NaiveConfig) -> Vec<ActivationKind> {
    (0..layers)
        .map(|l| if l < config.early_layers { config.early } else { config.rest })
        .collect()
}
