use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::TargetKind;
use crate::error::{Error, Result};
use crate::nnkernel::{recurrent_bound, Activation};

/// The full architecture and its ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Feature importance + 1D CNN + zone-distributed IndRNN.
    Focir,
    /// No feature importance layer.
    Ocir,
    /// No IndRNN.
    Foc,
    /// No CNN.
    Fir,
    /// Feature importance + dense head only.
    Fin,
    /// CNN only.
    CnnOnly,
    /// Zone-distributed IndRNN only.
    IndrnnOnly,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Focir,
        Variant::Ocir,
        Variant::Foc,
        Variant::Fir,
        Variant::Fin,
        Variant::CnnOnly,
        Variant::IndrnnOnly,
    ];

    pub fn has_feature_importance(self) -> bool {
        matches!(
            self,
            Variant::Focir | Variant::Foc | Variant::Fir | Variant::Fin
        )
    }

    pub fn has_conv(self) -> bool {
        matches!(
            self,
            Variant::Focir | Variant::Ocir | Variant::Foc | Variant::CnnOnly
        )
    }

    pub fn has_indrnn(self) -> bool {
        matches!(
            self,
            Variant::Focir | Variant::Ocir | Variant::Fir | Variant::IndrnnOnly
        )
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Focir => "FOCIR-Net",
            Variant::Ocir => "OCIR-Net",
            Variant::Foc => "FOC-Net",
            Variant::Fir => "FIR-Net",
            Variant::Fin => "FIN-Net",
            Variant::CnnOnly => "1D-CNN",
            Variant::IndrnnOnly => "Zone-distributed IndRNN",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "focir" | "focirnet" => Ok(Variant::Focir),
            "ocir" | "ocirnet" => Ok(Variant::Ocir),
            "foc" | "focnet" => Ok(Variant::Foc),
            "fir" | "firnet" => Ok(Variant::Fir),
            "fin" | "finnet" => Ok(Variant::Fin),
            "cnnonly" | "1dcnn" | "cnn" => Ok(Variant::CnnOnly),
            "indrnnonly" | "indrnn" | "zonedistributedindrnn" => Ok(Variant::IndrnnOnly),
            _ => Err(Error::UnknownVariant(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub variant: Variant,
    pub lookback: usize,
    pub conv_filters: Vec<usize>,
    pub filter_length: usize,
    pub indrnn_hidden: usize,
    pub indrnn_layers: usize,
    pub dense_layers: usize,
    pub dense_units: usize,
    pub fi_activation: Activation,
    pub indrnn_activation: Activation,
    pub conv_activation: Activation,
    pub dense_hidden_activation: Activation,
    pub output_activation: Activation,
    pub target: TargetKind,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::Focir,
            lookback: 6,
            conv_filters: vec![200, 400],
            filter_length: 5,
            indrnn_hidden: 32,
            indrnn_layers: 2,
            dense_layers: 2,
            dense_units: 4,
            fi_activation: Activation::Sigmoid,
            indrnn_activation: Activation::Relu,
            conv_activation: Activation::Relu,
            dense_hidden_activation: Activation::Relu,
            output_activation: Activation::Linear,
            target: TargetKind::Demand,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 {
            return Err(Error::Config("lookback must be at least 1".into()));
        }
        if self.variant.has_conv() {
            if self.filter_length.is_multiple_of(2) || !(3..=13).contains(&self.filter_length) {
                return Err(Error::Config(format!(
                    "filter_length {} must be odd and within 3..=13",
                    self.filter_length
                )));
            }
            if self.conv_filters.is_empty() || self.conv_filters.contains(&0) {
                return Err(Error::Config(
                    "conv_filters needs positive layer widths".into(),
                ));
            }
        }
        if self.variant.has_indrnn() {
            if self.indrnn_layers == 0 || self.indrnn_hidden == 0 {
                return Err(Error::Config(
                    "IndRNN needs at least one layer of width >= 1".into(),
                ));
            }
            recurrent_bound(self.indrnn_activation, self.lookback)?;
        }
        if self.dense_units == 0 {
            return Err(Error::Config("dense_units must be at least 1".into()));
        }
        Ok(())
    }

    pub fn recurrent_bound(&self) -> Result<f64> {
        recurrent_bound(self.indrnn_activation, self.lookback)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variant_components() {
        let table = [
            (Variant::Focir, true, true, true),
            (Variant::Ocir, false, true, true),
            (Variant::Foc, true, true, false),
            (Variant::Fir, true, false, true),
            (Variant::Fin, true, false, false),
            (Variant::CnnOnly, false, true, false),
            (Variant::IndrnnOnly, false, false, true),
        ];
        for (v, fi, conv, rnn) in table {
            assert_eq!(
                (v.has_feature_importance(), v.has_conv(), v.has_indrnn()),
                (fi, conv, rnn),
                "{v}"
            );
        }
    }

    #[test]
    fn variant_parsing() {
        for v in Variant::ALL {
            assert_eq!(v.display_name().parse::<Variant>().unwrap(), v);
        }
        assert_eq!("cnn_only".parse::<Variant>().unwrap(), Variant::CnnOnly);
        assert!(matches!(
            "lstm".parse::<Variant>(),
            Err(Error::UnknownVariant(_))
        ));
    }

    #[test]
    fn defaults_follow_hyperparameter_table() {
        let c = ModelConfig::default();
        assert_eq!(c.conv_filters, vec![200, 400]);
        assert_eq!((c.dense_layers, c.dense_units), (2, 4));
        assert_eq!(c.fi_activation, Activation::Sigmoid);
        assert_eq!(c.indrnn_activation, Activation::Relu);
        assert_eq!(c.lookback, 6);
        c.validate().unwrap();
    }

    #[test]
    fn filter_length_rules() {
        for e in [2, 1, 15, 4] {
            let c = ModelConfig {
                filter_length: e,
                ..Default::default()
            };
            assert!(c.validate().is_err(), "{e}");
        }
        // no conv, filter length irrelevant
        let c = ModelConfig {
            variant: Variant::Fir,
            filter_length: 4,
            ..Default::default()
        };
        c.validate().unwrap();
        let c = ModelConfig {
            indrnn_activation: Activation::Sigmoid,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
