use core::fmt;
use core::str::FromStr;

use alloc::string::ToString;

use crate::error::Error;

/// Entailment relation between a premise and a hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Label {
    Entailment,
    Neutral,
    Contradiction,
}

impl Label {
    /// Default classifier output order.
    pub const ALL: [Label; 3] = [Label::Entailment, Label::Neutral, Label::Contradiction];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Entailment => "entailment",
            Label::Neutral => "neutral",
            Label::Contradiction => "contradiction",
        }
    }

    /// Stable one-byte tag used by the checkpoint format.
    pub fn tag(self) -> u8 {
        match self {
            Label::Entailment => 0,
            Label::Neutral => 1,
            Label::Contradiction => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Label> {
        match tag {
            0 => Some(Label::Entailment),
            1 => Some(Label::Neutral),
            2 => Some(Label::Contradiction),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "entailment" => Ok(Label::Entailment),
            "neutral" => Ok(Label::Neutral),
            "contradiction" => Ok(Label::Contradiction),
            other => Err(Error::UnknownLabel(other.to_string())),
        }
    }
}

/// Position of `label` within `order`.
pub fn position(order: &[Label], label: Label) -> Result<usize, Error> {
    order
        .iter()
        .position(|&l| l == label)
        .ok_or_else(|| Error::LabelNotInOrder(label.as_str().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for l in Label::ALL {
            assert_eq!(l.as_str().parse::<Label>().unwrap(), l);
            assert_eq!(Label::from_tag(l.tag()), Some(l));
        }
        assert!(matches!("Entailment".parse::<Label>(), Err(Error::UnknownLabel(_))));
        assert_eq!(Label::from_tag(3), None);
    }

    #[test]
    fn position_in_reduced_order() {
        let order = [Label::Entailment, Label::Contradiction];
        assert_eq!(position(&order, Label::Contradiction).unwrap(), 1);
        assert!(position(&order, Label::Neutral).is_err());
    }
}
