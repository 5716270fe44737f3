//! Fuzzy decision modules: membership functions, rule bases, rule weights,
//! GWAF defuzzification and the two-module combiner.

mod engine;
mod membership;
mod rules;
mod table;

pub use engine::{combine, eval_module, gwaf, rule_weight, Decision};
pub use membership::{MembershipFunction, Shape};
pub use rules::{Atom, FuzzyRule, RuleBase};
pub use table::{Degrees, Inputs, MembershipTable};

use serde::{Deserialize, Serialize};

/// Linguistic input variables perceived by a driver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variable {
    #[serde(rename = "FD")]
    FrontDistance,
    #[serde(rename = "NFD")]
    NextFrontDistance,
    #[serde(rename = "BD")]
    BackDistance,
    #[serde(rename = "PFCT")]
    PerceivedFrontCollisionTime,
    #[serde(rename = "WCT")]
    WorstFrontCollisionTime,
    #[serde(rename = "NFCT")]
    NextFrontCollisionTime,
    #[serde(rename = "BCT")]
    BackCollisionTime,
    #[serde(rename = "VELOCITY")]
    Velocity,
}

impl Variable {
    pub const ALL: [Variable; 8] = [
        Variable::FrontDistance,
        Variable::NextFrontDistance,
        Variable::BackDistance,
        Variable::PerceivedFrontCollisionTime,
        Variable::WorstFrontCollisionTime,
        Variable::NextFrontCollisionTime,
        Variable::BackCollisionTime,
        Variable::Velocity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Variable::FrontDistance => "FD",
            Variable::NextFrontDistance => "NFD",
            Variable::BackDistance => "BD",
            Variable::PerceivedFrontCollisionTime => "PFCT",
            Variable::WorstFrontCollisionTime => "WCT",
            Variable::NextFrontCollisionTime => "NFCT",
            Variable::BackCollisionTime => "BCT",
            Variable::Velocity => "VELOCITY",
        }
    }
}

/// Input terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Term {
    VerySmall,
    Small,
    Medium,
    Big,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::VerySmall, Term::Small, Term::Medium, Term::Big];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Term::VerySmall => "VERY_SMALL",
            Term::Small => "SMALL",
            Term::Medium => "MEDIUM",
            Term::Big => "BIG",
        }
    }
}

/// Acceleration output terms, from Negative Big to Positive Big.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OutputTerm {
    NB,
    NM,
    NS,
    Z,
    PS,
    PM,
    PB,
}

impl OutputTerm {
    pub const ALL: [OutputTerm; 7] = [
        OutputTerm::NB,
        OutputTerm::NM,
        OutputTerm::NS,
        OutputTerm::Z,
        OutputTerm::PS,
        OutputTerm::PM,
        OutputTerm::PB,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}
