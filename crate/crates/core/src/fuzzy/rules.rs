use serde::{Deserialize, Serialize};

use super::{MembershipTable, OutputTerm, Term, Variable};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub variable: Variable,
    pub term: Term,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub negated: bool,
}

impl Atom {
    pub fn is(variable: Variable, term: Term) -> Self {
        Self { variable, term, negated: false }
    }

    pub fn is_not(variable: Variable, term: Term) -> Self {
        Self { variable, term, negated: true }
    }
}

/// `IF all(atoms) AND any(conjunctions) THEN then`.
///
/// `any_of` is empty for ordinary rules; when present its degree is the
/// maximum of its min-conjunctions and enters the outer minimum.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub all: Vec<Atom>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub any_of: Vec<Vec<Atom>>,
    pub then: OutputTerm,
}

impl FuzzyRule {
    pub fn new(all: Vec<Atom>, then: OutputTerm) -> Self {
        Self { all, any_of: Vec::new(), then }
    }

    pub fn atoms(&self) -> impl Iterator<Item = &Atom> {
        self.all.iter().chain(self.any_of.iter().flatten())
    }
}

/// The two decision modules. Module 1 reads the front and back vehicles,
/// module 2 the next-front vehicle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleBase {
    pub module1: Vec<FuzzyRule>,
    pub module2: Vec<FuzzyRule>,
}

impl Default for RuleBase {
    fn default() -> Self {
        Self::standard()
    }
}

impl RuleBase {
    pub fn standard() -> Self {
        use OutputTerm::*;
        use Term::*;
        use Variable::*;

        let pfct = |t| Atom::is(PerceivedFrontCollisionTime, t);
        let fd = |t| Atom::is(FrontDistance, t);
        let fd_terms = [Big, Medium, Small, VerySmall];

        let mut module1 = vec![
            FuzzyRule::new(vec![pfct(Big), fd(Big), Atom::is_not(Velocity, Small)], PM),
            FuzzyRule::new(vec![pfct(Big), fd(Medium), Atom::is_not(Velocity, Small)], PS),
            FuzzyRule::new(vec![pfct(Big), fd(Small)], Z),
            FuzzyRule::new(vec![pfct(Big), fd(VerySmall)], Z),
        ];
        for (f, out) in fd_terms.into_iter().zip([Z, Z, NS, NS]) {
            module1.push(FuzzyRule::new(vec![pfct(Medium), fd(f)], out));
        }
        for f in fd_terms {
            module1.push(FuzzyRule::new(vec![pfct(Small), fd(f)], NM));
        }
        for f in fd_terms {
            module1.push(FuzzyRule::new(vec![pfct(VerySmall), fd(f)], NB));
        }
        // jam situation
        module1.push(FuzzyRule::new(vec![pfct(Big), Atom::is(Velocity, Small)], PB));
        for (f, out) in [(Medium, NS), (Small, NM), (VerySmall, NM)] {
            module1.push(FuzzyRule::new(vec![Atom::is(WorstFrontCollisionTime, Small), fd(f)], out));
        }
        // pushing effect from a tailgating back vehicle
        module1.push(FuzzyRule {
            all: vec![Atom::is(BackCollisionTime, VerySmall), Atom::is(BackDistance, VerySmall)],
            any_of: vec![
                vec![pfct(Big), fd(Big)],
                vec![pfct(Big), fd(Medium)],
                vec![pfct(Medium), fd(Big)],
                vec![pfct(Medium), fd(Medium)],
            ],
            then: PS,
        });

        let nfct = |t| Atom::is(NextFrontCollisionTime, t);
        let nfd = |t| Atom::is(NextFrontDistance, t);
        let nfd_terms = [VerySmall, Small, Medium, Big];
        let mut module2 = Vec::new();
        for (f, out) in nfd_terms.into_iter().zip([NB, NB, NM, NM]) {
            module2.push(FuzzyRule::new(vec![nfct(VerySmall), nfd(f)], out));
        }
        for (f, out) in nfd_terms.into_iter().zip([NM, NM, NS, NS]) {
            module2.push(FuzzyRule::new(vec![nfct(Small), nfd(f)], out));
        }
        module2.push(FuzzyRule::new(vec![nfct(Medium), nfd(VerySmall)], NS));
        module2.push(FuzzyRule::new(vec![nfct(Big), nfd(VerySmall)], NS));

        Self { module1, module2 }
    }

    /// Checks that every referenced term exists in `table`.
    pub fn validate(&self, table: &MembershipTable) -> Result<()> {
        for rule in self.module1.iter().chain(&self.module2) {
            if rule.all.is_empty() && rule.any_of.is_empty() {
                return Err(Error::InvalidConfig("rule without antecedent".into()));
            }
            if rule.any_of.iter().any(Vec::is_empty) {
                return Err(Error::InvalidConfig("empty OR-conjunction".into()));
            }
            for atom in rule.atoms() {
                if table.input(atom.variable, atom.term).is_none() {
                    return Err(Error::MissingTerm {
                        variable: atom.variable.name().into(),
                        term: atom.term.name().into(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_rule_counts() {
        let rb = RuleBase::standard();
        // 16 PFCT x FD cells, jam rule, three WCT rules, pushing rule
        assert_eq!(rb.module1.len(), 21);
        assert_eq!(rb.module2.len(), 10);
        let negated: Vec<_> = rb
            .module1
            .iter()
            .filter(|r| r.all.iter().any(|a| a.negated))
            .map(|r| r.then)
            .collect();
        assert_eq!(negated, vec![OutputTerm::PM, OutputTerm::PS]);
        assert_eq!(rb.module1.iter().filter(|r| !r.any_of.is_empty()).count(), 1);
    }

    #[test]
    fn toml_round_trip() {
        let rb = RuleBase::standard();
        let text = rb.to_toml().unwrap();
        assert_eq!(RuleBase::from_toml(&text).unwrap(), rb);
    }
}
