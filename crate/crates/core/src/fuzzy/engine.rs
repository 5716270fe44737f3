use super::{Degrees, FuzzyRule, MembershipTable, RuleBase};
use crate::error::{Error, Result};

fn atom_degree(degrees: &Degrees, atom: &super::Atom) -> Result<f64> {
    let mu = degrees
        .get(atom.variable, atom.term)
        .ok_or_else(|| Error::MissingInput(format!("{} {}", atom.variable.name(), atom.term.name())))?;
    Ok(if atom.negated { 1.0 - mu } else { mu })
}

/// Weight of a rule: minimum over its atoms (negated atoms contribute
/// `1 - mu`), with an optional OR block contributing the maximum of its
/// conjunctions.
pub fn rule_weight(rule: &FuzzyRule, degrees: &Degrees) -> Result<f64> {
    let mut w = 1.0f64;
    for atom in &rule.all {
        w = w.min(atom_degree(degrees, atom)?);
    }
    if !rule.any_of.is_empty() {
        let mut best = 0.0f64;
        for conj in &rule.any_of {
            let mut c = 1.0f64;
            for atom in conj {
                c = c.min(atom_degree(degrees, atom)?);
            }
            best = best.max(c);
        }
        w = w.min(best);
    }
    Ok(w)
}

/// Generalized weighted average over fired rules:
/// `sum_j w_j * sum(P_j) / sum_j |P_j| * w_j`.
///
/// Entries with zero weight are skipped. Returns 0 when nothing fired.
pub fn gwaf<'a, I>(fired: I) -> f64
where
    I: IntoIterator<Item = (f64, &'a [f64])>,
{
    let mut num = 0.0;
    let mut den = 0.0;
    for (w, preimage) in fired {
        if w > 0.0 && !preimage.is_empty() {
            num += w * preimage.iter().sum::<f64>();
            den += w * preimage.len() as f64;
        }
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Evaluates one module: weights every rule and defuzzifies the fired
/// consequents with GWAF.
pub fn eval_module(rules: &[FuzzyRule], degrees: &Degrees, table: &MembershipTable) -> Result<f64> {
    let mut num = 0.0;
    let mut den = 0.0;
    for rule in rules {
        let w = rule_weight(rule, degrees)?;
        if w <= 0.0 {
            continue;
        }
        let preimage = table.output(rule.then).preimage(w)?;
        num += w * preimage.iter().sum::<f64>();
        den += w * preimage.len() as f64;
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// Final acceleration from the two module outputs.
pub fn combine(a1: f64, a2: f64) -> f64 {
    if a1 <= 0.0 {
        a1.min(a2)
    } else if a2 <= -0.25 {
        (a1 + a2) / 2.0
    } else {
        a1
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Decision {
    pub module1: f64,
    pub module2: f64,
    pub combined: f64,
}

impl Decision {
    pub fn evaluate(rules: &RuleBase, degrees: &Degrees, table: &MembershipTable) -> Result<Self> {
        let module1 = eval_module(&rules.module1, degrees, table)?;
        let module2 = eval_module(&rules.module2, degrees, table)?;
        Ok(Self { module1, module2, combined: combine(module1, module2) })
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Atom, MembershipFunction, OutputTerm, Term, Variable};
    use super::*;

    fn degrees(pairs: &[(Variable, Term, f64)]) -> Degrees {
        let mut d = Degrees::default();
        for &(v, t, mu) in pairs {
            d.set(v, t, mu);
        }
        d
    }

    #[test]
    fn min_conjunction_and_negation() {
        use Term::*;
        use Variable::*;
        let rule = FuzzyRule::new(
            vec![Atom::is(FrontDistance, Big), Atom::is(PerceivedFrontCollisionTime, Big)],
            OutputTerm::PM,
        );
        let d = degrees(&[(FrontDistance, Big, 0.7), (PerceivedFrontCollisionTime, Big, 0.4)]);
        assert_eq!(rule_weight(&rule, &d).unwrap(), 0.4);

        let neg = FuzzyRule::new(vec![Atom::is_not(Velocity, Small)], OutputTerm::PM);
        let d = degrees(&[(Velocity, Small, 0.3)]);
        assert_eq!(rule_weight(&neg, &d).unwrap(), 0.7);
    }

    #[test]
    fn or_block_takes_the_max() {
        use Term::*;
        use Variable::*;
        let rule = FuzzyRule {
            all: vec![],
            any_of: vec![
                vec![Atom::is(FrontDistance, Big)],
                vec![Atom::is(FrontDistance, Medium)],
                vec![Atom::is(FrontDistance, Small)],
                vec![Atom::is(FrontDistance, VerySmall)],
            ],
            then: OutputTerm::PS,
        };
        let d = degrees(&[
            (FrontDistance, Big, 0.2),
            (FrontDistance, Medium, 0.6),
            (FrontDistance, Small, 0.1),
            (FrontDistance, VerySmall, 0.0),
        ]);
        assert_eq!(rule_weight(&rule, &d).unwrap(), 0.6);
    }

    #[test]
    fn missing_input_is_an_error() {
        let rule = FuzzyRule::new(vec![Atom::is(Variable::Velocity, Term::Small)], OutputTerm::PB);
        assert!(matches!(rule_weight(&rule, &Degrees::default()), Err(Error::MissingInput(_))));
    }

    #[test]
    fn gwaf_examples() {
        let tri = |a, b, c| MembershipFunction::triangular(a, b, c).unwrap();
        // two symmetric triangles reduce to the weighted average of centres
        let p1 = tri(-3.0, -2.0, -1.0).preimage(0.5).unwrap();
        let p2 = tri(0.0, 1.0, 2.0).preimage(0.5).unwrap();
        let y = gwaf([(0.5, p1.as_slice()), (0.5, p2.as_slice())]);
        assert!((y - -0.5).abs() < 1e-15);
        // asymmetric triangle, peak 0, feet -2 and 1
        let p = tri(-2.0, 0.0, 1.0).preimage(0.5).unwrap();
        assert_eq!(gwaf([(0.5, p.as_slice())]), -0.25);
        // single full-weight rule returns the peak
        let p = tri(0.75, 1.75, 3.0).preimage(1.0).unwrap();
        assert_eq!(gwaf([(1.0, p.as_slice())]), 1.75);
        // nothing fired
        assert_eq!(gwaf(std::iter::empty()), 0.0);
        assert_eq!(gwaf([(0.0, &[][..])]), 0.0);
    }

    #[test]
    fn gwaf_matches_dense_scan_of_the_inverse() {
        // oracle: locate the preimage of w = 0.5 by scanning the triangle
        // (peak 0, feet -2 and 1) on a fine grid
        let mf = MembershipFunction::triangular(-2.0, 0.0, 1.0).unwrap();
        let n = 3_000_000;
        let mut roots = Vec::new();
        let mut prev = mf.degree_at(-2.0) - 0.5;
        for k in 1..=n {
            let x = -2.0 + 3.0 * k as f64 / n as f64;
            let cur = mf.degree_at(x) - 0.5;
            if prev.signum() != cur.signum() || cur == 0.0 {
                roots.push(x);
            }
            prev = cur;
        }
        roots.dedup_by(|a, b| (*a - *b).abs() < 1e-5);
        assert_eq!(roots.len(), 2);
        let scanned = (0.5 * (roots[0] + roots[1])) / (2.0 * 0.5);
        assert!((scanned - -0.25).abs() < 1e-5);
    }

    #[test]
    fn combiner_arms() {
        assert_eq!(combine(-1.0, -2.0), -2.0);
        assert_eq!(combine(1.0, -0.5), 0.25);
        assert_eq!(combine(1.0, -0.1), 1.0);
        assert_eq!(combine(1.0, -0.25), 0.375);
        assert_eq!(combine(0.0, 3.0), 0.0);
    }
}
