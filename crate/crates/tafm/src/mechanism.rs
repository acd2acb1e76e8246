//! Uniform mechanism dispatch.
//!
//! Every mechanism in the library behind one enum, so the auditor and the
//! command line can run any of them by name. Each mechanism declares the
//! instance family it needs, and `run` checks the instance data against
//! that family before dispatching; the check looks at the numbers, not the
//! instance's declared tag.

use crate::assignment::Outcome;
use crate::error::{Error, Result};
use crate::fractional::{mkp_fractional, sigap_fractional_greedy, vigap_fractional_greedy};
use crate::instance::{EdgeSet, Instance, Variant};
use crate::matching::{mbm_mechanism, mwbm_greedy, mwbm_optimal_baseline};
use crate::rounding::{compose_mechanism, gap_mechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mechanism {
    Mbm,
    MwbmGreedy,
    MwbmOptimalBaseline,
    MkpFractional,
    SigapGreedy,
    VigapGreedy,
    ComposeMkp,
    ComposeSigap,
    ComposeVigap,
    Gap,
}

impl Mechanism {
    pub fn all() -> [Mechanism; 10] {
        [
            Mechanism::Mbm,
            Mechanism::MwbmGreedy,
            Mechanism::MwbmOptimalBaseline,
            Mechanism::MkpFractional,
            Mechanism::SigapGreedy,
            Mechanism::VigapGreedy,
            Mechanism::ComposeMkp,
            Mechanism::ComposeSigap,
            Mechanism::ComposeVigap,
            Mechanism::Gap,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mechanism::Mbm => "mbm",
            Mechanism::MwbmGreedy => "mwbm_greedy",
            Mechanism::MwbmOptimalBaseline => "mwbm_optimal_baseline",
            Mechanism::MkpFractional => "mkp_fractional",
            Mechanism::SigapGreedy => "sigap_greedy",
            Mechanism::VigapGreedy => "vigap_greedy",
            Mechanism::ComposeMkp => "compose_mkp",
            Mechanism::ComposeSigap => "compose_sigap",
            Mechanism::ComposeVigap => "compose_vigap",
            Mechanism::Gap => "gap_mechanism",
        }
    }

    /// Accepts the canonical name plus a few spelled-out aliases.
    pub fn from_name(name: &str) -> Option<Mechanism> {
        let m = match name {
            "mbm" | "mbm_mechanism" => Mechanism::Mbm,
            "mwbm_greedy" => Mechanism::MwbmGreedy,
            "mwbm_optimal_baseline" | "mwbm_optimal" => Mechanism::MwbmOptimalBaseline,
            "mkp_fractional" => Mechanism::MkpFractional,
            "sigap_greedy" | "sigap_fractional_greedy" => Mechanism::SigapGreedy,
            "vigap_greedy" | "vigap_fractional_greedy" => Mechanism::VigapGreedy,
            "compose_mkp" => Mechanism::ComposeMkp,
            "compose_sigap" => Mechanism::ComposeSigap,
            "compose_vigap" => Mechanism::ComposeVigap,
            "gap_mechanism" | "gap" => Mechanism::Gap,
            _ => return None,
        };
        Some(m)
    }

    /// The structural family the instance data must satisfy.
    pub fn required_variant(&self) -> Variant {
        match self {
            Mechanism::Mbm => Variant::Mbm,
            Mechanism::MwbmGreedy | Mechanism::MwbmOptimalBaseline => Variant::Mwbm,
            Mechanism::MkpFractional | Mechanism::ComposeMkp => Variant::Mkp,
            Mechanism::SigapGreedy | Mechanism::ComposeSigap => Variant::Sigap,
            Mechanism::VigapGreedy | Mechanism::ComposeVigap => Variant::Vigap,
            Mechanism::Gap => Variant::Gap,
        }
    }

    /// Everything here is truthful except the exact-matching baseline,
    /// which is kept for the auditor to catch.
    pub fn claims_truthful(&self) -> bool {
        !matches!(self, Mechanism::MwbmOptimalBaseline)
    }

    pub fn run(&self, inst: &Instance, edges: &EdgeSet) -> Result<Outcome> {
        if inst.check_structure(self.required_variant()).is_err() {
            return Err(Error::VariantMismatch {
                mechanism: self.name().to_string(),
                required: self.required_variant(),
                got: inst.variant,
            });
        }
        let outcome = match self {
            Mechanism::Mbm => Outcome::Deterministic(mbm_mechanism(inst, edges)),
            Mechanism::MwbmGreedy => Outcome::Deterministic(mwbm_greedy(inst, edges)),
            Mechanism::MwbmOptimalBaseline => {
                Outcome::Deterministic(mwbm_optimal_baseline(inst, edges))
            }
            Mechanism::MkpFractional => Outcome::Fractional(mkp_fractional(inst, edges)),
            Mechanism::SigapGreedy => Outcome::Fractional(sigap_fractional_greedy(inst, edges)),
            Mechanism::VigapGreedy => Outcome::Fractional(vigap_fractional_greedy(inst, edges)),
            Mechanism::ComposeMkp => {
                Outcome::Randomized(compose_mechanism(mkp_fractional, inst, edges)?)
            }
            Mechanism::ComposeSigap => {
                Outcome::Randomized(compose_mechanism(sigap_fractional_greedy, inst, edges)?)
            }
            Mechanism::ComposeVigap => {
                Outcome::Randomized(compose_mechanism(vigap_fractional_greedy, inst, edges)?)
            }
            Mechanism::Gap => Outcome::Randomized(gap_mechanism(inst, edges)?),
        };
        Ok(outcome)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    #[test]
    fn names_round_trip() {
        for mech in Mechanism::all() {
            assert_eq!(Mechanism::from_name(mech.name()), Some(mech));
        }
        assert_eq!(Mechanism::from_name("mbm_mechanism"), Some(Mechanism::Mbm));
        assert_eq!(Mechanism::from_name("gap"), Some(Mechanism::Gap));
        assert_eq!(Mechanism::from_name("unknown"), None);
    }

    #[test]
    fn structural_gate_rejects_mismatched_data() {
        let inst = Instance::new(
            vec![vec![rat_int(1), rat_int(2)]],
            vec![vec![rat_int(1), rat_int(1)]],
            vec![rat_int(1), rat_int(1)],
            Variant::Gap,
        );
        let edges = EdgeSet::complete(1, 2);
        // Values vary across the row, so the value-invariant greedy balks.
        let err = Mechanism::VigapGreedy.run(&inst, &edges).unwrap_err();
        match err {
            Error::VariantMismatch { mechanism, .. } => assert_eq!(mechanism, "vigap_greedy"),
            other => panic!("unexpected error {other:?}"),
        }
        // The general mechanism accepts the same data.
        assert!(Mechanism::Gap.run(&inst, &edges).is_ok());
    }

    #[test]
    fn structural_gate_accepts_stronger_data_under_weaker_tags() {
        let inst = Instance::new(
            vec![vec![rat_int(1); 2]; 2],
            vec![vec![rat_int(1); 2]; 2],
            vec![rat_int(1); 2],
            Variant::Gap,
        );
        let edges = EdgeSet::complete(2, 2);
        for mech in Mechanism::all() {
            assert!(
                mech.run(&inst, &edges).is_ok(),
                "{} rejected an all-unit instance",
                mech.name()
            );
        }
    }

    #[test]
    fn outcome_kinds_match_mechanism_class() {
        let inst = Instance::new(
            vec![vec![rat_int(2); 2]; 2],
            vec![vec![rat_int(1); 2]; 2],
            vec![rat_int(1); 2],
            Variant::Gap,
        );
        let edges = EdgeSet::complete(2, 2);
        let unit = Instance::new(
            vec![vec![rat_int(1); 2]; 2],
            vec![vec![rat_int(1); 2]; 2],
            vec![rat_int(1); 2],
            Variant::Mbm,
        );
        assert!(matches!(
            Mechanism::Mbm.run(&unit, &edges).unwrap(),
            Outcome::Deterministic(_)
        ));
        assert!(matches!(
            Mechanism::MkpFractional.run(&inst, &edges).unwrap(),
            Outcome::Fractional(_)
        ));
        assert!(matches!(
            Mechanism::ComposeMkp.run(&inst, &edges).unwrap(),
            Outcome::Randomized(_)
        ));
        assert!(matches!(
            Mechanism::Gap.run(&inst, &edges).unwrap(),
            Outcome::Randomized(_)
        ));
    }
}
