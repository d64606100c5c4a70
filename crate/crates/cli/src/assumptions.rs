use std::fmt;

use serde::{Deserialize, Serialize};
use sociallearn::graph::Connectivity;
use sociallearn::models::{check_convex_combination, ConvexCheck};

use crate::error::Result;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub number: u8,
    pub name: String,
    pub status: CheckStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != CheckStatus::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }

    pub fn get(&self, number: u8) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.number == number)
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass",
                CheckStatus::Fail => "FAIL",
                CheckStatus::NotApplicable => "n/a",
            };
            write!(f, "assumption {} ({}): {status}", c.number, c.name)?;
            if let Some(w) = &c.witness {
                write!(f, " [{w}]")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn check(number: u8, name: &str, status: CheckStatus, witness: Option<String>) -> AssumptionCheck {
    AssumptionCheck {
        number,
        name: name.into(),
        status,
        witness,
    }
}

/// Runs the five model assumptions against a resolved scenario.
pub fn check_assumptions(s: &Scenario) -> Result<AssumptionReport> {
    use CheckStatus::*;
    let theta0 = s.config.theta0;
    let mut checks = Vec::with_capacity(5);

    checks.push(match s.net.connectivity() {
        Connectivity::Connected => check(1, "strong connectivity", Pass, None),
        Connectivity::NoPath { from, to } => check(
            1,
            "strong connectivity",
            Fail,
            Some(format!("no path from agent {from} to agent {to}")),
        ),
        Connectivity::NoSelfLoop => check(
            1,
            "strong connectivity",
            Fail,
            Some("every self-weight is zero".into()),
        ),
    });

    let infinite = s.models.iter().enumerate().find_map(|(k, fam)| {
        (0..fam.num_hypotheses())
            .find(|&t| fam.kl_divergence(theta0, t).is_err())
            .map(|t| (k, t))
    });
    checks.push(match infinite {
        None => check(2, "finite divergences", Pass, None),
        Some((k, t)) => check(
            2,
            "finite divergences",
            Fail,
            Some(format!("agent {k}: D(L_theta0 || L_{t}) is infinite")),
        ),
    });

    // Resolution already rejects non-positive priors, so reaching here means
    // the check passes; it is repeated for the report.
    let low = s.priors.min_entry();
    checks.push(if low > 0.0 {
        check(3, "positive priors", Pass, None)
    } else {
        check(
            3,
            "positive priors",
            Fail,
            Some(format!("smallest prior entry {low}")),
        )
    });

    checks.push(match s.structure.shared_indistinguishable() {
        None => check(4, "global identifiability", Pass, None),
        Some(t) => check(
            4,
            "global identifiability",
            Fail,
            Some(format!(
                "hypothesis {t} is indistinguishable at every agent"
            )),
        ),
    });

    let mut convex = check(
        5,
        "true likelihood outside the distinguishable hull",
        NotApplicable,
        None,
    );
    for (k, fam) in s.models.iter().enumerate() {
        match check_convex_combination(fam, theta0, s.structure.distinguishable(k))? {
            ConvexCheck::NotApplicable => {}
            ConvexCheck::Satisfied => {
                if convex.status == NotApplicable {
                    convex.status = Pass;
                }
            }
            ConvexCheck::Violated { weights } => {
                convex.status = Fail;
                convex.witness = Some(format!(
                    "agent {k}: L_theta0 = sum of {weights:?} over {:?}",
                    s.structure.distinguishable(k)
                ));
                break;
            }
        }
    }
    checks.push(convex);

    Ok(AssumptionReport { checks })
}
