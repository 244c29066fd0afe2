//! Analysis results and their text and JSON renderings.

use std::fmt;

use serde_json::{json, Value as Json};

use crate::semantics::{NodeId, Scenario};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Property {
    AssetSafety,
    Liquidity,
    /// Liquidity when only trusted parties act after the contract is reached.
    LiquidityTrustedOnly,
    DeadEnds,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::AssetSafety => "asset-safety",
            Property::Liquidity => "liquidity",
            Property::LiquidityTrustedOnly => "liquidity-trusted-only",
            Property::DeadEnds => "dead-ends",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    HoldsWithinBounds,
    Violated,
    InconclusiveBudget,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::HoldsWithinBounds => "holds-within-bounds",
            Verdict::Violated => "violated",
            Verdict::InconclusiveBudget => "inconclusive-budget",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FindingKind {
    /// An unsafe move was attempted.
    Stuck,
    /// Assets remain and no continuation can release them.
    Locked,
    /// Progress waits on one untrusted party whose inaction harms others.
    Withheld,
    /// Nothing can ever happen again.
    Terminal,
}

impl FindingKind {
    pub fn name(self) -> &'static str {
        match self {
            FindingKind::Stuck => "stuck",
            FindingKind::Locked => "locked",
            FindingKind::Withheld => "withheld",
            FindingKind::Terminal => "terminal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Finding {
    pub kind: FindingKind,
    pub state: String,
    /// The withholding party, for `Withheld` findings.
    pub party: Option<String>,
    pub detail: String,
    /// Actions from the start that reach the finding.
    pub scenario: Scenario,
    pub node: NodeId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub horizon: i64,
    pub budget: usize,
    pub configurations: usize,
    pub transitions: usize,
    /// Configurations were identified up to a shift in time.
    pub time_shifted: bool,
    pub complete: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnalysisReport {
    pub property: Property,
    pub verdict: Verdict,
    pub findings: Vec<Finding>,
    pub bounds: Bounds,
    /// A variant of the same property whose verdict differs.
    pub variant: Option<Box<AnalysisReport>>,
}

impl AnalysisReport {
    /// Findings that count against the property.
    pub fn witnesses(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.kind != FindingKind::Terminal)
    }

    pub fn to_json(&self) -> Json {
        let findings: Vec<Json> = self
            .findings
            .iter()
            .map(|f| {
                json!({
                    "kind": f.kind.name(),
                    "state": f.state,
                    "party": f.party,
                    "detail": f.detail,
                    "scenario": f.scenario.to_json(),
                })
            })
            .collect();
        let b = &self.bounds;
        let mut out = json!({
            "property": self.property.name(),
            "verdict": self.verdict.name(),
            "findings": findings,
            "bounds": {
                "horizon": b.horizon,
                "budget": b.budget,
                "configurations": b.configurations,
                "transitions": b.transitions,
                "time-shifted": b.time_shifted,
                "complete": b.complete,
            },
        });
        if let Some(variant) = &self.variant {
            out["variant"] = variant.to_json();
        }
        out
    }
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.bounds;
        write!(
            f,
            "{}: {} (horizon {}, {} configurations",
            self.property.name(),
            self.verdict.name(),
            b.horizon,
            b.configurations
        )?;
        if b.time_shifted {
            f.write_str(", up to time shift")?;
        }
        if !b.complete {
            write!(f, ", budget {} exhausted", b.budget)?;
        }
        writeln!(f, ")")?;
        for (i, finding) in self.findings.iter().enumerate() {
            write!(f, "  {}. {} in @{}", i + 1, finding.kind.name(), finding.state)?;
            if let Some(party) = &finding.party {
                write!(f, " by {party}")?;
            }
            writeln!(f, ": {}", finding.detail)?;
            for line in finding.scenario.to_text().lines() {
                writeln!(f, "       {line}")?;
            }
        }
        if let Some(variant) = &self.variant {
            write!(f, "{variant}")?;
        }
        Ok(())
    }
}
