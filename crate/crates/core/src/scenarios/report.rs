use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The check holds for a trivial reason and proves nothing.
    Degenerate,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Degenerate => "degenerate",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assertion {
    pub id: String,
    pub expected: String,
    pub observed: String,
    pub tolerance: String,
    pub verdict: Verdict,
}

impl Assertion {
    pub fn new(id: impl Into<String>, expected: impl Into<String>, observed: impl Into<String>, tolerance: impl Into<String>, ok: bool) -> Self {
        Self {
            id: id.into(),
            expected: expected.into(),
            observed: observed.into(),
            tolerance: tolerance.into(),
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        }
    }

    /// `observed ≤ limit`.
    pub fn at_most(id: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self::new(id, format!("<= {limit:e}"), format!("{observed:.6e}"), format!("{limit:e}"), observed <= limit)
    }

    /// `observed < limit`.
    pub fn below(id: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self::new(id, format!("< {limit}"), format!("{observed:.6e}"), "strict", observed < limit)
    }

    /// `observed > limit`.
    pub fn above(id: impl Into<String>, observed: f64, limit: f64) -> Self {
        Self::new(id, format!("> {limit}"), format!("{observed:.6e}"), "strict", observed > limit)
    }

    pub fn flag(id: impl Into<String>, expected: impl Into<String>, observed: impl Into<String>, ok: bool) -> Self {
        Self::new(id, expected, observed, "exact", ok)
    }

    pub fn degenerate(mut self) -> Self {
        if self.verdict == Verdict::Pass {
            self.verdict = Verdict::Degenerate;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssertionReport {
    pub scenario: String,
    pub seed: u64,
    pub assertions: Vec<Assertion>,
}

impl AssertionReport {
    /// Fail if anything failed, degenerate if anything was degenerate,
    /// otherwise pass.
    pub fn verdict(&self) -> Verdict {
        if self.assertions.iter().any(|a| a.verdict == Verdict::Fail) {
            Verdict::Fail
        } else if self.assertions.iter().any(|a| a.verdict == Verdict::Degenerate) {
            Verdict::Degenerate
        } else {
            Verdict::Pass
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| a.verdict != Verdict::Pass)
    }

    pub fn get(&self, id: &str) -> Option<&Assertion> {
        self.assertions.iter().find(|a| a.id == id)
    }
}
