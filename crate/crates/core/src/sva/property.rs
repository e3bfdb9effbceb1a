use std::fmt;

use serde::{Deserialize, Serialize};

use crate::rtl::ast::SourceSpan;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PropKind {
    Assert,
    Cover,
    /// Environment constraint; never generated.
    Assume,
}

impl PropKind {
    pub fn keyword(self) -> &'static str {
        match self {
            PropKind::Assert => "assert",
            PropKind::Cover => "cover",
            PropKind::Assume => "assume",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", content = "cycles", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ImplOp {
    /// `|->`
    Overlap,
    /// `|=>`
    NonOverlap,
    /// `|-> ##N`
    OverlapDelay(u32),
}

impl ImplOp {
    /// Cycles between antecedent and consequent sampling.
    pub fn delay(self) -> u32 {
        match self {
            ImplOp::Overlap => 0,
            ImplOp::NonOverlap => 1,
            ImplOp::OverlapDelay(n) => n,
        }
    }
}

impl fmt::Display for ImplOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImplOp::Overlap => f.write_str("|->"),
            ImplOp::NonOverlap => f.write_str("|=>"),
            ImplOp::OverlapDelay(n) => write!(f, "|-> ##{n}"),
        }
    }
}

/// Link from a property back to the coverage locations it was written for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub file: String,
    pub locations: Vec<SourceSpan>,
    pub iteration: u32,
}

impl Trace {
    pub fn comment_lines(&self) -> Vec<String> {
        self.locations
            .iter()
            .map(|s| format!("// COV {}:{} iter={}", self.file, s, self.iteration))
            .collect()
    }
}

/// A single-implication SVA property.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvaProperty {
    pub name: String,
    pub kind: PropKind,
    /// Clocking event as written, e.g. `@(posedge clk)` or `` `CLK ``.
    pub clock_expr: String,
    pub disable_expr: Option<String>,
    pub antecedent: String,
    pub op: ImplOp,
    pub consequent: String,
    /// Describes the checked behavior; seeds fresh names.
    #[serde(default)]
    pub behavior: String,
    pub trace: Option<Trace>,
}

impl SvaProperty {
    pub fn body(&self) -> String {
        format!("{} {} {}", self.antecedent, self.op, self.consequent)
    }

    /// `property ... endproperty` followed by its directive.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("property {};\n", self.name));
        out.push_str(&self.clock_expr);
        if let Some(d) = &self.disable_expr {
            out.push_str(&format!(" disable iff ({d})"));
        }
        out.push('\n');
        out.push_str(&self.body());
        out.push_str(";\nendproperty\n");
        out.push_str(&format!("{} property ({});\n", self.kind.keyword(), self.name));
        out
    }

    /// Rendered block preceded by its trace comments.
    pub fn render_with_trace(&self) -> String {
        let mut out = String::new();
        if let Some(t) = &self.trace {
            for l in t.comment_lines() {
                out.push_str(&l);
                out.push('\n');
            }
        }
        out.push_str(&self.render());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_listing_six_layout() {
        let p = SvaProperty {
            name: "sum_of_a_and_b".into(),
            kind: PropKind::Assert,
            clock_expr: "@(posedge clk)".into(),
            disable_expr: Some("!rst".into()),
            antecedent: "1'b1".into(),
            op: ImplOp::NonOverlap,
            consequent: "c == $past(a + b)".into(),
            behavior: String::new(),
            trace: None,
        };
        assert_eq!(
            p.render(),
            "property sum_of_a_and_b;\n@(posedge clk) disable iff (!rst)\n1'b1 |=> c == $past(a + b);\nendproperty\nassert property (sum_of_a_and_b);\n"
        );
    }
}
