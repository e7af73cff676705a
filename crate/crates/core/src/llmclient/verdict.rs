use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Clone,
    NotClone,
    Unparseable,
}

impl Decision {
    pub fn as_clone(self) -> Option<bool> {
        match self {
            Decision::Clone => Some(true),
            Decision::NotClone => Some(false),
            Decision::Unparseable => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub decision: Decision,
    pub explanation: String,
    pub raw: String,
}

fn classify_token(rest: &str) -> Decision {
    let norm: String = rest
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '_' || c.is_whitespace() || *c == '-')
        .collect::<String>()
        .to_ascii_uppercase()
        .split(|c: char| c.is_whitespace() || c == '-' || c == '_')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("_");
    match norm.as_str() {
        "CLONE" => Decision::Clone,
        "NOT_CLONE" | "NOTCLONE" | "NON_CLONE" | "NONCLONE" => Decision::NotClone,
        _ => Decision::Unparseable,
    }
}

/// Read the decision from the last line containing `VERDICT:`
/// (case-insensitive). Everything before that line is the explanation.
pub fn parse_verdict(response: &str) -> Verdict {
    let lines: Vec<&str> = response.lines().collect();
    let found = lines.iter().enumerate().rev().find_map(|(i, line)| {
        let upper = line.to_ascii_uppercase();
        upper.rfind("VERDICT:").map(|pos| (i, &line[pos + "VERDICT:".len()..]))
    });
    match found {
        Some((i, rest)) => Verdict {
            decision: classify_token(rest),
            explanation: lines[..i].join("\n").trim().to_string(),
            raw: response.to_string(),
        },
        None => Verdict {
            decision: Decision::Unparseable,
            explanation: response.trim().to_string(),
            raw: response.to_string(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn final_line_decides() {
        let v = parse_verdict("Both compute a GCD.\nVERDICT: CLONE");
        assert_eq!(v.decision, Decision::Clone);
        assert_eq!(v.explanation, "Both compute a GCD.");
        assert_eq!(parse_verdict("different tasks\nverdict: not_clone\n").decision, Decision::NotClone);
        assert_eq!(parse_verdict("**Verdict: Not Clone**").decision, Decision::NotClone);
    }

    #[test]
    fn last_verdict_line_wins() {
        let v = parse_verdict("VERDICT: CLONE\non reflection\nVERDICT: NOT_CLONE");
        assert_eq!(v.decision, Decision::NotClone);
    }

    #[test]
    fn missing_or_ambiguous_is_unparseable() {
        assert_eq!(parse_verdict("I think they are clones.").decision, Decision::Unparseable);
        assert_eq!(parse_verdict("VERDICT: CLONE or NOT_CLONE").decision, Decision::Unparseable);
        assert_eq!(parse_verdict("VERDICT:").decision, Decision::Unparseable);
        assert_eq!(parse_verdict("").decision, Decision::Unparseable);
    }
}
