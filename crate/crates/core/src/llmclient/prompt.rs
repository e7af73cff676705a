//! Chat prompts for clone classification with one clone and one non-clone
//! in-context example.

use serde::{Deserialize, Serialize};

use crate::corpus::CodeSnippet;
use crate::error::{Error, Result};

/// Definition of a clone pair given to the model.
pub const CLONE_DEFINITION: &str = "Two code snippets are a clone pair exactly when both implement the same \
functionality. Differences in syntax, identifier names, statement order or overall structure do not matter; \
only the task the code performs does.";

pub const VERDICT_CLONE: &str = "VERDICT: CLONE";
pub const VERDICT_NOT_CLONE: &str = "VERDICT: NOT_CLONE";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    /// Unrelated clone `(x, y)` and non-clone `(z, w)` examples.
    Baseline,
    /// Clone `(x, y)` and non-clone `(x, w)` examples sharing `x`.
    Contrastive,
}

impl std::str::FromStr for PromptKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(PromptKind::Baseline),
            "contrastive" => Ok(PromptKind::Contrastive),
            other => Err(Error::Validation(format!("unknown prompt kind `{other}`"))),
        }
    }
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PromptKind::Baseline => "baseline",
            PromptKind::Contrastive => "contrastive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub kind: PromptKind,
    pub target: [CodeSnippet; 2],
    pub clone_example: [CodeSnippet; 2],
    pub nonclone_example: [CodeSnippet; 2],
    pub definition: String,
}

impl PromptSpec {
    pub fn baseline(target: [CodeSnippet; 2], clone_example: [CodeSnippet; 2], nonclone_example: [CodeSnippet; 2]) -> Self {
        Self {
            kind: PromptKind::Baseline,
            target,
            clone_example,
            nonclone_example,
            definition: CLONE_DEFINITION.into(),
        }
    }

    /// The non-clone example is `(x, w)` where `x` is the clone example's
    /// first snippet.
    pub fn contrastive(target: [CodeSnippet; 2], clone_example: [CodeSnippet; 2], w: CodeSnippet) -> Self {
        let x = clone_example[0].clone();
        Self {
            kind: PromptKind::Contrastive,
            target,
            clone_example,
            nonclone_example: [x, w],
            definition: CLONE_DEFINITION.into(),
        }
    }

    /// Check the contrastive sharing rule on a (possibly deserialized) spec.
    pub fn validate(&self) -> Result<()> {
        if self.kind == PromptKind::Contrastive && self.clone_example[0].code != self.nonclone_example[0].code {
            return Err(Error::Validation(
                "contrastive examples must share their first snippet".into(),
            ));
        }
        Ok(())
    }

    /// Snippets shown as examples, in prompt order.
    pub fn example_snippets(&self) -> [&CodeSnippet; 4] {
        [
            &self.clone_example[0],
            &self.clone_example[1],
            &self.nonclone_example[0],
            &self.nonclone_example[1],
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: "system".into(),
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Backtick fence longer than any backtick run inside `code`.
fn fence_for(code: &str) -> String {
    let longest = code
        .split(|c| c != '`')
        .map(str::len)
        .max()
        .unwrap_or(0);
    "`".repeat(longest.max(2) + 1)
}

fn code_block(out: &mut String, snippet: &CodeSnippet) {
    let fence = fence_for(&snippet.code);
    out.push_str(&fence);
    out.push_str(&snippet.language);
    out.push('\n');
    out.push_str(&snippet.code);
    if !snippet.code.ends_with('\n') {
        out.push('\n');
    }
    out.push_str(&fence);
    out.push('\n');
}

/// System and user message for `spec`.
pub fn build_prompt(spec: &PromptSpec) -> Vec<ChatMessage> {
    let system = format!(
        "You decide whether two code snippets form a clone pair. {}\n\n\
         First explain your reasoning. Then end your answer with one final line that is exactly \
         `{VERDICT_CLONE}` or `{VERDICT_NOT_CLONE}`.",
        spec.definition
    );
    let mut user = String::from("The following two snippets are a clone pair.\n\n");
    code_block(&mut user, &spec.clone_example[0]);
    code_block(&mut user, &spec.clone_example[1]);
    user.push_str("\nThe following two snippets are not a clone pair.\n\n");
    code_block(&mut user, &spec.nonclone_example[0]);
    code_block(&mut user, &spec.nonclone_example[1]);
    user.push_str("\nIs the following pair a clone pair or not?\n\n");
    code_block(&mut user, &spec.target[0]);
    code_block(&mut user, &spec.target[1]);
    vec![ChatMessage::system(system), ChatMessage::user(user)]
}

/// Contents of every fenced code block in `text`, in order.
pub fn extract_code_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut lines = text.split_inclusive('\n');
    while let Some(line) = lines.next() {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        let ticks = trimmed.chars().take_while(|&c| c == '`').count();
        if ticks < 3 {
            continue;
        }
        let fence = &trimmed[..ticks];
        let mut body = String::new();
        for inner in lines.by_ref() {
            if inner.trim_end_matches(['\n', '\r']) == fence {
                break;
            }
            body.push_str(inner);
        }
        blocks.push(body);
    }
    blocks
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(id: &str, code: &str, f: &str) -> CodeSnippet {
        CodeSnippet {
            id: id.into(),
            code: code.into(),
            functionality: f.into(),
            language: "java".into(),
        }
    }

    fn target() -> [CodeSnippet; 2] {
        [s("c1", "int a() { return 1; }", "t"), s("c2", "int b() { return 2; }", "t")]
    }

    #[test]
    fn baseline_prompt_has_both_example_blocks() {
        let spec = PromptSpec::baseline(
            target(),
            [s("x", "x();", "f"), s("y", "y();", "f")],
            [s("z", "z();", "g"), s("w", "w();", "h")],
        );
        let msgs = build_prompt(&spec);
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].role, "system");
        assert!(msgs[0].content.contains(VERDICT_CLONE) && msgs[0].content.contains(VERDICT_NOT_CLONE));
        let blocks = extract_code_blocks(&msgs[1].content);
        assert_eq!(blocks, vec!["x();\n", "y();\n", "z();\n", "w();\n", "int a() { return 1; }\n", "int b() { return 2; }\n"]);
        assert!(msgs[1].content.contains("are a clone pair") && msgs[1].content.contains("are not a clone pair"));
    }

    #[test]
    fn contrastive_prompt_repeats_x_twice() {
        let x = "void shared() { work(); }";
        let spec = PromptSpec::contrastive(target(), [s("x", x, "f"), s("y", "y();", "f")], s("w", "w();", "g"));
        spec.validate().unwrap();
        let user = &build_prompt(&spec)[1].content;
        assert_eq!(user.matches(x).count(), 2);
        let blocks = extract_code_blocks(user);
        assert_eq!(blocks[0], blocks[2]);
    }

    #[test]
    fn rendering_is_deterministic() {
        let spec = PromptSpec::contrastive(target(), [s("x", "x();", "f"), s("y", "y();", "f")], s("w", "w();", "g"));
        assert_eq!(build_prompt(&spec), build_prompt(&spec.clone()));
    }

    #[test]
    fn fences_survive_backticks_in_code() {
        let tricky = s("t", "String s = \"```\";", "f");
        let spec = PromptSpec::baseline(
            [tricky.clone(), tricky.clone()],
            [tricky.clone(), tricky.clone()],
            [tricky.clone(), tricky],
        );
        let blocks = extract_code_blocks(&build_prompt(&spec)[1].content);
        assert_eq!(blocks.len(), 6);
        assert!(blocks.iter().all(|b| b == "String s = \"```\";\n"));
    }

    #[test]
    fn broken_contrastive_spec_is_rejected() {
        let mut spec = PromptSpec::contrastive(target(), [s("x", "x();", "f"), s("y", "y();", "f")], s("w", "w();", "g"));
        spec.nonclone_example[0].code.push(' ');
        assert!(spec.validate().is_err());
    }
}
