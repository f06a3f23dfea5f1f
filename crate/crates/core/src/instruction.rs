//! Instruction template applied identically to queries and passages before
//! embedding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PLACEHOLDER: &str = "{text}";

pub const DEFAULT_TEMPLATE: &str = "Instruction: Please perform a RAG search based on the following. Text: {text}";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InstructionTemplate {
    template: String,
}

impl InstructionTemplate {
    pub fn new(template: impl Into<String>) -> Result<Self> {
        let template = template.into();
        let count = template.matches(PLACEHOLDER).count();
        if count != 1 {
            return Err(Error::Placeholder(count));
        }
        Ok(Self { template })
    }

    pub fn as_str(&self) -> &str {
        &self.template
    }

    pub fn render(&self, text: &str) -> String {
        self.template.replacen(PLACEHOLDER, text, 1)
    }
}

impl Default for InstructionTemplate {
    fn default() -> Self {
        Self {
            template: DEFAULT_TEMPLATE.to_string(),
        }
    }
}

impl TryFrom<String> for InstructionTemplate {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Self::new(value)
    }
}

impl From<InstructionTemplate> for String {
    fn from(t: InstructionTemplate) -> String {
        t.template
    }
}

pub fn render_instruction(template: &InstructionTemplate, text: &str) -> String {
    template.render(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_template() {
        assert_eq!(
            render_instruction(&InstructionTemplate::default(), "find the lease term"),
            "Instruction: Please perform a RAG search based on the following. Text: find the lease term"
        );
    }

    #[test]
    fn empty_text() {
        let t = InstructionTemplate::new("X{text}Y").unwrap();
        assert_eq!(t.render(""), "XY");
    }

    #[test]
    fn text_containing_placeholder_is_not_expanded_again() {
        let t = InstructionTemplate::new("[{text}]").unwrap();
        assert_eq!(t.render("{text}"), "[{text}]");
    }

    #[test]
    fn placeholder_count_enforced() {
        assert!(matches!(InstructionTemplate::new("no slot"), Err(Error::Placeholder(0))));
        assert!(matches!(InstructionTemplate::new("{text}{text}"), Err(Error::Placeholder(2))));
    }

    #[test]
    fn deserializes_from_config_string() {
        let t: InstructionTemplate = serde_json::from_str(r#""Q: {text}""#).unwrap();
        assert_eq!(t.render("a"), "Q: a");
        assert!(serde_json::from_str::<InstructionTemplate>(r#""Q""#).is_err());
    }
}
