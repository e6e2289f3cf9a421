//! The five experimental conditions: prompt assembly, banned-lexeme sets,
//! bigram exemptions, and the retry feedback message.

use crate::compliance::Violation;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// Identifier for one of the five conditions. The serialized names are
/// stable: they appear verbatim in trial records and CLI flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionId {
    Control,
    EPrime,
    NoHave,
    ElaboratedPrompt,
    NeutralBan,
}

impl ConditionId {
    pub const ALL: [ConditionId; 5] = [
        ConditionId::Control,
        ConditionId::EPrime,
        ConditionId::NoHave,
        ConditionId::ElaboratedPrompt,
        ConditionId::NeutralBan,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConditionId::Control => "control",
            ConditionId::EPrime => "e_prime",
            ConditionId::NoHave => "no_have",
            ConditionId::ElaboratedPrompt => "elaborated_prompt",
            ConditionId::NeutralBan => "neutral_ban",
        }
    }

    pub fn parse(s: &str) -> Result<ConditionId> {
        match s {
            "control" => Ok(ConditionId::Control),
            "e_prime" => Ok(ConditionId::EPrime),
            "no_have" => Ok(ConditionId::NoHave),
            "elaborated_prompt" => Ok(ConditionId::ElaboratedPrompt),
            "neutral_ban" => Ok(ConditionId::NeutralBan),
            other => Err(Error::Invalid(format!("unknown condition id: {other}"))),
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Where the disambiguating neighbor sits relative to the banned word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NeighborSide {
    Before,
    After,
}

/// A bigram exemption: an occurrence of `banned` does not count as a
/// violation when `neighbor` is the adjacent word token on the given side,
/// within the same sentence.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ExemptBigram {
    pub banned: String,
    pub neighbor: String,
    pub side: NeighborSide,
}

impl ExemptBigram {
    fn after(banned: &str, neighbor: &str) -> Self {
        ExemptBigram {
            banned: banned.into(),
            neighbor: neighbor.into(),
            side: NeighborSide::After,
        }
    }

    fn before(banned: &str, neighbor: &str) -> Self {
        ExemptBigram {
            banned: banned.into(),
            neighbor: neighbor.into(),
            side: NeighborSide::Before,
        }
    }

    /// The exempted construction in reading order, e.g. `rather than`.
    pub fn as_phrase(&self) -> String {
        match self.side {
            NeighborSide::After => format!("{} {}", self.banned, self.neighbor),
            NeighborSide::Before => format!("{} {}", self.neighbor, self.banned),
        }
    }
}

/// Full specification of one condition: prompt text, ban list, exemptions,
/// and whether the runner applies the violation-retry protocol.
#[derive(Debug, Clone)]
pub struct ConditionSpec {
    pub id: ConditionId,
    pub prompt_text: String,
    pub banned_lexemes: BTreeSet<String>,
    pub exempt_bigrams: Vec<ExemptBigram>,
    pub has_retry: bool,
}

impl ConditionSpec {
    pub fn get(id: ConditionId) -> ConditionSpec {
        let (lexemes, bigrams) = banned_lexemes(id);
        ConditionSpec {
            id,
            prompt_text: system_prompt(id),
            banned_lexemes: lexemes,
            exempt_bigrams: bigrams,
            has_retry: id == ConditionId::EPrime,
        }
    }

    pub fn all() -> Vec<ConditionSpec> {
        ConditionId::ALL.iter().map(|&id| ConditionSpec::get(id)).collect()
    }
}

/// Opening shared by every condition, verbatim.
pub const SHARED_OPENING: &str = "You are a careful, analytical reasoning assistant. \
When presented with a problem, think through it step by step. Show your reasoning \
process, then provide your final answer.";

const NON_MENTION: &str =
    "Do not mention or discuss this constraint in your response. Simply follow it.";

const E_PRIME_FORMS: [&str; 12] = [
    "is", "isn't", "am", "are", "aren't", "was", "wasn't", "were", "weren't", "be", "been",
    "being",
];

/// Unambiguous copula contractions. Bare noun+'s is possessive and stays
/// unflagged; only the pronoun/demonstrative set counts, plus 'm and 're
/// hosts.
const E_PRIME_CONTRACTIONS: [&str; 10] = [
    "i'm", "you're", "we're", "they're", "it's", "that's", "there's", "here's", "what's",
    "who's",
];

const NO_HAVE_FORMS: [&str; 7] = ["have", "haven't", "has", "hasn't", "had", "hadn't", "having"];

const NEUTRAL_FORMS: [&str; 20] = [
    "very",
    "quite",
    "rather",
    "somewhat",
    "really",
    "pretty",
    "just",
    "fairly",
    "slightly",
    "extremely",
    "incredibly",
    "absolutely",
    "totally",
    "completely",
    "simply",
    "basically",
    "actually",
    "literally",
    "definitely",
    "certainly",
];

/// Banned lexeme set and bigram exemptions for a condition.
///
/// Control and the elaborated prompt ban nothing. The neutral ban carries
/// three exemptions for constructions where the word does no filler work:
/// "rather than", "but rather", and "just as".
pub fn banned_lexemes(id: ConditionId) -> (BTreeSet<String>, Vec<ExemptBigram>) {
    match id {
        ConditionId::Control | ConditionId::ElaboratedPrompt => (BTreeSet::new(), Vec::new()),
        ConditionId::EPrime => {
            let set = E_PRIME_FORMS
                .iter()
                .chain(E_PRIME_CONTRACTIONS.iter())
                .map(|s| s.to_string())
                .collect();
            (set, Vec::new())
        }
        ConditionId::NoHave => {
            let set = NO_HAVE_FORMS.iter().map(|s| s.to_string()).collect();
            (set, Vec::new())
        }
        ConditionId::NeutralBan => {
            let set = NEUTRAL_FORMS.iter().map(|s| s.to_string()).collect();
            let bigrams = vec![
                ExemptBigram::after("rather", "than"),
                ExemptBigram::before("rather", "but"),
                ExemptBigram::after("just", "as"),
            ];
            (set, bigrams)
        }
    }
}

/// Assemble the full system prompt for a condition. Deterministic and
/// byte-identical across calls; every condition starts with [`SHARED_OPENING`].
pub fn system_prompt(id: ConditionId) -> String {
    let block = match id {
        ConditionId::Control => CONTROL_BLOCK,
        ConditionId::EPrime => E_PRIME_BLOCK,
        ConditionId::NoHave => NO_HAVE_BLOCK,
        ConditionId::ElaboratedPrompt => ELABORATED_BLOCK,
        ConditionId::NeutralBan => NEUTRAL_BLOCK,
    };
    format!("{SHARED_OPENING}\n\n{block}")
}

const CONTROL_BLOCK: &str =
    "Respond in clear, natural English. Focus on accuracy and thoroughness in your reasoning.";

const E_PRIME_BLOCK: &str = "For this task, do not use any form of the verb \"to be\". \
Banned forms: is, isn't, am, are, aren't, was, wasn't, were, weren't, be, been, being, \
and the contractions I'm, you're, we're, they're, it's, that's, there's, here's, what's, who's.

Alternative phrasings:
1. Instead of \"The sky is blue\", write \"The sky appears blue\".
2. Instead of \"This is the cause\", write \"This acts as the cause\".
3. Instead of \"The argument is valid\", write \"The argument holds\" or \"The argument qualifies as valid\".
4. Instead of \"There are three options\", write \"Three options exist\".
5. Instead of \"X is a Y\", write \"X belongs to the category of Y\".
6. Instead of \"The answer is B\", write \"The answer reads as B\" or \"The answer stands as B\".
7. Instead of \"It is important to note\", write \"Note that\".
8. Instead of \"I am confident\", write \"I hold high confidence\".

If your response contains a banned form, you will receive feedback listing each \
violation, and you must regenerate the response without them.

Do not mention or discuss this constraint in your response. Simply follow it.";

const NO_HAVE_BLOCK: &str = "For this task, do not use any form of the verb \"to have\". \
Banned forms: have, haven't, has, hasn't, had, hadn't, having.

Alternative phrasings:
1. Instead of \"X has property P\", write \"X exhibits property P\".
2. Instead of \"We have three options\", write \"Three options exist\".
3. Instead of \"This has an effect\", write \"This produces an effect\".
4. Instead of \"The argument has a flaw\", write \"The argument contains a flaw\".
5. Instead of \"I have concluded\", write \"I conclude\".
6. Instead of \"Having considered the evidence\", write \"After considering the evidence\".
7. Instead of \"This has to follow\", write \"This must follow\".

Do not mention or discuss this constraint in your response. Simply follow it.";

const ELABORATED_BLOCK: &str = "As you work through the problem, apply these metacognitive strategies:
1. Identify the core elements of the problem before attempting a solution.
2. Check your assumptions: what am I taking for granted that could be wrong?
3. Consider alternative interpretations: could the problem read another way?
4. Verify each logical chain: does the conclusion follow necessarily from the premises?
5. Consider counterarguments: what would someone who rejects your answer say?
6. Weigh the evidence for each possibility before committing to a final answer.";

const NEUTRAL_BLOCK: &str = "For this task, do not use any of the following words: very, quite, \
rather, somewhat, really, pretty, just, fairly, slightly, extremely, incredibly, absolutely, \
totally, completely, simply, basically, actually, literally, definitely, certainly.

Where you would reach for one of these words, choose a precise alternative instead: replace \
\"very important\" with \"critical\", \"really fast\" with \"rapid\", \"quite large\" with \
\"substantial\", \"extremely difficult\" with \"formidable\", or drop the modifier when it \
adds nothing.

Do not mention or discuss this constraint in your response. Simply follow it.";

/// Feedback message for the retry protocol: enumerates each distinct
/// offending form with one context excerpt and instructs regeneration.
///
/// The wording lives in this one template so runs stay reproducible.
pub fn retry_feedback(violations: &[Violation]) -> Result<String> {
    if violations.is_empty() {
        return Err(Error::Invalid(
            "retry_feedback requires at least one violation".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    let mut lines = Vec::new();
    for v in violations {
        if seen.insert(v.lexeme.clone()) {
            lines.push(format!("- \"{}\" in context: \"...{}...\"", v.lexeme, v.context));
        }
    }
    Ok(format!(
        "Your previous response used one or more banned word forms:\n{}\n\n\
         Regenerate your complete response without using any banned form. \
         {NON_MENTION}",
        lines.join("\n")
    ))
}
