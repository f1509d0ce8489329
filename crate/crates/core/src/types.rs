use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Multi-word verb class. Phrasal verbs are the positive class of every probe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerbClass {
    Phrasal,
    Prepositional,
}

impl VerbClass {
    pub const ALL: [VerbClass; 2] = [VerbClass::Phrasal, VerbClass::Prepositional];

    /// Dense class id used by point clouds: phrasal = 0, prepositional = 1.
    pub fn id(self) -> usize {
        match self {
            VerbClass::Phrasal => 0,
            VerbClass::Prepositional => 1,
        }
    }

    /// Probe target encoding: phrasal = +1, prepositional = -1.
    pub fn sign(self) -> f64 {
        match self {
            VerbClass::Phrasal => 1.0,
            VerbClass::Prepositional => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            VerbClass::Phrasal => "phrasal",
            VerbClass::Prepositional => "prepositional",
        }
    }
}

impl fmt::Display for VerbClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for VerbClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phrasal" => Ok(VerbClass::Phrasal),
            "prepositional" => Ok(VerbClass::Prepositional),
            other => Err(format!("unknown class label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Embedding protocol: the verb token's hidden state, or the mean over the sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Token,
    Sentence,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Token => "token",
            Level::Sentence => "sentence",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
