//! Node addressing.
//!
//! Every node in a case carries a short hierarchical address such as `C1.2.1`,
//! `A1.2` or `D1.1-2`: a kind tag, a dot-separated path of positive integers,
//! and — for defeaters only — a `-ordinal` suffix identifying which doubt on
//! that path it is. Addresses double as the sort key for every deterministic
//! listing the tool produces.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The single-letter kind tag that opens an address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KindTag {
    /// `C` — claim.
    Claim,
    /// `A` — argument step.
    Argument,
    /// `E` — evidence.
    Evidence,
    /// `W` — side-warrant.
    Warrant,
    /// `D` — defeater.
    Defeater,
}

impl KindTag {
    pub fn letter(self) -> char {
        match self {
            KindTag::Claim => 'C',
            KindTag::Argument => 'A',
            KindTag::Evidence => 'E',
            KindTag::Warrant => 'W',
            KindTag::Defeater => 'D',
        }
    }

    /// Sibling sort rank: claims before arguments before evidence before
    /// warrants before defeaters.
    fn rank(self) -> u8 {
        match self {
            KindTag::Claim => 0,
            KindTag::Argument => 1,
            KindTag::Evidence => 2,
            KindTag::Warrant => 3,
            KindTag::Defeater => 4,
        }
    }
}

/// Why an address string failed to parse.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AddressError {
    #[error("empty address")]
    Empty,
    #[error("unknown kind tag {0:?} (expected C, A, E, W or D)")]
    UnknownTag(char),
    #[error("malformed path segment {0:?} (positive integer, no leading zero)")]
    BadSegment(String),
    #[error("defeater address needs exactly one -ordinal suffix")]
    MissingOrdinal,
    #[error("ordinal suffix only allowed on D addresses")]
    UnexpectedOrdinal,
    #[error("malformed ordinal {0:?} (positive integer, no leading zero)")]
    BadOrdinal(String),
}

/// A parsed node address.
///
/// Ordering is the canonical report order: numeric path first, then kind rank
/// (C < A < E < W < D), then the defeater ordinal. `D1.1-2` therefore sorts
/// directly after the claim/argument pair on path 1.1 and before anything on
/// path 1.1.1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NodeAddress {
    kind_tag: KindTag,
    path: Vec<u32>,
    defeater_ordinal: Option<u32>,
}

impl NodeAddress {
    /// Builds an address for a non-defeater node.
    ///
    /// Panics if `path` is empty or contains a zero — callers constructing
    /// addresses programmatically should use validated input; file input goes
    /// through [`FromStr`].
    pub fn new(kind_tag: KindTag, path: Vec<u32>) -> NodeAddress {
        assert!(kind_tag != KindTag::Defeater, "defeater addresses need an ordinal");
        assert!(!path.is_empty() && path.iter().all(|&n| n > 0), "path must be positive integers");
        NodeAddress { kind_tag, path, defeater_ordinal: None }
    }

    /// Builds a defeater address `D<path>-<ordinal>`.
    pub fn defeater(path: Vec<u32>, ordinal: u32) -> NodeAddress {
        assert!(!path.is_empty() && path.iter().all(|&n| n > 0), "path must be positive integers");
        assert!(ordinal > 0, "ordinal must be positive");
        NodeAddress { kind_tag: KindTag::Defeater, path, defeater_ordinal: Some(ordinal) }
    }

    pub fn kind_tag(&self) -> KindTag {
        self.kind_tag
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    pub fn defeater_ordinal(&self) -> Option<u32> {
        self.defeater_ordinal
    }

    /// The same path under a different kind tag (no ordinal). Used to find the
    /// claim or argument a defeater address points at.
    pub fn with_tag(&self, kind_tag: KindTag) -> NodeAddress {
        NodeAddress::new(kind_tag, self.path.clone())
    }

    /// Child address under `self` with the given ordinal, e.g. `C1.2` → `C1.2.3`.
    pub fn child(&self, kind_tag: KindTag, ordinal: u32) -> NodeAddress {
        let mut path = self.path.clone();
        path.push(ordinal);
        NodeAddress::new(kind_tag, path)
    }

    pub fn is_defeater(&self) -> bool {
        self.kind_tag == KindTag::Defeater
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind_tag.letter())?;
        for (i, seg) in self.path.iter().enumerate() {
            if i > 0 {
                write!(f, ".")?;
            }
            write!(f, "{seg}")?;
        }
        if let Some(ord) = self.defeater_ordinal {
            write!(f, "-{ord}")?;
        }
        Ok(())
    }
}

fn parse_segment(text: &str) -> Result<u32, AddressError> {
    let bad = || AddressError::BadSegment(text.to_string());
    if text.is_empty() || text.starts_with('0') || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    text.parse().map_err(|_| bad())
}

impl FromStr for NodeAddress {
    type Err = AddressError;

    fn from_str(s: &str) -> Result<NodeAddress, AddressError> {
        let mut chars = s.chars();
        let tag = match chars.next() {
            None => return Err(AddressError::Empty),
            Some('C') => KindTag::Claim,
            Some('A') => KindTag::Argument,
            Some('E') => KindTag::Evidence,
            Some('W') => KindTag::Warrant,
            Some('D') => KindTag::Defeater,
            Some(other) => return Err(AddressError::UnknownTag(other)),
        };
        let rest = chars.as_str();

        let (path_text, ordinal) = match rest.split_once('-') {
            None if tag == KindTag::Defeater => return Err(AddressError::MissingOrdinal),
            None => (rest, None),
            Some(_) if tag != KindTag::Defeater => return Err(AddressError::UnexpectedOrdinal),
            Some((path_text, ordinal_text)) => {
                if ordinal_text.contains('-') {
                    // grammar forbids two ordinals, e.g. "D1-1-1"
                    return Err(AddressError::BadOrdinal(ordinal_text.to_string()));
                }
                let ordinal = if ordinal_text.is_empty() || ordinal_text.starts_with('0') {
                    return Err(AddressError::BadOrdinal(ordinal_text.to_string()));
                } else {
                    ordinal_text
                        .parse()
                        .map_err(|_| AddressError::BadOrdinal(ordinal_text.to_string()))?
                };
                (path_text, Some(ordinal))
            }
        };

        let path = path_text
            .split('.')
            .map(parse_segment)
            .collect::<Result<Vec<u32>, AddressError>>()?;
        if path.is_empty() {
            return Err(AddressError::BadSegment(String::new()));
        }

        Ok(NodeAddress { kind_tag: tag, path, defeater_ordinal: ordinal })
    }
}

impl Ord for NodeAddress {
    fn cmp(&self, other: &NodeAddress) -> Ordering {
        self.path
            .cmp(&other.path)
            .then(self.kind_tag.rank().cmp(&other.kind_tag.rank()))
            .then(self.defeater_ordinal.cmp(&other.defeater_ordinal))
    }
}

impl PartialOrd for NodeAddress {
    fn partial_cmp(&self, other: &NodeAddress) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

// Serialize as the rendered string so JSON reports show "C1.2.1", not a struct.
impl Serialize for NodeAddress {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeAddress {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<NodeAddress, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
