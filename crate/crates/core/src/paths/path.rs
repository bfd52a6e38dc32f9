use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type ClusterId = i32;

/// Marks a layer whose summary fell below its density floor during
/// out-of-distribution scoring.
pub const SENTINEL: ClusterId = -1;

/// The per-layer cluster IDs one sample traces through the network.
///
/// Renders as `2->5->1`; the sentinel renders as `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClusterPath(Vec<ClusterId>);

impl ClusterPath {
    pub fn new(ids: Vec<ClusterId>) -> Self {
        Self(ids)
    }

    pub fn from_indices(ids: &[usize]) -> Self {
        Self(ids.iter().map(|&i| i as ClusterId).collect())
    }

    pub fn ids(&self) -> &[ClusterId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn has_sentinel(&self) -> bool {
        self.0.contains(&SENTINEL)
    }

    /// Layer index of the first sentinel, if any.
    pub fn first_sentinel(&self) -> Option<usize> {
        self.0.iter().position(|&c| c == SENTINEL)
    }
}

impl fmt::Display for ClusterPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("->")?;
            }
            write!(f, "{id}")?;
        }
        Ok(())
    }
}

impl FromStr for ClusterPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::InvalidParameter("empty path string".into()));
        }
        s.split("->")
            .map(|t| {
                let id: ClusterId = t
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad cluster id `{t}` in `{s}`")))?;
                if id < SENTINEL {
                    return Err(Error::InvalidParameter(format!("cluster id {id} below sentinel")));
                }
                Ok(id)
            })
            .collect::<Result<Vec<_>>>()
            .map(ClusterPath)
    }
}

impl Serialize for ClusterPath {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ClusterPath {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_arrow_form() {
        assert_eq!(ClusterPath::new(vec![2, 5, 1]).to_string(), "2->5->1");
        assert_eq!(ClusterPath::new(vec![0, -1]).to_string(), "0->-1");
    }

    #[test]
    fn parses_back() {
        let p: ClusterPath = "2->5->-1".parse().unwrap();
        assert_eq!(p.ids(), &[2, 5, -1]);
        assert!(p.has_sentinel());
        assert_eq!(p.first_sentinel(), Some(2));
        assert!("2->x".parse::<ClusterPath>().is_err());
        assert!("".parse::<ClusterPath>().is_err());
        assert!("-2".parse::<ClusterPath>().is_err());
    }
}
