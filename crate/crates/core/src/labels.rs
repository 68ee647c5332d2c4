//! Ground-truth vocabulary shared by recognition, the study and analysis.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

macro_rules! vocabulary {
    ($(#[$meta:meta])* $name:ident, $what:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Position in [`Self::ALL`].
            pub fn index(self) -> usize {
                Self::ALL.iter().position(|&v| v == self).expect("listed")
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self, Error> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(Error::Param(format!("unknown {} {other:?}", $what))),
                }
            }
        }
    };
}

vocabulary!(Actor, "actor" {
    Human => "human",
    Animal => "animal",
});

vocabulary!(
    /// Listed in the order the action confusion table uses.
    Action, "action" {
        Walking => "walking",
        Spinning => "spinning",
        Running => "running",
        Jumping => "jumping",
        Eating => "eating",
        Climbing => "climbing",
        Crawling => "crawling",
        Flying => "flying",
    }
);

vocabulary!(Background, "background" {
    Static => "static",
    Moving => "moving",
});

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display_round_trip() {
        for a in Action::ALL {
            assert_eq!(a.as_str().parse::<Action>().unwrap(), *a);
        }
        assert_eq!("Human".parse::<Actor>().unwrap(), Actor::Human);
        assert!("robot".parse::<Actor>().is_err());
        assert_eq!(Action::ALL.len(), 8);
        assert_eq!(Action::Flying.index(), 7);
        assert_eq!(serde_json::to_string(&Background::Moving).unwrap(), "\"moving\"");
    }
}
