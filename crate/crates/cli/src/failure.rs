use std::fmt;

use homesim::env::EnvError;
use homesim::randomize::RandomizeError;
use homesim::scene::SceneError;
use homesim::teleop::TeleopError;

pub const VALIDATION: u8 = 1;
pub const IO: u8 = 2;

/// A failed command, split by exit code.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => VALIDATION,
            Failure::Io(_) => IO,
        }
    }

    pub fn io(path: &std::path::Path, e: impl fmt::Display) -> Self {
        Failure::Io(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<EnvError> for Failure {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::Io(m) => Failure::Io(m),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Io(m) => Failure::Io(m),
            e => Failure::Validation(e.to_string()),
        }
    }
}

impl From<RandomizeError> for Failure {
    fn from(e: RandomizeError) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<TeleopError> for Failure {
    fn from(e: TeleopError) -> Self {
        match e {
            TeleopError::Io(m) | TeleopError::Bind(m) => Failure::Io(m),
            TeleopError::Env(e) => e.into(),
            e => Failure::Validation(e.to_string()),
        }
    }
}
