use std::fmt;

/// Failure classes, each with its own process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Internal,
    Input,
    Config,
}

impl Class {
    pub fn exit_code(self) -> i32 {
        match self {
            Class::Internal => 1,
            Class::Input => 2,
            Class::Config => 3,
        }
    }
}

#[derive(Debug)]
pub struct Failure {
    pub class: Class,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.error)
    }
}

pub type CliResult<T> = Result<T, Failure>;

pub fn config_error(msg: impl fmt::Display) -> Failure {
    Failure {
        class: Class::Config,
        error: anyhow::anyhow!("{msg}"),
    }
}

pub fn input_error(msg: impl fmt::Display) -> Failure {
    Failure {
        class: Class::Input,
        error: anyhow::anyhow!("{msg}"),
    }
}

/// Attach a failure class to any error.
pub trait Classify<T> {
    fn class(self, class: Class) -> CliResult<T>;

    fn input(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.class(Class::Input)
    }

    fn config(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.class(Class::Config)
    }

    fn internal(self) -> CliResult<T>
    where
        Self: Sized,
    {
        self.class(Class::Internal)
    }
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn class(self, class: Class) -> CliResult<T> {
        self.map_err(|e| Failure { class, error: e.into() })
    }
}
