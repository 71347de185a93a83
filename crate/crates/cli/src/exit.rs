use std::fmt;

/// Process exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class {
    Usage = 1,
    Data = 2,
    Backend = 3,
}

#[derive(Debug)]
pub struct Failure {
    pub class: Class,
    pub error: anyhow::Error,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // Single line: the whole cause chain joined by ": ".
        write!(f, "{:#}", self.error)
    }
}

pub type CmdResult<T = ()> = Result<T, Failure>;

pub trait Classify<T> {
    fn usage(self) -> CmdResult<T>;
    fn data(self) -> CmdResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CmdResult<T> {
        self.map_err(|e| Failure {
            class: Class::Usage,
            error: e.into(),
        })
    }
    fn data(self) -> CmdResult<T> {
        self.map_err(|e| Failure {
            class: Class::Data,
            error: e.into(),
        })
    }
}

pub fn usage(msg: impl fmt::Display) -> Failure {
    Failure {
        class: Class::Usage,
        error: anyhow::anyhow!("{msg}"),
    }
}
