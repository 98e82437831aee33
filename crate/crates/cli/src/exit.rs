use std::fmt;

use rydberg_qubo::Error;

pub const BAD_ARGS: u8 = 2;
pub const BUILD_FAILED: u8 = 3;
pub const BELOW_THRESHOLD: u8 = 4;
pub const PROPAGATION_FAILED: u8 = 5;

/// An error together with the process exit code it maps to.
pub struct Exit {
    pub code: u8,
    pub err: anyhow::Error,
}

impl fmt::Debug for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exit {}: {:#}", self.code, self.err)
    }
}

pub trait WithCode<T> {
    fn code(self, code: u8) -> Result<T, Exit>;
}

impl<T, E: Into<anyhow::Error>> WithCode<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Exit> {
        self.map_err(|e| Exit {
            code,
            err: e.into(),
        })
    }
}

pub fn fail(code: u8, msg: impl fmt::Display) -> Exit {
    Exit {
        code,
        err: anyhow::anyhow!("{msg}"),
    }
}

/// Exit code for a failure during simulation or optimization.
pub fn simulation_code(e: &Error) -> u8 {
    match e {
        Error::InvalidPlan(_) | Error::InvalidSchedule(_) | Error::TimeOutOfRange { .. } => {
            BAD_ARGS
        }
        Error::DimensionTooLarge { .. } | Error::NotEncodable { .. } => BUILD_FAILED,
        _ => PROPAGATION_FAILED,
    }
}

pub fn simulation<T>(r: rydberg_qubo::Result<T>) -> Result<T, Exit> {
    r.map_err(|e| Exit {
        code: simulation_code(&e),
        err: e.into(),
    })
}
