use core::fmt;

use crate::orbit::ConfigError;
use crate::pencil::PencilError;
use crate::spectrum::SpectrumError;
use crate::tangential::TangentialError;
use crate::verdict::VerdictError;
use crate::verify::VerifyError;

/// Any error produced by this crate.
#[derive(Clone, Debug, PartialEq)]
pub enum Error {
    Config(ConfigError),
    Pencil(PencilError),
    Spectrum(SpectrumError),
    Tangential(TangentialError),
    Verify(VerifyError),
    Verdict(VerdictError),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Config(e) => write!(f, "invalid configuration: {e}"),
            Error::Pencil(e) => write!(f, "pencil: {e}"),
            Error::Spectrum(e) => write!(f, "spectrum: {e}"),
            Error::Tangential(e) => write!(f, "tangential system: {e}"),
            Error::Verify(e) => write!(f, "verification: {e}"),
            Error::Verdict(e) => write!(f, "verdict: {e}"),
        }
    }
}

impl core::error::Error for Error {}

macro_rules! from_impl {
    ($($t:ty => $v:ident),*) => {
        $(impl From<$t> for Error {
            fn from(e: $t) -> Self {
                Error::$v(e)
            }
        })*
    };
}

from_impl!(
    ConfigError => Config,
    PencilError => Pencil,
    SpectrumError => Spectrum,
    TangentialError => Tangential,
    VerifyError => Verify,
    VerdictError => Verdict
);
