//! Worked experiments: spin measurement with a Stern-Gerlach magnet, the
//! Mach-Zehnder interferometer, two-slit interference and a CHSH Bell test.

mod bell;
mod double_slit;
mod interferometer;
mod stern_gerlach;

pub use bell::{chsh, chsh_exact, chsh_report, correlator, ChshResult, ChshSetting};
pub use double_slit::{
    double_slit, fringe_spacing, fringe_visibility, local_maxima, local_minima, IntensityProfile,
    SlitGeometry,
};
pub use interferometer::{beam_splitter, mach_zehnder, mach_zehnder_probabilities};
pub use stern_gerlach::{stern_gerlach, SpinInput};
