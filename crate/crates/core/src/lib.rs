//! Hybrid infrared scene synthesis.
//!
//! Target signatures with per-region thermal variability are superimposed,
//! together with optional occultants, on real backgrounds. Gains and offsets
//! are solved in closed form so the composited scene hits requested
//! image-quality metrics exactly; a sensor model is then applied and every
//! scene is emitted with its ground truth.
//!
//! Module map:
//!
//! * [`imagecore`]: rasters, masks, morphology, region statistics
//! * [`metrics`]: RSS, Q_D, SCR, R_x, K on a [`layout::SceneLayout`]
//! * [`thermal`]: TA/TF interpolation and λ sampling
//! * [`solver`]: metric inversion, occultant placement, feasibility
//! * [`sensor`]: Gaussian MTF, noise, quantization
//! * [`pipeline`]: single scenes and batch sweeps
//! * [`io`]: PNG/PGM, raw float, bundle and occultant directories

pub mod imagecore;
pub mod io;
pub mod layout;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod sensor;
pub mod solver;
pub mod synthetic;
pub mod thermal;
