//! Moment-matching approximations for European spread options whose log
//! returns follow a normal mean-variance mixture, a normal variance mixture,
//! or an elliptical law driven by a radial mixing variable.
//!
//! The pipeline is: [`model::build_effective`] applies the martingale drift,
//! [`moments`] produces the exact spread moments, [`matcher`] fits a shifted
//! exponential proxy by moment matching, and [`pricer`] evaluates the proxy's
//! semi-closed price. [`mc`] is an independent Monte Carlo oracle.

pub mod error;
pub mod laws;
pub mod matcher;
pub mod mc;
pub mod model;
pub mod pricer;
pub mod moments;
pub mod quadrature;
pub mod series;
pub mod special;
pub mod tables;

pub use error::{Result, SpreadError};
pub use laws::{IgParameterization, LawSpec, MgfKind, MixingLaw, MomentTable};
pub use matcher::{MatchOptions, MatchReport, ProxyParams, ProxyParamsE, ProxyParamsMV, ProxyParamsV};
pub use mc::{mc_moments, mc_proxy_price, mc_spread_price, McEstimate, McOptions};
pub use model::{build_effective, EffectiveModel, Mode, ModelSpec, SpreadContract};
pub use moments::MomentSet;
pub use pricer::{price_spread_approx, ApproxOptions, ApproxPricer, Branch, PriceReport};
pub use series::SeriesOptions;
