//! Statistics for monitored free-fermion trajectory ensembles: histograms,
//! density maps, site groups, moments, jackknife errors and fits.

pub mod density;
pub mod error;
pub mod fit;
pub mod groups;
pub mod histogram;
pub mod moments;
pub mod observables;
pub mod resample;

pub use density::{density_map, DensityMap, Normalization};
pub use error::{Result, StatsError};
pub use fit::{fit_decay, fit_distribution, DecayModel, DistributionModel, FitResult};
pub use groups::{SiteGroup, SiteGroups};
pub use histogram::{accumulate_histogram, default_edges, uniform_edges, Histogram};
pub use moments::{ks_p_value, ks_statistic, Moments};
pub use observables::{
    balance_statistics, mutual_information_profile, rescaled_distribution, saturation_curve, toy_envelope,
    window_slope, Balance, BalancePartial, ProfilePoint, SaturationCurve,
};
pub use resample::{jackknife, jackknife_mean, Estimate};
