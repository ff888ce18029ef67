#pragma once

// Prior construction from a footprinting (reactivity) profile: mean,
// exponentially decaying covariance and Beta inclusion priors.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spkg/belief.hpp"

namespace spkg {

struct FootprintingProfile {
  Vector values;  // nonnegative, one per site
  std::string source;

  int length() const { return static_cast<int>(values.size()); }
};

struct ProfileLoad {
  FootprintingProfile profile;
  std::vector<int> gaps;  // 1-based positions filled with 0
};

/// CSV `position,value` (1-based). Missing positions become 0 and are reported;
/// duplicates, negative values and non-numeric fields are errors.
ProfileLoad load_footprinting(const std::string& path);
void write_footprinting(const std::string& path, const FootprintingProfile& profile);

/// Mean-centred sample autocorrelation at lags 0..max_lag, lag 0 normalized to 1.
Vector autocorrelation(const Vector& values, int max_lag);

/// kappa > 0 minimizing sum_{lag=1..L} (acf[lag] - exp(-kappa lag))^2.
double fit_decay_to_autocorr(const Vector& acf);

struct DecayFit {
  double kappa = 0.0;
  Vector autocorr;  // lags 0..max_lag
};

DecayFit fit_decay_rate(const FootprintingProfile& profile, int max_lag = 100);

/// Profile with zeros replaced by the mean of the full profile.
Vector nonzero_profile(const Vector& values);

constexpr double kDefaultNoiseRatio = 0.2;
constexpr double kDefaultKappa = 0.39728;

/// r^2 v_i v_j exp(-kappa |i - j|) with v = nonzero_profile(values).
Matrix build_prior_covariance(const Vector& values, double r = kDefaultNoiseRatio, double kappa = kDefaultKappa);

/// (1 + w, 1) on the profile support and (1, 1 + w) off it. When `budget` is
/// given and w exceeds it, `warning` (if non-null) receives a message.
SparsityBelief build_frequency_priors(const Vector& values, double w, std::optional<int> budget = std::nullopt,
                                      std::string* warning = nullptr);

struct PriorBundle {
  GaussianBelief gaussian;
  SparsityBelief sparsity;
  double kappa = kDefaultKappa;
  double r = kDefaultNoiseRatio;
  double w = 0.0;

  int features() const { return gaussian.dim(); }
};

/// Mean = profile, covariance and frequency priors as above.
PriorBundle build_prior(const FootprintingProfile& profile, double r, double kappa, double w);

nlohmann::json belief_to_json(const GaussianBelief& g, const SparsityBelief& s);
nlohmann::json prior_to_json(const PriorBundle& bundle);
/// Validates shapes, symmetry and PSD; ValidationError names the offending field.
PriorBundle prior_from_json(const nlohmann::json& doc);
PriorBundle load_prior(const std::string& path);
void save_prior(const std::string& path, const PriorBundle& bundle);

/// Reproducible stand-in for a DMS reactivity profile: a smoothed nonnegative
/// AR(1) series with a fraction of unreactive (zero) sites.
Vector synthetic_profile(int p, double phi, double zero_fraction, Rng& rng);

}  // namespace spkg
