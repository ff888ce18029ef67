#include "spkg/prior.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <boost/math/tools/minima.hpp>

#include "spkg/csv.hpp"
#include "spkg/json_io.hpp"

namespace spkg {

using nlohmann::json;

ProfileLoad load_footprinting(const std::string& path) {
  const auto csv = read_csv(path);
  const int pos_col = csv.column("position"), val_col = csv.column("value");
  std::map<int, double> entries;
  for (const auto& row : csv.records) {
    const int pos = parse_int(row.at(pos_col, path), path, row.line);
    const double v = parse_double(row.at(val_col, path), path, row.line);
    if (pos < 1) throw CsvError(path, row.line, "positions are 1-based");
    if (v < 0.0) throw CsvError(path, row.line, "reactivity values must be nonnegative");
    if (!entries.emplace(pos, v).second) throw CsvError(path, row.line, "duplicate position " + std::to_string(pos));
  }
  if (entries.empty()) throw CsvError(path, 1, "profile has no rows");
  ProfileLoad out;
  const int p = entries.rbegin()->first;
  out.profile.values = Vector::Zero(p);
  out.profile.source = path;
  for (int i = 1; i <= p; ++i) {
    const auto it = entries.find(i);
    if (it == entries.end())
      out.gaps.push_back(i);
    else
      out.profile.values(i - 1) = it->second;
  }
  return out;
}

void write_footprinting(const std::string& path, const FootprintingProfile& profile) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "position,value\n";
  for (int i = 0; i < profile.length(); ++i) out << i + 1 << ',' << format_double(profile.values(i)) << '\n';
}

Vector autocorrelation(const Vector& values, int max_lag) {
  const Index n = values.size();
  if (max_lag < 0 || max_lag >= n) throw ValidationError("max_lag", "max_lag must be in [0, p)");
  const Vector c = values.array() - values.mean();
  const double c0 = c.squaredNorm();
  if (!(c0 > 0.0)) throw ValidationError("profile", "profile is constant; autocorrelation is undefined");
  Vector acf(max_lag + 1);
  for (int lag = 0; lag <= max_lag; ++lag) acf(lag) = c.head(n - lag).dot(c.tail(n - lag)) / c0;
  return acf;
}

double fit_decay_to_autocorr(const Vector& acf) {
  if (acf.size() < 2) throw ValidationError("max_lag", "need at least one positive lag");
  auto loss = [&](double kappa) {
    double s = 0.0;
    for (Index lag = 1; lag < acf.size(); ++lag) {
      const double r = acf(lag) - std::exp(-kappa * static_cast<double>(lag));
      s += r * r;
    }
    return s;
  };
  // Coarse log grid to bracket the global minimum, then Brent inside the bracket.
  constexpr double lo = 1e-4, hi = 50.0;
  constexpr int grid = 400;
  double best_k = lo, best = loss(lo);
  std::vector<double> ks(grid + 1);
  for (int g = 0; g <= grid; ++g) {
    ks[g] = lo * std::pow(hi / lo, static_cast<double>(g) / grid);
    const double v = loss(ks[g]);
    if (v < best) {
      best = v;
      best_k = ks[g];
    }
  }
  const auto at = std::find(ks.begin(), ks.end(), best_k) - ks.begin();
  const double a = ks[std::max<long>(at - 1, 0)];
  const double b = ks[std::min<long>(at + 1, grid)];
  const auto [k, v] = boost::math::tools::brent_find_minima(loss, a, b, 52);
  return v <= best ? k : best_k;
}

DecayFit fit_decay_rate(const FootprintingProfile& profile, int max_lag) {
  DecayFit fit;
  fit.autocorr = autocorrelation(profile.values, max_lag);
  fit.kappa = fit_decay_to_autocorr(fit.autocorr);
  return fit;
}

Vector nonzero_profile(const Vector& values) {
  const double mean = values.size() ? values.mean() : 0.0;
  Vector out = values;
  for (Index i = 0; i < out.size(); ++i)
    if (out(i) == 0.0) out(i) = mean;
  return out;
}

Matrix build_prior_covariance(const Vector& values, double r, double kappa) {
  if (!(r > 0.0)) throw ValidationError("r", "noise ratio must be positive");
  if (!(kappa > 0.0)) throw ValidationError("kappa", "decay rate must be positive");
  const Vector v = nonzero_profile(values);
  const Index p = v.size();
  Matrix cov(p, p);
  for (Index i = 0; i < p; ++i)
    for (Index j = 0; j < p; ++j)
      cov(i, j) = r * r * v(i) * v(j) * std::exp(-kappa * static_cast<double>(std::abs(i - j)));
  return cov;
}

SparsityBelief build_frequency_priors(const Vector& values, double w, std::optional<int> budget, std::string* warning) {
  if (!(w >= 0.0)) throw ValidationError("w", "confidence weight must be nonnegative");
  if (budget && w > *budget && warning)
    *warning = "w = " + format_double(w) + " exceeds the sampling budget " + std::to_string(*budget);
  SparsityBelief s{Vector::Ones(values.size()), Vector::Ones(values.size())};
  for (Index j = 0; j < values.size(); ++j) (values(j) != 0.0 ? s.xi(j) : s.eta(j)) += w;
  return s;
}

PriorBundle build_prior(const FootprintingProfile& profile, double r, double kappa, double w) {
  if ((profile.values.array() < 0.0).any()) throw ValidationError("profile", "reactivity values must be nonnegative");
  PriorBundle b;
  b.gaussian = {profile.values, build_prior_covariance(profile.values, r, kappa)};
  b.sparsity = build_frequency_priors(profile.values, w);
  b.kappa = kappa;
  b.r = r;
  b.w = w;
  return b;
}

json belief_to_json(const GaussianBelief& g, const SparsityBelief& s) {
  return {{"theta", to_json_vector(g.mean)},
          {"sigma", to_json_matrix(g.covariance)},
          {"xi", to_json_vector(s.xi)},
          {"eta", to_json_vector(s.eta)},
          {"p", g.dim()}};
}

json prior_to_json(const PriorBundle& bundle) {
  json doc = belief_to_json(bundle.gaussian, bundle.sparsity);
  doc["kappa"] = bundle.kappa;
  doc["r"] = bundle.r;
  doc["w"] = bundle.w;
  return doc;
}

PriorBundle prior_from_json(const json& doc) {
  PriorBundle b;
  b.gaussian.mean = vector_from_json(doc, "theta");
  b.gaussian.covariance = matrix_from_json(doc, "sigma");
  b.sparsity.xi = vector_from_json(doc, "xi");
  b.sparsity.eta = vector_from_json(doc, "eta");
  const Index p = b.gaussian.mean.size();
  if (doc.contains("p") && doc.at("p").get<Index>() != p) throw ValidationError("p", "p disagrees with theta length");
  if (b.gaussian.covariance.rows() != p || b.gaussian.covariance.cols() != p)
    throw ValidationError("sigma", "sigma must be p x p");
  if (b.sparsity.xi.size() != p) throw ValidationError("xi", "xi must have length p");
  if (b.sparsity.eta.size() != p) throw ValidationError("eta", "eta must have length p");
  try {
    b.gaussian.validate();
  } catch (const std::exception& e) {
    throw ValidationError("sigma", e.what());
  }
  try {
    b.sparsity.validate();
  } catch (const std::exception& e) {
    throw ValidationError("xi", e.what());
  }
  b.kappa = doc.value("kappa", kDefaultKappa);
  b.r = doc.value("r", kDefaultNoiseRatio);
  b.w = doc.value("w", 0.0);
  return b;
}

PriorBundle load_prior(const std::string& path) { return prior_from_json(read_json_file(path)); }

void save_prior(const std::string& path, const PriorBundle& bundle) { write_json_file(path, prior_to_json(bundle)); }

Vector synthetic_profile(int p, double phi, double zero_fraction, Rng& rng) {
  if (p < 1) throw ValidationError("p", "profile length must be positive");
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector latent(p);
  double prev = n(rng) / std::sqrt(1.0 - phi * phi);
  for (int i = 0; i < p; ++i) {
    prev = phi * prev + n(rng);
    latent(i) = prev;
  }
  Vector out(p);
  for (int i = 0; i < p; ++i) {
    // Exponentiated AR(1) gives skewed positive reactivities.
    out(i) = u(rng) < zero_fraction ? 0.0 : std::exp(0.6 * latent(i));
  }
  return out;
}

}  // namespace spkg
