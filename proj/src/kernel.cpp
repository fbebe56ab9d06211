#include "rare/kernel.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "rare/errors.hpp"
#include "rare/util.hpp"

namespace rare {
namespace {

constexpr double kSqrt5 = 2.23606797749978969640917;

void require_positive(double v, const std::string& what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(what + " must be positive and finite");
}

}  // namespace

std::size_t GpHyperparams::num_params() const noexcept {
  return lengthscales.size() + 1 + discrepancy.size() * (lengthscales.size() + 2);
}

std::vector<double> GpHyperparams::to_log() const {
  std::vector<double> out;
  out.reserve(num_params());
  for (double l : lengthscales) out.push_back(std::log(l));
  out.push_back(std::log(signal_var));
  for (const auto& d : discrepancy) {
    for (double l : d.lengthscales) out.push_back(std::log(l));
    out.push_back(std::log(d.signal_var));
    out.push_back(std::log(d.noise_var));
  }
  return out;
}

void GpHyperparams::assign_log(std::span<const double> p) {
  if (p.size() != num_params()) throw InvalidInput("log-parameter vector has the wrong length");
  std::size_t k = 0;
  for (double& l : lengthscales) l = std::exp(p[k++]);
  signal_var = std::exp(p[k++]);
  for (auto& d : discrepancy) {
    for (double& l : d.lengthscales) l = std::exp(p[k++]);
    d.signal_var = std::exp(p[k++]);
    d.noise_var = std::exp(p[k++]);
  }
}

void GpHyperparams::validate() const {
  if (lengthscales.empty()) throw InvalidInput("hyperparameters need at least one lengthscale");
  for (double l : lengthscales) require_positive(l, "lengthscale");
  require_positive(signal_var, "signal_var");
  require_positive(jitter, "jitter");
  for (std::size_t i = 0; i < discrepancy.size(); ++i) {
    const auto& d = discrepancy[i];
    if (d.lengthscales.size() != lengthscales.size())
      throw InvalidInput("fid" + std::to_string(i + 1) + " lengthscale count differs from base");
    for (double l : d.lengthscales) require_positive(l, "fid lengthscale");
    require_positive(d.signal_var, "fid signal_var");
    require_positive(d.noise_var, "fid noise_var");
  }
}

GpHyperparams GpHyperparams::defaults(std::size_t dim, std::size_t levels) {
  GpHyperparams h;
  h.lengthscales.assign(dim, 1.0);
  h.signal_var = 1.0;
  h.jitter = 1e-6;
  for (std::size_t l = 1; l < levels; ++l) {
    DiscrepancyParams d;
    d.lengthscales.assign(dim, 1.0);
    d.signal_var = 0.1;
    d.noise_var = 1e-2;
    h.discrepancy.push_back(d);
  }
  return h;
}

std::string to_text(const GpHyperparams& hyper) {
  std::ostringstream out;
  for (std::size_t j = 0; j < hyper.lengthscales.size(); ++j)
    out << "lengthscale." << j << " = " << format_double(hyper.lengthscales[j]) << '\n';
  out << "signal_var = " << format_double(hyper.signal_var) << '\n';
  for (std::size_t l = 1; l <= hyper.discrepancy.size(); ++l) {
    const auto& d = hyper.discrepancy[l - 1];
    for (std::size_t j = 0; j < d.lengthscales.size(); ++j)
      out << "fid" << l << ".lengthscale." << j << " = " << format_double(d.lengthscales[j]) << '\n';
    out << "fid" << l << ".signal_var = " << format_double(d.signal_var) << '\n';
    out << "fid" << l << ".noise_var = " << format_double(d.noise_var) << '\n';
  }
  out << "jitter = " << format_double(hyper.jitter) << '\n';
  return out.str();
}

GpHyperparams hyperparams_from_text(std::string_view text) {
  std::map<std::string, double> kv;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw InvalidInput("hyperparameter line " + std::to_string(line_no) + " has no '='");
    std::string key(trim(line.substr(0, eq)));
    if (kv.count(key)) throw InvalidInput("duplicate hyperparameter key " + key);
    kv[key] = parse_double(line.substr(eq + 1));
  }
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw InvalidInput("missing hyperparameter key " + key);
    double v = it->second;
    kv.erase(it);
    return v;
  };
  GpHyperparams h;
  for (std::size_t j = 0; kv.count("lengthscale." + std::to_string(j)); ++j)
    h.lengthscales.push_back(take("lengthscale." + std::to_string(j)));
  h.signal_var = take("signal_var");
  h.jitter = take("jitter");
  for (std::size_t l = 1; kv.count("fid" + std::to_string(l) + ".signal_var"); ++l) {
    const std::string p = "fid" + std::to_string(l) + ".";
    DiscrepancyParams d;
    for (std::size_t j = 0; j < h.lengthscales.size(); ++j)
      d.lengthscales.push_back(take(p + "lengthscale." + std::to_string(j)));
    d.signal_var = take(p + "signal_var");
    d.noise_var = take(p + "noise_var");
    h.discrepancy.push_back(d);
  }
  if (!kv.empty()) throw InvalidInput("unknown hyperparameter key " + kv.begin()->first);
  h.validate();
  return h;
}

double matern25(std::span<const double> x, std::span<const double> x2,
                std::span<const double> lengthscales, double signal_var) {
  if (x.size() != x2.size() || x.size() != lengthscales.size())
    throw InvalidInput("kernel operand dimensions do not match the lengthscales");
  double r2 = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double z = (x[j] - x2[j]) / lengthscales[j];
    r2 += z * z;
  }
  double r = std::sqrt(r2);
  return signal_var * (1.0 + kSqrt5 * r + (5.0 / 3.0) * r2) * std::exp(-kSqrt5 * r);
}

double matern25_kernel(std::span<const double> x, std::span<const double> x2,
                       const GpHyperparams& hyper) {
  return matern25(x, x2, hyper.lengthscales, hyper.signal_var);
}

double observation_noise(std::size_t level, const GpHyperparams& hyper) {
  if (level == 0) return 0.0;
  return hyper.discrepancy.at(level - 1).noise_var;
}

double latent_kernel(const AugmentedInput& a, const AugmentedInput& b, const EmbeddingPool& pool,
                     const GpHyperparams& hyper) {
  if (a.point >= pool.size() || b.point >= pool.size())
    throw InvalidInput("augmented input point index out of range");
  if (a.level >= hyper.levels() || b.level >= hyper.levels())
    throw InvalidInput("augmented input level out of range");
  auto xa = pool.point(a.point);
  auto xb = pool.point(b.point);
  double k = matern25(xa, xb, hyper.lengthscales, hyper.signal_var);
  if (a.level == b.level && a.level >= 1) {
    const auto& d = hyper.discrepancy[a.level - 1];
    k += matern25(xa, xb, d.lengthscales, d.signal_var);
  }
  return k;
}

double multifidelity_kernel(const AugmentedInput& a, const AugmentedInput& b,
                            const EmbeddingPool& pool, const GpHyperparams& hyper) {
  double k = latent_kernel(a, b, pool, hyper);
  if (a == b) k += observation_noise(a.level, hyper) + hyper.jitter;
  return k;
}

}  // namespace rare
