#include "sgfem/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sgfem/quadrature.hpp"

namespace sgfem::model {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Coefficient Coefficient::constant(double value) {
  Coefficient c;
  c.kind_ = Kind::Constant;
  c.amplitude_ = value;
  c.min_ = c.max_ = value;
  return c;
}

Coefficient Coefficient::cosine(double amplitude, double b1, double b2) {
  Coefficient c;
  c.kind_ = Kind::Cosine;
  c.amplitude_ = amplitude;
  c.beta1_ = b1;
  c.beta2_ = b2;
  const double a = std::abs(amplitude);
  // Both factors reach ±1 on the benchmark domain for integer frequencies.
  c.min_ = (b1 == 0.0 && b2 == 0.0) ? amplitude : -a;
  c.max_ = (b1 == 0.0 && b2 == 0.0) ? amplitude : a;
  return c;
}

Coefficient Coefficient::function(std::function<double(const mesh::Point&)> fn, double min_value,
                                  double max_value) {
  if (!fn) throw InputDomainError("coefficient: empty function");
  if (min_value > max_value) throw InputDomainError("coefficient: min exceeds max");
  Coefficient c;
  c.kind_ = Kind::Function;
  c.fn_ = std::move(fn);
  c.min_ = min_value;
  c.max_ = max_value;
  return c;
}

double Coefficient::operator()(const mesh::Point& p) const {
  switch (kind_) {
    case Kind::Constant:
      return amplitude_;
    case Kind::Cosine:
      return amplitude_ * std::cos(2.0 * std::numbers::pi * beta1_ * p.x) *
             std::cos(2.0 * std::numbers::pi * beta2_ * p.y);
    case Kind::Function:
      return fn_(p);
  }
  return 0.0;
}

double Coefficient::integrate(const mesh::Point& a, const mesh::Point& b, const mesh::Point& c,
                              IntegrationRule rule) const {
  const double area = 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x));
  if (kind_ == Kind::Constant) return amplitude_ * area;
  if (kind_ == Kind::Cosine && rule == IntegrationRule::Exact) {
    if (amplitude_ == 0.0) return 0.0;
    const double k1 = 2.0 * std::numbers::pi * beta1_;
    const double k2 = 2.0 * std::numbers::pi * beta2_;
    // cos(u)cos(v) = (cos(u+v) + cos(u-v)) / 2
    const double plus = quad::plane_wave_integral(a, b, c, k1, k2).real();
    const double minus = quad::plane_wave_integral(a, b, c, k1, -k2).real();
    return 0.5 * amplitude_ * (plus + minus);
  }
  return quad::integrate_degree5(a, b, c, [this](const mesh::Point& p) { return (*this)(p); });
}

bool Coefficient::is_zero() const {
  return kind_ != Kind::Function && amplitude_ == 0.0;
}

double Coefficient::sup_norm() const { return std::max(std::abs(min_), std::abs(max_)); }
double Coefficient::min_value() const { return min_; }
double Coefficient::max_value() const { return max_; }

ModeFrequencies mode_frequencies(std::uint32_t m) {
  if (m == 0) throw InputDomainError("fourier mode: m must be >= 1");
  auto k = static_cast<std::uint32_t>(std::floor(-0.5 + std::sqrt(0.25 + 2.0 * m)));
  // Guard the floating floor at exact triangular numbers.
  while (static_cast<std::uint64_t>(k + 1) * (k + 2) / 2 <= m) ++k;
  while (static_cast<std::uint64_t>(k) * (k + 1) / 2 > m) --k;
  const std::uint32_t b1 = m - k * (k + 1) / 2;
  return {k, b1, k - b1};
}

Coefficient fourier_mode(std::uint32_t m, double amplitude, double sigma) {
  const ModeFrequencies f = mode_frequencies(m);
  return Coefficient::cosine(amplitude * std::pow(static_cast<double>(m), -sigma), f.beta1, f.beta2);
}

double riemann_zeta(double s) {
  if (!(s > 1.0)) throw InadmissibleProblem("zeta: series diverges for sigma <= 1");
  constexpr int kN = 32;
  double sum = 0.0;
  for (int n = kN - 1; n >= 1; --n) sum += std::pow(static_cast<double>(n), -s);
  const double N = kN;
  sum += std::pow(N, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(N, -s);
  // Euler-Maclaurin tail: B_{2j}/(2j)! * s(s+1)...(s+2j-2) * N^{-s-2j+1}
  constexpr double kBernoulli[] = {1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0,
                                   -691.0 / 2730.0, 7.0 / 6.0};
  double rising = s;  // s(s+1)...(s+2j-2)
  double factorial = 2.0;
  for (int j = 1; j <= 7; ++j) {
    sum += kBernoulli[j - 1] / factorial * rising * std::pow(N, -s - 2.0 * j + 1.0);
    rising *= (s + 2.0 * j - 1.0) * (s + 2.0 * j);
    factorial *= (2.0 * j + 1.0) * (2.0 * j + 2.0);
  }
  return sum;
}

double amplitude_from_tau(double tau, double sigma) {
  if (!(sigma > 1.0)) throw InadmissibleProblem("amplitude: series diverges for sigma <= 1");
  if (!(tau >= 0.0) || !(tau < 1.0)) {
    throw InadmissibleProblem("amplitude: tau must lie in [0, 1), got " + std::to_string(tau));
  }
  return tau / riemann_zeta(sigma);
}

ProblemSpec::ProblemSpec(double sigma, double amplitude)
    : ProblemSpec(Coefficient::constant(1.0), Coefficient::constant(1.0), sigma, amplitude) {}

ProblemSpec::ProblemSpec(Coefficient mean, Coefficient rhs, double sigma, double amplitude)
    : mean_(std::move(mean)), rhs_(std::move(rhs)), sigma_(sigma), amplitude_(amplitude) {
  if (!(mean_.min_value() > 0.0)) throw InadmissibleProblem("problem: a0 must be bounded below by a positive constant");
  if (!(amplitude_ >= 0.0)) throw InadmissibleProblem("problem: amplitude must be nonnegative");
  if (amplitude_ > 0.0 && !(sigma_ > 1.0)) throw InadmissibleProblem("problem: sigma must exceed 1");
  if (!(tau() < 1.0)) {
    throw InadmissibleProblem("problem: tau = " + std::to_string(tau()) + " violates tau < 1");
  }
}

ProblemSpec ProblemSpec::benchmark(double sigma, double tau) { return from_tau(sigma, tau); }

ProblemSpec ProblemSpec::from_tau(double sigma, double tau) {
  return ProblemSpec(sigma, amplitude_from_tau(tau, sigma));
}

ProblemSpec ProblemSpec::deterministic() { return ProblemSpec(2.0, 0.0); }

Coefficient ProblemSpec::mode(std::uint32_t m) const {
  if (m == 0) return mean_;
  return fourier_mode(m, amplitude_, sigma_);
}

double ProblemSpec::tau() const {
  if (amplitude_ == 0.0) return 0.0;
  return amplitude_ * riemann_zeta(sigma_) / a0_min();
}

ContrastBounds contrast_bounds(const ProblemSpec& spec) {
  const double tau = spec.tau();
  if (!(tau < 1.0)) throw InadmissibleProblem("contrast bounds: tau >= 1");
  return {spec.a0_min() / (spec.a0_max() * (1.0 + tau)), spec.a0_max() / (spec.a0_min() * (1.0 - tau))};
}

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw InputDomainError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw InputDomainError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.count(key)) throw InputDomainError("config: duplicate key '" + key + "'");
    kv.emplace(std::move(key), std::move(value));
  }
  return kv;
}

KeyValues read_key_values_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputDomainError("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

const std::vector<std::string>& model_keys() {
  static const std::vector<std::string> keys{"sigma", "tau", "amplitude", "mesh", "rhs", "quadrature"};
  return keys;
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const char* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) {
    throw InputDomainError("config: '" + key + "' expects a number, got '" + value + "'");
  }
  return out;
}

ProblemConfig problem_from_config(const KeyValues& kv, const std::vector<std::string>& extra_allowed) {
  for (const auto& [key, value] : kv) {
    const bool known = std::find(model_keys().begin(), model_keys().end(), key) != model_keys().end() ||
                       std::find(extra_allowed.begin(), extra_allowed.end(), key) != extra_allowed.end();
    if (!known) throw InputDomainError("config: unknown key '" + key + "'");
  }
  if (kv.count("tau") && kv.count("amplitude")) {
    throw InputDomainError("config: 'tau' and 'amplitude' are mutually exclusive");
  }
  const double sigma = kv.count("sigma") ? parse_double("sigma", kv.at("sigma")) : 2.0;
  if (auto it = kv.find("rhs"); it != kv.end() && it->second != "one") {
    throw InputDomainError("config: rhs must be 'one'");
  }
  double amplitude = 0.0;
  if (auto it = kv.find("amplitude"); it != kv.end()) {
    amplitude = parse_double("amplitude", it->second);
  } else {
    const double tau = kv.count("tau") ? parse_double("tau", kv.at("tau")) : 0.9;
    amplitude = amplitude_from_tau(tau, sigma);
  }
  ProblemConfig cfg{ProblemSpec(sigma, amplitude), "lshape"};
  if (auto it = kv.find("quadrature"); it != kv.end()) {
    if (it->second == "exact") {
      cfg.spec.set_rule(IntegrationRule::Exact);
    } else if (it->second == "degree5") {
      cfg.spec.set_rule(IntegrationRule::Degree5);
    } else {
      throw InputDomainError("config: quadrature must be 'exact' or 'degree5'");
    }
  }
  if (auto it = kv.find("mesh"); it != kv.end()) cfg.mesh = it->second;
  return cfg;
}

mesh::MeshPtr load_mesh(const std::string& source) {
  if (source.empty() || source == "lshape") return std::make_shared<const mesh::Mesh>(mesh::initial_lshape());
  if (source == "square") return std::make_shared<const mesh::Mesh>(mesh::unit_square());
  return std::make_shared<const mesh::Mesh>(mesh::read_mesh_file(source));
}

}  // namespace sgfem::model
