#include "btai/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace btai {

namespace {

// Calls fn(offsets) for each 1-D slice of `t` along `axis_name`, where
// offsets[k] is the flat index of the k-th element of that slice.
template <typename Fn>
void for_each_slice(const Tensor& t, std::string_view axis_name, Fn&& fn) {
  auto pos = t.axis_position(axis_name);
  if (!pos) throw std::invalid_argument("no axis named '" + std::string(axis_name) + "'");
  std::size_t stride = 1;
  for (std::size_t k = *pos + 1; k < t.rank(); ++k) stride *= t.extent(k);
  const std::size_t extent = t.extent(*pos);
  const std::size_t outer = t.size() / (extent * stride);
  std::vector<std::size_t> offsets(extent);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < stride; ++in) {
      for (std::size_t k = 0; k < extent; ++k) offsets[k] = o * extent * stride + k * stride + in;
      fn(std::span<const std::size_t>(offsets));
    }
  }
}

void check_positive(const Tensor& conc) {
  for (double c : conc.values()) {
    if (!(c > 0.0)) throw std::invalid_argument("Dirichlet concentrations must be > 0");
  }
}

}  // namespace

Categorical::Categorical(Tensor probs) : probs_(std::move(probs)) {
  if (probs_.rank() != 1) throw std::invalid_argument("categorical parameters must be a vector");
  double total = 0.0;
  for (double p : probs_.values()) {
    if (!(p >= 0.0)) throw std::invalid_argument("categorical probabilities must be >= 0");
    total += p;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    throw std::invalid_argument("categorical probabilities sum to " + std::to_string(total));
  }
}

Categorical Categorical::uniform(std::string_view axis_name, std::size_t size) {
  return Categorical(Tensor::filled({Axis{std::string(axis_name), size}}, 1.0 / double(size)));
}

Categorical Categorical::one_hot(std::string_view axis_name, std::size_t size, std::size_t hot) {
  return Categorical(Tensor::one_hot(axis_name, size, hot));
}

std::size_t Categorical::mode() const {
  const auto v = probs_.values();
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

Categorical Categorical::renamed(std::string_view to) const {
  return Categorical(probs_.renamed(axis_name(), to));
}

Dirichlet::Dirichlet(Tensor concentrations, std::string distribution_axis)
    : conc_(std::move(concentrations)), axis_(std::move(distribution_axis)) {
  if (!conc_.axis_position(axis_)) {
    throw std::invalid_argument("distribution axis '" + axis_ + "' is not an axis of the tensor");
  }
  check_positive(conc_);
}

double digamma(double x) {
  if (!(x > 0.0)) {
    throw std::domain_error("digamma is only evaluated for positive arguments");
  }
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  // Asymptotic expansion in Bernoulli numbers, truncated after x^-14.
  const double series =
      inv2 * (1.0 / 12 -
              inv2 * (1.0 / 120 -
                      inv2 * (1.0 / 252 -
                              inv2 * (1.0 / 240 -
                                      inv2 * (1.0 / 132 -
                                              inv2 * (691.0 / 32760 - inv2 * (1.0 / 12)))))));
  return result + std::log(x) - 0.5 * inv - series;
}

Tensor expected_log(const Dirichlet& d) {
  const Tensor& conc = d.concentrations();
  check_positive(conc);
  Tensor out = Tensor::zeros(conc.axes());
  for_each_slice(conc, d.distribution_axis(), [&](std::span<const std::size_t> idx) {
    double total = 0.0;
    for (auto i : idx) total += conc[i];
    const double psi_total = digamma(total);
    for (auto i : idx) out[i] = digamma(conc[i]) - psi_total;
  });
  return out;
}

Tensor normalize_along(const Tensor& t, std::string_view axis_name) {
  Tensor out = t;
  for_each_slice(t, axis_name, [&](std::span<const std::size_t> idx) {
    double total = 0.0;
    for (auto i : idx) total += t[i];
    if (!(total > 0.0)) throw std::invalid_argument("cannot normalise a slice with zero mass");
    for (auto i : idx) out[i] = t[i] / total;
  });
  return out;
}

Tensor expected_value(const Dirichlet& d) {
  check_positive(d.concentrations());
  return normalize_along(d.concentrations(), d.distribution_axis());
}

Categorical softmax(const Tensor& logits) {
  if (logits.rank() != 1) throw std::invalid_argument("softmax expects a vector");
  const auto v = logits.values();
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (std::isnan(x)) throw std::invalid_argument("softmax input contains NaN");
    hi = std::max(hi, x);
  }
  if (!std::isfinite(hi)) throw std::invalid_argument("softmax needs at least one finite logit");
  std::vector<double> out(v.size());
  double total = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - hi);
    total += out[i];
  }
  for (double& x : out) x /= total;
  return Categorical(Tensor(logits.axes(), std::move(out)));
}

double kl_divergence(const Categorical& q, const Categorical& p) {
  if (q.size() != p.size()) throw std::invalid_argument("KL operands differ in size");
  double kl = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == 0.0) continue;
    if (p[i] == 0.0) return std::numeric_limits<double>::infinity();
    kl += q[i] * (std::log(q[i]) - std::log(p[i]));
  }
  return kl;
}

double entropy(const Categorical& p) {
  double h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  }
  return h;
}

double dirichlet_kl(const Dirichlet& posterior, const Dirichlet& prior) {
  const Tensor& q = posterior.concentrations();
  const Tensor& p = prior.concentrations();
  if (!q.same_shape(p)) throw std::invalid_argument("Dirichlet KL operands differ in shape");
  double kl = 0.0;
  for_each_slice(q, posterior.distribution_axis(), [&](std::span<const std::size_t> idx) {
    double q0 = 0.0;
    double p0 = 0.0;
    for (auto i : idx) {
      q0 += q[i];
      p0 += p[i];
    }
    const double psi_q0 = digamma(q0);
    kl += std::lgamma(q0) - std::lgamma(p0);
    for (auto i : idx) {
      kl += std::lgamma(p[i]) - std::lgamma(q[i]) + (q[i] - p[i]) * (digamma(q[i]) - psi_q0);
    }
  });
  return kl;
}

}  // namespace btai
