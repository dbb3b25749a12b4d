#pragma once

#include <string>
#include <string_view>

#include "btai/tensor.hpp"

namespace btai {

/// Parameters of a categorical distribution: a probability vector over one
/// named axis. Zero entries are allowed (one-hot observations need them).
class Categorical {
 public:
  static constexpr double kTolerance = 1e-10;

  Categorical() = default;
  explicit Categorical(Tensor probs);

  static Categorical uniform(std::string_view axis_name, std::size_t size);
  static Categorical one_hot(std::string_view axis_name, std::size_t size, std::size_t hot);

  const Tensor& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  const std::string& axis_name() const { return probs_.axes().front().name; }

  std::size_t mode() const;
  Categorical renamed(std::string_view to) const;

 private:
  Tensor probs_;
};

/// A tensor of Dirichlet concentrations. Every 1-D slice along
/// `distribution_axis` (all other indices fixed) is one Dirichlet.
class Dirichlet {
 public:
  Dirichlet() = default;
  Dirichlet(Tensor concentrations, std::string distribution_axis);

  const Tensor& concentrations() const { return conc_; }
  const std::string& distribution_axis() const { return axis_; }

 private:
  Tensor conc_;
  std::string axis_;
};

double digamma(double x);

/// E[ln x] under the Dirichlet: psi(d_i) - psi(sum_k d_k), sums along the
/// distribution axis.
Tensor expected_log(const Dirichlet& d);

/// E[x]: concentrations normalised along the distribution axis.
Tensor expected_value(const Dirichlet& d);

/// Max-shifted softmax over a 1-axis tensor. Throws on NaN.
Categorical softmax(const Tensor& logits);

/// sum q ln(q/p) with 0 ln 0 = 0. Returns +inf when p(i) = 0 < q(i).
double kl_divergence(const Categorical& q, const Categorical& p);

double entropy(const Categorical& p);

/// KL(Dir(posterior) || Dir(prior)) summed over every slice.
double dirichlet_kl(const Dirichlet& posterior, const Dirichlet& prior);

/// Normalise each slice of `t` along the named axis.
Tensor normalize_along(const Tensor& t, std::string_view axis_name);

}  // namespace btai
