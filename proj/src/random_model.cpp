#include "btai/random_model.hpp"

#include <stdexcept>

namespace btai {

std::vector<double> sample_dirichlet(std::span<const double> concentrations, std::mt19937_64& rng) {
  std::vector<double> x(concentrations.size());
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::gamma_distribution<double> g(concentrations[i], 1.0);
    x[i] = g(rng);
    total += x[i];
  }
  if (!(total > 0.0)) throw std::runtime_error("degenerate Dirichlet draw");
  for (double& v : x) v /= total;
  return x;
}

Categorical random_categorical(std::string_view axis_name, std::size_t size, std::mt19937_64& rng) {
  const std::vector<double> ones(size, 1.0);
  auto p = sample_dirichlet(ones, rng);
  // Fold the rounding residue into the largest entry so the sum is exact.
  double total = 0.0;
  std::size_t big = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    total += p[i];
    if (p[i] > p[big]) big = i;
  }
  p[big] += 1.0 - total;
  return Categorical(Tensor::vector(axis_name, std::move(p)));
}

GenerativeModel random_known_model(const ModelSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  const std::size_t S = spec.n_states, O = spec.n_obs, U = spec.n_actions;
  Tensor A = Tensor::zeros({{std::string(axis::obs), O}, {std::string(axis::state), S}});
  for (std::size_t s = 0; s < S; ++s) {
    const auto col = random_categorical(axis::obs, O, rng);
    for (std::size_t o = 0; o < O; ++o) A.at({o, s}) = col[o];
  }
  Tensor B = Tensor::zeros(
      {{std::string(axis::next), S}, {std::string(axis::state), S}, {std::string(axis::action), U}});
  for (std::size_t u = 0; u < U; ++u) {
    for (std::size_t s = 0; s < S; ++s) {
      const auto col = random_categorical(axis::next, S, rng);
      for (std::size_t n = 0; n < S; ++n) B.at({n, s, u}) = col[n];
    }
  }
  Tensor D = random_categorical(axis::state, S, rng).probs();
  return GenerativeModel::known(std::move(A), std::move(B), std::move(D));
}

}  // namespace btai
