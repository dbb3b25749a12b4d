#pragma once

#include <random>
#include <string_view>

#include "btai/model.hpp"

namespace btai {

/// Probability vector drawn uniformly from the simplex (Dirichlet(1)).
Categorical random_categorical(std::string_view axis_name, std::size_t size, std::mt19937_64& rng);

/// Known-matrix model with every column of A, B and D drawn uniformly from
/// the simplex.
GenerativeModel random_known_model(const ModelSpec& spec, std::mt19937_64& rng);

/// Samples from Dir(concentrations) via normalised Gamma draws.
std::vector<double> sample_dirichlet(std::span<const double> concentrations, std::mt19937_64& rng);

}  // namespace btai
