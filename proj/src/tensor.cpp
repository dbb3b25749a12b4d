#include "btai/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace btai {

namespace {

std::size_t shape_size(const std::vector<Axis>& axes) {
  std::size_t n = 1;
  for (const auto& a : axes) n *= a.size;
  return n;
}

void validate_axes(const std::vector<Axis>& axes) {
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (axes[i].size == 0) {
      throw std::invalid_argument("axis '" + axes[i].name + "' has size 0");
    }
    for (std::size_t j = i + 1; j < axes.size(); ++j) {
      if (axes[i].name == axes[j].name) {
        throw std::invalid_argument("duplicate axis '" + axes[i].name + "'");
      }
    }
  }
}

}  // namespace

Tensor::Tensor(std::vector<Axis> axes, std::vector<double> data)
    : axes_(std::move(axes)), data_(std::move(data)) {
  validate_axes(axes_);
  if (data_.size() != shape_size(axes_)) {
    throw std::invalid_argument("tensor data length " + std::to_string(data_.size()) +
                                " does not match shape size " +
                                std::to_string(shape_size(axes_)));
  }
}

Tensor Tensor::zeros(std::vector<Axis> axes) { return filled(std::move(axes), 0.0); }

Tensor Tensor::filled(std::vector<Axis> axes, double value) {
  const std::size_t n = shape_size(axes);
  return Tensor(std::move(axes), std::vector<double>(n, value));
}

Tensor Tensor::vector(std::string_view name, std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({Axis{std::string(name), n}}, std::move(values));
}

Tensor Tensor::one_hot(std::string_view name, std::size_t size, std::size_t hot) {
  if (hot >= size) throw std::out_of_range("one-hot index out of range");
  std::vector<double> v(size, 0.0);
  v[hot] = 1.0;
  return vector(name, std::move(v));
}

std::optional<std::size_t> Tensor::axis_position(std::string_view name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::size_t Tensor::offset(std::span<const std::size_t> index) const {
  if (index.size() != axes_.size()) {
    throw std::invalid_argument("index rank does not match tensor rank");
  }
  std::size_t off = 0;
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (index[i] >= axes_[i].size) throw std::out_of_range("tensor index out of range");
    off = off * axes_[i].size + index[i];
  }
  return off;
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
  return data_[offset(std::span(index.begin(), index.size()))];
}
double& Tensor::at(std::initializer_list<std::size_t> index) {
  return data_[offset(std::span(index.begin(), index.size()))];
}
double Tensor::at(std::span<const std::size_t> index) const { return data_[offset(index)]; }
double& Tensor::at(std::span<const std::size_t> index) { return data_[offset(index)]; }

Tensor Tensor::renamed(std::string_view from, std::string_view to) const {
  auto pos = axis_position(from);
  if (!pos) throw std::invalid_argument("no axis named '" + std::string(from) + "'");
  auto axes = axes_;
  axes[*pos].name = std::string(to);
  return Tensor(std::move(axes), data_);
}

Tensor outer_product(std::span<const Tensor> vectors) {
  if (vectors.empty()) throw std::invalid_argument("outer product needs at least one vector");
  std::vector<Axis> axes;
  axes.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.rank() != 1) throw std::invalid_argument("outer product inputs must be vectors");
    axes.push_back(v.axes().front());
  }
  validate_axes(axes);

  // Row-major: grow the result one input at a time.
  std::vector<double> data{1.0};
  for (const auto& v : vectors) {
    std::vector<double> grown;
    grown.reserve(data.size() * v.size());
    for (double prefix : data) {
      for (double x : v.values()) grown.push_back(prefix * x);
    }
    data = std::move(grown);
  }
  return Tensor(std::move(axes), std::move(data));
}

Tensor outer_product(std::initializer_list<Tensor> vectors) {
  return outer_product(std::span(vectors.begin(), vectors.size()));
}

Tensor inner_product(const Tensor& w, std::span<const Tensor> factors) {
  const std::size_t rank = w.rank();
  // factor_for[k] = index into `factors` weighting axis k of w, or npos.
  constexpr std::size_t npos = static_cast<std::size_t>(-1);
  std::vector<std::size_t> factor_for(rank, npos);
  for (std::size_t f = 0; f < factors.size(); ++f) {
    const Tensor& v = factors[f];
    if (v.rank() != 1) throw std::invalid_argument("inner product factors must be vectors");
    const Axis& a = v.axes().front();
    auto pos = w.axis_position(a.name);
    if (!pos) throw std::invalid_argument("factor axis '" + a.name + "' not found in tensor");
    if (w.extent(*pos) != a.size) {
      throw std::invalid_argument("size mismatch on axis '" + a.name + "'");
    }
    if (factor_for[*pos] != npos) {
      throw std::invalid_argument("two factors name axis '" + a.name + "'");
    }
    factor_for[*pos] = f;
  }
  std::size_t free_axis = npos;
  for (std::size_t k = 0; k < rank; ++k) {
    if (factor_for[k] != npos) continue;
    if (free_axis != npos) throw std::invalid_argument("inner product leaves more than one axis");
    free_axis = k;
  }
  if (free_axis == npos) throw std::invalid_argument("inner product leaves no axis");

  // Contract one axis at a time, sparsest factor first, skipping zero
  // weights; a one-hot factor then costs a single slice copy.
  std::vector<std::size_t> order;
  std::vector<std::size_t> nonzeros(rank, 0);
  for (std::size_t k = 0; k < rank; ++k) {
    if (k == free_axis) continue;
    order.push_back(k);
    for (double x : factors[factor_for[k]].values()) nonzeros[k] += x != 0.0;
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return nonzeros[a] < nonzeros[b]; });

  std::vector<std::size_t> dims(rank);
  std::vector<std::size_t> ids(rank);  // original axis of each remaining dim
  for (std::size_t k = 0; k < rank; ++k) {
    dims[k] = w.extent(k);
    ids[k] = k;
  }
  std::span<const double> src_data = w.values();
  std::vector<double> cur;
  std::vector<double> next;
  for (std::size_t k : order) {
    const std::size_t pos = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), k) - ids.begin());
    std::size_t outer = 1;
    std::size_t inner = 1;
    for (std::size_t i = 0; i < pos; ++i) outer *= dims[i];
    for (std::size_t i = pos + 1; i < dims.size(); ++i) inner *= dims[i];
    const std::size_t extent = dims[pos];
    const auto v = factors[factor_for[k]].values();
    next.assign(outer * inner, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
      double* dst = next.data() + o * inner;
      for (std::size_t e = 0; e < extent; ++e) {
        const double weight = v[e];
        if (weight == 0.0) continue;
        const double* src = src_data.data() + (o * extent + e) * inner;
        for (std::size_t i = 0; i < inner; ++i) dst[i] += src[i] * weight;
      }
    }
    cur.swap(next);
    src_data = cur;
    dims.erase(dims.begin() + long(pos));
    ids.erase(ids.begin() + long(pos));
  }
  if (order.empty()) cur.assign(src_data.begin(), src_data.end());
  return Tensor({w.axes()[free_axis]}, std::move(cur));
}

Tensor inner_product(const Tensor& w, std::initializer_list<Tensor> factors) {
  return inner_product(w, std::span(factors.begin(), factors.size()));
}

Tensor add(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("axis mismatch in add");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  return Tensor(a.axes(), std::move(out));
}

Tensor scale(const Tensor& a, double factor) {
  return map(a, [factor](double x) { return x * factor; });
}

Tensor map(const Tensor& a, const std::function<double(double)>& fn) {
  std::vector<double> out(a.size());
  std::transform(a.values().begin(), a.values().end(), out.begin(), fn);
  return Tensor(a.axes(), std::move(out));
}

double sum(const Tensor& a) {
  return std::accumulate(a.values().begin(), a.values().end(), 0.0);
}

}  // namespace btai
