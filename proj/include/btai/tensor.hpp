#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace btai {

// Axis names used across the model. A tensor's axes are matched by name,
// so the same belief vector can weight either side of a matrix.
namespace axis {
inline constexpr std::string_view obs = "obs";
inline constexpr std::string_view state = "state";
inline constexpr std::string_view next = "next";
inline constexpr std::string_view action = "action";
}  // namespace axis

struct Axis {
  std::string name;
  std::size_t size = 1;

  bool operator==(const Axis&) const = default;
};

/// Dense row-major tensor whose dimensions carry names.
///
/// Values are doubles; element (x_1, ..., x_N) lives at the usual row-major
/// offset. Construction validates that axis names are distinct, sizes are
/// positive, and the data length matches the shape.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<Axis> axes, std::vector<double> data);

  static Tensor zeros(std::vector<Axis> axes);
  static Tensor filled(std::vector<Axis> axes, double value);
  static Tensor vector(std::string_view name, std::vector<double> values);
  static Tensor one_hot(std::string_view name, std::size_t size, std::size_t hot);

  const std::vector<Axis>& axes() const { return axes_; }
  std::size_t rank() const { return axes_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t extent(std::size_t axis_pos) const { return axes_.at(axis_pos).size; }
  std::optional<std::size_t> axis_position(std::string_view name) const;

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  double operator[](std::size_t flat) const { return data_[flat]; }
  double& operator[](std::size_t flat) { return data_[flat]; }

  double at(std::initializer_list<std::size_t> index) const;
  double& at(std::initializer_list<std::size_t> index);
  double at(std::span<const std::size_t> index) const;
  double& at(std::span<const std::size_t> index);

  /// Same data with one axis relabelled.
  Tensor renamed(std::string_view from, std::string_view to) const;

  bool same_shape(const Tensor& other) const { return axes_ == other.axes_; }

 private:
  std::size_t offset(std::span<const std::size_t> index) const;

  std::vector<Axis> axes_;
  std::vector<double> data_;
};

/// W(x_1..x_N) = V1(x_1) * ... * VN(x_N); one result axis per input, in order.
Tensor outer_product(std::span<const Tensor> vectors);
Tensor outer_product(std::initializer_list<Tensor> vectors);

/// Contracts every axis of `w` that a factor names, leaving the single
/// unmatched axis. Factor order is irrelevant: matching is by axis name.
Tensor inner_product(const Tensor& w, std::span<const Tensor> factors);
Tensor inner_product(const Tensor& w, std::initializer_list<Tensor> factors);

Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor map(const Tensor& a, const std::function<double(double)>& fn);

double sum(const Tensor& a);

}  // namespace btai
