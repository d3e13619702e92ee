#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace veram {

class Rng;

/// Dense row-major array of doubles. Rank 1 and 2 are all the model needs.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<int> s, std::vector<double> d);

  static Tensor zeros(std::vector<int> s);
  static Tensor full(std::vector<int> s, double value);
  static Tensor vec(std::initializer_list<double> values);
  /// Entries uniform in +-1/sqrt(fan_in); fan_in = cols for matrices,
  /// length for vectors.
  static Tensor uniform_init(std::vector<int> s, Rng& rng);

  int size() const { return static_cast<int>(data.size()); }
  int rank() const { return static_cast<int>(shape.size()); }
  int rows() const { return shape.at(0); }
  int cols() const { return shape.at(1); }

  double& operator[](int i) { return data[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return data[static_cast<std::size_t>(i)]; }
  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols() + c]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
  bool all_finite() const;

  Tensor& operator+=(const Tensor& o);
  Tensor& operator*=(double s);
};

std::string shape_str(const Tensor& t);

/// Throws DimensionError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace veram
