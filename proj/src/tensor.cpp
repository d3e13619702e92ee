#include "veram/tensor.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

#include "veram/errors.hpp"
#include "veram/rng.hpp"

namespace veram {

namespace {
std::size_t shape_product(const std::vector<int>& s) {
  std::size_t n = 1;
  for (int d : s) n *= static_cast<std::size_t>(d);
  return n;
}
}  // namespace

Tensor::Tensor(std::vector<int> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != data.size())
    throw DimensionError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_str(*this));
}

Tensor Tensor::zeros(std::vector<int> s) {
  Tensor t;
  t.shape = std::move(s);
  t.data.assign(shape_product(t.shape), 0.0);
  return t;
}

Tensor Tensor::full(std::vector<int> s, double value) {
  Tensor t = zeros(std::move(s));
  for (double& x : t.data) x = value;
  return t;
}

Tensor Tensor::vec(std::initializer_list<double> values) {
  Tensor t;
  t.shape = {static_cast<int>(values.size())};
  t.data.assign(values.begin(), values.end());
  return t;
}

Tensor Tensor::uniform_init(std::vector<int> s, Rng& rng) {
  Tensor t = zeros(std::move(s));
  int fan_in = t.rank() == 2 ? t.cols() : t.size();
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in > 0 ? fan_in : 1));
  for (double& x : t.data) x = rng.uniform(-bound, bound);
  return t;
}

bool Tensor::all_finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

Tensor& Tensor::operator+=(const Tensor& o) {
  require_same_shape(*this, o, "Tensor::operator+=");
  for (std::size_t i = 0; i < data.size(); ++i) data[i] += o.data[i];
  return *this;
}

Tensor& Tensor::operator*=(double s) {
  for (double& x : data) x *= s;
  return *this;
}

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) os << 'x';
    os << t.shape[i];
  }
  os << ']';
  return os.str();
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(where) + ": shape mismatch " + shape_str(a) + " vs " + shape_str(b));
}

}  // namespace veram
