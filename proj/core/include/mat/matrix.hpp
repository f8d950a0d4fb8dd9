#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mat {

/// Dense row-major matrix of doubles, the sole numeric carrier of the
/// library. Column vectors are n x 1 matrices; the Vector alias marks intent.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix col_vector(std::size_t n, double fill = 0.0) { return Matrix(n, 1, fill); }
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  void fill(double v) { data_.assign(data_.size(), v); }
  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Vector = Matrix;

/// A weight tensor paired with its gradient accumulator.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string name_in, std::size_t rows, std::size_t cols)
      : name(std::move(name_in)), value(rows, cols), grad(rows, cols) {}

  void reset_grad() { grad.fill(0.0); }
};

[[noreturn]] void throw_shape_error(const char* op, const Matrix& a, const Matrix& b);
[[noreturn]] void throw_shape_error(const char* op, const Matrix& a);

// Product with deterministic summation order: the inner dimension is always
// reduced left to right.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix elementwise_mul(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
Matrix transpose(const Matrix& a);

Matrix sigmoid(const Matrix& x);
Matrix tanh(const Matrix& x);

/// Stacks u on top of v; both must be column vectors.
Vector concat_rows(const Vector& u, const Vector& v);

/// Max-subtracted softmax over a non-empty column vector.
Vector softmax(const Vector& v);

double dot(const Vector& u, const Vector& v);
double squared_norm(const Matrix& a);
bool all_finite(const Matrix& a);

/// Overflow-free scalar sigmoid.
inline double sigmoid_scalar(double x) {
  if (x >= 0.0) {
    const double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  const double z = std::exp(x);
  return z / (1.0 + z);
}

// In-place kernels for the recurrent hot path. Shapes are the caller's
// responsibility; they are asserted only in the checked entry points above.

/// out += w * x  (w: m x n, x: n x 1, out: m x 1)
inline void accumulate_matvec(Vector& out, const Matrix& w, const Vector& x) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data();
  const double* xd = x.data();
  double* od = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = wd + r * n;
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += row[k] * xd[k];
    od[r] += acc;
  }
}

/// out += w^T * x  (w: m x n, x: m x 1, out: n x 1)
inline void accumulate_matvec_transpose(Vector& out, const Matrix& w, const Vector& x) {
  const std::size_t m = w.rows(), n = w.cols();
  const double* wd = w.data();
  const double* xd = x.data();
  double* od = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    const double* row = wd + r * n;
    const double xr = xd[r];
    for (std::size_t k = 0; k < n; ++k) od[k] += row[k] * xr;
  }
}

/// out += u * v^T  (u: m x 1, v: n x 1, out: m x n)
inline void accumulate_outer(Matrix& out, const Vector& u, const Vector& v) {
  const std::size_t m = u.size(), n = v.size();
  const double* ud = u.data();
  const double* vd = v.data();
  double* od = out.data();
  for (std::size_t r = 0; r < m; ++r) {
    double* row = od + r * n;
    const double ur = ud[r];
    for (std::size_t k = 0; k < n; ++k) row[k] += ur * vd[k];
  }
}

inline void add_in_place(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape_error("add_in_place", a, b);
  double* ad = a.data();
  const double* bd = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) ad[i] += bd[i];
}

inline void mul_in_place(Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape_error("mul_in_place", a, b);
  double* ad = a.data();
  const double* bd = b.data();
  for (std::size_t i = 0; i < a.size(); ++i) ad[i] *= bd[i];
}

inline void scale_in_place(Matrix& a, double s) {
  double* ad = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) ad[i] *= s;
}

}  // namespace mat
