#include "mat/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace mat {

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw std::invalid_argument("from_rows: ragged row lengths");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

void throw_shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch (" + a.shape_str() +
                              " vs " + b.shape_str() + ")");
}

void throw_shape_error(const char* op, const Matrix& a) {
  throw std::invalid_argument(std::string(op) + ": bad shape (" + a.shape_str() + ")");
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw_shape_error("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Matrix out(m, n, 0.0);
  const double* ad = a.data();
  const double* bd = b.data();
  double* od = out.data();
  // i-k-j loop order: per output entry the inner dimension is still reduced
  // in ascending k, and rows of b are walked contiguously.
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = ad + i * k;
    double* orow = od + i * n;
    for (std::size_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = bd + kk * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape_error("add", a, b);
  Matrix out = a;
  add_in_place(out, b);
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape_error("sub", a, b);
  Matrix out = a;
  double* od = out.data();
  const double* bd = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) od[i] -= bd[i];
  return out;
}

Matrix elementwise_mul(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw_shape_error("elementwise_mul", a, b);
  Matrix out = a;
  mul_in_place(out, b);
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  scale_in_place(out, s);
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t r = 0; r < a.rows(); ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) out(c, r) = a(r, c);
  return out;
}

Matrix sigmoid(const Matrix& x) {
  Matrix out = x;
  double* od = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) od[i] = sigmoid_scalar(od[i]);
  return out;
}

Matrix tanh(const Matrix& x) {
  Matrix out = x;
  double* od = out.data();
  for (std::size_t i = 0; i < out.size(); ++i) od[i] = std::tanh(od[i]);
  return out;
}

Vector concat_rows(const Vector& u, const Vector& v) {
  if (u.cols() != 1) throw_shape_error("concat_rows", u);
  if (v.cols() != 1) throw_shape_error("concat_rows", v);
  Vector out(u.rows() + v.rows(), 1);
  std::copy(u.data(), u.data() + u.size(), out.data());
  std::copy(v.data(), v.data() + v.size(), out.data() + u.size());
  return out;
}

Vector softmax(const Vector& v) {
  if (v.empty()) throw std::invalid_argument("softmax: empty input");
  if (v.cols() != 1) throw_shape_error("softmax", v);
  Vector out = v;
  double* od = out.data();
  const std::size_t n = out.size();
  double max = od[0];
  for (std::size_t i = 1; i < n; ++i) max = std::max(max, od[i]);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    od[i] = std::exp(od[i] - max);
    sum += od[i];
  }
  const double inv = 1.0 / sum;
  for (std::size_t i = 0; i < n; ++i) od[i] *= inv;
  return out;
}

double dot(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw_shape_error("dot", u, v);
  const double* ud = u.data();
  const double* vd = v.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += ud[i] * vd[i];
  return acc;
}

double squared_norm(const Matrix& a) {
  const double* ad = a.data();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += ad[i] * ad[i];
  return acc;
}

bool all_finite(const Matrix& a) {
  const double* ad = a.data();
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!std::isfinite(ad[i])) return false;
  return true;
}

}  // namespace mat
