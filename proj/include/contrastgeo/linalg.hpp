#pragma once

#include <vector>

#include "contrastgeo/jet.hpp"

namespace contrastgeo {

/// Dense d x d x d array, row-major in (i, j, l).
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int l) { return data_[(static_cast<std::size_t>(i) * d_ + j) * d_ + l]; }
  double operator()(int i, int j, int l) const { return data_[(static_cast<std::size_t>(i) * d_ + j) * d_ + l]; }
  const std::vector<double>& data() const { return data_; }

  double max_abs() const;

 private:
  int d_ = 0;
  std::vector<double> data_;
};

Tensor3 operator+(const Tensor3& a, const Tensor3& b);
Tensor3 operator-(const Tensor3& a, const Tensor3& b);
Tensor3 operator*(double s, const Tensor3& a);

/// max |a - b| over entries.
double max_abs_diff(const Tensor3& a, const Tensor3& b);

/// Dense d^4 array; curvature(i, j, k, l) = l-th component of R(e_i, e_j) e_k.
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int d) : d_(d), data_(static_cast<std::size_t>(d) * d * d * d, 0.0) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int k, int l) {
    return data_[((static_cast<std::size_t>(i) * d_ + j) * d_ + k) * d_ + l];
  }
  double operator()(int i, int j, int k, int l) const {
    return data_[((static_cast<std::size_t>(i) * d_ + j) * d_ + k) * d_ + l];
  }
  double max_abs() const;

 private:
  int d_ = 0;
  std::vector<double> data_;
};

/// Spectral split of a symmetric form into kernel and complement.  This is
/// the single rank decision shared by the reducer and the optimizer.
struct SpectralSplit {
  Vec eigenvalues;  // ascending by |lambda|
  Mat eigenvectors; // columns, same order
  int kernel_dim = 0;
  double threshold = 0.0;
  bool indeterminate = false;  // some |lambda| within a factor 10 of threshold

  Mat kernel() const { return eigenvectors.leftCols(kernel_dim); }
  Mat complement() const { return eigenvectors.rightCols(eigenvectors.cols() - kernel_dim); }
  int rank() const { return static_cast<int>(eigenvalues.size()) - kernel_dim; }
};

inline constexpr double kDefaultRankTol = 1e-8;

SpectralSplit spectral_split(const Mat& g, double rank_tol = kDefaultRankTol);

/// Moore-Penrose inverse with kernel directions dropped per spectral_split.
Mat pseudo_inverse(const Mat& g, double rank_tol = kDefaultRankTol);

/// Ratio of largest to smallest |eigenvalue| (infinity when singular).
double condition_number(const Mat& g);

}  // namespace contrastgeo
