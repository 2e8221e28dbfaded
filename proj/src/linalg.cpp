#include "contrastgeo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace contrastgeo {

double Tensor3::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

double Tensor4::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

Tensor3 operator+(const Tensor3& a, const Tensor3& b) {
  Tensor3 r(a.dim());
  const int d = a.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) r(i, j, l) = a(i, j, l) + b(i, j, l);
  return r;
}

Tensor3 operator-(const Tensor3& a, const Tensor3& b) { return a + (-1.0) * b; }

Tensor3 operator*(double s, const Tensor3& a) {
  Tensor3 r(a.dim());
  const int d = a.dim();
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) r(i, j, l) = s * a(i, j, l);
  return r;
}

double max_abs_diff(const Tensor3& a, const Tensor3& b) { return (a - b).max_abs(); }

SpectralSplit spectral_split(const Mat& g, double rank_tol) {
  const Mat sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  const Vec& lam = es.eigenvalues();
  const int d = static_cast<int>(lam.size());

  std::vector<int> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return std::abs(lam[a]) < std::abs(lam[b]); });

  SpectralSplit s;
  s.eigenvalues.resize(d);
  s.eigenvectors.resize(d, d);
  for (int k = 0; k < d; ++k) {
    s.eigenvalues[k] = lam[order[k]];
    Vec v = es.eigenvectors().col(order[k]);
    // sign convention: largest-magnitude entry positive
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    s.eigenvectors.col(k) = v;
  }

  const double scale = d > 0 ? s.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  if (scale == 0.0) {
    s.kernel_dim = d;
    return s;
  }
  s.threshold = rank_tol * scale;
  for (int k = 0; k < d; ++k) {
    const double a = std::abs(s.eigenvalues[k]);
    if (a < s.threshold) s.kernel_dim = k + 1;
    if (a > s.threshold / 10.0 && a < s.threshold * 10.0) s.indeterminate = true;
  }
  return s;
}

Mat pseudo_inverse(const Mat& g, double rank_tol) {
  const SpectralSplit s = spectral_split(g, rank_tol);
  const int d = static_cast<int>(g.rows());
  Mat r = Mat::Zero(d, d);
  for (int k = s.kernel_dim; k < d; ++k) {
    r += s.eigenvectors.col(k) * s.eigenvectors.col(k).transpose() / s.eigenvalues[k];
  }
  return r;
}

double condition_number(const Mat& g) {
  if (g.size() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (g + g.transpose()), Eigen::EigenvaluesOnly);
  const Vec a = es.eigenvalues().cwiseAbs();
  const double lo = a.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return a.maxCoeff() / lo;
}

}  // namespace contrastgeo
