#pragma once
// Finite-difference oracles.  They only call plain double evaluation and
// never touch the jet engine, so agreement with it is an independent check.

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;
using Fn = std::function<double(const Vec&)>;

// Richardson extrapolation of an O(h^2) central rule over D(h), D(h/2), ...,
// D(h/2^levels).  The default of two levels leaves an O(h^6) error.
template <class Rule>
double richardson(Rule rule, double h, int levels = 2) {
  std::vector<double> t;
  for (int k = 0; k <= levels; ++k) t.push_back(rule(h / (1 << k)));
  double factor = 4;
  for (int k = 1; k <= levels; ++k, factor *= 4)
    for (int i = levels; i >= k; --i) t[i] = (factor * t[i] - t[i - 1]) / (factor - 1);
  return t[levels];
}

inline double d1(const Fn& f, const Vec& p, const Vec& u, double h = 1e-2, int levels = 2) {
  return richardson([&](double s) { return (f(p + s * u) - f(p - s * u)) / (2 * s); }, h, levels);
}

inline double d2(const Fn& f, const Vec& p, const Vec& u, const Vec& v, double h = 1e-2, int levels = 2) {
  return richardson(
      [&](double s) {
        double acc = 0;
        for (int a : {-1, 1})
          for (int b : {-1, 1}) acc += a * b * f(p + s * (a * u + b * v));
        return acc / (4 * s * s);
      },
      h, levels);
}

// 8-point mixed third difference.
inline double d3(const Fn& f, const Vec& p, const Vec& u, const Vec& v, const Vec& w, double h = 1e-2,
                 int levels = 2) {
  return richardson(
      [&](double s) {
        double acc = 0;
        for (int a : {-1, 1})
          for (int b : {-1, 1})
            for (int c : {-1, 1}) acc += a * b * c * f(p + s * (a * u + b * v + c * w));
        return acc / (8 * s * s * s);
      },
      h, levels);
}

// Scalar function of three parameters, mixed third derivative at 0.
inline double d3_params(const std::function<double(double, double, double)>& f, double h = 1e-2) {
  return richardson(
      [&](double s) {
        double acc = 0;
        for (int a : {-1, 1})
          for (int b : {-1, 1})
            for (int c : {-1, 1}) acc += a * b * c * f(a * s, b * s, c * s);
        return acc / (8 * s * s * s);
      },
      h);
}

inline double d2_params(const std::function<double(double, double)>& f, double h = 1e-2) {
  return richardson(
      [&](double s) {
        double acc = 0;
        for (int a : {-1, 1})
          for (int b : {-1, 1}) acc += a * b * f(a * s, b * s);
        return acc / (4 * s * s);
      },
      h);
}

// Truncated power series of the matrix exponential; arguments here are small.
inline Eigen::MatrixXcd expm_series(const Eigen::MatrixXcd& a) {
  Eigen::MatrixXcd sum = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  Eigen::MatrixXcd term = sum;
  for (int k = 1; k < 40; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

}  // namespace oracle
