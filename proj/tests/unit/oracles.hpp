// Independent reference computations for the unit tests. Everything here is
// deliberately naive: plain loops, no shared code paths with the library.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

#include <flipforge/dictionary.hpp>
#include <flipforge/dpo.hpp>
#include <flipforge/rng.hpp>

namespace oracle {

using flipforge::Matrix;
using flipforge::Vector;

inline double pairwise_coherence(const Matrix& V) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < V.cols(); ++i) {
    for (Eigen::Index j = 0; j < V.cols(); ++j) {
      if (i == j) continue;
      double dot = 0.0, ni = 0.0, nj = 0.0;
      for (Eigen::Index r = 0; r < V.rows(); ++r) {
        dot += V(r, i) * V(r, j);
        ni += V(r, i) * V(r, i);
        nj += V(r, j) * V(r, j);
      }
      best = std::max(best, std::abs(dot) / std::sqrt(ni * nj));
    }
  }
  return best;
}

inline Vector random_vector(flipforge::Rng& rng, Eigen::Index d, double scale = 1.0) {
  Vector v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Matrix random_matrix(flipforge::Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

/// Central differences of f at x with step h.
inline Vector finite_difference(const std::function<double(const Vector&)>& f, const Vector& x,
                                double h = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

/// Root of a monotone scalar function on [lo, hi] by bisection.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     int iterations = 200) {
  double flo = f(lo);
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Visits every integer vector in {lo..hi}^n (odometer order).
inline void for_each_box_point(std::size_t n, int lo, int hi,
                               const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> z(n, lo);
  while (true) {
    visit(z);
    std::size_t i = 0;
    while (i < n && z[i] == hi) {
      z[i] = lo;
      ++i;
    }
    if (i == n) return;
    ++z[i];
  }
}

/// Squared norm of the embedded vector (V z + g; M z).
inline double embedded_sq_norm(const Matrix& V, const Vector& g, const std::vector<int>& z,
                               double M) {
  Vector r = g;
  double pen = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    r += static_cast<double>(z[i]) * V.col(static_cast<Eigen::Index>(i));
    pen += static_cast<double>(z[i]) * z[i];
  }
  return r.squaredNorm() + M * M * pen;
}

/// Integer point in the box minimizing the embedded norm (first minimum in odometer order).
inline std::vector<int> box_minimizer(const Matrix& V, const Vector& g, double M, int lo, int hi) {
  std::vector<int> best;
  double best_val = std::numeric_limits<double>::infinity();
  for_each_box_point(static_cast<std::size_t>(V.cols()), lo, hi, [&](const std::vector<int>& z) {
    const double v = embedded_sq_norm(V, g, z, M);
    if (v < best_val) {
      best_val = v;
      best = z;
    }
  });
  return best;
}

/// Closest lattice vector B z to t over z in a box, by enumeration.
inline std::vector<int> closest_in_box(const Matrix& B, const Vector& t, int radius) {
  std::vector<int> best;
  double best_val = std::numeric_limits<double>::infinity();
  for_each_box_point(static_cast<std::size_t>(B.cols()), -radius, radius,
                     [&](const std::vector<int>& z) {
                       Vector p = Vector::Zero(B.rows());
                       for (std::size_t i = 0; i < z.size(); ++i)
                         p += static_cast<double>(z[i]) * B.col(static_cast<Eigen::Index>(i));
                       const double v = (p - t).squaredNorm();
                       if (v < best_val) {
                         best_val = v;
                         best = z;
                       }
                     });
  return best;
}

/// ||V x + g|| over all binary x by Gray-code-free bit enumeration (n <= 20).
struct BinaryScan {
  std::vector<double> residual;  // indexed by bitmask
  std::vector<int> cardinality;
};

inline BinaryScan scan_binary(const Matrix& V, const Vector& g) {
  const std::size_t n = static_cast<std::size_t>(V.cols());
  BinaryScan s;
  s.residual.resize(std::size_t{1} << n);
  s.cardinality.resize(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Vector r = g;
    int c = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1U) {
        r += V.col(static_cast<Eigen::Index>(i));
        ++c;
      }
    }
    s.residual[mask] = r.norm();
    s.cardinality[mask] = c;
  }
  return s;
}

inline flipforge::FlipVector mask_to_flips(std::size_t mask, std::size_t n) {
  flipforge::FlipVector x(n, 0);
  for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<int>(mask >> i & 1U);
  return x;
}

/// min over binary x of ||V x + g||^2 + M^2 |x|; returns the mask (smallest on ties).
inline std::size_t surrogate_minimizer(const Matrix& V, const Vector& g, double M) {
  const BinaryScan s = scan_binary(V, g);
  std::size_t best = 0;
  double best_val = std::numeric_limits<double>::infinity();
  for (std::size_t mask = 0; mask < s.residual.size(); ++mask) {
    const double v = s.residual[mask] * s.residual[mask] + M * M * s.cardinality[mask];
    if (v < best_val) {
      best_val = v;
      best = mask;
    }
  }
  return best;
}

}  // namespace oracle
