#pragma once

// Dense complex matrices small enough for per-bin array processing (M, N <= 8).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "arraysep/errors.hpp"
#include "arraysep/stft.hpp"

namespace arraysep {

struct CMat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<cplx> data;

  CMat() = default;
  CMat(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}

  cplx& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  const cplx& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

  static CMat identity(std::size_t n) {
    CMat m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
};

inline CMat matmul(const CMat& a, const CMat& b) {
  if (a.cols != b.rows) throw std::invalid_argument("matmul: dimension mismatch");
  CMat out(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t k = 0; k < a.cols; ++k) {
      const cplx aik = a(i, k);
      for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
    }
  return out;
}

inline CMat hermitian(const CMat& a) {
  CMat out(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = std::conj(a(i, j));
  return out;
}

inline double frobenius(const CMat& a) {
  double s = 0.0;
  for (const cplx& v : a.data) s += std::norm(v);
  return std::sqrt(s);
}

// Solves B X = R for Hermitian positive definite B via an L L^H factorization.
inline CMat cholesky_solve(const CMat& b, const CMat& r) {
  if (b.rows != b.cols || b.rows != r.rows)
    throw std::invalid_argument("cholesky_solve: dimension mismatch");
  const std::size_t n = b.rows;
  CMat l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = b(j, j).real();
    for (std::size_t k = 0; k < j; ++k) d -= std::norm(l(j, k));
    if (!(d > 0.0)) throw numeric_error("cholesky_solve: matrix not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      cplx s = b(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * std::conj(l(j, k));
      l(i, j) = s / l(j, j).real();
    }
  }
  CMat x = r;
  // forward: L Y = R
  for (std::size_t j = 0; j < x.cols; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      cplx s = x(i, j);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, j);
      x(i, j) = s / l(i, i).real();
    }
  // backward: L^H X = Y
  for (std::size_t j = 0; j < x.cols; ++j)
    for (std::size_t ii = n; ii-- > 0;) {
      cplx s = x(ii, j);
      for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(l(k, ii)) * x(k, j);
      x(ii, j) = s / l(ii, ii).real();
    }
  return x;
}

// Eigenvalues of a Hermitian matrix, ascending. Uses the real-symmetric
// embedding [[X, -Y], [Y, X]] of B = X + iY, whose spectrum is that of B
// with every eigenvalue doubled, then cyclic Jacobi sweeps.
inline std::vector<double> hermitian_eigenvalues(const CMat& b) {
  if (b.rows != b.cols) throw std::invalid_argument("hermitian_eigenvalues: not square");
  const std::size_t m = b.rows;
  const std::size_t n = 2 * m;
  std::vector<double> s(n * n, 0.0);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return s[i * n + j]; };
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      at(i, j) = b(i, j).real();
      at(i + m, j + m) = b(i, j).real();
      at(i, j + m) = -b(i, j).imag();
      at(i + m, j) = b(i, j).imag();
    }
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    if (off < 1e-30 * double(n) * double(n)) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - sn * akq;
          at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - sn * aqk;
          at(q, k) = sn * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  // embedding doubles multiplicities; keep one copy of each pair
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = 0.5 * (eig[2 * i] + eig[2 * i + 1]);
  return out;
}

}  // namespace arraysep
