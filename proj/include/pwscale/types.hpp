#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace pwscale {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data or configuration (CLI exit code 2).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Argument outside an operation's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

using MatrixXb = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// n x n matrix of pairwise win counts; counts(i, j) is the number of
/// times condition i was selected over condition j. Diagonal is zero.
struct CountMatrix {
  Eigen::MatrixXi counts;

  CountMatrix() = default;
  explicit CountMatrix(Eigen::MatrixXi c) : counts(std::move(c)) { validate(); }

  static CountMatrix zero(int n) {
    CountMatrix m;
    m.counts = Eigen::MatrixXi::Zero(n, n);
    return m;
  }

  int size() const { return static_cast<int>(counts.rows()); }

  /// Total trials for the pair (i, j), the paper's n_ij.
  int pair_total(int i, int j) const { return counts(i, j) + counts(j, i); }

  void validate() const {
    if (counts.rows() != counts.cols())
      throw DomainError("count matrix must be square");
    for (int i = 0; i < counts.rows(); ++i) {
      if (counts(i, i) != 0)
        throw DomainError("count matrix diagonal must be zero");
      for (int j = 0; j < counts.cols(); ++j)
        if (counts(i, j) < 0)
          throw DomainError("count matrix entries must be non-negative");
    }
  }
};

}  // namespace pwscale
