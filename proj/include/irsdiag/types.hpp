#pragma once

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>

namespace irsdiag {

using Complex = std::complex<double>;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

constexpr double kInfSnr = std::numeric_limits<double>::infinity();

/// Guard for elementwise mask retrieval: channel entries below
/// guard * max|channel| are treated as non-informative.
constexpr double kDivisionGuard = 1e-6;

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

struct ConvergenceRecord {
  int iterations = 0;
  bool converged = true;
  double residual = 0.0;  // value of the stopping metric at exit
};

/// Outcome of one diagnosis: recovered mask, recovered channel component(s)
/// (one column per RX antenna), additive failure deviation, and bookkeeping.
struct DiagnosisResult {
  ComplexVector mask;
  ComplexMatrix channel;
  ComplexMatrix deviation;
  ConvergenceRecord convergence;
  double nmse = std::numeric_limits<double>::quiet_NaN();
  double solve_ms = 0.0;
};

}  // namespace irsdiag
