#pragma once

#include "barlowwalk/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace barlowwalk::nn {

/// Builds a scalar loss on the given tape from the given parameters.
template <typename Scalar>
using LossBuilder = std::function<Var<Scalar>(Tape<Scalar>&, ParamSet<Scalar>&)>;

struct FdEntryReport {
  std::string name;
  double max_rel_error = 0.0;
  double max_abs_analytic = 0.0;
};

struct FdReport {
  std::vector<FdEntryReport> entries;
  double max_rel_error = 0.0;
  bool finite = true;
  bool passed = false;
  std::string diagnostic;
};

/// Relative error with a floor on the denominator so that gradient
/// components at round-off level do not dominate the report.
inline double fd_relative_error(double analytic, double numeric, double floor = 1e-5) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

/// Compares analytic gradients against central differences with step h
/// for every parameter value. Parameter values are restored afterwards.
template <typename Scalar>
FdReport fd_check(const LossBuilder<Scalar>& loss_fn, ParamSet<Scalar>& params, double h,
                  double tol, double floor = 1e-5) {
  if (!(h > 0)) throw ConfigError("fd_check: step h must be positive");
  FdReport report;

  params.zero_grad();
  double base = 0.0;
  {
    Tape<Scalar> tape;
    auto loss = loss_fn(tape, params);
    base = static_cast<double>(loss.value()(0, 0));
    if (!std::isfinite(base)) {
      report.finite = false;
      report.diagnostic = "loss is not finite at the base point";
      return report;
    }
    tape.backward(loss);
  }

  auto eval = [&]() {
    Tape<Scalar> tape;
    return static_cast<double>(loss_fn(tape, params).value()(0, 0));
  };

  for (auto& e : params.entries()) {
    FdEntryReport er;
    er.name = e.name;
    for (Eigen::Index i = 0; i < e.values.size(); ++i) {
      const Scalar orig = e.values(i);
      e.values(i) = orig + static_cast<Scalar>(h);
      const double up = eval();
      e.values(i) = orig - static_cast<Scalar>(h);
      const double down = eval();
      e.values(i) = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        report.finite = false;
        std::ostringstream os;
        os << "non-finite loss while perturbing " << e.name << "[" << i << "]";
        report.diagnostic = os.str();
        return report;
      }
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = static_cast<double>(e.gradient(i));
      er.max_rel_error = std::max(er.max_rel_error, fd_relative_error(analytic, numeric, floor));
      er.max_abs_analytic = std::max(er.max_abs_analytic, std::abs(analytic));
    }
    report.max_rel_error = std::max(report.max_rel_error, er.max_rel_error);
    report.entries.push_back(er);
  }
  report.passed = report.finite && report.max_rel_error < tol;
  if (!report.passed && report.diagnostic.empty()) {
    auto worst = std::max_element(
        report.entries.begin(), report.entries.end(),
        [](const auto& a, const auto& b) { return a.max_rel_error < b.max_rel_error; });
    std::ostringstream os;
    os << "worst entry " << worst->name << " rel. error " << worst->max_rel_error;
    report.diagnostic = os.str();
  }
  return report;
}

}  // namespace barlowwalk::nn
