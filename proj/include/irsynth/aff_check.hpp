#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "irsynth/aff.hpp"
#include "irsynth/check.hpp"

namespace irsynth {

struct TensorShape {
  int channels = 1;
  int height = 8;
  int width = 8;
};

/// Parses "CxHxW[,CxHxW...]".
std::vector<TensorShape> parse_shapes(const std::string& spec);

inline constexpr double kGradCheckStep = 1e-5;
inline constexpr double kGradCheckTolerance = 1e-4;

/// Central differences of a scalar function of x, one coordinate at a time.
std::vector<double> central_difference(const std::function<double(std::span<const double>)>& fn,
                                       std::span<const double> x, double step = kGradCheckStep);

/// ||a - b|| / max(||a||, ||b||); 0 when both vanish.
double relative_error(std::span<const double> a, std::span<const double> b);

/// Gradient and invariant checks of the attention and Soft-IoU kernels
/// on random instances of each shape.
std::vector<CheckResult> run_aff_checks(std::uint64_t seed, const std::vector<TensorShape>& shapes);

}  // namespace irsynth
