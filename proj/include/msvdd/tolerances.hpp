#pragma once

namespace msvdd::tol {

inline constexpr double kFeasibility = 1e-7;
inline constexpr double kDualityGap = 1e-8;
inline constexpr double kObjective = 1e-6;
// Simplex normalization check on caller-provided weights.
inline constexpr double kSimplexSum = 1e-8;
// Negative squared distances above -kDistanceClamp are rounding noise.
inline constexpr double kDistanceClamp = 1e-9;
// Classification threshold on the anomaly score.
inline constexpr double kBoundary = 1e-9;
inline constexpr double kBigM = 1e-6;

}  // namespace msvdd::tol
