#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace stormrtc {

/// Sum of q * dt over eligible steps (m3).
double treated_volume(std::span<const double> q_orifice, const std::vector<bool>& eligible, double dt);

/// Volume-weighted mean detention time (s); absent when nothing eligible was released.
std::optional<double> average_detention_time(std::span<const double> q_orifice, std::span<const double> detention_s,
                                             const std::vector<bool>& eligible, double dt);

/// (exceedance probability, value) with values descending and p = r / (N + 1).
std::vector<std::pair<double, double>> duration_curve(std::span<const double> series);

/// (1 - peak_out / peak_in) * 100 clamped to [0, 100]; 0 when there is no inflow.
double peak_reduction_pct(double peak_in, double peak_out);

/// Total time (s) with the series strictly above the threshold.
double time_above(std::span<const double> series, double threshold, double dt);

} // namespace stormrtc
