#include "stormrtc/indicators.hpp"

#include "stormrtc/error.hpp"

#include <algorithm>
#include <functional>

namespace stormrtc {

double treated_volume(std::span<const double> q, const std::vector<bool>& eligible, double dt)
{
    if (q.size() != eligible.size())
        throw InvalidInput("treated volume: series and mask differ in length");
    double v = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i)
        if (eligible[i])
            v += q[i] * dt;
    return v;
}

std::optional<double> average_detention_time(std::span<const double> q, std::span<const double> detention_s,
                                             const std::vector<bool>& eligible, double dt)
{
    if (q.size() != detention_s.size() || q.size() != eligible.size())
        throw InvalidInput("detention time: series differ in length");
    double v = 0.0, weighted = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
        if (!eligible[i])
            continue;
        v += q[i] * dt;
        weighted += q[i] * detention_s[i] * dt;
    }
    if (!(v > 0.0))
        return std::nullopt;
    return weighted / v;
}

std::vector<std::pair<double, double>> duration_curve(std::span<const double> series)
{
    if (series.empty())
        throw InvalidInput("duration curve of an empty series");
    std::vector<double> v(series.begin(), series.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    const double denom = static_cast<double>(v.size() + 1);
    std::vector<std::pair<double, double>> out;
    out.reserve(v.size());
    for (std::size_t r = 0; r < v.size(); ++r)
        out.emplace_back(static_cast<double>(r + 1) / denom, v[r]);
    return out;
}

double peak_reduction_pct(double peak_in, double peak_out)
{
    if (!(peak_in > 0.0))
        return 0.0;
    return std::clamp((1.0 - peak_out / peak_in) * 100.0, 0.0, 100.0);
}

double time_above(std::span<const double> series, double threshold, double dt)
{
    double t = 0.0;
    for (double v : series)
        if (v > threshold)
            t += dt;
    return t;
}

} // namespace stormrtc
