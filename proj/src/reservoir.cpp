#include "stormrtc/reservoir.hpp"

#include "stormrtc/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stormrtc {

StageCurve::StageCurve(std::vector<std::pair<double, double>> depth_area, std::vector<double> segment_porosity)
    : points_(std::move(depth_area)), eta_(std::move(segment_porosity))
{
    if (points_.size() < 2)
        throw InvalidInput("stage curve needs at least two breakpoints");
    if (points_.front().first != 0.0)
        throw InvalidInput("stage curve must start at depth 0");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (!(points_[i].second > 0.0))
            throw InvalidInput("stage curve areas must be positive");
        if (i > 0 && !(points_[i].first > points_[i - 1].first))
            throw InvalidInput("stage curve depths must be strictly increasing");
    }
    const std::size_t nseg = points_.size() - 1;
    if (eta_.empty())
        eta_.assign(nseg, 1.0);
    if (eta_.size() != nseg)
        throw InvalidInput("stage curve needs one porosity per segment");
    for (double e : eta_)
        if (!(e > 0.0 && e <= 1.0))
            throw InvalidInput("porosity must lie in (0, 1]");

    cumvol_.assign(points_.size(), 0.0);
    for (std::size_t i = 0; i < nseg; ++i) {
        const double d = points_[i + 1].first - points_[i].first;
        slope_.push_back((points_[i + 1].second - points_[i].second) / d);
        cumvol_[i + 1] = cumvol_[i] + eta_[i] * 0.5 * (points_[i].second + points_[i + 1].second) * d;
    }
}

StageCurve StageCurve::reference_pond()
{
    return StageCurve({{0.0, 50.0}, {0.9, 2600.0}, {1.9, 62500.0}, {4.4, 67700.0}, {6.9, 72900.0}});
}

std::size_t StageCurve::segment(double h) const
{
    if (!(h >= 0.0))
        throw InvalidInput("negative depth " + std::to_string(h) + " m on the stage curve");
    const auto it = std::upper_bound(points_.begin(), points_.end(), h,
                                     [](double v, const auto& p) { return v < p.first; });
    const auto idx = static_cast<std::size_t>(it - points_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, slope_.size() - 1);
}

double StageCurve::area(double h) const
{
    const auto s = segment(h);
    const double a = points_[s].second + slope_[s] * (h - points_[s].first);
    if (!(a > 0.0))
        throw InvalidInput("stage curve extrapolates to a non-positive area at depth " + std::to_string(h));
    return a;
}

double StageCurve::porosity(double h) const
{
    return eta_[segment(h)];
}

double StageCurve::volume(double h) const
{
    const auto s = segment(h);
    const double d = h - points_[s].first;
    return cumvol_[s] + eta_[s] * (points_[s].second * d + 0.5 * slope_[s] * d * d);
}

double StageCurve::depth_for_volume(double v) const
{
    if (!(v >= 0.0))
        throw InvalidInput("negative storage volume " + std::to_string(v) + " m3");
    const auto it = std::upper_bound(cumvol_.begin(), cumvol_.end(), v);
    auto s = static_cast<std::size_t>(it - cumvol_.begin());
    s = std::min(s == 0 ? 0 : s - 1, slope_.size() - 1);
    // eta (a0 x + k x^2 / 2) = w, solved in the cancellation-free form.
    const double w = (v - cumvol_[s]) / eta_[s];
    const double a0 = points_[s].second;
    const double disc = a0 * a0 + 2.0 * slope_[s] * w;
    if (disc < 0.0)
        throw InvalidInput("volume " + std::to_string(v) + " m3 exceeds the extrapolated stage curve");
    return points_[s].first + 2.0 * w / (a0 + std::sqrt(disc));
}

OutletDevices OutletDevices::uncontrolled_spillway()
{
    OutletDevices d;
    d.k_s = 18.9;
    return d;
}

void OutletDevices::validate() const
{
    if (!(k_o >= 0.0) || !(k_s >= 0.0))
        throw InvalidInput("device coefficients k_o and k_s must be non-negative");
    if (!(alpha_v > 0.0) || !(alpha_s > 0.0))
        throw InvalidInput("device exponents must be positive");
    if (!(d_h >= 0.0))
        throw InvalidInput("orifice hydraulic diameter must be non-negative");
    if (!(0.0 <= h0_orifice && h0_orifice < p && p < h_max))
        throw InvalidInput("device levels must satisfy 0 <= h0_orifice < p < h_max");
}

double OutletDevices::orifice_head(double h) const
{
    return std::max(h - orifice_cutoff(), 0.0);
}

double OutletDevices::spillway_head(double h) const
{
    return std::max(h - p, 0.0);
}

double orifice_outflow(double h, double u_v, const OutletDevices& dev)
{
    const double head = dev.orifice_head(h);
    return head > 0.0 ? u_v * dev.k_o * std::pow(head, dev.alpha_v) : 0.0;
}

double spillway_outflow(double h, double u_s, const OutletDevices& dev)
{
    const double head = dev.spillway_head(h);
    return head > 0.0 ? u_s * dev.k_s * std::pow(head, dev.alpha_s) : 0.0;
}

double outflow(double h, double u_v, double u_s, const OutletDevices& dev)
{
    return orifice_outflow(h, u_v, dev) + spillway_outflow(h, u_s, dev);
}

OutflowJacobian outflow_jacobian(double h, double u_v, double u_s, const OutletDevices& dev)
{
    OutflowJacobian j;
    const double hv = dev.orifice_head(h);
    const double hs = dev.spillway_head(h);
    if (hv > 0.0) {
        j.alpha += dev.alpha_v * u_v * dev.k_o * std::pow(hv, dev.alpha_v - 1.0);
        j.beta = dev.k_o * std::pow(hv, dev.alpha_v);
    }
    if (hs > 0.0) {
        j.alpha += dev.alpha_s * u_s * dev.k_s * std::pow(hs, dev.alpha_s - 1.0);
        j.gamma = dev.k_s * std::pow(hs, dev.alpha_s);
    }
    return j;
}

LinearizedPlant linearize(double h_star, double u_v_star, double u_s_star, const OutletDevices& dev,
                          const StageCurve& curve, double dt, double q_in)
{
    if (!(u_v_star >= 0.0 && u_v_star <= 1.0 && u_s_star >= 0.0 && u_s_star <= 1.0))
        throw InvalidInput("operating-point openness must lie in [0, 1]");
    if (!(dt > 0.0))
        throw InvalidInput("linearization step must be positive");
    const auto j = outflow_jacobian(h_star, u_v_star, u_s_star, dev);
    const double storage = curve.area(h_star) * curve.porosity(h_star);
    const double g = dt / storage;

    LinearizedPlant p;
    p.h_star = h_star;
    p.u_v_star = u_v_star;
    p.u_s_star = u_s_star;
    p.C = j.alpha;
    p.D_v = j.beta;
    p.D_s = j.gamma;
    p.epsilon = outflow(h_star, u_v_star, u_s_star, dev) - j.alpha * h_star - j.beta * u_v_star - j.gamma * u_s_star;
    p.A = 1.0 - g * j.alpha;
    p.B_v = -g * j.beta;
    p.B_s = -g * j.gamma;
    p.phi = g * (q_in - p.epsilon);
    return p;
}

ReservoirStep step_reservoir(ReservoirState& state, double q_in, double dt, const OutletDevices& dev,
                             const StageCurve& curve, const PondForcing& pond)
{
    if (!(dt > 0.0))
        throw InvalidInput("reservoir step must be positive");
    if (!(q_in >= 0.0))
        throw InvalidInput("reservoir inflow must be non-negative");
    ReservoirStep r;
    const double v0 = curve.volume(state.h);
    const double a0 = curve.area(state.h);

    r.rain_volume = std::max(pond.i_p, 0.0) * a0 * dt;
    const double wet = v0 + q_in * dt + r.rain_volume;
    r.evap_volume = std::min(std::max(pond.e_p, 0.0) * a0 * dt, wet);
    const double avail = wet - r.evap_volume;

    double q_or = orifice_outflow(state.h, state.u_v, dev);
    double q_sp = spillway_outflow(state.h, state.u_s, dev);
    const double q_dev = q_or + q_sp;
    if (q_dev > 0.0) {
        double cutoff = dev.h_max;
        if (q_or > 0.0)
            cutoff = std::min(cutoff, dev.orifice_cutoff());
        if (q_sp > 0.0)
            cutoff = std::min(cutoff, dev.p);
        const double floor = std::min(curve.volume(cutoff), avail);
        const double allowed = (avail - floor) / dt;
        if (q_dev > allowed) {
            const double scale = allowed / q_dev;
            q_or *= scale;
            q_sp *= scale;
        }
    }

    double v1 = avail - (q_or + q_sp) * dt;
    const double vmax = curve.volume(dev.h_max);
    if (v1 > vmax) {
        r.q_overtop = (v1 - vmax) / dt;
        r.overtopped = true;
        v1 = vmax;
    }
    v1 = std::max(v1, 0.0);

    state.h = curve.depth_for_volume(v1);
    r.q_orifice = q_or;
    r.q_out = q_or + q_sp + r.q_overtop;
    r.extrapolated = curve.extrapolated(state.h);
    return r;
}

} // namespace stormrtc
