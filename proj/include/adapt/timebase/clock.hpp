#pragma once

#include <adapt/error.hpp>
#include <adapt/geo/pose.hpp>
#include <adapt/util/csv.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <vector>

namespace adapt::timebase {

/// Affine model of a free-running clock against GPS time:
///   local = gps + offset_s + drift_ppm * 1e-6 * (gps - epoch_gps_s)
/// plus zero-mean Gaussian read jitter of jitter_sigma_s.
struct ClockModel {
    double offset_s = 0.0;
    double drift_ppm = 0.0;
    double jitter_sigma_s = 0.0;
    double epoch_gps_s = 0.0;
    double residual_rms_s = 0.0; ///< fit residual when produced by discipline_clock

    void validate() const {
        if (!(std::abs(drift_ppm) < 100.0))
            throw DomainError("clock drift must be below 100 ppm");
        if (!(jitter_sigma_s >= 0.0))
            throw DomainError("clock jitter must be non-negative");
    }

    /// Noise-free local clock reading at a GPS instant.
    [[nodiscard]] double local_from_gps(double gps) const {
        return gps + offset_s + drift_ppm * 1e-6 * (gps - epoch_gps_s);
    }

    [[nodiscard]] double gps_from_local(double local) const {
        const double d = drift_ppm * 1e-6;
        return (local - offset_s + d * epoch_gps_s) / (1.0 + d);
    }
};

struct PpsEvent {
    std::int64_t true_gps_s = 0;
    double observed_local_s = 0.0;
};

/// Pairs raw PPS edges (local clock readings) with integer GPS seconds. The
/// first edge is declared to be `first_gps_s`; every later edge takes the
/// nearest whole-second distance from it.
[[nodiscard]] inline std::vector<PpsEvent> associate_pps(std::span<const double> edges_local, std::int64_t first_gps_s) {
    std::vector<PpsEvent> out;
    out.reserve(edges_local.size());
    for (double e : edges_local) {
        const auto k = static_cast<std::int64_t>(std::llround(e - edges_local.front()));
        out.push_back({first_gps_s + k, e});
    }
    return out;
}

/// Least-squares offset and drift from PPS events. The epoch of the returned
/// model is the first event's GPS second.
[[nodiscard]] inline ClockModel discipline_clock(std::span<const PpsEvent> events) {
    if (events.size() < 2)
        throw InsufficientDataError("clock discipline needs at least two PPS events");
    const double epoch = static_cast<double>(events.front().true_gps_s);
    const double n = static_cast<double>(events.size());
    double mx = 0.0, my = 0.0;
    for (const auto& e : events) {
        mx += static_cast<double>(e.true_gps_s) - epoch;
        my += e.observed_local_s - static_cast<double>(e.true_gps_s);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (const auto& e : events) {
        const double x = static_cast<double>(e.true_gps_s) - epoch - mx;
        const double y = e.observed_local_s - static_cast<double>(e.true_gps_s) - my;
        sxx += x * x;
        sxy += x * y;
    }
    if (!(sxx > 0.0))
        throw InsufficientDataError("PPS events must span more than one GPS second");
    const double slope = sxy / sxx;
    ClockModel m;
    m.epoch_gps_s = epoch;
    m.drift_ppm = slope * 1e6;
    m.offset_s = my - slope * mx;
    double ss = 0.0;
    for (const auto& e : events) {
        const double gps = static_cast<double>(e.true_gps_s);
        const double r = e.observed_local_s - m.local_from_gps(gps);
        ss += r * r;
    }
    m.residual_rms_s = std::sqrt(ss / n);
    return m;
}

struct WholeSecondReport {
    double max_deviation_s = 0.0;
    std::vector<double> deviations_s;
    bool pass = true;
};

/// Distance of every timestamp from its nearest whole GPS second.
[[nodiscard]] inline WholeSecondReport validate_whole_second(std::span<const double> timestamps, double tol_s) {
    if (timestamps.empty())
        throw InsufficientDataError("no timestamps to validate");
    WholeSecondReport r;
    r.deviations_s.reserve(timestamps.size());
    for (double t : timestamps) {
        const double whole = std::floor(t);
        const double frac = t - whole;
        const double dev = std::min(frac, 1.0 - frac);
        r.deviations_s.push_back(dev);
        r.max_deviation_s = std::max(r.max_deviation_s, dev);
    }
    r.pass = r.max_deviation_s <= tol_s;
    return r;
}

/// Shifts every pose timestamp by `delta_s`.
[[nodiscard]] inline std::vector<geo::TimestampedPose> apply_time_offset(std::span<const geo::TimestampedPose> traj,
                                                                        double delta_s) {
    if (!std::isfinite(delta_s))
        throw DomainError("time offset must be finite");
    std::vector<geo::TimestampedPose> out(traj.begin(), traj.end());
    for (auto& p : out)
        p.t += delta_s;
    return out;
}

[[nodiscard]] inline geo::Trajectory apply_time_offset(const geo::Trajectory& traj, double delta_s) {
    return geo::Trajectory(apply_time_offset(traj.poses(), delta_s));
}

[[nodiscard]] inline std::vector<PpsEvent> load_pps_csv(const std::string& path) {
    const auto table = util::CsvTable::load(path);
    const auto ct = table.column("true_gps_s");
    const auto co = table.column("observed_local_s");
    std::vector<PpsEvent> out;
    for (const auto& row : table.rows()) {
        const double t = util::parse_double(row[ct], "true_gps_s");
        if (t != std::floor(t))
            throw ParseError("true_gps_s must be integral: " + row[ct]);
        out.push_back({static_cast<std::int64_t>(t), util::parse_double(row[co], "observed_local_s")});
    }
    return out;
}

} // namespace adapt::timebase
