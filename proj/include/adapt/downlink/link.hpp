#pragma once

#include <adapt/downlink/wire.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <utility>
#include <vector>

namespace adapt::downlink {

struct BlackoutWindow {
    double start_s = 0.0;
    double end_s = 0.0;
};

/// Radio link model. A bandwidth of 0 means unlimited.
struct LinkProfile {
    double bandwidth_bps = 0.0;
    double latency_ms = 0.0;
    double drop_probability = 0.0;
    std::vector<BlackoutWindow> blackouts;
    std::uint64_t seed = 1;

    void validate() const {
        if (!(bandwidth_bps >= 0.0))
            throw ContractError("link bandwidth must be positive (or 0 for unlimited)");
        if (!(latency_ms >= 0.0))
            throw ContractError("link latency must be non-negative");
        if (!(drop_probability >= 0.0 && drop_probability <= 1.0))
            throw ContractError("drop probability must be in [0, 1]");
        auto w = blackouts;
        std::sort(w.begin(), w.end(), [](auto a, auto b) { return a.start_s < b.start_s; });
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (!(w[i].end_s > w[i].start_s))
                throw ContractError("blackout window must end after it starts");
            if (i && w[i].start_s < w[i - 1].end_s)
                throw ContractError("blackout windows overlap");
        }
    }

    [[nodiscard]] bool in_blackout(double t) const {
        for (const auto& w : blackouts)
            if (t >= w.start_s && t < w.end_s)
                return true;
        return false;
    }

    /// True when [a, b] touches any blackout window.
    [[nodiscard]] bool overlaps_blackout(double a, double b) const {
        for (const auto& w : blackouts)
            if (a < w.end_s && b >= w.start_s)
                return true;
        return false;
    }

    [[nodiscard]] static LinkProfile from_json(const nlohmann::json& j) {
        LinkProfile p;
        try {
            p.bandwidth_bps = j.value("bandwidth_bps", 0.0);
            p.latency_ms = j.value("latency_ms", 0.0);
            p.drop_probability = j.value("drop_probability", 0.0);
            p.seed = j.value("seed", std::uint64_t{1});
            if (j.contains("blackouts"))
                for (const auto& w : j.at("blackouts"))
                    p.blackouts.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("link profile: ") + e.what());
        }
        p.validate();
        return p;
    }

    [[nodiscard]] nlohmann::json to_json() const {
        nlohmann::json w = nlohmann::json::array();
        for (const auto& b : blackouts)
            w.push_back({b.start_s, b.end_s});
        return {{"bandwidth_bps", bandwidth_bps},
                {"latency_ms", latency_ms},
                {"drop_probability", drop_probability},
                {"blackouts", w},
                {"seed", seed}};
    }

    [[nodiscard]] static LinkProfile load(const std::string& path) {
        std::ifstream in(path);
        if (!in)
            throw IoError("cannot open link profile '" + path + "'");
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("link profile '" + path + "': " + e.what());
        }
    }
};

enum class DropReason : std::uint8_t { none, random, blackout };

struct Delivery {
    double sent_s = 0.0;    ///< offered to the link
    double arrive_s = 0.0;  ///< reception complete (meaningless when dropped)
    std::size_t bytes = 0;
    DropReason dropped = DropReason::none;
};

/// One direction of a radio link: a rate-limited FIFO (token bucket with no
/// burst allowance), constant propagation latency, independent random frame
/// loss, and total loss for frames on air during a blackout.
class LinkSim {
public:
    explicit LinkSim(LinkProfile p) : profile_(std::move(p)), rng_(profile_.seed) { profile_.validate(); }

    Delivery transmit(std::size_t bytes, double t) {
        Delivery d;
        d.sent_s = t;
        d.bytes = bytes;
        const double start = std::max(t, busy_until_);
        const double air = profile_.bandwidth_bps > 0 ? static_cast<double>(bytes) * 8.0 / profile_.bandwidth_bps : 0.0;
        busy_until_ = start + air;
        d.arrive_s = busy_until_ + profile_.latency_ms * 1e-3;
        const bool lost = std::bernoulli_distribution(profile_.drop_probability)(rng_);
        if (profile_.overlaps_blackout(start, busy_until_))
            d.dropped = DropReason::blackout;
        else if (lost)
            d.dropped = DropReason::random;
        return d;
    }

    /// Time at which the transmitter frees up.
    [[nodiscard]] double busy_until() const { return busy_until_; }
    [[nodiscard]] const LinkProfile& profile() const { return profile_; }

private:
    LinkProfile profile_;
    std::mt19937_64 rng_;
    double busy_until_ = -std::numeric_limits<double>::infinity();
};

/// Runs a whole (time, frame size) stream through a fresh link.
[[nodiscard]] inline std::vector<Delivery> simulate_link(const LinkProfile& profile,
                                                         const std::vector<std::pair<double, std::size_t>>& stream) {
    LinkSim link(profile);
    std::vector<Delivery> out;
    out.reserve(stream.size());
    for (const auto& [t, bytes] : stream)
        out.push_back(link.transmit(bytes, t));
    return out;
}

} // namespace adapt::downlink
