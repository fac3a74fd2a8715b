#pragma once

#include <adapt/downlink/session.hpp>
#include <adapt/geo/area.hpp>
#include <adapt/geo/io.hpp>
#include <adapt/station/events.hpp>
#include <adapt/station/store.hpp>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace adapt::station {

using nlohmann::json;
namespace dl = downlink;

inline constexpr std::uint32_t kMinExposureUs = 50;
inline constexpr std::uint32_t kMaxExposureUs = 20000;

struct StationConfig {
    fs::path root = "store";
    std::string mission_id = "mission";
    bool fsync = true;
    bool read_only = false;
    double heartbeat_s = 1.0;
    double command_timeout_s = 2.0;
    double command_backoff = 2.0;
    double command_max_backoff_s = 30.0;
    double command_give_up_s = 120.0;
    double link_down_after_s = 3.0;
    double keyframe_hz = 2.0;
    double ground_alt_m = 0.0; ///< altitude given to decoded polygon vertices
};

enum class CommandState { pending, acked, rejected, timeout };

[[nodiscard]] inline std::string to_string(CommandState s) {
    switch (s) {
    case CommandState::pending: return "pending";
    case CommandState::acked: return "acked";
    case CommandState::rejected: return "rejected";
    case CommandState::timeout: return "timeout";
    }
    return "?";
}

struct CommandStatus {
    std::uint32_t id = 0;
    std::uint32_t value = 0;
    CommandState state = CommandState::pending;
    double created_s = 0.0;
    double last_sent_s = -1.0;
    double next_send_s = 0.0;
    double backoff_s = 0.0;
    int attempts = 0;
    std::optional<std::uint32_t> applied_value;
    std::optional<double> rtt_s;
};

struct AnalyticsEntry {
    std::uint32_t seq = 0;
    std::uint64_t t_gps_ns = 0;
    std::size_t frame_bytes = 0;
    dl::AnalyticsPayload meta; ///< geo stream emptied once decoded
    geo::GeoPolygonSet set;
    bool valid = true;
    std::string error;
};

struct LinkStats {
    std::optional<double> last_heard_s;
    std::array<std::uint64_t, dl::kMsgTypeCount + 1> frames{};
    std::array<std::uint64_t, dl::kMsgTypeCount + 1> duplicates{};
    std::array<std::int64_t, dl::kMsgTypeCount + 1> max_seq{};
    std::uint64_t crc_errors = 0;
    std::uint64_t framing_errors = 0;
    std::uint64_t bytes_skipped = 0;
    std::uint64_t malformed = 0;
    std::uint64_t store_failures = 0;
    std::uint64_t outages = 0;
    std::optional<double> rtt_s;

    LinkStats() { max_seq.fill(-1); }

    /// Fraction of sequence numbers never seen, per type. For lossy-latest
    /// streams this includes frames superseded onboard, not just link loss.
    [[nodiscard]] double gap_fraction(MsgType t) const {
        const auto i = static_cast<std::size_t>(t);
        const auto expected = max_seq[i] + 1;
        return expected <= 0 ? 0.0
                             : 1.0 - static_cast<double>(frames[i] - duplicates[i]) / static_cast<double>(expected);
    }
};

struct MissionState {
    std::optional<geo::TimestampedPose> latest_pose;
    std::map<long long, geo::TimestampedPose> track; ///< decimated keyframes, keyed by time bucket
    std::map<std::uint32_t, AnalyticsEntry> analytics; ///< by analytics seq
    std::optional<dl::HistogramPayload> histogram;
    std::optional<dl::SharpnessPayload> sharpness;
    std::optional<dl::ThumbnailPayload> thumbnail;
    std::map<std::string, std::string> diagnostics;
    std::map<std::uint32_t, CommandStatus> commands;
    LinkStats link;
};

// ---- JSON views used by the API and the event stream ----

[[nodiscard]] inline json pose_json(const geo::TimestampedPose& p) {
    return {{"t", p.t},
            {"lat", p.position.lat_deg},
            {"lon", p.position.lon_deg},
            {"alt", p.position.alt_m},
            {"q", {p.attitude.w(), p.attitude.x(), p.attitude.y(), p.attitude.z()}},
            {"status", p.status}};
}

[[nodiscard]] inline json analytics_json(const AnalyticsEntry& e) {
    json j{{"seq", e.seq},
           {"image_id", e.meta.image_id},
           {"t_gps", dl::from_ns(e.t_gps_ns)},
           {"bytes", e.frame_bytes},
           {"tolerance_px", e.meta.tolerance_px},
           {"pixel_iou", e.meta.pixel_iou},
           {"horizon_clipped", e.meta.horizon_clipped},
           {"above_horizon", e.meta.above_horizon},
           {"valid", e.valid}};
    if (!e.valid)
        j["error"] = e.error;
    j["features"] = geo::to_geojson_features(e.set);
    j["footprint"] = geo::detail::ring_coordinates(e.set.footprint);
    return j;
}

[[nodiscard]] inline json histogram_json(const dl::HistogramPayload& h) {
    return {{"image_id", h.image_id}, {"bins", h.bins}};
}

[[nodiscard]] inline json sharpness_json(const dl::SharpnessPayload& s) {
    return {{"image_id", s.image_id},           {"global", s.report.global_score}, {"tile", s.report.tile},
            {"tiles_x", s.report.tiles_x},      {"tiles_y", s.report.tiles_y},     {"scores", s.report.tile_scores},
            {"exposure_us", s.report.exposure_us}};
}

[[nodiscard]] inline json thumbnail_json(const dl::ThumbnailPayload& t) {
    return {{"image_id", t.image_id},
            {"width", t.width},
            {"height", t.height},
            {"jpeg_base64", httplib::detail::base64_encode(std::string(t.jpeg.begin(), t.jpeg.end()))}};
}

[[nodiscard]] inline json command_json(const CommandStatus& c) {
    json j{{"command_id", c.id},
           {"kind", "set_max_exposure_us"},
           {"value", c.value},
           {"state", to_string(c.state)},
           {"attempts", c.attempts},
           {"created_s", c.created_s}};
    if (c.applied_value)
        j["applied_value"] = *c.applied_value;
    if (c.rtt_s)
        j["rtt_s"] = *c.rtt_s;
    return j;
}

[[nodiscard]] inline json link_json(const LinkStats& l, double now, double down_after) {
    json frames = json::object(), gaps = json::object();
    for (int t = 1; t <= dl::kMsgTypeCount; ++t) {
        const auto name = std::string(dl::to_string(static_cast<MsgType>(t)));
        frames[name] = l.frames[t];
        gaps[name] = l.gap_fraction(static_cast<MsgType>(t));
    }
    json j{{"frames", frames},
           {"seq_gap_fraction", gaps},
           {"duplicates", std::accumulate(l.duplicates.begin(), l.duplicates.end(), std::uint64_t{0})},
           {"crc_errors", l.crc_errors},
           {"framing_errors", l.framing_errors},
           {"malformed", l.malformed},
           {"store_failures", l.store_failures},
           {"outages", l.outages}};
    if (l.last_heard_s) {
        j["last_heard_s"] = *l.last_heard_s;
        j["age_s"] = now - *l.last_heard_s;
        j["up"] = now - *l.last_heard_s < down_after;
    } else {
        j["last_heard_s"] = nullptr;
        j["up"] = false;
    }
    j["rtt_s"] = l.rtt_s ? json(*l.rtt_s) : json(nullptr);
    return j;
}

/// The ground station: persists the downlink, keeps live mission state,
/// publishes updates, acknowledges analytics once durable, and runs the
/// exposure command channel.
class Station : public dl::GroundEndpoint {
public:
    explicit Station(StationConfig cfg)
        : cfg_(std::move(cfg)), store_(cfg_.root / cfg_.mission_id, cfg_.fsync, cfg_.read_only) {
        rebuild();
    }

    std::vector<Frame> on_frame(const Frame& f, double now) override {
        std::lock_guard lock(mu_);
        return handle(f, now);
    }

    std::vector<Frame> tick(double now) override {
        std::lock_guard lock(mu_);
        std::vector<Frame> out;
        if (now >= next_heartbeat_s_) {
            next_heartbeat_s_ = now + cfg_.heartbeat_s;
            out.push_back({MsgType::diagnostics, heartbeat_seq_++, dl::to_ns(now),
                           dl::encode_diagnostics({{"heartbeat", "station"}})});
            bus_.publish("link", link_json(state_.link, now, cfg_.link_down_after_s));
        }
        for (auto& [id, c] : state_.commands) {
            if (c.state != CommandState::pending)
                continue;
            if (now - c.created_s >= cfg_.command_give_up_s) {
                c.state = CommandState::timeout;
                bus_.publish("command", command_json(c));
                continue;
            }
            if (now >= c.next_send_s) {
                out.push_back(command_frame(c));
                ++c.attempts;
                c.last_sent_s = now;
                c.next_send_s = now + c.backoff_s;
                c.backoff_s = std::min(c.backoff_s * cfg_.command_backoff, cfg_.command_max_backoff_s);
            }
        }
        return out;
    }

    /// Feeds raw downlink bytes (possibly corrupt or split anywhere).
    std::vector<Frame> ingest_bytes(std::span<const std::uint8_t> bytes, double now) {
        std::lock_guard lock(mu_);
        std::vector<Frame> replies;
        for (const auto& f : decoder_.feed(bytes))
            for (auto& r : handle(f, now))
                replies.push_back(std::move(r));
        const auto& c = decoder_.counters();
        state_.link.crc_errors = c.crc_errors;
        state_.link.framing_errors = c.framing_errors;
        state_.link.bytes_skipped = c.bytes_skipped;
        return replies;
    }

    /// Queues an exposure-limit update for the uplink; it goes out on the
    /// next tick. Out-of-range values are rejected here and never sent.
    std::uint32_t send_command(std::uint32_t exposure_us, double now) {
        if (exposure_us < kMinExposureUs || exposure_us > kMaxExposureUs)
            throw ContractError("max exposure must be within [" + std::to_string(kMinExposureUs) + ", " +
                                std::to_string(kMaxExposureUs) + "] us, got " + std::to_string(exposure_us));
        std::lock_guard lock(mu_);
        if (cfg_.read_only)
            throw ContractError("station is read-only");
        CommandStatus c;
        c.id = next_command_id_++;
        c.value = exposure_us;
        c.created_s = now;
        c.next_send_s = now;
        c.backoff_s = cfg_.command_timeout_s;
        std::ofstream log(store_.dir() / kCommandLog, std::ios::app);
        log << json{{"command_id", c.id}, {"value", c.value}, {"created_s", now}}.dump() << '\n';
        if (!log.flush())
            throw IoError("cannot record command in " + (store_.dir() / kCommandLog).string());
        state_.commands[c.id] = c;
        bus_.publish("command", command_json(c));
        return c.id;
    }

    [[nodiscard]] MissionState state() const {
        std::lock_guard lock(mu_);
        return state_;
    }

    [[nodiscard]] std::optional<CommandStatus> command(std::uint32_t id) const {
        std::lock_guard lock(mu_);
        const auto it = state_.commands.find(id);
        return it == state_.commands.end() ? std::nullopt : std::optional(it->second);
    }

    [[nodiscard]] std::size_t stored_analytics() const {
        std::lock_guard lock(mu_);
        return store_.stored_count();
    }

    /// Everything a freshly connected client needs before live events.
    [[nodiscard]] json snapshot(double now) const {
        std::lock_guard lock(mu_);
        json track = json::array();
        for (const auto& [k, p] : state_.track)
            track.push_back(pose_json(p));
        json analytics = json::array();
        for (const auto& [seq, e] : state_.analytics)
            analytics.push_back(analytics_json(e));
        json commands = json::array();
        for (const auto& [id, c] : state_.commands)
            commands.push_back(command_json(c));
        json j{{"mission_id", cfg_.mission_id},
               {"track", track},
               {"analytics", analytics},
               {"commands", commands},
               {"diagnostics", state_.diagnostics},
               {"link", link_json(state_.link, now, cfg_.link_down_after_s)},
               {"last_event_id", bus_.last_id()}};
        j["pose"] = state_.latest_pose ? pose_json(*state_.latest_pose) : json(nullptr);
        j["histogram"] = state_.histogram ? histogram_json(*state_.histogram) : json(nullptr);
        j["sharpness"] = state_.sharpness ? sharpness_json(*state_.sharpness) : json(nullptr);
        j["thumbnail"] = state_.thumbnail ? thumbnail_json(*state_.thumbnail) : json(nullptr);
        return j;
    }

    /// All stored analytics as one FeatureCollection, in sequence order.
    [[nodiscard]] json export_geojson() const {
        std::lock_guard lock(mu_);
        std::vector<geo::GeoPolygonSet> sets;
        for (const auto& [seq, e] : state_.analytics)
            sets.push_back(e.set);
        return geo::to_geojson(sets);
    }

    [[nodiscard]] std::vector<geo::GeoPolygonSet> polygon_sets() const {
        std::lock_guard lock(mu_);
        std::vector<geo::GeoPolygonSet> sets;
        for (const auto& [seq, e] : state_.analytics)
            sets.push_back(e.set);
        return sets;
    }

    /// Mission summary: coverage (union of image footprints), per-class
    /// union area, frame counts and link statistics.
    [[nodiscard]] json report(double now = 0.0) const {
        const auto sets = polygon_sets();
        std::lock_guard lock(mu_);
        std::size_t features = 0;
        std::set<std::uint64_t> images;
        std::vector<const geo::GeoRing*> rings;
        std::set<int> classes;
        for (const auto& s : sets) {
            images.insert(s.image_id);
            features += s.class_polygons.size();
            if (!s.footprint.empty())
                rings.push_back(&s.footprint);
            for (const auto& p : s.class_polygons) {
                rings.push_back(&p.outer);
                classes.insert(p.class_id);
            }
        }
        double coverage = 0.0;
        json class_area = json::object();
        if (!rings.empty()) {
            auto grid = geo::AreaGrid::enclosing(rings);
            for (const auto& s : sets)
                if (s.footprint.size() >= 4)
                    grid.paint(s.footprint);
            coverage = grid.area_m2();
            for (int c : classes) {
                auto g = grid.blank_like();
                for (const auto& s : sets)
                    for (const auto& p : s.class_polygons)
                        if (p.class_id == c)
                            g.paint(p);
                class_area[std::to_string(c)] = g.area_m2();
            }
        }
        return {{"mission_id", cfg_.mission_id},
                {"analytics_frames", store_.stored_count()},
                {"committed_frames", store_.committed().size()},
                {"images", images.size()},
                {"features", features},
                {"coverage_area_m2", coverage},
                {"class_area_m2", class_area},
                {"telemetry_keyframes", state_.track.size()},
                {"commands", state_.commands.size()},
                {"link", link_json(state_.link, now, cfg_.link_down_after_s)}};
    }

    [[nodiscard]] EventBus& events() { return bus_; }
    [[nodiscard]] const StationConfig& config() const { return cfg_; }
    [[nodiscard]] fs::path mission_dir() const { return store_.dir(); }

    /// For failure-injection tests: the next `n` durable writes fail.
    void inject_store_failures(int n) {
        std::lock_guard lock(mu_);
        store_.inject_write_failures(n);
    }

private:
    Frame command_frame(const CommandStatus& c) const {
        // A retransmitted command keeps its sequence number; the payload
        // deduplicates by command id.
        return {MsgType::command, c.id, 0,
                dl::encode_command({c.id, dl::CommandKind::set_max_exposure_us, c.value})};
    }

    bool seen_before(const Frame& f) {
        const auto i = static_cast<std::size_t>(f.type);
        ++state_.link.frames[i];
        state_.link.max_seq[i] = std::max<std::int64_t>(state_.link.max_seq[i], f.seq);
        if (!seen_[i].insert(f.seq).second) {
            ++state_.link.duplicates[i];
            return true;
        }
        return false;
    }

    std::vector<Frame> handle(const Frame& f, double now, bool replaying = false) {
        if (!replaying) {
            try {
                store_.capture(f);
            } catch (const IoError&) {
                ++state_.link.store_failures;
            }
            auto& heard = state_.link.last_heard_s;
            if (heard && now - *heard >= cfg_.link_down_after_s) {
                // Back from an outage: resend pending commands right away.
                ++state_.link.outages;
                for (auto& [id, c] : state_.commands)
                    if (c.state == CommandState::pending) {
                        c.next_send_s = now;
                        c.backoff_s = cfg_.command_timeout_s;
                    }
            }
            heard = now;
        }
        if (f.type == MsgType::analytics)
            return handle_analytics(f, replaying);
        const bool dup = seen_before(f);
        if (dup)
            return {};
        try {
            switch (f.type) {
            case MsgType::telemetry: add_pose(dl::decode_telemetry(f.payload), replaying); break;
            case MsgType::histogram: {
                auto h = dl::decode_histogram(f.payload);
                if (!replaying)
                    bus_.publish("histogram", histogram_json(h));
                state_.histogram = std::move(h);
                break;
            }
            case MsgType::sharpness: {
                auto s = dl::decode_sharpness(f.payload);
                if (!replaying)
                    bus_.publish("sharpness", sharpness_json(s));
                state_.sharpness = std::move(s);
                break;
            }
            case MsgType::thumbnail: {
                auto t = dl::decode_thumbnail(f.payload);
                if (!replaying)
                    bus_.publish("thumbnail", thumbnail_json(t));
                state_.thumbnail = std::move(t);
                break;
            }
            case MsgType::diagnostics: {
                json j = json::object();
                for (auto& [k, v] : dl::decode_diagnostics(f.payload)) {
                    j[k] = v;
                    state_.diagnostics[k] = std::move(v);
                }
                if (!replaying)
                    bus_.publish("diagnostics", j);
                break;
            }
            case MsgType::command_ack: {
                const auto ack = dl::decode_ack(f.payload);
                if (ack.acked_type != MsgType::command)
                    break;
                const auto it = state_.commands.find(ack.id);
                if (it == state_.commands.end() || it->second.state != CommandState::pending)
                    break;
                auto& c = it->second;
                c.state = ack.status == dl::AckStatus::ok ? CommandState::acked : CommandState::rejected;
                c.applied_value = ack.value;
                if (!replaying && c.last_sent_s >= 0) {
                    c.rtt_s = now - c.last_sent_s;
                    state_.link.rtt_s = c.rtt_s;
                }
                if (!replaying)
                    bus_.publish("command", command_json(c));
                break;
            }
            default: break; // commands travel up, not down
            }
        } catch (const ParseError&) {
            ++state_.link.malformed;
        }
        return {};
    }

    std::vector<Frame> handle_analytics(const Frame& f, bool replaying) {
        const auto i = static_cast<std::size_t>(MsgType::analytics);
        ++state_.link.frames[i];
        state_.link.max_seq[i] = std::max<std::int64_t>(state_.link.max_seq[i], f.seq);
        MissionStore::Put put;
        try {
            put = store_.put_analytics(f);
        } catch (const IoError&) {
            ++state_.link.store_failures;
            return {}; // not durable, so not acknowledged
        }
        if (put == MissionStore::Put::duplicate)
            ++state_.link.duplicates[i];
        else
            index(f, !replaying);
        return {Frame{MsgType::command_ack, ack_seq_++, f.t_gps_ns,
                      dl::encode_ack({MsgType::analytics, f.seq, dl::AckStatus::ok, 0})}};
    }

    void index(const Frame& f, bool publish) {
        AnalyticsEntry e;
        e.seq = f.seq;
        e.t_gps_ns = f.t_gps_ns;
        e.frame_bytes = f.wire_size();
        try {
            e.meta = dl::decode_analytics(f.payload);
            e.set = dl::decode_geo_set(e.meta.geo_stream, e.meta.image_id, cfg_.ground_alt_m);
            e.set.encoded_bytes = e.meta.geo_stream.size();
            e.set.horizon_clipped = e.meta.horizon_clipped;
            e.set.above_horizon = e.meta.above_horizon;
        } catch (const Error& ex) {
            e.valid = false;
            e.error = ex.what();
            ++state_.link.malformed;
        }
        e.meta.geo_stream.clear();
        auto [it, inserted] = state_.analytics.emplace(f.seq, std::move(e));
        if (publish)
            bus_.publish("analytics", analytics_json(it->second));
    }

    void add_pose(const geo::TimestampedPose& p, bool replaying) {
        const auto bucket = static_cast<long long>(std::floor(p.t * cfg_.keyframe_hz));
        auto [it, inserted] = state_.track.emplace(bucket, p);
        if (!inserted && p.t < it->second.t)
            it->second = p; // an older sample arriving late becomes the keyframe
        if (!state_.latest_pose || p.t > state_.latest_pose->t) {
            state_.latest_pose = p;
            if (!replaying)
                bus_.publish("pose", pose_json(p));
        }
    }

    /// Index from the store, poses and image-quality state from the capture.
    void rebuild() {
        for (const auto& f : store_.committed())
            index(f, false);
        for (const auto& [seq, f] : store_.pending())
            index(f, false);
        // Commands from an earlier session come back as timed out unless the
        // capture holds their acknowledgement.
        std::ifstream cmds(store_.dir() / kCommandLog);
        for (std::string line; std::getline(cmds, line);) {
            try {
                const auto j = json::parse(line);
                CommandStatus c;
                c.id = j.at("command_id").get<std::uint32_t>();
                c.value = j.at("value").get<std::uint32_t>();
                c.created_s = j.value("created_s", 0.0);
                c.state = CommandState::pending;
                state_.commands[c.id] = c;
                next_command_id_ = std::max(next_command_id_, c.id + 1);
            } catch (const json::exception&) {
                // a torn last line from a crash
            }
        }
        const auto capture = dl::read_spool((store_.dir() / kCaptureLog).string());
        for (const auto& f : capture.frames) {
            if (f.type == MsgType::analytics || f.type == MsgType::command)
                continue;
            handle(f, 0.0, true);
            if (f.type == MsgType::command_ack) {
                // Command ids must not repeat after a restart: the payload
                // deduplicates by id.
                try {
                    const auto ack = dl::decode_ack(f.payload);
                    if (ack.acked_type == MsgType::command)
                        next_command_id_ = std::max(next_command_id_, ack.id + 1);
                } catch (const ParseError&) {
                }
            }
        }
        for (auto& [id, c] : state_.commands)
            if (c.state == CommandState::pending)
                c.state = CommandState::timeout;
        state_.link = LinkStats{};
        for (auto& s : seen_)
            s.clear();
    }

    StationConfig cfg_;
    mutable std::mutex mu_;
    MissionStore store_;
    MissionState state_;
    EventBus bus_;
    dl::StreamDecoder decoder_;
    std::array<std::set<std::uint32_t>, dl::kMsgTypeCount + 1> seen_;
    double next_heartbeat_s_ = 0.0;
    std::uint32_t heartbeat_seq_ = 0;
    std::uint32_t ack_seq_ = 0;
    std::uint32_t next_command_id_ = 1;
};

} // namespace adapt::station
