#pragma once

#include <adapt/downlink/link.hpp>
#include <adapt/downlink/payloads.hpp>
#include <adapt/downlink/scheduler.hpp>
#include <adapt/downlink/spool.hpp>

#include <algorithm>
#include <array>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <limits>
#include <cmath>
#include <string>
#include <vector>

namespace adapt::downlink {

struct SessionConfig {
    double tick_s = 0.01;
    double ack_timeout_s = 2.0;
    double backoff_factor = 2.0;
    double max_backoff_s = 30.0;
    double link_down_after_s = 3.0;      ///< silence on the uplink before the payload stops sending analytics
    std::size_t memory_bound_bytes = 4u << 20; ///< queued analytics kept in RAM before spilling
    std::size_t max_in_flight = 64;      ///< unacknowledged analytics frames
    std::string spool_path;              ///< empty: spill is impossible, everything stays in RAM
    double drain_limit_s = 120.0;        ///< extra time after the last emission to finish retransmissions
};

/// Analytics waiting to be sent: FIFO in RAM up to a byte bound, then in the
/// spool file. Once anything is on disk, later frames follow it there so
/// order is preserved.
class AnalyticsOutbox {
public:
    AnalyticsOutbox(std::size_t bound, std::string spool) : bound_(bound), spool_(std::move(spool)) {}

    /// Returns false when a spill was needed but the disk write failed (the
    /// frame is then kept in RAM regardless of the bound).
    bool push(Frame f) {
        const bool must_spill = spilled_ > 0 || mem_bytes_ + f.wire_size() > bound_;
        if (must_spill && !spool_.empty()) {
            try {
                append_frames(spool_, {f});
                ++spilled_;
                ++spill_writes_;
                return true;
            } catch (const IoError&) {
                spill_failed_ = true;
            }
        }
        mem_bytes_ += f.wire_size();
        mem_.push_back(std::move(f));
        return !(must_spill && !spool_.empty());
    }

    [[nodiscard]] bool empty() const { return mem_.empty() && spilled_ == 0; }
    [[nodiscard]] std::size_t size() const { return mem_.size() + spilled_; }

    std::optional<Frame> pop() {
        if (!mem_.empty()) {
            Frame f = std::move(mem_.front());
            mem_.pop_front();
            mem_bytes_ -= f.wire_size();
            return f;
        }
        if (spilled_ == 0)
            return std::nullopt;
        if (reload_.empty()) {
            auto rec = read_spool(spool_);
            reload_.assign(rec.frames.begin() + static_cast<std::ptrdiff_t>(consumed_), rec.frames.end());
            consumed_ = rec.frames.size();
        }
        Frame f = std::move(reload_.front());
        reload_.pop_front();
        if (--spilled_ == 0) {
            std::filesystem::remove(spool_);
            consumed_ = 0;
        }
        return f;
    }

    /// Everything still waiting, oldest first, without removing it.
    [[nodiscard]] std::vector<Frame> snapshot() const {
        std::vector<Frame> out(mem_.begin(), mem_.end());
        if (spilled_ > 0) {
            if (!reload_.empty())
                out.insert(out.end(), reload_.begin(), reload_.end());
            else {
                auto rec = read_spool(spool_);
                out.insert(out.end(), rec.frames.begin() + static_cast<std::ptrdiff_t>(consumed_), rec.frames.end());
            }
        }
        return out;
    }

    [[nodiscard]] std::size_t memory_bytes() const { return mem_bytes_; }
    [[nodiscard]] std::size_t spill_writes() const { return spill_writes_; }
    [[nodiscard]] bool spill_failed() const { return spill_failed_; }

private:
    std::size_t bound_;
    std::string spool_;
    std::deque<Frame> mem_;
    std::size_t mem_bytes_ = 0;
    std::size_t spilled_ = 0;     ///< frames in the spool not yet popped
    std::size_t consumed_ = 0;    ///< spool frames already loaded into reload_
    std::deque<Frame> reload_;
    std::size_t spill_writes_ = 0;
    bool spill_failed_ = false;
};

/// Onboard end of the downlink: numbers and queues outgoing frames,
/// retransmits unacknowledged analytics, applies uplink commands.
class PayloadNode {
public:
    explicit PayloadNode(SessionConfig cfg)
        : cfg_(std::move(cfg)), outbox_(cfg_.memory_bound_bytes, cfg_.spool_path) {
        if (!cfg_.spool_path.empty())
            std::filesystem::remove(cfg_.spool_path);
    }

    /// Queues a frame; its sequence number is assigned here.
    std::uint32_t emit(MsgType type, std::uint64_t t_gps_ns, Bytes payload) {
        Frame f{type, next_seq_[static_cast<std::size_t>(type)]++, t_gps_ns, std::move(payload)};
        const auto seq = f.seq;
        if (type == MsgType::analytics) {
            ++analytics_emitted_;
            if (!outbox_.push(std::move(f)))
                spill_failure();
        } else {
            queues_.push(std::move(f));
        }
        return seq;
    }

    void handle_uplink(const Frame& f, double now) {
        last_heard_ = now;
        if (f.type == MsgType::command_ack) {
            const auto ack = decode_ack(f.payload);
            if (ack.acked_type == MsgType::analytics && in_flight_.erase(ack.id))
                ++analytics_acked_;
        } else if (f.type == MsgType::command) {
            const auto cmd = decode_command(f.payload);
            Ack ack{MsgType::command, cmd.command_id, AckStatus::ok, 0};
            if (cmd.kind == CommandKind::set_max_exposure_us && cmd.value >= 50 && cmd.value <= 20000) {
                if (applied_commands_.insert(cmd.command_id).second)
                    max_exposure_us_ = cmd.value;
                ack.value = max_exposure_us_;
            } else {
                ack.status = AckStatus::rejected;
                ack.value = max_exposure_us_;
            }
            emit(MsgType::command_ack, f.t_gps_ns, encode_ack(ack));
            emit(MsgType::diagnostics, f.t_gps_ns,
                 encode_diagnostics({{"max_exposure_us", std::to_string(max_exposure_us_)}}));
        }
    }

    [[nodiscard]] bool link_up(double now) const { return now - last_heard_ < cfg_.link_down_after_s; }

    /// Frames to put on the air this tick.
    std::vector<Frame> tick(double now) {
        const bool up = link_up(now);
        if (up && !was_up_) {
            // Link restored: everything unacknowledged is due right away.
            for (auto& [seq, e] : in_flight_) {
                e.deadline = now;
                e.backoff = cfg_.ack_timeout_s;
            }
        }
        was_up_ = up;
        if (up) {
            for (auto& [seq, e] : in_flight_)
                if (e.deadline <= now && !e.queued) {
                    e.queued = true;
                    retransmit_.push_back(seq);
                }
            std::sort(retransmit_.begin(), retransmit_.end());
            for (auto it = retransmit_.rbegin(); it != retransmit_.rend(); ++it) {
                queues_.push_front(in_flight_.at(*it).frame);
                ++retransmissions_;
            }
            retransmit_.clear();
            while (in_flight_.size() < cfg_.max_in_flight && !outbox_.empty()) {
                auto f = outbox_.pop();
                in_flight_[f->seq] = {*f, 0.0, cfg_.ack_timeout_s, true};
                queues_.push(std::move(*f));
            }
        }

        credit_ += bandwidth_bytes_per_tick();
        std::vector<Frame> out;
        while (const Frame* head = queues_.head()) {
            if (head->type == MsgType::analytics) {
                const auto it = in_flight_.find(head->seq);
                if (it == in_flight_.end()) {
                    queues_.pop(); // acknowledged while waiting for retransmission
                    continue;
                }
                if (!up) {
                    // Hold analytics while the link is down; they stay in flight.
                    it->second.queued = false;
                    it->second.deadline = std::numeric_limits<double>::infinity();
                    queues_.pop();
                    continue;
                }
            }
            // Credit only ever covers the frame at the head, so the radio
            // never holds more than one large frame ahead of telemetry.
            credit_ = std::min(credit_, std::max(bandwidth_bytes_per_tick(), static_cast<double>(head->wire_size())));
            if (static_cast<double>(head->wire_size()) > credit_)
                break;
            credit_ -= static_cast<double>(head->wire_size());
            Frame f = queues_.pop();
            if (f.type == MsgType::analytics) {
                auto& e = in_flight_.at(f.seq);
                e.queued = false;
                e.deadline = now + e.backoff;
                e.backoff = std::min(e.backoff * cfg_.backoff_factor, cfg_.max_backoff_s);
            }
            out.push_back(std::move(f));
        }
        if (queues_.empty())
            credit_ = std::min(credit_, bandwidth_bytes_per_tick());
        return out;
    }

    /// Writes every analytics frame not yet acknowledged to the spool, in
    /// sequence order, for recovery after landing.
    void persist_outstanding() {
        if (cfg_.spool_path.empty())
            return;
        std::vector<Frame> all;
        for (const auto& [seq, e] : in_flight_)
            all.push_back(e.frame);
        for (auto& f : outbox_.snapshot())
            all.push_back(std::move(f));
        std::sort(all.begin(), all.end(), [](const Frame& a, const Frame& b) { return a.seq < b.seq; });
        write_frames(cfg_.spool_path, all);
    }

    void set_bandwidth(double bps) { bandwidth_bps_ = bps; }

    [[nodiscard]] std::size_t outstanding_analytics() const { return in_flight_.size() + outbox_.size(); }
    [[nodiscard]] std::size_t analytics_emitted() const { return analytics_emitted_; }
    [[nodiscard]] std::size_t analytics_acked() const { return analytics_acked_; }
    [[nodiscard]] std::size_t retransmissions() const { return retransmissions_; }
    [[nodiscard]] std::uint32_t max_exposure_us() const { return max_exposure_us_; }
    void set_max_exposure_us(std::uint32_t v) { max_exposure_us_ = v; }
    [[nodiscard]] const AnalyticsOutbox& outbox() const { return outbox_; }
    [[nodiscard]] std::size_t spill_failures() const { return spill_failures_; }
    [[nodiscard]] const SessionConfig& config() const { return cfg_; }

private:
    struct InFlight {
        Frame frame;
        double deadline = 0.0;
        double backoff = 2.0;
        bool queued = false;
    };

    double bandwidth_bytes_per_tick() const {
        return bandwidth_bps_ > 0 ? bandwidth_bps_ / 8.0 * cfg_.tick_s : std::numeric_limits<double>::infinity();
    }

    void spill_failure() {
        ++spill_failures_;
        queues_.evict_oldest_thumbnail();
        emit(MsgType::diagnostics, 0, encode_diagnostics({{"error", "analytics spool write failed"}}));
    }

    SessionConfig cfg_;
    PriorityQueues queues_;
    AnalyticsOutbox outbox_;
    std::map<std::uint32_t, InFlight> in_flight_;
    std::vector<std::uint32_t> retransmit_;
    std::array<std::uint32_t, kMsgTypeCount + 1> next_seq_{};
    double credit_ = 0.0;
    double bandwidth_bps_ = 0.0;
    double last_heard_ = 0.0;
    bool was_up_ = true;
    std::size_t analytics_emitted_ = 0;
    std::size_t analytics_acked_ = 0;
    std::size_t retransmissions_ = 0;
    std::size_t spill_failures_ = 0;
    std::uint32_t max_exposure_us_ = 2000;
    std::set<std::uint32_t> applied_commands_;
};

/// The ground side as seen by the session: receives downlink frames and
/// produces uplink frames (acks, heartbeats, commands).
class GroundEndpoint {
public:
    virtual ~GroundEndpoint() = default;
    virtual std::vector<Frame> on_frame(const Frame& f, double now) = 0;
    virtual std::vector<Frame> tick(double now) = 0;
};

/// Something the onboard pipeline produces at a mission time.
struct Emission {
    double t = 0.0; ///< mission seconds
    MsgType type = MsgType::telemetry;
    std::uint64_t t_gps_ns = 0;
    Bytes payload;
};

struct FrameRecord {
    MsgType type = MsgType::telemetry;
    std::uint32_t seq = 0;
    double emitted_s = 0.0; ///< mission time the producer handed it over
    Delivery delivery;
};

struct SessionResult {
    std::vector<FrameRecord> downlink;   ///< every transmission, retransmissions included
    std::size_t analytics_emitted = 0;
    std::size_t analytics_outstanding = 0; ///< left unacknowledged at the end (persisted to the spool)
    std::size_t retransmissions = 0;
    std::size_t spill_writes = 0;
    double end_s = 0.0;
    /// Largest bytes released in any one-second window.
    std::size_t max_bytes_per_second = 0;

    [[nodiscard]] std::vector<double> telemetry_latencies() const {
        std::vector<double> out;
        for (const auto& r : downlink)
            if (r.type == MsgType::telemetry && r.delivery.dropped == DropReason::none)
                out.push_back(r.delivery.arrive_s - r.emitted_s);
        return out;
    }
};

/// Drives payload, both link directions and the ground endpoint on a
/// simulated clock until every emission has gone out and all analytics are
/// acknowledged, or the drain limit passes.
[[nodiscard]] inline SessionResult run_payload_session(std::vector<Emission> emissions, const LinkProfile& profile,
                                                       GroundEndpoint& ground, SessionConfig cfg = {},
                                                       PayloadNode* external_node = nullptr) {
    std::stable_sort(emissions.begin(), emissions.end(), [](const Emission& a, const Emission& b) { return a.t < b.t; });
    std::optional<PayloadNode> own;
    PayloadNode& node = external_node ? *external_node : own.emplace(cfg);
    cfg = node.config();
    node.set_bandwidth(profile.bandwidth_bps);
    LinkSim down(profile);
    LinkProfile up_profile = profile;
    up_profile.seed = profile.seed ^ 0x5bd1e995u;
    LinkSim up(up_profile);

    struct InAir {
        double arrive;
        std::uint64_t order;
        Frame frame;
        bool operator>(const InAir& o) const { return arrive != o.arrive ? arrive > o.arrive : order > o.order; }
    };
    std::priority_queue<InAir, std::vector<InAir>, std::greater<>> to_ground, to_air;
    std::uint64_t order = 0;
    std::map<std::pair<int, std::uint32_t>, double> emitted_at;

    SessionResult res;
    const double last_emission = emissions.empty() ? 0.0 : emissions.back().t;
    std::size_t next = 0;
    std::deque<std::pair<double, std::size_t>> window; // (time, bytes) released in the last second
    std::size_t window_bytes = 0;

    const auto send_up = [&](std::vector<Frame> frames, double now) {
        for (auto& f : frames) {
            const auto d = up.transmit(f.wire_size(), now);
            if (d.dropped == DropReason::none)
                to_air.push({d.arrive_s, order++, std::move(f)});
        }
    };

    const long max_ticks = static_cast<long>(std::ceil((last_emission + cfg.drain_limit_s) / cfg.tick_s)) + 1;
    double now = 0.0;
    for (long k = 0; k <= max_ticks; ++k) {
        now = k * cfg.tick_s;
        while (next < emissions.size() && emissions[next].t <= now) {
            auto& e = emissions[next++];
            const auto seq = node.emit(e.type, e.t_gps_ns, std::move(e.payload));
            emitted_at[{static_cast<int>(e.type), seq}] = e.t;
        }
        while (!to_air.empty() && to_air.top().arrive <= now) {
            node.handle_uplink(to_air.top().frame, now);
            to_air.pop();
        }
        for (auto& f : node.tick(now)) {
            const auto d = down.transmit(f.wire_size(), now);
            const auto key = std::pair{static_cast<int>(f.type), f.seq};
            const auto it = emitted_at.find(key);
            res.downlink.push_back({f.type, f.seq, it == emitted_at.end() ? now : it->second, d});
            window.emplace_back(now, f.wire_size());
            window_bytes += f.wire_size();
            if (d.dropped == DropReason::none)
                to_ground.push({d.arrive_s, order++, std::move(f)});
        }
        while (!window.empty() && window.front().first <= now - 1.0) {
            window_bytes -= window.front().second;
            window.pop_front();
        }
        res.max_bytes_per_second = std::max(res.max_bytes_per_second, window_bytes);
        while (!to_ground.empty() && to_ground.top().arrive <= now) {
            send_up(ground.on_frame(to_ground.top().frame, now), now);
            to_ground.pop();
        }
        send_up(ground.tick(now), now);
        if (next == emissions.size() && now >= last_emission && node.outstanding_analytics() == 0 &&
            to_ground.empty())
            break;
    }
    res.end_s = now;
    res.analytics_emitted = node.analytics_emitted();
    res.analytics_outstanding = node.outstanding_analytics();
    res.retransmissions = node.retransmissions();
    res.spill_writes = node.outbox().spill_writes();
    if (res.analytics_outstanding > 0)
        node.persist_outstanding();
    return res;
}

} // namespace adapt::downlink
