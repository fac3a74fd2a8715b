#pragma once

#include <adapt/downlink/spool.hpp>

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace adapt::station {

using downlink::Frame;
using downlink::MsgType;

namespace fs = std::filesystem;

inline constexpr const char* kAnalyticsLog = "analytics.log";
inline constexpr const char* kPendingLog = "analytics.pending";
inline constexpr const char* kCaptureLog = "live.log";
inline constexpr const char* kCommandLog = "commands.jsonl";

namespace detail {

/// Appends length-prefixed frame records and, when `sync` is set, does not
/// return until they are on stable storage.
inline void durable_append(const fs::path& path, const std::vector<Frame>& frames, bool sync) {
    util::Bytes buf;
    for (const auto& f : frames) {
        const auto b = downlink::encode(f);
        const auto n = static_cast<std::uint32_t>(b.size());
        buf.insert(buf.end(), {static_cast<std::uint8_t>(n >> 24), static_cast<std::uint8_t>(n >> 16),
                               static_cast<std::uint8_t>(n >> 8), static_cast<std::uint8_t>(n)});
        buf.insert(buf.end(), b.begin(), b.end());
    }
    const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0)
        throw IoError("cannot open " + path.string() + ": " + std::strerror(errno));
    std::size_t done = 0;
    while (done < buf.size()) {
        const auto w = ::write(fd, buf.data() + done, buf.size() - done);
        if (w < 0 && errno == EINTR)
            continue;
        if (w <= 0) {
            const int e = errno;
            ::close(fd);
            throw IoError("write to " + path.string() + " failed: " + std::strerror(e));
        }
        done += static_cast<std::size_t>(w);
    }
    if (sync && ::fsync(fd) != 0) {
        const int e = errno;
        ::close(fd);
        throw IoError("fsync of " + path.string() + " failed: " + std::strerror(e));
    }
    ::close(fd);
}

} // namespace detail

/// On-disk record of one mission. Analytics are committed to
/// `analytics.log` strictly in sequence order, so two runs that deliver the
/// same frames produce the same file whatever the arrival order was. Frames
/// that arrive ahead of a gap wait, durably, in `analytics.pending`.
/// `live.log` captures every received frame in arrival order for replay.
class MissionStore {
public:
    enum class Put { stored, duplicate };

    MissionStore(fs::path dir, bool sync = true, bool read_only = false)
        : dir_(std::move(dir)), sync_(sync), read_only_(read_only) {
        if (!read_only_)
            fs::create_directories(dir_);
        recover();
    }

    /// Persists an analytics frame. Returns only after the frame is durable;
    /// throws IoError otherwise (and then nothing is acknowledged).
    Put put_analytics(const Frame& f) {
        if (f.seq < next_seq_ || pending_.count(f.seq))
            return Put::duplicate;
        guard_write();
        if (f.seq == next_seq_) {
            detail::durable_append(dir_ / kAnalyticsLog, {f}, sync_);
            committed_.push_back(f);
            ++next_seq_;
            drain_pending();
        } else {
            detail::durable_append(dir_ / kPendingLog, {f}, sync_);
            pending_.emplace(f.seq, f);
        }
        return Put::stored;
    }

    /// Appends to the arrival-order capture (not synced: it is a convenience
    /// copy, the analytics log is the record).
    void capture(const Frame& f) {
        if (!read_only_)
            detail::durable_append(dir_ / kCaptureLog, {f}, false);
    }

    [[nodiscard]] const std::vector<Frame>& committed() const { return committed_; }
    [[nodiscard]] const std::map<std::uint32_t, Frame>& pending() const { return pending_; }
    [[nodiscard]] std::uint32_t next_seq() const { return next_seq_; }
    [[nodiscard]] std::size_t stored_count() const { return committed_.size() + pending_.size(); }
    [[nodiscard]] const fs::path& dir() const { return dir_; }
    [[nodiscard]] std::size_t recovered_damage() const { return recovered_damage_; }

    /// Makes the next `n` analytics writes fail, as a full or broken disk would.
    void inject_write_failures(int n) { fail_writes_ = n; }

private:
    void guard_write() {
        if (read_only_)
            throw IoError("mission store is read-only");
        if (fail_writes_ > 0) {
            --fail_writes_;
            throw IoError("injected write failure");
        }
    }

    void drain_pending() {
        if (pending_.empty() || pending_.begin()->first != next_seq_)
            return;
        std::vector<Frame> run;
        while (!pending_.empty() && pending_.begin()->first == next_seq_) {
            run.push_back(std::move(pending_.begin()->second));
            pending_.erase(pending_.begin());
            ++next_seq_;
        }
        detail::durable_append(dir_ / kAnalyticsLog, run, sync_);
        committed_.insert(committed_.end(), run.begin(), run.end());
        rewrite_pending();
    }

    void rewrite_pending() {
        const auto path = dir_ / kPendingLog;
        if (pending_.empty()) {
            fs::remove(path);
            return;
        }
        std::vector<Frame> rest;
        for (const auto& [seq, f] : pending_)
            rest.push_back(f);
        downlink::write_frames(path.string(), rest);
    }

    /// Rebuilds the in-memory view from disk. A torn tail or a record out of
    /// sequence (from a crash between the two files being updated) is
    /// repaired so the log again holds exactly seq 0..n-1.
    void recover() {
        const auto log = downlink::read_spool((dir_ / kAnalyticsLog).string());
        const auto pend = downlink::read_spool((dir_ / kPendingLog).string());
        recovered_damage_ = log.bad_records + pend.bad_records;
        bool rewrite_log = log.bad_records > 0;
        for (const auto& f : log.frames) {
            if (f.type != MsgType::analytics) {
                rewrite_log = true;
                continue;
            }
            if (f.seq == next_seq_) {
                committed_.push_back(f);
                ++next_seq_;
            } else {
                rewrite_log = true;
                if (f.seq > next_seq_)
                    pending_.emplace(f.seq, f);
            }
        }
        for (const auto& f : pend.frames)
            if (f.type == MsgType::analytics && f.seq >= next_seq_)
                pending_.emplace(f.seq, f);
        if (read_only_) {
            while (!pending_.empty() && pending_.begin()->first == next_seq_) {
                committed_.push_back(std::move(pending_.begin()->second));
                pending_.erase(pending_.begin());
                ++next_seq_;
            }
            return;
        }
        if (rewrite_log)
            downlink::write_frames((dir_ / kAnalyticsLog).string(), committed_);
        if (!pending_.empty() && pending_.begin()->first == next_seq_)
            drain_pending();
        else if (rewrite_log || pend.bad_records > 0 || pend.frames.size() != pending_.size())
            rewrite_pending();
    }

    fs::path dir_;
    bool sync_;
    bool read_only_;
    std::vector<Frame> committed_;
    std::map<std::uint32_t, Frame> pending_;
    std::uint32_t next_seq_ = 0;
    std::size_t recovered_damage_ = 0;
    int fail_writes_ = 0;
};

} // namespace adapt::station
