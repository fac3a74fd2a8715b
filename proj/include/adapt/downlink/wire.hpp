#pragma once

#include <adapt/error.hpp>
#include <adapt/util/bytes.hpp>

#include <zlib.h>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace adapt::downlink {

using util::Bytes;

// Frame layout, big-endian:
//   0  u8  0xAD      1  u8 0x47     2  u8 version   3  u8 msg_type
//   4  u32 seq       8  u64 t_gps (ns)              16 u32 payload_len
//   20 payload       20+len  u32 crc32 of bytes [0, 20+len)
inline constexpr std::uint8_t kMagic0 = 0xAD;
inline constexpr std::uint8_t kMagic1 = 0x47;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderSize = 20;
inline constexpr std::size_t kCrcSize = 4;
inline constexpr std::size_t kFrameOverhead = kHeaderSize + kCrcSize;
inline constexpr std::uint32_t kMaxPayload = 4u << 20;

enum class MsgType : std::uint8_t {
    telemetry = 1,
    thumbnail = 2,
    histogram = 3,
    sharpness = 4,
    analytics = 5,
    diagnostics = 6,
    command = 7,
    command_ack = 8,
};

inline constexpr int kMsgTypeCount = 8;

[[nodiscard]] constexpr bool valid_type(std::uint8_t t) { return t >= 1 && t <= kMsgTypeCount; }

[[nodiscard]] constexpr std::string_view to_string(MsgType t) {
    constexpr std::string_view names[] = {"?",         "telemetry",   "thumbnail", "histogram",  "sharpness",
                                          "analytics", "diagnostics", "command",   "command-ack"};
    const auto i = static_cast<std::uint8_t>(t);
    return i <= kMsgTypeCount ? names[i] : names[0];
}

struct Frame {
    MsgType type = MsgType::telemetry;
    std::uint32_t seq = 0;
    std::uint64_t t_gps_ns = 0;
    Bytes payload;

    [[nodiscard]] std::size_t wire_size() const { return kFrameOverhead + payload.size(); }
    friend bool operator==(const Frame&, const Frame&) = default;
};

[[nodiscard]] inline std::uint32_t crc32_of(std::span<const std::uint8_t> data) {
    return static_cast<std::uint32_t>(::crc32(::crc32(0L, Z_NULL, 0), data.data(), static_cast<uInt>(data.size())));
}

[[nodiscard]] inline Bytes encode(const Frame& f) {
    if (!valid_type(static_cast<std::uint8_t>(f.type)))
        throw ContractError("unknown message type");
    if (f.payload.size() > kMaxPayload)
        throw ContractError("payload exceeds the frame limit");
    util::ByteWriter w;
    w.u8(kMagic0);
    w.u8(kMagic1);
    w.u8(kVersion);
    w.u8(static_cast<std::uint8_t>(f.type));
    w.u32(f.seq);
    w.u64(f.t_gps_ns);
    w.u32(static_cast<std::uint32_t>(f.payload.size()));
    w.bytes(f.payload);
    w.u32(crc32_of(w.data()));
    return w.take();
}

namespace detail {

inline std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

/// Header sanity short of the CRC. Returns the payload length.
inline std::uint32_t check_header(std::span<const std::uint8_t> b) {
    if (b.size() < kHeaderSize)
        throw FramingError("frame shorter than its header");
    if (b[0] != kMagic0 || b[1] != kMagic1)
        throw FramingError("bad magic");
    if (b[2] != kVersion)
        throw FramingError("unsupported version " + std::to_string(b[2]));
    if (!valid_type(b[3]))
        throw FramingError("unknown message type " + std::to_string(b[3]));
    const auto len = be32(b.data() + 16);
    if (len > kMaxPayload)
        throw FramingError("payload length " + std::to_string(len) + " exceeds limit");
    return len;
}

} // namespace detail

/// Decodes exactly one frame occupying all of `b`.
[[nodiscard]] inline Frame decode(std::span<const std::uint8_t> b) {
    const auto len = detail::check_header(b);
    if (b.size() < kFrameOverhead + len)
        throw FramingError("truncated frame");
    if (b.size() > kFrameOverhead + len)
        throw FramingError("trailing bytes after frame");
    const auto crc = detail::be32(b.data() + kHeaderSize + len);
    if (crc != crc32_of(b.first(kHeaderSize + len)))
        throw IntegrityError("crc mismatch");
    util::ByteReader r(b);
    (void)r.bytes(3);
    Frame f;
    f.type = static_cast<MsgType>(r.u8());
    f.seq = r.u32();
    f.t_gps_ns = r.u64();
    const auto n = r.u32();
    const auto p = r.bytes(n);
    f.payload.assign(p.begin(), p.end());
    return f;
}

/// Incremental decoder for a byte stream that may contain corruption or
/// truncation. On any bad frame it skips to the next magic and carries on.
class StreamDecoder {
public:
    struct Counters {
        std::uint64_t frames = 0;
        std::uint64_t crc_errors = 0;
        std::uint64_t framing_errors = 0;
        std::uint64_t bytes_skipped = 0;
    };

    std::vector<Frame> feed(std::span<const std::uint8_t> data) {
        buf_.insert(buf_.end(), data.begin(), data.end());
        std::vector<Frame> out;
        std::size_t pos = 0;
        while (true) {
            const auto m = find_magic(pos);
            if (m != pos) {
                counters_.bytes_skipped += m - pos;
                pos = m;
            }
            if (buf_.size() - pos < kHeaderSize)
                break;
            const std::span<const std::uint8_t> rest(buf_.data() + pos, buf_.size() - pos);
            std::uint32_t len = 0;
            try {
                len = detail::check_header(rest);
            } catch (const FramingError&) {
                ++counters_.framing_errors;
                skip_one(pos);
                continue;
            }
            if (rest.size() < kFrameOverhead + len)
                break; // wait for more bytes
            try {
                out.push_back(decode(rest.first(kFrameOverhead + len)));
                ++counters_.frames;
                pos += kFrameOverhead + len;
            } catch (const IntegrityError&) {
                ++counters_.crc_errors;
                skip_one(pos);
            }
        }
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos));
        return out;
    }

    /// End of stream: whatever is left can never become a frame.
    void finish() {
        if (!buf_.empty()) {
            ++counters_.framing_errors;
            counters_.bytes_skipped += buf_.size();
            buf_.clear();
        }
    }

    [[nodiscard]] const Counters& counters() const { return counters_; }
    [[nodiscard]] std::size_t buffered() const { return buf_.size(); }

private:
    std::size_t find_magic(std::size_t from) const {
        for (std::size_t i = from; i + 1 < buf_.size(); ++i)
            if (buf_[i] == kMagic0 && buf_[i + 1] == kMagic1)
                return i;
        // Keep a trailing first magic byte; it may pair with the next chunk.
        if (!buf_.empty() && buf_.size() > from && buf_.back() == kMagic0)
            return buf_.size() - 1;
        return buf_.size() > from ? buf_.size() : from;
    }

    void skip_one(std::size_t& pos) {
        ++pos;
        ++counters_.bytes_skipped;
    }

    Bytes buf_;
    Counters counters_;
};

/// Send priority, lower is more urgent.
[[nodiscard]] constexpr int priority_of(MsgType t) {
    switch (t) {
    case MsgType::telemetry:
        return 0;
    case MsgType::command:
    case MsgType::command_ack:
        return 1;
    case MsgType::diagnostics:
        return 2;
    case MsgType::analytics:
        return 3;
    case MsgType::histogram:
    case MsgType::sharpness:
        return 4;
    case MsgType::thumbnail:
        return 5;
    }
    return 5;
}

inline constexpr int kPriorityLevels = 6;

/// Streams where a newer frame makes a queued older one pointless.
[[nodiscard]] constexpr bool lossy_latest(MsgType t) {
    return t == MsgType::telemetry || t == MsgType::thumbnail || t == MsgType::histogram || t == MsgType::sharpness;
}

/// Streams delivered with acknowledgement and retransmission.
[[nodiscard]] constexpr bool reliable(MsgType t) { return t == MsgType::analytics || t == MsgType::command; }

} // namespace adapt::downlink
