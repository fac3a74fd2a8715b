#pragma once

#include <adapt/downlink/wire.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace adapt::downlink {

// Spool / log file: repeated records of u32 big-endian length + encoded frame.

inline void append_record(std::ofstream& out, const Bytes& frame) {
    const auto n = static_cast<std::uint32_t>(frame.size());
    const char len[4] = {static_cast<char>(n >> 24), static_cast<char>(n >> 16), static_cast<char>(n >> 8),
                         static_cast<char>(n)};
    out.write(len, 4);
    out.write(reinterpret_cast<const char*>(frame.data()), static_cast<std::streamsize>(frame.size()));
}

/// Appends encoded frames and flushes; throws IoError if the bytes did not reach the file.
inline void append_frames(const std::string& path, const std::vector<Frame>& frames) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out)
        throw IoError("cannot open spool '" + path + "'");
    for (const auto& f : frames)
        append_record(out, encode(f));
    out.flush();
    if (!out)
        throw IoError("write to spool '" + path + "' failed");
}

inline void write_frames(const std::string& path, const std::vector<Frame>& frames) {
    const std::string tmp = path + ".tmp";
    std::filesystem::remove(tmp);
    append_frames(tmp, frames);
    std::filesystem::rename(tmp, path);
}

struct SpoolRecovery {
    std::vector<Frame> frames;
    std::size_t bytes_skipped = 0;
    std::size_t bad_records = 0;
};

/// Reads a spool, skipping damage: a record whose length or frame does not
/// check out is abandoned and scanning resumes at the next frame magic.
[[nodiscard]] inline SpoolRecovery read_spool(const std::string& path) {
    SpoolRecovery rec;
    std::ifstream in(path, std::ios::binary);
    if (!in)
        return rec;
    const Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0;
    const auto try_frame_at = [&](std::size_t at) -> std::size_t {
        if (data.size() - at < kHeaderSize || data[at] != kMagic0 || data[at + 1] != kMagic1)
            return 0;
        const auto len = detail::be32(data.data() + at + 16);
        if (len > kMaxPayload || data.size() - at < kFrameOverhead + len)
            return 0;
        try {
            rec.frames.push_back(decode(std::span(data.data() + at, kFrameOverhead + len)));
            return kFrameOverhead + len;
        } catch (const Error&) {
            return 0;
        }
    };
    while (pos < data.size()) {
        if (data.size() - pos >= 4) {
            const auto n = detail::be32(data.data() + pos);
            if (n <= data.size() - pos - 4) {
                const auto used = try_frame_at(pos + 4);
                if (used == n && used > 0) {
                    pos += 4 + n;
                    continue;
                }
                if (used > 0)
                    rec.frames.pop_back();
            }
        }
        // Damaged record: resynchronize on the next frame magic.
        ++rec.bad_records;
        std::size_t scan = pos + 1;
        std::size_t used = 0;
        for (; scan + 1 < data.size(); ++scan)
            if ((used = try_frame_at(scan)) > 0)
                break;
        if (used == 0) {
            rec.bytes_skipped += data.size() - pos;
            break;
        }
        rec.bytes_skipped += scan - pos;
        pos = scan + used;
    }
    return rec;
}

} // namespace adapt::downlink
