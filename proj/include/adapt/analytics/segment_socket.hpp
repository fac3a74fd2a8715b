#pragma once

// Out-of-process segmentation over a Unix stream socket, so GPU inference
// processes can serve masks without being linked in.
//
// request:  "SEGQ" u64 image_id  u32 width  u32 height  u32 stride  u8 channels  pixels (height*stride)
// response: "SEGR" u64 image_id  u32 width  u32 height  u8 downsample  class bytes (width*height)
// All integers big-endian. One request/response per connection.

#include <adapt/analytics/segment.hpp>
#include <adapt/util/bytes.hpp>

#include <sys/socket.h>
#include <sys/un.h>
#include <unistd.h>

#include <atomic>
#include <cstring>
#include <string>
#include <thread>
#include <utility>

namespace adapt::analytics {

namespace detail {

class Fd {
public:
    explicit Fd(int fd = -1) : fd_(fd) {}
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
    Fd& operator=(Fd&& o) noexcept {
        std::swap(fd_, o.fd_);
        return *this;
    }
    ~Fd() {
        if (fd_ >= 0)
            ::close(fd_);
    }
    [[nodiscard]] int get() const { return fd_; }

private:
    int fd_;
};

inline sockaddr_un unix_address(const std::string& path) {
    sockaddr_un addr{};
    addr.sun_family = AF_UNIX;
    if (path.size() >= sizeof(addr.sun_path))
        throw ContractError("socket path too long: " + path);
    std::memcpy(addr.sun_path, path.c_str(), path.size() + 1);
    return addr;
}

inline void write_all(int fd, std::span<const std::uint8_t> data) {
    std::size_t done = 0;
    while (done < data.size()) {
        const auto n = ::send(fd, data.data() + done, data.size() - done, MSG_NOSIGNAL);
        if (n <= 0)
            throw IoError("segmenter socket write failed");
        done += static_cast<std::size_t>(n);
    }
}

inline util::Bytes read_exact(int fd, std::size_t count) {
    util::Bytes out(count);
    std::size_t done = 0;
    while (done < count) {
        const auto n = ::recv(fd, out.data() + done, count - done, 0);
        if (n <= 0)
            throw IoError("segmenter socket closed mid-message");
        done += static_cast<std::size_t>(n);
    }
    return out;
}

inline std::uint32_t be32(const std::uint8_t* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) | p[3];
}

} // namespace detail

/// Client side: forwards images to a segmentation server.
class SocketSegmenter final : public SegmenterBackend {
public:
    SocketSegmenter(std::string path, int downsample, std::vector<ClassInfo> classes = default_class_table())
        : path_(std::move(path)), downsample_(downsample), classes_(std::move(classes)) {}

    [[nodiscard]] std::string name() const override { return "socket:" + path_; }
    [[nodiscard]] std::vector<ClassInfo> class_table() const override { return classes_; }
    [[nodiscard]] int downsample() const override { return downsample_; }

    [[nodiscard]] SegMask run(const Image& img) const override {
        detail::Fd fd(::socket(AF_UNIX, SOCK_STREAM, 0));
        const auto addr = detail::unix_address(path_);
        if (fd.get() < 0 || ::connect(fd.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0)
            throw IoError("cannot connect to segmenter at " + path_);
        util::ByteWriter w;
        w.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("SEGQ"), 4));
        w.u64(next_id_++);
        w.u32(static_cast<std::uint32_t>(img.width));
        w.u32(static_cast<std::uint32_t>(img.height));
        w.u32(static_cast<std::uint32_t>(img.width * img.channels));
        w.u8(static_cast<std::uint8_t>(img.channels));
        w.bytes(img.pixels);
        detail::write_all(fd.get(), w.data());

        const auto head = detail::read_exact(fd.get(), 4 + 8 + 4 + 4 + 1);
        if (std::memcmp(head.data(), "SEGR", 4) != 0)
            throw ParseError("segmenter reply has bad magic");
        const auto mw = detail::be32(head.data() + 12);
        const auto mh = detail::be32(head.data() + 16);
        const int factor = head[20];
        if (mw == 0 || mh == 0 || mw > 1u << 16 || mh > 1u << 16 || factor == 0)
            throw ParseError("segmenter reply has invalid dimensions");
        SegMask m(static_cast<int>(mw), static_cast<int>(mh), kBackground, factor);
        m.classes = detail::read_exact(fd.get(), m.pixel_count());
        return m;
    }

private:
    std::string path_;
    int downsample_;
    std::vector<ClassInfo> classes_;
    mutable std::atomic<std::uint64_t> next_id_{0};
};

/// Server side: answers requests with a local backend until stopped.
/// Runs on its own thread; connections are handled one at a time.
class SegmenterServer {
public:
    SegmenterServer(std::string path, const SegmenterBackend& backend) : path_(std::move(path)), backend_(backend) {
        ::unlink(path_.c_str());
        listen_ = detail::Fd(::socket(AF_UNIX, SOCK_STREAM, 0));
        const auto addr = detail::unix_address(path_);
        if (listen_.get() < 0 || ::bind(listen_.get(), reinterpret_cast<const sockaddr*>(&addr), sizeof(addr)) != 0 ||
            ::listen(listen_.get(), 8) != 0)
            throw IoError("cannot listen on " + path_);
        thread_ = std::thread([this] { loop(); });
    }
    SegmenterServer(const SegmenterServer&) = delete;
    SegmenterServer& operator=(const SegmenterServer&) = delete;

    ~SegmenterServer() {
        stop_ = true;
        ::shutdown(listen_.get(), SHUT_RDWR);
        if (thread_.joinable())
            thread_.join();
        ::unlink(path_.c_str());
    }

private:
    void loop() {
        while (!stop_) {
            detail::Fd conn(::accept(listen_.get(), nullptr, nullptr));
            if (conn.get() < 0)
                return;
            try {
                serve(conn.get());
            } catch (const Error&) {
                // A broken client does not take the server down.
            }
        }
    }

    void serve(int fd) {
        const auto head = detail::read_exact(fd, 4 + 8 + 4 + 4 + 4 + 1);
        if (std::memcmp(head.data(), "SEGQ", 4) != 0)
            throw ParseError("bad request magic");
        const auto w = detail::be32(head.data() + 12);
        const auto h = detail::be32(head.data() + 16);
        const auto stride = detail::be32(head.data() + 20);
        const int ch = head[24];
        if ((ch != 1 && ch != 3) || w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16 || stride < w * ch)
            throw ParseError("bad request header");
        const auto raw = detail::read_exact(fd, static_cast<std::size_t>(stride) * h);
        Image img(static_cast<int>(w), static_cast<int>(h), ch);
        for (std::uint32_t y = 0; y < h; ++y)
            std::memcpy(img.pixels.data() + static_cast<std::size_t>(y) * w * ch, raw.data() + std::size_t{y} * stride,
                        std::size_t{w} * ch);
        const SegMask m = segment(backend_, img);
        util::ByteWriter out;
        out.bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("SEGR"), 4));
        out.bytes(std::span<const std::uint8_t>(head.data() + 4, 8));
        out.u32(static_cast<std::uint32_t>(m.width));
        out.u32(static_cast<std::uint32_t>(m.height));
        out.u8(static_cast<std::uint8_t>(m.downsample));
        out.bytes(m.classes);
        detail::write_all(fd, out.data());
    }

    std::string path_;
    const SegmenterBackend& backend_;
    detail::Fd listen_;
    std::atomic<bool> stop_{false};
    std::thread thread_;
};

} // namespace adapt::analytics
