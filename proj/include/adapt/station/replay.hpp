#pragma once

#include <adapt/station/station.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <fstream>
#include <functional>
#include <mutex>
#include <thread>

namespace adapt::station {

struct Capture {
    std::vector<Frame> frames;
    dl::StreamDecoder::Counters counters;
};

/// Reads a recorded downlink byte stream (a mission's live.log, or any
/// concatenation of wire frames). Corrupt stretches are skipped and counted.
[[nodiscard]] inline Capture read_capture(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open capture '" + path.string() + "'");
    dl::StreamDecoder dec;
    Capture cap;
    std::vector<std::uint8_t> buf(1 << 16);
    while (in) {
        in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
        const auto n = static_cast<std::size_t>(in.gcount());
        for (auto& f : dec.feed(std::span(buf.data(), n)))
            cap.frames.push_back(std::move(f));
    }
    dec.finish();
    cap.counters = dec.counters();
    return cap;
}

/// Re-drives a station with recorded frames. Station time follows the
/// frames' GPS stamps from the first one, so the resulting store does not
/// depend on `speed`; speed only paces wall-clock delivery (0 = no pacing).
/// A `live_clock` replaces the stamps with the caller's clock, for replays
/// that share a station with a running server.
inline std::size_t replay_capture(Station& station, const std::vector<Frame>& frames, double speed = 0.0,
                                  const std::atomic<bool>* cancel = nullptr,
                                  const std::function<double()>& live_clock = {}) {
    std::optional<std::uint64_t> t0;
    double now = 0.0;
    const auto wall0 = std::chrono::steady_clock::now();
    std::size_t n = 0;
    for (const auto& f : frames) {
        if (cancel && *cancel)
            break;
        if (f.t_gps_ns != 0) {
            if (!t0)
                t0 = f.t_gps_ns;
            if (f.t_gps_ns >= *t0)
                now = std::max(now, static_cast<double>(f.t_gps_ns - *t0) * 1e-9);
        }
        if (speed > 0)
            std::this_thread::sleep_until(wall0 + std::chrono::duration<double>(now / speed));
        (void)station.on_frame(f, live_clock ? live_clock() : now);
        ++n;
    }
    return n;
}

/// Accepts the payload's downlink over TCP, one connection at a time:
/// received bytes go to the station, its replies (acks, commands,
/// heartbeats) go back on the same socket.
class DownlinkListener {
public:
    using Clock = std::function<double()>;

    DownlinkListener(Station& station, Clock clock) : station_(station), clock_(std::move(clock)) {}
    DownlinkListener(const DownlinkListener&) = delete;
    DownlinkListener& operator=(const DownlinkListener&) = delete;
    ~DownlinkListener() { stop(); }

    /// Binds `host:port` (0 picks a free port) and returns the bound port.
    int start(const std::string& host, int port) {
        fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd_ < 0)
            throw IoError("cannot create downlink socket");
        const int one = 1;
        ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(static_cast<std::uint16_t>(port));
        if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1)
            throw IoError("bad downlink bind address '" + host + "'");
        if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(fd_, 1) != 0)
            throw IoError("cannot bind downlink " + host + ":" + std::to_string(port));
        socklen_t len = sizeof addr;
        ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
        accept_thread_ = std::thread([this] { accept_loop(); });
        tick_thread_ = std::thread([this] { tick_loop(); });
        return ntohs(addr.sin_port);
    }

    void stop() {
        if (stopping_.exchange(true))
            return;
        if (fd_ >= 0)
            ::shutdown(fd_, SHUT_RDWR);
        {
            std::lock_guard lock(client_mu_);
            if (client_ >= 0)
                ::shutdown(client_, SHUT_RDWR);
        }
        if (accept_thread_.joinable())
            accept_thread_.join();
        if (tick_thread_.joinable())
            tick_thread_.join();
        if (fd_ >= 0)
            ::close(fd_);
    }

private:
    void send_frames(const std::vector<Frame>& frames) {
        std::lock_guard lock(client_mu_);
        if (client_ < 0)
            return;
        for (const auto& f : frames) {
            const auto bytes = dl::encode(f);
            std::size_t done = 0;
            while (done < bytes.size()) {
                const auto w = ::send(client_, bytes.data() + done, bytes.size() - done, MSG_NOSIGNAL);
                if (w <= 0)
                    return;
                done += static_cast<std::size_t>(w);
            }
        }
    }

    void accept_loop() {
        while (!stopping_) {
            const int c = ::accept(fd_, nullptr, nullptr);
            if (c < 0)
                return;
            {
                std::lock_guard lock(client_mu_);
                client_ = c;
            }
            std::vector<std::uint8_t> buf(1 << 16);
            while (!stopping_) {
                const auto n = ::recv(c, buf.data(), buf.size(), 0);
                if (n <= 0)
                    break;
                send_frames(station_.ingest_bytes(std::span(buf.data(), static_cast<std::size_t>(n)), clock_()));
            }
            std::lock_guard lock(client_mu_);
            ::close(c);
            client_ = -1;
        }
    }

    void tick_loop() {
        while (!stopping_) {
            send_frames(station_.tick(clock_()));
            std::this_thread::sleep_for(std::chrono::milliseconds(50));
        }
    }

    Station& station_;
    Clock clock_;
    int fd_ = -1;
    int client_ = -1;
    std::mutex client_mu_;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_, tick_thread_;
};

} // namespace adapt::station
