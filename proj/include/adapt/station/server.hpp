#pragma once

#include <adapt/station/station.hpp>

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <regex>
#include <thread>

namespace adapt::station {

/// Mission ids are directory names under the store root.
[[nodiscard]] inline bool valid_mission_id(const std::string& id) {
    static const std::regex ok(R"([A-Za-z0-9_.-]{1,128})");
    return id != "." && id != ".." && std::regex_match(id, ok);
}

/// Missions present under `root`, sorted by id.
[[nodiscard]] inline std::vector<std::string> list_missions(const fs::path& root) {
    std::vector<std::string> ids;
    if (!fs::is_directory(root))
        return ids;
    for (const auto& e : fs::directory_iterator(root))
        if (e.is_directory() && valid_mission_id(e.path().filename().string()) &&
            (fs::exists(e.path() / kAnalyticsLog) || fs::exists(e.path() / kCaptureLog)))
            ids.push_back(e.path().filename().string());
    std::sort(ids.begin(), ids.end());
    return ids;
}

/// HTTP query API plus a server-sent-events stream over a live station.
/// Other missions under the same store root are served read-only.
///
///   GET  /missions                       ids with frame counts
///   GET  /missions/{id}/export.geojson   stored analytics as GeoJSON
///   GET  /missions/{id}/report           mission summary
///   GET  /state                          snapshot of the live mission
///   GET  /stream                         snapshot event, then live events
///   GET  /commands[/{id}]                command status
///   POST /command/exposure               {"exposure_us": N}
class StationServer {
public:
    using Clock = std::function<double()>;

    explicit StationServer(Station& live, Clock clock = {}) : live_(live), clock_(std::move(clock)) {
        if (!clock_) {
            const auto t0 = std::chrono::steady_clock::now();
            clock_ = [t0] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
        }
        routes();
    }

    StationServer(const StationServer&) = delete;
    StationServer& operator=(const StationServer&) = delete;
    ~StationServer() { stop(); }

    /// Binds and serves on a background thread. Port 0 picks a free port;
    /// the bound port is returned.
    int start(const std::string& host, int port) {
        const int bound = port == 0 ? srv_.bind_to_any_port(host) : (srv_.bind_to_port(host, port) ? port : -1);
        if (bound < 0)
            throw IoError("cannot bind " + host + ":" + std::to_string(port));
        thread_ = std::thread([this] { srv_.listen_after_bind(); });
        srv_.wait_until_ready();
        return bound;
    }

    void stop() {
        stopping_ = true;
        srv_.stop();
        if (thread_.joinable())
            thread_.join();
    }

    [[nodiscard]] httplib::Server& http() { return srv_; }

private:
    static void send_json(httplib::Response& res, const json& j, int status = 200) {
        res.status = status;
        res.set_content(j.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& msg) {
        send_json(res, {{"error", msg}}, status);
    }

    /// Runs `fn` against the mission named in the path: the live station
    /// when it matches, otherwise a read-only view of the stored mission.
    template <typename Fn>
    void with_mission(const std::string& id, httplib::Response& res, Fn fn) {
        if (!valid_mission_id(id))
            return send_error(res, 400, "bad mission id");
        if (id == live_.config().mission_id)
            return fn(live_);
        const auto dir = live_.config().root / id;
        if (!fs::is_directory(dir))
            return send_error(res, 404, "no mission '" + id + "'");
        auto cfg = live_.config();
        cfg.mission_id = id;
        cfg.read_only = true;
        Station view(cfg);
        fn(view);
    }

    void routes() {
        srv_.set_default_headers({{"Access-Control-Allow-Origin", "*"}});
        srv_.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type");
            res.status = 204;
        });
        srv_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            }
        });

        srv_.Get("/missions", [this](const httplib::Request&, httplib::Response& res) {
            auto ids = list_missions(live_.config().root);
            if (std::find(ids.begin(), ids.end(), live_.config().mission_id) == ids.end())
                ids.push_back(live_.config().mission_id);
            std::sort(ids.begin(), ids.end());
            json out = json::array();
            for (const auto& id : ids) {
                if (id == live_.config().mission_id) {
                    out.push_back({{"id", id}, {"live", true}, {"analytics_frames", live_.stored_analytics()}});
                } else {
                    MissionStore store(live_.config().root / id, false, true);
                    out.push_back({{"id", id}, {"live", false}, {"analytics_frames", store.stored_count()}});
                }
            }
            send_json(res, out);
        });

        srv_.Get(R"(/missions/([^/]+)/export\.geojson)", [this](const httplib::Request& req, httplib::Response& res) {
            with_mission(req.matches[1], res, [&](Station& s) {
                res.set_content(s.export_geojson().dump(), "application/geo+json");
            });
        });

        srv_.Get(R"(/missions/([^/]+)/report)", [this](const httplib::Request& req, httplib::Response& res) {
            with_mission(req.matches[1], res, [&](Station& s) { send_json(res, s.report(clock_())); });
        });

        srv_.Get("/state", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, live_.snapshot(clock_()));
        });

        srv_.Get("/commands", [this](const httplib::Request&, httplib::Response& res) {
            json out = json::array();
            for (const auto& [id, c] : live_.state().commands)
                out.push_back(command_json(c));
            send_json(res, out);
        });

        srv_.Get(R"(/commands/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
            const auto c = live_.command(static_cast<std::uint32_t>(std::stoul(req.matches[1])));
            if (!c)
                return send_error(res, 404, "no such command");
            send_json(res, command_json(*c));
        });

        srv_.Post("/command/exposure", [this](const httplib::Request& req, httplib::Response& res) {
            std::uint32_t us = 0;
            try {
                const auto j = json::parse(req.body);
                const auto v = j.at("exposure_us").get<double>();
                if (!(v >= 0 && v <= 4e9) || v != std::floor(v))
                    return send_error(res, 400, "exposure_us must be a whole number of microseconds");
                us = static_cast<std::uint32_t>(v);
            } catch (const json::exception& e) {
                return send_error(res, 400, std::string("expected {\"exposure_us\": N}: ") + e.what());
            }
            try {
                const auto id = live_.send_command(us, clock_());
                send_json(res, command_json(*live_.command(id)), 202);
            } catch (const ContractError& e) {
                send_error(res, 400, e.what());
            }
        });

        srv_.Get("/stream", [this](const httplib::Request&, httplib::Response& res) {
            // Subscribe before taking the snapshot so nothing falls between
            // them; the snapshot carries the last event id it reflects.
            auto sub = live_.events().subscribe();
            auto first = std::make_shared<std::string>(Event{0, "snapshot", live_.snapshot(clock_())}.sse());
            res.set_header("Cache-Control", "no-cache");
            res.set_chunked_content_provider(
                "text/event-stream", [this, sub, first](std::size_t, httplib::DataSink& sink) {
                    if (!first->empty()) {
                        if (!sink.write(first->data(), first->size()))
                            return false;
                        first->clear();
                    }
                    for (int idle = 0; !stopping_ && sink.is_writable();) {
                        if (auto e = sub->next(std::chrono::milliseconds(100))) {
                            const auto text = e->sse();
                            return sink.write(text.data(), text.size());
                        }
                        if (sub->closed())
                            break;
                        if (++idle >= 150) { // comment line every 15 s keeps proxies from timing out
                            static constexpr char ping[] = ": keepalive\n\n";
                            return sink.write(ping, sizeof ping - 1);
                        }
                    }
                    sink.done();
                    return false;
                });
        });
    }

    Station& live_;
    Clock clock_;
    httplib::Server srv_;
    std::thread thread_;
    std::atomic<bool> stopping_{false};
};

} // namespace adapt::station
