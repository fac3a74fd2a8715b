#include <adapt/station/replay.hpp>
#include <adapt/station/server.hpp>

#include <gtest/gtest.h>

#include <fstream>
#include <random>

using namespace adapt;
using namespace adapt::station;
namespace dl = adapt::downlink;

namespace {

fs::path fresh_root(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("adapt_station_" + name);
    fs::remove_all(p);
    return p;
}

StationConfig config_for(const fs::path& root, const std::string& id = "m1") {
    StationConfig c;
    c.root = root;
    c.mission_id = id;
    c.fsync = false;
    return c;
}

/// A square of side `d` degrees near Svalbard as the only class polygon.
geo::GeoPolygonSet square_set(std::uint64_t image_id, double lat = 78.0, double lon = 15.0, double d = 1e-4) {
    geo::GeoPolygonSet s;
    s.image_id = image_id;
    geo::GeoRing r{{lat, lon, 0}, {lat, lon + d, 0}, {lat + d, lon + d, 0}, {lat + d, lon, 0}, {lat, lon, 0}};
    s.class_polygons.push_back({1, r, {}});
    s.footprint = r;
    return s;
}

Frame analytics_frame(std::uint32_t seq, std::uint64_t image_id) {
    dl::AnalyticsPayload a;
    a.image_id = image_id;
    a.geo_stream = dl::encode_geo_set(square_set(image_id, 78.0 + 1e-3 * static_cast<double>(image_id)));
    return {MsgType::analytics, seq, image_id * 1000000000ull, dl::encode_analytics(a)};
}

Frame telemetry_frame(std::uint32_t seq, double t) {
    geo::TimestampedPose p;
    p.t = t;
    p.position = {78.0, 15.0, 30.0};
    return {MsgType::telemetry, seq, dl::to_ns(t), dl::encode_telemetry(p)};
}

bool acks(const std::vector<Frame>& replies, std::uint32_t seq) {
    for (const auto& r : replies)
        if (r.type == MsgType::command_ack) {
            const auto a = dl::decode_ack(r.payload);
            if (a.acked_type == MsgType::analytics && a.id == seq)
                return true;
        }
    return false;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<dl::Emission> analytics_sortie(double duration, double hz = 4.0) {
    std::vector<dl::Emission> out;
    for (int k = 0; k * 0.1 < duration; ++k) {
        const auto f = telemetry_frame(0, k * 0.1);
        out.push_back({k * 0.1, MsgType::telemetry, f.t_gps_ns, f.payload});
    }
    for (int k = 0; k / hz < duration; ++k) {
        const auto f = analytics_frame(0, static_cast<std::uint64_t>(k));
        out.push_back({k / hz, MsgType::analytics, f.t_gps_ns, f.payload});
    }
    return out;
}

} // namespace

TEST(Store, ReplayedFrameIsStoredOnceAndReacked) {
    Station s(config_for(fresh_root("dup")));
    const auto f = analytics_frame(0, 7);
    EXPECT_TRUE(acks(s.on_frame(f, 1.0), 0));
    EXPECT_TRUE(acks(s.on_frame(f, 2.0), 0));
    EXPECT_EQ(s.stored_analytics(), 1u);
    EXPECT_EQ(s.state().analytics.size(), 1u);
    EXPECT_EQ(dl::read_spool((s.mission_dir() / kAnalyticsLog).string()).frames.size(), 1u);
    EXPECT_EQ(s.state().link.duplicates[static_cast<int>(MsgType::analytics)], 1u);
}

TEST(Store, CommitsInSequenceOrderWhateverTheArrivalOrder) {
    const auto root = fresh_root("order");
    {
        Station a(config_for(root, "inorder"));
        for (std::uint32_t i = 0; i < 6; ++i)
            (void)a.on_frame(analytics_frame(i, i), 0.0);
    }
    {
        Station b(config_for(root, "shuffled"));
        for (std::uint32_t i : {3u, 1u, 5u, 0u, 4u, 2u, 1u})
            (void)b.on_frame(analytics_frame(i, i), 0.0);
        EXPECT_FALSE(fs::exists(b.mission_dir() / kPendingLog));
    }
    EXPECT_EQ(file_bytes(root / "inorder" / kAnalyticsLog), file_bytes(root / "shuffled" / kAnalyticsLog));
}

TEST(Store, AcknowledgedFramesSurviveRestartAndTornTail) {
    const auto root = fresh_root("crash");
    {
        Station s(config_for(root));
        for (std::uint32_t i : {0u, 1u, 2u, 4u}) // 4 waits behind the gap
            EXPECT_TRUE(acks(s.on_frame(analytics_frame(i, i), 0.0), i));
    }
    // A crash in the middle of the next append leaves half a record behind.
    {
        const auto b = dl::encode(analytics_frame(3, 3));
        std::ofstream out(root / "m1" / kAnalyticsLog, std::ios::binary | std::ios::app);
        const std::uint32_t n = static_cast<std::uint32_t>(b.size());
        const char len[4] = {char(n >> 24), char(n >> 16), char(n >> 8), char(n)};
        out.write(len, 4);
        out.write(reinterpret_cast<const char*>(b.data()), 11);
    }
    Station s(config_for(root));
    EXPECT_EQ(s.stored_analytics(), 4u);
    EXPECT_EQ(s.state().analytics.size(), 4u);
    EXPECT_TRUE(acks(s.on_frame(analytics_frame(3, 3), 1.0), 3));
    const auto log = dl::read_spool((root / "m1" / kAnalyticsLog).string());
    EXPECT_EQ(log.bad_records, 0u);
    ASSERT_EQ(log.frames.size(), 5u);
    for (std::uint32_t i = 0; i < 5; ++i)
        EXPECT_EQ(log.frames[i].seq, i);
}

TEST(Store, NoAckWithoutDurability) {
    Station s(config_for(fresh_root("nodisk")));
    s.inject_store_failures(1);
    EXPECT_FALSE(acks(s.on_frame(analytics_frame(0, 0), 0.0), 0));
    EXPECT_EQ(s.stored_analytics(), 0u);
    EXPECT_EQ(s.state().link.store_failures, 1u);
    EXPECT_TRUE(acks(s.on_frame(analytics_frame(0, 0), 2.0), 0)); // the retransmission lands
    EXPECT_EQ(s.stored_analytics(), 1u);
}

TEST(State, LateTelemetryIsInsertedWithoutMovingLatestPose) {
    Station s(config_for(fresh_root("pose")));
    (void)s.on_frame(telemetry_frame(0, 10.0), 0.0);
    (void)s.on_frame(telemetry_frame(1, 11.0), 0.0);
    (void)s.on_frame(telemetry_frame(2, 9.2), 0.0);
    const auto st = s.state();
    EXPECT_EQ(st.latest_pose->t, 11.0);
    ASSERT_EQ(st.track.size(), 3u);
    double prev = -1;
    for (const auto& [k, p] : st.track) {
        EXPECT_GT(p.t, prev);
        prev = p.t;
    }
    EXPECT_EQ(st.track.begin()->second.t, 9.2);
}

TEST(State, TrackIsDecimatedToKeyframes) {
    Station s(config_for(fresh_root("decimate")));
    for (int i = 0; i < 1000; ++i) // 10 s at 100 Hz
        (void)s.on_frame(telemetry_frame(static_cast<std::uint32_t>(i), i * 0.01), 0.0);
    EXPECT_EQ(s.state().track.size(), 20u);
    EXPECT_EQ(s.state().latest_pose->t, 9.99);
}

TEST(Export, EmptyMissionGivesEmptyCollectionAndZeroReport) {
    Station s(config_for(fresh_root("empty")));
    const auto g = s.export_geojson();
    EXPECT_EQ(g["type"], "FeatureCollection");
    EXPECT_TRUE(g["features"].empty());
    const auto r = s.report();
    EXPECT_EQ(r["analytics_frames"], 0);
    EXPECT_EQ(r["features"], 0);
    EXPECT_EQ(r["coverage_area_m2"], 0.0);
}

TEST(Export, OneSquareIsOneFeatureWithFivePointRing) {
    Station s(config_for(fresh_root("square")));
    (void)s.on_frame(analytics_frame(0, 0), 0.0);
    const auto g = s.export_geojson();
    ASSERT_EQ(g["features"].size(), 1u);
    const auto& f = g["features"][0];
    EXPECT_EQ(f["properties"]["class_id"], 1);
    EXPECT_EQ(f["properties"]["image_id"], 0);
    EXPECT_EQ(f["geometry"]["coordinates"][0].size(), 5u);
    // 1e-4 degrees at 78 N is about 11.2 m north by 2.3 m east.
    const double area = s.report()["class_area_m2"]["1"];
    EXPECT_NEAR(area, 11.17 * 2.33, 1.5);
}

TEST(Commands, OutOfRangeIsRejectedLocally) {
    Station s(config_for(fresh_root("cmdrange")));
    EXPECT_THROW(s.send_command(1000000, 0.0), ContractError);
    EXPECT_THROW(s.send_command(49, 0.0), ContractError);
    EXPECT_TRUE(s.tick(0.0).size() == 1); // heartbeat only
}

TEST(Commands, HealthyLinkAcksAndEchoes) {
    Station s(config_for(fresh_root("cmdok")));
    const auto id = s.send_command(500, 1.0);
    dl::LinkProfile p;
    p.bandwidth_bps = 1e6;
    p.latency_ms = 20;
    (void)dl::run_payload_session(analytics_sortie(5), p, s);
    const auto c = s.command(id);
    EXPECT_EQ(c->state, CommandState::acked);
    EXPECT_EQ(c->applied_value, 500u);
    EXPECT_EQ(s.state().diagnostics.at("max_exposure_us"), "500");
    ASSERT_TRUE(c->rtt_s);
    EXPECT_NEAR(*c->rtt_s, 0.04, 0.03);
}

TEST(Commands, SetDuringBlackoutIsPendingThenAcked) {
    Station s(config_for(fresh_root("cmdblack")));
    const auto id = s.send_command(500, 12.0);
    dl::LinkProfile p;
    p.bandwidth_bps = 1e6;
    p.blackouts = {{10.0, 25.0}};
    struct Probe : dl::GroundEndpoint {
        Station& s;
        std::uint32_t id;
        std::optional<CommandState> at_20;
        Probe(Station& st, std::uint32_t i) : s(st), id(i) {}
        std::vector<Frame> on_frame(const Frame& f, double now) override { return s.on_frame(f, now); }
        std::vector<Frame> tick(double now) override {
            if (!at_20 && now >= 20.0)
                at_20 = s.command(id)->state;
            return s.tick(now);
        }
    } probe(s, id);
    (void)dl::run_payload_session(analytics_sortie(40), p, probe);
    EXPECT_EQ(probe.at_20, CommandState::pending);
    EXPECT_EQ(s.command(id)->state, CommandState::acked);
    EXPECT_EQ(s.command(id)->applied_value, 500u);
}

TEST(Commands, IdsDoNotRepeatAfterRestart) {
    const auto root = fresh_root("cmdids");
    std::uint32_t first = 0;
    {
        Station s(config_for(root));
        first = s.send_command(700, 0.0);
    }
    Station s(config_for(root));
    EXPECT_EQ(s.command(first)->state, CommandState::timeout);
    EXPECT_GT(s.send_command(800, 0.0), first);
}

TEST(EndToEnd, BlackoutStoreMatchesCleanRun) {
    const auto root = fresh_root("e2e");
    dl::LinkProfile clean;
    clean.bandwidth_bps = 1e6;
    clean.latency_ms = 30;
    clean.drop_probability = 0.01;
    auto dark = clean;
    dark.blackouts = {{45.0, 75.0}};
    const auto emissions = analytics_sortie(120);
    std::size_t emitted = 0;
    for (const auto& e : emissions)
        emitted += e.type == MsgType::analytics;
    Station a(config_for(root, "clean"));
    Station b(config_for(root, "dark"));
    dl::SessionConfig cfg;
    cfg.spool_path = (root / "payload_spool").string();
    const auto ra = dl::run_payload_session(emissions, clean, a, cfg);
    const auto rb = dl::run_payload_session(emissions, dark, b, cfg);
    EXPECT_EQ(ra.analytics_outstanding, 0u);
    EXPECT_EQ(rb.analytics_outstanding, 0u);
    EXPECT_EQ(a.stored_analytics(), emitted);
    EXPECT_EQ(b.stored_analytics(), emitted);
    EXPECT_GT(rb.retransmissions, 0u);
    EXPECT_EQ(file_bytes(root / "clean" / kAnalyticsLog), file_bytes(root / "dark" / kAnalyticsLog));
    EXPECT_EQ(a.export_geojson(), b.export_geojson());

    // The index rebuilt on restart matches the live one.
    const auto live = b.export_geojson();
    Station again(config_for(root, "dark"));
    EXPECT_EQ(again.export_geojson(), live);
    EXPECT_EQ(again.state().track.size(), b.state().track.size());
}

TEST(Http, QueriesCommandsAndStream) {
    const auto root = fresh_root("http");
    {
        Station other(config_for(root, "old"));
        (void)other.on_frame(analytics_frame(0, 1), 0.0);
    }
    Station s(config_for(root, "live"));
    StationServer server(s, [] { return 5.0; });
    const int port = server.start("127.0.0.1", 0);
    httplib::Client cli("127.0.0.1", port);

    auto r = cli.Get("/missions");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 200);
    auto missions = json::parse(r->body);
    ASSERT_EQ(missions.size(), 2u);
    EXPECT_EQ(missions[0]["id"], "live");
    EXPECT_EQ(missions[1]["id"], "old");
    EXPECT_EQ(missions[1]["analytics_frames"], 1);

    r = cli.Get("/missions/old/export.geojson");
    ASSERT_TRUE(r);
    EXPECT_EQ(json::parse(r->body)["features"].size(), 1u);
    EXPECT_EQ(cli.Get("/missions/nope/export.geojson")->status, 404);
    EXPECT_EQ(cli.Get("/missions/old/report")->status, 200);

    r = cli.Post("/command/exposure", R"({"exposure_us": 500})", "application/json");
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, 202);
    EXPECT_EQ(json::parse(r->body)["state"], "pending");
    EXPECT_EQ(cli.Post("/command/exposure", R"({"exposure_us": 1000000})", "application/json")->status, 400);
    EXPECT_EQ(cli.Post("/command/exposure", "not json", "application/json")->status, 400);
    EXPECT_EQ(json::parse(cli.Get("/commands")->body).size(), 1u);

    // Stream: a snapshot first, then live updates in ingest order.
    std::string received;
    std::atomic<bool> done{false};
    std::thread reader([&] {
        httplib::Client sc("127.0.0.1", port);
        sc.set_read_timeout(5, 0);
        (void)sc.Get("/stream", [&](const char* data, std::size_t n) {
            received.append(data, n);
            return received.find("event: analytics") == std::string::npos;
        });
        done = true;
    });
    for (int i = 0; i < 100 && received.find("event: snapshot") == std::string::npos; ++i)
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    (void)s.on_frame(telemetry_frame(0, 1.0), 5.0);
    (void)s.on_frame(analytics_frame(0, 2), 5.0);
    reader.join();
    EXPECT_TRUE(done);
    const auto snap = received.find("event: snapshot");
    const auto pose = received.find("event: pose");
    const auto ana = received.find("event: analytics");
    ASSERT_NE(snap, std::string::npos);
    ASSERT_NE(pose, std::string::npos);
    ASSERT_NE(ana, std::string::npos);
    EXPECT_LT(snap, pose);
    EXPECT_LT(pose, ana);
    server.stop();
}

TEST(Downlink, TcpListenerIngestsAndAcks) {
    const auto root = fresh_root("tcp");
    Station s(config_for(root));
    DownlinkListener listener(s, [] { return 0.0; });
    const int port = listener.start("127.0.0.1", 0);

    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    ::inet_pton(AF_INET, "127.0.0.1", &addr.sin_addr);
    ASSERT_EQ(::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr), 0);
    auto bytes = dl::encode(telemetry_frame(0, 1.0));
    const auto a = dl::encode(analytics_frame(0, 4));
    bytes.insert(bytes.end(), a.begin(), a.end());
    ASSERT_EQ(::send(fd, bytes.data(), bytes.size(), 0), static_cast<ssize_t>(bytes.size()));

    dl::StreamDecoder dec;
    bool acked = false;
    timeval tv{5, 0};
    ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
    std::vector<std::uint8_t> buf(4096);
    while (!acked) {
        const auto n = ::recv(fd, buf.data(), buf.size(), 0);
        ASSERT_GT(n, 0);
        acked = acks(dec.feed(std::span(buf.data(), static_cast<std::size_t>(n))), 0);
    }
    ::close(fd);
    listener.stop();
    EXPECT_EQ(s.stored_analytics(), 1u);
    EXPECT_TRUE(s.state().latest_pose.has_value());
}

TEST(Replay, CaptureRebuildsAnIdenticalStore) {
    const auto root = fresh_root("replay");
    {
        Station live(config_for(root, "live"));
        std::vector<std::uint32_t> order{2, 0, 1, 1, 4, 3, 0};
        double t = 0;
        for (auto i : order) {
            t += 0.1;
            (void)live.on_frame(telemetry_frame(i, t), t);
            (void)live.on_frame(analytics_frame(i, i), t);
        }
    }
    // A torn final record is skipped, not fatal.
    {
        std::ofstream f(root / "live" / kCaptureLog, std::ios::binary | std::ios::app);
        f.write("\xAD\x47\x01", 3);
    }
    const auto cap = read_capture(root / "live" / kCaptureLog);
    EXPECT_EQ(cap.frames.size(), 14u);
    EXPECT_EQ(cap.counters.framing_errors, 1u);
    for (double speed : {0.0, 10.0}) {
        const auto id = speed > 0 ? std::string("fast") : std::string("instant");
        Station again(config_for(root, id));
        EXPECT_EQ(replay_capture(again, cap.frames, speed), cap.frames.size());
        const auto read = [](const fs::path& p) {
            std::ifstream in(p, std::ios::binary);
            return std::string(std::istreambuf_iterator<char>(in), {});
        };
        EXPECT_EQ(read(root / id / kAnalyticsLog), read(root / "live" / kAnalyticsLog));
        EXPECT_EQ(again.stored_analytics(), 5u);
    }
}
