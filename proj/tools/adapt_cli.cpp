// adapt: command-line front end for the payload data path.
//
//   adapt simulate  --plan plan.json --scene scene.json --link link.json --out DIR
//   adapt calibrate --sfm poses.txt --ins ins.csv --times times.csv --out calib.json
//   adapt vectorize --mask mask.png --budget 20480
//   adapt serve     --root DIR --mission ID [--downlink-port N] [--replay live.log]
//   adapt replay    --capture live.log --root DIR --mission ID [--speed 10]
//
// Exit codes: 0 success, 2 configuration error, 3 input data error,
// 4 pipeline error. ADAPT_DATA_DIR sets the default data directory.

#include <adapt/analytics/vectorize.hpp>
#include <adapt/annotate/labels.hpp>
#include <adapt/calib/calibrate.hpp>
#include <adapt/calib/io.hpp>
#include <adapt/flightsim/mission.hpp>
#include <adapt/geo/io.hpp>
#include <adapt/station/replay.hpp>
#include <adapt/station/server.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <iostream>

using namespace adapt;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kConfig = 2, kData = 3, kPipeline = 4 };

/// Failure tagged with the exit code of the stage that raised it.
struct StageError : std::runtime_error {
    Exit code;
    StageError(Exit c, const std::string& what) : std::runtime_error(what), code(c) {}
};

template <typename Fn>
auto stage(Exit code, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(code, e.what());
    }
}

fs::path data_dir() {
    const char* env = std::getenv("ADAPT_DATA_DIR");
    return env && *env ? fs::path(env) : fs::path("adapt-data");
}

void require_file(const std::string& path, const char* what) {
    if (!fs::is_regular_file(path))
        throw StageError(kConfig, std::string(what) + " '" + path + "' does not exist");
}

std::atomic<bool> g_stop{false};

void wait_for_signal() {
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    while (!g_stop)
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void emit(const json& summary, bool as_json, const std::string& human) {
    if (as_json)
        std::cout << summary.dump() << '\n';
    else
        std::cout << human << '\n';
}

// ---- simulate ----

struct SimulateArgs {
    std::string plan, scene, link, out, mission_id = "sim";
    bool ins_noise = false, fsync = false;
    unsigned threads = 0;
};

int run_simulate(const SimulateArgs& a, bool as_json) {
    const auto plan = stage(kConfig, [&] {
        if (a.plan.empty())
            return flightsim::MissionPlan{};
        require_file(a.plan, "plan");
        return flightsim::MissionPlan::load(a.plan);
    });
    const auto scene_cfg = stage(kConfig, [&] {
        if (a.scene.empty())
            return flightsim::SceneConfig{};
        require_file(a.scene, "scene");
        return flightsim::SceneConfig::load(a.scene);
    });
    const auto link = stage(kConfig, [&] {
        if (a.link.empty())
            return downlink::LinkProfile{};
        require_file(a.link, "link profile");
        return downlink::LinkProfile::load(a.link);
    });
    flightsim::MissionOptions opt;
    opt.out_dir = a.out.empty() ? data_dir() / a.mission_id : fs::path(a.out);
    opt.mission_id = a.mission_id;
    opt.noise.enabled = a.ins_noise;
    opt.fsync = a.fsync;
    opt.threads = a.threads;
    if (!station::valid_mission_id(opt.mission_id))
        throw StageError(kConfig, "invalid mission id '" + opt.mission_id + "'");
    const auto res = stage(kPipeline, [&] {
        const flightsim::SimScene scene(scene_cfg);
        return flightsim::run_mission(plan, scene, link, opt);
    });
    auto s = res.summary;
    s["out_dir"] = opt.out_dir.string();
    s["mission_dir"] = res.mission_dir.string();
    emit(s, as_json,
         "simulated " + std::to_string(res.frames.size()) + " frames; " +
             std::to_string(res.report["analytics_frames"].get<std::size_t>()) + " analytics stored; coverage IoU " +
             std::to_string(s["coverage_iou"].get<double>()) + "; outputs in " + opt.out_dir.string());
    return res.session.analytics_outstanding == 0 ? kOk : kPipeline;
}

// ---- calibrate ----

struct CalibrateArgs {
    std::string sfm, ins, times, out;
    double window = 0.5;
};

int run_calibrate(const CalibrateArgs& a, bool as_json) {
    stage(kConfig, [&] {
        require_file(a.sfm, "SfM pose file");
        require_file(a.ins, "INS log");
        require_file(a.times, "capture-time table");
        if (!(a.window > 0 && a.window <= calib::kMaxOffsetWindowS))
            throw StageError(kConfig, "--window must be in (0, 2] s");
        return 0;
    });
    auto [poses, traj] = stage(kData, [&] {
        std::ifstream in(a.sfm);
        auto p = calib::read_sfm_poses(in);
        calib::join_capture_times(p, util::CsvTable::load(a.times));
        return std::pair{std::move(p), geo::load_ins_csv(a.ins)};
    });
    const auto result = stage(kPipeline, [&] {
        geo::GeodeticPosition origin = traj[0].position;
        calib::CalibrationOptions opt;
        opt.window_s = a.window;
        return calib::calibrate(poses, traj, geo::EnuFrame(origin), opt);
    });
    auto j = calib::to_json(result);
    j["enu_origin"] = {{"lat_deg", traj[0].position.lat_deg},
                       {"lon_deg", traj[0].position.lon_deg},
                       {"alt_m", traj[0].position.alt_m}};
    if (!a.out.empty()) {
        std::ofstream f(a.out);
        f << j.dump(2) << '\n';
        if (!f)
            throw StageError(kData, "cannot write '" + a.out + "'");
    }
    const auto bore = result.boresight.log() * geo::kRadToDeg;
    emit(j, as_json,
         "time offset " + std::to_string(result.time_offset_s * 1e3) + " ms; scale " +
             std::to_string(result.similarity.scale) + "; boresight rotation vector (deg) " +
             std::to_string(bore.x()) + ", " + std::to_string(bore.y()) + ", " + std::to_string(bore.z()) +
             "; attitude RMS " + std::to_string(result.attitude_rms_deg) + " deg");
    for (const auto& w : result.warnings)
        std::cerr << "warning: " << w << '\n';
    return kOk;
}

// ---- vectorize ----

struct VectorizeArgs {
    std::string mask, out;
    std::size_t budget = flightsim::kAnalyticsBudgetBytes;
    int downsample = 1;
};

analytics::SegMask mask_from_png(const std::string& path, int downsample) {
    const auto img = analytics::read_png(path);
    analytics::SegMask m(img.width, img.height, analytics::kBackground, downsample);
    if (img.channels == 1) {
        m.classes = img.pixels;
        return m;
    }
    // RGB label rendering: map colours through the default table.
    const auto table = annotate::ColorTable::defaults();
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
        const annotate::Rgb c{img.pixels[3 * i], img.pixels[3 * i + 1], img.pixels[3 * i + 2]};
        const auto id = table.lookup(c);
        if (!id)
            throw ParseError("pixel " + std::to_string(i) + " has a colour outside the class table");
        m.classes[i] = *id;
    }
    return m;
}

int run_vectorize(const VectorizeArgs& a, bool as_json) {
    stage(kConfig, [&] {
        require_file(a.mask, "mask");
        if (a.budget < analytics::kMinBudgetBytes)
            throw StageError(kConfig, "--budget must be at least " + std::to_string(analytics::kMinBudgetBytes));
        if (a.downsample < 1)
            throw StageError(kConfig, "--downsample must be at least 1");
        return 0;
    });
    const auto mask = stage(kData, [&] { return mask_from_png(a.mask, a.downsample); });
    analytics::VectorizeResult res;
    bool fits = true;
    try {
        res = analytics::vectorize(mask, a.budget);
    } catch (const analytics::BudgetError& e) {
        res = e.best_effort();
        fits = false;
    } catch (const std::exception& e) {
        throw StageError(kPipeline, e.what());
    }
    if (!a.out.empty()) {
        std::ofstream f(a.out, std::ios::binary);
        f.write(reinterpret_cast<const char*>(res.encoded.data()), static_cast<std::streamsize>(res.encoded.size()));
        if (!f)
            throw StageError(kData, "cannot write '" + a.out + "'");
    }
    json iou = json::object();
    for (const auto& c : res.iou)
        iou[std::to_string(c.class_id)] = c.iou;
    const json j{{"width", res.width},     {"height", res.height},          {"downsample", res.downsample},
                 {"bytes", res.encoded_size()}, {"budget", a.budget},      {"fits", fits},
                 {"tolerance_px", res.tolerance_px}, {"rings", res.rings.size()}, {"iou", iou},
                 {"min_iou", res.min_iou()}};
    emit(j, as_json,
         std::to_string(res.encoded_size()) + " bytes at " + std::to_string(res.tolerance_px) +
             " px tolerance; min IoU " + std::to_string(res.min_iou()) + (fits ? "" : " (over budget)"));
    if (!fits)
        std::cerr << "error: mask does not fit " << a.budget << " bytes even at the largest tolerance\n";
    return fits ? kOk : kPipeline;
}

// ---- serve / replay ----

struct StationArgs {
    std::string root, mission = "live", host = "127.0.0.1", capture;
    int port = 8080;
    int downlink_port = -1;
    double speed = 0.0;
    double ground_alt_m = 0.0;
    bool fsync = true;
};

station::StationConfig station_config(const StationArgs& a) {
    if (!station::valid_mission_id(a.mission))
        throw StageError(kConfig, "invalid mission id '" + a.mission + "'");
    station::StationConfig c;
    c.root = a.root.empty() ? data_dir() : fs::path(a.root);
    c.mission_id = a.mission;
    c.fsync = a.fsync;
    c.ground_alt_m = a.ground_alt_m;
    return c;
}

int run_serve(const StationArgs& a, bool as_json) {
    const auto cfg = station_config(a);
    if (!a.capture.empty())
        require_file(a.capture, "capture");
    const auto capture = stage(kData, [&] {
        return a.capture.empty() ? station::Capture{} : station::read_capture(a.capture);
    });
    auto live = stage(kData, [&] { return std::make_unique<station::Station>(cfg); });
    const auto t0 = std::chrono::steady_clock::now();
    const auto clock = [t0] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    station::StationServer http(*live, clock);
    const int port = stage(kConfig, [&] { return http.start(a.host, a.port); });
    std::unique_ptr<station::DownlinkListener> listener;
    int dport = -1;
    if (a.downlink_port >= 0) {
        listener = std::make_unique<station::DownlinkListener>(*live, clock);
        dport = stage(kConfig, [&] { return listener->start(a.host, a.downlink_port); });
    }
    std::thread replayer;
    if (!capture.frames.empty())
        replayer = std::thread([&] { station::replay_capture(*live, capture.frames, a.speed, &g_stop, clock); });
    emit({{"http", a.host + ":" + std::to_string(port)},
          {"downlink", dport >= 0 ? json(a.host + ":" + std::to_string(dport)) : json(nullptr)},
          {"root", cfg.root.string()},
          {"mission", cfg.mission_id},
          {"replay_frames", capture.frames.size()}},
         as_json, "station API on http://" + a.host + ":" + std::to_string(port) + " (mission " + cfg.mission_id + ")");
    std::cout.flush();
    wait_for_signal();
    if (replayer.joinable())
        replayer.join();
    if (listener)
        listener->stop();
    http.stop();
    return kOk;
}

int run_replay(const StationArgs& a, bool as_json) {
    require_file(a.capture, "capture");
    if (a.speed < 0)
        throw StageError(kConfig, "--speed must be non-negative");
    const auto cfg = station_config(a);
    const auto capture = stage(kData, [&] { return station::read_capture(a.capture); });
    const auto report = stage(kPipeline, [&] {
        station::Station s(cfg);
        station::replay_capture(s, capture.frames, a.speed);
        return s.report();
    });
    auto j = report;
    j["frames_replayed"] = capture.frames.size();
    j["crc_errors"] = capture.counters.crc_errors;
    j["framing_errors"] = capture.counters.framing_errors;
    j["mission_dir"] = (cfg.root / cfg.mission_id).string();
    emit(j, as_json,
         "replayed " + std::to_string(capture.frames.size()) + " frames; " +
             std::to_string(report["analytics_frames"].get<std::size_t>()) + " analytics in " +
             (cfg.root / cfg.mission_id).string());
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ADAPT payload data path: simulate, calibrate, vectorize, serve, replay"};
    app.require_subcommand(1);
    bool as_json = false;
    app.add_flag("--json", as_json, "Print a machine-readable JSON summary on stdout");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Run a simulated sortie end to end");
    s->add_option("--plan", sim.plan, "Mission plan JSON (defaults built in)");
    s->add_option("--scene", sim.scene, "Scene JSON (defaults built in)");
    s->add_option("--link", sim.link, "Link profile JSON (default: unlimited, lossless)");
    s->add_option("--out", sim.out, "Output directory (default: $ADAPT_DATA_DIR/<mission>)");
    s->add_option("--mission", sim.mission_id, "Mission id for the station store");
    s->add_option("--threads", sim.threads, "Frame-processing threads (0: all cores)");
    s->add_flag("--ins-noise", sim.ins_noise, "Add INS noise (2 cm, 0.02 deg) to the payload's pose log");
    s->add_flag("--fsync", sim.fsync, "fsync every station store write");

    CalibrateArgs cal;
    auto* c = app.add_subcommand("calibrate", "Boresight, time offset and SfM similarity from a calibration flight");
    c->add_option("--sfm", cal.sfm, "SfM poses: image qw qx qy qz tx ty tz")->required();
    c->add_option("--ins", cal.ins, "INS log CSV")->required();
    c->add_option("--times", cal.times, "Capture times CSV (image_name,t_gps_s)")->required();
    c->add_option("--window", cal.window, "Offset search half-width, seconds");
    c->add_option("--out", cal.out, "Write the calibration JSON here");

    VectorizeArgs vec;
    auto* v = app.add_subcommand("vectorize", "Vectorize a class mask under a byte budget");
    v->add_option("--mask", vec.mask, "Mask PNG: class ids (gray) or label colours (RGB)")->required();
    v->add_option("--budget", vec.budget, "Byte budget for the encoded polygons");
    v->add_option("--downsample", vec.downsample, "Mask pixels per source pixel, recorded in the result");
    v->add_option("--out", vec.out, "Write the encoded polygon stream here");

    StationArgs srv;
    auto* sv = app.add_subcommand("serve", "Serve the station API for a live or replayed mission");
    sv->add_option("--root", srv.root, "Store root (default: $ADAPT_DATA_DIR)");
    sv->add_option("--mission", srv.mission, "Live mission id");
    sv->add_option("--host", srv.host, "Bind address");
    sv->add_option("--port", srv.port, "HTTP port (0: any free port)");
    sv->add_option("--downlink-port", srv.downlink_port, "Accept the payload downlink over TCP on this port");
    sv->add_option("--replay", srv.capture, "Replay this capture into the live mission");
    sv->add_option("--speed", srv.speed, "Replay speed factor (0: as fast as possible)");
    sv->add_flag("!--no-fsync", srv.fsync, "Skip fsync on store writes");
    sv->add_option("--ground-alt", srv.ground_alt_m, "Ground altitude (m) given to decoded polygons");

    StationArgs rep;
    auto* r = app.add_subcommand("replay", "Re-drive a station from a recorded downlink capture");
    r->add_option("--capture", rep.capture, "Capture file (a mission's live.log)")->required();
    r->add_option("--root", rep.root, "Store root (default: $ADAPT_DATA_DIR)");
    r->add_option("--mission", rep.mission, "Mission id to build")->required();
    r->add_option("--speed", rep.speed, "Speed factor (0: as fast as possible)");
    r->add_flag("!--no-fsync", rep.fsync, "Skip fsync on store writes");
    r->add_option("--ground-alt", rep.ground_alt_m, "Ground altitude (m) given to decoded polygons");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*s)
            return run_simulate(sim, as_json);
        if (*c)
            return run_calibrate(cal, as_json);
        if (*v)
            return run_vectorize(vec, as_json);
        if (*sv)
            return run_serve(srv, as_json);
        if (*r)
            return run_replay(rep, as_json);
    } catch (const StageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kPipeline;
    }
    return kOk;
}
