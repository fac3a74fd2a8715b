#pragma once

#include <adapt/analytics/metrics.hpp>
#include <adapt/analytics/segment.hpp>
#include <adapt/analytics/vectorize.hpp>
#include <adapt/downlink/payloads.hpp>
#include <adapt/downlink/session.hpp>
#include <adapt/downlink/thumbnail.hpp>
#include <adapt/flightsim/ins.hpp>
#include <adapt/flightsim/plan.hpp>
#include <adapt/flightsim/render.hpp>
#include <adapt/flightsim/scene.hpp>
#include <adapt/geo/area.hpp>
#include <adapt/geo/georegister.hpp>
#include <adapt/geo/io.hpp>
#include <adapt/station/station.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <fstream>
#include <thread>
#include <vector>

namespace adapt::flightsim {

namespace fs = std::filesystem;
namespace dl = downlink;

inline constexpr std::size_t kAnalyticsBudgetBytes = 20480;

struct MissionOptions {
    fs::path out_dir = "sim_out";
    std::string mission_id = "sim";
    std::size_t analytics_budget_bytes = kAnalyticsBudgetBytes;
    int segmenter_downsample = 2;
    InsNoise noise;
    dl::SessionConfig session;
    bool fsync = false;
    unsigned threads = 0;        ///< 0: one per hardware thread
    double telemetry_hz = 10.0;
    double diagnostics_period_s = 5.0;
    int sharpness_tile = 64;
};

/// What the payload computed for one image, before the downlink.
struct FrameProduct {
    std::uint64_t image_id = 0;
    double t_mission = 0.0;
    double t_gps = 0.0;
    double exposure_us = 0.0;
    double blur_px = 0.0;
    dl::AnalyticsPayload analytics;
    std::size_t geo_bytes = 0;
    bool over_budget = false;
    dl::ThumbnailPayload thumbnail;
    dl::HistogramPayload histogram;
    dl::SharpnessPayload sharpness;
    geo::TimestampedPose true_pose;
    geo::GeoPolygonSet truth;     ///< exact truth mask registered with the true pose
};

struct MissionResult {
    std::vector<FrameProduct> frames;
    dl::SessionResult session;
    nlohmann::json report;
    nlohmann::json summary;
    fs::path mission_dir;
    std::vector<geo::GeoPolygonSet> exported;  ///< as decoded by the station
};

namespace detail {

/// Vectorizes at growing tolerance until the georegistered encoding also
/// fits the budget. Pixel and geo encodings differ slightly in size, so the
/// pixel-space ladder alone is not enough.
inline void vectorize_within_budget(const analytics::SegMask& mask, const geo::CameraModel& cam,
                                    const geo::TimestampedPose& pose, const geo::EnuFrame& frame,
                                    std::size_t budget, FrameProduct& out) {
    const auto set = analytics::extract_contours(mask);
    for (double t = analytics::kInitialTolerancePx;; t *= 2) {
        const auto res = analytics::vectorize_at(set, mask, t);
        auto polys = analytics::scale_polygons(res.polygons, res.downsample);
        auto geo_set = geo::georegister_mask(cam, pose, frame, 0.0, polys, out.image_id);
        auto stream = dl::encode_geo_set(geo_set);
        const bool fits = res.encoded_size() <= budget && stream.size() <= budget;
        if (fits || t >= analytics::kMaxTolerancePx) {
            out.analytics = {out.image_id,
                             t,
                             res.min_iou(),
                             static_cast<std::uint32_t>(res.encoded_size()),
                             geo_set.horizon_clipped,
                             geo_set.above_horizon,
                             std::move(stream)};
            out.geo_bytes = out.analytics.geo_stream.size();
            out.over_budget = !fits;
            return;
        }
    }
}

inline std::uint32_t crc_of_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    const std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return dl::crc32_of(data);
}

} // namespace detail

/// Runs every onboard stage for each camera trigger. Frames are independent
/// and processed in parallel; the output order (and content) does not
/// depend on the thread count.
[[nodiscard]] inline std::vector<FrameProduct> process_frames(const MissionPlan& plan, const SimScene& scene,
                                                              std::span<const geo::TimestampedPose> truth,
                                                              const geo::Trajectory& ins,
                                                              const MissionOptions& opt, const SensorSpec& sensor = {}) {
    const auto triggers = trigger_times(plan, sensor);
    const analytics::ReferenceSegmenter segmenter(opt.segmenter_downsample);
    auto cam = sensor.camera(plan.decimation, plan.boresight());
    // Drop a trailing row or column so the segmenter's block size divides the frame.
    cam.width -= cam.width % segmenter.downsample();
    cam.height -= cam.height % segmenter.downsample();
    const RayTable rays(cam);
    std::vector<FrameProduct> out(triggers.size());

    const auto work = [&](std::size_t k) {
        FrameProduct& fp = out[k];
        const double t = triggers[k];
        const auto idx = static_cast<std::size_t>(std::llround(t * plan.ins_hz));
        fp.image_id = k;
        fp.t_mission = t;
        fp.t_gps = plan.t0_gps_s + t;
        fp.true_pose = truth[idx];
        fp.exposure_us = plan.exposure_at(t);
        const double speed = path_state(plan, t, sensor).velocity.norm();
        auto frame = render_frame(scene, rays, fp.true_pose, speed, fp.exposure_us);
        fp.blur_px = frame.blur_px;

        const auto mask = analytics::segment(segmenter, frame.image);
        const auto pose = geo::interpolate_pose(ins, fp.t_gps);
        detail::vectorize_within_budget(mask, cam, pose, scene.frame(), opt.analytics_budget_bytes, fp);

        const auto exact = analytics::vectorize_at(frame.truth, 0.0);
        fp.truth = geo::georegister_mask(cam, fp.true_pose, scene.frame(), 0.0, exact.polygons, fp.image_id);

        fp.thumbnail = dl::make_thumbnail(frame.image, fp.image_id);
        fp.histogram = {fp.image_id, analytics::histogram(frame.image)};
        fp.sharpness = {fp.image_id, analytics::sharpness(frame.image, opt.sharpness_tile,
                                                          static_cast<std::uint32_t>(std::lround(fp.exposure_us)))};
    };

    const unsigned n = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < std::min<std::size_t>(n, out.size()); ++w)
        pool.emplace_back([&] {
            for (std::size_t k; (k = next++) < out.size();) {
                try {
                    work(k);
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure)
                        failure = std::current_exception();
                    next = out.size();
                }
            }
        });
    for (auto& th : pool)
        th.join();
    if (failure)
        std::rethrow_exception(failure);
    return out;
}

/// Everything the payload hands to its downlink, in mission time.
[[nodiscard]] inline std::vector<dl::Emission> build_emissions(const MissionPlan& plan,
                                                               std::span<const FrameProduct> frames,
                                                               std::span<const geo::TimestampedPose> ins,
                                                               const MissionOptions& opt) {
    std::vector<dl::Emission> out;
    const auto gps_ns = [&](double t) { return dl::to_ns(plan.t0_gps_s + t); };
    const auto every = std::max<long>(1, std::lround(plan.ins_hz / opt.telemetry_hz));
    for (std::size_t i = 0; i < ins.size(); i += static_cast<std::size_t>(every)) {
        const double t = static_cast<double>(i) / plan.ins_hz;
        out.push_back({t, dl::MsgType::telemetry, gps_ns(t), dl::encode_telemetry(ins[i])});
    }
    std::size_t over = 0;
    for (const auto& f : frames) {
        out.push_back({f.t_mission, dl::MsgType::analytics, gps_ns(f.t_mission), dl::encode_analytics(f.analytics)});
        out.push_back({f.t_mission, dl::MsgType::sharpness, gps_ns(f.t_mission), dl::encode_sharpness(f.sharpness)});
        out.push_back({f.t_mission, dl::MsgType::histogram, gps_ns(f.t_mission), dl::encode_histogram(f.histogram)});
        out.push_back({f.t_mission, dl::MsgType::thumbnail, gps_ns(f.t_mission), dl::encode_thumbnail(f.thumbnail)});
    }
    const double end = ins.empty() ? 0.0 : static_cast<double>(ins.size() - 1) / plan.ins_hz;
    std::size_t done = 0;
    for (double t = 0.0; t <= end + 1e-9; t += opt.diagnostics_period_s) {
        while (done < frames.size() && frames[done].t_mission <= t) {
            over += frames[done].over_budget;
            ++done;
        }
        out.push_back({t, dl::MsgType::diagnostics, gps_ns(t),
                       dl::encode_diagnostics({{"frames_processed", std::to_string(done)},
                                               {"budget_overruns", std::to_string(over)}})});
    }
    return out;
}

/// Union of exported class polygons against the scene truth, both limited
/// to the union of image footprints, on the scene raster.
struct CoverageScore {
    double iou = 0.0;
    double footprint_m2 = 0.0;
    double exported_m2 = 0.0;
    double truth_m2 = 0.0;
};

[[nodiscard]] inline CoverageScore score_against_scene(const SimScene& scene, std::span<const geo::GeoPolygonSet> sets,
                                                       std::uint8_t cls = analytics::kFrozenWater) {
    auto footprint = scene.grid();
    auto exported = scene.grid();
    for (const auto& s : sets) {
        if (s.footprint.size() >= 4)
            footprint.paint(s.footprint);
        for (const auto& p : s.class_polygons)
            if (p.class_id == cls)
                exported.paint(p);
    }
    auto truth = scene.class_grid(cls);
    for (std::size_t k = 0; k < truth.cells().size(); ++k) {
        truth.cells()[k] &= footprint.cells()[k];
        exported.cells()[k] &= footprint.cells()[k];
    }
    return {geo::grid_iou(exported, truth, &footprint), footprint.area_m2(), exported.area_m2(), truth.area_m2()};
}

/// Full simulated sortie: trajectory, INS log, per-frame processing, the
/// downlink session into a ground station, and the output files
/// (ins.csv, truth.jsonl, summary.json, the station store).
[[nodiscard]] inline MissionResult run_mission(const MissionPlan& plan, const SimScene& scene,
                                               const dl::LinkProfile& link, MissionOptions opt = {}) {
    plan.validate();
    link.validate();
    fs::create_directories(opt.out_dir);
    const auto truth = generate_trajectory(plan, scene.frame());
    const auto ins_log = apply_ins_noise(truth, scene.frame(), opt.noise);
    const geo::Trajectory ins(ins_log);
    {
        std::ofstream f(opt.out_dir / "ins.csv");
        geo::write_ins_csv(f, ins_log);
        if (!f)
            throw IoError("cannot write " + (opt.out_dir / "ins.csv").string());
    }

    MissionResult res;
    res.frames = process_frames(plan, scene, truth, ins, opt);
    {
        std::ofstream f(opt.out_dir / "truth.jsonl");
        for (const auto& fp : res.frames) {
            const std::vector<geo::GeoPolygonSet> one{fp.truth};
            f << nlohmann::json{{"image_id", fp.image_id},
                                {"t_gps", fp.t_gps},
                                {"pose", station::pose_json(fp.true_pose)},
                                {"polygons", geo::to_geojson(one)}}
                     .dump()
              << '\n';
        }
        if (!f)
            throw IoError("cannot write " + (opt.out_dir / "truth.jsonl").string());
    }

    station::StationConfig sc;
    sc.root = opt.out_dir / "store";
    sc.mission_id = opt.mission_id;
    sc.fsync = opt.fsync;
    sc.ground_alt_m = scene.frame().origin().alt_m;
    fs::remove_all(sc.root / sc.mission_id);
    station::Station ground(sc);
    if (opt.session.spool_path.empty())
        opt.session.spool_path = (opt.out_dir / "payload.spool").string();
    fs::remove(opt.session.spool_path);
    res.session = dl::run_payload_session(build_emissions(plan, res.frames, ins_log, opt), link, ground, opt.session);
    res.report = ground.report(res.session.end_s);
    res.exported = ground.polygon_sets();
    res.mission_dir = ground.mission_dir();

    const auto score = score_against_scene(scene, res.exported);
    std::size_t over = 0;
    double max_blur = 0.0;
    for (const auto& f : res.frames) {
        over += f.over_budget;
        max_blur = std::max(max_blur, f.blur_px);
    }
    const auto log = res.mission_dir / station::kAnalyticsLog;
    res.summary = {{"plan", plan.to_json()},
                   {"scene", scene.config().to_json()},
                   {"link", link.to_json()},
                   {"ins_noise", opt.noise.to_json()},
                   {"frames", res.frames.size()},
                   {"budget_overruns", over},
                   {"max_blur_px", max_blur},
                   {"analytics_emitted", res.session.analytics_emitted},
                   {"analytics_outstanding", res.session.analytics_outstanding},
                   {"retransmissions", res.session.retransmissions},
                   {"spill_writes", res.session.spill_writes},
                   {"session_end_s", res.session.end_s},
                   {"coverage_iou", score.iou},
                   {"footprint_m2", score.footprint_m2},
                   {"analytics_log_crc32", fs::exists(log) ? detail::crc_of_file(log) : 0u},
                   {"report", res.report}};
    // Everything above depends only on the inputs, so equal seeds give equal hashes.
    const auto canonical = res.summary.dump();
    res.summary["summary_hash"] =
        dl::crc32_of(std::span(reinterpret_cast<const std::uint8_t*>(canonical.data()), canonical.size()));
    std::ofstream f(opt.out_dir / "summary.json");
    f << res.summary.dump(2) << '\n';
    if (!f)
        throw IoError("cannot write " + (opt.out_dir / "summary.json").string());
    return res;
}

} // namespace adapt::flightsim
