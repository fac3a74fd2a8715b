#include <adapt/timebase/clock.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace adapt::timebase;

namespace {

std::vector<PpsEvent> generate_events(const ClockModel& truth, std::int64_t first, int n, std::mt19937_64* rng) {
    std::normal_distribution<double> jitter(0.0, truth.jitter_sigma_s);
    std::vector<PpsEvent> out;
    for (int i = 0; i < n; ++i) {
        const std::int64_t gps = first + i;
        double local = truth.local_from_gps(static_cast<double>(gps));
        if (rng && truth.jitter_sigma_s > 0.0)
            local += jitter(*rng);
        out.push_back({gps, local});
    }
    return out;
}

} // namespace

TEST(DisciplineClock, ZeroOffsetAndDrift) {
    ClockModel truth;
    truth.epoch_gps_s = 500.0;
    const auto m = discipline_clock(generate_events(truth, 500, 10, nullptr));
    EXPECT_EQ(m.offset_s, 0.0);
    EXPECT_EQ(m.drift_ppm, 0.0);
    EXPECT_EQ(m.residual_rms_s, 0.0);
}

TEST(DisciplineClock, RecoversNoiselessAffineClock) {
    ClockModel truth;
    truth.offset_s = 3.2;
    truth.drift_ppm = 12.0;
    truth.epoch_gps_s = 1000.0;
    const auto m = discipline_clock(generate_events(truth, 1000, 60, nullptr));
    EXPECT_NEAR(m.offset_s, 3.2, 1e-9);
    EXPECT_NEAR(m.drift_ppm, 12.0, 1e-9 * 1e6 / 60.0);
    EXPECT_NEAR(m.gps_from_local(truth.local_from_gps(1030.25)), 1030.25, 1e-9);
}

TEST(DisciplineClock, JitterMonteCarloWithinThreeSigmaOverRootN) {
    ClockModel truth;
    truth.offset_s = -0.75;
    truth.drift_ppm = 4.0;
    truth.jitter_sigma_s = 1e-6;
    truth.epoch_gps_s = 2000.0;
    const int n = 120, runs = 200;
    std::mt19937_64 rng(99);
    double sum = 0.0, sum_sq = 0.0;
    for (int r = 0; r < runs; ++r) {
        const auto m = discipline_clock(generate_events(truth, 2000, n, &rng));
        const double err = m.offset_s - truth.offset_s;
        sum += err;
        sum_sq += err * err;
        EXPECT_NEAR(m.residual_rms_s, 1e-6, 0.3e-6);
    }
    const double bound = 3.0 * truth.jitter_sigma_s / std::sqrt(static_cast<double>(n));
    EXPECT_LT(std::sqrt(sum_sq / runs), bound);
    // Unbiased: the mean error shrinks with the number of runs.
    EXPECT_LT(std::abs(sum / runs), bound / std::sqrt(static_cast<double>(runs)) * 1.5);
}

TEST(DisciplineClock, NeedsTwoEvents) {
    const std::vector<PpsEvent> one{{10, 10.0}};
    EXPECT_THROW((void)discipline_clock(one), adapt::InsufficientDataError);
}

TEST(AssociatePps, FirstEdgeDefinesTheMapping) {
    const std::vector<double> edges{7.6, 8.6000004, 9.5999998, 11.6};
    const auto ev = associate_pps(edges, 100);
    ASSERT_EQ(ev.size(), 4u);
    EXPECT_EQ(ev[0].true_gps_s, 100);
    EXPECT_EQ(ev[2].true_gps_s, 102);
    EXPECT_EQ(ev[3].true_gps_s, 104);
}

TEST(WholeSecond, ExactSecondsPass) {
    const std::vector<double> ts{100.0, 101.0, 102.0};
    const auto r = validate_whole_second(ts, 1e-3);
    EXPECT_TRUE(r.pass);
    EXPECT_EQ(r.max_deviation_s, 0.0);
}

TEST(WholeSecond, ReportsDeviation) {
    const std::vector<double> ts{100.0003};
    const auto r = validate_whole_second(ts, 1e-3);
    EXPECT_TRUE(r.pass);
    EXPECT_NEAR(r.max_deviation_s, 300e-6, 1e-9);
    const std::vector<double> late{99.9985};
    EXPECT_FALSE(validate_whole_second(late, 1e-3).pass);
    EXPECT_NEAR(validate_whole_second(late, 1e-3).max_deviation_s, 1.5e-3, 1e-9);
}

TEST(WholeSecond, InvariantToIntegerShift) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> frac(-0.01, 0.01);
    std::vector<double> ts;
    for (int i = 0; i < 50; ++i)
        ts.push_back(1000.0 + i + frac(rng));
    const auto base = validate_whole_second(ts, 5e-3);
    for (double shift : {1.0, 17.0, -300.0}) {
        std::vector<double> moved = ts;
        for (auto& t : moved)
            t += shift;
        const auto r = validate_whole_second(moved, 5e-3);
        EXPECT_NEAR(r.max_deviation_s, base.max_deviation_s, 1e-9);
        EXPECT_EQ(r.pass, base.pass);
    }
}

TEST(WholeSecond, RejectsEmptyInput) {
    EXPECT_THROW((void)validate_whole_second(std::vector<double>{}, 1e-3), adapt::InsufficientDataError);
}

TEST(ApplyTimeOffset, ShiftsAndInverts) {
    std::vector<adapt::geo::TimestampedPose> traj(100);
    for (int i = 0; i < 100; ++i)
        traj[i].t = 1318000000.0 + i * 0.01;
    const auto same = apply_time_offset(traj, 0.0);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(same[i].t, traj[i].t);
    const auto fwd = apply_time_offset(traj, 0.25);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(fwd[i].t, traj[i].t + 0.25);
    const auto back = apply_time_offset(fwd, -0.25);
    for (int i = 0; i < 100; ++i)
        EXPECT_EQ(back[i].t, traj[i].t);
    EXPECT_THROW((void)apply_time_offset(traj, std::numeric_limits<double>::infinity()), adapt::DomainError);
}
