#include "doctest.h"

#include "earstudy/attention.h"
#include "earstudy/errors.h"
#include "earstudy/rng.h"

#include <cmath>
#include <numbers>

using namespace earstudy;

namespace {

std::vector<EarSample> regular(const std::vector<double>& values, double fps, double t0 = 0.0) {
    std::vector<EarSample> out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.push_back({t0 + static_cast<double>(i) / fps, values[i]});
    }
    return out;
}

AttentionConfig with_c(double c) {
    AttentionConfig cfg;
    cfg.threshold_c = c;
    return cfg;
}

} // namespace

TEST_CASE("worked Riemann sum example") {
    const EarSeries s("c", regular({0.30, 0.15, 0.10, 0.25}, 2.0), 2.0);
    const auto r = integrate_attention(s, with_c(0.2));
    CHECK(r.Lambda == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(r.reading_time_s == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.n_samples == 4);
    CHECK(r.T_s == doctest::Approx(2.0));
}

TEST_CASE("no sub-threshold samples gives zero") {
    const EarSeries s("c", regular({0.3, 0.31, 0.29}, 5.0), 5.0);
    const auto r = integrate_attention(s, with_c(0.2));
    CHECK(r.Lambda == 0.0);
    CHECK(r.reading_time_s == 0.0);
}

TEST_CASE("a gap contributes nothing") {
    auto samples = regular({0.30, 0.15}, 2.0);
    auto tail = regular({0.10, 0.25}, 2.0, 10.0);
    samples.insert(samples.end(), tail.begin(), tail.end());
    const EarSeries s("c", samples, 2.0);
    const auto r = integrate_attention(s, with_c(0.2));
    CHECK(r.Lambda == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(r.n_gaps == 1);
    CHECK(s.gaps(3.0).size() == 1);
}

TEST_CASE("series validation") {
    CHECK_THROWS_AS(EarSeries("c", {{0.0, 0.2}, {0.0, 0.2}}, 2.0), StructuralError);
    CHECK_THROWS_AS(EarSeries("c", {{0.0, -0.1}}, 2.0), DataError);
    CHECK_THROWS_AS(EarSeries("c", {{0.0, 0.1}}, 0.0), ConfigError);
    const EarSeries empty("c", {}, 2.0);
    CHECK_THROWS_AS(integrate_attention(empty, {}), DataError);
}

TEST_CASE("log level") {
    AttentionConfig cfg;
    CHECK(log_level(1.0, cfg).value == 0.0);
    CHECK(log_level(std::numbers::e, cfg).value == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(log_level(0.0, cfg, "conf-x"), DomainError);
    try {
        log_level(0.0, cfg, "conf-x");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("conf-x") != std::string::npos);
    }
    cfg.floor_policy = LambdaFloorPolicy::epsilon_floor;
    const auto floored = log_level(0.0, cfg);
    CHECK(floored.floored);
    CHECK(floored.value == doctest::Approx(std::log(cfg.floor_value)));
}

TEST_CASE("first differences") {
    CHECK(delta_series(std::vector<double>{1, 1, 1}) == std::vector<double>{0, 0});
    const auto d = delta_series(std::vector<double>{0, 0.5, 0.2});
    CHECK(d[0] == doctest::Approx(0.5));
    CHECK(d[1] == doctest::Approx(-0.3));
    CHECK_THROWS_AS(delta_series(std::vector<double>{1.0}), InsufficientDataError);
}

TEST_CASE("differencing a cumulative sum recovers the increments") {
    Rng rng(3);
    std::vector<double> inc(20);
    std::vector<double> cum(21, 0.0);
    for (std::size_t i = 0; i < inc.size(); ++i) {
        inc[i] = rng.normal();
        cum[i + 1] = cum[i] + inc[i];
    }
    const auto d = delta_series(cum);
    for (std::size_t i = 0; i < inc.size(); ++i) {
        CHECK(d[i] == doctest::Approx(inc[i]).epsilon(1e-12));
    }
}

TEST_CASE("benchmark variables") {
    CHECK(count_questions("A? B? C.") == 2);
    const SpeakerSegments single("c", {{0, 300, SpeakerSegment::Speaker::chair}});
    const auto b = benchmark_variables("A? B? C.", single, 0.0, 300.0);
    CHECK(b.n_questions_log == doctest::Approx(std::log(2.0)));
    CHECK(b.duration_chair_speech_log == doctest::Approx(std::log(300.0)));
    CHECK(b.duration_qa_log == doctest::Approx(std::log(300.0)));

    const SpeakerSegments mixed("c", {{0, 100, SpeakerSegment::Speaker::chair},
                                      {100, 160, SpeakerSegment::Speaker::reporter},
                                      {160, 400, SpeakerSegment::Speaker::chair}});
    CHECK(mixed.chair_speech_s() == doctest::Approx(340.0));
    CHECK_THROWS_AS(benchmark_variables("no questions.", mixed, 0, 400), DomainError);
    const SpeakerSegments reporters("c", {{0, 10, SpeakerSegment::Speaker::reporter}});
    CHECK_THROWS_AS(benchmark_variables("?", reporters, 0, 400), DomainError);
}

TEST_CASE("segments CSV parsing") {
    const auto s = parse_segments_csv("start_s,end_s,speaker\n0,100,chair\n100,160,reporter\n", "mem", "c");
    CHECK(s.segments().size() == 2);
    CHECK(s.chair_speech_s() == doctest::Approx(100.0));
    CHECK_THROWS_AS(parse_segments_csv("start_s,end_s,speaker\n0,100,moderator\n", "mem", "c"), DataError);
}

TEST_CASE("monotone in the threshold and bounded") {
    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(200);
        for (auto& x : v) {
            x = rng.uniform(0.0, 0.4);
        }
        const double fps = rng.uniform(1.0, 30.0);
        const EarSeries s("c", regular(v, fps), fps);
        double prev_L = -1;
        double prev_rt = -1;
        for (double c = 0.05; c <= 0.4; c += 0.05) {
            const auto r = integrate_attention(s, with_c(c));
            CHECK(r.Lambda >= prev_L);
            CHECK(r.reading_time_s >= prev_rt);
            CHECK(r.Lambda <= c * r.reading_time_s + 1e-12);
            CHECK(r.reading_time_s <= r.observed_time_s + 1e-12);
            CHECK(r.observed_time_s <= r.T_s + 1e-9);
            prev_L = r.Lambda;
            prev_rt = r.reading_time_s;
        }
    }
}

TEST_CASE("fps estimate uses the median spacing") {
    auto samples = regular({0.3, 0.3, 0.3, 0.3, 0.3}, 4.0);
    samples.push_back({100.0, 0.3});
    CHECK(estimate_fps(samples) == doctest::Approx(4.0));
}
