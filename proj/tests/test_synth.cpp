#include "doctest.h"

#include "earstudy/attention.h"
#include "earstudy/csv.h"
#include "earstudy/errors.h"
#include "earstudy/landmark_io.h"
#include "earstudy/synth.h"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace earstudy;
using namespace earstudy::synth;
namespace fs = std::filesystem;

namespace {

ScenarioSpec one_episode() {
    ScenarioSpec s;
    s.fps = 10.0;
    s.conference_length_s = 60.0;
    s.baseline_ear = 0.3;
    s.reading_episodes = {{10.0, 40.0, 0.15}};
    return s;
}

std::string slurp_dir(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file()) {
            files.push_back(e.path());
        }
    }
    std::sort(files.begin(), files.end());
    std::string all;
    for (const auto& f : files) {
        all += fs::relative(f, dir).string() + "\n" + csv::read_text_file(f);
    }
    return all;
}

} // namespace

TEST_CASE("analytic attention of one 30 s episode") {
    const auto truth = build_ground_truth(one_episode());
    CHECK(truth.analytic_lambda(0.2) == doctest::Approx(4.5).epsilon(1e-12));
    CHECK(truth.analytic_reading_time(0.2) == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(truth.analytic_lambda(0.1) == 0.0);
}

TEST_CASE("frames reproduce scripted levels") {
    auto spec = one_episode();
    spec.blink_rate_hz = 0.2;
    spec.gap_intervals = {{45.0, 50.0}};
    const auto gen = gen_landmark_stream(spec);
    CHECK(gen.frames.size() == gen.truth.frame_count);
    for (const auto& f : gen.frames) {
        CHECK_FALSE((f.timestamp_s >= 45.0 && f.timestamp_s < 50.0));
        const double expected = scripted_level(spec, gen.truth, f.timestamp_s);
        CHECK(std::abs(frame_ear(f).value - expected) < 1e-9);
    }
    CHECK_FALSE(gen.truth.blinks.empty());
}

TEST_CASE("discrete attention recovers the analytic value") {
    const auto gen = gen_landmark_stream(one_episode());
    const auto ex = extract_ear_series(gen.frames);
    const EarSeries series("conf", ex.samples, 10.0);
    AttentionConfig cfg;
    const auto r = integrate_attention(series, cfg);
    CHECK(std::abs(r.Lambda - 4.5) <= 0.1 * 0.2 + 1e-9);
    CHECK(std::abs(r.reading_time_s - 30.0) <= 0.1 + 1e-9);
}

TEST_CASE("no episodes and a threshold below baseline give zero") {
    ScenarioSpec s;
    s.blink_rate_hz = 0.0;
    CHECK(build_ground_truth(s).analytic_lambda(0.2) == 0.0);
}

TEST_CASE("scenario validation") {
    auto s = one_episode();
    s.reading_episodes.push_back({30.0, 50.0, 0.1});
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = one_episode();
    s.reading_episodes[0].ear_level = 0.35;
    CHECK_THROWS_AS(s.validate(), ConfigError);
    s = one_episode();
    s.fps = 0.0;
    CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("generated streams are deterministic") {
    auto spec = one_episode();
    spec.blink_rate_hz = 0.3;
    const auto g = gen_gallery({});
    std::ostringstream a;
    std::ostringstream b;
    write_landmark_stream(a, gen_landmark_stream(spec, &g.model).frames);
    write_landmark_stream(b, gen_landmark_stream(spec, &g.model).frames);
    CHECK(a.str() == b.str());
    spec.seed = 2;
    std::ostringstream c;
    write_landmark_stream(c, gen_landmark_stream(spec, &g.model).frames);
    CHECK(a.str() != c.str());
}

TEST_CASE("held-out gallery queries classify to their cluster") {
    GallerySpec gs;
    const auto g = gen_gallery(gs);
    IdentityConfig cfg;
    cfg.epsilon = 0.5;
    for (const auto& q : g.queries) {
        CHECK(classify(q.embedding, g.gallery, cfg) == std::optional<std::string>(q.label));
    }
    cfg.epsilon = 0.0;
    for (const auto& q : g.queries) {
        CHECK_FALSE(classify(q.embedding, g.gallery, cfg).has_value());
    }
    gs.labels = {"solo"};
    const auto single = gen_gallery(gs);
    cfg.epsilon = 0.5;
    for (const auto& q : single.queries) {
        CHECK(classify(q.embedding, single.gallery, cfg) == std::optional<std::string>("solo"));
    }
    gs.labels = {"a", "b"};
    gs.separation = 0.15;
    CHECK_THROWS_AS(gen_gallery(gs), ConfigError);
}

TEST_CASE("identity script controls which frames the filter keeps") {
    auto spec = one_episode();
    spec.identity_script = {{5.0, 12.0, "reporter"}, {30.0, 31.5, "other"}};
    const auto g = gen_gallery({});
    const auto gen = gen_landmark_stream(spec, &g.model);
    IdentityConfig cfg;
    cfg.epsilon = 0.5;
    const auto kept = filter_speaker_frames(gen.frames, g.gallery, "chair", cfg);
    std::vector<std::uint64_t> ids;
    for (const auto& f : kept.frames) {
        ids.push_back(f.frame_index);
    }
    CHECK(ids == gen.truth.target_frames);
    CHECK(ids.size() < gen.frames.size());
}

TEST_CASE("price generator") {
    ScenarioSpec spec;
    SUBCASE("zero volatility and drift") {
        spec.price.vol_per_min = 0.0;
        const auto p = gen_price_series(spec);
        const auto w = event_window_stats(p.series, p.truth.timeline);
        CHECK(w.sigma_b == 0.0);
        CHECK(w.sigma_a == 0.0);
        CHECK(w.r_d == 0.0);
    }
    SUBCASE("drift with zero volatility") {
        spec.price.vol_per_min = 0.0;
        spec.price.drift_during_qa = 0.0004;
        const auto p = gen_price_series(spec);
        const auto w = event_window_stats(p.series, p.truth.timeline);
        CHECK(p.truth.qa_minutes == 45);
        CHECK(w.r_d == doctest::Approx(0.0004 * 45).epsilon(1e-10));
        CHECK(std::abs(w.r_a) < 1e-12);
        CHECK(p.truth.r_d_expected == doctest::Approx(w.r_d).epsilon(1e-10));
    }
    SUBCASE("volatility ratio concentrates near the factor") {
        spec.price.vol_after_factor = 0.5;
        double sum = 0.0;
        const int seeds = 200;
        for (int s = 1; s <= seeds; ++s) {
            spec.seed = static_cast<std::uint64_t>(s);
            const auto p = gen_price_series(spec);
            const auto w = event_window_stats(p.series, p.truth.timeline);
            sum += w.sigma_a / w.sigma_b;
        }
        CHECK(sum / seeds == doctest::Approx(0.5).epsilon(0.05));
    }
}

TEST_CASE("Q&A texts carry the scripted question count") {
    ScenarioSpec spec;
    spec.n_questions = 12;
    const auto t = gen_qa_texts(spec);
    CHECK(count_questions(t.transcript) == 12);
    const auto seg = parse_segments_csv(t.segments_csv, "mem", "conf");
    CHECK(seg.chair_speech_s() > 0.0);
    CHECK(seg.chair_speech_s() < 45 * 60.0);
}

TEST_CASE("suite expansion plants the requested structure") {
    const auto spec = preset("planted", 3);
    CHECK(spec.conferences.size() == 45);
    CHECK(spec.planted.size() == 45);
    CHECK_FALSE(spec.planted[0].delta_lambda.has_value());
    for (std::size_t i = 1; i < spec.planted.size(); ++i) {
        REQUIRE(spec.planted[i].delta_lambda.has_value());
        CHECK(*spec.planted[i].delta_lambda ==
              doctest::Approx(spec.planted[i].lambda - spec.planted[i - 1].lambda).epsilon(1e-12));
        CHECK(spec.conferences[i].conference_id > spec.conferences[i - 1].conference_id);
    }
}

TEST_CASE("fixture directories are byte-identical for identical seeds") {
    const fs::path base = fs::temp_directory_path() / "earstudy_synth_test";
    fs::remove_all(base);
    auto spec = preset("null", 5);
    spec.conferences.resize(4);
    spec.planted.resize(4);
    write_fixture(spec, base / "a");
    write_fixture(spec, base / "b");
    CHECK(slurp_dir(base / "a") == slurp_dir(base / "b"));
    CHECK(fs::exists(base / "a" / "registry.json"));
    CHECK(fs::exists(base / "a" / "ground_truth.json"));
    // Generated files parse back without errors.
    const auto frames = read_landmark_stream(base / "a" / "landmarks" / (spec.conferences[0].conference_id + ".jsonl"));
    CHECK(frames.size() > 0);
    fs::remove_all(base);
}

TEST_CASE("scenario JSON round trip") {
    auto s = one_episode();
    s.gap_intervals = {{1.0, 2.0}};
    s.identity_script = {{3.0, 4.0, "reporter"}};
    const auto back = scenario_from_json(scenario_to_json(s));
    CHECK(scenario_to_json(back) == scenario_to_json(s));
}
