#include "earstudy/synth.h"

#include "earstudy/csv.h"
#include "earstudy/errors.h"
#include "earstudy/landmark_io.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace earstudy::synth {

using nlohmann::json;

namespace {

constexpr double kEyeSpan = 30.0;

// Stream ids for Rng::derive so each concern draws from its own sequence.
enum Stream : std::uint64_t {
    kBlinkStream = 1,
    kEmbeddingStream = 2,
    kPriceStream = 3,
    kTextStream = 4,
    kGalleryStream = 10,
    kSuiteStream = 100,
};

void check_intervals(std::vector<std::pair<double, double>> spans, double length, const std::string& what) {
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto [s, e] = spans[i];
        if (!(s >= 0.0) || !(e > s) || e > length) {
            throw ConfigError(what + " interval [" + csv::format_double(s) + ", " + csv::format_double(e) +
                              ") is empty or outside the conference");
        }
        if (i > 0 && s < spans[i - 1].second) {
            throw ConfigError(what + " intervals overlap near " + csv::format_double(s) + " s");
        }
    }
}

bool inside(double t, double s, double e) {
    return t >= s && t < e;
}

bool in_gap(const ScenarioSpec& spec, double t) {
    return std::any_of(spec.gap_intervals.begin(), spec.gap_intervals.end(),
                       [t](const Interval& g) { return inside(t, g.start_s, g.end_s); });
}

const std::string& label_at(const ScenarioSpec& spec, double t) {
    for (const auto& seg : spec.identity_script) {
        if (inside(t, seg.start_s, seg.end_s)) {
            return seg.label;
        }
    }
    return spec.target_label;
}

double quantize(double v) {
    return std::round(v * 1e5) / 1e5;
}

} // namespace

void ScenarioSpec::validate() const {
    const std::string where = "scenario " + conference_id;
    if (conference_id.empty()) {
        throw ConfigError("scenario conference_id is empty");
    }
    if (!(fps > 0.0) || !std::isfinite(fps)) {
        throw ConfigError(where + ": fps must be positive");
    }
    if (!(conference_length_s > 0.0) || !std::isfinite(conference_length_s)) {
        throw ConfigError(where + ": conference_length_s must be positive");
    }
    if (!(baseline_ear > 0.0)) {
        throw ConfigError(where + ": baseline_ear must be positive");
    }
    if (!(blink_rate_hz >= 0.0) || (blink_rate_hz > 0.0 && !(blink_duration_s > 0.0))) {
        throw ConfigError(where + ": blink rate must be nonnegative with a positive duration");
    }
    if (target_label.empty()) {
        throw ConfigError(where + ": target_label is empty");
    }
    std::vector<std::pair<double, double>> occupied;
    for (const auto& ep : reading_episodes) {
        if (!(ep.ear_level >= 0.0) || !(ep.ear_level < baseline_ear)) {
            throw ConfigError(where + ": episode level must lie in [0, baseline_ear)");
        }
        occupied.emplace_back(ep.start_s, ep.end_s);
    }
    check_intervals(occupied, conference_length_s, where + ": reading episode");
    for (const auto& g : gap_intervals) {
        occupied.emplace_back(g.start_s, g.end_s);
    }
    check_intervals(occupied, conference_length_s, where + ": episode/gap");
    std::vector<std::pair<double, double>> script;
    for (const auto& seg : identity_script) {
        if (seg.label.empty()) {
            throw ConfigError(where + ": identity script label is empty");
        }
        script.emplace_back(seg.start_s, seg.end_s);
    }
    check_intervals(script, conference_length_s, where + ": identity script");
    if (n_questions < 0) {
        throw ConfigError(where + ": n_questions is negative");
    }
    if (!(price.base_price > 0.0) || !(price.vol_per_min >= 0.0) || !(price.vol_after_factor >= 0.0) ||
        !std::isfinite(price.drift_during_qa)) {
        throw ConfigError(where + ": invalid price spec");
    }
    const Instant close = at_local_time(timeline.qa_start, timeline.trading_close);
    build_timeline(timeline.qa_start, timeline.conference_end, close);
    const Instant open = at_local_time(timeline.qa_start, timeline.session_open);
    if (shifted(timeline.qa_start, -kPreWindow) < open) {
        throw ConfigError(where + ": session opens less than two hours before the Q&A");
    }
}

double LandmarkGroundTruth::analytic_lambda(double c) const {
    double total = 0.0;
    for (const auto& p : pieces) {
        if (p.visible && p.ear < c) {
            total += p.ear * (p.end_s - p.start_s);
        }
    }
    return total;
}

double LandmarkGroundTruth::analytic_reading_time(double c) const {
    double total = 0.0;
    for (const auto& p : pieces) {
        if (p.visible && p.ear < c) {
            total += p.end_s - p.start_s;
        }
    }
    return total;
}

std::size_t LandmarkGroundTruth::sub_threshold_intervals(double c) const {
    std::size_t count = 0;
    bool in_run = false;
    double last_end = -1.0;
    for (const auto& p : pieces) {
        const bool below = p.visible && p.ear < c;
        if (below && (!in_run || p.start_s != last_end)) {
            ++count;
        }
        in_run = below;
        last_end = p.end_s;
    }
    return count;
}

double scripted_level(const ScenarioSpec& spec, const LandmarkGroundTruth& truth, double t) {
    for (const auto& b : truth.blinks) {
        if (inside(t, b.start_s, b.end_s)) {
            return 0.0;
        }
    }
    for (const auto& ep : spec.reading_episodes) {
        if (inside(t, ep.start_s, ep.end_s)) {
            return ep.ear_level;
        }
    }
    return spec.baseline_ear;
}

LandmarkGroundTruth build_ground_truth(const ScenarioSpec& spec) {
    spec.validate();
    LandmarkGroundTruth truth;
    truth.conference_id = spec.conference_id;
    truth.fps = spec.fps;
    truth.target_label = spec.target_label;

    const double length = spec.conference_length_s;
    if (spec.blink_rate_hz > 0.0) {
        Rng rng(Rng::derive(spec.seed, kBlinkStream));
        double t = 0.0;
        while (true) {
            t += rng.exponential(spec.blink_rate_hz);
            const double end = t + spec.blink_duration_s;
            if (end > length) {
                break;
            }
            const bool clashes = std::any_of(
                spec.reading_episodes.begin(), spec.reading_episodes.end(),
                [&](const ReadingEpisode& ep) { return t < ep.end_s && end > ep.start_s; });
            if (!clashes) {
                truth.blinks.push_back({t, end});
            }
            t = end;
        }
    }

    std::vector<double> cuts{0.0, length};
    auto add_cut = [&](double v) {
        if (v > 0.0 && v < length) {
            cuts.push_back(v);
        }
    };
    for (const auto& ep : spec.reading_episodes) {
        add_cut(ep.start_s);
        add_cut(ep.end_s);
    }
    for (const auto& b : truth.blinks) {
        add_cut(b.start_s);
        add_cut(b.end_s);
    }
    for (const auto& g : spec.gap_intervals) {
        add_cut(g.start_s);
        add_cut(g.end_s);
    }
    for (const auto& seg : spec.identity_script) {
        add_cut(seg.start_s);
        add_cut(seg.end_s);
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    for (std::size_t i = 1; i < cuts.size(); ++i) {
        const double mid = 0.5 * (cuts[i - 1] + cuts[i]);
        const bool visible = !in_gap(spec, mid) && label_at(spec, mid) == spec.target_label;
        truth.pieces.push_back({cuts[i - 1], cuts[i], scripted_level(spec, truth, mid), visible});
    }

    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) / spec.fps;
        if (!(t < length)) {
            break;
        }
        if (in_gap(spec, t)) {
            continue;
        }
        ++truth.frame_count;
        if (label_at(spec, t) == spec.target_label) {
            truth.target_frames.push_back(k);
        }
    }
    return truth;
}

std::vector<Point2> face_with_ear(double ear) {
    std::vector<Point2> pts(kLandmarkCount);
    for (int i = 0; i <= 16; ++i) { // jaw
        pts[i] = {100.0 + 12.0 * i, 150.0 + 6.0 * (8 - std::abs(i - 8))};
    }
    for (int i = 17; i <= 26; ++i) { // brows
        pts[i] = {130.0 + 10.0 * (i - 17) + (i >= 22 ? 20.0 : 0.0), 90.0};
    }
    for (int i = 27; i <= 30; ++i) { // nose bridge
        pts[i] = {200.0, 100.0 + 10.0 * (i - 27)};
    }
    for (int i = 31; i <= 35; ++i) { // nostrils
        pts[i] = {180.0 + 10.0 * (i - 31), 140.0};
    }
    const double half = kEyeSpan * ear / 2.0;
    auto eye = [&](std::size_t first, double x0, double y0) {
        pts[first + 0] = {x0, y0};
        pts[first + 1] = {x0 + 10.0, y0 - half};
        pts[first + 2] = {x0 + 20.0, y0 - half};
        pts[first + 3] = {x0 + kEyeSpan, y0};
        pts[first + 4] = {x0 + 20.0, y0 + half};
        pts[first + 5] = {x0 + 10.0, y0 + half};
    };
    eye(36, 150.0, 110.0);
    eye(42, 220.0, 110.0);
    for (int i = 48; i <= 59; ++i) { // outer lip
        pts[i] = {170.0 + 5.0 * (i - 48), 170.0 + ((i - 48) % 2) * 4.0};
    }
    for (int i = 60; i <= 67; ++i) { // inner lip
        pts[i] = {180.0 + 5.0 * (i - 60), 172.0};
    }
    return pts;
}

GalleryModel::GalleryModel(std::vector<std::string> labels, std::vector<std::vector<double>> centers,
                           double radius)
    : labels_(std::move(labels)), centers_(std::move(centers)), radius_(radius) {}

bool GalleryModel::has_label(const std::string& label) const {
    return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

std::vector<double> GalleryModel::draw(const std::string& label, Rng& rng) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) {
        throw ConfigError("identity '" + label + "' has no embedding cluster in the gallery");
    }
    const auto& center = centers_[static_cast<std::size_t>(it - labels_.begin())];
    const double sd = radius_ / std::sqrt(static_cast<double>(kEmbeddingDim));
    std::vector<double> v(kEmbeddingDim);
    for (std::size_t k = 0; k < kEmbeddingDim; ++k) {
        v[k] = quantize(center[k] + sd * rng.normal());
    }
    return v;
}

GeneratedGallery gen_gallery(const GallerySpec& spec) {
    if (spec.labels.empty() || spec.labels.size() > kEmbeddingDim) {
        throw ConfigError("gallery needs between 1 and 128 labels");
    }
    std::set<std::string> unique(spec.labels.begin(), spec.labels.end());
    if (unique.size() != spec.labels.size() || unique.count("") != 0) {
        throw ConfigError("gallery labels must be unique and nonempty");
    }
    if (!(spec.cluster_radius >= 0.0) || !(spec.separation > 4.0 * spec.cluster_radius)) {
        throw ConfigError("gallery cluster separation must exceed 4x the cluster radius");
    }
    if (spec.per_label < 1 || spec.queries_per_label < 0) {
        throw ConfigError("gallery needs at least one entry per label");
    }

    Rng rng(Rng::derive(spec.seed, kGalleryStream));
    std::vector<double> offset(kEmbeddingDim);
    for (auto& v : offset) {
        v = rng.normal(0.0, 0.1);
    }
    const double arm = spec.separation / std::sqrt(2.0);
    std::vector<std::vector<double>> centers;
    for (std::size_t j = 0; j < spec.labels.size(); ++j) {
        auto c = offset;
        c[j] += arm;
        centers.push_back(std::move(c));
    }
    GeneratedGallery out;
    out.model = GalleryModel(spec.labels, std::move(centers), spec.cluster_radius);

    std::vector<GalleryEntry> entries;
    for (const auto& label : spec.labels) {
        for (int m = 0; m < spec.per_label; ++m) {
            entries.push_back({label, Embedding(out.model.draw(label, rng))});
        }
    }
    out.gallery = Gallery(std::move(entries));
    for (const auto& label : spec.labels) {
        for (int q = 0; q < spec.queries_per_label; ++q) {
            out.queries.push_back({label, Embedding(out.model.draw(label, rng))});
        }
    }
    return out;
}

GeneratedStream gen_landmark_stream(const ScenarioSpec& spec, const GalleryModel* model) {
    GeneratedStream out;
    out.truth = build_ground_truth(spec);
    Rng rng(Rng::derive(spec.seed, kEmbeddingStream));
    out.frames.reserve(out.truth.frame_count);
    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) / spec.fps;
        if (!(t < spec.conference_length_s)) {
            break;
        }
        if (in_gap(spec, t)) {
            continue;
        }
        FaceLandmarkFrame frame;
        frame.conference_id = spec.conference_id;
        frame.frame_index = k;
        frame.timestamp_s = t;
        frame.points = face_with_ear(scripted_level(spec, out.truth, t));
        if (model != nullptr) {
            frame.embedding = model->draw(label_at(spec, t), rng);
        }
        out.frames.push_back(std::move(frame));
    }
    return out;
}

GeneratedPrices gen_price_series(const ScenarioSpec& spec) {
    spec.validate();
    const auto& tl = spec.timeline;
    GeneratedPrices out;
    auto& truth = out.truth;
    truth.timeline = build_timeline(tl.qa_start, tl.conference_end, at_local_time(tl.qa_start, tl.trading_close));
    truth.qa_minutes =
        std::chrono::duration_cast<std::chrono::minutes>(truth.timeline.tau3.utc - truth.timeline.tau2.utc).count();
    truth.r_d_expected = spec.price.drift_during_qa * static_cast<double>(truth.qa_minutes);
    truth.sigma_b = spec.price.vol_per_min;
    truth.sigma_a = spec.price.vol_per_min * spec.price.vol_after_factor;

    Rng rng(Rng::derive(spec.seed, kPriceStream));
    const Instant open = at_local_time(tl.qa_start, tl.session_open);
    const Instant& close = truth.timeline.tau4;
    std::vector<PriceBar> bars;
    double log_price = std::log(spec.price.base_price);
    bars.push_back({open, std::exp(log_price)});
    for (Instant t = shifted(open, std::chrono::minutes{1}); !(close < t); t = shifted(t, std::chrono::minutes{1})) {
        const Instant start = shifted(t, -std::chrono::minutes{1});
        double drift = 0.0;
        if (!(start < truth.timeline.tau2) && !(truth.timeline.tau3 < t)) {
            drift = spec.price.drift_during_qa;
        }
        double vol = spec.price.vol_per_min;
        if (!(start < truth.timeline.tau3)) {
            vol *= spec.price.vol_after_factor;
        }
        const double shock = rng.normal();
        if (drift != 0.0 || vol != 0.0) {
            log_price += drift + vol * shock;
        }
        bars.push_back({t, std::exp(log_price)});
    }
    out.series = PriceSeries(std::move(bars));
    return out;
}

QaTexts gen_qa_texts(const ScenarioSpec& spec) {
    Rng rng(Rng::derive(spec.seed, kTextStream));
    const double duration =
        static_cast<double>((spec.timeline.conference_end.utc - spec.timeline.qa_start.utc).count());
    QaTexts out;
    out.segments_csv = "start_s,end_s,speaker\n";
    std::ostringstream transcript;
    transcript << "Transcript of the question-and-answer session, " << spec.conference_id << ".\n\n";
    if (spec.n_questions == 0) {
        transcript << "CHAIR: Thank you. That concludes my remarks.\n";
        out.segments_csv += "0," + csv::format_double(duration) + ",chair\n";
        out.transcript = transcript.str();
        return out;
    }
    const double slot = duration / spec.n_questions;
    for (int q = 0; q < spec.n_questions; ++q) {
        const double start = slot * q;
        const double split = start + slot * rng.uniform(0.15, 0.35);
        const double end = q + 1 == spec.n_questions ? duration : slot * (q + 1);
        out.segments_csv += csv::format_double(start) + "," + csv::format_double(split) + ",reporter\n";
        out.segments_csv += csv::format_double(split) + "," + csv::format_double(end) + ",chair\n";
        transcript << "REPORTER: Could you say more about item " << (q + 1) << " of the outlook?\n";
        transcript << "CHAIR: On item " << (q + 1) << ", the Committee will remain attentive to incoming data.\n\n";
    }
    out.transcript = transcript.str();
    return out;
}

namespace {

json interval_json(double s, double e) {
    return {{"start_s", s}, {"end_s", e}};
}

} // namespace

json scenario_to_json(const ScenarioSpec& spec) {
    json episodes = json::array();
    for (const auto& ep : spec.reading_episodes) {
        episodes.push_back({{"start_s", ep.start_s}, {"end_s", ep.end_s}, {"ear_level", ep.ear_level}});
    }
    json gaps = json::array();
    for (const auto& g : spec.gap_intervals) {
        gaps.push_back(interval_json(g.start_s, g.end_s));
    }
    json script = json::array();
    for (const auto& s : spec.identity_script) {
        script.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"label", s.label}});
    }
    return {{"conference_id", spec.conference_id},
            {"seed", spec.seed},
            {"fps", spec.fps},
            {"conference_length_s", spec.conference_length_s},
            {"reading_episodes", episodes},
            {"baseline_ear", spec.baseline_ear},
            {"blink_rate_hz", spec.blink_rate_hz},
            {"blink_duration_s", spec.blink_duration_s},
            {"gap_intervals", gaps},
            {"identity_script", script},
            {"target_label", spec.target_label},
            {"n_questions", spec.n_questions},
            {"price_spec",
             {{"base_price", spec.price.base_price},
              {"vol_per_min", spec.price.vol_per_min},
              {"drift_during_qa", spec.price.drift_during_qa},
              {"vol_after_factor", spec.price.vol_after_factor}}},
            {"timeline",
             {{"qa_start", format_instant(spec.timeline.qa_start)},
              {"conference_end", format_instant(spec.timeline.conference_end)},
              {"trading_close", format_clock(spec.timeline.trading_close)},
              {"session_open", format_clock(spec.timeline.session_open)}}}};
}

ScenarioSpec scenario_from_json(const json& j) {
    ScenarioSpec s;
    try {
        s.conference_id = j.value("conference_id", s.conference_id);
        s.seed = j.value("seed", s.seed);
        s.fps = j.value("fps", s.fps);
        s.conference_length_s = j.value("conference_length_s", s.conference_length_s);
        s.baseline_ear = j.value("baseline_ear", s.baseline_ear);
        s.blink_rate_hz = j.value("blink_rate_hz", s.blink_rate_hz);
        s.blink_duration_s = j.value("blink_duration_s", s.blink_duration_s);
        s.target_label = j.value("target_label", s.target_label);
        s.n_questions = j.value("n_questions", s.n_questions);
        for (const auto& ep : j.value("reading_episodes", json::array())) {
            s.reading_episodes.push_back(
                {ep.at("start_s").get<double>(), ep.at("end_s").get<double>(), ep.at("ear_level").get<double>()});
        }
        for (const auto& g : j.value("gap_intervals", json::array())) {
            s.gap_intervals.push_back({g.at("start_s").get<double>(), g.at("end_s").get<double>()});
        }
        for (const auto& seg : j.value("identity_script", json::array())) {
            s.identity_script.push_back(
                {seg.at("start_s").get<double>(), seg.at("end_s").get<double>(), seg.at("label").get<std::string>()});
        }
        if (j.contains("price_spec")) {
            const auto& p = j["price_spec"];
            s.price.base_price = p.value("base_price", s.price.base_price);
            s.price.vol_per_min = p.value("vol_per_min", s.price.vol_per_min);
            s.price.drift_during_qa = p.value("drift_during_qa", s.price.drift_during_qa);
            s.price.vol_after_factor = p.value("vol_after_factor", s.price.vol_after_factor);
        }
        if (j.contains("timeline")) {
            const auto& t = j["timeline"];
            if (t.contains("qa_start")) {
                s.timeline.qa_start = parse_instant(t["qa_start"].get<std::string>());
            }
            if (t.contains("conference_end")) {
                s.timeline.conference_end = parse_instant(t["conference_end"].get<std::string>());
            }
            if (t.contains("trading_close")) {
                s.timeline.trading_close = parse_clock(t["trading_close"].get<std::string>());
            }
            if (t.contains("session_open")) {
                s.timeline.session_open = parse_clock(t["session_open"].get<std::string>());
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    } catch (const StructuralError& e) {
        throw ConfigError(std::string("scenario: ") + e.what());
    }
    return s;
}

json suite_to_json(const SuiteSpec& s) {
    json j = {{"n_conferences", s.n_conferences},
              {"start_date", s.start_date},
              {"spacing_days", s.spacing_days},
              {"utc_offset", s.utc_offset},
              {"qa_start", s.qa_start},
              {"qa_minutes_min", s.qa_minutes_min},
              {"qa_minutes_max", s.qa_minutes_max},
              {"trading_close", s.trading_close},
              {"fps", s.fps},
              {"conference_length_s", s.conference_length_s},
              {"baseline_ear", s.baseline_ear},
              {"reading_level", s.reading_level},
              {"blink_rate_hz", s.blink_rate_hz},
              {"blink_duration_s", s.blink_duration_s},
              {"lambda_mean", s.lambda_mean},
              {"lambda_sd", s.lambda_sd},
              {"reporter_label", s.reporter_label},
              {"alpha", s.alpha},
              {"beta", s.beta},
              {"target_r2", s.target_r2},
              {"vol_after_base", s.vol_after_base},
              {"vol_lambda_loading", s.vol_lambda_loading},
              {"base_price", s.base_price}};
    if (s.vol_per_min) {
        j["vol_per_min"] = *s.vol_per_min;
    }
    return j;
}

SuiteSpec suite_from_json(const json& j) {
    SuiteSpec s;
    try {
        s.n_conferences = j.value("n_conferences", s.n_conferences);
        s.start_date = j.value("start_date", s.start_date);
        s.spacing_days = j.value("spacing_days", s.spacing_days);
        s.utc_offset = j.value("utc_offset", s.utc_offset);
        s.qa_start = j.value("qa_start", s.qa_start);
        s.qa_minutes_min = j.value("qa_minutes_min", s.qa_minutes_min);
        s.qa_minutes_max = j.value("qa_minutes_max", s.qa_minutes_max);
        s.trading_close = j.value("trading_close", s.trading_close);
        s.fps = j.value("fps", s.fps);
        s.conference_length_s = j.value("conference_length_s", s.conference_length_s);
        s.baseline_ear = j.value("baseline_ear", s.baseline_ear);
        s.reading_level = j.value("reading_level", s.reading_level);
        s.blink_rate_hz = j.value("blink_rate_hz", s.blink_rate_hz);
        s.blink_duration_s = j.value("blink_duration_s", s.blink_duration_s);
        s.lambda_mean = j.value("lambda_mean", s.lambda_mean);
        s.lambda_sd = j.value("lambda_sd", s.lambda_sd);
        s.reporter_label = j.value("reporter_label", s.reporter_label);
        s.alpha = j.value("alpha", s.alpha);
        s.beta = j.value("beta", s.beta);
        s.target_r2 = j.value("target_r2", s.target_r2);
        if (j.contains("vol_per_min")) {
            s.vol_per_min = j["vol_per_min"].get<double>();
        }
        s.vol_after_base = j.value("vol_after_base", s.vol_after_base);
        s.vol_lambda_loading = j.value("vol_lambda_loading", s.vol_lambda_loading);
        s.base_price = j.value("base_price", s.base_price);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("suite: ") + e.what());
    }
    return s;
}

FixtureSpec expand_suite(const SuiteSpec& suite, std::uint64_t seed, FixtureSpec base) {
    if (suite.n_conferences < 1 || suite.spacing_days < 1 || suite.qa_minutes_min < 1 ||
        suite.qa_minutes_max < suite.qa_minutes_min) {
        throw ConfigError("suite: invalid conference count, spacing or Q&A length range");
    }
    if (!(suite.reading_level < base.threshold_c) || !(suite.reading_level < suite.baseline_ear) ||
        !(suite.reading_level > 0.0)) {
        throw ConfigError("suite: reading_level must be positive and below both the threshold and the baseline");
    }
    if (!(suite.conference_length_s >= 60.0)) {
        throw ConfigError("suite: conference_length_s must be at least 60");
    }
    double vol = 0.0;
    if (suite.vol_per_min) {
        vol = *suite.vol_per_min;
    } else {
        if (!(suite.target_r2 > 0.0 && suite.target_r2 < 1.0) || suite.beta == 0.0) {
            throw ConfigError("suite: give vol_per_min, or a nonzero beta and target_r2 in (0, 1)");
        }
        const double mean_minutes = 0.5 * (suite.qa_minutes_min + suite.qa_minutes_max);
        const double signal_var = suite.beta * suite.beta * 2.0 * suite.lambda_sd * suite.lambda_sd;
        vol = std::sqrt(signal_var * (1.0 - suite.target_r2) / suite.target_r2 / mean_minutes);
    }

    FixtureSpec out = std::move(base);
    out.seed = seed;
    out.vol_per_min = vol;
    out.conferences.clear();
    out.planted.clear();

    Rng rng(Rng::derive(seed, kSuiteStream));
    const auto first_day = parse_date(suite.start_date);
    const auto close = parse_clock(suite.trading_close);
    constexpr double kPeriod = 60.0;
    constexpr double kSlotStart = 3.0;
    constexpr double kSlotLength = 40.0;
    const int periods = static_cast<int>(suite.conference_length_s / kPeriod);

    std::vector<double> previous_lambda;
    for (int i = 0; i < suite.n_conferences; ++i) {
        const auto day = first_day + std::chrono::days{static_cast<long>(i) * suite.spacing_days};
        const std::string date = format_date(day);
        ScenarioSpec s;
        s.conference_id = "fomc-" + date;
        s.seed = Rng::derive(seed, 1000 + static_cast<std::uint64_t>(i));
        s.fps = suite.fps;
        s.conference_length_s = suite.conference_length_s;
        s.baseline_ear = suite.baseline_ear;
        s.blink_rate_hz = suite.blink_rate_hz;
        s.blink_duration_s = suite.blink_duration_s;
        s.target_label = out.target_label;
        s.timeline.qa_start = parse_instant(date + "T" + suite.qa_start + ":00" + suite.utc_offset);
        const long qa_minutes = rng.uniform_int(suite.qa_minutes_min, suite.qa_minutes_max);
        s.timeline.conference_end = shifted(s.timeline.qa_start, std::chrono::minutes{qa_minutes});
        s.timeline.trading_close = close;
        s.n_questions = static_cast<int>(rng.uniform_int(12, 30));

        for (int p = 0; p < periods; ++p) {
            s.identity_script.push_back({kPeriod * p + 50.0, kPeriod * p + 60.0, suite.reporter_label});
        }
        s.gap_intervals.push_back({44.0, 50.0});

        const double planned_lambda = suite.lambda_mean + suite.lambda_sd * rng.normal();
        double reading = std::exp(planned_lambda) / suite.reading_level;
        reading = std::min(reading, kSlotLength * periods);
        int episodes = static_cast<int>(rng.uniform_int(1, 4));
        episodes = std::max(episodes, static_cast<int>(std::ceil(reading / kSlotLength)));
        episodes = std::min(episodes, periods);
        std::vector<int> slots(static_cast<std::size_t>(periods));
        for (int p = 0; p < periods; ++p) {
            slots[static_cast<std::size_t>(p)] = p;
        }
        for (int p = periods - 1; p > 0; --p) { // Fisher-Yates with our own source
            std::swap(slots[static_cast<std::size_t>(p)], slots[static_cast<std::size_t>(rng.uniform_int(0, p))]);
        }
        slots.resize(static_cast<std::size_t>(episodes));
        std::sort(slots.begin(), slots.end());
        const double piece = reading / episodes;
        for (int slot : slots) {
            const double start = kPeriod * slot + kSlotStart + rng.uniform() * (kSlotLength - piece);
            s.reading_episodes.push_back({start, start + piece, suite.reading_level});
        }

        const double Lambda = build_ground_truth(s).analytic_lambda(out.threshold_c);
        PlantedConference planted;
        planted.conference_id = s.conference_id;
        planted.Lambda = Lambda;
        planted.lambda = std::log(Lambda);
        if (!previous_lambda.empty()) {
            planted.delta_lambda = planted.lambda - previous_lambda.back();
        }
        previous_lambda.push_back(planted.lambda);
        const double dl = planted.delta_lambda.value_or(0.0);
        planted.r_d_mean = planted.delta_lambda ? suite.alpha + suite.beta * dl : suite.alpha;
        planted.vol_after_factor =
            std::clamp(suite.vol_after_base * std::exp(suite.vol_lambda_loading * dl), 0.05, 20.0);

        s.price.base_price = suite.base_price;
        s.price.vol_per_min = vol;
        s.price.drift_during_qa = planted.r_d_mean / static_cast<double>(qa_minutes);
        s.price.vol_after_factor = planted.vol_after_factor;

        out.conferences.push_back(std::move(s));
        out.planted.push_back(planted);
    }
    return out;
}

namespace {

FixtureSpec fixture_base_from_json(const json& doc, std::uint64_t seed) {
    FixtureSpec f;
    f.seed = seed;
    f.target_label = doc.value("target_label", f.target_label);
    f.identity_epsilon = doc.value("identity_epsilon", f.identity_epsilon);
    f.threshold_c = doc.value("threshold_c", f.threshold_c);
    if (doc.contains("ground_truth_c")) {
        f.ground_truth_c = doc["ground_truth_c"].get<std::vector<double>>();
    }
    f.gallery.seed = Rng::derive(seed, 7);
    if (doc.contains("gallery")) {
        const auto& g = doc["gallery"];
        f.gallery.labels = g.value("labels", f.gallery.labels);
        f.gallery.cluster_radius = g.value("cluster_radius", f.gallery.cluster_radius);
        f.gallery.separation = g.value("separation", f.gallery.separation);
        f.gallery.per_label = g.value("per_label", f.gallery.per_label);
        f.gallery.queries_per_label = g.value("queries_per_label", f.gallery.queries_per_label);
        f.gallery.seed = g.value("seed", f.gallery.seed);
    }
    return f;
}

} // namespace

FixtureSpec parse_fixture_spec(const json& doc, std::optional<std::uint64_t> seed_override) {
    if (!doc.is_object()) {
        throw ConfigError("scenario file must hold a JSON object");
    }
    try {
        const std::uint64_t seed = seed_override.value_or(doc.value("seed", std::uint64_t{1}));
        FixtureSpec f = fixture_base_from_json(doc, seed);
        if (doc.contains("suite")) {
            f = expand_suite(suite_from_json(doc["suite"]), seed, std::move(f));
        }
        if (doc.contains("conferences")) {
            const auto& list = doc["conferences"];
            for (std::size_t i = 0; i < list.size(); ++i) {
                ScenarioSpec s = scenario_from_json(list[i]);
                if (!list[i].contains("seed")) {
                    s.seed = Rng::derive(seed, 5000 + i);
                }
                if (!list[i].contains("target_label")) {
                    s.target_label = f.target_label;
                }
                f.conferences.push_back(std::move(s));
            }
        }
        if (f.conferences.empty()) {
            throw ConfigError("scenario file defines no conferences (use 'suite' or 'conferences')");
        }
        return f;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario file: ") + e.what());
    }
}

FixtureSpec read_fixture_spec(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file " + path.string());
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return parse_fixture_spec(doc, seed_override);
}

SuiteSpec preset_suite(const std::string& name) {
    SuiteSpec s;
    if (name == "planted") {
        s.beta = 0.005;
        s.target_r2 = 0.3;
        s.vol_after_base = 0.7;
        s.vol_lambda_loading = -0.5;
    } else if (name == "null") {
        s.beta = 0.0;
        s.vol_per_min = 0.0006;
        s.vol_after_base = 1.0;
        s.vol_lambda_loading = 0.0;
    } else {
        throw ConfigError("unknown preset '" + name + "' (expected planted or null)");
    }
    return s;
}

FixtureSpec preset(const std::string& name, std::uint64_t seed) {
    json doc = {{"seed", seed}, {"suite", suite_to_json(preset_suite(name))}};
    return parse_fixture_spec(doc);
}

namespace {

json truth_json(const ScenarioSpec& spec, const LandmarkGroundTruth& truth, const PriceGroundTruth& prices,
                const std::vector<double>& cs) {
    json blinks = json::array();
    for (const auto& b : truth.blinks) {
        blinks.push_back(interval_json(b.start_s, b.end_s));
    }
    json pieces = json::array();
    for (const auto& p : truth.pieces) {
        pieces.push_back({{"start_s", p.start_s}, {"end_s", p.end_s}, {"ear", p.ear}, {"visible", p.visible}});
    }
    json analytic = json::array();
    for (double c : cs) {
        analytic.push_back({{"c", c},
                            {"Lambda", truth.analytic_lambda(c)},
                            {"reading_time_s", truth.analytic_reading_time(c)},
                            {"sub_threshold_intervals", truth.sub_threshold_intervals(c)}});
    }
    return {{"conference_id", spec.conference_id},
            {"scenario", scenario_to_json(spec)},
            {"frame_count", truth.frame_count},
            {"target_frames", truth.target_frames},
            {"blinks", blinks},
            {"pieces", pieces},
            {"analytic", analytic},
            {"prices",
             {{"tau1", format_instant(prices.timeline.tau1)},
              {"tau2", format_instant(prices.timeline.tau2)},
              {"tau3", format_instant(prices.timeline.tau3)},
              {"tau4", format_instant(prices.timeline.tau4)},
              {"qa_minutes", prices.qa_minutes},
              {"r_d_expected", prices.r_d_expected},
              {"sigma_b", prices.sigma_b},
              {"sigma_a", prices.sigma_a}}}};
}

} // namespace

FixtureSummary write_fixture(const FixtureSpec& spec, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "landmarks");
    fs::create_directories(dir / "transcripts");
    fs::create_directories(dir / "segments");
    fs::create_directories(dir / "prices");

    const GeneratedGallery gallery = gen_gallery(spec.gallery);
    if (!gallery.model.has_label(spec.target_label)) {
        throw ConfigError("gallery labels do not include the target '" + spec.target_label + "'");
    }
    csv::write_text_file(dir / "gallery.json", gallery_to_json(gallery.gallery));

    std::set<std::string> ids;
    FixtureSummary summary;
    json registry_rows = json::array();
    json truth_rows = json::array();
    for (const auto& s : spec.conferences) {
        if (!ids.insert(s.conference_id).second) {
            throw ConfigError("duplicate conference_id '" + s.conference_id + "'");
        }
        const GeneratedStream stream = gen_landmark_stream(s, &gallery.model);
        std::ostringstream jsonl;
        write_landmark_stream(jsonl, stream.frames);
        const std::string landmarks = "landmarks/" + s.conference_id + ".jsonl";
        csv::write_text_file(dir / landmarks, jsonl.str());

        const QaTexts texts = gen_qa_texts(s);
        const std::string transcript = "transcripts/" + s.conference_id + ".txt";
        const std::string segments = "segments/" + s.conference_id + ".csv";
        csv::write_text_file(dir / transcript, texts.transcript);
        csv::write_text_file(dir / segments, texts.segments_csv);

        const GeneratedPrices prices = gen_price_series(s);
        const std::string price_path = "prices/" + s.conference_id + ".csv";
        csv::write_text_file(dir / price_path, price_csv(prices.series));

        registry_rows.push_back({{"conference_id", s.conference_id},
                                 {"date", format_date(local_date(s.timeline.qa_start))},
                                 {"qa_start", format_instant(s.timeline.qa_start)},
                                 {"conference_end", format_instant(s.timeline.conference_end)},
                                 {"trading_close", format_clock(s.timeline.trading_close)},
                                 {"fps", s.fps},
                                 {"landmarks", landmarks},
                                 {"transcript", transcript},
                                 {"segments", segments},
                                 {"prices", price_path}});
        truth_rows.push_back(truth_json(s, stream.truth, prices.truth, spec.ground_truth_c));
        summary.frames += stream.frames.size();
        summary.price_bars += prices.series.bars().size();
        ++summary.conferences;
    }

    json planted = json::array();
    for (const auto& p : spec.planted) {
        json row = {{"conference_id", p.conference_id},
                    {"Lambda", p.Lambda},
                    {"lambda", p.lambda},
                    {"r_d_mean", p.r_d_mean},
                    {"vol_after_factor", p.vol_after_factor}};
        row["delta_lambda"] = p.delta_lambda ? json(*p.delta_lambda) : json(nullptr);
        planted.push_back(std::move(row));
    }
    json queries = json::array();
    for (const auto& q : gallery.queries) {
        queries.push_back({{"label", q.label},
                           {"embedding", std::vector<double>(q.embedding.values().begin(), q.embedding.values().end())}});
    }

    csv::write_text_file(dir / "registry.json", json{{"conferences", registry_rows}}.dump(2) + "\n");
    json truth = {{"seed", spec.seed},
                  {"target_label", spec.target_label},
                  {"threshold_c", spec.threshold_c},
                  {"gallery_queries", queries},
                  {"conferences", truth_rows},
                  {"planted", planted}};
    if (spec.vol_per_min) {
        truth["vol_per_min"] = *spec.vol_per_min;
    }
    csv::write_text_file(dir / "ground_truth.json", truth.dump(1) + "\n");

    json config = {{"registry", "registry.json"},
                   {"gallery", "gallery.json"},
                   {"target_label", spec.target_label},
                   {"identity", {{"epsilon", spec.identity_epsilon}, {"min_votes", 1}, {"no_embedding_policy", "drop"}}},
                   {"attention", {{"threshold_c", spec.threshold_c}}}};
    csv::write_text_file(dir / "config.json", config.dump(2) + "\n");
    return summary;
}

} // namespace earstudy::synth
