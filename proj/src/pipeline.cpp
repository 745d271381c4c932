#include "earstudy/pipeline.h"

#include "earstudy/csv.h"
#include "earstudy/errors.h"
#include "earstudy/landmark_io.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace earstudy::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception by
// index is rethrown after all workers finish.
template <class F>
void parallel_for(std::size_t n, unsigned jobs, F&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) {
                return;
            }
            try {
                fn(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const std::size_t threads = std::min<std::size_t>(jobs, n);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

fs::path resolve(const fs::path& base, const std::string& p) {
    fs::path path(p);
    if (path.is_relative()) {
        path = base / path;
    }
    return path.lexically_normal();
}

std::string opt_double(const std::optional<double>& v) {
    return v ? csv::format_double(*v) : std::string();
}

json meta_json(const std::string& stage, const std::string& hash) {
    return {{"tool", kToolName}, {"version", kToolVersion}, {"stage", stage}, {"config_hash", hash}};
}

fs::path stage_dir(const RunConfig& config, Stage stage) {
    return config.out_dir / to_string(stage);
}

fs::path manifest_path(const RunConfig& config, Stage stage) {
    return stage_dir(config, stage) / "stage.json";
}

std::optional<std::string> recorded_hash(const RunConfig& config, Stage stage) {
    const fs::path manifest = manifest_path(config, stage);
    if (!fs::exists(manifest)) {
        return std::nullopt;
    }
    try {
        const json doc = json::parse(csv::read_text_file(manifest));
        return doc.at("config_hash").get<std::string>();
    } catch (const json::exception&) {
        return std::string("unreadable");
    }
}

// Prepares a stage directory. Outputs from a different configuration are
// never overwritten unless --force was given.
void begin_stage(const RunConfig& config, Stage stage) {
    const std::string hash = stage_hash(config, stage);
    const auto previous = recorded_hash(config, stage);
    const fs::path dir = stage_dir(config, stage);
    if (previous && *previous != hash) {
        if (!config.force) {
            throw ConfigError(dir.string() + " holds " + to_string(stage) +
                              " outputs from a different configuration (" + *previous +
                              "); use another --out directory or --force");
        }
    }
    if (previous && *previous != hash) {
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
}

void finish_stage(const RunConfig& config, Stage stage, const json& summary) {
    json manifest = meta_json(to_string(stage), stage_hash(config, stage));
    manifest["summary"] = summary;
    csv::write_text_file(manifest_path(config, stage), manifest.dump(2) + "\n");
}

void require_upstream(const RunConfig& config, Stage upstream) {
    const auto recorded = recorded_hash(config, upstream);
    const std::string name = to_string(upstream);
    if (!recorded) {
        throw ConfigError("missing " + name + " outputs in " + stage_dir(config, upstream).string() +
                          "; run `earstudy " + name + "` first");
    }
    if (*recorded != stage_hash(config, upstream)) {
        throw ConfigError(name + " outputs in " + stage_dir(config, upstream).string() +
                          " were produced with a different configuration; rerun `earstudy " + name + "`");
    }
}

// Error messages often start with the conference id already.
std::string reason_for(const std::string& conference_id, const char* what) {
    std::string reason(what);
    const std::string prefix = conference_id + ": ";
    if (reason.rfind(prefix, 0) == 0) {
        reason.erase(0, prefix.size());
    }
    return reason;
}

std::string exclusions_csv(const std::vector<Exclusion>& rows, const std::string& header) {
    std::string out = header + "conference_id,stage,reason\n";
    for (const auto& e : rows) {
        std::string reason = e.reason;
        std::replace(reason.begin(), reason.end(), ',', ';');
        std::replace(reason.begin(), reason.end(), '\n', ' ');
        out += e.conference_id + "," + e.stage + "," + reason + "\n";
    }
    return out;
}

std::vector<Exclusion> read_exclusions(const fs::path& path) {
    std::vector<Exclusion> out;
    if (!fs::exists(path)) {
        return out;
    }
    const auto table = csv::read(path);
    for (const auto& row : table.rows) {
        if (row.size() == 3) {
            out.push_back({row[0], row[1], row[2]});
        }
    }
    return out;
}

std::set<std::string> excluded_ids(const std::vector<Exclusion>& rows) {
    std::set<std::string> ids;
    for (const auto& e : rows) {
        ids.insert(e.conference_id);
    }
    return ids;
}

void log_report(const StageReport& report, const std::string& stage) {
    for (const auto& w : report.warnings) {
        std::cerr << "warning [" << stage << "]: " << w << "\n";
    }
    for (const auto& e : report.exclusions) {
        if (e.stage == stage) {
            std::cerr << "excluded [" << stage << "] " << e.conference_id << ": " << e.reason << "\n";
        }
    }
}

} // namespace

std::string to_string(Stage stage) {
    switch (stage) {
    case Stage::identify:
        return "identify";
    case Stage::ear:
        return "ear";
    case Stage::attention:
        return "attention";
    case Stage::eventstudy:
        return "eventstudy";
    }
    return "unknown";
}

std::string provenance_header(const std::string& stage, const std::string& hash) {
    return std::string("# ") + kToolName + " " + kToolVersion + " stage=" + stage + " config_hash=" + hash + "\n";
}

double ConferenceRecord::qa_duration_s() const {
    return static_cast<double>((conference_end.utc - qa_start.utc).count());
}

const ConferenceRecord* Registry::find(const std::string& conference_id) const {
    for (const auto& c : conferences) {
        if (c.conference_id == conference_id) {
            return &c;
        }
    }
    return nullptr;
}

Registry parse_registry(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object() || !doc.contains("conferences") || !doc["conferences"].is_array()) {
        throw ConfigError("registry must be an object with a 'conferences' array");
    }
    Registry registry;
    std::set<std::string> ids;
    const std::string shared_prices = doc.value("prices", std::string());
    for (std::size_t i = 0; i < doc["conferences"].size(); ++i) {
        const auto& item = doc["conferences"][i];
        const std::string where = "registry conference " + std::to_string(i);
        try {
            ConferenceRecord rec;
            rec.conference_id = item.at("conference_id").get<std::string>();
            if (rec.conference_id.empty() || !ids.insert(rec.conference_id).second) {
                throw ConfigError(where + ": conference_id is empty or duplicated");
            }
            rec.qa_start = parse_instant(item.at("qa_start").get<std::string>());
            rec.conference_end = parse_instant(item.at("conference_end").get<std::string>());
            rec.date = item.contains("date") ? parse_date(item["date"].get<std::string>()) : local_date(rec.qa_start);
            if (item.contains("trading_close")) {
                rec.trading_close = parse_clock(item["trading_close"].get<std::string>());
            }
            if (item.contains("fps")) {
                rec.fps = item["fps"].get<double>();
                if (!(*rec.fps > 0.0)) {
                    throw ConfigError(where + ": fps must be positive");
                }
            }
            rec.landmarks = resolve(base_dir, item.at("landmarks").get<std::string>());
            if (item.contains("transcript")) {
                rec.transcript = resolve(base_dir, item["transcript"].get<std::string>());
            }
            if (item.contains("segments")) {
                rec.segments = resolve(base_dir, item["segments"].get<std::string>());
            }
            const std::string prices = item.value("prices", shared_prices);
            if (!prices.empty()) {
                rec.prices = resolve(base_dir, prices);
            }
            registry.conferences.push_back(std::move(rec));
        } catch (const json::exception& e) {
            throw ConfigError(where + ": " + e.what());
        } catch (const StructuralError& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    std::stable_sort(registry.conferences.begin(), registry.conferences.end(),
                     [](const ConferenceRecord& a, const ConferenceRecord& b) { return a.date < b.date; });
    registry.content_hash = fnv1a_hex(doc.dump());
    return registry;
}

Registry read_registry(const fs::path& path) {
    std::string text;
    try {
        text = csv::read_text_file(path);
    } catch (const InputError&) {
        throw ConfigError("cannot open registry " + path.string());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return parse_registry(doc, path.parent_path());
}

json RunConfig::to_json() const {
    return {{"registry", registry.string()},
            {"gallery", gallery.string()},
            {"out", out_dir.string()},
            {"target_label", target_label},
            {"identity",
             {{"epsilon", identity.epsilon},
              {"min_votes", identity.min_votes},
              {"no_embedding_policy", to_string(identity.no_embedding)}}},
            {"eyes", {{"left_first", eyes.left_first}, {"right_first", eyes.right_first}}},
            {"attention",
             {{"threshold_c", attention.threshold_c},
              {"gap_factor", attention.gap_factor},
              {"lambda_floor_policy", to_string(attention.floor_policy)},
              {"lambda_floor", attention.floor_value}}},
            {"market",
             {{"trading_close", format_clock(market.trading_close)},
              {"max_staleness_min", market.max_staleness.count()}}},
            {"standard_errors", "classical"}};
}

RunConfig RunConfig::from_json(const json& doc, const fs::path& base_dir) {
    if (!doc.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    RunConfig c;
    try {
        if (doc.contains("registry")) {
            c.registry = resolve(base_dir, doc["registry"].get<std::string>());
        }
        if (doc.contains("gallery")) {
            c.gallery = resolve(base_dir, doc["gallery"].get<std::string>());
        }
        if (doc.contains("out")) {
            c.out_dir = resolve(base_dir, doc["out"].get<std::string>());
        }
        c.target_label = doc.value("target_label", c.target_label);
        c.jobs = doc.value("jobs", c.jobs);
        if (doc.contains("identity")) {
            const auto& j = doc["identity"];
            c.identity.epsilon = j.value("epsilon", c.identity.epsilon);
            c.identity.min_votes = j.value("min_votes", c.identity.min_votes);
            if (j.contains("no_embedding_policy")) {
                c.identity.no_embedding = parse_no_embedding_policy(j["no_embedding_policy"].get<std::string>());
            }
        }
        if (doc.contains("eyes")) {
            const auto& j = doc["eyes"];
            c.eyes.left_first = j.value("left_first", c.eyes.left_first);
            c.eyes.right_first = j.value("right_first", c.eyes.right_first);
        }
        if (doc.contains("attention")) {
            const auto& j = doc["attention"];
            c.attention.threshold_c = j.value("threshold_c", c.attention.threshold_c);
            c.attention.gap_factor = j.value("gap_factor", c.attention.gap_factor);
            if (j.contains("lambda_floor_policy")) {
                c.attention.floor_policy = parse_lambda_floor_policy(j["lambda_floor_policy"].get<std::string>());
            }
            c.attention.floor_value = j.value("lambda_floor", c.attention.floor_value);
        }
        if (doc.contains("market")) {
            const auto& j = doc["market"];
            if (j.contains("trading_close")) {
                c.market.trading_close = parse_clock(j["trading_close"].get<std::string>());
            }
            c.market.max_staleness = std::chrono::minutes{j.value("max_staleness_min", c.market.max_staleness.count())};
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return c;
}

RunConfig RunConfig::load(const fs::path& path) {
    std::string text;
    try {
        text = csv::read_text_file(path);
    } catch (const InputError&) {
        throw ConfigError("cannot open config " + path.string());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": invalid JSON: " + e.what());
    }
    return from_json(doc, path.parent_path());
}

std::string stage_hash(const RunConfig& config, Stage stage) {
    const json full = config.to_json();
    json key;
    auto file_hash = [](const fs::path& p) -> std::string {
        if (p.empty() || !fs::exists(p)) {
            return "missing";
        }
        return fnv1a_hex(csv::read_text_file(p));
    };
    switch (stage) {
    case Stage::identify:
        key = {{"stage", "identify"},
               {"registry", full["registry"]},
               {"registry_content", file_hash(config.registry)},
               {"gallery", full["gallery"]},
               {"gallery_content", file_hash(config.gallery)},
               {"target_label", full["target_label"]},
               {"identity", full["identity"]}};
        break;
    case Stage::ear:
        key = {{"stage", "ear"}, {"upstream", stage_hash(config, Stage::identify)}, {"eyes", full["eyes"]}};
        break;
    case Stage::attention:
        key = {{"stage", "attention"}, {"upstream", stage_hash(config, Stage::ear)}, {"attention", full["attention"]}};
        break;
    case Stage::eventstudy:
        key = {{"stage", "eventstudy"},
               {"upstream", stage_hash(config, Stage::attention)},
               {"market", full["market"]},
               {"standard_errors", full["standard_errors"]}};
        break;
    }
    return fnv1a_hex(key.dump());
}

// ---------------------------------------------------------------- identify

StageReport cmd_identify(const RunConfig& config) {
    config.identity.validate();
    const Registry registry = read_registry(config.registry);
    const Gallery gallery = read_gallery(config.gallery);
    if (gallery.empty()) {
        throw ConfigError("gallery " + config.gallery.string() + " is empty");
    }
    if (!gallery.has_label(config.target_label)) {
        throw ConfigError("gallery " + config.gallery.string() + " has no entries labelled '" +
                          config.target_label + "'");
    }
    for (const auto& rec : registry.conferences) {
        if (!fs::exists(rec.landmarks)) {
            throw InputError(rec.conference_id + ": cannot open landmark stream " + rec.landmarks.string());
        }
    }
    begin_stage(config, Stage::identify);
    const std::string hash = stage_hash(config, Stage::identify);
    const fs::path dir = stage_dir(config, Stage::identify);

    const std::size_t n = registry.conferences.size();
    std::vector<json> diagnostics(n);
    std::vector<std::optional<Exclusion>> exclusions(n);
    std::vector<std::optional<std::string>> warnings(n);
    parallel_for(n, config.jobs, [&](std::size_t i) {
        const auto& rec = registry.conferences[i];
        json diag = {{"conference_id", rec.conference_id}};
        try {
            const auto frames = read_landmark_stream(rec.landmarks, rec.conference_id);
            const auto result = filter_speaker_frames(frames, gallery, config.target_label, config.identity);
            std::ostringstream out;
            write_landmark_stream(out, result.frames, meta_json("identify", hash));
            csv::write_text_file(dir / (rec.conference_id + ".jsonl"), out.str());
            const auto& d = result.diagnostics;
            diag["status"] = "ok";
            diag["total"] = d.total;
            diag["kept"] = d.kept;
            diag["rejected"] = d.rejected;
            diag["unknown"] = d.unknown;
            diag["no_embedding"] = d.no_embedding;
            if (d.kept == 0) {
                warnings[i] = rec.conference_id + ": no frames classified as '" + config.target_label + "'";
                diag["warning"] = *warnings[i];
            }
        } catch (const InputError&) {
            throw;
        } catch (const ConfigError&) {
            throw;
        } catch (const DataError& e) {
            exclusions[i] = Exclusion{rec.conference_id, "identify", reason_for(rec.conference_id, e.what())};
            diag["status"] = "excluded";
            diag["reason"] = e.what();
        }
        diagnostics[i] = std::move(diag);
    });

    StageReport report;
    json diag_doc = {{"_meta", meta_json("identify", hash)}, {"conferences", json::array()}};
    for (std::size_t i = 0; i < n; ++i) {
        diag_doc["conferences"].push_back(diagnostics[i]);
        if (exclusions[i]) {
            report.exclusions.push_back(*exclusions[i]);
        }
        if (warnings[i]) {
            report.warnings.push_back(*warnings[i]);
        }
    }
    csv::write_text_file(dir / "diagnostics.json", diag_doc.dump(2) + "\n");
    csv::write_text_file(dir / "exclusions.csv",
                         exclusions_csv(report.exclusions, provenance_header("identify", hash)));
    finish_stage(config, Stage::identify, {{"conferences", n}, {"excluded", report.exclusions.size()}});
    log_report(report, "identify");
    return report;
}

// --------------------------------------------------------------------- ear

StageReport cmd_ear(const RunConfig& config) {
    require_upstream(config, Stage::identify);
    const Registry registry = read_registry(config.registry);
    begin_stage(config, Stage::ear);
    const std::string hash = stage_hash(config, Stage::ear);
    const fs::path dir = stage_dir(config, Stage::ear);
    const fs::path upstream = stage_dir(config, Stage::identify);

    StageReport report;
    report.exclusions = read_exclusions(upstream / "exclusions.csv");
    const auto skip = excluded_ids(report.exclusions);

    const std::size_t n = registry.conferences.size();
    std::vector<json> diagnostics(n);
    std::vector<std::optional<Exclusion>> exclusions(n);
    std::vector<std::optional<std::string>> warnings(n);
    parallel_for(n, config.jobs, [&](std::size_t i) {
        const auto& rec = registry.conferences[i];
        json diag = {{"conference_id", rec.conference_id}};
        if (skip.count(rec.conference_id) != 0) {
            diag["status"] = "excluded upstream";
            diagnostics[i] = std::move(diag);
            return;
        }
        const fs::path input = upstream / (rec.conference_id + ".jsonl");
        if (!fs::exists(input)) {
            throw ConfigError("missing identify output " + input.string() + "; run `earstudy identify` first");
        }
        try {
            const auto frames = read_landmark_stream(input, rec.conference_id);
            const auto extraction = extract_ear_series(frames, config.eyes);
            std::string header = provenance_header("ear", hash);
            header += "# conference_id=" + rec.conference_id +
                      " invalid_frames=" + std::to_string(extraction.invalid_frames) + "\n";
            csv::write_text_file(dir / (rec.conference_id + ".csv"), ear_csv(extraction.samples, header));
            diag["status"] = "ok";
            diag["frames"] = frames.size();
            diag["samples"] = extraction.samples.size();
            diag["invalid_frames"] = extraction.invalid_frames;
            if (extraction.samples.empty()) {
                warnings[i] = rec.conference_id + ": empty EAR series";
                diag["warning"] = *warnings[i];
            }
        } catch (const InputError&) {
            throw;
        } catch (const ConfigError&) {
            throw;
        } catch (const DataError& e) {
            exclusions[i] = Exclusion{rec.conference_id, "ear", reason_for(rec.conference_id, e.what())};
            diag["status"] = "excluded";
            diag["reason"] = e.what();
        }
        diagnostics[i] = std::move(diag);
    });

    json diag_doc = {{"_meta", meta_json("ear", hash)}, {"conferences", json::array()}};
    for (std::size_t i = 0; i < n; ++i) {
        diag_doc["conferences"].push_back(diagnostics[i]);
        if (exclusions[i]) {
            report.exclusions.push_back(*exclusions[i]);
        }
        if (warnings[i]) {
            report.warnings.push_back(*warnings[i]);
        }
    }
    csv::write_text_file(dir / "diagnostics.json", diag_doc.dump(2) + "\n");
    csv::write_text_file(dir / "exclusions.csv", exclusions_csv(report.exclusions, provenance_header("ear", hash)));
    finish_stage(config, Stage::ear, {{"conferences", n}, {"excluded", report.exclusions.size()}});
    log_report(report, "ear");
    return report;
}

// --------------------------------------------------------------- attention

void fill_deltas(std::vector<AttentionRow>& rows) {
    auto delta = [](const std::optional<double>& prev, const std::optional<double>& cur) -> std::optional<double> {
        if (prev && cur) {
            return *cur - *prev;
        }
        return std::nullopt;
    };
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto& row = rows[i];
        if (i == 0) {
            row.delta_lambda.reset();
            row.delta_n_questions_log.reset();
            row.delta_duration_qa_log.reset();
            row.delta_duration_chair_speech_log.reset();
            continue;
        }
        const auto& prev = rows[i - 1];
        row.delta_lambda = row.lambda - prev.lambda;
        row.delta_n_questions_log = delta(prev.n_questions_log, row.n_questions_log);
        row.delta_duration_qa_log = delta(prev.duration_qa_log, row.duration_qa_log);
        row.delta_duration_chair_speech_log = delta(prev.duration_chair_speech_log, row.duration_chair_speech_log);
    }
}

namespace {

const std::vector<std::string>& attention_columns() {
    static const std::vector<std::string> cols{
        "conference_id",         "date",          "Lambda",          "lambda",
        "delta_lambda",          "reading_time_s", "T_s",            "n_samples",
        "n_gaps",                "fps",           "lambda_floored",  "n_questions",
        "n_questions_log",       "duration_qa_log", "duration_chair_speech_log",
        "delta_n_questions_log", "delta_duration_qa_log", "delta_duration_chair_speech_log"};
    return cols;
}

} // namespace

std::string attention_csv(const std::vector<AttentionRow>& rows, const std::string& comment_header) {
    std::string out = comment_header;
    const auto& cols = attention_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        out += (i ? "," : "") + cols[i];
    }
    out += '\n';
    for (const auto& r : rows) {
        const std::vector<std::string> fields{
            r.conference_id,
            r.date,
            csv::format_double(r.Lambda),
            csv::format_double(r.lambda),
            opt_double(r.delta_lambda),
            csv::format_double(r.reading_time_s),
            csv::format_double(r.T_s),
            std::to_string(r.n_samples),
            std::to_string(r.n_gaps),
            csv::format_double(r.fps),
            r.lambda_floored ? "1" : "0",
            r.n_questions ? std::to_string(*r.n_questions) : std::string(),
            opt_double(r.n_questions_log),
            opt_double(r.duration_qa_log),
            opt_double(r.duration_chair_speech_log),
            opt_double(r.delta_n_questions_log),
            opt_double(r.delta_duration_qa_log),
            opt_double(r.delta_duration_chair_speech_log)};
        for (std::size_t i = 0; i < fields.size(); ++i) {
            out += (i ? "," : "") + fields[i];
        }
        out += '\n';
    }
    return out;
}

std::vector<AttentionRow> parse_attention_csv(std::string_view text, std::string_view source_name) {
    const auto table = csv::parse(text, source_name);
    if (table.header != attention_columns()) {
        throw StructuralError(std::string(source_name) + ": unexpected attention table header");
    }
    std::vector<AttentionRow> rows;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& f = table.rows[i];
        const std::string where = std::string(source_name) + ":" + std::to_string(table.line_numbers[i]);
        auto num = [&](std::size_t k) { return csv::to_double(f[k], where); };
        auto opt = [&](std::size_t k) -> std::optional<double> {
            if (f[k].empty()) {
                return std::nullopt;
            }
            return csv::to_double(f[k], where);
        };
        AttentionRow r;
        r.conference_id = f[0];
        r.date = f[1];
        r.Lambda = num(2);
        r.lambda = num(3);
        r.delta_lambda = opt(4);
        r.reading_time_s = num(5);
        r.T_s = num(6);
        r.n_samples = static_cast<std::size_t>(num(7));
        r.n_gaps = static_cast<std::size_t>(num(8));
        r.fps = num(9);
        r.lambda_floored = f[10] == "1";
        if (!f[11].empty()) {
            r.n_questions = static_cast<std::size_t>(num(11));
        }
        r.n_questions_log = opt(12);
        r.duration_qa_log = opt(13);
        r.duration_chair_speech_log = opt(14);
        r.delta_n_questions_log = opt(15);
        r.delta_duration_qa_log = opt(16);
        r.delta_duration_chair_speech_log = opt(17);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<AttentionRow> read_attention_csv(const fs::path& path) {
    return parse_attention_csv(csv::read_text_file(path), path.string());
}

StageReport cmd_attention(const RunConfig& config) {
    config.attention.validate();
    require_upstream(config, Stage::ear);
    const Registry registry = read_registry(config.registry);
    begin_stage(config, Stage::attention);
    const std::string hash = stage_hash(config, Stage::attention);
    const fs::path dir = stage_dir(config, Stage::attention);
    const fs::path upstream = stage_dir(config, Stage::ear);

    StageReport report;
    report.exclusions = read_exclusions(upstream / "exclusions.csv");
    const auto skip = excluded_ids(report.exclusions);

    const std::size_t n = registry.conferences.size();
    std::vector<std::optional<AttentionRow>> rows(n);
    std::vector<std::optional<Exclusion>> exclusions(n);
    std::vector<std::vector<std::string>> warnings(n);
    parallel_for(n, config.jobs, [&](std::size_t i) {
        const auto& rec = registry.conferences[i];
        if (skip.count(rec.conference_id) != 0) {
            return;
        }
        const fs::path input = upstream / (rec.conference_id + ".csv");
        if (!fs::exists(input)) {
            throw ConfigError("missing ear output " + input.string() + "; run `earstudy ear` first");
        }
        try {
            auto samples = read_ear_csv(input);
            if (samples.empty()) {
                throw InsufficientDataError("empty EAR series");
            }
            const double fps = rec.fps ? *rec.fps : estimate_fps(samples);
            const EarSeries series(rec.conference_id, std::move(samples), fps);
            const AttentionIntegral integral = integrate_attention(series, config.attention);
            const LogLevel level = log_level(integral.Lambda, config.attention, rec.conference_id);

            AttentionRow row;
            row.conference_id = rec.conference_id;
            row.date = format_date(rec.date);
            row.Lambda = integral.Lambda;
            row.lambda = level.value;
            row.lambda_floored = level.floored;
            row.reading_time_s = integral.reading_time_s;
            row.T_s = integral.T_s;
            row.n_samples = integral.n_samples;
            row.n_gaps = integral.n_gaps;
            row.fps = fps;
            if (level.floored) {
                warnings[i].push_back(rec.conference_id + ": Lambda floored to " +
                                      csv::format_double(config.attention.floor_value));
            }

            if (!rec.transcript.empty() && !rec.segments.empty()) {
                const std::string transcript = csv::read_text_file(rec.transcript);
                const SpeakerSegments segments = read_segments_csv(rec.segments, rec.conference_id);
                try {
                    const auto bench = benchmark_variables(transcript, segments, 0.0, rec.qa_duration_s());
                    row.n_questions = bench.n_questions;
                    row.n_questions_log = bench.n_questions_log;
                    row.duration_qa_log = bench.duration_qa_log;
                    row.duration_chair_speech_log = bench.duration_chair_speech_log;
                } catch (const DomainError& e) {
                    warnings[i].push_back(std::string("benchmark variables unavailable: ") + e.what());
                }
            } else {
                warnings[i].push_back(rec.conference_id + ": no transcript/segments, benchmark variables blank");
            }
            rows[i] = std::move(row);
        } catch (const InputError&) {
            throw;
        } catch (const ConfigError&) {
            throw;
        } catch (const DataError& e) {
            exclusions[i] = Exclusion{rec.conference_id, "attention", reason_for(rec.conference_id, e.what())};
        }
    });

    std::vector<AttentionRow> table;
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i]) {
            table.push_back(std::move(*rows[i]));
        }
        if (exclusions[i]) {
            report.exclusions.push_back(*exclusions[i]);
        }
        for (auto& w : warnings[i]) {
            report.warnings.push_back(std::move(w));
        }
    }
    fill_deltas(table);

    const std::string header = provenance_header("attention", hash);
    csv::write_text_file(dir / "attention.csv", attention_csv(table, header));
    csv::write_text_file(dir / "exclusions.csv", exclusions_csv(report.exclusions, header));
    finish_stage(config, Stage::attention,
                 {{"conferences", n}, {"included", table.size()}, {"excluded", report.exclusions.size()}});
    log_report(report, "attention");
    return report;
}

// -------------------------------------------------------------- eventstudy

EventStudyResult event_study(const std::vector<AttentionRow>& rows, const Registry& registry,
                             const MarketConfig& market, const PriceLookup& prices, unsigned jobs) {
    EventStudyResult result;
    const std::size_t n = rows.size();
    std::vector<std::optional<EventWindowStats>> stats(n);
    std::vector<std::optional<Exclusion>> exclusions(n);
    std::vector<ConferenceTimeline> timelines(n);
    for (std::size_t i = 0; i < n; ++i) {
        const ConferenceRecord* rec = registry.find(rows[i].conference_id);
        if (rec == nullptr) {
            throw ConfigError("attention table lists '" + rows[i].conference_id + "' which is not in the registry");
        }
        const auto close_tod = rec->trading_close.value_or(market.trading_close);
        timelines[i] = build_timeline(rec->qa_start, rec->conference_end, at_local_time(rec->qa_start, close_tod));
    }
    parallel_for(n, jobs, [&](std::size_t i) {
        const ConferenceRecord& rec = *registry.find(rows[i].conference_id);
        try {
            stats[i] = event_window_stats(prices(rec), timelines[i], rec.conference_id, market);
        } catch (const InputError&) {
            throw;
        } catch (const DataError& e) {
            exclusions[i] = Exclusion{rec.conference_id, "eventstudy", reason_for(rec.conference_id, e.what())};
        }
    });

    std::vector<std::size_t> usable_rows;
    for (std::size_t i = 0; i < n; ++i) {
        if (stats[i]) {
            result.windows.push_back(*stats[i]);
            if (rows[i].delta_lambda) {
                usable_rows.push_back(i);
            }
        }
        if (exclusions[i]) {
            result.exclusions.push_back(*exclusions[i]);
        }
    }
    result.usable_conferences = usable_rows.size();
    if (usable_rows.size() < 3) {
        throw InsufficientDataError("only " + std::to_string(usable_rows.size()) +
                                    " conferences have both event windows and a delta lambda; need at least 3");
    }

    auto dependent_value = [&](std::size_t dep, std::size_t i) {
        const auto& s = *stats[i];
        switch (dep) {
        case 0:
            return s.r_d;
        case 1:
            return s.r_a;
        default:
            return s.vol_change * 100.0;
        }
    };
    auto covariate_value = [&](std::size_t cov, std::size_t i) -> std::optional<double> {
        const auto& r = rows[i];
        switch (cov) {
        case 0:
            return r.delta_lambda;
        case 1:
            return r.delta_n_questions_log;
        case 2:
            return r.delta_duration_qa_log;
        default:
            return r.delta_duration_chair_speech_log;
        }
    };

    for (std::size_t dep = 0; dep < std::size(kDependents); ++dep) {
        EventStudyTable table;
        table.dependent = kDependents[dep];
        for (std::size_t cov = 0; cov < std::size(kCovariates); ++cov) {
            RegressionInput input;
            for (std::size_t i = 0; i < n; ++i) {
                if (!stats[i]) {
                    continue;
                }
                const auto x = covariate_value(cov, i);
                if (!x) {
                    continue;
                }
                input.x.push_back(*x);
                input.y.push_back(dependent_value(dep, i));
                input.labels.push_back(rows[i].conference_id);
            }
            try {
                table.columns.push_back({kCovariates[cov], ols_univariate(input)});
            } catch (const DataError& e) {
                table.skipped.emplace_back(kCovariates[cov], e.what());
            }
        }
        table.rendered = render_table(table.dependent, table.columns);
        for (const auto& [cov, reason] : table.skipped) {
            table.rendered.text += "Skipped " + cov + ": " + reason + "\n";
        }
        result.tables.push_back(std::move(table));
    }
    return result;
}

namespace {

std::string windows_csv(const std::vector<EventWindowStats>& windows, const std::string& header) {
    std::string out = header;
    out += "conference_id,tau1,tau2,tau3,tau4,r_d,r_a,sigma_b,sigma_a,vol_change,n_returns_b,n_returns_a\n";
    for (const auto& w : windows) {
        out += w.conference_id + "," + format_instant(w.timeline.tau1) + "," + format_instant(w.timeline.tau2) + "," +
               format_instant(w.timeline.tau3) + "," + format_instant(w.timeline.tau4) + "," +
               csv::format_double(w.r_d) + "," + csv::format_double(w.r_a) + "," + csv::format_double(w.sigma_b) +
               "," + csv::format_double(w.sigma_a) + "," + csv::format_double(w.vol_change) + "," +
               std::to_string(w.n_returns_b) + "," + std::to_string(w.n_returns_a) + "\n";
    }
    return out;
}

json window_json(const EventWindowStats& w) {
    return {{"conference_id", w.conference_id},
            {"tau1", format_instant(w.timeline.tau1)},
            {"tau2", format_instant(w.timeline.tau2)},
            {"tau3", format_instant(w.timeline.tau3)},
            {"tau4", format_instant(w.timeline.tau4)},
            {"r_d", w.r_d},
            {"r_a", w.r_a},
            {"sigma_b", w.sigma_b},
            {"sigma_a", w.sigma_a},
            {"vol_change", w.vol_change},
            {"n_returns_b", w.n_returns_b},
            {"n_returns_a", w.n_returns_a}};
}

} // namespace

EventStudyReport cmd_eventstudy(const RunConfig& config, std::ostream* echo) {
    require_upstream(config, Stage::attention);
    const Registry registry = read_registry(config.registry);
    const fs::path upstream = stage_dir(config, Stage::attention);
    const auto rows = read_attention_csv(upstream / "attention.csv");
    begin_stage(config, Stage::eventstudy);
    const std::string hash = stage_hash(config, Stage::eventstudy);
    const fs::path dir = stage_dir(config, Stage::eventstudy);

    // Price files are loaded once each, before any parallel work.
    std::map<fs::path, PriceSeries> cache;
    for (const auto& row : rows) {
        const ConferenceRecord* rec = registry.find(row.conference_id);
        if (rec == nullptr) {
            throw ConfigError("attention table lists '" + row.conference_id + "' which is not in the registry");
        }
        if (rec->prices.empty()) {
            throw ConfigError(rec->conference_id + ": registry names no price file");
        }
        if (cache.count(rec->prices) == 0) {
            try {
                cache.emplace(rec->prices, read_price_csv(rec->prices));
            } catch (const InputError&) {
                throw;
            } catch (const StructuralError& e) {
                throw StructuralError(std::string("price file: ") + e.what());
            }
        }
    }
    const PriceLookup lookup = [&cache](const ConferenceRecord& rec) -> const PriceSeries& {
        return cache.at(rec.prices);
    };

    EventStudyReport report;
    report.exclusions = read_exclusions(upstream / "exclusions.csv");
    EventStudyResult result = event_study(rows, registry, config.market, lookup, config.jobs);
    report.exclusions.insert(report.exclusions.end(), result.exclusions.begin(), result.exclusions.end());
    report.usable_conferences = result.usable_conferences;

    const std::string header = provenance_header("eventstudy", hash);
    std::string text;
    std::string table_csv = header;
    bool first = true;
    json tables = json::array();
    for (const auto& t : result.tables) {
        text += t.rendered.text + "\n";
        if (first) {
            table_csv += t.rendered.csv;
            first = false;
        } else {
            table_csv += t.rendered.csv.substr(t.rendered.csv.find('\n') + 1);
        }
        json tj = t.rendered.json;
        tj["skipped"] = json::array();
        for (const auto& [cov, reason] : t.skipped) {
            tj["skipped"].push_back({{"covariate", cov}, {"reason", reason}});
        }
        tables.push_back(std::move(tj));
    }
    json windows = json::array();
    for (const auto& w : result.windows) {
        windows.push_back(window_json(w));
    }
    const json doc = {{"_meta", meta_json("eventstudy", hash)},
                      {"usable_conferences", result.usable_conferences},
                      {"tables", tables},
                      {"windows", windows}};

    csv::write_text_file(dir / "windows.csv", windows_csv(result.windows, header));
    csv::write_text_file(dir / "tables.txt", header + text);
    csv::write_text_file(dir / "tables.csv", table_csv);
    csv::write_text_file(dir / "tables.json", doc.dump(2) + "\n");
    csv::write_text_file(dir / "exclusions.csv", exclusions_csv(report.exclusions, header));
    finish_stage(config, Stage::eventstudy,
                 {{"usable_conferences", result.usable_conferences}, {"excluded", report.exclusions.size()}});
    log_report(report, "eventstudy");
    report.tables_text = std::move(text);
    if (echo != nullptr) {
        *echo << report.tables_text;
    }
    return report;
}

EventStudyReport cmd_run(const RunConfig& config, std::ostream* echo) {
    fs::create_directories(config.out_dir);
    csv::write_text_file(config.out_dir / "run_config.json",
                         json{{"_meta", meta_json("run", stage_hash(config, Stage::eventstudy))},
                              {"config", config.to_json()},
                              {"stage_hashes",
                               {{"identify", stage_hash(config, Stage::identify)},
                                {"ear", stage_hash(config, Stage::ear)},
                                {"attention", stage_hash(config, Stage::attention)},
                                {"eventstudy", stage_hash(config, Stage::eventstudy)}}}}
                                 .dump(2) +
                             "\n");
    const StageReport identify = cmd_identify(config);
    const StageReport ear = cmd_ear(config);
    const StageReport attention = cmd_attention(config);
    EventStudyReport report = cmd_eventstudy(config, echo);
    for (const auto* r : {&identify, &ear, &attention}) {
        report.warnings.insert(report.warnings.end(), r->warnings.begin(), r->warnings.end());
    }
    return report;
}

} // namespace earstudy::pipeline
