#include "earstudy/cli.h"

#include "earstudy/errors.h"
#include "earstudy/pipeline.h"
#include "earstudy/synth.h"

#include "CLI11.hpp"

#include <iostream>
#include <optional>

namespace earstudy {

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::string registry;
    std::string gallery;
    std::optional<unsigned> jobs;
    bool force = false;
    std::optional<std::uint64_t> seed;
    std::optional<double> epsilon;
    std::optional<int> min_votes;
    std::string target_label;
    std::string no_embedding_policy;
    std::string trading_close;
    std::optional<double> threshold_c;
    std::optional<double> gap_factor;
    std::string lambda_floor_policy;
    std::optional<double> lambda_floor;
};

pipeline::RunConfig build_config(const Overrides& o) {
    pipeline::RunConfig c;
    if (!o.config.empty()) {
        c = pipeline::RunConfig::load(o.config);
    }
    if (!o.out.empty()) {
        c.out_dir = o.out;
    }
    if (!o.registry.empty()) {
        c.registry = o.registry;
    }
    if (!o.gallery.empty()) {
        c.gallery = o.gallery;
    }
    if (o.jobs) {
        c.jobs = *o.jobs;
    }
    c.force = o.force;
    if (o.epsilon) {
        c.identity.epsilon = *o.epsilon;
    }
    if (o.min_votes) {
        c.identity.min_votes = *o.min_votes;
    }
    if (!o.target_label.empty()) {
        c.target_label = o.target_label;
    }
    if (!o.no_embedding_policy.empty()) {
        c.identity.no_embedding = parse_no_embedding_policy(o.no_embedding_policy);
    }
    if (!o.trading_close.empty()) {
        try {
            c.market.trading_close = parse_clock(o.trading_close);
        } catch (const StructuralError& e) {
            throw ConfigError(std::string("--trading-close: ") + e.what());
        }
    }
    if (o.threshold_c) {
        c.attention.threshold_c = *o.threshold_c;
    }
    if (o.gap_factor) {
        c.attention.gap_factor = *o.gap_factor;
    }
    if (!o.lambda_floor_policy.empty()) {
        c.attention.floor_policy = parse_lambda_floor_policy(o.lambda_floor_policy);
    }
    if (o.lambda_floor) {
        c.attention.floor_value = *o.lambda_floor;
    }
    if (c.registry.empty()) {
        throw ConfigError("no registry given (--registry or \"registry\" in --config)");
    }
    if (c.jobs == 0) {
        throw ConfigError("--jobs must be at least 1");
    }
    c.identity.validate();
    c.attention.validate();
    return c;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Eye-aspect-ratio attention measure and event study pipeline", pipeline::kToolName};
    app.require_subcommand(1);
    app.set_version_flag("--version", pipeline::kToolVersion);

    Overrides o;
    app.add_option("--config", o.config, "JSON run configuration");
    app.add_option("--out", o.out, "Output directory (fixture directory for synth)");
    app.add_option("--jobs", o.jobs, "Conferences processed concurrently");
    app.add_flag("--force", o.force, "Replace outputs produced under a different configuration");
    app.add_option("--seed", o.seed, "Seed (synth only)");
    app.add_option("--registry", o.registry, "Conference registry JSON");
    app.add_option("--gallery", o.gallery, "Identity gallery JSON");
    app.add_option("--target-label", o.target_label, "Gallery label of the speaker to keep");
    app.add_option("--epsilon", o.epsilon, "Identity ball radius");
    app.add_option("--min-votes", o.min_votes, "Minimum votes for a label");
    app.add_option("--no-embedding-policy", o.no_embedding_policy, "drop | assume_target");
    app.add_option("--threshold-c", o.threshold_c, "EAR threshold for the attention measure");
    app.add_option("--gap-factor", o.gap_factor, "Spacing, in sample periods, counted as a gap");
    app.add_option("--lambda-floor-policy", o.lambda_floor_policy, "error | epsilon_floor");
    app.add_option("--lambda-floor", o.lambda_floor, "Floor applied to Lambda under epsilon_floor");
    app.add_option("--trading-close", o.trading_close, "Default trading close, HH:MM exchange time");

    auto* identify = app.add_subcommand("identify", "Keep frames showing the target speaker");
    auto* ear = app.add_subcommand("ear", "Per-frame eye aspect ratio series");
    auto* attention = app.add_subcommand("attention", "Attention measure and benchmark variables");
    auto* eventstudy = app.add_subcommand("eventstudy", "Event windows and regression tables");
    auto* run = app.add_subcommand("run", "All stages in order");
    auto* synth = app.add_subcommand("synth", "Write a synthetic fixture directory");
    std::string scenario;
    std::string preset_name;
    auto* scenario_opt = synth->add_option("--scenario", scenario, "Scenario JSON file");
    synth->add_option("--preset", preset_name, "Built-in suite: planted | null")->excludes(scenario_opt);
    for (auto* sub : {identify, ear, attention, eventstudy, run, synth}) {
        sub->fallthrough();
    }

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << pipeline::kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        if (synth->parsed()) {
            if (o.out.empty()) {
                throw ConfigError("synth needs --out <fixture directory>");
            }
            synth::FixtureSpec spec;
            if (!scenario.empty()) {
                spec = synth::read_fixture_spec(scenario, o.seed);
            } else if (!preset_name.empty()) {
                spec = synth::preset(preset_name, o.seed.value_or(1));
            } else {
                throw ConfigError("synth needs --scenario <file> or --preset <name>");
            }
            const auto summary = synth::write_fixture(spec, o.out);
            out << "wrote " << summary.conferences << " conferences, " << summary.frames << " frames, "
                << summary.price_bars << " price bars to " << o.out << "\n";
            return 0;
        }
        if (o.seed) {
            throw ConfigError("--seed applies to synth only");
        }
        const pipeline::RunConfig config = build_config(o);
        if (identify->parsed()) {
            pipeline::cmd_identify(config);
        } else if (ear->parsed()) {
            pipeline::cmd_ear(config);
        } else if (attention->parsed()) {
            pipeline::cmd_attention(config);
        } else if (eventstudy->parsed()) {
            pipeline::cmd_eventstudy(config, &out);
        } else if (run->parsed()) {
            pipeline::cmd_run(config, &out);
        }
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return 2;
    }
}

} // namespace earstudy
