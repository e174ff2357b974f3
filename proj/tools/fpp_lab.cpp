#include <chrono>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpp/experiments.hpp"

namespace ex = fpp::experiments;

namespace {

const std::map<std::string, std::string> kSubcommands{
    {"variance", "variance_scaling"}, {"fm", "fm_compare"},   {"geo-length", "geo_length"},
    {"low-density", "low_density"},   {"cheap-path", "cheap_path"}, {"animals", "animals"},
    {"encoding", "encoding"},         {"entropy", "entropy_suite"},
};

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int workers = 0;
    std::vector<std::string> sets;
};

int workers_from_env() {
    if (const char* w = std::getenv("WORKERS")) {
        try {
            const int v = std::stoi(w);
            if (v > 0) return v;
        } catch (const std::exception&) {
        }
        throw ex::ConfigError("WORKERS must be a positive integer");
    }
    return 1;
}

ex::json prepare(ex::json doc, const Flags& f, const std::string& experiment) {
    for (const auto& s : f.sets) ex::apply_override(doc, s);
    if (f.seed) doc["master_seed"] = *f.seed;
    if (!doc.contains("experiment")) doc["experiment"] = experiment;
    else if (!experiment.empty() && doc["experiment"] != experiment)
        throw ex::ConfigError("config experiment " + doc["experiment"].dump() + " does not match the subcommand");
    return doc;
}

int run(const std::string& sub, const Flags& f) {
    const auto start = std::chrono::steady_clock::now();
    const ex::json doc = ex::read_json_file(f.config);
    ex::RunOptions opt;
    opt.workers = f.workers > 0 ? f.workers : workers_from_env();

    std::vector<ex::json> runs;
    if (sub == "all") {
        if (!doc.is_object() || !doc.contains("runs") || !doc["runs"].is_array())
            throw ex::ConfigError("the all subcommand needs {\"runs\": [...]}");
        ex::json shared = doc;
        shared.erase("runs");
        for (const auto& r : doc["runs"]) {
            ex::json merged = shared;
            merged.update(r);
            runs.push_back(prepare(merged, f, ""));
        }
    } else {
        runs.push_back(prepare(doc, f, kSubcommands.at(sub)));
    }

    std::vector<ex::ExperimentConfig> configs;
    for (const auto& r : runs) configs.push_back(ex::config_from_json(r));

    std::vector<ex::ResultRow> rows;
    std::vector<ex::Check> checks;
    for (const auto& cfg : configs) {
        auto res = ex::run_experiment(cfg, opt);
        rows.insert(rows.end(), res.rows.begin(), res.rows.end());
        for (auto& c : res.checks) {
            c.name = cfg.experiment + "." + c.name;
            checks.push_back(std::move(c));
        }
    }

    std::string out = f.out;
    if (out.empty() && !configs.empty()) out = configs.front().out_path;
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (out.empty()) std::cout << ex::to_csv(rows);
    else ex::write_outputs(out, rows, sub == "all" ? doc : runs.front(), checks, wall);

    int failed = 0;
    for (const auto& c : checks) {
        std::cerr << (c.passed ? "PASS " : "FAIL ") << c.name << (c.detail.empty() ? "" : "  (" + c.detail + ")") << "\n";
        failed += !c.passed;
    }
    if (failed > 0) {
        std::cerr << failed << " check(s) failed\n";
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"First-passage percolation laboratory"};
    app.set_version_flag("--version", FPP_VERSION);
    app.require_subcommand(1);
    app.footer(ex::config_schema());

    Flags flags;
    std::vector<std::string> names;
    for (const auto& [name, _] : kSubcommands) names.push_back(name);
    names.push_back("all");
    for (const auto& name : names) {
        auto* sc = app.add_subcommand(name, name == "all" ? "run every config in {\"runs\": [...]}"
                                                          : "run the " + kSubcommands.at(name) + " experiment");
        sc->add_option("--config", flags.config, "JSON config file")->required();
        sc->add_option("--out", flags.out, "CSV output path (overrides out_path)");
        sc->add_option("--seed", flags.seed, "master seed (overrides master_seed)");
        sc->add_option("--workers", flags.workers, "worker threads (default: $WORKERS or 1)")->check(CLI::PositiveNumber);
        sc->add_option("--set", flags.sets, "key=value override, dotted paths allowed (repeatable)");
        sc->footer(ex::config_schema());
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    try {
        return run(sub, flags);
    } catch (const ex::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
