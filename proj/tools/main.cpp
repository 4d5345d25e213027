#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "thomaslab/config.hpp"
#include "thomaslab/runner.hpp"

namespace {

constexpr int kExitSchema = 2;
constexpr int kExitNumeric = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    int threads = 0; // 0 = all cores
    std::uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool needs_out) {
    cmd->add_option("--config", args.config_path, "config file (JSON)")->required();
    if (needs_out)
        cmd->add_option("--out", args.out_dir,
                        "output directory (default: $THOMAS_LAB_OUT or ./out)");
    cmd->add_option("--threads", args.threads, "worker threads (default: all cores)");
    cmd->add_option("--seed", args.seed, "override the config seed")
        ->each([&](const std::string&) { args.seed_set = true; });
}

tlab::RunConfig load(const CommonArgs& args) {
    tlab::RunConfig cfg = tlab::load_config(args.config_path);
    if (args.seed_set) cfg.numeric.seed = args.seed;
    return cfg;
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

int cmd_run(const CommonArgs& args) {
    const tlab::RunConfig cfg = load(args);
    for (const std::string& w : tlab::validate_config(cfg))
        std::cerr << "warning: " << w << '\n';
    const std::string out = args.out_dir.empty() ? tlab::default_out_dir() : args.out_dir;
    const tlab::RunOutcome outcome = tlab::run_task(cfg, out, resolve_threads(args.threads));
    std::cout << "task " << cfg.task_name << ": " << outcome.report.at("status").get<std::string>()
              << " (report: " << out << "/run_report.json)\n";
    return outcome.exit_code;
}

int cmd_validate(const CommonArgs& args) {
    const tlab::RunConfig cfg = load(args);
    const auto warnings = tlab::validate_config(cfg);
    std::cout << "config ok: task " << cfg.task_name << ", " << warnings.size()
              << (warnings.size() == 1 ? " warning\n" : " warnings\n");
    for (const std::string& w : warnings) std::cout << "warning: " << w << '\n';
    return 0;
}

int cmd_report(const std::string& where) {
    std::string path = where;
    if (std::filesystem::is_directory(path)) path += "/run_report.json";
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open " << path << '\n';
        return kExitSchema;
    }
    nlohmann::json rep;
    try {
        rep = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: " << path << ": " << e.what() << '\n';
        return kExitSchema;
    }
    std::cout << "task:   " << rep.value("task", std::string("?")) << '\n';
    std::cout << "status: " << rep.value("status", std::string("?")) << '\n';
    std::cout << "hash:   " << rep.value("config_hash", std::string("?")) << '\n';
    if (rep.contains("artifacts"))
        for (const auto& a : rep["artifacts"]) std::cout << "artifact: " << a.get<std::string>() << '\n';
    if (rep.contains("summary")) std::cout << "summary: " << rep["summary"].dump(2) << '\n';
    if (rep.contains("assertions"))
        for (const auto& a : rep["assertions"])
            std::cout << "assertion " << a.value("name", std::string("?")) << ": "
                      << (a.value("pass", false) ? "pass" : "FAIL") << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Floquet fiber laboratory for periodic cylinder operators"};
    app.require_subcommand(1);

    CommonArgs run_args, validate_args;
    std::string report_path;

    CLI::App* run = app.add_subcommand("run", "execute a task and write artifacts");
    add_common(run, run_args, true);
    CLI::App* validate = app.add_subcommand("validate", "schema-check a config");
    add_common(validate, validate_args, false);
    CLI::App* report = app.add_subcommand("report", "pretty-print a run report");
    report->add_option("--out", report_path, "run directory or run_report.json path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitSchema;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (validate->parsed()) return cmd_validate(validate_args);
        return cmd_report(report_path);
    } catch (const tlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitSchema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumeric;
    }
}
