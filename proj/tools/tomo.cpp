// tomo: command-line front end for running, sampling and checking experiments.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "qtomo/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitUsage = 2;

struct SettingFlag {
    const char* key;
    const char* help;
};

const SettingFlag kSettingFlags[] = {
    {"d", "qudit dimension (1-4)"},
    {"r", "rank of the hidden state"},
    {"n", "copies per trial"},
    {"eta", "POVM slack in (0,1)"},
    {"set-size", "Haar set size, or theorem1"},
    {"trials", "number of trials"},
    {"metric", "trace|fidelity|infidelity|purified|bures"},
    {"thresholds", "comma-separated accuracy grid"},
    {"seed", "master seed"},
    {"out", "output path"},
    {"set-file", "USET file to use instead of sampling"},
    {"class", "membership class A or B"},
    {"threads", "worker threads"},
};

struct Flags {
    std::string config_path;
    std::map<std::string, std::string> values;
    std::string suite = "all";
};

void add_setting_flags(CLI::App& cmd, Flags& flags) {
    cmd.add_option("--config", flags.config_path, "key=value config file; flags override it");
    for (const auto& flag : kSettingFlags) cmd.add_option(std::string("--") + flag.key, flags.values[flag.key], flag.help);
}

qtomo::ExperimentConfig resolve(const Flags& flags, qtomo::Mode mode) {
    qtomo::ExperimentConfig cfg;
    if (!flags.config_path.empty()) qtomo::apply_config_file(cfg, flags.config_path);
    for (const auto& [key, value] : flags.values)
        if (!value.empty()) qtomo::apply_setting(cfg, key, value);
    cfg.mode = mode;
    cfg.validate();
    return cfg;
}

int do_run(const qtomo::ExperimentConfig& cfg) {
    const auto result = qtomo::run_experiment(cfg);
    if (cfg.out.empty()) std::cout << result.jsonl;
    const auto& s = result.stats;
    std::cerr << "trials=" << s.trials << " fail_rate=" << qtomo::format_g17(s.fail_rate)
              << " smd_trace=" << qtomo::format_g17(s.smd_trace)
              << " smd_infidelity=" << qtomo::format_g17(s.smd_infidelity)
              << " set=" << (result.membership.overall ? "verified" : "unverified") << "\n";
    return kExitPass;
}

int do_dist(const qtomo::ExperimentConfig& cfg) {
    const std::string csv = qtomo::run_distribution(cfg);
    if (cfg.out.empty()) std::cout << csv;
    return kExitPass;
}

int do_povm_build(const qtomo::ExperimentConfig& cfg) {
    const std::string path = !cfg.set_file.empty() ? cfg.set_file : cfg.out;
    if (path.empty()) throw qtomo::Error("povm-build needs --set-file or --out");
    qtomo::ExperimentConfig fresh = cfg;
    fresh.set_file.clear();
    const qtomo::UnitarySet set = qtomo::experiment_set(fresh);
    qtomo::save_unitary_set(path, set);
    std::cout << "wrote " << set.count() << " unitaries (d=" << set.d << ", seed=" << set.seed << ") to " << path
              << "\n";
    return kExitPass;
}

int do_povm_check(const qtomo::ExperimentConfig& cfg) {
    const qtomo::UnitarySet set = qtomo::experiment_set(cfg);
    const auto report = qtomo::check_membership(set, cfg.n, cfg.d, cfg.r, cfg.eta, cfg.membership_class, cfg.threads);
    qtomo::write_membership_report(std::cout, report);
    return report.overall ? kExitPass : kExitCheckFailure;
}

int do_verify(const std::string& suite) {
    const auto report = qtomo::verify_suite(suite, &std::cout);
    std::size_t failed = 0;
    for (const auto& c : report.checks) failed += c.pass ? 0 : 1;
    std::cout << report.checks.size() - failed << "/" << report.checks.size() << " checks passed\n";
    return report.pass() ? kExitPass : kExitCheckFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Streaming Schur-sampling tomography simulator"};
    app.require_subcommand(1);

    Flags run_flags, dist_flags, build_flags, check_flags, verify_flags;
    auto* run = app.add_subcommand("run", "run tomography trials and write JSON Lines");
    auto* dist = app.add_subcommand("dist", "write the Young-label distribution as CSV");
    auto* build = app.add_subcommand("povm-build", "sample a Haar unitary set and save it");
    auto* check = app.add_subcommand("povm-check", "check class A/B membership of a unitary set");
    auto* verify = app.add_subcommand("verify", "run invariant verification suites");
    add_setting_flags(*run, run_flags);
    add_setting_flags(*dist, dist_flags);
    add_setting_flags(*build, build_flags);
    add_setting_flags(*check, check_flags);
    verify->add_option("suite", verify_flags.suite, "partitions|repr|stream|povm|tomo|exec|all");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*run) return do_run(resolve(run_flags, qtomo::Mode::run));
        if (*dist) return do_dist(resolve(dist_flags, qtomo::Mode::dist));
        if (*build) return do_povm_build(resolve(build_flags, qtomo::Mode::povm_build));
        if (*check) return do_povm_check(resolve(check_flags, qtomo::Mode::povm_check));
        if (*verify) return do_verify(verify_flags.suite);
    } catch (const qtomo::NumericalIntegrityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    } catch (const qtomo::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCheckFailure;
    }
    return kExitUsage;
}
