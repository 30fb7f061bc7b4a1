#pragma once

// Experiment configuration, deterministic seeding, orchestration of batches
// of tomography trials, and the per-module verification suites.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qtomo/error.hpp"
#include "qtomo/numerics.hpp"
#include "qtomo/parallel.hpp"
#include "qtomo/partitions.hpp"
#include "qtomo/povm.hpp"
#include "qtomo/povm_exec.hpp"
#include "qtomo/repr.hpp"
#include "qtomo/schur_stream.hpp"
#include "qtomo/tomography.hpp"

namespace qtomo {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Seeding

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// hash64(master_seed, index).
inline std::uint64_t child_seed(std::uint64_t master_seed, std::uint64_t index) {
    return splitmix64(splitmix64(master_seed) ^ (index * 0xD6E8FEB86659FD93ULL + 0x632BE59BD9B4E019ULL));
}

// Reserved stream indices, far above any trial index.
inline constexpr std::uint64_t kStateStream = ~std::uint64_t{0};
inline constexpr std::uint64_t kSetStream = ~std::uint64_t{0} - 1;

// ---------------------------------------------------------------------------
// Configuration

enum class Mode { run, dist, povm_build, povm_check, verify };

inline const char* to_string(Mode m) {
    switch (m) {
        case Mode::run: return "run";
        case Mode::dist: return "dist";
        case Mode::povm_build: return "povm-build";
        case Mode::povm_check: return "povm-check";
        case Mode::verify: return "verify";
    }
    return "?";
}

inline Mode parse_mode(const std::string& s) {
    if (s == "run") return Mode::run;
    if (s == "dist") return Mode::dist;
    if (s == "povm-build") return Mode::povm_build;
    if (s == "povm-check") return Mode::povm_check;
    if (s == "verify") return Mode::verify;
    throw Error("unknown mode '" + s + "'");
}

struct ExperimentConfig {
    int d = 2;
    int r = 1;
    int n = 4;
    double eta = 0.5;
    std::optional<std::size_t> set_size;  // empty: size from required_set_size
    std::size_t trials = 100;
    Metric metric = Metric::trace;
    std::vector<double> thresholds{0.05, 0.1, 0.2};
    std::uint64_t master_seed = 1;
    Mode mode = Mode::run;
    MembershipClass membership_class = MembershipClass::A;
    unsigned threads = 1;
    std::string out;
    std::string set_file;

    void validate() const {
        if (d < 1 || d > 4) throw Error("config: d must lie in [1, 4]");
        if (r < 1 || r > d) throw Error("config: r must lie in [1, d]");
        if (n < 1) throw Error("config: n must be at least 1");
        if (!(eta > 0.0 && eta < 1.0)) throw Error("config: eta must lie in (0, 1)");
        if (trials < 1) throw Error("config: trials must be at least 1");
        if (set_size && *set_size < 1) throw Error("config: set_size must be at least 1");
        if (threads < 1) throw Error("config: threads must be at least 1");
    }
};

inline std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size()) throw Error("bad real '" + item + "'");
        out.push_back(v);
    }
    return out;
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        T out{};
        if constexpr (std::is_same_v<T, double>)
            out = std::stod(value, &used);
        else if constexpr (std::is_same_v<T, int>)
            out = std::stoi(value, &used);
        else
            out = static_cast<T>(std::stoull(value, &used));
        if (used != value.size()) throw Error("");
        return out;
    } catch (const std::exception&) {
        throw Error("config: bad value '" + value + "' for " + key);
    }
}

}  // namespace detail

/// Applies one key=value setting. Keys mirror the CLI flag names.
inline void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
    using detail::parse_number;
    if (key == "d") cfg.d = parse_number<int>(key, value);
    else if (key == "r") cfg.r = parse_number<int>(key, value);
    else if (key == "n") cfg.n = parse_number<int>(key, value);
    else if (key == "eta") cfg.eta = parse_number<double>(key, value);
    else if (key == "set-size") {
        if (value == "theorem1") cfg.set_size.reset();
        else cfg.set_size = parse_number<std::size_t>(key, value);
    }
    else if (key == "trials") cfg.trials = parse_number<std::size_t>(key, value);
    else if (key == "metric") cfg.metric = parse_metric(value);
    else if (key == "thresholds") cfg.thresholds = parse_real_list(value);
    else if (key == "seed") cfg.master_seed = parse_number<std::uint64_t>(key, value);
    else if (key == "mode") cfg.mode = parse_mode(value);
    else if (key == "class") {
        if (value == "A") cfg.membership_class = MembershipClass::A;
        else if (value == "B") cfg.membership_class = MembershipClass::B;
        else throw Error("config: class must be A or B");
    }
    else if (key == "threads") cfg.threads = parse_number<unsigned>(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "set-file") cfg.set_file = value;
    else throw Error("config: unknown key '" + key + "'");
}

/// Flat key=value lines; '#' starts a comment; keys under "manifest." are skipped.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("config line " + std::to_string(lineno) + ": expected key=value");
        out[detail::trim(line.substr(0, eq))] = detail::trim(line.substr(eq + 1));
    }
    return out;
}

inline void apply_config_file(ExperimentConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config '" + path + "'");
    for (const auto& [key, value] : parse_key_values(in))
        if (key.rfind("manifest.", 0) != 0) apply_setting(cfg, key, value);
}

inline std::string join_reals(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_g17(v[i]);
    return s;
}

inline void write_config(std::ostream& os, const ExperimentConfig& cfg) {
    os << "d=" << cfg.d << "\nr=" << cfg.r << "\nn=" << cfg.n << "\neta=" << format_g17(cfg.eta)
       << "\nset-size=" << (cfg.set_size ? std::to_string(*cfg.set_size) : std::string("theorem1"))
       << "\ntrials=" << cfg.trials << "\nmetric=" << to_string(cfg.metric)
       << "\nthresholds=" << join_reals(cfg.thresholds) << "\nseed=" << cfg.master_seed
       << "\nmode=" << to_string(cfg.mode) << "\nclass=" << to_string(cfg.membership_class) << "\n";
    if (!cfg.set_file.empty()) os << "set-file=" << cfg.set_file << "\n";
}

// ---------------------------------------------------------------------------
// Experiment inputs

/// The hidden state: a random rank-r density matrix from the state stream.
inline CMatrix experiment_state(const ExperimentConfig& cfg) {
    Rng rng(child_seed(cfg.master_seed, kStateStream));
    return sample_density(cfg.d, cfg.r, rng);
}

inline std::size_t resolved_set_size(const ExperimentConfig& cfg) {
    if (cfg.set_size) return *cfg.set_size;
    const SetSize s = required_set_size(cfg.n, cfg.d, cfg.r, std::min(cfg.eta, 0.5), cfg.membership_class);
    return static_cast<std::size_t>(s.size);
}

inline UnitarySet experiment_set(const ExperimentConfig& cfg) {
    if (!cfg.set_file.empty()) {
        UnitarySet set = load_unitary_set(cfg.set_file);
        if (set.d != cfg.d) throw Error("set file dimension does not match d");
        return set;
    }
    return generate_haar_set(cfg.d, resolved_set_size(cfg), child_seed(cfg.master_seed, kSetStream));
}

// ---------------------------------------------------------------------------
// Runs

struct RunManifest {
    ExperimentConfig config;
    std::uint64_t set_seed = 0;
    std::size_t set_size = 0;
    bool membership_pass = false;
    std::vector<std::uint64_t> child_seeds;
    double wall_seconds = 0.0;
};

inline void write_manifest(std::ostream& os, const RunManifest& m) {
    write_config(os, m.config);
    os << "manifest.version=" << kVersion << "\nmanifest.set_seed=" << m.set_seed
       << "\nmanifest.set_size=" << m.set_size << "\nmanifest.membership=" << to_string(m.config.membership_class)
       << (m.membership_pass ? ":pass" : ":fail") << "\nmanifest.child_seed_rule=hash64(master_seed,trial_index)"
       << "\nmanifest.wall_seconds=" << format_g17(m.wall_seconds) << "\nmanifest.child_seeds=";
    for (std::size_t i = 0; i < m.child_seeds.size(); ++i) os << (i ? "," : "") << m.child_seeds[i];
    os << "\n";
}

struct ExperimentResult {
    std::vector<TrialResult> trials;
    BatchStats stats;
    MembershipReport membership;
    RunManifest manifest;
    std::string jsonl;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const CMatrix rho = experiment_state(cfg);
    auto set = std::make_shared<const UnitarySet>(experiment_set(cfg));

    ExperimentResult result;
    result.membership = check_membership(*set, cfg.n, cfg.d, cfg.r, std::min(cfg.eta, 0.999), cfg.membership_class,
                                         cfg.threads);
    std::optional<MembershipReport> stamp;
    if (result.membership.overall) stamp = result.membership;
    const TomographyEngine engine(set, cfg.eta, stamp);
    const BoundTomography bound = engine.bind(rho);

    result.trials.resize(cfg.trials);
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t i) {
        Rng rng(child_seed(cfg.master_seed, i));
        result.trials[i] = bound.run(cfg.n, rng);
    });
    result.stats = batch_stats(result.trials, cfg.thresholds);

    std::ostringstream os;
    for (std::size_t i = 0; i < result.trials.size(); ++i) write_trial_jsonl(os, i, result.trials[i]);
    write_summary_jsonl(os, result.stats);
    result.jsonl = os.str();

    RunManifest& m = result.manifest;
    m.config = cfg;
    m.set_seed = set->seed;
    m.set_size = set->count();
    m.membership_pass = result.membership.overall;
    for (const auto& t : result.trials) m.child_seeds.push_back(t.seed);
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!cfg.out.empty()) {
        std::ofstream out(cfg.out, std::ios::binary);
        if (!out) throw Error("cannot write '" + cfg.out + "'");
        out << result.jsonl;
        std::ofstream man(cfg.out + ".manifest");
        if (!man) throw Error("cannot write manifest for '" + cfg.out + "'");
        write_manifest(man, m);
    }
    return result;
}

/// Label distribution of the experiment state as CSV.
inline std::string run_distribution(const ExperimentConfig& cfg) {
    cfg.validate();
    std::ostringstream os;
    write_distribution_csv(os, label_distribution(experiment_state(cfg), cfg.n));
    if (!cfg.out.empty()) {
        std::ofstream out(cfg.out);
        if (!out) throw Error("cannot write '" + cfg.out + "'");
        out << os.str();
    }
    return os.str();
}

inline void write_membership_report(std::ostream& os, const MembershipReport& rep) {
    os << "membership class " << to_string(rep.cls) << " eta=" << format_g17(rep.eta) << " n=" << rep.n
       << " d=" << rep.d << " r=" << rep.r << " |S|=" << rep.set_size << " seed=" << rep.seed << "\n";
    for (const auto& e : rep.per_label)
        os << "  " << e.lambda << " -> " << e.mu << "  c=" << format_g17(e.scalar)
           << "  ratio=[" << format_g17(e.min_eig_ratio) << ", " << format_g17(e.max_eig_ratio) << "]  "
           << (e.pass ? "pass" : "FAIL") << "\n";
    os << "overall: " << (rep.overall ? "pass" : "FAIL") << "\n";
}

/// Searches seeds and doubling sizes for a set passing membership.
struct VerifiedSet {
    std::shared_ptr<const UnitarySet> set;
    MembershipReport report;
};

inline std::optional<VerifiedSet> find_verified_set(int n, int d, int r, double eta, MembershipClass cls,
                                                    std::size_t initial_size, std::uint64_t seed,
                                                    int seeds_per_size = 3, int doublings = 4) {
    std::size_t size = initial_size;
    for (int level = 0; level <= doublings; ++level, size *= 2) {
        for (int attempt = 0; attempt < seeds_per_size; ++attempt) {
            const std::uint64_t s = child_seed(seed, static_cast<std::uint64_t>(level) * 1000 + attempt);
            auto set = std::make_shared<const UnitarySet>(generate_haar_set(d, size, s));
            MembershipReport rep = check_membership(*set, n, d, r, eta, cls);
            if (rep.overall) return VerifiedSet{std::move(set), std::move(rep)};
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Verification suites

struct CheckLine {
    std::string suite;
    std::string name;
    double measured = 0.0;
    double bound = 0.0;
    bool pass = false;
};

struct VerifyReport {
    std::vector<CheckLine> checks;
    bool pass() const {
        for (const auto& c : checks)
            if (!c.pass) return false;
        return !checks.empty();
    }
};

namespace detail {

class SuiteWriter {
public:
    SuiteWriter(VerifyReport& report, std::string suite, std::ostream* log)
        : report_(report), suite_(std::move(suite)), log_(log) {}

    /// Records a check that passes when measured <= bound.
    void at_most(const std::string& name, double measured, double bound) {
        push(name, measured, bound, measured <= bound);
    }
    void holds(const std::string& name, bool ok) { push(name, ok ? 1.0 : 0.0, 1.0, ok); }

private:
    void push(const std::string& name, double measured, double bound, bool ok) {
        report_.checks.push_back({suite_, name, measured, bound, ok});
        if (log_)
            *log_ << (ok ? "[pass] " : "[FAIL] ") << suite_ << ": " << name << "  measured=" << format_g17(measured)
                  << "  bound=" << format_g17(bound) << "\n";
    }

    VerifyReport& report_;
    std::string suite_;
    std::ostream* log_;
};

inline void verify_partitions(SuiteWriter& w) {
    double worst = 0.0;
    for (int d = 2; d <= 4; ++d) {
        const int n_max = d == 2 ? 8 : (d == 3 ? 7 : 6);
        for (int n = 1; n <= n_max; ++n) {
            std::uint64_t total = 0;
            for (const auto& lam : enumerate_partitions(n, d)) total += dim_sym(lam) * dim_gl(lam, d);
            worst = std::max(worst, std::abs(static_cast<double>(total) - std::pow(d, n)));
        }
    }
    w.at_most("sum dim P * dim Q = d^n", worst, 0.0);

    double sym_worst = 0.0;
    for (int n = 1; n <= 10; ++n) {
        std::uint64_t total = 0, fact = 1;
        for (int k = 2; k <= n; ++k) fact *= static_cast<std::uint64_t>(k);
        for (const auto& lam : enumerate_partitions(n, n)) total += dim_sym(lam) * dim_sym(lam);
        sym_worst = std::max(sym_worst, std::abs(static_cast<double>(total) - static_cast<double>(fact)));
    }
    w.at_most("sum dim P^2 = n!", sym_worst, 0.0);

    bool involution = true;
    for (int n = 1; n <= 8; ++n)
        for (const auto& lam : enumerate_partitions(n, n)) involution &= lam.conjugate().conjugate() == lam;
    w.holds("conjugation is an involution", involution);
}

inline void verify_repr(SuiteWriter& w) {
    Rng rng(11);
    double hom = 0.0, unit = 0.0, character = 0.0;
    for (int d = 2; d <= 3; ++d) {
        for (int n = 1; n <= (d == 2 ? 5 : 4); ++n) {
            for (const auto& lam : enumerate_partitions(n, d)) {
                const CMatrix x = ginibre(d, d, rng), y = ginibre(d, d, rng);
                const CMatrix lhs = irrep_matrix(lam, x * y).mat;
                const CMatrix rhs = irrep_matrix(lam, x).mat * irrep_matrix(lam, y).mat;
                hom = std::max(hom, (lhs - rhs).norm() / std::max(1.0, lhs.norm()));
                unit = std::max(unit, (irrep_matrix(lam, identity(d)).mat -
                                       identity(static_cast<Eigen::Index>(dim_gl(lam, d)))).norm());
                const CMatrix rho = sample_density(d, d, rng);
                const std::vector<double> xs = gated_spectrum(rho);
                character = std::max(character, std::abs(irrep_matrix(lam, rho).mat.trace().real() -
                                                         schur_polynomial(lam, xs)));
            }
        }
    }
    w.at_most("q(XY) = q(X) q(Y)", hom, 1e-9);
    w.at_most("q(I) = I", unit, 1e-9);
    w.at_most("Tr q(rho) = s(spec rho)", character, 1e-9);

    double inter = 0.0, complete = 0.0;
    for (const auto& [lam, d] : std::vector<std::pair<Partition, int>>{{Partition{1}, 2}, {Partition{2, 1}, 2},
                                                                          {Partition{2, 1}, 3}, {Partition{3, 1}, 3}}) {
        const auto cg = cg_isometries(lam, d);
        inter = std::max(inter, cg_intertwining_residual(*cg, sample_haar_unitary(d, rng)));
        complete = std::max(complete, cg_completeness_residual(*cg));
    }
    w.at_most("Clebsch-Gordan intertwining", inter, 1e-8);
    w.at_most("Clebsch-Gordan completeness", complete, 1e-8);
}

inline void verify_stream(SuiteWriter& w) {
    Rng rng(23);
    double worst = 0.0;
    for (const auto& [d, n_max] : std::vector<std::pair<int, int>>{{2, 5}, {3, 3}}) {
        for (int n = 1; n <= n_max; ++n) {
            const CMatrix rho = sample_density(d, 1 + static_cast<int>(rng.next_u64() % d), rng);
            const auto a = label_distribution(rho, n);
            const auto b = tensor_oracle_distribution(rho, n);
            for (const auto& [lam, p] : a) worst = std::max(worst, std::abs(p - b.at(lam)));
        }
    }
    w.at_most("character formula vs tensor projector", worst, 1e-7);

    double step = 0.0;
    for (const auto& [lam, d] : std::vector<std::pair<Partition, int>>{{Partition{2, 1}, 2}, {Partition{2, 1}, 3}}) {
        const auto rep = physical_step_check(lam, sample_density(d, d, rng), d);
        step = std::max({step, rep.max_probability_residual, rep.max_state_residual});
    }
    w.at_most("Clebsch-Gordan step reproduces s_mu/s_lambda", step, 1e-7);

    bool registers = true;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + trial % 20;
        const auto out = stream_sample(sample_density(2, 2, rng), n, rng, {StreamOptions::PostState::never});
        registers &= out.max_register_dim <= static_cast<std::uint64_t>(2 * (n + 1));
    }
    w.holds("register dimension <= 2(n+1) at d=2", registers);
}

inline void verify_povm(SuiteWriter& w) {
    w.at_most("required set size at (1,2,1,1/2)", std::abs(
                  static_cast<double>(required_set_size(1, 2, 1, 0.5, MembershipClass::A).size) - 77.0), 0.0);
    const UnitarySet trivial{2, {identity(2)}, 0};
    w.holds("S = {I} rejected", !check_membership(trivial, 1, 2, 1, 0.5, MembershipClass::A).overall);

    auto found = find_verified_set(2, 2, 2, 0.5, MembershipClass::B, 64, 5);
    w.holds("verified class-B set found", found.has_value());
    if (!found) return;
    const auto rep_a = check_membership(*found->set, 2, 2, 2, 0.5, MembershipClass::A);
    w.holds("class B implies class A", rep_a.overall);
    double min_fail = 1.0, completeness = 0.0, fail_prob = 0.0;
    Rng rng(31);
    for (const auto& lam : enumerate_partitions(2, 2)) {
        const auto povm = build_povm(lam, found->set, 0.5, &rep_a);
        min_fail = std::min(min_fail, povm.fail_min_eigenvalue());
        completeness = std::max(completeness, povm.completeness_residual());
        for (int k = 0; k < 10; ++k) {
            const CMatrix rho = sample_density(2, 2, rng);
            const CMatrix post = irrep_matrix(lam, rho).mat / schur_polynomial(lam, gated_spectrum(rho));
            fail_prob = std::max(fail_prob, trace_product(post, povm.fail_element));
        }
    }
    w.at_most("fail element PSD (negated min eigenvalue)", -min_fail, 1e-9);
    w.at_most("POVM completeness", completeness, 1e-9);
    w.at_most("Pr[fail] <= 2 eta/(1+eta)", fail_prob, fail_probability_bound(0.5) + 1e-8);
}

inline void verify_tomo(SuiteWriter& w) {
    Rng rng(41);
    double fvdg = -1.0, sandwich = -1.0;
    double fvdg_slack = 1.0, sandwich_slack = 1.0;
    for (int i = 0; i < 200; ++i) {
        const int d = 2 + i % 3;
        const CMatrix a = sample_density(d, 1 + i % d, rng), b = sample_density(d, d, rng);
        const double f = fidelity(a, b), t = trace_distance(a, b);
        const double root = 1.0 - std::sqrt(f), infid = 1.0 - f;
        fvdg_slack = std::min({fvdg_slack, t - root, std::sqrt(std::max(0.0, infid)) - t});
        sandwich_slack = std::min({sandwich_slack, infid - root, 2.0 * root - infid});
    }
    fvdg = -fvdg_slack;
    sandwich = -sandwich_slack;
    w.at_most("Fuchs-van de Graaf (negated slack)", fvdg, 1e-10);
    w.at_most("infidelity sandwich (negated slack)", sandwich, 1e-10);

    const auto found = find_verified_set(3, 2, 2, 0.5, MembershipClass::A, 32, 43);
    w.holds("verified set for the joint check", found.has_value());
    if (found) {
        const TomographyEngine engine(found->set, 0.5, found->report);
        const CMatrix rho = sample_density(2, 2, rng);
        const auto a = direct_joint_distribution(engine, rho, 3);
        const auto b = tensor_oracle_joint_distribution(rho, *found->set, 0.5, 3);
        double worst = 0.0, total = 0.0;
        for (const auto& [key, p] : a) {
            worst = std::max(worst, std::abs(p - b.at(key)));
            total += p;
        }
        w.at_most("closed form vs tensor joint distribution", worst, 1e-8);
        w.at_most("joint distribution normalized", std::abs(total - 1.0), 1e-9);
    }

    // Finite-size bounds on a reduced grid.
    const double eta = 0.5;
    const std::vector<double> deltas{0.1, 0.3, 0.5};
    double tail_excess = -1.0, moment_excess = -1.0, fail_excess = -1.0;
    bool all_found = true;
    for (int n = 2; n <= 6; ++n) {
        const auto set = find_verified_set(n, 2, 2, eta, MembershipClass::A, 64, 100 + n);
        if (!set) {
            all_found = false;
            continue;
        }
        const TomographyEngine engine(set->set, eta, set->report);
        for (int r = 1; r <= 2; ++r) {
            const CMatrix rho = sample_density(2, r, rng);
            const auto stats = exact_statistics(engine, rho, n, deltas);
            for (std::size_t i = 0; i < deltas.size(); ++i)
                tail_excess = std::max(tail_excess,
                                       stats.infidelity_tail[i] - infidelity_tail_bound(n, 2, r, eta, deltas[i]));
            moment_excess = std::max(moment_excess,
                                     stats.conditional_trace_norm_sq - trace_norm_sq_bound(n, 2, r, eta));
            fail_excess = std::max(fail_excess, stats.fail_probability - fail_probability_bound(eta));
        }
    }
    w.holds("verified sets for the bound grid", all_found);
    w.at_most("infidelity tail minus bound", tail_excess, 0.0);
    w.at_most("conditional trace-norm moment minus bound", moment_excess, 0.0);
    w.at_most("fail probability minus bound", fail_excess, 1e-12);

    std::vector<double> points{0.1, 0.2, 5.0, 0.15};
    const auto idx = median_select_index(std::span<const double>(points), 1.0,
                                         [](double a, double b) { return std::abs(a - b); });
    w.at_most("median selection on a scalar configuration", static_cast<double>(idx), 0.0);
}

inline void verify_exec(SuiteWriter& w) {
    Rng rng(53);
    double naimark = 0.0, unitarity = 0.0, e1_pos = 0.0, e1_sum = 0.0, recursive_gap = 0.0, bottom = 0.0;
    const int samples = 20000;
    for (int trial = 0; trial < 3; ++trial) {
        const int dim = 2 + trial, outcomes = 5 + trial;
        const FinitePovm povm = random_finite_povm(dim, outcomes, 1, rng);
        const CMatrix rho = sample_density(dim, dim, rng);
        const auto born = povm.born_probabilities(rho);
        const Dilation dil = naimark_unitary(povm);
        unitarity = std::max(unitarity, (dil.unitary.adjoint() * dil.unitary - identity(dil.unitary.rows())).norm());
        const auto dp = dilated_probabilities(rho, dil);
        for (int x = 0; x < outcomes; ++x) naimark = std::max(naimark, std::abs(dp[x] - born[x]));

        const RecursivePlan plan(povm, 3);
        plan.for_each_node([&](const RecursiveNode& node, int) {
            for (const auto& f : node.operators) e1_pos = std::max(e1_pos, -herm_eigenvalues(f).minCoeff());
            e1_pos = std::max(e1_pos, -herm_eigenvalues(node.bottom).minCoeff());
        });
        plan.for_each_node([&](const RecursiveNode& node, int) {
            CMatrix s = node.bottom;
            for (const auto& f : node.operators) s += f;
            e1_sum = std::max(e1_sum, (s - identity(dim)).norm());
        });
        std::vector<double> counts(static_cast<std::size_t>(outcomes), 0.0);
        for (int i = 0; i < samples; ++i) {
            const auto out = recursive_measure(rho, plan, rng);
            if (out.outcome == kBottomOutcome) bottom += 1.0 / samples;
            else counts[static_cast<std::size_t>(out.outcome)] += 1.0;
        }
        for (int x = 0; x < outcomes; ++x) {
            const double p = born[x];
            const double sigma = std::sqrt(std::max(p * (1 - p), 1e-12) / samples);
            recursive_gap = std::max(recursive_gap, std::abs(counts[x] / samples - p) / (4 * sigma));
        }
    }
    w.at_most("dilation unitarity", unitarity, 1e-9);
    w.at_most("dilated readout vs Born rule", naimark, 1e-9);
    w.at_most("refined operators positive (negated min eigenvalue)", e1_pos, 1e-9);
    w.at_most("refined operators complete", e1_sum, 1e-9);
    w.at_most("recursive sampling error in units of 4 sigma", recursive_gap, 1.0);
    w.at_most("remainder outcome frequency", bottom, 1e-6);
    w.at_most("ancilla qubits for K=8", std::abs(ancilla_qubits(8) - 3.0), 0.0);
}

}  // namespace detail

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"partitions", "repr", "stream", "povm", "tomo", "exec"};
    return names;
}

inline VerifyReport verify_suite(const std::string& name, std::ostream* log = nullptr) {
    VerifyReport report;
    auto run = [&](const std::string& suite) {
        detail::SuiteWriter w(report, suite, log);
        if (suite == "partitions") detail::verify_partitions(w);
        else if (suite == "repr") detail::verify_repr(w);
        else if (suite == "stream") detail::verify_stream(w);
        else if (suite == "povm") detail::verify_povm(w);
        else if (suite == "tomo") detail::verify_tomo(w);
        else if (suite == "exec") detail::verify_exec(w);
    };
    if (name == "all") {
        for (const auto& s : suite_names()) run(s);
    } else {
        bool known = false;
        for (const auto& s : suite_names()) known |= s == name;
        if (!known) throw Error("unknown suite '" + name + "'");
        run(name);
    }
    return report;
}

}  // namespace qtomo
