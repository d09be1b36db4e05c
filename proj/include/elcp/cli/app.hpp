#pragma once

// Command-line front end. `run` parses arguments, dispatches to one command and maps
// library exceptions to the documented exit codes. Each command is also callable as a
// plain function returning a RunReport.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "elcp/calibration.hpp"
#include "elcp/cli/csv.hpp"
#include "elcp/cli/report.hpp"
#include "elcp/errors.hpp"
#include "elcp/parallel.hpp"
#include "elcp/scan.hpp"
#include "elcp/segmentation.hpp"
#include "elcp/simulate.hpp"
#include "elcp/study_config.hpp"

namespace elcp::cli {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,            ///< command completed ("no change detected" included)
    kExitInternal = 1,      ///< unexpected internal error
    kExitUsage = 2,         ///< bad flags, bad level, unknown column
    kExitUnreadable = 3,    ///< input file cannot be opened or read
    kExitNonNumeric = 4,    ///< selected column holds non-numeric text
    kExitMissing = 5,       ///< missing values and no --drop-missing
    kExitNumerical = 6,     ///< degenerate data, solver or scan failure, bootstrap failure
    kExitConfig = 7,        ///< study configuration error
    kExitInvalidInput = 8,  ///< data valid as CSV but unusable (e.g. too short for the scan)
};

/// Seed used when --seed is not given, so casual runs are reproducible.
inline constexpr std::uint64_t kDefaultSeed = 20240601;

enum class Format { Text, Json };

struct CommonArgs {
    std::vector<std::string> arguments;
    Format format = Format::Text;
    unsigned jobs = 1;
};

struct DetectArgs {
    std::string input;
    std::string column;
    bool drop_missing = false;
    std::size_t p = 1;
    double alpha = 0.05;
    std::vector<std::size_t> trim;  ///< empty, {t}, or {t1, t2}
    std::optional<int> r;
    std::size_t bootstrap = 0;      ///< replicates; 0 disables
    std::uint64_t seed = kDefaultSeed;
    bool separate_sigma2 = false;
    std::string profile_out;
};

struct SegmentArgs {
    DetectArgs detect;
    std::size_t min_len = kDefaultMinLen;
    bool depth_adjust = false;
};

struct CritvalArgs {
    std::vector<double> alphas{0.01, 0.05, 0.10};
    std::optional<std::size_t> n;
    int r = 1;
};

struct SimulateArgs {
    std::size_t n = 250;
    std::size_t k = 0;  ///< 0 means no change
    std::vector<double> phi_pre{0.1};
    std::vector<double> phi_post;
    std::string noise = "gaussian";
    std::size_t burn_in = kDefaultBurnIn;
    std::uint64_t seed = kDefaultSeed;
};

struct CritstudyArgs {
    std::size_t n = 250;
    std::vector<double> phi{0.1};
    std::string noise = "gaussian";
    std::size_t reps = 1000;
    std::vector<double> levels{0.01, 0.05, 0.10};
    std::uint64_t seed = kDefaultSeed;
    bool separate_sigma2 = false;
};

namespace detail {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline NoiseKind noise_or_throw(const std::string& name) {
    const auto kind = parse_noise(name);
    if (!kind) throw InputError("unknown noise model '" + name + "' (gaussian, exponential, chisq4, t4)");
    return *kind;
}

struct LoadedSeries {
    TimeSeries series;
    InputDigest digest;
    std::vector<std::string> warnings;
};

inline LoadedSeries load_series(const DetectArgs& a) {
    ColumnData col = read_column(a.input, CsvOptions{a.column, a.drop_missing});
    LoadedSeries out{TimeSeries(col.values), {}, {}};
    out.digest = InputDigest{a.input,          col.column_name, col.column_index, col.rows_read,
                             col.values.size(), col.dropped,    fingerprint(col.values)};
    if (col.dropped > 0)
        out.warnings.push_back("dropped " + std::to_string(col.dropped) +
                               " row(s) with missing values; the remaining values are treated as consecutive, "
                               "which breaks the time structure the AR model assumes");
    return out;
}

inline ScanOptions scan_options(const DetectArgs& a, unsigned jobs) {
    ScanOptions opt;
    opt.alpha = a.alpha;
    opt.r = a.r;
    opt.jobs = jobs;
    opt.solver.shared_sigma2 = !a.separate_sigma2;
    opt.solver.seed = a.seed;
    if (a.trim.size() == 1) opt.trim = std::make_pair(a.trim[0], a.trim[0]);
    else if (a.trim.size() == 2) opt.trim = std::make_pair(a.trim[0], a.trim[1]);
    else if (!a.trim.empty()) throw InputError("--trim takes one value or two comma-separated values");
    return opt;
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError(CsvFailure::Unreadable, "cannot write '" + path + "'");
    out << content;
    if (!out) throw CsvError(CsvFailure::Unreadable, "write to '" + path + "' failed");
}

}  // namespace detail

/// k,stat profile for plotting.
inline std::string profile_csv(const ScanResult& r) {
    std::ostringstream os;
    os.precision(17);
    os << "k,stat\n";
    for (const auto& pt : r.profile) os << pt.k << ',' << pt.stat << '\n';
    return os.str();
}

inline RunReport cmd_detect(const DetectArgs& a, const CommonArgs& common = {}) {
    detail::Stopwatch clock;
    RunReport rep;
    rep.command = "detect";
    rep.arguments = common.arguments;
    rep.seed = a.seed;
    auto loaded = detail::load_series(a);
    rep.input = loaded.digest;
    rep.warnings = std::move(loaded.warnings);

    const ScanOptions opt = detail::scan_options(a, common.jobs);
    const ScanResult scan = trimmed_scan(loaded.series, a.p, opt);
    rep.result["scan"] = scan;
    rep.result["bootstrap"] = nullptr;
    if (a.bootstrap > 0) {
        const BootstrapResult b = bootstrap_pvalue(loaded.series, a.p, a.bootstrap, a.seed, opt, scan.z_star);
        rep.result["bootstrap"] = b;
        rep.result["bootstrap_reject"] = b.p_value < a.alpha;
    } else if (!scan.calibrated) {
        rep.warnings.push_back("series is too short for the asymptotic calibration; rerun with --bootstrap B");
    }
    if (!a.profile_out.empty()) detail::write_file(a.profile_out, profile_csv(scan));
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

inline RunReport cmd_segment(const SegmentArgs& a, const CommonArgs& common = {}) {
    detail::Stopwatch clock;
    RunReport rep;
    rep.command = "segment";
    rep.arguments = common.arguments;
    rep.seed = a.detect.seed;
    auto loaded = detail::load_series(a.detect);
    rep.input = loaded.digest;
    rep.warnings = std::move(loaded.warnings);
    if (!a.detect.trim.empty()) throw InputError("segment recomputes the trim per interval; --trim is not allowed");

    SegmentationOptions opt;
    opt.min_len = a.min_len;
    opt.depth_adjust = a.depth_adjust;
    opt.scan = detail::scan_options(a.detect, common.jobs);
    rep.result = binary_segment(loaded.series, a.detect.p, opt);
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

inline RunReport cmd_critval(const CritvalArgs& a, const CommonArgs& common = {}) {
    detail::Stopwatch clock;
    RunReport rep;
    rep.command = "critval";
    rep.arguments = common.arguments;
    std::optional<CalibrationConstants> c;
    if (a.n) c = CalibrationConstants::for_length(*a.n, a.r);
    nlohmann::json rows = nlohmann::json::array();
    for (double alpha : a.alphas) {
        const double t = gumbel_quantile(alpha);
        nlohmann::json row = {{"alpha", alpha}, {"t_alpha", t}};
        row["raw_threshold"] = c ? nlohmann::json(c->raw_threshold(t)) : nlohmann::json(nullptr);
        rows.push_back(row);
    }
    rep.result = {{"rows", rows}, {"r", a.r}};
    rep.result["n"] = a.n ? nlohmann::json(*a.n) : nlohmann::json(nullptr);
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

inline RunReport cmd_power(const std::string& config_path, const CommonArgs& common = {},
                           const std::string& table_out = {}) {
    detail::Stopwatch clock;
    RunReport rep;
    rep.command = "power";
    rep.arguments = common.arguments;
    PowerStudyConfig cfg = load_power_config(config_path);
    cfg.jobs = common.jobs;
    rep.seed = cfg.seed;
    const PowerTable table = power_study(cfg);
    for (const auto& cell : table.cells)
        if (cell.flagged)
            rep.warnings.push_back("cell (n=" + std::to_string(cell.n) + ", k=" + std::to_string(cell.k) + ", " +
                                   std::string(to_string(cell.noise)) + ") had " + std::to_string(cell.failures) +
                                   " failed replicates");
    rep.result = table;
    if (!table_out.empty()) detail::write_file(table_out, table.to_csv());
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

inline TimeSeries cmd_simulate(const SimulateArgs& a) {
    const NoiseKind noise = detail::noise_or_throw(a.noise);
    const std::vector<double> post = a.phi_post.empty() ? a.phi_pre : a.phi_post;
    if (a.k == 0) return gen_ar(a.n, a.phi_pre, noise, a.burn_in, a.seed);
    return gen_ar_change(a.n, a.k, a.phi_pre, post, noise, a.burn_in, a.seed);
}

inline RunReport cmd_critstudy(const CritstudyArgs& a, const CommonArgs& common = {}) {
    detail::Stopwatch clock;
    RunReport rep;
    rep.command = "critstudy";
    rep.arguments = common.arguments;
    rep.seed = a.seed;
    SolverSettings solver;
    solver.shared_sigma2 = !a.separate_sigma2;
    rep.result = empirical_critval_study(a.n, a.phi, detail::noise_or_throw(a.noise), a.reps, a.levels, a.seed,
                                         common.jobs, kDefaultBurnIn, solver);
    rep.elapsed_seconds = clock.seconds();
    return rep;
}

inline void emit(const RunReport& rep, Format format, std::ostream& out) {
    out << (format == Format::Json ? to_json_text(rep) : to_text(rep));
}

/// Entry point shared by the executable and the tests.
inline int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Empirical-likelihood change-point detection for AR(p) series", "elcp"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    CommonArgs common;
    common.arguments = argv;
    common.jobs = default_jobs();
    std::string format = "text";
    const std::map<std::string, Format> formats{{"text", Format::Text}, {"json", Format::Json}};

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--format", format, "Report format: text or json")
            ->check(CLI::IsMember({"text", "json"}));
        sub->add_option("--jobs", common.jobs, "Worker threads (default: $ELCP_JOBS or 1)")->check(CLI::PositiveNumber);
    };

    DetectArgs da;
    bool shared_flag = false;
    auto add_series = [&](CLI::App* sub, DetectArgs& d) {
        sub->add_option("input", d.input, "CSV file with the series")->required();
        sub->add_option("--column,-c", d.column, "Column name or 0-based index (default: first column)");
        sub->add_flag("--drop-missing", d.drop_missing,
                      "Drop rows with missing values (warns: breaks the AR time structure)");
        sub->add_option("--order,-p", d.p, "AR order")->check(CLI::PositiveNumber);
        sub->add_option("--alpha", d.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--r", d.r, "Dimension of the coefficient change (default: p)")->check(CLI::PositiveNumber);
        sub->add_option("--seed", d.seed, "Seed for bootstrap and restart jitter");
        auto* sep = sub->add_flag("--separate-sigma2", d.separate_sigma2,
                                  "Estimate the innovation variance separately on each segment under H1");
        sub->add_flag("--shared-sigma2", shared_flag, "One innovation variance under H1 (default)")->excludes(sep);
    };

    auto* detect = app.add_subcommand("detect", "Trimmed EL scan for a single change point");
    add_series(detect, da);
    add_common(detect);
    detect->add_option("--trim", da.trim, "Trim n_T1[,n_T2] (default: 2 floor(sqrt n) each)")->delimiter(',');
    detect->add_option("--bootstrap", da.bootstrap, "Residual-bootstrap replicates (>= 99); advised for short series");
    detect->add_option("--profile-out", da.profile_out, "Write the per-k statistic profile (k,stat) to this CSV");

    SegmentArgs sa;
    auto* segment = app.add_subcommand("segment", "Binary segmentation for multiple change points");
    add_series(segment, sa.detect);
    add_common(segment);
    segment->add_option("--min-len", sa.min_len,
                        "Shortest interval that is tested (>= 25; below ~50 the asymptotic calibration is "
                        "unreliable, prefer detect --bootstrap on short pieces)");
    segment->add_flag("--depth-adjust", sa.depth_adjust, "Test at alpha / 2^depth at each recursion depth");

    CritvalArgs ca;
    std::size_t crit_n = 0;
    auto* critval = app.add_subcommand("critval", "Gumbel critical values and equivalent raw thresholds");
    add_common(critval);
    critval->add_option("--alpha", ca.alphas, "Levels, comma-separated")->delimiter(',');
    critval->add_option("--n", crit_n, "Series length for the raw Z_n* threshold");
    critval->add_option("--r", ca.r, "Dimension of the coefficient change")->check(CLI::PositiveNumber);

    std::string config_path, table_out;
    auto* power = app.add_subcommand("power", "Monte Carlo power study from a config file");
    add_common(power);
    power->add_option("config", config_path, "Study configuration file")->required();
    power->add_option("--out", table_out, "Write the power table CSV to this file");

    SimulateArgs sim;
    std::string sim_out;
    auto* simulate = app.add_subcommand("simulate", "Generate an AR(p) series with an optional change");
    simulate->add_option("--n", sim.n, "Series length");
    simulate->add_option("--k", sim.k, "Change location (0: no change)");
    simulate->add_option("--phi-pre", sim.phi_pre, "Pre-change coefficients")->delimiter(',');
    simulate->add_option("--phi-post", sim.phi_post, "Post-change coefficients (default: phi-pre)")->delimiter(',');
    simulate->add_option("--noise", sim.noise, "gaussian, exponential, chisq4 or t4");
    simulate->add_option("--burn-in", sim.burn_in, "Discarded warm-up draws");
    simulate->add_option("--seed", sim.seed, "Random seed");
    simulate->add_option("--out", sim_out, "Output CSV (default: stdout)");

    CritstudyArgs cs;
    auto* critstudy = app.add_subcommand("critstudy", "Empirical null quantiles of the normalized statistic");
    add_common(critstudy);
    critstudy->add_option("--n", cs.n, "Series length");
    critstudy->add_option("--phi", cs.phi, "Null AR coefficients")->delimiter(',');
    critstudy->add_option("--noise", cs.noise, "gaussian, exponential, chisq4 or t4");
    critstudy->add_option("--reps", cs.reps, "Replicates (>= 500)");
    critstudy->add_option("--levels", cs.levels, "Upper levels, comma-separated")->delimiter(',');
    critstudy->add_option("--seed", cs.seed, "Random seed");
    critstudy->add_flag("--separate-sigma2", cs.separate_sigma2, "Separate innovation variances under H1");

    std::vector<const char*> cargv;
    cargv.reserve(argv.size() + 1);
    cargv.push_back("elcp");
    for (const auto& s : argv) cargv.push_back(s.c_str());
    try {
        app.parse(static_cast<int>(cargv.size()), cargv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    if (crit_n > 0) ca.n = crit_n;
    common.format = formats.at(format);

    try {
        if (detect->parsed()) {
            emit(cmd_detect(da, common), common.format, out);
        } else if (segment->parsed()) {
            emit(cmd_segment(sa, common), common.format, out);
        } else if (critval->parsed()) {
            for (double a : ca.alphas)
                if (!(a > 0.0 && a < 1.0)) {
                    err << "error: level " << a << " is outside (0, 1)\n";
                    return kExitUsage;
                }
            emit(cmd_critval(ca, common), common.format, out);
        } else if (power->parsed()) {
            const RunReport rep = cmd_power(config_path, common, table_out);
            if (common.format == Format::Json) emit(rep, common.format, out);
            else out << rep.result.get<PowerTable>().to_csv();
            for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
        } else if (simulate->parsed()) {
            const TimeSeries x = cmd_simulate(sim);
            const std::string csv = write_column(std::vector<double>(x.values().begin(), x.values().end()));
            if (sim_out.empty()) out << csv;
            else detail::write_file(sim_out, csv);
        } else if (critstudy->parsed()) {
            emit(cmd_critstudy(cs, common), common.format, out);
        }
        return kExitOk;
    } catch (const CsvError& e) {
        err << "error: " << e.what() << "\n";
        switch (e.kind()) {
            case CsvFailure::Unreadable: return kExitUnreadable;
            case CsvFailure::NonNumeric: return kExitNonNumeric;
            case CsvFailure::MissingValues: return kExitMissing;
            case CsvFailure::BadColumn: return kExitUsage;
        }
        return kExitInternal;
    } catch (const ConfigError& e) {
        err << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DegenerateSegment& e) {
        err << "error: degenerate data: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const NumericalError& e) {
        err << "error: numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const ScanError& e) {
        err << "error: scan failed: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const BootstrapError& e) {
        err << "error: bootstrap: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const Error& e) {
        // InputError / IndexError; config-file open failures land here too.
        err << "error: " << e.what() << "\n";
        return power->parsed() ? kExitConfig : kExitInvalidInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace elcp::cli
