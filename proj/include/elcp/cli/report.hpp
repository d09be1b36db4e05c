#pragma once

// Run reports: structured (JSON) and human-readable renderings of every command result.
//
// The JSON form carries `schema_version`; readers ignore fields they do not know, so
// newer writers stay readable by older tools.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "elcp/scan.hpp"
#include "elcp/segmentation.hpp"
#include "elcp/simulate.hpp"

namespace elcp {

namespace detail {

// JSON has no NaN; NaN is written as null and read back as NaN.
inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline double get_num(const nlohmann::json& j, const char* key,
                      double fallback = std::numeric_limits<double>::quiet_NaN()) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    return it->get<double>();
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

}  // namespace detail

inline void to_json(nlohmann::json& j, const IndexRange& r) { j = nlohmann::json::array({r.first, r.last}); }
inline void from_json(const nlohmann::json& j, IndexRange& r) {
    r.first = j.at(0).get<std::size_t>();
    r.last = j.at(1).get<std::size_t>();
}

inline void to_json(nlohmann::json& j, const ARSpec& s) { j = {{"phi", s.phi}, {"sigma2", s.sigma2}}; }
inline void from_json(const nlohmann::json& j, ARSpec& s) {
    s.phi = j.at("phi").get<std::vector<double>>();
    s.sigma2 = j.at("sigma2").get<double>();
}

inline void to_json(nlohmann::json& j, const ProfilePoint& p) {
    j = {{"k", p.k}, {"stat", p.stat}, {"z_h0", p.z_h0}, {"z_h1", p.z_h1}};
}
inline void from_json(const nlohmann::json& j, ProfilePoint& p) {
    p.k = j.at("k").get<std::size_t>();
    p.stat = j.at("stat").get<double>();
    p.z_h0 = detail::get_num(j, "z_h0");
    p.z_h1 = detail::get_num(j, "z_h1");
}

inline void to_json(nlohmann::json& j, const ScanResult& r) {
    j = {{"n", r.n},
         {"p", r.p},
         {"r", r.r},
         {"trim", {r.trim.first, r.trim.second}},
         {"z_star", r.z_star},
         {"k_hat", r.k_hat},
         {"theta_hat", r.theta_hat},
         {"calibrated", r.calibrated},
         {"t_normalized", detail::num(r.t_normalized)},
         {"p_value", detail::num(r.p_value)},
         {"critical_value", detail::num(r.critical_value)},
         {"alpha", r.alpha},
         {"reject", r.reject},
         {"failed_k", r.failed_k},
         {"profile", r.profile}};
}
inline void from_json(const nlohmann::json& j, ScanResult& r) {
    r.n = j.at("n").get<std::size_t>();
    r.p = j.at("p").get<std::size_t>();
    r.r = detail::get_or<int>(j, "r", static_cast<int>(r.p));
    const auto trim = j.at("trim");
    r.trim = {trim.at(0).get<std::size_t>(), trim.at(1).get<std::size_t>()};
    r.z_star = j.at("z_star").get<double>();
    r.k_hat = j.at("k_hat").get<std::size_t>();
    r.theta_hat = j.at("theta_hat").get<double>();
    r.calibrated = detail::get_or<bool>(j, "calibrated", false);
    r.t_normalized = detail::get_num(j, "t_normalized");
    r.p_value = detail::get_num(j, "p_value");
    r.critical_value = detail::get_num(j, "critical_value");
    r.alpha = j.at("alpha").get<double>();
    r.reject = j.at("reject").get<bool>();
    r.failed_k = detail::get_or<std::vector<std::size_t>>(j, "failed_k", {});
    r.profile = detail::get_or<std::vector<ProfilePoint>>(j, "profile", {});
}

inline void to_json(nlohmann::json& j, const BootstrapResult& b) {
    j = {{"p_value", b.p_value},
         {"z_observed", b.z_observed},
         {"replicates", b.replicates},
         {"failed", b.failed},
         {"null_fit", b.null_fit}};
}
inline void from_json(const nlohmann::json& j, BootstrapResult& b) {
    b.p_value = j.at("p_value").get<double>();
    b.z_observed = j.at("z_observed").get<double>();
    b.replicates = j.at("replicates").get<std::size_t>();
    b.failed = detail::get_or<std::size_t>(j, "failed", 0);
    b.null_fit = j.at("null_fit").get<ARSpec>();
}

inline void to_json(nlohmann::json& j, const SegmentNode& node) {
    j = {{"interval", node.interval},
         {"depth", node.depth},
         {"alpha", node.alpha},
         {"decision", to_string(node.decision)},
         {"note", node.note}};
    j["change_point"] = node.change_point ? nlohmann::json(*node.change_point) : nlohmann::json(nullptr);
    j["scan"] = node.scan ? nlohmann::json(*node.scan) : nlohmann::json(nullptr);
}
inline void from_json(const nlohmann::json& j, SegmentNode& node) {
    node.interval = j.at("interval").get<IndexRange>();
    node.depth = j.at("depth").get<std::size_t>();
    node.alpha = j.at("alpha").get<double>();
    const auto d = j.at("decision").get<std::string>();
    bool known = false;
    for (NodeDecision c : {NodeDecision::Reject, NodeDecision::Retain, NodeDecision::TooShort,
                           NodeDecision::Inconclusive, NodeDecision::BudgetExhausted})
        if (d == to_string(c)) {
            node.decision = c;
            known = true;
        }
    if (!known) throw InputError("unknown node decision '" + d + "'");
    node.note = detail::get_or<std::string>(j, "note", "");
    node.change_point.reset();
    if (const auto it = j.find("change_point"); it != j.end() && !it->is_null())
        node.change_point = it->get<std::size_t>();
    node.scan.reset();
    if (const auto it = j.find("scan"); it != j.end() && !it->is_null()) node.scan = it->get<ScanResult>();
}

inline void to_json(nlohmann::json& j, const SegmentationResult& s) {
    j = {{"change_points", s.change_points}, {"alpha", s.alpha}, {"min_len", s.min_len}, {"tree", s.tree}};
}
inline void from_json(const nlohmann::json& j, SegmentationResult& s) {
    s.change_points = j.at("change_points").get<std::vector<std::size_t>>();
    s.alpha = j.at("alpha").get<double>();
    s.min_len = j.at("min_len").get<std::size_t>();
    s.tree = detail::get_or<std::vector<SegmentNode>>(j, "tree", {});
}

inline void to_json(nlohmann::json& j, const PowerCell& c) {
    j = {{"n", c.n},         {"k", c.k},       {"noise", std::string(to_string(c.noise))},
         {"power", c.power}, {"reps", c.reps}, {"failures", c.failures},
         {"flagged", c.flagged}};
}
inline void from_json(const nlohmann::json& j, PowerCell& c) {
    c.n = j.at("n").get<std::size_t>();
    c.k = j.at("k").get<std::size_t>();
    const auto name = j.at("noise").get<std::string>();
    const auto kind = parse_noise(name);
    if (!kind) throw InputError("unknown noise model '" + name + "'");
    c.noise = *kind;
    c.power = j.at("power").get<double>();
    c.reps = j.at("reps").get<std::size_t>();
    c.failures = detail::get_or<std::size_t>(j, "failures", 0);
    c.flagged = detail::get_or<bool>(j, "flagged", false);
}

inline void to_json(nlohmann::json& j, const PowerTable& t) {
    j = {{"reps", t.reps}, {"alpha", t.alpha}, {"seed", t.seed}, {"cells", t.cells}};
}
inline void from_json(const nlohmann::json& j, PowerTable& t) {
    t.reps = j.at("reps").get<std::size_t>();
    t.alpha = j.at("alpha").get<double>();
    t.seed = j.at("seed").get<std::uint64_t>();
    t.cells = j.at("cells").get<std::vector<PowerCell>>();
}

inline void to_json(nlohmann::json& j, const CritvalRow& r) {
    j = {{"level", r.level}, {"empirical", r.empirical}, {"theoretical", r.theoretical}};
}
inline void from_json(const nlohmann::json& j, CritvalRow& r) {
    r.level = j.at("level").get<double>();
    r.empirical = j.at("empirical").get<double>();
    r.theoretical = j.at("theoretical").get<double>();
}

inline void to_json(nlohmann::json& j, const CritvalStudy& s) {
    j = {{"n", s.n}, {"reps", s.reps}, {"failures", s.failures}, {"rows", s.rows}};
}
inline void from_json(const nlohmann::json& j, CritvalStudy& s) {
    s.n = j.at("n").get<std::size_t>();
    s.reps = j.at("reps").get<std::size_t>();
    s.failures = detail::get_or<std::size_t>(j, "failures", 0);
    s.rows = j.at("rows").get<std::vector<CritvalRow>>();
}

namespace cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";

/// Where the analysed series came from.
struct InputDigest {
    std::string path;
    std::string column;
    std::size_t column_index = 0;
    std::size_t rows_read = 0;
    std::size_t rows_used = 0;
    std::size_t dropped = 0;
    std::string fnv1a;  ///< 64-bit FNV-1a of the value bytes, hex

    bool operator==(const InputDigest&) const = default;
};

/// FNV-1a over the IEEE-754 bytes of the series.
inline std::string fingerprint(const std::vector<double>& values) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

struct RunReport {
    int schema_version = kSchemaVersion;
    std::string tool_version = kToolVersion;
    std::string command;                ///< subcommand name
    std::vector<std::string> arguments; ///< full argument vector as invoked
    std::optional<InputDigest> input;
    std::optional<std::uint64_t> seed;
    double elapsed_seconds = 0.0;
    std::vector<std::string> warnings;
    nlohmann::json result;              ///< command-specific payload

    bool operator==(const RunReport&) const = default;
};

inline void to_json(nlohmann::json& j, const InputDigest& d) {
    j = {{"path", d.path},         {"column", d.column},       {"column_index", d.column_index},
         {"rows_read", d.rows_read}, {"rows_used", d.rows_used}, {"dropped", d.dropped},
         {"fnv1a", d.fnv1a}};
}
inline void from_json(const nlohmann::json& j, InputDigest& d) {
    d.path = elcp::detail::get_or<std::string>(j, "path", "");
    d.column = elcp::detail::get_or<std::string>(j, "column", "");
    d.column_index = elcp::detail::get_or<std::size_t>(j, "column_index", 0);
    d.rows_read = elcp::detail::get_or<std::size_t>(j, "rows_read", 0);
    d.rows_used = elcp::detail::get_or<std::size_t>(j, "rows_used", 0);
    d.dropped = elcp::detail::get_or<std::size_t>(j, "dropped", 0);
    d.fnv1a = elcp::detail::get_or<std::string>(j, "fnv1a", "");
}

inline void to_json(nlohmann::json& j, const RunReport& r) {
    j = {{"schema_version", r.schema_version},
         {"tool_version", r.tool_version},
         {"command", r.command},
         {"arguments", r.arguments},
         {"elapsed_seconds", r.elapsed_seconds},
         {"warnings", r.warnings},
         {"result", r.result}};
    j["input"] = r.input ? nlohmann::json(*r.input) : nlohmann::json(nullptr);
    j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
}
inline void from_json(const nlohmann::json& j, RunReport& r) {
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version > kSchemaVersion)
        throw InputError("report schema version " + std::to_string(r.schema_version) +
                         " is newer than this tool understands (" + std::to_string(kSchemaVersion) + ")");
    r.tool_version = elcp::detail::get_or<std::string>(j, "tool_version", "");
    r.command = j.at("command").get<std::string>();
    r.arguments = elcp::detail::get_or<std::vector<std::string>>(j, "arguments", {});
    r.elapsed_seconds = elcp::detail::get_or<double>(j, "elapsed_seconds", 0.0);
    r.warnings = elcp::detail::get_or<std::vector<std::string>>(j, "warnings", {});
    r.result = elcp::detail::get_or<nlohmann::json>(j, "result", nlohmann::json::object());
    r.input.reset();
    if (const auto it = j.find("input"); it != j.end() && !it->is_null()) r.input = it->get<InputDigest>();
    r.seed.reset();
    if (const auto it = j.find("seed"); it != j.end() && !it->is_null()) r.seed = it->get<std::uint64_t>();
}

inline std::string to_json_text(const RunReport& r) { return nlohmann::json(r).dump(2) + "\n"; }

inline RunReport parse_report(const std::string& text) {
    try {
        return nlohmann::json::parse(text).get<RunReport>();
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed report: ") + e.what());
    }
}

namespace detail {

inline std::string fmt(double v, int precision = 6) {
    if (!std::isfinite(v)) return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

inline void render_scan(std::ostream& os, const ScanResult& r, const std::string& indent = "") {
    os << indent << "n = " << r.n << ", AR order p = " << r.p << ", r = " << r.r << "\n";
    os << indent << "trim (n_T1, n_T2) = (" << r.trim.first << ", " << r.trim.second << ")\n";
    os << indent << "Z_n* = " << fmt(r.z_star) << " at k_hat = " << r.k_hat << " (theta_hat = " << fmt(r.theta_hat, 4)
       << ")\n";
    if (r.calibrated) {
        os << indent << "normalized statistic = " << fmt(r.t_normalized) << ", critical value = "
           << fmt(r.critical_value) << " (alpha = " << r.alpha << ")\n";
        os << indent << "asymptotic p-value = " << fmt(r.p_value) << "\n";
        os << indent << "decision: " << (r.reject ? "reject H0 (change detected)" : "retain H0 (no change detected)")
           << "\n";
    } else {
        os << indent << "series too short for the asymptotic calibration; use --bootstrap\n";
    }
    if (!r.failed_k.empty()) os << indent << r.failed_k.size() << " change index(es) failed to solve\n";
}

}  // namespace detail

/// Human-readable rendering of a report.
inline std::string to_text(const RunReport& r) {
    std::ostringstream os;
    os << "elcp " << r.tool_version << " " << r.command << "\n";
    if (r.input)
        os << "input: " << r.input->path << " column '" << r.input->column << "' (" << r.input->rows_used
           << " values used of " << r.input->rows_read << " rows read"
           << (r.input->dropped ? ", " + std::to_string(r.input->dropped) + " dropped" : std::string()) << ")\n";
    if (r.seed) os << "seed: " << *r.seed << "\n";
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";

    const auto& res = r.result;
    if (r.command == "detect") {
        detail::render_scan(os, res.at("scan").get<ScanResult>());
        if (const auto it = res.find("bootstrap"); it != res.end() && !it->is_null()) {
            const auto b = it->get<BootstrapResult>();
            os << "bootstrap p-value = " << detail::fmt(b.p_value) << " (" << b.replicates << " replicates, "
               << b.failed << " failed)\n";
            if (const auto d = res.find("bootstrap_reject"); d != res.end())
                os << "bootstrap decision: " << (d->get<bool>() ? "reject H0" : "retain H0") << "\n";
        }
    } else if (r.command == "segment") {
        const auto s = res.get<SegmentationResult>();
        os << "change points (" << s.change_points.size() << "):";
        if (s.change_points.empty()) os << " none";
        for (auto cp : s.change_points) os << " " << cp;
        os << "\n";
        for (const auto& node : s.tree) {
            const std::string indent(2 * node.depth + 2, ' ');
            os << indent << "[" << node.interval.first << ", " << node.interval.last << "] " << to_string(node.decision);
            if (node.change_point) os << " at " << *node.change_point;
            if (node.scan && node.scan->calibrated)
                os << " (Z_n* = " << detail::fmt(node.scan->z_star, 4)
                   << ", normalized = " << detail::fmt(node.scan->t_normalized, 4) << ")";
            if (!node.note.empty()) os << ": " << node.note;
            os << "\n";
        }
    } else if (r.command == "critval") {
        os << std::left << std::setw(10) << "alpha" << std::setw(14) << "t_alpha";
        const bool raw = res.contains("n") && !res.at("n").is_null();
        if (raw) os << "raw Z_n* threshold (n = " << res.at("n").get<std::size_t>() << ", r = " << res.at("r").get<int>() << ")";
        os << "\n";
        for (const auto& row : res.at("rows")) {
            os << std::left << std::setw(10) << row.at("alpha").get<double>() << std::setw(14)
               << detail::fmt(row.at("t_alpha").get<double>());
            if (raw) os << detail::fmt(elcp::detail::get_num(row, "raw_threshold"));
            os << "\n";
        }
    } else if (r.command == "power") {
        os << res.get<PowerTable>().to_csv();
    } else if (r.command == "critstudy") {
        const auto s = res.get<CritvalStudy>();
        os << "n = " << s.n << ", " << s.reps << " replicates (" << s.failures << " failed)\n";
        os << std::left << std::setw(10) << "level" << std::setw(14) << "empirical" << "gumbel\n";
        for (const auto& row : s.rows)
            os << std::left << std::setw(10) << row.level << std::setw(14) << detail::fmt(row.empirical)
               << detail::fmt(row.theoretical) << "\n";
    } else {
        os << res.dump(2) << "\n";
    }
    os << "elapsed: " << detail::fmt(r.elapsed_seconds, 3) << " s\n";
    return os.str();
}

}  // namespace cli
}  // namespace elcp
