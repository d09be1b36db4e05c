#pragma once

// Minimal driver shared by the acceptance and study binaries: each check runs on request
// and prints exactly one PASS/FAIL line.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "elcp/errors.hpp"

namespace harness {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Check {
    std::string id;
    std::string title;
    std::function<Verdict(unsigned jobs)> run;
};

/// Formats a double with fixed precision.
inline std::string fmt(double v, int digits = 4) {
    std::ostringstream os;
    os.precision(digits);
    os << std::fixed << v;
    return os.str();
}

inline bool within(double value, double target, double tol) { return value >= target - tol && value <= target + tol; }

/// `name --check ID [--jobs J]` runs one check; `--all` runs every check; `--list` prints ids.
inline int main(int argc, char** argv, const std::string& name, const std::vector<Check>& checks) {
    CLI::App app{name};
    std::vector<std::string> selected;
    bool all = false, list = false;
    unsigned jobs = 1;
    app.add_option("--check", selected, "check id(s) to run");
    app.add_flag("--all", all, "run every check");
    app.add_flag("--list", list, "list check ids");
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    if (list) {
        for (const auto& c : checks) std::cout << c.id << "  " << c.title << "\n";
        return 0;
    }
    if (all) {
        selected.clear();
        for (const auto& c : checks) selected.push_back(c.id);
    }
    if (selected.empty()) {
        std::cerr << "nothing selected; use --check ID, --all or --list\n";
        return 2;
    }
    int failures = 0;
    for (const auto& id : selected) {
        const Check* found = nullptr;
        for (const auto& c : checks)
            if (c.id == id) found = &c;
        if (found == nullptr) {
            std::cerr << "unknown check '" << id << "'\n";
            return 2;
        }
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = found->run(jobs);
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::cout << (v.pass ? "PASS" : "FAIL") << " " << found->id << " " << found->title << " -- " << v.detail
                  << " [" << fmt(secs, 1) << " s]" << std::endl;
        if (!v.pass) ++failures;
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace harness
