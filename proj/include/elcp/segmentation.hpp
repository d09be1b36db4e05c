#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "elcp/calibration.hpp"
#include "elcp/errors.hpp"
#include "elcp/scan.hpp"
#include "elcp/time_series.hpp"

namespace elcp {

inline constexpr std::size_t kDefaultMinLen = 50;

enum class NodeDecision { Reject, Retain, TooShort, Inconclusive, BudgetExhausted };

inline const char* to_string(NodeDecision d) {
    switch (d) {
        case NodeDecision::Reject: return "reject";
        case NodeDecision::Retain: return "retain";
        case NodeDecision::TooShort: return "too_short";
        case NodeDecision::Inconclusive: return "inconclusive";
        case NodeDecision::BudgetExhausted: return "budget_exhausted";
    }
    return "unknown";
}

struct SegmentNode {
    IndexRange interval;  ///< global 1-based indices
    std::size_t depth = 0;
    double alpha = 0.05;  ///< level used at this node
    NodeDecision decision = NodeDecision::Retain;
    std::optional<ScanResult> scan;  ///< absent for too-short and failed nodes
    std::optional<std::size_t> change_point;  ///< global index when rejected
    std::string note;
};

struct SegmentationResult {
    std::vector<std::size_t> change_points;  ///< strictly increasing, global
    std::vector<SegmentNode> tree;           ///< depth-first, left child first
    double alpha = 0.05;
    std::size_t min_len = kDefaultMinLen;
};

struct SegmentationOptions {
    std::size_t min_len = kDefaultMinLen;
    bool depth_adjust = false;  ///< test at alpha / 2^depth
    ScanOptions scan;           ///< scan.alpha is the base level; scan.trim must be unset
};

/// Recursive binary segmentation: scan, split at k-hat on rejection, repeat on both sides.
/// At most floor(n / min_len) change points are accepted.
inline SegmentationResult binary_segment(const TimeSeries& series, std::size_t p,
                                         const SegmentationOptions& options = {}) {
    if (options.min_len < kMinTrimLength)
        throw InputError("min_len must be at least " + std::to_string(kMinTrimLength) +
                         " (the shortest series the trimmed scan accepts)");
    if (options.scan.trim) throw InputError("segmentation recomputes the trim per interval; do not fix it");
    const std::size_t n = series.size();
    const std::size_t budget = n / options.min_len;

    SegmentationResult out;
    out.alpha = options.scan.alpha;
    out.min_len = options.min_len;

    struct Frame {
        IndexRange interval;
        std::size_t depth;
    };
    std::vector<Frame> stack{{IndexRange{1, n}, 0}};
    while (!stack.empty()) {
        const Frame f = stack.back();
        stack.pop_back();
        SegmentNode node;
        node.interval = f.interval;
        node.depth = f.depth;
        node.alpha = options.depth_adjust ? options.scan.alpha / std::ldexp(1.0, static_cast<int>(f.depth))
                                          : options.scan.alpha;
        if (f.interval.size() < options.min_len) {
            node.decision = NodeDecision::TooShort;
            node.note = "no further testable segment (shorter than min_len)";
            out.tree.push_back(std::move(node));
            continue;
        }
        ScanOptions opt = options.scan;
        opt.alpha = node.alpha;
        try {
            ScanResult r = trimmed_scan(series.slice(f.interval.first, f.interval.last), p, opt);
            node.decision = r.reject ? NodeDecision::Reject : NodeDecision::Retain;
            node.scan = std::move(r);
        } catch (const Error& e) {
            node.decision = NodeDecision::Inconclusive;
            node.note = e.what();
        }
        if (node.decision == NodeDecision::Reject && out.change_points.size() >= budget) {
            node.decision = NodeDecision::BudgetExhausted;
            node.note = "change-point budget floor(n / min_len) reached";
        }
        if (node.decision == NodeDecision::Reject) {
            const std::size_t cp = f.interval.first - 1 + node.scan->k_hat;
            node.change_point = cp;
            out.change_points.push_back(cp);
            // Right pushed first so the left child is visited first.
            stack.push_back({IndexRange{cp + 1, f.interval.last}, f.depth + 1});
            stack.push_back({IndexRange{f.interval.first, cp}, f.depth + 1});
        }
        out.tree.push_back(std::move(node));
    }
    std::sort(out.change_points.begin(), out.change_points.end());
    return out;
}

}  // namespace elcp
