#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hdlp/panel.hpp"
#include "hdlp/scan.hpp"

namespace hdlp {

/// Split maximizing the unstandardized m_hat; ties go to the smallest split.
[[nodiscard]] std::size_t argmax_split(const MeanScanProfile& profile);

enum class AlphaPolicy {
  fixed,      // the same alpha at every node
  per_level,  // alpha / 2^depth (Bonferroni across the nodes of one level)
};

[[nodiscard]] std::string_view to_string(AlphaPolicy policy);
[[nodiscard]] AlphaPolicy parse_alpha_policy(std::string_view text);

struct SegmentationOptions {
  double alpha = 0.05;
  VarianceMode variance_mode = VarianceMode::ustat;
  std::size_t min_len = 6;
  AlphaPolicy alpha_policy = AlphaPolicy::fixed;
  std::size_t workers = 1;
};

struct SegmentNode {
  TimeInterval interval;
  std::size_t depth = 0;
  bool tested = false;
  double alpha = 0.0;
  std::optional<double> statistic;
  std::optional<double> threshold;
  std::optional<double> p_value;
  std::optional<std::size_t> selected_split;  ///< set when the node rejected
  std::optional<std::size_t> z_argmax;        ///< argmax of z, for diagnostics
  std::string note;                           ///< why a node was not tested
  std::vector<std::size_t> children;          ///< indices into SegmentationResult::nodes
};

struct SegmentationResult {
  std::vector<std::size_t> change_points;  ///< sorted, strictly increasing
  std::vector<SegmentNode> nodes;          ///< nodes[0] is the root interval
  SegmentationOptions options;
};

/// Recursive detect-then-split over [1, T]: test the interval; on rejection
/// split at argmax m_hat into [lo, tau] and [tau+1, hi] and recurse. Intervals
/// shorter than min_len, or whose statistic is undefined, are change-point free.
[[nodiscard]] SegmentationResult binary_segmentation(const PanelTensor& panel,
                                                     const SegmentationOptions& options);

/// JSON with ordered change_points and a nested node tree.
[[nodiscard]] std::string to_json(const SegmentationResult& result, int indent = 2);

struct EvalMetrics {
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tp = 0;
  std::size_t tolerance = 0;
};

/// Greedy one-to-one matching of estimates to truths within +-tolerance.
[[nodiscard]] EvalMetrics score_identification(const std::vector<std::size_t>& estimated,
                                               const std::vector<std::size_t>& truth,
                                               std::size_t tolerance = 0);

}  // namespace hdlp
