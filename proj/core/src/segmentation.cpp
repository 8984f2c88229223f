#include "hdlp/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "hdlp/errors.hpp"
#include "hdlp/homogeneity.hpp"

namespace hdlp {

std::size_t argmax_split(const MeanScanProfile& profile) {
  if (profile.size() == 0) throw DomainError("argmax_split: empty profile");
  std::size_t best = 0;
  for (std::size_t k = 1; k < profile.size(); ++k) {
    if (profile.m_hat[k] > profile.m_hat[best]) best = k;
  }
  return profile.split_at(best);
}

std::string_view to_string(AlphaPolicy policy) {
  return policy == AlphaPolicy::fixed ? "fixed" : "per_level";
}

AlphaPolicy parse_alpha_policy(std::string_view text) {
  if (text == "fixed") return AlphaPolicy::fixed;
  if (text == "per_level") return AlphaPolicy::per_level;
  throw DomainError("alpha_policy must be 'fixed' or 'per_level', got '" + std::string(text) +
                    "'");
}

namespace {

struct Segmenter {
  const PanelTensor& panel;
  const SegmentationOptions& opt;
  SegmentationResult& out;

  std::size_t visit(const TimeInterval& iv, std::size_t depth) {
    const std::size_t id = out.nodes.size();
    out.nodes.push_back({});
    SegmentNode node;
    node.interval = iv;
    node.depth = depth;
    node.alpha = opt.alpha_policy == AlphaPolicy::fixed
                     ? opt.alpha
                     : opt.alpha / std::ldexp(1.0, static_cast<int>(std::min<std::size_t>(depth, 1000)));

    if (iv.length() < std::max<std::size_t>(opt.min_len, 3)) {
      node.note = "shorter than min_len";
      out.nodes[id] = std::move(node);
      return id;
    }

    const auto profile = mean_scan(panel, iv, opt.variance_mode, ScanOptions{opt.workers});
    TestReport rep;
    try {
      rep = test_from_profile(profile, node.alpha);
    } catch (const StatisticUndefined&) {
      node.note = "statistic undefined";
      out.nodes[id] = std::move(node);
      return id;
    }
    node.tested = true;
    node.statistic = rep.statistic;
    node.threshold = rep.threshold;
    node.p_value = rep.p_value;
    node.z_argmax = rep.argmax_split;
    if (!rep.reject) {
      out.nodes[id] = std::move(node);
      return id;
    }

    const std::size_t tau = argmax_split(profile);
    node.selected_split = tau;
    out.change_points.push_back(tau);
    out.nodes[id] = node;
    const std::size_t left = visit({iv.lo, tau}, depth + 1);
    const std::size_t right = visit({tau + 1, iv.hi}, depth + 1);
    out.nodes[id].children = {left, right};
    return id;
  }
};

nlohmann::json node_json(const SegmentationResult& r, std::size_t id) {
  const auto& n = r.nodes[id];
  auto opt = [](const auto& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j{
      {"lo", n.interval.lo},
      {"hi", n.interval.hi},
      {"depth", n.depth},
      {"tested", n.tested},
      {"alpha", n.alpha},
      {"statistic", opt(n.statistic)},
      {"threshold", opt(n.threshold)},
      {"p_value", opt(n.p_value)},
      {"selected_split", opt(n.selected_split)},
      {"z_argmax", opt(n.z_argmax)},
  };
  if (!n.note.empty()) j["note"] = n.note;
  nlohmann::json kids = nlohmann::json::array();
  for (auto c : n.children) kids.push_back(node_json(r, c));
  j["children"] = std::move(kids);
  return j;
}

}  // namespace

SegmentationResult binary_segmentation(const PanelTensor& panel,
                                       const SegmentationOptions& options) {
  check_alpha(options.alpha);
  const auto diag = validate_panel(panel);
  if (!diag.clean()) throw DataError(diag.violations.front());
  if (options.variance_mode == VarianceMode::ustat && !diag.variance_ustat_ok) {
    throw DomainError("ustat variance mode requires at least 4 subjects");
  }
  SegmentationResult result;
  result.options = options;
  Segmenter seg{panel, options, result};
  seg.visit(panel.full_interval(), 0);
  std::sort(result.change_points.begin(), result.change_points.end());
  return result;
}

std::string to_json(const SegmentationResult& result, int indent) {
  nlohmann::json j{
      {"change_points", result.change_points},
      {"alpha", result.options.alpha},
      {"alpha_policy", std::string(to_string(result.options.alpha_policy))},
      {"variance_mode", std::string(to_string(result.options.variance_mode))},
      {"min_len", result.options.min_len},
      {"nodes", nlohmann::json::array({node_json(result, 0)})},
  };
  return j.dump(indent);
}

EvalMetrics score_identification(const std::vector<std::size_t>& estimated,
                                 const std::vector<std::size_t>& truth, std::size_t tolerance) {
  std::vector<std::size_t> est(estimated), tru(truth);
  std::sort(est.begin(), est.end());
  std::sort(tru.begin(), tru.end());
  std::vector<bool> used(est.size(), false);
  EvalMetrics m;
  m.tolerance = tolerance;
  for (auto tau : tru) {
    std::optional<std::size_t> best;
    std::size_t best_gap = 0;
    for (std::size_t k = 0; k < est.size(); ++k) {
      if (used[k]) continue;
      const std::size_t gap = est[k] > tau ? est[k] - tau : tau - est[k];
      if (gap <= tolerance && (!best || gap < best_gap)) {
        best = k;
        best_gap = gap;
      }
    }
    if (best) {
      used[*best] = true;
      ++m.tp;
    } else {
      ++m.fn;
    }
  }
  m.fp = est.size() - m.tp;
  return m;
}

}  // namespace hdlp
