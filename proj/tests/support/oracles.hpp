#pragma once

// Brute-force reference implementations of the defining sums. Deliberately
// slow and literal: no prefix sums, no centering, no algebraic shortcuts.

#include <cstddef>
#include <vector>

#include "hdlp/panel.hpp"
#include "hdlp/scan.hpp"

namespace hdlp::oracle {

/// U_st = sum_{i != j} X_is' X_jt over interval times (row-major T' x T').
std::vector<double> gram_u(const PanelTensor& x, const TimeInterval& iv);

/// M_hat_t from the quadruple-sum definition.
double m_hat(const PanelTensor& x, const TimeInterval& iv, std::size_t t);

/// D_ij(t) = sum_{r1 <= t < r2} sum_{a,b} (-1)^|a-b| X_{i r_a}' X_{j r_b}.
double d(const PanelTensor& x, const TimeInterval& iv, std::size_t i, std::size_t j,
         std::size_t t);

/// sigma_hat^2_{nt,0}: every ordered all-distinct (i, j, k, l), every time
/// tuple (r1, s1 <= t < r2, s2) and every sign pattern (a, b, c, d).
double ustat_variance(const PanelTensor& x, const TimeInterval& iv, std::size_t t);

/// 2 / (h^2 n^2 (n-1)^2) sum_{i != j} D_ij^2.
double pairwise_variance(const PanelTensor& x, const TimeInterval& iv, std::size_t t);

/// M_t = h^-1 sum_{s1 <= t < s2} |mu_s1 - mu_s2|^2.
double population_m(const MeanProfile& mu, const TimeInterval& iv, std::size_t t);

}  // namespace hdlp::oracle
