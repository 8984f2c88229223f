#include "oracles.hpp"

namespace hdlp::oracle {

namespace {

double dot(const PanelTensor& x, std::size_t i, std::size_t s, std::size_t j, std::size_t t) {
  const auto a = x.at(i, s);
  const auto b = x.at(j, t);
  long double acc = 0;
  for (std::size_t k = 0; k < a.size(); ++k) acc += static_cast<long double>(a[k]) * b[k];
  return static_cast<double>(acc);
}

}  // namespace

std::vector<double> gram_u(const PanelTensor& x, const TimeInterval& iv) {
  const std::size_t n = x.n_subjects(), len = iv.length();
  std::vector<double> u(len * len, 0.0);
  for (std::size_t s = 0; s < len; ++s) {
    for (std::size_t t = 0; t < len; ++t) {
      long double acc = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i != j) acc += dot(x, i, iv.lo + s, j, iv.lo + t);
        }
      }
      u[s * len + t] = static_cast<double>(acc);
    }
  }
  return u;
}

double m_hat(const PanelTensor& x, const TimeInterval& iv, std::size_t t) {
  const std::size_t n = x.n_subjects();
  long double acc = 0;
  for (std::size_t s1 = iv.lo; s1 <= t; ++s1) {
    for (std::size_t s2 = t + 1; s2 <= iv.hi; ++s2) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          if (i == j) continue;
          acc += dot(x, i, s1, j, s1);
          acc += dot(x, i, s2, j, s2);
          acc -= 2.0L * dot(x, i, s1, j, s2);
        }
      }
    }
  }
  const double h = scale_h(iv, t);
  return static_cast<double>(acc / (h * static_cast<long double>(n) * (n - 1)));
}

double d(const PanelTensor& x, const TimeInterval& iv, std::size_t i, std::size_t j,
         std::size_t t) {
  long double acc = 0;
  for (std::size_t r1 = iv.lo; r1 <= t; ++r1) {
    for (std::size_t r2 = t + 1; r2 <= iv.hi; ++r2) {
      const std::size_t r[2] = {r1, r2};
      for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
          const double sign = a == b ? 1.0 : -1.0;
          acc += sign * dot(x, i, r[a], j, r[b]);
        }
      }
    }
  }
  return static_cast<double>(acc);
}

double ustat_variance(const PanelTensor& x, const TimeInterval& iv, std::size_t t) {
  const std::size_t n = x.n_subjects(), len = iv.length();
  // ip[(i, s), (j, u)] = X_is' X_ju, a plain lookup table; no algebra.
  const std::size_t m = n * len;
  std::vector<double> ip(m * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t s = 0; s < len; ++s)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t u = 0; u < len; ++u)
          ip[(i * len + s) * m + j * len + u] = dot(x, i, iv.lo + s, j, iv.lo + u);
  auto X = [&](std::size_t i, std::size_t s, std::size_t j, std::size_t u) {
    return ip[(i * len + (s - iv.lo)) * m + j * len + (u - iv.lo)];
  };

  long double total = 0;
  for (std::size_t r1 = iv.lo; r1 <= t; ++r1)
    for (std::size_t s1 = iv.lo; s1 <= t; ++s1)
      for (std::size_t r2 = t + 1; r2 <= iv.hi; ++r2)
        for (std::size_t s2 = t + 1; s2 <= iv.hi; ++s2) {
          const std::size_t r[2] = {r1, r2};
          const std::size_t s[2] = {s1, s2};
          for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
              for (int c = 0; c < 2; ++c)
                for (int dd = 0; dd < 2; ++dd) {
                  const double sign = ((a != b) + (c != dd)) % 2 ? -1.0 : 1.0;
                  long double tr = 0;
                  for (std::size_t i = 0; i < n; ++i)
                    for (std::size_t j = 0; j < n; ++j)
                      for (std::size_t k = 0; k < n; ++k)
                        for (std::size_t l = 0; l < n; ++l) {
                          if (i == j || i == k || i == l || j == k || j == l || k == l) continue;
                          const double rab = X(i, r[a], j, r[b]);
                          tr += rab * X(i, s[c], j, s[dd]) - rab * X(i, s[c], k, s[dd]) -
                                rab * X(k, s[c], j, s[dd]) + rab * X(k, s[c], l, s[dd]);
                        }
                  const long double p4 = static_cast<long double>(n) * (n - 1) * (n - 2) * (n - 3);
                  total += sign * tr / p4;
                }
        }
  const double h = scale_h(iv, t);
  return static_cast<double>(2.0L * total / (static_cast<long double>(h) * h * n * (n - 1)));
}

double pairwise_variance(const PanelTensor& x, const TimeInterval& iv, std::size_t t) {
  const std::size_t n = x.n_subjects();
  long double acc = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const long double v = d(x, iv, i, j, t);
      acc += v * v;
    }
  }
  const long double h = scale_h(iv, t);
  return static_cast<double>(2.0L * acc / (h * h * n * n * (n - 1) * (n - 1)));
}

double population_m(const MeanProfile& mu, const TimeInterval& iv, std::size_t t) {
  long double acc = 0;
  for (std::size_t s1 = iv.lo; s1 <= t; ++s1) {
    for (std::size_t s2 = t + 1; s2 <= iv.hi; ++s2) {
      const auto a = mu.at(s1);
      const auto b = mu.at(s2);
      for (std::size_t k = 0; k < a.size(); ++k) {
        const long double e = static_cast<long double>(a[k]) - b[k];
        acc += e * e;
      }
    }
  }
  return static_cast<double>(acc / scale_h(iv, t));
}

}  // namespace hdlp::oracle
