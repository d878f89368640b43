// Copyright 2026 The HARE Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Validation of metric scores against expert ratings: normalization,
// zero-score exclusion, Pearson / Spearman / Kendall tau-b with two-sided
// p-values, and simple least-squares regression.

#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "hare/corpus.hpp"
#include "hare/error.hpp"

namespace hare::stats {

struct CorrelationResult {
  double coefficient = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double rmse = 0.0;  // sqrt(SSE / n)
  std::size_t n = 0;
};

// Elementwise division by max_value; every value must lie in [0, max_value].
inline std::vector<double> normalize(std::span<const double> values, double max_value) {
  if (!(max_value > 0.0)) throw ConfigError("normalize: max_value must be > 0");
  std::vector<double> out;
  out.reserve(values.size());
  for (double v : values) {
    if (!(v >= 0.0 && v <= max_value)) {
      std::ostringstream msg;
      msg << "normalize: value " << v << " outside [0, " << max_value << "]";
      throw DataError(msg.str());
    }
    out.push_back(v / max_value);
  }
  return out;
}

// Metric and expert values aligned by report id.
struct PairedSamples {
  std::vector<std::string> ids;
  std::vector<double> metric;
  std::vector<double> expert;

  std::size_t size() const { return metric.size(); }
};

struct ZeroFiltered {
  PairedSamples kept;
  std::size_t removed = 0;
};

// Drops pairs whose expert score is 0.
inline ZeroFiltered filter_zero_expert(const PairedSamples& pairs) {
  ZeroFiltered out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs.expert[i] == 0.0) {
      ++out.removed;
      continue;
    }
    if (!pairs.ids.empty()) out.kept.ids.push_back(pairs.ids[i]);
    out.kept.metric.push_back(pairs.metric[i]);
    out.kept.expert.push_back(pairs.expert[i]);
  }
  return out;
}

namespace detail {

inline void require_paired(std::span<const double> x, std::span<const double> y, const char* op) {
  if (x.size() != y.size()) throw DataError(std::string(op) + ": series lengths differ");
  if (x.size() < 3) {
    throw DataError(std::string(op) + ": need at least 3 pairs, got " + std::to_string(x.size()));
  }
}

inline double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Two-sided p-value of r under H0 via t = r sqrt((n-2)/(1-r^2)), df = n-2.
inline double t_test_p(double r, std::size_t n) {
  const double rr = std::min(1.0, r * r);
  if (rr >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = std::fabs(r) * std::sqrt(df / (1.0 - rr));
  const boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

struct Centered {
  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  double mx = 0.0;
  double my = 0.0;
};

inline Centered centered_sums(std::span<const double> x, std::span<const double> y) {
  Centered c;
  c.mx = mean(x);
  c.my = mean(y);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - c.mx;
    const double dy = y[i] - c.my;
    c.sxx += dx * dx;
    c.syy += dy * dy;
    c.sxy += dx * dy;
  }
  return c;
}

}  // namespace detail

inline CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
  detail::require_paired(x, y, "pearson");
  const auto c = detail::centered_sums(x, y);
  if (c.sxx == 0.0 || c.syy == 0.0) throw DataError("pearson: degenerate series (zero variance)");
  const double r = std::clamp(c.sxy / std::sqrt(c.sxx * c.syy), -1.0, 1.0);
  return {r, detail::t_test_p(r, x.size()), x.size()};
}

// 1-based ranks; tied values share the mean of their positions.
inline std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  detail::require_paired(x, y, "spearman");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const auto c = detail::centered_sums(rx, ry);
  if (c.sxx == 0.0 || c.syy == 0.0) throw DataError("spearman: degenerate series (all values tied)");
  const double rho = std::clamp(c.sxy / std::sqrt(c.sxx * c.syy), -1.0, 1.0);
  return {rho, detail::t_test_p(rho, x.size()), x.size()};
}

namespace detail {

// Sums over tie groups of an already sorted sequence: t(t-1)/2,
// t(t-1)(t-2) and t(t-1)(2t+5).
struct TieSums {
  double pairs = 0.0;
  double cubic = 0.0;
  double var = 0.0;
};

template <typename Eq>
TieSums tie_sums(std::size_t n, Eq&& same) {
  TieSums s;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && same(i, j)) ++j;
    const double t = static_cast<double>(j - i);
    s.pairs += t * (t - 1.0) / 2.0;
    s.cubic += t * (t - 1.0) * (t - 2.0);
    s.var += t * (t - 1.0) * (2.0 * t + 5.0);
    i = j;
  }
  return s;
}

// Sorts v ascending, returning the number of strict inversions removed.
inline std::uint64_t merge_count(std::vector<double>& v, std::vector<double>& buf, std::size_t lo,
                                 std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t swaps = merge_count(v, buf, lo, mid) + merge_count(v, buf, mid, hi);
  std::size_t i = lo;
  std::size_t j = mid;
  std::size_t k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      swaps += mid - i;
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return swaps;
}

}  // namespace detail

// Kendall tau-b in O(n log n) (Knight's algorithm). The p-value uses the
// normal approximation with the tie-corrected variance of C - D.
inline CorrelationResult kendall_tau_b(std::span<const double> x, std::span<const double> y) {
  detail::require_paired(x, y, "kendall_tau_b");
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] != x[b] ? x[a] < x[b] : y[a] < y[b];
  });
  const auto xt = detail::tie_sums(n, [&](std::size_t i, std::size_t j) { return x[order[i]] == x[order[j]]; });
  const auto joint = detail::tie_sums(n, [&](std::size_t i, std::size_t j) {
    return x[order[i]] == x[order[j]] && y[order[i]] == y[order[j]];
  });
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
  std::vector<double> buf(n);
  const std::uint64_t swaps = detail::merge_count(ys, buf, 0, n);
  const auto yt = detail::tie_sums(n, [&](std::size_t i, std::size_t j) { return ys[i] == ys[j]; });

  const double dn = static_cast<double>(n);
  const double n0 = dn * (dn - 1.0) / 2.0;
  if (xt.pairs == n0 || yt.pairs == n0) throw DataError("kendall_tau_b: degenerate series (all values tied)");
  const double s = n0 - xt.pairs - yt.pairs + joint.pairs - 2.0 * static_cast<double>(swaps);
  const double tau = std::clamp(s / std::sqrt((n0 - xt.pairs) * (n0 - yt.pairs)), -1.0, 1.0);

  const double m = dn * (dn - 1.0);
  const double var = (m * (2.0 * dn + 5.0) - xt.var - yt.var) / 18.0 +
                     (2.0 * xt.pairs * yt.pairs) / m + xt.cubic * yt.cubic / (9.0 * m * (dn - 2.0));
  double p = 1.0;
  if (var > 0.0) p = std::erfc(std::fabs(s) / std::sqrt(var) / std::sqrt(2.0));
  return {tau, std::clamp(p, 0.0, 1.0), n};
}

// Least squares y = slope * x + intercept (metric predicts expert).
inline RegressionResult ols_simple(std::span<const double> x, std::span<const double> y) {
  detail::require_paired(x, y, "ols_simple");
  const auto c = detail::centered_sums(x, y);
  if (c.sxx == 0.0) throw DataError("ols_simple: degenerate predictor (zero variance)");
  RegressionResult out;
  out.n = x.size();
  out.slope = c.sxy / c.sxx;
  out.intercept = c.my - out.slope * c.mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (out.slope * x[i] + out.intercept);
    sse += e * e;
  }
  out.r2 = c.syy == 0.0 ? 0.0 : 1.0 - sse / c.syy;
  out.rmse = std::sqrt(sse / static_cast<double>(x.size()));
  return out;
}

// Scores of several metrics over the same reports, in file column order.
struct MetricTable {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;  // columns[m][row]

  void add_column(std::string name, std::vector<double> values) {
    if (values.size() != ids.size()) throw DataError("metric table: column '" + name + "' has wrong length");
    if (std::find(names.begin(), names.end(), name) != names.end()) {
      throw DataError("metric table: duplicate metric '" + name + "'");
    }
    names.push_back(std::move(name));
    columns.push_back(std::move(values));
  }
};

// CSV with header "report_id,<metric>,...".
inline MetricTable read_metric_table(std::istream& in) {
  MetricTable table;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    corpus::detail::strip_cr(line);
    if (corpus::detail::blank(line)) continue;
    const auto cells = corpus::detail::split_csv(line);
    if (!header) {
      if (cells.size() < 2 || cells[0] != "report_id") {
        throw DataError("metric file: expected header 'report_id,<metric>,...' at line " +
                        std::to_string(line_no));
      }
      for (std::size_t i = 1; i < cells.size(); ++i) {
        if (cells[i].empty()) throw DataError("metric file: empty metric name in header");
        if (std::find(table.names.begin(), table.names.end(), cells[i]) != table.names.end()) {
          throw DataError("metric file: duplicate metric '" + std::string(cells[i]) + "'");
        }
        table.names.emplace_back(cells[i]);
      }
      table.columns.resize(table.names.size());
      header = true;
      continue;
    }
    if (cells.size() != table.names.size() + 1 || cells[0].empty()) {
      throw DataError("metric file: malformed record at line " + std::to_string(line_no));
    }
    const std::string id(cells[0]);
    if (!seen.emplace(id, line_no).second) {
      throw DataError("metric file: duplicate report id '" + id + "' at line " + std::to_string(line_no));
    }
    table.ids.push_back(id);
    for (std::size_t i = 1; i < cells.size(); ++i) {
      double v = 0.0;
      const char* b = cells[i].data();
      const char* e = b + cells[i].size();
      auto [p, ec] = std::from_chars(b, e, v);
      if (ec != std::errc() || p != e || !std::isfinite(v)) {
        throw DataError("metric file: bad value '" + std::string(cells[i]) + "' at line " +
                        std::to_string(line_no));
      }
      table.columns[i - 1].push_back(v);
    }
  }
  if (!header) throw DataError("metric file: missing header");
  return table;
}

inline void write_metric_table(std::ostream& out, const MetricTable& table) {
  out << "report_id";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  char buf[32];
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    out << table.ids[r];
    for (const auto& col : table.columns) {
      auto [p, ec] = std::to_chars(buf, buf + sizeof buf, col[r]);
      out << ',';
      out.write(buf, p - buf);
    }
    out << '\n';
  }
}

// Metric columns and raw expert scores aligned on the same ids.
struct AlignedSeries {
  std::vector<std::string> ids;
  std::vector<std::string> names;
  std::vector<std::vector<double>> metrics;
  std::vector<double> expert;
  std::size_t excluded_zero = 0;
};

// Every report id must appear in both inputs; offenders are listed.
inline AlignedSeries align(const MetricTable& table, const std::vector<corpus::ExpertScore>& expert,
                           bool exclude_zero) {
  std::unordered_map<std::string, int> expert_by_id;
  for (const auto& e : expert) expert_by_id.emplace(e.report_id, e.score);
  std::set<std::string> table_ids(table.ids.begin(), table.ids.end());
  std::vector<std::string> offenders;
  for (const auto& id : table.ids) {
    if (!expert_by_id.count(id)) offenders.push_back(id + " (no expert score)");
  }
  for (const auto& e : expert) {
    if (!table_ids.count(e.report_id)) offenders.push_back(e.report_id + " (no metric values)");
  }
  if (!offenders.empty()) {
    std::string msg = "misaligned report ids: ";
    for (std::size_t i = 0; i < offenders.size(); ++i) msg += (i ? ", " : "") + offenders[i];
    throw DataError(msg);
  }
  AlignedSeries out;
  out.names = table.names;
  out.metrics.resize(table.names.size());
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    const int score = expert_by_id.at(table.ids[r]);
    if (exclude_zero && score == 0) {
      ++out.excluded_zero;
      continue;
    }
    out.ids.push_back(table.ids[r]);
    out.expert.push_back(static_cast<double>(score));
    for (std::size_t m = 0; m < table.names.size(); ++m) out.metrics[m].push_back(table.columns[m][r]);
  }
  return out;
}

struct MetricComparison {
  std::string metric;
  std::size_t n = 0;
  std::optional<CorrelationResult> pearson;
  std::optional<CorrelationResult> spearman;
  std::optional<CorrelationResult> kendall;
  std::optional<RegressionResult> regression;
  std::string error;  // set when the statistics are undefined for this metric
};

// One row per metric, ascending by Pearson r (undefined rows first, then
// by name).
inline std::vector<MetricComparison> compare_metrics(const std::vector<std::string>& names,
                                                     const std::vector<std::vector<double>>& metrics,
                                                     std::span<const double> expert) {
  if (names.size() != metrics.size()) throw std::invalid_argument("compare_metrics: names/columns mismatch");
  std::vector<MetricComparison> rows;
  for (std::size_t m = 0; m < names.size(); ++m) {
    MetricComparison row;
    row.metric = names[m];
    row.n = expert.size();
    if (metrics[m].size() != expert.size()) {
      throw DataError("compare_metrics: metric '" + names[m] + "' is not aligned with expert scores");
    }
    try {
      row.pearson = pearson(metrics[m], expert);
      row.spearman = spearman(metrics[m], expert);
      row.kendall = kendall_tau_b(metrics[m], expert);
      row.regression = ols_simple(metrics[m], expert);
    } catch (const DataError& e) {
      row.pearson.reset();
      row.spearman.reset();
      row.kendall.reset();
      row.regression.reset();
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  std::stable_sort(rows.begin(), rows.end(), [](const MetricComparison& a, const MetricComparison& b) {
    if (a.pearson.has_value() != b.pearson.has_value()) return !a.pearson.has_value();
    if (a.pearson && a.pearson->coefficient != b.pearson->coefficient) {
      return a.pearson->coefficient < b.pearson->coefficient;
    }
    return a.metric < b.metric;
  });
  return rows;
}

// Default normalizer for a metric column: HARE-family scores span [0,2],
// everything else is taken to be on [0,1] already.
inline double default_max(const std::string& metric) {
  return metric.rfind("hare", 0) == 0 ? 2.0 : 1.0;
}

inline nlohmann::ordered_json to_json(const MetricComparison& row) {
  nlohmann::ordered_json rec;
  rec["metric"] = row.metric;
  rec["n"] = row.n;
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v) rec[k] = *v;
    else rec[k] = nullptr;
  };
  auto coef = [](const std::optional<CorrelationResult>& c) {
    return c ? std::optional<double>(c->coefficient) : std::nullopt;
  };
  auto pv = [](const std::optional<CorrelationResult>& c) {
    return c ? std::optional<double>(c->p_value) : std::nullopt;
  };
  put("pearson_r", coef(row.pearson));
  put("pearson_p", pv(row.pearson));
  put("spearman_rho", coef(row.spearman));
  put("spearman_p", pv(row.spearman));
  put("kendall_tau_b", coef(row.kendall));
  put("kendall_p", pv(row.kendall));
  const auto& g = row.regression;
  put("slope", g ? std::optional<double>(g->slope) : std::nullopt);
  put("intercept", g ? std::optional<double>(g->intercept) : std::nullopt);
  put("r2", g ? std::optional<double>(g->r2) : std::nullopt);
  put("rmse", g ? std::optional<double>(g->rmse) : std::nullopt);
  rec["rmse_divisor"] = "n";
  if (row.error.empty()) rec["error"] = nullptr;
  else rec["error"] = row.error;
  return rec;
}

// Fixed-width plain-text table, rows in the given order.
inline void write_comparison_table(std::ostream& out, const std::vector<MetricComparison>& rows) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.metric.size());
  auto num = [&](const std::optional<double>& v, bool sci) {
    std::ostringstream s;
    if (!v) s << "-";
    else if (sci) s << std::setprecision(3) << std::scientific << *v;
    else s << std::fixed << std::setprecision(3) << *v;
    return s.str();
  };
  out << std::left << std::setw(static_cast<int>(width)) << "metric" << std::right
      << std::setw(6) << "n" << std::setw(8) << "r" << std::setw(11) << "r_p" << std::setw(8)
      << "rho" << std::setw(11) << "rho_p" << std::setw(8) << "tau" << std::setw(11) << "tau_p"
      << std::setw(8) << "R2" << std::setw(8) << "RMSE" << '\n';
  for (const auto& r : rows) {
    auto c = [](const std::optional<CorrelationResult>& x) {
      return x ? std::optional<double>(x->coefficient) : std::nullopt;
    };
    auto p = [](const std::optional<CorrelationResult>& x) {
      return x ? std::optional<double>(x->p_value) : std::nullopt;
    };
    const auto& g = r.regression;
    out << std::left << std::setw(static_cast<int>(width)) << r.metric << std::right
        << std::setw(6) << r.n << std::setw(8) << num(c(r.pearson), false) << std::setw(11)
        << num(p(r.pearson), true) << std::setw(8) << num(c(r.spearman), false) << std::setw(11)
        << num(p(r.spearman), true) << std::setw(8) << num(c(r.kendall), false) << std::setw(11)
        << num(p(r.kendall), true) << std::setw(8)
        << num(g ? std::optional<double>(g->r2) : std::nullopt, false) << std::setw(8)
        << num(g ? std::optional<double>(g->rmse) : std::nullopt, false);
    if (!r.error.empty()) out << "  (" << r.error << ")";
    out << '\n';
  }
}

}  // namespace hare::stats
