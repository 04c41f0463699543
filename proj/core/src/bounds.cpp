#include "pdml/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "pdml/errors.hpp"
#include "pdml/rng.hpp"

namespace pdml {

namespace {

constexpr const char* kEuclideanLabel = "euclidean, nearest-proxy epsilon";
constexpr const char* kHalfSquaredLabel =
    "half-squared on unit sphere, assigned-proxy squared epsilon";

struct NormSummary {
  double mean = 0.0;
  double stddev = 0.0;
};

NormSummary row_norm_summary(const Matrix& m) {
  NormSummary s;
  if (m.rows == 0) return s;
  std::vector<double> norms(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) norms[i] = norm(m.row(i));
  for (double v : norms) s.mean += v;
  s.mean /= static_cast<double>(m.rows);
  for (double v : norms) s.stddev += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(s.stddev / static_cast<double>(m.rows));
  return s;
}

NormStats make_norm_stats(const Matrix& embeddings, const Matrix& proxies) {
  const NormSummary e = row_norm_summary(embeddings);
  const NormSummary p = row_norm_summary(proxies);
  return NormStats{e.mean, e.stddev, p.mean, p.stddev};
}

Matrix unit_rows(const Matrix& m, const char* what) {
  Matrix out(m.rows, m.cols);
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double n = norm(m.row(i));
    if (n == 0.0) {
      throw NumericError(std::string("normalize_config: zero ") + what + " vector at row " +
                         std::to_string(i));
    }
    for (std::size_t j = 0; j < m.cols; ++j) out(i, j) = m(i, j) / n;
  }
  return out;
}

/** Index of the nearest proxy per point, Euclidean, ties to the lowest index. */
std::vector<std::size_t> nearest_proxy_map(const Matrix& points, const Matrix& proxies) {
  std::vector<std::size_t> nearest(points.rows, 0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < proxies.rows; ++p) {
      const double d = squared_distance(points.row(i), proxies.row(p));
      if (d < best) {
        best = d;
        nearest[i] = p;
      }
    }
  }
  return nearest;
}

/** Worst Euclidean distance from a point to its nearest proxy. */
double epsilon_euclidean_nearest(const Matrix& points, const Matrix& proxies,
                                 const std::vector<std::size_t>& nearest) {
  double worst = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) {
    worst = std::max(worst,
                     squared_distance(points.row(i), proxies.row(nearest[i])));
  }
  return std::sqrt(worst);
}

void check_assignment(const Matrix& points, const Matrix& proxies,
                      const std::vector<int>& point_to_proxy, const char* op) {
  if (point_to_proxy.size() != points.rows) {
    throw UsageError(std::string(op) + ": point_to_proxy size mismatch");
  }
  for (int p : point_to_proxy) {
    if (p < 0 || static_cast<std::size_t>(p) >= proxies.rows) {
      throw UsageError(std::string(op) + ": proxy index " + std::to_string(p) +
                       " out of range");
    }
  }
}

/** Worst squared unit-sphere distance from a point to its assigned proxy. */
double epsilon_assigned_unit(const Matrix& unit_points, const Matrix& unit_proxies,
                             const std::vector<int>& point_to_proxy) {
  double worst = 0.0;
  for (std::size_t i = 0; i < unit_points.rows; ++i) {
    worst = std::max(worst, squared_distance(unit_points.row(i),
                                             unit_proxies.row(static_cast<std::size_t>(
                                                 point_to_proxy[i]))));
  }
  return worst;
}

double half_squared(std::span<const double> a, std::span<const double> b) {
  return 0.5 * squared_distance(a, b);
}

/** NCA loss with half-squared distances: d(x,y) + logsumexp_z(-d(x,z)). */
double nca_loss_half(std::span<const double> anchor, std::span<const double> positive,
                     const Matrix& pool, const std::vector<std::size_t>& negatives) {
  const double d_pos = half_squared(anchor, positive);
  double m = -std::numeric_limits<double>::infinity();
  std::vector<double> logits(negatives.size());
  for (std::size_t i = 0; i < negatives.size(); ++i) {
    logits[i] = -half_squared(anchor, pool.row(negatives[i]));
    m = std::max(m, logits[i]);
  }
  double s = 0.0;
  for (double l : logits) s += std::exp(l - m);
  return d_pos + m + std::log(s);
}

double hinge(double v) { return v > 0.0 ? v : 0.0; }

/** Running slack statistics shared by all the verifiers. */
struct SlackTally {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double sum_slack = 0.0;

  void add(double slack, bool violated) {
    ++checked;
    if (violated) ++violations;
    min_slack = std::min(min_slack, slack);
    sum_slack += slack;
  }

  void fill(BoundReport& report) const {
    report.samples_checked += checked;
    report.violations = violations;
    report.max_slack = checked == 0 ? 0.0 : min_slack;
    report.mean_slack = checked == 0 ? 0.0 : sum_slack / static_cast<double>(checked);
  }
};

struct PreconditionStatus {
  bool ok = true;
};

/** Constant-norm and norm-product preconditions of the proxy-bound proofs. */
PreconditionStatus check_prop_preconditions(const NormalizedConfig& nc) {
  PreconditionStatus status;
  const bool embeddings_constant =
      nc.norms.embedding_stddev / nc.norms.embedding_mean < kNormConstancyTolerance;
  const bool proxies_constant =
      nc.norms.proxy_stddev / nc.norms.proxy_mean < kNormConstancyTolerance;
  status.ok = embeddings_constant && proxies_constant && nc.alpha() < 1.0 && nc.n_x > 1.0;
  return status;
}

}  // namespace

NormalizedConfig normalize_config(const Matrix& embeddings, const Matrix& proxies) {
  if (embeddings.rows == 0 || proxies.rows == 0) {
    throw UsageError("normalize_config: empty embeddings or proxies");
  }
  NormalizedConfig nc;
  nc.norms = make_norm_stats(embeddings, proxies);
  nc.unit_embeddings = unit_rows(embeddings, "embedding");
  nc.unit_proxies = unit_rows(proxies, "proxy");
  nc.n_x = nc.norms.embedding_mean;
  nc.n_p = nc.norms.proxy_mean;
  return nc;
}

BoundReport verify_ordinal_preservation(const Matrix& points,
                                        const std::vector<TripletSample>& samples,
                                        const Matrix& proxies) {
  BoundReport report;
  report.bound_name = "ordinal_preservation";
  report.distance_convention = kEuclideanLabel;
  report.norm_stats = make_norm_stats(points, proxies);

  const auto nearest = nearest_proxy_map(points, proxies);
  const double eps = epsilon_euclidean_nearest(points, proxies, nearest);
  report.epsilon_used = eps;

  SlackTally tally;
  for (const TripletSample& t : samples) {
    const auto x = points.row(t.x);
    const double dxy = euclidean_distance(x, points.row(t.y));
    const double dxz = euclidean_distance(x, points.row(t.z));
    const double dpy = euclidean_distance(x, proxies.row(nearest[t.y]));
    const double dpz = euclidean_distance(x, proxies.row(nearest[t.z]));

    const double data_gap = dxy - dxz;
    const double proxy_gap = dpy - dpz;
    const double slack = 2.0 * eps - std::abs(data_gap - proxy_gap);
    bool violated = slack < -kSlackTolerance;

    // Ordinal consequence: a proxy gap beyond 2*epsilon fixes the data order.
    if (!violated && std::abs(proxy_gap) > 2.0 * eps + kSlackTolerance) {
      const bool proxy_says_farther = proxy_gap > 0.0;
      const bool data_says_farther = data_gap > 0.0;
      violated = proxy_says_farther != data_says_farther;
    }
    tally.add(slack, violated);
  }
  tally.fill(report);
  return report;
}

BoundReport verify_ranking_expectation_bound(const Matrix& points,
                                             const std::vector<TripletSample>& samples,
                                             const Matrix& proxies) {
  BoundReport report;
  report.bound_name = "ranking_expectation_bound";
  report.distance_convention = kEuclideanLabel;
  report.norm_stats = make_norm_stats(points, proxies);

  const auto nearest = nearest_proxy_map(points, proxies);
  const double eps = epsilon_euclidean_nearest(points, proxies, nearest);
  report.epsilon_used = eps;

  const auto step = [](double t) { return t > 0.0 ? 1.0 : 0.0; };  // H(0) := 0

  SlackTally tally;
  for (const TripletSample& t : samples) {
    const auto x = points.row(t.x);
    const double dxy = euclidean_distance(x, points.row(t.y));
    const double dxz = euclidean_distance(x, points.row(t.z));
    const double dpy = euclidean_distance(x, proxies.row(nearest[t.y]));
    const double dpz = euclidean_distance(x, proxies.row(nearest[t.z]));

    const double lhs = step(dxy - dxz);
    const double near_tie = std::abs(dpy - dpz) <= 2.0 * eps ? 1.0 : 0.0;
    const double rhs = step(dpy - dpz) + near_tie;
    const double slack = rhs - lhs;
    tally.add(slack, slack < -kSlackTolerance);
  }
  tally.fill(report);
  return report;
}

NcaBoundReports verify_nca_bound(const Matrix& points,
                                 const std::vector<NcaSample>& samples,
                                 const Matrix& proxies,
                                 const std::vector<int>& point_to_proxy) {
  check_assignment(points, proxies, point_to_proxy, "verify_nca_bound");

  const NormalizedConfig nc = normalize_config(points, proxies);
  const double eps =
      epsilon_assigned_unit(nc.unit_embeddings, nc.unit_proxies, point_to_proxy);
  const double alpha = nc.alpha();

  NcaBoundReports reports;
  for (BoundReport* r : {&reports.stated, &reports.tight}) {
    r->distance_convention = kHalfSquaredLabel;
    r->norm_stats = nc.norms;
    r->epsilon_used = eps;
    r->alpha_used = alpha;
  }
  reports.stated.bound_name = "nca_proxy_bound";
  reports.tight.bound_name = "nca_proxy_bound_tight";

  const PreconditionStatus pre = check_prop_preconditions(nc);
  if (!pre.ok) {
    reports.stated.samples_checked = reports.tight.samples_checked = samples.size();
    reports.stated.precondition_failures = reports.tight.precondition_failures =
        samples.size();
    return reports;
  }

  SlackTally stated, tight;
  for (const NcaSample& s : samples) {
    if (s.negatives.empty()) {
      throw UsageError("verify_nca_bound: sample with empty negative set");
    }

    std::vector<std::size_t> proxy_negatives(s.negatives.size());
    for (std::size_t i = 0; i < s.negatives.size(); ++i) {
      proxy_negatives[i] = static_cast<std::size_t>(point_to_proxy[s.negatives[i]]);
    }

    const double lhs = nca_loss_half(nc.unit_embeddings.row(s.x),
                                     nc.unit_embeddings.row(s.y), nc.unit_embeddings,
                                     s.negatives);
    const double raw_loss = nca_loss_half(
        points.row(s.x), proxies.row(static_cast<std::size_t>(point_to_proxy[s.y])),
        proxies, proxy_negatives);
    const double base =
        alpha * raw_loss + (1.0 - alpha) * std::log(static_cast<double>(s.negatives.size()));

    const double slack_stated = base + 2.0 * std::sqrt(2.0 * eps) - lhs;
    const double slack_tight = base + 2.0 * std::sqrt(eps) - lhs;
    stated.add(slack_stated, slack_stated < -kSlackTolerance);
    tight.add(slack_tight, slack_tight < -kSlackTolerance);
  }
  stated.fill(reports.stated);
  tight.fill(reports.tight);
  return reports;
}

BoundReport verify_triplet_bound(const Matrix& points,
                                 const std::vector<TripletSample>& samples,
                                 const Matrix& proxies,
                                 const std::vector<int>& point_to_proxy,
                                 double margin) {
  check_assignment(points, proxies, point_to_proxy, "verify_triplet_bound");

  const NormalizedConfig nc = normalize_config(points, proxies);
  const double eps =
      epsilon_assigned_unit(nc.unit_embeddings, nc.unit_proxies, point_to_proxy);
  const double alpha = nc.alpha();

  BoundReport report;
  report.bound_name = "triplet_proxy_bound";
  report.distance_convention = kHalfSquaredLabel;
  report.norm_stats = nc.norms;
  report.epsilon_used = eps;
  report.alpha_used = alpha;

  const PreconditionStatus pre = check_prop_preconditions(nc);
  if (!pre.ok) {
    report.samples_checked = samples.size();
    report.precondition_failures = samples.size();
    return report;
  }

  SlackTally tally;
  for (const TripletSample& t : samples) {
    const auto x_hat = nc.unit_embeddings.row(t.x);
    const double lhs = hinge(half_squared(x_hat, nc.unit_embeddings.row(t.y)) + margin -
                             half_squared(x_hat, nc.unit_embeddings.row(t.z)));

    const auto x_raw = points.row(t.x);
    const auto p_y = proxies.row(static_cast<std::size_t>(point_to_proxy[t.y]));
    const auto p_z = proxies.row(static_cast<std::size_t>(point_to_proxy[t.z]));
    const double raw_hinge =
        hinge(half_squared(x_raw, p_y) + margin - half_squared(x_raw, p_z));

    const double rhs =
        alpha * raw_hinge + (1.0 - alpha) * margin + 2.0 * std::sqrt(eps);
    const double slack = rhs - lhs;
    tally.add(slack, slack < -kSlackTolerance);
  }
  tally.fill(report);
  return report;
}

TotalLossBoundReport verify_total_loss_bound(const Matrix& points,
                                             const std::vector<int>& labels,
                                             const Matrix& proxies,
                                             const std::vector<int>& point_to_proxy,
                                             const TotalLossOptions& options) {
  check_assignment(points, proxies, point_to_proxy, "verify_total_loss_bound");
  if (labels.size() != points.rows) {
    throw UsageError("verify_total_loss_bound: labels size mismatch");
  }

  const NormalizedConfig nc = normalize_config(points, proxies);
  const double eps =
      epsilon_assigned_unit(nc.unit_embeddings, nc.unit_proxies, point_to_proxy);

  TotalLossBoundReport out;
  BoundReport& report = out.report;
  report.bound_name = "total_loss_bound";
  report.distance_convention = kHalfSquaredLabel;
  report.norm_stats = nc.norms;
  report.epsilon_used = eps;
  report.alpha_used = options.alpha;

  // Count the ordered triplet population: x, same-class y != x, other-class z.
  std::map<int, std::size_t> class_sizes;
  for (int l : labels) ++class_sizes[l];
  const auto n = points.rows;
  std::size_t population = 0;
  for (const auto& [label, size] : class_sizes) {
    population += size * (size - 1) * (n - size);
  }
  if (population == 0) {
    throw UsageError("verify_total_loss_bound: no valid triplet exists");
  }

  const PreconditionStatus pre = check_prop_preconditions(nc);

  std::size_t measured = 0;
  double lhs_sum = 0.0;
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::size_t> groups;

  const auto margin = options.margin;
  const auto account = [&](std::size_t x, std::size_t y, std::size_t z) {
    const auto x_hat = nc.unit_embeddings.row(x);
    lhs_sum += hinge(half_squared(x_hat, nc.unit_embeddings.row(y)) + margin -
                     half_squared(x_hat, nc.unit_embeddings.row(z)));
    ++groups[{x, static_cast<std::size_t>(point_to_proxy[y]),
              static_cast<std::size_t>(point_to_proxy[z])}];
    ++measured;
  };

  if (population <= options.max_triplets) {
    for (std::size_t x = 0; x < n; ++x) {
      for (std::size_t y = 0; y < n; ++y) {
        if (y == x || labels[y] != labels[x]) continue;
        for (std::size_t z = 0; z < n; ++z) {
          if (labels[z] == labels[x]) continue;
          account(x, y, z);
        }
      }
    }
  } else if (!options.allow_sampling) {
    throw ConfigError("verify_total_loss_bound: " + std::to_string(population) +
                      " triplets exceed the limit of " +
                      std::to_string(options.max_triplets) +
                      "; enable sampling to estimate");
  } else {
    out.estimated = true;
    Rng rng(options.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (measured < options.max_triplets) {
      const std::size_t x = pick(rng);
      const std::size_t y = pick(rng);
      const std::size_t z = pick(rng);
      if (y == x || labels[y] != labels[x] || labels[z] == labels[x]) continue;
      account(x, y, z);
    }
  }

  if (!pre.ok) {
    report.samples_checked = measured;
    report.precondition_failures = measured;
    return out;
  }

  out.lhs = lhs_sum / static_cast<double>(measured);

  double grouped = 0.0;
  for (const auto& [key, count] : groups) {
    const auto& [x, py, pz] = key;
    const auto x_raw = points.row(x);
    const double raw_hinge = hinge(half_squared(x_raw, proxies.row(py)) + margin -
                                   half_squared(x_raw, proxies.row(pz)));
    grouped += static_cast<double>(count) * raw_hinge;
  }
  out.rhs = options.alpha * grouped / static_cast<double>(measured) + options.delta;

  const double slack = out.rhs - out.lhs;
  report.samples_checked = measured;
  report.violations = slack < -kSlackTolerance ? 1 : 0;
  report.max_slack = slack;
  report.mean_slack = slack;
  return out;
}

}  // namespace pdml
