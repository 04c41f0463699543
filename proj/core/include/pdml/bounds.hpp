#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pdml/matrix.hpp"

// Numerical verification of the proxy approximation inequalities. Each check
// runs in the distance convention under which it is a theorem:
//
//  * ordinal preservation and the ranking expectation bound use Euclidean
//    (non-squared) distances with epsilon = worst nearest-proxy distance;
//  * the NCA / triplet / total-loss bounds use half-squared distances
//    (d = |a-b|^2 / 2, equivalently unit-sphere dot products) with epsilon =
//    worst squared distance between a unit point and its assigned unit proxy.
//
// Every report labels the convention it used.

namespace pdml {

/** Absolute per-sample slack tolerance before a violation is counted. */
inline constexpr double kSlackTolerance = 1e-9;

/** Relative norm spread (stddev/mean) below which norms count as constant. */
inline constexpr double kNormConstancyTolerance = 1e-6;

struct NormStats {
  double embedding_mean = 0.0;
  double embedding_stddev = 0.0;
  double proxy_mean = 0.0;
  double proxy_stddev = 0.0;
};

struct NormalizedConfig {
  Matrix unit_embeddings;
  Matrix unit_proxies;
  double n_x = 1.0;  // mean embedding norm before normalization
  double n_p = 1.0;  // mean proxy norm before normalization
  NormStats norms;

  double alpha() const { return 1.0 / (n_x * n_p); }
};

/** Unit-normalizes every embedding and proxy, recording the mean pre-rescale
 *  norms. Zero vectors are numeric (degenerate-input) errors. */
NormalizedConfig normalize_config(const Matrix& embeddings, const Matrix& proxies);

struct BoundReport {
  std::string bound_name;
  std::string distance_convention;
  std::size_t samples_checked = 0;
  std::size_t violations = 0;
  std::size_t precondition_failures = 0;
  double max_slack = 0.0;   // min over samples of RHS - LHS (the binding case)
  double mean_slack = 0.0;
  double epsilon_used = 0.0;
  double alpha_used = 1.0;
  NormStats norm_stats;
};

/** Anchor, same-class point, other-class point, as row indices. */
struct TripletSample {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t z = 0;
};

/** Anchor, positive, and a nonempty negative set, as row indices. */
struct NcaSample {
  std::size_t x = 0;
  std::size_t y = 0;
  std::vector<std::size_t> negatives;
};

/**
 * |{d(x,y) - d(x,z)} - {d(x,p(y)) - d(x,p(z))}| <= 2*epsilon per sample, with
 * Euclidean distances, p(.) the nearest proxy, and epsilon the worst
 * nearest-proxy distance over `points`. Also checks the ordinal consequence:
 * when |d(x,p(y)) - d(x,p(z))| > 2*epsilon the proxy ordering must agree with
 * the data ordering. A sample violating either check counts once.
 */
BoundReport verify_ordinal_preservation(const Matrix& points,
                                        const std::vector<TripletSample>& samples,
                                        const Matrix& proxies);

/**
 * Pointwise form of the ranking expectation bound with H the zero-one step
 * (H(0) := 0): H(d(x,y)-d(x,z)) <= H(d(x,p(y))-d(x,p(z))) + [|d(x,p(y)) -
 * d(x,p(z))| <= 2*epsilon]. mean_slack is then exactly the slack of the
 * expectation bound over the sampled triplets.
 */
BoundReport verify_ranking_expectation_bound(const Matrix& points,
                                             const std::vector<TripletSample>& samples,
                                             const Matrix& proxies);

struct NcaBoundReports {
  BoundReport stated;  // constant 2*sqrt(2*epsilon)
  BoundReport tight;   // constant 2*sqrt(epsilon), as the derivation chain yields
};

/**
 * L^(x,y,Z) <= alpha*L(x,p_y,p_Z) + (1-alpha)*log|Z| + 2*sqrt(2*epsilon),
 * where L^ is the NCA loss on unit-normalized points, L is the NCA loss on
 * the raw anchor and proxies (half-squared distances), alpha = 1/(N_x*N_p),
 * and epsilon is the worst squared unit-sphere distance of a point to its
 * assigned proxy. The tighter constant 2*sqrt(epsilon) is checked alongside.
 *
 * Preconditions (constant embedding and proxy norms, beta = alpha < 1,
 * N_x > 1) are evaluated on the whole configuration; when any fails, samples
 * are flagged as precondition failures instead of being measured.
 */
NcaBoundReports verify_nca_bound(const Matrix& points,
                                 const std::vector<NcaSample>& samples,
                                 const Matrix& proxies,
                                 const std::vector<int>& point_to_proxy);

/**
 * L^_triplet(x,y,z) <= alpha*L_triplet(x,p_y,p_z) + (1-alpha)*M +
 * 2*sqrt(epsilon), same conventions and preconditions as the NCA bound
 * (except that alpha <= 1 suffices; N_x > 1 is still required for parity
 * with the stated proof).
 */
BoundReport verify_triplet_bound(const Matrix& points,
                                 const std::vector<TripletSample>& samples,
                                 const Matrix& proxies,
                                 const std::vector<int>& point_to_proxy,
                                 double margin);

/**
 * Mean triplet loss over every same-class-positive triplet of the labeled
 * point set, bounded by the proxy-grouped sum: LHS = mean L^_triplet(x,y,z),
 * RHS = alpha/|T| * sum over groups (x,p_y,p_z) of n_group * L_triplet +
 * delta. Callers pass alpha and delta (canonically (1-alpha)*M +
 * 2*sqrt(epsilon)); epsilon is recomputed for the report. Populations above
 * max_triplets are an error unless sampling is allowed, in which case
 * `estimated` is set and max_triplets triplets are drawn with `seed`.
 */
struct TotalLossOptions {
  double margin = 1.0;
  double alpha = 1.0;
  double delta = 0.0;
  std::size_t max_triplets = 1000000;
  bool allow_sampling = false;
  std::uint64_t seed = 0;
};

struct TotalLossBoundReport {
  BoundReport report;
  bool estimated = false;  // sampled rather than exhaustive
  double lhs = 0.0;
  double rhs = 0.0;
};

TotalLossBoundReport verify_total_loss_bound(const Matrix& points,
                                             const std::vector<int>& labels,
                                             const Matrix& proxies,
                                             const std::vector<int>& point_to_proxy,
                                             const TotalLossOptions& options);

}  // namespace pdml
