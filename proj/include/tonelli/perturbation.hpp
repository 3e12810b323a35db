#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tonelli/curvature.hpp"

namespace tonelli {

/// Axis-aligned box [lo, hi] in R^d.
struct Box {
  Vec lo, hi;

  static Box cube(int d, double r) { return {Vec::Constant(d, -r), Vec::Constant(d, r)}; }
  int dim() const { return static_cast<int>(lo.size()); }
  /// Tensor grid with n nodes per axis, corners included.
  std::vector<Vec> grid(int n) const;
  /// Deterministic uniform samples.
  std::vector<Vec> sample(size_t count, std::uint64_t seed) const;
};

struct MetricBounds {
  double c_g = 0.0;  ///< min over samples of lambda_min(g) / lambda_max(g)
  double k_g = 0.0;  ///< min over samples of lambda_min(Ric + covariant Hess(1/2 log det g))
  Vec k_argmin;
  /// Smallest eigenvalue of the same tensor with the plain Hessian, for reference.
  double k_g_euclidean_hessian = 0.0;
  size_t samples = 0;
  bool rejected = false;
  std::string reason;
};

/// Lower bounds of the Riemannian curvature K(xi) >= c_g |N|^2 + k_g |xi|^2 on a box,
/// with N the covariant Jacobian of xi. c_g bounds the form N -> tr(g^-1 N^T g N)
/// against the Frobenius norm; k_g bounds the Bakry-Emery form against |xi|^2.
/// Never throws for k_g <= 0; the report is marked rejected instead.
MetricBounds estimate_bounds(const Metric& g, const Box& box, int per_dim);

/// min{c_g / 10, k_g / 12}. Throws ValidationError unless both are positive.
double perturbation_budget(double c_g, double k_g);

/// phi(v) = alpha exp(-|v|^2 / beta), or alpha times a custom expression in v1..vd.
struct PhiSpec {
  double alpha = 0.0;
  double beta = 1.0;
  std::string shape;  ///< empty: the Gaussian preset

  std::string expression() const;
  PhiSpec scaled(double s) const {
    PhiSpec p = *this;
    p.alpha *= s;
    return p;
  }
};

/// Gradient-type fields of the unperturbed metric: quadratics, `cubics` random cubic
/// polynomials and one bump-modulated potential.
std::vector<Potential> default_field_bank(int d, int cubics, std::uint64_t seed);

struct PerturbationScenario {
  Metric g;
  Box box;
  PhiSpec phi;
  std::vector<Potential> bank;
  int bound_samples_per_dim = 11;
  size_t samples = 10000;           ///< (point, field) pairs for the final check
  size_t calibration_samples = 1000;  ///< pairs used to tune alpha
  std::uint64_t seed = 1;

  int dim() const { return g.dim(); }
  LagrangianModel unperturbed() const { return LagrangianModel::riemannian(g); }
  LagrangianModel perturbed() const { return LagrangianModel::perturbed(g, phi.expression()); }
};

/// Budgets of the printed difference ledger, in units of eps: a = |N|_F, b = |xi|.
/// Indexed like IndexTerms (I..VIII first).
std::array<double, IndexTerms::kCount> group_budgets(double eps, double a, double b);

/// One (point, field) comparison of the unperturbed and perturbed curvature.
struct LedgerSample {
  Vec x;
  size_t field = 0;
  double a = 0.0, b = 0.0;
  double k = 0.0, k_tilde = 0.0;
  std::array<double, IndexTerms::kCount> delta{};  ///< |G~ - G| per group, I~ taken as printed
  double delta_I_general = 0.0;  ///< |I~_general - I|
  double printed_sum = 0.0;      ///< |I~-I|+|V~-V|+|VI~-VI|+|VII~-VII|+|VIII~-VIII|+|II~|+|III~|+|IV~|
  double corrected_sum = 0.0;    ///< all fourteen groups, with I~_general in place of I~
  double budget = 0.0;           ///< 5 eps a^2 + 6 eps b^2
  /// VI and VII of the displayed metric expansion differ only in the order of the last
  /// two indices; max gap over L and L~.
  double six_seven_gap = 0.0;
};

LedgerSample ledger_sample(const LagrangianModel& L, const LagrangianModel& Lt, const VectorField& field,
                           size_t field_index, const Vec& x, double eps);

struct PhiBudgetReport {
  double alpha = 0.0;
  double eps = 0.0;
  Box velocity_box;
  double hess_norm_max = 0.0;  ///< max operator norm of the Hessian of phi over the velocity box
  double third_max = 0.0;      ///< max |d3 phi / dv_i dv_j dv_k| over the velocity box
  size_t samples = 0;
  bool printed_ledger_holds = false;    ///< printed_sum <= budget at every sample
  bool corrected_ledger_holds = false;  ///< corrected_sum <= budget at every sample
  bool difference_holds = false;        ///< |K~ - K| <= budget at every sample
  double min_margin = 0.0;  ///< min of budget - max(printed_sum, corrected_sum)
  /// Per printed group I..VIII: max of |G~ - G| / budget over samples (diagnostic).
  std::array<double, 8> group_ratio{};
  std::string first_violated_group;  ///< first of I..VIII whose budget fails, or ""
  bool passes() const { return printed_ledger_holds && corrected_ledger_holds && difference_holds; }
  /// passes() and every printed group within its own budget.
  bool passes_term_by_term() const { return passes() && first_violated_group.empty(); }
};

/// Samples of (point, field) pairs from the box and the bank.
struct SampleSet {
  std::vector<VectorField> fields;
  std::vector<Vec> points;
  std::vector<size_t> field_of;  ///< field index per point
  size_t size() const { return points.size(); }
};

SampleSet make_samples(const PerturbationScenario& s, size_t count, std::uint64_t seed);

/// Smallest box containing every field value in the set.
Box velocity_box(const SampleSet& set);

/// Checks the difference ledger for a given phi and eps on a sample set.
PhiBudgetReport phi_budget_check(const PerturbationScenario& s, const SampleSet& set, double eps);

struct AlphaSearch {
  double alpha_boundary = 0.0;  ///< largest alpha found to pass on the calibration set
  double alpha = 0.0;           ///< recorded alpha: half the boundary
  int iterations = 0;
};

/// Bisection of alpha (log scale) against the ledger on the calibration samples.
AlphaSearch calibrate_alpha(const PerturbationScenario& s, double eps, double rel_tol = 1e-2);

struct NonnegReport {
  MetricBounds bounds;
  double eps = 0.0;
  double alpha = 0.0;
  size_t samples = 0;
  double min_k = 0.0, min_k_tilde = 0.0;
  double max_consistency_gap = 0.0;  ///< |K~ (definition) - K~ (corrected groups)| max
  double max_six_seven_gap = 0.0;
  size_t ledger_failures = 0;     ///< samples with max(printed, corrected, |K~-K|) > budget
  size_t group_failures = 0;      ///< samples where some printed group exceeds its own budget
  size_t lower_bound_failures = 0;  ///< K < c a^2 + k b^2
  size_t chain_failures = 0;      ///< K~ < K - c/2 a^2 - k/2 b^2
  size_t negative = 0;            ///< K~ < -tolerance
  double tolerance = 1e-8;
  PhiBudgetReport budget;
  std::string grad_norm = "frobenius norm of the covariant jacobian";
  std::string field_norm = "euclidean";
  std::string scope = "bounds and samples restricted to the declared box";
  bool rejected() const { return bounds.rejected; }
  /// The certified chain is broken somewhere: a ledger step, the lower bound, or the sign.
  bool chain_violation() const {
    return ledger_failures + group_failures + lower_bound_failures + chain_failures + negative > 0;
  }
};

/// Evaluates K~ = curvature_def(L~, xi) over the scenario's samples and the pointwise
/// chain K~ >= K - c/2 a^2 - k/2 b^2 >= c/2 a^2 + k/2 b^2 >= 0.
NonnegReport perturbed_nonneg_check(const PerturbationScenario& s);

}  // namespace tonelli
