#include "tonelli/perturbation.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "tonelli/error.hpp"
#include "tonelli/parallel.hpp"

namespace tonelli {

namespace {

double unit_uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::string coeff(double c) { return "(" + num(c) + ")"; }

std::string var(int i) { return "x" + std::to_string(i + 1); }

double tolerance(double scale) { return 1e-12 * (1.0 + std::abs(scale)); }

}  // namespace

std::vector<Vec> Box::grid(int n) const {
  if (n < 2) throw ContractViolation("box grid needs at least 2 nodes per axis");
  const int d = dim();
  size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<size_t>(n);
  std::vector<Vec> pts;
  pts.reserve(total);
  for (size_t flat = 0; flat < total; ++flat) {
    Vec x(d);
    size_t rem = flat;
    for (int i = 0; i < d; ++i) {
      const int k = static_cast<int>(rem % n);
      rem /= n;
      x(i) = lo(i) + (hi(i) - lo(i)) * k / (n - 1);
    }
    pts.push_back(x);
  }
  return pts;
}

std::vector<Vec> Box::sample(size_t count, std::uint64_t seed) const {
  std::mt19937_64 rng(seed);
  std::vector<Vec> pts(count, Vec(dim()));
  for (auto& x : pts)
    for (int i = 0; i < dim(); ++i) x(i) = lo(i) + (hi(i) - lo(i)) * unit_uniform(rng);
  return pts;
}

MetricBounds estimate_bounds(const Metric& g, const Box& box, int per_dim) {
  if (box.dim() != g.dim()) throw ContractViolation("box and metric dimensions differ");
  const std::vector<Vec> pts = box.grid(per_dim);
  if (pts.size() < 100) throw ContractViolation("estimate_bounds needs at least 100 samples");
  std::vector<double> c(pts.size()), k(pts.size()), ke(pts.size());
  parallel_for(pts.size(), [&](size_t i) {
    const Mat gv = g.value(pts[i]);
    c[i] = min_eig(gv) / max_eig(gv);
    const BakryEmeryTensor t = bakry_emery_tensor(g, pts[i]);
    const Mat cov = t.covariant(), euc = t.euclidean();
    k[i] = min_eig(0.5 * (cov + cov.transpose()));
    ke[i] = min_eig(0.5 * (euc + euc.transpose()));
  });
  MetricBounds r;
  r.samples = pts.size();
  r.c_g = r.k_g = r.k_g_euclidean_hessian = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < pts.size(); ++i) {
    r.c_g = std::min(r.c_g, c[i]);
    r.k_g_euclidean_hessian = std::min(r.k_g_euclidean_hessian, ke[i]);
    if (k[i] < r.k_g) {
      r.k_g = k[i];
      r.k_argmin = pts[i];
    }
  }
  if (!(r.k_g > 0.0)) {
    r.rejected = true;
    r.reason = "Bakry-Emery lower bound k_g = " + num(r.k_g) + " is not positive on the box";
  }
  return r;
}

double perturbation_budget(double c_g, double k_g) {
  if (!(c_g > 0.0)) throw ValidationError("perturbation.c_g", "c_g must be positive");
  if (!(k_g > 0.0)) throw ValidationError("perturbation.k_g", "k_g must be positive");
  // compare 12 c against 10 k so decimal ties resolve without rounding of the quotients
  return 12.0 * c_g <= 10.0 * k_g ? c_g / 10.0 : k_g / 12.0;
}

std::string PhiSpec::expression() const {
  if (!shape.empty()) return coeff(alpha) + "*(" + shape + ")";
  return coeff(alpha) + "*exp(-norm2(v)/" + coeff(beta) + ")";
}

std::vector<Potential> default_field_bank(int d, int cubics, std::uint64_t seed) {
  std::vector<Potential> bank;
  std::string half = "0.5*(";
  for (int i = 0; i < d; ++i) half += (i ? "+" : "") + var(i) + "^2";
  bank.emplace_back(d, half + ")");

  std::string mixed;
  for (int i = 0; i < d; ++i) {
    mixed += (i ? "+" : "") + coeff(0.2 + 0.1 * i) + "*" + var(i) + "^2";
    for (int j = i + 1; j < d; ++j) mixed += "+" + coeff((i + j) % 2 ? -0.15 : 0.15) + "*" + var(i) + "*" + var(j);
  }
  bank.emplace_back(d, mixed);

  std::mt19937_64 rng(seed);
  for (int c = 0; c < cubics; ++c) {
    std::string e;
    auto term = [&](const std::string& mono) {
      e += (e.empty() ? "" : "+") + coeff(0.6 * unit_uniform(rng) - 0.3) + "*" + mono;
    };
    for (int i = 0; i < d; ++i) {
      term(var(i));
      for (int j = i; j < d; ++j) {
        term(var(i) + "*" + var(j));
        for (int k = j; k < d; ++k) term(var(i) + "*" + var(j) + "*" + var(k));
      }
    }
    bank.emplace_back(d, e);
  }

  bank.emplace_back(d, "exp(-0.5*norm2(x))*(0.8*x1 + 0.3*" + var(d - 1) + "^2)");
  return bank;
}

namespace {

/// The two metric contractions Hi^{ij} d_i g_jk Hi^{kl} d_l g_mn xi_m xi_n, summed once in
/// the order (m, n) and once in the order (n, m); they differ only by the symmetry of g.
double six_seven_gap(const Metric& g, const Mat& Hi, const Vec& x, const Vec& xi) {
  const int d = g.dim();
  const std::vector<Jet3> jets = g.jets(x, 1);
  auto dg = [&](int l, int m, int n) { return jets[m * d + n].grad(l); };
  double six = 0.0, seven = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) {
          const double pre = Hi(i, j) * dg(i, j, k) * Hi(k, l);
          for (int m = 0; m < d; ++m)
            for (int n = 0; n < d; ++n) {
              six += pre * dg(l, m, n) * xi(m) * xi(n);
              seven += pre * dg(l, n, m) * xi(n) * xi(m);
            }
        }
  return std::abs(six - seven);
}

}  // namespace

std::array<double, IndexTerms::kCount> group_budgets(double eps, double a, double b) {
  const double aa = eps * a * a, ab = 2.0 * eps * a * b, bb = eps * b * b;
  // I, II, III, IV, V, VI, VII, VIII, XA_x, XA_v, XA_t, XB_x, XB_v, XB_t
  return {aa, aa, ab, ab, ab, bb, bb, bb, ab, aa, ab, bb, ab, bb};
}

LedgerSample ledger_sample(const LagrangianModel& L, const LagrangianModel& Lt, const VectorField& field,
                           size_t field_index, const Vec& x, double eps) {
  if (!L.metric()) throw ContractViolation("ledger needs a metric Lagrangian");
  LedgerSample s;
  s.x = x;
  s.field = field_index;
  const FieldJet f = field.jet(x, 1);
  s.a = covariant_jacobian(*L.metric(), x, f.value, f.jac).norm();
  s.b = f.value.norm();
  s.k = curvature_def(L, field, x);
  s.k_tilde = curvature_def(Lt, field, x);
  const IndexTerms g = index_groups(L, field, x);
  const IndexTerms gt = index_groups(Lt, field, x);
  for (int i = 0; i < IndexTerms::kCount; ++i) s.delta[i] = std::abs(gt[i] - g[i]);
  s.delta_I_general = std::abs(gt.I_general - g[0]);
  for (int i = 0; i < 8; ++i) s.printed_sum += s.delta[i];
  s.corrected_sum = s.delta_I_general;
  for (int i = 1; i < IndexTerms::kCount; ++i) s.corrected_sum += s.delta[i];
  s.budget = 5.0 * eps * s.a * s.a + 6.0 * eps * s.b * s.b;
  s.six_seven_gap = std::max(six_seven_gap(*L.metric(), L.derivatives(x, f.value, 2).hvv_inverse(), x, f.value),
                             six_seven_gap(*L.metric(), Lt.derivatives(x, f.value, 2).hvv_inverse(), x, f.value));
  return s;
}

SampleSet make_samples(const PerturbationScenario& s, size_t count, std::uint64_t seed) {
  if (s.bank.empty()) throw ValidationError("perturbation.bank", "field bank is empty");
  SampleSet set;
  const LagrangianModel L = s.unperturbed();
  for (size_t i = 0; i < s.bank.size(); ++i)
    set.fields.push_back(VectorField::gradient_type(s.bank[i], L).with_label("bank" + std::to_string(i)));
  set.points = s.box.sample(count, seed);
  for (size_t i = 0; i < count; ++i) set.field_of.push_back(i % s.bank.size());
  return set;
}

Box velocity_box(const SampleSet& set) {
  const int d = static_cast<int>(set.points.front().size());
  Box b{Vec::Constant(d, std::numeric_limits<double>::infinity()),
        Vec::Constant(d, -std::numeric_limits<double>::infinity())};
  for (size_t i = 0; i < set.size(); ++i) {
    const Vec v = set.fields[set.field_of[i]].value(set.points[i]);
    b.lo = b.lo.cwiseMin(v);
    b.hi = b.hi.cwiseMax(v);
  }
  return b;
}

namespace {

std::vector<LedgerSample> evaluate(const PerturbationScenario& s, const SampleSet& set, double eps) {
  const LagrangianModel L = s.unperturbed(), Lt = s.perturbed();
  std::vector<LedgerSample> out(set.size());
  parallel_for(set.size(), [&](size_t i) {
    out[i] = ledger_sample(L, Lt, set.fields[set.field_of[i]], set.field_of[i], set.points[i], eps);
  });
  return out;
}

PhiBudgetReport summarize(const PerturbationScenario& s, const SampleSet& set, double eps,
                          const std::vector<LedgerSample>& samples) {
  PhiBudgetReport r;
  r.alpha = s.phi.alpha;
  r.eps = eps;
  r.samples = samples.size();
  r.velocity_box = velocity_box(set);

  // derivative sizes of phi over the velocity box
  const int d = s.dim();
  const Expression phi = Expression::parse(s.phi.expression(), VariableSet::velocities(d));
  const std::vector<Vec> vs = r.velocity_box.grid(d == 1 ? 201 : d == 2 ? 41 : 15);
  for (const Vec& v : vs) {
    const Jet3 j = phi.jet(v, 3);
    r.hess_norm_max = std::max(r.hess_norm_max, j.hessian().jacobiSvd().singularValues()(0));
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        for (int c = 0; c < d; ++c) r.third_max = std::max(r.third_max, std::abs(j.third(a, b, c)));
  }

  r.printed_ledger_holds = r.corrected_ledger_holds = r.difference_holds = true;
  r.min_margin = std::numeric_limits<double>::infinity();
  r.group_ratio.fill(0.0);
  int first = 8;
  for (const LedgerSample& x : samples) {
    const double tol = tolerance(x.k) * (1.0 + x.a * x.a + x.b * x.b);
    if (x.printed_sum > x.budget + tol) r.printed_ledger_holds = false;
    if (x.corrected_sum > x.budget + tol) r.corrected_ledger_holds = false;
    if (std::abs(x.k_tilde - x.k) > x.budget + tol) r.difference_holds = false;
    r.min_margin = std::min(r.min_margin, x.budget - std::max(x.printed_sum, x.corrected_sum));
    const auto budget = group_budgets(eps, x.a, x.b);
    for (int g = 0; g < 8; ++g) {
      if (x.delta[g] > tol) r.group_ratio[g] = std::max(r.group_ratio[g], x.delta[g] / budget[g]);
      if (x.delta[g] > budget[g] + tol) first = std::min(first, g);
    }
  }
  if (first < 8) r.first_violated_group = IndexTerms::names()[first];
  return r;
}

}  // namespace

PhiBudgetReport phi_budget_check(const PerturbationScenario& s, const SampleSet& set, double eps) {
  return summarize(s, set, eps, evaluate(s, set, eps));
}

AlphaSearch calibrate_alpha(const PerturbationScenario& s, double eps, double rel_tol) {
  if (!(eps > 0.0)) throw ContractViolation("calibrate_alpha needs eps > 0");
  const SampleSet set = make_samples(s, s.calibration_samples, s.seed + 1);
  AlphaSearch r;
  auto passes = [&](double alpha) {
    ++r.iterations;
    PerturbationScenario t = s;
    t.phi.alpha = alpha;
    return phi_budget_check(t, set, eps).passes_term_by_term();
  };
  double lo = 0.0, hi = s.phi.alpha > 0.0 ? s.phi.alpha : 1e-3;
  while (passes(hi)) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e6) throw NonConvergence("alpha search found no failing perturbation");
  }
  if (lo == 0.0) {
    lo = hi;
    do {
      hi = lo;
      lo *= 0.5;
      if (lo < 1e-14) throw NonConvergence("alpha search found no passing perturbation");
    } while (!passes(lo));
  }
  while (hi / lo > 1.0 + rel_tol) {
    const double mid = std::sqrt(lo * hi);
    (passes(mid) ? lo : hi) = mid;
  }
  r.alpha_boundary = lo;
  r.alpha = 0.5 * lo;
  return r;
}

NonnegReport perturbed_nonneg_check(const PerturbationScenario& s) {
  NonnegReport r;
  r.alpha = s.phi.alpha;
  r.bounds = estimate_bounds(s.g, s.box, s.bound_samples_per_dim);
  if (r.bounds.rejected) return r;
  r.eps = perturbation_budget(r.bounds.c_g, r.bounds.k_g);
  const SampleSet set = make_samples(s, s.samples, s.seed);
  const std::vector<LedgerSample> samples = evaluate(s, set, r.eps);
  r.budget = summarize(s, set, r.eps, samples);
  r.samples = samples.size();

  const LagrangianModel Lt = s.perturbed();
  std::vector<double> gap(set.size());
  parallel_for(set.size(), [&](size_t i) {
    const IndexTerms t = index_groups(Lt, set.fields[set.field_of[i]], set.points[i]);
    gap[i] = std::abs(t.total_general() - samples[i].k_tilde);
  });

  const double c = r.bounds.c_g, k = r.bounds.k_g;
  r.min_k = r.min_k_tilde = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < samples.size(); ++i) {
    const LedgerSample& x = samples[i];
    const double tol = tolerance(x.k) * (1.0 + x.a * x.a + x.b * x.b);
    r.min_k = std::min(r.min_k, x.k);
    r.min_k_tilde = std::min(r.min_k_tilde, x.k_tilde);
    r.max_consistency_gap = std::max(r.max_consistency_gap, gap[i]);
    r.max_six_seven_gap = std::max(r.max_six_seven_gap, x.six_seven_gap);
    const double a2 = x.a * x.a, b2 = x.b * x.b;
    if (std::max({x.printed_sum, x.corrected_sum, std::abs(x.k_tilde - x.k)}) > x.budget + tol) ++r.ledger_failures;
    const auto budget = group_budgets(r.eps, x.a, x.b);
    for (int g = 0; g < 8; ++g)
      if (x.delta[g] > budget[g] + tol) {
        ++r.group_failures;
        break;
      }
    if (x.k < c * a2 + k * b2 - tol) ++r.lower_bound_failures;
    if (x.k_tilde < x.k - 0.5 * c * a2 - 0.5 * k * b2 - tol) ++r.chain_failures;
    if (x.k_tilde < -r.tolerance) ++r.negative;
  }
  return r;
}

}  // namespace tonelli
