#pragma once

#include <map>
#include <string>
#include <vector>

#include "tonelli/jet.hpp"

namespace tonelli {

/// Named scalar variables, optionally grouped into vectors for dot()/norm2().
class VariableSet {
 public:
  /// x1..xd, group "x".
  static VariableSet positions(int d);
  /// x1..xd then v1..vd, groups "x" and "v".
  static VariableSet phase_space(int d);
  /// v1..vd, group "v".
  static VariableSet velocities(int d);
  static VariableSet scalar(const std::string& name);

  int size() const { return static_cast<int>(names_.size()); }
  /// Index of a scalar variable, or -1.
  int index(const std::string& name) const;
  /// Members of a vector group; empty if unknown.
  const std::vector<int>& group(const std::string& name) const;
  const std::vector<std::string>& names() const { return names_; }

 private:
  void add_group(const std::string& prefix, int d);
  std::vector<std::string> names_;
  std::map<std::string, std::vector<int>> groups_;
};

/// A parsed smooth expression compiled to a straight-line tape.
///
/// Grammar: numbers, variables, `pi`, + - * / ^, and the calls exp, log, sin,
/// cos, sqrt, pow(a,b), dot(x,v), norm2(x). `^` is right associative and binds
/// tighter than unary minus, so -x^2 is -(x^2).
class Expression {
 public:
  Expression() = default;
  /// Throws ParseError or UnsupportedPrimitive.
  static Expression parse(const std::string& source, const VariableSet& vars);

  const std::string& source() const { return source_; }
  int arity() const { return arity_; }
  bool empty() const { return tape_.empty(); }
  /// True if the tape folded to a single constant.
  bool is_constant() const;

  template <class T>
  T value(const T* x) const;
  double operator()(const Vec& x) const;

  /// Taylor coefficients through `order` at x.
  Jet3 jet(const Vec& x, int order = 3) const;

  /// Evaluate with the variables replaced by the given jets (all of one size/order).
  Jet3 jet_compose(const std::vector<Jet3>& args) const;

  size_t tape_size() const { return tape_.size(); }

  enum class Op { constant, variable, add, sub, mul, div, neg, powc, pow, exp, log, sin, cos, sqrt };
  struct Instr {
    Op op;
    int a = -1;
    int b = -1;
    double c = 0.0;  ///< constant value, variable index, or fixed exponent
  };

 private:
  friend class Parser;
  std::string source_;
  int arity_ = 0;
  std::vector<Instr> tape_;
};

/// Exact Taylor coefficients of `expr` at x through order 3.
Jet3 jet_lift(const Expression& expr, const Vec& x, int order = 3);

struct JetCheckReport {
  double grad = 0.0;   ///< max relative deviation of first derivatives
  double hess = 0.0;
  double third = 0.0;
  double max() const { return std::max(grad, std::max(hess, third)); }
};

/// Compares jet coefficients with Richardson-extrapolated central differences,
/// computed in quad precision. h <= 0 picks 1e-3 * max(1, |x|).
JetCheckReport jet_check(const Expression& expr, const Vec& x, double h = 0.0);

/// Shortest round-trip decimal form, for assembling expression strings.
std::string num(double x);

}  // namespace tonelli
