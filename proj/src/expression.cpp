#include "tonelli/expression.hpp"

#include <quadmath.h>

#include <cctype>
#include <cmath>
#include <cstdio>

#include "tonelli/error.hpp"

namespace tonelli {

// ---------------------------------------------------------------- variables

void VariableSet::add_group(const std::string& prefix, int d) {
  std::vector<int> members;
  for (int i = 1; i <= d; ++i) {
    members.push_back(static_cast<int>(names_.size()));
    names_.push_back(prefix + std::to_string(i));
  }
  groups_[prefix] = members;
}

VariableSet VariableSet::positions(int d) {
  VariableSet s;
  s.add_group("x", d);
  return s;
}

VariableSet VariableSet::phase_space(int d) {
  VariableSet s;
  s.add_group("x", d);
  s.add_group("v", d);
  return s;
}

VariableSet VariableSet::velocities(int d) {
  VariableSet s;
  s.add_group("v", d);
  return s;
}

VariableSet VariableSet::scalar(const std::string& name) {
  VariableSet s;
  s.names_.push_back(name);
  return s;
}

int VariableSet::index(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  auto it = groups_.find(name);
  if (it != groups_.end() && it->second.size() == 1) return it->second[0];
  return -1;
}

const std::vector<int>& VariableSet::group(const std::string& name) const {
  static const std::vector<int> none;
  auto it = groups_.find(name);
  return it == groups_.end() ? none : it->second;
}

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// ---------------------------------------------------------------- parser

using Op = Expression::Op;

class Parser {
 public:
  Parser(const std::string& src, const VariableSet& vars) : src_(src), vars_(vars) {}

  Expression run() {
    const int root = parse_sum();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    Expression e;
    e.source_ = src_;
    e.arity_ = vars_.size();
    e.tape_ = prune(root);
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("in '" + src_ + "' at offset " + std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < src_.size() && src_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(std::string("expected '") + c + "'");
  }

  bool is_const(int r) const { return tape_[r].op == Op::constant; }
  double cval(int r) const { return tape_[r].c; }

  int emit(Op op, int a = -1, int b = -1, double c = 0.0) {
    tape_.push_back({op, a, b, c});
    return static_cast<int>(tape_.size()) - 1;
  }

  int constant(double c) { return emit(Op::constant, -1, -1, c); }

  // Build an instruction, folding constants and trivial identities.
  int make(Op op, int a, int b = -1, double c = 0.0) {
    const bool ca = a >= 0 && is_const(a);
    const bool cb = b >= 0 && is_const(b);
    switch (op) {
      case Op::add:
        if (ca && cb) return constant(cval(a) + cval(b));
        if (ca && cval(a) == 0.0) return b;
        if (cb && cval(b) == 0.0) return a;
        break;
      case Op::sub:
        if (ca && cb) return constant(cval(a) - cval(b));
        if (cb && cval(b) == 0.0) return a;
        break;
      case Op::mul:
        if (ca && cb) return constant(cval(a) * cval(b));
        if ((ca && cval(a) == 0.0) || (cb && cval(b) == 0.0)) return constant(0.0);
        if (ca && cval(a) == 1.0) return b;
        if (cb && cval(b) == 1.0) return a;
        break;
      case Op::div:
        if (cb && cval(b) == 0.0) fail("division by the constant zero");
        if (ca && cb) return constant(cval(a) / cval(b));
        if (cb) return make(Op::mul, a, constant(1.0 / cval(b)));
        break;
      case Op::neg:
        if (ca) return constant(-cval(a));
        break;
      case Op::pow:
        if (cb) return make(Op::powc, a, -1, cval(b));
        break;
      case Op::powc:
        if (c == 1.0) return a;
        if (c == 0.0) return constant(1.0);
        if (ca) {
          double f[4];
          pow_derivs(cval(a), c, f);
          return constant(f[0]);
        }
        break;
      case Op::exp:
      case Op::log:
      case Op::sin:
      case Op::cos:
      case Op::sqrt:
        if (ca) {
          double f[4];
          unary_derivs(op, cval(a), f);
          return constant(f[0]);
        }
        break;
      default:
        break;
    }
    return emit(op, a, b, c);
  }

  static void unary_derivs(Op op, double x, double f[4]) {
    switch (op) {
      case Op::exp: return exp_derivs(x, f);
      case Op::log: return log_derivs(x, f);
      case Op::sin: return sin_derivs(x, f);
      case Op::cos: return cos_derivs(x, f);
      default: return sqrt_derivs(x, f);
    }
  }

  int parse_sum() {
    int lhs = parse_product();
    for (;;) {
      if (accept('+')) lhs = make(Op::add, lhs, parse_product());
      else if (accept('-')) lhs = make(Op::sub, lhs, parse_product());
      else return lhs;
    }
  }

  int parse_product() {
    int lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = make(Op::mul, lhs, parse_unary());
      else if (accept('/')) lhs = make(Op::div, lhs, parse_unary());
      else return lhs;
    }
  }

  int parse_unary() {
    if (accept('-')) return make(Op::neg, parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  int parse_power() {
    const int base = parse_primary();
    if (accept('^')) return make(Op::pow, base, parse_unary());
    return base;
  }

  std::string identifier() {
    skip_ws();
    const size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
      ++pos_;
    return src_.substr(start, pos_ - start);
  }

  const std::vector<int>& group_arg() {
    const std::string name = identifier();
    const auto& g = vars_.group(name);
    if (g.empty()) fail("'" + name + "' is not a vector variable group");
    return g;
  }

  int dot(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) fail("dot of groups with different lengths");
    int acc = constant(0.0);
    for (size_t i = 0; i < a.size(); ++i) {
      const int va = emit(Op::variable, -1, -1, a[i]);
      const int vb = emit(Op::variable, -1, -1, b[i]);
      acc = make(Op::add, acc, make(Op::mul, va, vb));
    }
    return acc;
  }

  int parse_primary() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = src_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<size_t>(end - begin);
      return constant(v);
    }
    if (accept('(')) {
      const int r = parse_sum();
      expect(')');
      return r;
    }
    if (!(std::isalpha(static_cast<unsigned char>(c)) || c == '_')) fail("unexpected '" + std::string(1, c) + "'");
    const std::string name = identifier();
    if (accept('(')) {
      int r;
      if (name == "dot") {
        const auto& a = group_arg();
        expect(',');
        const auto& b = group_arg();
        r = dot(a, b);
      } else if (name == "norm2") {
        const auto& a = group_arg();
        r = dot(a, a);
      } else if (name == "pow") {
        const int a = parse_sum();
        expect(',');
        const int b = parse_sum();
        r = make(Op::pow, a, b);
      } else {
        Op op;
        if (name == "exp") op = Op::exp;
        else if (name == "log") op = Op::log;
        else if (name == "sin") op = Op::sin;
        else if (name == "cos") op = Op::cos;
        else if (name == "sqrt") op = Op::sqrt;
        else throw UnsupportedPrimitive(name);
        r = make(op, parse_sum());
      }
      expect(')');
      return r;
    }
    if (name == "pi") return constant(M_PI);
    const int idx = vars_.index(name);
    if (idx < 0) fail("unknown variable '" + name + "'");
    return emit(Op::variable, -1, -1, idx);
  }

  // Drop instructions the root does not depend on and renumber.
  std::vector<Expression::Instr> prune(int root) const {
    std::vector<char> live(tape_.size(), 0);
    live[root] = 1;
    for (int i = root; i >= 0; --i) {
      if (!live[i]) continue;
      if (tape_[i].a >= 0) live[tape_[i].a] = 1;
      if (tape_[i].b >= 0) live[tape_[i].b] = 1;
    }
    std::vector<int> remap(tape_.size(), -1);
    std::vector<Expression::Instr> out;
    for (int i = 0; i <= root; ++i) {
      if (!live[i]) continue;
      Expression::Instr ins = tape_[i];
      if (ins.a >= 0) ins.a = remap[ins.a];
      if (ins.b >= 0) ins.b = remap[ins.b];
      remap[i] = static_cast<int>(out.size());
      out.push_back(ins);
    }
    return out;
  }

  const std::string& src_;
  const VariableSet& vars_;
  size_t pos_ = 0;
  std::vector<Expression::Instr> tape_;
};

Expression Expression::parse(const std::string& source, const VariableSet& vars) {
  return Parser(source, vars).run();
}

bool Expression::is_constant() const { return tape_.size() == 1 && tape_[0].op == Op::constant; }

// ---------------------------------------------------------------- scalar evaluation

namespace {

inline double f_exp(double x) { return std::exp(x); }
inline double f_log(double x) { return std::log(x); }
inline double f_sin(double x) { return std::sin(x); }
inline double f_cos(double x) { return std::cos(x); }
inline double f_sqrt(double x) { return std::sqrt(x); }
inline double f_pow(double x, double p) { return std::pow(x, p); }

inline __float128 f_exp(__float128 x) { return expq(x); }
inline __float128 f_log(__float128 x) { return logq(x); }
inline __float128 f_sin(__float128 x) { return sinq(x); }
inline __float128 f_cos(__float128 x) { return cosq(x); }
inline __float128 f_sqrt(__float128 x) { return sqrtq(x); }
inline __float128 f_pow(__float128 x, __float128 p) {
  // powq is inaccurate for small integer exponents of negative bases; multiply out instead.
  if (p == floorq(p) && fabsq(p) <= 64) {
    long n = static_cast<long>(p);
    __float128 r = 1, b = x;
    const bool neg = n < 0;
    if (neg) n = -n;
    while (n) {
      if (n & 1) r *= b;
      b *= b;
      n >>= 1;
    }
    return neg ? 1 / r : r;
  }
  return powq(x, p);
}

}  // namespace

template <class T>
T Expression::value(const T* x) const {
  thread_local std::vector<T> reg;
  reg.resize(tape_.size());
  for (size_t i = 0; i < tape_.size(); ++i) {
    const Instr& ins = tape_[i];
    T r{};
    switch (ins.op) {
      case Op::constant: r = static_cast<T>(ins.c); break;
      case Op::variable: r = x[static_cast<int>(ins.c)]; break;
      case Op::add: r = reg[ins.a] + reg[ins.b]; break;
      case Op::sub: r = reg[ins.a] - reg[ins.b]; break;
      case Op::mul: r = reg[ins.a] * reg[ins.b]; break;
      case Op::div:
        if (reg[ins.b] == 0) throw DomainError("division by zero in '" + source_ + "'");
        r = reg[ins.a] / reg[ins.b];
        break;
      case Op::neg: r = -reg[ins.a]; break;
      case Op::powc: {
        const T base = reg[ins.a];
        const bool integer = ins.c == std::floor(ins.c);
        if (!integer && !(base > 0))
          throw DomainError("pow with non-integer exponent requires a positive base in '" + source_ + "'");
        if (integer && ins.c < 0 && base == 0) throw DomainError("pow: zero base with negative exponent");
        r = f_pow(base, static_cast<T>(ins.c));
        break;
      }
      case Op::pow:
        if (!(reg[ins.a] > 0))
          throw DomainError("pow with variable exponent requires a positive base in '" + source_ + "'");
        r = f_exp(reg[ins.b] * f_log(reg[ins.a]));
        break;
      case Op::exp: r = f_exp(reg[ins.a]); break;
      case Op::log:
        if (!(reg[ins.a] > 0)) throw DomainError("log of non-positive argument in '" + source_ + "'");
        r = f_log(reg[ins.a]);
        break;
      case Op::sin: r = f_sin(reg[ins.a]); break;
      case Op::cos: r = f_cos(reg[ins.a]); break;
      case Op::sqrt:
        if (!(reg[ins.a] > 0)) {
          if (reg[ins.a] == 0) {
            r = 0;
            break;
          }
          throw DomainError("sqrt of negative argument in '" + source_ + "'");
        }
        r = f_sqrt(reg[ins.a]);
        break;
    }
    reg[i] = r;
  }
  return reg.back();
}

template double Expression::value<double>(const double*) const;
template __float128 Expression::value<__float128>(const __float128*) const;

double Expression::operator()(const Vec& x) const {
  if (x.size() != arity_) throw ContractViolation("expression '" + source_ + "' expects " + std::to_string(arity_) + " variables");
  return value<double>(x.data());
}

// ---------------------------------------------------------------- jet evaluation

namespace {

void run_tape(const std::vector<Expression::Instr>& tape, std::vector<Jet3>& reg, const std::vector<Jet3>* args,
              const Vec* point, int n, int order) {
  using Op = Expression::Op;
  reg.resize(tape.size());
  Jet3 tmp;
  double f[4];
  for (size_t i = 0; i < tape.size(); ++i) {
    const auto& ins = tape[i];
    Jet3& out = reg[i];
    switch (ins.op) {
      case Op::constant:
        out.reset(n, order);
        out.set_constant(ins.c);
        break;
      case Op::variable: {
        const int v = static_cast<int>(ins.c);
        if (args) {
          out = (*args)[v];
        } else {
          out.reset(n, order);
          out.set_variable(v, (*point)(v));
        }
        break;
      }
      case Op::add: Jet3::add(out, reg[ins.a], reg[ins.b]); break;
      case Op::sub: Jet3::add(out, reg[ins.a], reg[ins.b], -1.0); break;
      case Op::mul: Jet3::mul(out, reg[ins.a], reg[ins.b]); break;
      case Op::div: {
        const double s = reg[ins.b].value();
        if (s == 0.0) throw DomainError("division by zero");
        Jet3::compose(tmp, reg[ins.b], 1.0 / s, -1.0 / (s * s), 2.0 / (s * s * s), -6.0 / (s * s * s * s));
        Jet3::mul(out, reg[ins.a], tmp);
        break;
      }
      case Op::neg: Jet3::scale(out, reg[ins.a], -1.0); break;
      case Op::powc:
        pow_derivs(reg[ins.a].value(), ins.c, f);
        Jet3::compose(out, reg[ins.a], f[0], f[1], f[2], f[3]);
        break;
      case Op::pow:
        log_derivs(reg[ins.a].value(), f);
        Jet3::compose(tmp, reg[ins.a], f[0], f[1], f[2], f[3]);
        Jet3::mul(out, tmp, reg[ins.b]);
        exp_derivs(out.value(), f);
        tmp = out;
        Jet3::compose(out, tmp, f[0], f[1], f[2], f[3]);
        break;
      case Op::exp:
        exp_derivs(reg[ins.a].value(), f);
        Jet3::compose(out, reg[ins.a], f[0], f[1], f[2], f[3]);
        break;
      case Op::log:
        log_derivs(reg[ins.a].value(), f);
        Jet3::compose(out, reg[ins.a], f[0], f[1], f[2], f[3]);
        break;
      case Op::sin:
        sin_derivs(reg[ins.a].value(), f);
        Jet3::compose(out, reg[ins.a], f[0], f[1], f[2], f[3]);
        break;
      case Op::cos:
        cos_derivs(reg[ins.a].value(), f);
        Jet3::compose(out, reg[ins.a], f[0], f[1], f[2], f[3]);
        break;
      case Op::sqrt:
        sqrt_derivs(reg[ins.a].value(), f);
        Jet3::compose(out, reg[ins.a], f[0], f[1], f[2], f[3]);
        break;
    }
  }
}

}  // namespace

Jet3 Expression::jet(const Vec& x, int order) const {
  if (x.size() != arity_) throw ContractViolation("expression '" + source_ + "' expects " + std::to_string(arity_) + " variables");
  if (order < 1 || order > 3) throw ContractViolation("jet order must be 1, 2 or 3");
  thread_local std::vector<Jet3> reg;
  run_tape(tape_, reg, nullptr, &x, arity_, order);
  return reg.back();
}

Jet3 Expression::jet_compose(const std::vector<Jet3>& args) const {
  if (static_cast<int>(args.size()) != arity_) throw ContractViolation("jet_compose: wrong argument count");
  thread_local std::vector<Jet3> reg;
  run_tape(tape_, reg, &args, nullptr, args[0].size(), args[0].order());
  return reg.back();
}

Jet3 jet_lift(const Expression& expr, const Vec& x, int order) { return expr.jet(x, order); }

// ---------------------------------------------------------------- finite-difference check

namespace {

using Q = __float128;

struct QuadFn {
  const Expression& e;
  std::vector<Q> base;
  std::vector<Q> work;
  Q operator()(const std::vector<std::pair<int, Q>>& shifts) {
    work = base;
    for (auto& [i, s] : shifts) work[i] += s;
    return e.value<Q>(work.data());
  }
};

double rel(double exact, Q approx) {
  const double a = static_cast<double>(approx);
  return std::abs(exact - a) / std::max(1.0, std::abs(exact));
}

}  // namespace

JetCheckReport jet_check(const Expression& expr, const Vec& x, double h) {
  if (h < 0.0 || !std::isfinite(h)) throw ContractViolation("jet_check step must be positive");
  if (h == 0.0) h = 1e-3 * std::max(1.0, x.norm());
  const int n = expr.arity();
  const Jet3 j = expr.jet(x, 3);
  QuadFn f{expr, {}, {}};
  for (int i = 0; i < n; ++i) f.base.push_back(static_cast<Q>(x(i)));

  auto d1 = [&](int i, Q s) { return (f({{i, s}}) - f({{i, -s}})) / (2 * s); };
  auto d2 = [&](int i, int k, Q s) {
    return (f({{i, s}, {k, s}}) - f({{i, s}, {k, -s}}) - f({{i, -s}, {k, s}}) + f({{i, -s}, {k, -s}})) / (4 * s * s);
  };
  auto d3 = [&](int i, int k, int l, Q s) {
    Q acc = 0;
    for (int m = 0; m < 8; ++m) {
      const int a = (m & 1) ? 1 : -1, b = (m & 2) ? 1 : -1, c = (m & 4) ? 1 : -1;
      acc += Q(a * b * c) * f({{i, a * s}, {k, b * s}, {l, c * s}});
    }
    return acc / (8 * s * s * s);
  };
  const Q hq = static_cast<Q>(h);
  auto richardson = [&](auto&& d) { return (4 * d(hq / 2) - d(hq)) / 3; };

  JetCheckReport r;
  for (int i = 0; i < n; ++i) {
    r.grad = std::max(r.grad, rel(j.grad(i), richardson([&](Q s) { return d1(i, s); })));
    for (int k = i; k < n; ++k) {
      r.hess = std::max(r.hess, rel(j.hess(i, k), richardson([&](Q s) { return d2(i, k, s); })));
      for (int l = k; l < n; ++l)
        r.third = std::max(r.third, rel(j.third(i, k, l), richardson([&](Q s) { return d3(i, k, l, s); })));
    }
  }
  return r;
}

}  // namespace tonelli
