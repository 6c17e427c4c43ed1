#include <conicert/problem.hpp>

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "parse_internal.hpp"

namespace conicert {

namespace {

using detail::TokKind;
using detail::Token;
using detail::TokenStream;

int expect_positive_integer(TokenStream& ts, const std::string& what) {
  const Token& tok = ts.peek();
  if (tok.kind != TokKind::Number || tok.text.find_first_of(".eE") != std::string::npos ||
      tok.num < 1)
    detail::fail_at(tok, "expected a positive integer " + what);
  ts.get();
  return static_cast<int>(tok.num);
}

void check_arity(const ExpressionAst& expr, int n, const Token& where) {
  if (expr.max_var > n) {
    std::ostringstream os;
    os << "expression references x" << expr.max_var << " but the problem declares " << n
       << (n == 1 ? " variable" : " variables");
    detail::fail_at(where, os.str());
  }
}

// Trace-inner-product weight of a packed PSD entry: diagonal entries count
// once, off-diagonal entries twice.
double packed_weight(BlockKind kind, int dim, int packed_index) {
  if (kind == BlockKind::Lorentz) return 1.0;
  int row = 0;
  while ((row + 1) * (row + 2) / 2 <= packed_index) ++row;
  const int col = packed_index - row * (row + 1) / 2;
  (void)dim;
  return row == col ? 1.0 : 2.0;
}

void check_block_shapes(const ProblemInstance& inst, const std::vector<BlockPoint>& w,
                        const char* who) {
  if (w.size() != inst.blocks.size()) {
    std::ostringstream os;
    os << who << ": expected " << inst.blocks.size() << " multiplier blocks, got " << w.size();
    throw std::invalid_argument(os.str());
  }
  for (size_t b = 0; b < w.size(); ++b) {
    const int expected = inst.blocks[b].kind == BlockKind::Lorentz
                             ? inst.blocks[b].dim
                             : inst.blocks[b].dim * (inst.blocks[b].dim + 1) / 2;
    if (w[b].kind != inst.blocks[b].kind || w[b].data.size() != expected) {
      std::ostringstream os;
      os << who << ": multiplier block " << b << " has wrong kind or size (expected "
         << expected << " packed entries, got " << w[b].data.size() << ")";
      throw std::invalid_argument(os.str());
    }
  }
}

}  // namespace

ConeSpec ProblemInstance::cone_spec() const {
  ConeSpec spec;
  for (const auto& blk : blocks) spec.blocks.push_back(ConeBlock{blk.kind, blk.dim});
  return spec;
}

ProblemInstance parse_problem(const std::string& text) {
  TokenStream ts;
  ts.toks = detail::lex(text);

  ProblemInstance inst;
  bool have_objective = false;

  if (!ts.at_ident("vars"))
    detail::fail_at(ts.peek(), "expected 'vars <count>' as the first section");
  ts.get();
  inst.n = expect_positive_integer(ts, "for the variable count");

  while (!ts.at_end()) {
    const Token section = ts.peek();
    if (ts.at_ident("minimize")) {
      ts.get();
      if (have_objective) detail::fail_at(section, "duplicate 'minimize' section");
      inst.objective.root = detail::parse_expression_into(inst.objective, ts);
      check_arity(inst.objective, inst.n, section);
      have_objective = true;
      continue;
    }
    if (ts.at_ident("cone")) {
      ts.get();
      ConeBlockExprs blk;
      if (ts.at_ident("lorentz")) {
        blk.kind = BlockKind::Lorentz;
      } else if (ts.at_ident("psd")) {
        blk.kind = BlockKind::Psd;
      } else {
        detail::fail_at(ts.peek(), "expected 'lorentz' or 'psd' after 'cone'");
      }
      ts.get();
      blk.dim = expect_positive_integer(ts, "for the block dimension");
      if (!ts.at_punct(':')) detail::fail_at(ts.peek(), "expected ':' after the block header");
      ts.get();
      const int expected = blk.kind == BlockKind::Lorentz
                               ? blk.dim
                               : blk.dim * (blk.dim + 1) / 2;
      while (true) {
        ExpressionAst entry;
        entry.root = detail::parse_expression_into(entry, ts);
        check_arity(entry, inst.n, section);
        blk.entries.push_back(std::move(entry));
        if (!ts.at_punct(',')) break;
        ts.get();
      }
      if (static_cast<int>(blk.entries.size()) != expected) {
        std::ostringstream os;
        os << "cone " << (blk.kind == BlockKind::Lorentz ? "lorentz" : "psd") << " " << blk.dim
           << " needs " << expected
           << (blk.kind == BlockKind::Psd ? " lower-triangle entries" : " entries") << ", got "
           << blk.entries.size();
        detail::fail_at(section, os.str());
      }
      inst.blocks.push_back(std::move(blk));
      continue;
    }
    if (ts.at_ident("eq")) {
      ts.get();
      if (!ts.at_punct(':')) detail::fail_at(ts.peek(), "expected ':' after 'eq'");
      ts.get();
      ExpressionAst eq;
      eq.root = detail::parse_expression_into(eq, ts);
      check_arity(eq, inst.n, section);
      inst.equalities.push_back(std::move(eq));
      continue;
    }
    detail::fail_at(section,
                    "expected a section ('minimize', 'cone', or 'eq'), got '" + section.text +
                        "'");
  }

  if (!have_objective)
    detail::fail_at(ts.peek(), "the problem has no 'minimize' section");
  return inst;
}

std::string serialize_problem(const ProblemInstance& inst) {
  std::ostringstream os;
  os << "vars " << inst.n << "\n";
  os << "minimize " << serialize_expression(inst.objective) << "\n";
  for (const auto& blk : inst.blocks) {
    os << "cone " << (blk.kind == BlockKind::Lorentz ? "lorentz" : "psd") << " " << blk.dim
       << ":";
    for (size_t e = 0; e < blk.entries.size(); ++e)
      os << (e == 0 ? " " : ", ") << serialize_expression(blk.entries[e]);
    os << "\n";
  }
  for (const auto& eq : inst.equalities)
    os << "eq: " << serialize_expression(eq) << "\n";
  return os.str();
}

std::vector<BlockPoint> eval_g(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  std::vector<BlockPoint> out;
  out.reserve(inst.blocks.size());
  for (const auto& blk : inst.blocks) {
    BlockPoint pt;
    pt.kind = blk.kind;
    pt.dim = blk.dim;
    pt.data.resize(static_cast<int>(blk.entries.size()));
    for (size_t e = 0; e < blk.entries.size(); ++e)
      pt.data(static_cast<int>(e)) = eval_value(blk.entries[e], x);
    out.push_back(std::move(pt));
  }
  return out;
}

Eigen::VectorXd eval_h(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  Eigen::VectorXd h(inst.p());
  for (int j = 0; j < inst.p(); ++j) h(j) = eval_value(inst.equalities[j], x);
  return h;
}

std::vector<BlockPoint> eval_Dg_apply(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                      const Eigen::VectorXd& d) {
  if (d.size() != x.size())
    throw std::invalid_argument("eval_Dg_apply: direction length differs from point length");
  std::vector<BlockPoint> out;
  out.reserve(inst.blocks.size());
  Eigen::VectorXd grad;
  for (const auto& blk : inst.blocks) {
    BlockPoint pt;
    pt.kind = blk.kind;
    pt.dim = blk.dim;
    pt.data.resize(static_cast<int>(blk.entries.size()));
    for (size_t e = 0; e < blk.entries.size(); ++e) {
      eval_value_grad(blk.entries[e], x, grad);
      pt.data(static_cast<int>(e)) = grad.dot(d);
    }
    out.push_back(std::move(pt));
  }
  return out;
}

Eigen::VectorXd eval_Dg_adjoint(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& w) {
  check_block_shapes(inst, w, "eval_Dg_adjoint");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd grad;
  for (size_t b = 0; b < inst.blocks.size(); ++b) {
    const auto& blk = inst.blocks[b];
    for (size_t e = 0; e < blk.entries.size(); ++e) {
      const double weight =
          packed_weight(blk.kind, blk.dim, static_cast<int>(e)) * w[b].data(static_cast<int>(e));
      if (weight == 0.0) continue;
      eval_value_grad(blk.entries[e], x, grad);
      out += weight * grad;
    }
  }
  return out;
}

Eigen::MatrixXd eval_D2g_adjoint(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                 const std::vector<BlockPoint>& w) {
  check_block_shapes(inst, w, "eval_D2g_adjoint");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.size(), x.size());
  for (size_t b = 0; b < inst.blocks.size(); ++b) {
    const auto& blk = inst.blocks[b];
    for (size_t e = 0; e < blk.entries.size(); ++e) {
      const double weight =
          packed_weight(blk.kind, blk.dim, static_cast<int>(e)) * w[b].data(static_cast<int>(e));
      if (weight == 0.0) continue;
      out += weight * eval_jet(blk.entries[e], x).hessian;
    }
  }
  return out;
}

Eigen::VectorXd lagrangian_grad(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu) {
  check_block_shapes(inst, omega, "lagrangian_grad");
  if (mu.size() != inst.p())
    throw std::invalid_argument("lagrangian_grad: equality multiplier length differs from p");
  Eigen::VectorXd grad;
  eval_value_grad(inst.objective, x, grad);
  grad -= eval_Dg_adjoint(inst, x, omega);
  Eigen::VectorXd hg;
  for (int j = 0; j < inst.p(); ++j) {
    eval_value_grad(inst.equalities[j], x, hg);
    grad += mu(j) * hg;
  }
  return grad;
}

Eigen::MatrixXd lagrangian_hess(const ProblemInstance& inst, const Eigen::VectorXd& x,
                                const std::vector<BlockPoint>& omega, const Eigen::VectorXd& mu) {
  check_block_shapes(inst, omega, "lagrangian_hess");
  if (mu.size() != inst.p())
    throw std::invalid_argument("lagrangian_hess: equality multiplier length differs from p");
  Eigen::MatrixXd H = eval_jet(inst.objective, x).hessian;
  H -= eval_D2g_adjoint(inst, x, omega);
  for (int j = 0; j < inst.p(); ++j)
    H += mu(j) * eval_jet(inst.equalities[j], x).hessian;
  return H;
}

double infeasibility_phi(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  double phi = 0.0;
  const Eigen::VectorXd h = eval_h(inst, x);
  phi += 0.5 * h.squaredNorm();
  for (const auto& blk : eval_g(inst, x)) {
    const BlockPoint proj = project_block(blk.negated());
    const double nrm = proj.norm();
    phi += 0.5 * nrm * nrm;
  }
  return phi;
}

Eigen::VectorXd infeasibility_phi_grad(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  const Eigen::VectorXd h = eval_h(inst, x);
  Eigen::VectorXd grad;
  for (int j = 0; j < inst.p(); ++j) {
    eval_value_grad(inst.equalities[j], x, grad);
    out += h(j) * grad;
  }
  std::vector<BlockPoint> proj;
  proj.reserve(inst.blocks.size());
  for (const auto& blk : eval_g(inst, x)) proj.push_back(project_block(blk.negated()));
  out -= eval_Dg_adjoint(inst, x, proj);
  return out;
}

FirstOrderEval eval_first_order(const ProblemInstance& inst, const Eigen::VectorXd& x) {
  FirstOrderEval ev;
  ev.f = eval_value_grad(inst.objective, x, ev.grad_f);
  ev.g.reserve(inst.blocks.size());
  ev.Dg.reserve(inst.blocks.size());
  Eigen::VectorXd grad;
  for (const auto& blk : inst.blocks) {
    BlockPoint pt;
    pt.kind = blk.kind;
    pt.dim = blk.dim;
    const int entries = static_cast<int>(blk.entries.size());
    pt.data.resize(entries);
    Eigen::MatrixXd J(entries, x.size());
    for (int e = 0; e < entries; ++e) {
      pt.data(e) = eval_value_grad(blk.entries[e], x, grad);
      J.row(e) = grad.transpose();
    }
    ev.g.push_back(std::move(pt));
    ev.Dg.push_back(std::move(J));
  }
  ev.h.resize(inst.p());
  ev.Dh.resize(inst.p(), x.size());
  for (int j = 0; j < inst.p(); ++j) {
    ev.h(j) = eval_value_grad(inst.equalities[j], x, grad);
    ev.Dh.row(j) = grad.transpose();
  }
  return ev;
}

}  // namespace conicert
