#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Dense>

#include <conicert/certificates.hpp>
#include <conicert/corpus.hpp>
#include <conicert/penalty.hpp>
#include <conicert/problem.hpp>
#include <conicert/report.hpp>

namespace {

using namespace conicert;

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string vec_text(const Eigen::VectorXd& v) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ", ";
    out += short_num(v(i));
  }
  return out + "]";
}

Eigen::VectorXd to_vec(const std::vector<double>& v) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out(static_cast<Eigen::Index>(i)) = v[i];
  return out;
}

std::string join_nums(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ",";
    out += num(v[i]);
  }
  return out;
}

int packed_size(const ConeBlockExprs& block) {
  return block.kind == BlockKind::Lorentz ? block.dim : block.dim * (block.dim + 1) / 2;
}

// The flat --omega list mirrors the problem grammar: Lorentz blocks list their
// coordinates, PSD blocks their lower triangle row-major.
std::vector<BlockPoint> unpack_omega(const ProblemInstance& inst,
                                     const std::vector<double>& flat) {
  int expected = 0;
  for (const ConeBlockExprs& block : inst.blocks) expected += packed_size(block);
  if (static_cast<int>(flat.size()) != expected) {
    throw std::invalid_argument("--omega has " + std::to_string(flat.size()) +
                                " entries, the problem's blocks need " +
                                std::to_string(expected));
  }
  std::vector<BlockPoint> out;
  std::size_t pos = 0;
  for (const ConeBlockExprs& block : inst.blocks) {
    if (block.kind == BlockKind::Lorentz) {
      Eigen::VectorXd v(block.dim);
      for (int i = 0; i < block.dim; ++i) v(i) = flat[pos++];
      out.push_back(BlockPoint::lorentz(std::move(v)));
    } else {
      Eigen::MatrixXd M(block.dim, block.dim);
      for (int i = 0; i < block.dim; ++i) {
        for (int j = 0; j <= i; ++j) {
          M(i, j) = flat[pos++];
          M(j, i) = M(i, j);
        }
      }
      out.push_back(BlockPoint::psd_from_matrix(M));
    }
  }
  return out;
}

void write_report(const std::string& path, const ReportDocument& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write report to " + path);
  out << report_to_json(doc);
  if (!out) throw std::runtime_error("failed while writing report to " + path);
}

const char* yes_no(bool b) { return b ? "yes" : "no"; }

void print_certificate(const CertificateReport& c) {
  std::printf("feasible:            %s (max violation %s)\n", yes_no(c.feasible),
              short_num(c.feasibility).c_str());
  std::printf("KKT residual:        %s (%s)\n", short_num(c.kkt.max()).c_str(),
              c.kkt_ok ? "ok" : "exceeds tolerance");
  if (!c.checks_run) {
    std::printf("checks:              skipped (point is infeasible)\n");
    return;
  }
  std::printf("strict compl.:       %s\n", yes_no(c.strict_complementarity.holds));
  if (c.nondegeneracy.family_size == 0) {
    std::printf("nondegeneracy:       %s (empty active family)\n", yes_no(c.nondegeneracy.holds));
  } else {
    std::printf("nondegeneracy:       %s (sigma_min %s, family %d)\n",
                yes_no(c.nondegeneracy.holds), short_num(c.nondegeneracy.sigma_min).c_str(),
                c.nondegeneracy.family_size);
  }
  std::printf("constant rank:       %s\n", c.wcr.verdict.c_str());
  std::printf("Robinson:            %s (margin %s)\n", c.robinson.verdict.c_str(),
              short_num(c.robinson.margin).c_str());
  if (c.wsoc.vacuous) {
    std::printf("second order (weak): holds vacuously (critical subspace is {0})\n");
  } else {
    std::printf("second order (weak): %s (min reduced eigenvalue %s, subspace dim %d)\n",
                yes_no(c.wsoc.holds), short_num(c.wsoc.min_eigenvalue).c_str(), c.wsoc.subspace_dim);
  }
}

int exit_for(SolveStatus status) {
  switch (status) {
    case SolveStatus::ConvergedKkt:
      return 0;
    case SolveStatus::InfeasibleStationary:
      return 2;
    case SolveStatus::AkktUnboundedMultipliers:
    case SolveStatus::BudgetExhausted:
      return 3;
  }
  return 1;
}

struct SolveArgs {
  std::string file;
  double rho0 = 1.0;
  double rho_mult = 10.0;
  double tol = 1e-8;
  int max_outer = 25;
  std::vector<double> x0;
  std::string report_path;
};

int cmd_solve(const SolveArgs& args) {
  const ProblemInstance inst = parse_problem(read_file(args.file));

  SolverConfig config;
  config.rho0 = args.rho0;
  config.rho_mult = args.rho_mult;
  config.outer_tol = args.tol;
  config.max_outer = args.max_outer;

  Eigen::VectorXd x0 = Eigen::VectorXd::Zero(inst.n);
  if (!args.x0.empty()) {
    if (static_cast<int>(args.x0.size()) != inst.n) {
      throw std::invalid_argument("--x0 has " + std::to_string(args.x0.size()) +
                                  " entries, the problem has " + std::to_string(inst.n) +
                                  " variables");
    }
    x0 = to_vec(args.x0);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const SolveResult res = solve(inst, x0, config);
  const CertificateReport cert =
      certify(inst, res.x, res.omega, res.mu, Tolerances{}, MultiplierSource::Solver);
  const auto t1 = std::chrono::steady_clock::now();

  std::printf("status:              %s\n", to_string(res.status).c_str());
  if (!res.trace.empty()) {
    std::printf("outer iterations:    %zu (final rho %s)\n", res.trace.size(),
                short_num(res.trace.back().rho).c_str());
  }
  std::printf("x:                   %s\n", vec_text(res.x).c_str());
  std::printf("objective:           %s\n", short_num(eval_value(inst.objective, res.x)).c_str());
  print_certificate(cert);

  if (!args.report_path.empty()) {
    ReportDocument doc;
    doc.command = "solve";
    doc.config.emplace_back("file", args.file);
    doc.config.emplace_back("max_outer", std::to_string(args.max_outer));
    doc.config.emplace_back("rho0", num(args.rho0));
    doc.config.emplace_back("rho_mult", num(args.rho_mult));
    doc.config.emplace_back("tol", num(args.tol));
    if (!args.x0.empty()) doc.config.emplace_back("x0", join_nums(args.x0));
    ProblemReport prob;
    prob.name = std::filesystem::path(args.file).stem().string();
    prob.status = to_string(res.status);
    prob.x = res.x;
    prob.omega = res.omega;
    prob.mu = res.mu;
    prob.trace = res.trace;
    prob.certificate = cert;
    prob.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    doc.problems.push_back(std::move(prob));
    write_report(args.report_path, doc);
    std::printf("report:              %s\n", args.report_path.c_str());
  }
  return exit_for(res.status);
}

struct CertifyArgs {
  std::string file;
  std::vector<double> x;
  std::vector<double> omega;
  std::vector<double> mu;
  bool omega_given = false;
  bool mu_given = false;
  std::string report_path;
};

int cmd_certify(const CertifyArgs& args) {
  const ProblemInstance inst = parse_problem(read_file(args.file));
  if (static_cast<int>(args.x.size()) != inst.n) {
    throw std::invalid_argument("--x has " + std::to_string(args.x.size()) +
                                " entries, the problem has " + std::to_string(inst.n) +
                                " variables");
  }
  const Eigen::VectorXd x = to_vec(args.x);

  std::vector<BlockPoint> omega;
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(inst.p());
  if (args.omega_given) omega = unpack_omega(inst, args.omega);
  if (args.mu_given) {
    if (static_cast<int>(args.mu.size()) != inst.p()) {
      throw std::invalid_argument("--mu has " + std::to_string(args.mu.size()) +
                                  " entries, the problem has " + std::to_string(inst.p()) +
                                  " equalities");
    }
    mu = to_vec(args.mu);
  }

  const bool need_omega = !args.omega_given && !inst.blocks.empty();
  const bool need_mu = !args.mu_given && inst.p() > 0;
  // Missing multipliers come from one penalty outer step at a stiff weight:
  // minimize F(.; rho) from the candidate point, then read the estimates off
  // the inner solution. They are marked solver-produced only when no part of
  // the triple was user-supplied.
  const bool any_user = (args.omega_given && !inst.blocks.empty()) || (args.mu_given && inst.p() > 0);
  MultiplierSource source = MultiplierSource::User;
  if (need_omega || need_mu) {
    const double rho = 1e8;
    const SolverConfig config;
    const InnerResult inner = inner_minimize(inst, rho, x, config.inner_eps0 / rho, config);
    auto [omega_est, mu_est] = multiplier_estimates(inst, inner.x, rho);
    if (need_omega) omega = std::move(omega_est);
    if (need_mu) mu = std::move(mu_est);
    if (!any_user) source = MultiplierSource::Solver;
    std::printf("estimated %s%s%s from one penalty step (rho %s)\n",
                need_omega ? "omega" : "", need_omega && need_mu ? " and " : "",
                need_mu ? "mu" : "", short_num(rho).c_str());
  }

  const CertificateReport cert = certify(inst, x, omega, mu, Tolerances{}, source);

  std::printf("x:                   %s\n", vec_text(x).c_str());
  print_certificate(cert);
  const bool ok = cert.kkt_ok && cert.wsoc.holds;
  std::printf("verdict:             %s\n",
              ok ? "stationary with weak second-order support" : "not certified");

  if (!args.report_path.empty()) {
    ReportDocument doc;
    doc.command = "certify";
    doc.config.emplace_back("file", args.file);
    doc.config.emplace_back("multiplier_source", to_string(source));
    doc.config.emplace_back("x", join_nums(args.x));
    if (args.omega_given) doc.config.emplace_back("omega", join_nums(args.omega));
    if (args.mu_given) doc.config.emplace_back("mu", join_nums(args.mu));
    ProblemReport prob;
    prob.name = std::filesystem::path(args.file).stem().string();
    prob.status = "certify";
    prob.x = x;
    prob.omega = omega;
    prob.mu = mu;
    prob.certificate = cert;
    doc.problems.push_back(std::move(prob));
    write_report(args.report_path, doc);
    std::printf("report:              %s\n", args.report_path.c_str());
  }
  return ok ? 0 : 3;
}

struct CorpusArgs {
  std::string dir;
  int jobs = 1;
  std::uint64_t seed = 42;
  std::string report_path;
};

int cmd_corpus(const CorpusArgs& args) {
  const CorpusOutcome out = run_corpus(args.dir, args.jobs, args.seed);

  std::printf("%-14s %-28s %-4s %-4s %-7s %-7s %-16s %-9s\n", "problem", "status", "kkt",
              "wsoc", "nondeg", "strict", "wcr", "robinson");
  for (const ProblemReport& p : out.document.problems) {
    const CertificateReport& c = p.certificate;
    std::printf("%-14s %-28s %-4s %-4s %-7s %-7s %-16s %-9s\n", p.name.c_str(),
                p.status.c_str(), yes_no(c.kkt_ok), yes_no(c.wsoc.holds),
                yes_no(c.nondegeneracy.holds), yes_no(c.strict_complementarity.holds),
                c.wcr.verdict.c_str(), c.robinson.verdict.c_str());
  }
  for (const std::string& m : out.mismatches) std::printf("mismatch — %s\n", m.c_str());
  std::printf("%zu problems, %zu expectation mismatches\n", out.document.problems.size(),
              out.mismatches.size());

  if (!args.report_path.empty()) {
    write_report(args.report_path, out.document);
    std::printf("report: %s\n", args.report_path.c_str());
  }
  return out.all_met() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"penalty-path solver and stationarity certification for small conic programs"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  CLI::App* solve_cmd = app.add_subcommand("solve", "run the penalty solver on a problem file");
  solve_cmd->add_option("file", solve_args.file, "problem file")->required();
  solve_cmd->add_option("--rho0", solve_args.rho0, "initial penalty weight");
  solve_cmd->add_option("--rho-mult", solve_args.rho_mult, "penalty growth factor");
  solve_cmd->add_option("--tol", solve_args.tol, "outer stationarity tolerance");
  solve_cmd->add_option("--max-outer", solve_args.max_outer, "outer iteration budget");
  solve_cmd->add_option("--x0", solve_args.x0, "start point, comma separated")->delimiter(',');
  solve_cmd->add_option("--report", solve_args.report_path, "write the JSON report here");

  CertifyArgs certify_args;
  CLI::App* certify_cmd =
      app.add_subcommand("certify", "certify a candidate point (and optional multipliers)");
  certify_cmd->add_option("file", certify_args.file, "problem file")->required();
  certify_cmd->add_option("--x", certify_args.x, "candidate point, comma separated")
      ->required()
      ->delimiter(',');
  certify_cmd
      ->add_option("--omega", certify_args.omega,
                   "cone multipliers, packed per block (PSD lower triangle row-major)")
      ->delimiter(',');
  certify_cmd->add_option("--mu", certify_args.mu, "equality multipliers")->delimiter(',');
  certify_cmd->add_option("--report", certify_args.report_path, "write the JSON report here");

  CorpusArgs corpus_args;
  CLI::App* corpus_cmd =
      app.add_subcommand("corpus", "solve and certify every problem in a corpus directory");
  corpus_cmd->add_option("dir", corpus_args.dir, "corpus directory")->required();
  corpus_cmd->add_option("--jobs", corpus_args.jobs, "worker threads");
  corpus_cmd->add_option("--seed", corpus_args.seed, "base sampling seed");
  corpus_cmd->add_option("--report", corpus_args.report_path, "write the JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }

  try {
    if (solve_cmd->parsed()) return cmd_solve(solve_args);
    if (certify_cmd->parsed()) {
      certify_args.omega_given = certify_cmd->count("--omega") > 0;
      certify_args.mu_given = certify_cmd->count("--mu") > 0;
      return cmd_certify(certify_args);
    }
    return cmd_corpus(corpus_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
