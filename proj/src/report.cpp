#include <conicert/report.hpp>

#include <cmath>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace conicert {

namespace {

using nlohmann::json;

// JSON numbers cannot carry non-finite values; encode them as marker strings.
json enc_d(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double dec_d(const json& j) {
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::runtime_error("expected a number or inf/nan marker, got \"" + s + "\"");
  }
  return j.get<double>();
}

json enc_vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(enc_d(v(i)));
  return a;
}

Eigen::VectorXd dec_vec(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = dec_d(j[i]);
  return v;
}

json enc_mat(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) rows.push_back(enc_vec(M.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd dec_mat(const json& j) {
  const Eigen::Index r = static_cast<Eigen::Index>(j.size());
  if (r == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index c = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index i = 0; i < r; ++i) M.row(i) = dec_vec(j[i]).transpose();
  return M;
}

json enc_ints(const std::vector<int>& v) { return json(v); }

std::vector<int> dec_ints(const json& j) { return j.get<std::vector<int>>(); }

const char* kind_name(BlockKind k) { return k == BlockKind::Lorentz ? "lorentz" : "psd"; }

BlockKind kind_from(const std::string& s) {
  if (s == "lorentz") return BlockKind::Lorentz;
  if (s == "psd") return BlockKind::Psd;
  throw std::runtime_error("unknown block kind \"" + s + "\"");
}

json enc_block_point(const BlockPoint& b) {
  return json{{"kind", kind_name(b.kind)}, {"dim", b.dim}, {"data", enc_vec(b.data)}};
}

BlockPoint dec_block_point(const json& j) {
  BlockPoint b;
  b.kind = kind_from(j.at("kind").get<std::string>());
  b.dim = j.at("dim").get<int>();
  b.data = dec_vec(j.at("data"));
  return b;
}

json enc_blocks(const std::vector<BlockPoint>& blocks) {
  json a = json::array();
  for (const BlockPoint& b : blocks) a.push_back(enc_block_point(b));
  return a;
}

std::vector<BlockPoint> dec_blocks(const json& j) {
  std::vector<BlockPoint> out;
  for (const json& b : j) out.push_back(dec_block_point(b));
  return out;
}

json enc_kkt(const KktResidual& r) {
  return json{{"stationarity", enc_d(r.stationarity)},
              {"equality", enc_d(r.equality)},
              {"primal_cone", enc_d(r.primal_cone)},
              {"dual_cone", enc_d(r.dual_cone)},
              {"complementarity", enc_d(r.complementarity)}};
}

KktResidual dec_kkt(const json& j) {
  KktResidual r;
  r.stationarity = dec_d(j.at("stationarity"));
  r.equality = dec_d(j.at("equality"));
  r.primal_cone = dec_d(j.at("primal_cone"));
  r.dual_cone = dec_d(j.at("dual_cone"));
  r.complementarity = dec_d(j.at("complementarity"));
  return r;
}

LorentzTag tag_from(const std::string& s) {
  if (s == "I0") return LorentzTag::I0;
  if (s == "IB") return LorentzTag::IB;
  if (s == "II") return LorentzTag::II;
  throw std::runtime_error("unknown index tag \"" + s + "\"");
}

json enc_partition(const IndexPartition& p) {
  json blocks = json::array();
  for (const BlockIndexInfo& info : p.blocks) {
    json b{{"kind", kind_name(info.kind)}};
    if (info.kind == BlockKind::Lorentz) {
      b["lorentz"] = json{{"tag", to_string(info.lorentz.tag)},
                          {"margin", enc_d(info.lorentz.margin)},
                          {"in_ibb", info.lorentz.in_ibb},
                          {"omega_margin", enc_d(info.lorentz.omega_margin)}};
    } else {
      b["psd"] = json{{"lambda", enc_vec(info.psd.lambda)},
                      {"U", enc_mat(info.psd.U)},
                      {"alpha_bar", enc_ints(info.psd.alpha_bar)},
                      {"beta_bar", enc_ints(info.psd.beta_bar)},
                      {"nu", enc_vec(info.psd.nu)},
                      {"kappa_bar", enc_ints(info.psd.kappa_bar)},
                      {"gamma_bar", enc_ints(info.psd.gamma_bar)}};
    }
    blocks.push_back(std::move(b));
  }
  return json{{"omega_given", p.omega_given}, {"tol", enc_d(p.tol)}, {"blocks", blocks}};
}

IndexPartition dec_partition(const json& j) {
  IndexPartition p;
  p.omega_given = j.at("omega_given").get<bool>();
  p.tol = dec_d(j.at("tol"));
  for (const json& b : j.at("blocks")) {
    BlockIndexInfo info;
    info.kind = kind_from(b.at("kind").get<std::string>());
    if (info.kind == BlockKind::Lorentz) {
      const json& l = b.at("lorentz");
      info.lorentz.tag = tag_from(l.at("tag").get<std::string>());
      info.lorentz.margin = dec_d(l.at("margin"));
      info.lorentz.in_ibb = l.at("in_ibb").get<bool>();
      info.lorentz.omega_margin = dec_d(l.at("omega_margin"));
    } else {
      const json& s = b.at("psd");
      info.psd.lambda = dec_vec(s.at("lambda"));
      info.psd.U = dec_mat(s.at("U"));
      info.psd.alpha_bar = dec_ints(s.at("alpha_bar"));
      info.psd.beta_bar = dec_ints(s.at("beta_bar"));
      info.psd.nu = dec_vec(s.at("nu"));
      info.psd.kappa_bar = dec_ints(s.at("kappa_bar"));
      info.psd.gamma_bar = dec_ints(s.at("gamma_bar"));
    }
    p.blocks.push_back(std::move(info));
  }
  return p;
}

json enc_tolerances(const Tolerances& t) {
  return json{{"active", enc_d(t.active)},
              {"rank", enc_d(t.rank)},
              {"feasibility", enc_d(t.feasibility)},
              {"kkt", enc_d(t.kkt)},
              {"wsoc", enc_d(t.wsoc)},
              {"robinson", enc_d(t.robinson)},
              {"wcr_radius", enc_d(t.wcr_radius)},
              {"wcr_samples", t.wcr_samples},
              {"wcr_eigengap", enc_d(t.wcr_eigengap)},
              {"seed", t.seed}};
}

Tolerances dec_tolerances(const json& j) {
  Tolerances t;
  t.active = dec_d(j.at("active"));
  t.rank = dec_d(j.at("rank"));
  t.feasibility = dec_d(j.at("feasibility"));
  t.kkt = dec_d(j.at("kkt"));
  t.wsoc = dec_d(j.at("wsoc"));
  t.robinson = dec_d(j.at("robinson"));
  t.wcr_radius = dec_d(j.at("wcr_radius"));
  t.wcr_samples = j.at("wcr_samples").get<int>();
  t.wcr_eigengap = dec_d(j.at("wcr_eigengap"));
  t.seed = j.at("seed").get<std::uint64_t>();
  return t;
}

json enc_certificate(const CertificateReport& c) {
  return json{
      {"feasible", c.feasible},
      {"feasibility", enc_d(c.feasibility)},
      {"phi", enc_d(c.phi)},
      {"checks_run", c.checks_run},
      {"kkt", enc_kkt(c.kkt)},
      {"kkt_ok", c.kkt_ok},
      {"partition", enc_partition(c.partition)},
      {"strict_complementarity", json{{"holds", c.strict_complementarity.holds},
                                      {"complementarity",
                                       enc_d(c.strict_complementarity.complementarity)},
                                      {"evidence", c.strict_complementarity.evidence}}},
      {"nondegeneracy", json{{"holds", c.nondegeneracy.holds},
                             {"sigma_min", enc_d(c.nondegeneracy.sigma_min)},
                             {"sigma_max", enc_d(c.nondegeneracy.sigma_max)},
                             {"family_size", c.nondegeneracy.family_size},
                             {"count_ok", c.nondegeneracy.count_ok}}},
      {"wcr", json{{"verdict", c.wcr.verdict},
                   {"ranks", enc_ints(c.wcr.ranks)},
                   {"radius", enc_d(c.wcr.radius)},
                   {"samples", c.wcr.samples}}},
      {"robinson", json{{"verdict", c.robinson.verdict},
                        {"margin", enc_d(c.robinson.margin)},
                        {"row_rank_ok", c.robinson.row_rank_ok}}},
      {"sigma", enc_mat(c.sigma)},
      {"wsoc", json{{"holds", c.wsoc.holds},
                    {"min_eigenvalue", enc_d(c.wsoc.min_eigenvalue)},
                    {"vacuous", c.wsoc.vacuous},
                    {"subspace_dim", c.wsoc.subspace_dim},
                    {"kkt_residual", enc_d(c.wsoc.kkt_residual)},
                    {"kkt_warning", c.wsoc.kkt_warning}}},
      {"tolerances", enc_tolerances(c.tolerances)},
      {"multiplier_source", to_string(c.multiplier_source)}};
}

CertificateReport dec_certificate(const json& j) {
  CertificateReport c;
  c.feasible = j.at("feasible").get<bool>();
  c.feasibility = dec_d(j.at("feasibility"));
  c.phi = dec_d(j.at("phi"));
  c.checks_run = j.at("checks_run").get<bool>();
  c.kkt = dec_kkt(j.at("kkt"));
  c.kkt_ok = j.at("kkt_ok").get<bool>();
  c.partition = dec_partition(j.at("partition"));
  {
    const json& s = j.at("strict_complementarity");
    c.strict_complementarity.holds = s.at("holds").get<bool>();
    c.strict_complementarity.complementarity = dec_d(s.at("complementarity"));
    c.strict_complementarity.evidence = s.at("evidence").get<std::vector<std::string>>();
  }
  {
    const json& s = j.at("nondegeneracy");
    c.nondegeneracy.holds = s.at("holds").get<bool>();
    c.nondegeneracy.sigma_min = dec_d(s.at("sigma_min"));
    c.nondegeneracy.sigma_max = dec_d(s.at("sigma_max"));
    c.nondegeneracy.family_size = s.at("family_size").get<int>();
    c.nondegeneracy.count_ok = s.at("count_ok").get<bool>();
  }
  {
    const json& s = j.at("wcr");
    c.wcr.verdict = s.at("verdict").get<std::string>();
    c.wcr.ranks = dec_ints(s.at("ranks"));
    c.wcr.radius = dec_d(s.at("radius"));
    c.wcr.samples = s.at("samples").get<int>();
  }
  {
    const json& s = j.at("robinson");
    c.robinson.verdict = s.at("verdict").get<std::string>();
    c.robinson.margin = dec_d(s.at("margin"));
    c.robinson.row_rank_ok = s.at("row_rank_ok").get<bool>();
  }
  c.sigma = dec_mat(j.at("sigma"));
  {
    const json& s = j.at("wsoc");
    c.wsoc.holds = s.at("holds").get<bool>();
    c.wsoc.min_eigenvalue = dec_d(s.at("min_eigenvalue"));
    c.wsoc.vacuous = s.at("vacuous").get<bool>();
    c.wsoc.subspace_dim = s.at("subspace_dim").get<int>();
    c.wsoc.kkt_residual = dec_d(s.at("kkt_residual"));
    c.wsoc.kkt_warning = s.at("kkt_warning").get<bool>();
  }
  c.tolerances = dec_tolerances(j.at("tolerances"));
  const std::string src = j.at("multiplier_source").get<std::string>();
  if (src == "solver") {
    c.multiplier_source = MultiplierSource::Solver;
  } else if (src == "user") {
    c.multiplier_source = MultiplierSource::User;
  } else {
    throw std::runtime_error("unknown multiplier source \"" + src + "\"");
  }
  return c;
}

json enc_trace(const IterateTrace& trace) {
  json rows = json::array();
  for (const IterateRow& r : trace) {
    json diag_blocks = json::array();
    for (const BlockDiagnostic& b : r.diagnostics.blocks) {
      diag_blocks.push_back(json{{"complementarity", enc_d(b.complementarity)},
                                 {"detail", enc_d(b.detail)},
                                 {"misalignment", enc_d(b.misalignment)}});
    }
    rows.push_back(json{{"k", r.k},
                        {"rho", enc_d(r.rho)},
                        {"x", enc_vec(r.x)},
                        {"omega", enc_blocks(r.omega)},
                        {"mu", enc_vec(r.mu)},
                        {"stationarity", enc_d(r.stationarity)},
                        {"phi", enc_d(r.phi)},
                        {"diagnostics", json{{"stationarity", enc_d(r.diagnostics.stationarity)},
                                             {"blocks", diag_blocks}}},
                        {"inner_iters", r.inner_iters},
                        {"inner_incomplete", r.inner_incomplete}});
  }
  return rows;
}

IterateTrace dec_trace(const json& j) {
  IterateTrace trace;
  for (const json& rj : j) {
    IterateRow r;
    r.k = rj.at("k").get<int>();
    r.rho = dec_d(rj.at("rho"));
    r.x = dec_vec(rj.at("x"));
    r.omega = dec_blocks(rj.at("omega"));
    r.mu = dec_vec(rj.at("mu"));
    r.stationarity = dec_d(rj.at("stationarity"));
    r.phi = dec_d(rj.at("phi"));
    const json& dj = rj.at("diagnostics");
    r.diagnostics.stationarity = dec_d(dj.at("stationarity"));
    for (const json& bj : dj.at("blocks")) {
      BlockDiagnostic b;
      b.complementarity = dec_d(bj.at("complementarity"));
      b.detail = dec_d(bj.at("detail"));
      b.misalignment = dec_d(bj.at("misalignment"));
      r.diagnostics.blocks.push_back(b);
    }
    r.inner_iters = rj.at("inner_iters").get<int>();
    r.inner_incomplete = rj.at("inner_incomplete").get<bool>();
    trace.push_back(std::move(r));
  }
  return trace;
}

json enc_problem(const ProblemReport& p) {
  return json{{"name", p.name},
              {"status", p.status},
              {"x", enc_vec(p.x)},
              {"omega", enc_blocks(p.omega)},
              {"mu", enc_vec(p.mu)},
              {"trace", enc_trace(p.trace)},
              {"certificate", enc_certificate(p.certificate)},
              {"mismatches", p.mismatches},
              {"wall_time_ms", enc_d(p.wall_time_ms)}};
}

ProblemReport dec_problem(const json& j) {
  ProblemReport p;
  p.name = j.at("name").get<std::string>();
  p.status = j.at("status").get<std::string>();
  p.x = dec_vec(j.at("x"));
  p.omega = dec_blocks(j.at("omega"));
  p.mu = dec_vec(j.at("mu"));
  p.trace = dec_trace(j.at("trace"));
  p.certificate = dec_certificate(j.at("certificate"));
  p.mismatches = j.at("mismatches").get<std::vector<std::string>>();
  p.wall_time_ms = dec_d(j.at("wall_time_ms"));
  return p;
}

}  // namespace

std::string report_to_json(const ReportDocument& doc) {
  json config = json::object();
  for (const auto& [key, value] : doc.config) config[key] = value;
  json problems = json::array();
  for (const ProblemReport& p : doc.problems) problems.push_back(enc_problem(p));
  const json j{{"schema", doc.schema},
               {"tool", doc.tool},
               {"command", doc.command},
               {"config", config},
               {"problems", problems}};
  return j.dump(2) + "\n";
}

ReportDocument report_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    ReportDocument doc;
    doc.schema = j.at("schema").get<std::string>();
    if (doc.schema != kReportSchema) {
      throw std::runtime_error("unsupported report schema \"" + doc.schema + "\", expected \"" +
                               kReportSchema + "\"");
    }
    doc.tool = j.at("tool").get<std::string>();
    doc.command = j.at("command").get<std::string>();
    for (const auto& [key, value] : j.at("config").items()) {
      doc.config.emplace_back(key, value.get<std::string>());
    }
    for (const json& p : j.at("problems")) doc.problems.push_back(dec_problem(p));
    return doc;
  } catch (const std::runtime_error&) {
    throw;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("report parse error: ") + e.what());
  }
}

std::string strip_timing(const std::string& report_json) {
  try {
    json j = json::parse(report_json);
    if (j.contains("problems")) {
      for (json& p : j["problems"]) p["wall_time_ms"] = 0.0;
    }
    return j.dump(2) + "\n";
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("report parse error: ") + e.what());
  }
}

}  // namespace conicert
