#include <conicert/corpus.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include <conicert/penalty.hpp>

namespace conicert {

namespace {

using nlohmann::json;

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Eigen::VectorXd number_list(const json& j, const std::string& what) {
  if (!j.is_array()) throw std::runtime_error(what + " must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

struct Expectation {
  Eigen::VectorXd x0;
  std::string status;
  Eigen::VectorXd x_star;  // size 0: not checked
  double x_tol = 1e-4;
  json expect = json::object();  // verdict keys; only the listed ones are compared
  SolverConfig config;
};

Expectation parse_expectation(const json& j, const std::string& name) {
  const std::string where = "expectations entry \"" + name + "\"";
  if (!j.is_object()) throw std::runtime_error(where + " must be an object");
  Expectation e;
  if (!j.contains("x0")) throw std::runtime_error(where + " is missing x0");
  e.x0 = number_list(j.at("x0"), where + ".x0");
  if (!j.contains("status")) throw std::runtime_error(where + " is missing status");
  e.status = j.at("status").get<std::string>();
  for (const auto& [key, value] : j.items()) {
    if (key == "x0" || key == "status" || key == "notes") continue;
    if (key == "x_star") {
      e.x_star = number_list(value, where + ".x_star");
    } else if (key == "x_tol") {
      e.x_tol = value.get<double>();
    } else if (key == "expect") {
      if (!value.is_object()) throw std::runtime_error(where + ".expect must be an object");
      for (const auto& [vk, vv] : value.items()) {
        static_cast<void>(vv);
        if (vk != "feasible" && vk != "kkt_ok" && vk != "wsoc" && vk != "nondegeneracy" &&
            vk != "strict_complementarity" && vk != "wcr" && vk != "robinson") {
          throw std::runtime_error(where + ".expect has unknown key \"" + vk + "\"");
        }
      }
      e.expect = value;
    } else if (key == "config") {
      if (!value.is_object()) throw std::runtime_error(where + ".config must be an object");
      for (const auto& [ck, cv] : value.items()) {
        if (ck == "rho0") {
          e.config.rho0 = cv.get<double>();
        } else if (ck == "rho_mult") {
          e.config.rho_mult = cv.get<double>();
        } else if (ck == "inner_eps0") {
          e.config.inner_eps0 = cv.get<double>();
        } else if (ck == "outer_tol") {
          e.config.outer_tol = cv.get<double>();
        } else if (ck == "max_outer") {
          e.config.max_outer = cv.get<int>();
        } else if (ck == "max_inner") {
          e.config.max_inner = cv.get<int>();
        } else if (ck == "quartic_center") {
          e.config.quartic_center = number_list(cv, where + ".config.quartic_center");
        } else {
          throw std::runtime_error(where + ".config has unknown key \"" + ck + "\"");
        }
      }
    } else {
      throw std::runtime_error(where + " has unknown key \"" + key + "\"");
    }
  }
  e.config.validate();
  return e;
}

std::string bool_name(bool b) { return b ? "true" : "false"; }

void compare_verdicts(const std::string& name, const json& expect, const CertificateReport& cert,
                      std::vector<std::string>& mismatches) {
  auto bool_check = [&](const char* key, bool actual) {
    if (!expect.contains(key)) return;
    const bool wanted = expect.at(key).get<bool>();
    if (wanted != actual) {
      mismatches.push_back(name + ": expected " + key + "=" + bool_name(wanted) + ", got " +
                           bool_name(actual));
    }
  };
  auto verdict_check = [&](const char* key, const std::string& actual) {
    if (!expect.contains(key)) return;
    const std::string wanted = expect.at(key).get<std::string>();
    if (wanted != actual) {
      mismatches.push_back(name + ": expected " + key + " \"" + wanted + "\", got \"" + actual +
                           "\"");
    }
  };
  bool_check("feasible", cert.feasible);
  bool_check("kkt_ok", cert.kkt_ok);
  bool_check("wsoc", cert.wsoc.holds);
  bool_check("nondegeneracy", cert.nondegeneracy.holds);
  bool_check("strict_complementarity", cert.strict_complementarity.holds);
  verdict_check("wcr", cert.wcr.verdict);
  verdict_check("robinson", cert.robinson.verdict);
}

struct Job {
  std::string name;
  std::filesystem::path path;
  Expectation expectation;
};

}  // namespace

CorpusOutcome run_corpus(const std::string& dir, int jobs, std::uint64_t seed,
                         const Tolerances& tols) {
  if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
  tols.validate();

  const std::filesystem::path root(dir);
  if (!std::filesystem::is_directory(root)) {
    throw std::runtime_error("corpus directory " + root.string() + " does not exist");
  }

  const json expectations = [&] {
    const std::filesystem::path file = root / "expectations.json";
    try {
      return json::parse(read_file(file));
    } catch (const json::exception& e) {
      throw std::runtime_error(file.string() + ": " + e.what());
    }
  }();
  if (!expectations.is_object()) {
    throw std::runtime_error("expectations.json must be a single object keyed by problem name");
  }

  std::vector<Job> work;
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".ncp") continue;
    const std::string name = entry.path().stem().string();
    if (!expectations.contains(name)) {
      throw std::runtime_error("problem " + name + " has no entry in expectations.json");
    }
    work.push_back(Job{name, entry.path(), parse_expectation(expectations.at(name), name)});
  }
  std::sort(work.begin(), work.end(), [](const Job& a, const Job& b) { return a.name < b.name; });
  for (const auto& [name, value] : expectations.items()) {
    static_cast<void>(value);
    const bool known = std::any_of(work.begin(), work.end(),
                                   [&](const Job& j) { return j.name == name; });
    if (!known) {
      throw std::runtime_error("expectations.json lists " + name + " but " + name +
                               ".ncp is not in the corpus directory");
    }
  }

  std::vector<ProblemReport> reports(work.size());
  std::vector<std::exception_ptr> errors(work.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < work.size(); i = next.fetch_add(1)) {
      try {
        const Job& job = work[i];
        ProblemReport rep;
        rep.name = job.name;
        const auto t0 = std::chrono::steady_clock::now();
        const ProblemInstance inst = parse_problem(read_file(job.path));
        const SolveResult res = solve(inst, job.expectation.x0, job.expectation.config);
        Tolerances ptols = tols;
        ptols.seed = seed ^ fnv1a64(job.name);
        rep.certificate = certify(inst, res.x, res.omega, res.mu, ptols,
                                  MultiplierSource::Solver);
        const auto t1 = std::chrono::steady_clock::now();
        rep.status = to_string(res.status);
        rep.x = res.x;
        rep.omega = res.omega;
        rep.mu = res.mu;
        rep.trace = res.trace;
        rep.wall_time_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

        const Expectation& exp = job.expectation;
        if (rep.status != exp.status) {
          rep.mismatches.push_back(job.name + ": expected status " + exp.status + ", got " +
                                   rep.status);
        }
        if (exp.x_star.size() > 0) {
          if (exp.x_star.size() != res.x.size()) {
            rep.mismatches.push_back(job.name + ": expected point has dimension " +
                                     std::to_string(exp.x_star.size()) + ", solver returned " +
                                     std::to_string(res.x.size()));
          } else {
            const double dist = (res.x - exp.x_star).lpNorm<Eigen::Infinity>();
            if (!(dist <= exp.x_tol)) {
              std::ostringstream msg;
              msg << job.name << ": x is " << dist << " from the expected point (tol "
                  << exp.x_tol << ")";
              rep.mismatches.push_back(msg.str());
            }
          }
        }
        compare_verdicts(job.name, exp.expect, rep.certificate, rep.mismatches);
        reports[i] = std::move(rep);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };

  const std::size_t thread_count =
      std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(work.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t + 1 < thread_count; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (std::size_t i = 0; i < work.size(); ++i) {
    if (errors[i]) {
      try {
        std::rethrow_exception(errors[i]);
      } catch (const std::exception& e) {
        throw std::runtime_error(work[i].name + ": " + e.what());
      }
    }
  }

  CorpusOutcome out;
  out.document.command = "corpus";
  out.document.config.emplace_back("dir", dir);
  out.document.config.emplace_back("seed", std::to_string(seed));
  for (ProblemReport& rep : reports) {
    for (const std::string& m : rep.mismatches) out.mismatches.push_back(m);
    out.document.problems.push_back(std::move(rep));
  }
  return out;
}

}  // namespace conicert
