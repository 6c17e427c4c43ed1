#pragma once

#include <string>
#include <utility>
#include <vector>

#include <conicert/certificates.hpp>
#include <conicert/penalty.hpp>

namespace conicert {

inline constexpr const char* kToolVersion = "conicert 0.1.0";
inline constexpr const char* kReportSchema = "conic-cert-report/1";

// One problem's worth of results: the solve trajectory (empty when only a
// certification ran), the final primal-dual triple, its certificate, and any
// expectation mismatches recorded by the corpus runner.
struct ProblemReport {
  std::string name;
  std::string status;  // solve status name, or "certify" for certify-only runs
  Eigen::VectorXd x;
  std::vector<BlockPoint> omega;
  Eigen::VectorXd mu;
  IterateTrace trace;
  CertificateReport certificate;
  std::vector<std::string> mismatches;
  double wall_time_ms = 0.0;
};

// The full machine-readable output of a run. Serialization is deterministic
// (keys sorted, shortest round-trip numbers); the only fields that vary
// between identical runs are the wall times, which strip_timing removes.
struct ReportDocument {
  std::string schema = kReportSchema;
  std::string tool = kToolVersion;
  std::string command;  // solve | certify | corpus
  std::vector<std::pair<std::string, std::string>> config;  // echoed settings
  std::vector<ProblemReport> problems;
};

// Pretty-printed JSON. Non-finite doubles are encoded as the strings "inf",
// "-inf", and "nan" since JSON numbers cannot carry them.
std::string report_to_json(const ReportDocument& doc);

// Inverse of report_to_json; throws std::runtime_error on malformed input or
// a schema version this build does not understand.
ReportDocument report_from_json(const std::string& text);

// Returns the document with every wall_time_ms zeroed, for comparing runs.
std::string strip_timing(const std::string& report_json);

}  // namespace conicert
