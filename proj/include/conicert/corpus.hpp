#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <conicert/certificates.hpp>
#include <conicert/report.hpp>

namespace conicert {

struct CorpusOutcome {
  ReportDocument document;
  std::vector<std::string> mismatches;  // flattened "name: what differed" lines
  bool all_met() const { return mismatches.empty(); }
};

// Runs every problem in `dir`: each *.ncp file must have an entry in the
// directory's expectations.json (and vice versa). Each problem is solved from
// its listed start point, the result is certified with the solver's
// multipliers, and status / solution point / verdicts are compared against
// the expectations. `jobs` worker threads process problems; the report is
// assembled in name order with per-problem seeds derived from `seed` and the
// name, so the document is independent of the schedule except for wall-clock
// fields. Throws std::runtime_error for unreadable files, malformed
// expectations, or a mismatched file/entry set.
CorpusOutcome run_corpus(const std::string& dir, int jobs = 1, std::uint64_t seed = 42,
                         const Tolerances& tols = {});

}  // namespace conicert
