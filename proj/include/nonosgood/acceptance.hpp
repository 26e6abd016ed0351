#pragma once

#include <iosfwd>
#include <vector>

#include "nonosgood/io.hpp"
#include "nonosgood/verify.hpp"

namespace nonosgood::accept {

/// Runs the full verification suite (criteria C1..C10). Reports carry names
/// prefixed "C<k>"; jsonl, when non-null, receives one JSON line per report.
std::vector<verify::CheckReport> run_all(const io::RunConfig& cfg, std::ostream* jsonl = nullptr);

/// One pass/fail line per criterion; returns 0 iff everything passed.
int summarize(const std::vector<verify::CheckReport>& reports, std::ostream& out);

}  // namespace nonosgood::accept
