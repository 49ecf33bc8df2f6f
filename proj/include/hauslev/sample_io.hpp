#pragma once

#include <filesystem>
#include <iosfwd>

#include "hauslev/synth.hpp"

namespace hauslev {

/// Header `# d=<d> n=<n> seed=<seed>`, then one comma-separated row per point.
void write_samples(std::ostream& out, const SampleSet& s);
void write_samples(const std::filesystem::path& path, const SampleSet& s);

/// Throws ParseError carrying the 1-based line of the first bad row.
SampleSet read_samples(std::istream& in);
SampleSet read_samples(const std::filesystem::path& path);

}  // namespace hauslev
