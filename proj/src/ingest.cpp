#include "attotip/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attotip/csv.hpp"

namespace attotip::pipeline {

namespace {

struct RawBlock {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t first_line = 0;
};

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const auto sep = [](char c) { return c == ',' || c == ';' || c == ' ' || c == '\t' || c == '\r'; };
  while (i < line.size()) {
    while (i < line.size() && sep(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !sep(line[j])) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::string where(const std::filesystem::path& origin, std::size_t line) {
  return origin.string() + ": line " + std::to_string(line) + ": ";
}

}  // namespace

double uniform_step(std::span<const double> grid, double rel_tol) {
  if (grid.size() < 2) throw IngestError("grid needs at least two points");
  const double mean = (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
  if (mean == 0.0 || !std::isfinite(mean)) throw IngestError("grid is degenerate");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double d = grid[i] - grid[i - 1];
    if (std::abs(d - mean) > rel_tol * std::abs(mean))
      throw IngestError("grid not uniform: spacing " + std::to_string(d) + " at point " + std::to_string(i) +
                        " deviates from the mean " + std::to_string(mean) + " by more than " +
                        std::to_string(rel_tol * 100.0) + "%");
  }
  return std::abs(mean);
}

IngestResult parse_retardation(std::string_view text, double vacuum_offset, const std::filesystem::path& origin) {
  if (!std::isfinite(vacuum_offset)) throw IngestError("vacuum offset must be finite");
  std::vector<RawBlock> raw;
  bool in_block = false;
  bool seen_data = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto cells = tokens(line);
    if (cells.empty()) {
      in_block = false;
      if (end == text.size()) break;
      continue;
    }
    if (cells[0].front() == '#') continue;
    double x = 0.0;
    double y = 0.0;
    try {
      if (cells.size() != 2) throw std::invalid_argument("");
      x = parse_double(cells[0]);
      y = parse_double(cells[1]);
    } catch (const std::invalid_argument&) {
      if (!seen_data) {  // header row
        seen_data = true;
        continue;
      }
      throw IngestError(where(origin, line_no) + "expected two numeric columns, got '" + std::string(line) + "'");
    }
    if (!std::isfinite(x) || !std::isfinite(y)) throw IngestError(where(origin, line_no) + "non-finite value");
    seen_data = true;
    if (!in_block) {
      raw.push_back({});
      raw.back().first_line = line_no;
      in_block = true;
    }
    raw.back().x.push_back(x);
    raw.back().y.push_back(y);
  }
  if (raw.empty()) throw IngestError(origin.string() + ": no data");

  IngestResult out;
  const RawBlock& ref = raw.front();
  out.step = uniform_step(ref.x);
  for (const RawBlock& b : raw) {
    if (b.x.size() != ref.x.size())
      throw IngestError(where(origin, b.first_line) + "block has " + std::to_string(b.x.size()) +
                        " points, the first block " + std::to_string(ref.x.size()));
    for (std::size_t i = 0; i < b.x.size(); ++i)
      if (std::abs(b.x[i] - ref.x[i]) > 0.01 * out.step)
        throw IngestError(where(origin, b.first_line + i) + "grid differs from the first block");
    const bool descending = b.x.back() < b.x.front();
    spectra::RetardationCurve c;
    for (std::size_t k = 0; k < b.x.size(); ++k) {
      const std::size_t i = descending ? b.x.size() - 1 - k : k;
      c.energy.push_back(b.x[i] - vacuum_offset);
      c.counts.push_back(b.y[i]);
    }
    out.blocks.push_back(std::move(c));
  }
  out.average.energy = out.blocks.front().energy;
  // Mean as first block plus mean deviation: identical blocks average exactly.
  const auto& first = out.blocks.front().counts;
  std::vector<double> deviation(first.size(), 0.0);
  for (const auto& c : out.blocks)
    for (std::size_t i = 0; i < c.counts.size(); ++i) deviation[i] += c.counts[i] - first[i];
  out.average.counts = first;
  for (std::size_t i = 0; i < first.size(); ++i)
    out.average.counts[i] += deviation[i] / static_cast<double>(out.blocks.size());
  return out;
}

IngestResult ingest_retardation(const std::filesystem::path& path, double vacuum_offset) {
  return parse_retardation(read_file(path), vacuum_offset, path);
}

}  // namespace attotip::pipeline
